"""Django application configuration for the oracle app."""
from django.apps import AppConfig


class OracleConfig(AppConfig):
    """Exact linear-algebra and enumeration oracles."""

    default_auto_field = 'django.db.models.BigAutoField'
    name = 'apps.oracle'
