"""Django application configuration for the scalarization app."""
from django.apps import AppConfig


class ScalarizationConfig(AppConfig):
    """Concave utilities over return vectors."""

    default_auto_field = 'django.db.models.BigAutoField'
    name = 'apps.scalarization'
