"""Django application configuration for the harness app."""
from django.apps import AppConfig


class HarnessConfig(AppConfig):
    """Experiment orchestration, campaigns and CLI."""

    default_auto_field = 'django.db.models.BigAutoField'
    name = 'apps.harness'
