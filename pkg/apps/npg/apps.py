"""Django application configuration for the npg app."""
from django.apps import AppConfig


class NpgConfig(AppConfig):
    """Inner direction solver and outer NPG loops."""

    default_auto_field = 'django.db.models.BigAutoField'
    name = 'apps.npg'
