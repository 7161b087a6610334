"""Django application configuration for the core app."""
from django.apps import AppConfig


class CoreConfig(AppConfig):
    """Shared plumbing: errors, RNG lanes, parallel map, file output."""

    default_auto_field = 'django.db.models.BigAutoField'
    name = 'apps.core'
