"""Django application configuration for the mdp app."""
from django.apps import AppConfig


class MdpConfig(AppConfig):
    """Finite multi-objective MDPs and trajectory sampling."""

    default_auto_field = 'django.db.models.BigAutoField'
    name = 'apps.mdp'
