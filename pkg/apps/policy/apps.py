"""Django application configuration for the policy app."""
from django.apps import AppConfig


class PolicyConfig(AppConfig):
    """Softmax-tabular policy parameterization."""

    default_auto_field = 'django.db.models.BigAutoField'
    name = 'apps.policy'
