"""Django application configuration for the estimators app."""
from django.apps import AppConfig


class EstimatorsConfig(AppConfig):
    """Stochastic return, partial, gradient and Fisher estimators."""

    default_auto_field = 'django.db.models.BigAutoField'
    name = 'apps.estimators'
