"""
Minimizer App Configuration
"""
from django.apps import AppConfig


class MinimizerConfig(AppConfig):
    default_auto_field = 'django.db.models.BigAutoField'
    name = 'apps.minimizer'
    verbose_name = 'Genetic Test Suite Minimization'
