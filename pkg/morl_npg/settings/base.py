"""Base Django settings for the morl_npg project.

This module contains the configuration shared across all environments
(development, production, testing): installed apps, the REST framework
parser/renderer stack used for config and report files, and the numerical
defaults read by the services.
"""

import os
import sys
from pathlib import Path
from dotenv import load_dotenv

load_dotenv()

# Build paths inside the project like this: BASE_DIR / 'subdir'.
BASE_DIR = Path(__file__).resolve().parent.parent.parent

# Not used for signing anything; Django still expects a value.
SECRET_KEY = os.getenv('SECRET_KEY', 'morl-npg-local')

# Application definition
DJANGO_APPS = [
    'django.contrib.contenttypes',
    'django.contrib.auth',
]

THIRD_PARTY_APPS = [
    'rest_framework',
]

LOCAL_APPS = [
    'apps.core',
    'apps.mdp',
    'apps.policy',
    'apps.scalarization',
    'apps.estimators',
    'apps.npg',
    'apps.oracle',
    'apps.harness',
]

INSTALLED_APPS = DJANGO_APPS + THIRD_PARTY_APPS + LOCAL_APPS

# Runs are written to report files; there is no database.
DATABASES = {}

# Internationalization
LANGUAGE_CODE = 'en-us'
TIME_ZONE = 'UTC'
USE_I18N = False
USE_TZ = True

DEFAULT_AUTO_FIELD = 'django.db.models.BigAutoField'

# Django REST Framework
REST_FRAMEWORK = {
    'DEFAULT_RENDERER_CLASSES': [
        'rest_framework.renderers.JSONRenderer',
    ],
    'DEFAULT_PARSER_CLASSES': [
        'rest_framework.parsers.JSONParser',
    ],
    'UNAUTHENTICATED_USER': None,
    'STRICT_JSON': True,
    'COERCE_DECIMAL_TO_STRING': False,
}

# Numerical defaults
MORL_NPG = {
    'ENUMERATION_BUDGET': int(
        os.getenv('MORL_NPG_ENUMERATION_BUDGET', 10 ** 6)
    ),
    'FISHER_RANK_CUTOFF': 1e-10,
    'SOLVE_RESIDUAL_TOL': 1e-10,
    'DEFAULT_THREADS': int(os.getenv('MORL_NPG_THREADS', 1)),
    # AlphaFair floor is ALPHA_FAIR_FLOOR_SCALE / (1 - gamma)
    'ALPHA_FAIR_FLOOR_SCALE': 0.05,
    'R0_FALLBACK': 1.0,
    'K_CONSTANT': 1.0,
    'GRID_RESOLUTION': 1001,
    'MIN_MC_REPLICATIONS': 1000,
    'REPORT_DIR': Path(
        os.getenv('MORL_NPG_REPORT_DIR', BASE_DIR / 'reports')
    ),
}


def _is_test_mode():
    """Check if Django is running in test mode.

    Returns:
        bool: True if running tests, False otherwise.
    """
    test_commands = ['test', 'test_coverage']
    return any(arg in sys.argv for arg in test_commands)


TEST_MODE = _is_test_mode()
