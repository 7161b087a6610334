"""Django settings module initialization.

This module determines which settings configuration to load based on the
MORL_NPG_ENV environment variable.
"""

import os

# Default to development settings
settings_env = os.getenv('MORL_NPG_ENV', 'development')

if settings_env == 'production':
    from .production import *
else:
    from .development import *
