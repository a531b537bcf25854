"""
Django settings for the ldplab project.

The project hosts a single application, ``feller_ldp``, whose management
commands form the command-line interface. No database, URL routing or
template layer is needed.
"""

import os
from pathlib import Path
from dotenv import load_dotenv

# Load environment variables from .env file
load_dotenv()

# Build paths inside the project like this: BASE_DIR / 'subdir'.
BASE_DIR = Path(__file__).resolve().parent.parent

# Only used by Django internals; nothing here is signed or served.
SECRET_KEY = os.getenv('DJANGO_SECRET_KEY', 'ldplab-local-only')

DEBUG = False

ALLOWED_HOSTS = []


# Application definition

INSTALLED_APPS = [
    'feller_ldp',
]

DATABASES = {}

USE_TZ = True

TIME_ZONE = 'UTC'

DEFAULT_AUTO_FIELD = 'django.db.models.BigAutoField'


# Numerical defaults for the command-line interface. Library functions take
# every one of these as an explicit argument.
FELLER_LDP = {
    'DEFAULT_PARAMS': BASE_DIR / 'params' / 'p1.json',
    'MC_PATHS': 100_000,
    'MC_STEPS': 200,
    'MC_STREAMS': 4,
    'MC_WORKERS': int(os.getenv('FELLER_LDP_MC_WORKERS', '1')),
    'VARIATIONAL_GRID': 200,
}


# Logging configuration
LOG_LEVEL = os.getenv('FELLER_LDP_LOG_LEVEL', 'INFO')
LOG_DIR = Path(os.getenv('FELLER_LDP_LOG_DIR', BASE_DIR / 'logs'))
LOG_DIR.mkdir(parents=True, exist_ok=True)

LOGGING = {
    'version': 1,
    'disable_existing_loggers': False,
    'formatters': {
        'verbose': {
            'format': '{levelname} {asctime} {module} {process:d} {thread:d} {message}',
            'style': '{',
        },
        'simple': {
            'format': '{levelname} {message}',
            'style': '{',
        },
    },
    'handlers': {
        'feller_ldp_file': {
            'level': 'DEBUG',
            'class': 'logging.FileHandler',
            'filename': LOG_DIR / 'feller_ldp.log',
            'formatter': 'verbose',
        },
        'console': {
            'level': LOG_LEVEL,
            'class': 'logging.StreamHandler',
            'formatter': 'simple',
        },
    },
    'loggers': {
        'feller_ldp': {
            'handlers': ['feller_ldp_file', 'console'],
            'level': 'DEBUG',
            'propagate': False,
        },
        'django': {
            'handlers': ['console'],
            'level': 'INFO',
        },
    },
}
