"""
Django settings for the transhp workbench
"""
import os
from pathlib import Path

from dotenv import load_dotenv

BASE_DIR = Path(__file__).resolve().parent.parent

load_dotenv(BASE_DIR / '.env')

SECRET_KEY = os.environ.get('SECRET_KEY', 'transhp-local-workbench')
DEBUG = os.environ.get('DEBUG', '0') == '1'
ALLOWED_HOSTS = []

INSTALLED_APPS = [
    'numerics',
    'hierarchy',
    'imagedata',
    'vision',
    'objective',
    'analysis',
    'training',
    'runner',
]

# Commands and tests never touch a database.
DATABASES = {}

LANGUAGE_CODE = 'en-us'
TIME_ZONE = 'UTC'
USE_I18N = False
USE_TZ = True

DEFAULT_AUTO_FIELD = 'django.db.models.BigAutoField'

# Workbench configuration
TRANSHP_DETERMINISTIC = os.environ.get('TRANSHP_DETERMINISTIC', '0') == '1'
TRANSHP_EVAL_WORKERS = int(os.environ.get('TRANSHP_EVAL_WORKERS', '4'))
TRANSHP_OUTPUT_DIR = Path(os.environ.get('TRANSHP_OUTPUT_DIR', BASE_DIR / 'runs'))
TRANSHP_DEFAULT_DTYPE = os.environ.get('TRANSHP_DEFAULT_DTYPE', 'float32')
TRANSHP_LOG_LEVEL = os.environ.get('TRANSHP_LOG_LEVEL', 'INFO')

LOGGING = {
    'version': 1,
    'disable_existing_loggers': False,
    'formatters': {
        'verbose': {
            'format': '{asctime} {levelname} {name}: {message}',
            'style': '{',
        },
    },
    'handlers': {
        'console': {
            'class': 'logging.StreamHandler',
            'formatter': 'verbose',
        },
    },
    'loggers': {
        app: {
            'handlers': ['console'],
            'level': TRANSHP_LOG_LEVEL,
            'propagate': False,
        }
        for app in INSTALLED_APPS
    },
}
