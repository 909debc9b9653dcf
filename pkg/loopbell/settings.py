"""
Django settings for the loopbell project.

Only the pieces a command-line simulator needs are configured: installed
apps, logging, Celery and the simulation defaults. There is no database
and no HTTP surface.
"""
import os
from pathlib import Path

# Build paths inside the project like this: BASE_DIR / 'subdir'.
BASE_DIR = Path(__file__).resolve().parent.parent

# SECURITY WARNING: keep the secret key used in production secret!
SECRET_KEY = os.environ.get("DJANGO_SECRET_KEY", "dev-secret")

DEBUG = os.environ.get("DJANGO_DEBUG", "true").lower() == "true"

ALLOWED_HOSTS = []


# Application definition

INSTALLED_APPS = [
    'optics',
    'quantum',
    'pilotwave',
    'bell',
]

SYSTEM_NAME = 'Loopbell'

# Nothing is persisted.
DATABASES = {}

LANGUAGE_CODE = 'en-us'

TIME_ZONE = 'UTC'

USE_I18N = False

USE_TZ = True


# Logging
# Standard output carries the emitted document only, so every log line goes to stderr.

LOG_LEVEL = os.environ.get('LOOPBELL_LOG_LEVEL', 'WARNING').upper()

LOGGING = {
    'version': 1,
    'disable_existing_loggers': False,
    'formatters': {
        'simple': {
            'format': '%(asctime)s %(levelname)s %(name)s: %(message)s',
        },
    },
    'handlers': {
        'stderr': {
            'class': 'logging.StreamHandler',
            'stream': 'ext://sys.stderr',
            'formatter': 'simple',
        },
    },
    'root': {
        'handlers': ['stderr'],
        'level': LOG_LEVEL,
    },
}


# Simulation defaults

DEFAULT_SEED_FROM_ENV = 'LOOPBELL_SEED' in os.environ
DEFAULT_SEED = int(os.environ.get('LOOPBELL_SEED', '20240601'))

MC_WORKERS = int(os.environ.get('LOOPBELL_MC_WORKERS', '1'))

AUDIT_MC_TRIALS = int(os.environ.get('LOOPBELL_AUDIT_MC_TRIALS', '200000'))
CHECK_MC_TRIALS = int(os.environ.get('LOOPBELL_CHECK_MC_TRIALS', '1000000'))

# Committed seeds for the Monte Carlo consistency suite.
REFERENCE_SEEDS = [
    int(s) for s in os.environ.get(
        'LOOPBELL_REFERENCE_SEEDS',
        '11,2718281828,3141592653,8675309,1234567890123'
    ).split(',')
]


# RabbitMQ
RABBITMQ_USER = os.environ.get('RABBITMQ_DEFAULT_USER', 'guest')
RABBITMQ_PASSWORD = os.environ.get('RABBITMQ_DEFAULT_PASS', 'guest')
RABBITMQ_HOST = os.environ.get('RABBITMQ_HOST', 'rabbitmq')
RABBITMQ_PORT = os.environ.get('RABBITMQ_PORT', '5672')
RABBITMQ_VHOST = os.environ.get('RABBITMQ_VHOST', '/')

# Celery
CELERY_BROKER_URL = os.environ.get(
    'CELERY_BROKER_URL',
    f'amqp://{RABBITMQ_USER}:{RABBITMQ_PASSWORD}@{RABBITMQ_HOST}:{RABBITMQ_PORT}/{RABBITMQ_VHOST}'
)
CELERY_RESULT_BACKEND = os.environ.get('CELERY_RESULT_BACKEND', 'rpc://')
CELERY_ACCEPT_CONTENT = ['json']
CELERY_TASK_SERIALIZER = 'json'
CELERY_RESULT_SERIALIZER = 'json'
CELERY_TIMEZONE = 'UTC'
# Chunks run in-process unless a worker is deployed.
CELERY_TASK_ALWAYS_EAGER = os.environ.get('CELERY_TASK_ALWAYS_EAGER', 'true').lower() == 'true'
CELERY_TASK_EAGER_PROPAGATES = True
