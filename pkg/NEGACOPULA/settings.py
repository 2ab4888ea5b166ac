import os
from pathlib import Path
from dotenv import load_dotenv

# Load .env file
load_dotenv()

BASE_DIR = Path(__file__).resolve().parent.parent

SECRET_KEY = os.getenv('SECRET_KEY', 'negacopula-batch-only')
DEBUG = os.getenv('DEBUG', 'False').lower() == 'true'

ALLOWED_HOSTS = []

# Application definition

INSTALLED_APPS = [
    'django.contrib.contenttypes',
    'rest_framework',
    'core',
    'copula',
    'marginals',
    'bivariate',
    'audit',
    'estimation',
]

# Database
# The batch commands keep no state; sqlite only satisfies Django's test runner.

DATABASES = {
    'default': {
        'ENGINE': 'django.db.backends.sqlite3',
        'NAME': BASE_DIR / 'db.sqlite3',
    }
}

LANGUAGE_CODE = 'en-us'

TIME_ZONE = 'UTC'

USE_I18N = False

USE_TZ = True

DEFAULT_AUTO_FIELD = 'django.db.models.BigAutoField'

# ---------------------
# Logging
# ---------------------
LOG_LEVEL = os.getenv('LOG_LEVEL', 'INFO').upper()

LOGGING = {
    'version': 1,
    'disable_existing_loggers': False,
    'formatters': {
        'plain': {
            'format': '%(asctime)s %(levelname)s %(name)s: %(message)s',
        },
    },
    'handlers': {
        'console': {
            'class': 'logging.StreamHandler',
            'stream': 'ext://sys.stderr',
            'formatter': 'plain',
        },
    },
    'loggers': {
        app: {'handlers': ['console'], 'level': LOG_LEVEL, 'propagate': False}
        for app in ('core', 'copula', 'marginals', 'bivariate', 'audit', 'estimation')
    },
}

# ---------------------
# Copula library knobs
# ---------------------
NEGACOPULA_THETA_RANGE = (1e-8, 1e8)
NEGACOPULA_BOUNDARY_TOL = 1e-14

_seed = os.getenv('NEGACOPULA_SEED')
NEGACOPULA_DEFAULT_SEED = int(_seed) if _seed else 0

NEGACOPULA_DEFAULT_BOOTSTRAP = 10000
NEGACOPULA_MAX_BOOTSTRAP_DROP = 0.01
NEGACOPULA_WORKERS = int(os.getenv('NEGACOPULA_WORKERS', '1'))

NEGACOPULA_AUDIT_THETAS = (0.1, 0.5, 1.0, 2.0, 5.0, 10.0)
NEGACOPULA_DEFAULT_FAMILIES = ('lognormal', 'weibull', 'gamma')
