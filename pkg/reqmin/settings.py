"""
Django settings for the Reqmin engine.

Reqmin has no web surface and no database models: Django hosts the
configuration, the logging setup and the management-command CLI.
"""

from pathlib import Path

from decouple import Csv, config

# Build paths inside the project like this: BASE_DIR / 'subdir'.
BASE_DIR = Path(__file__).resolve().parent.parent

SECRET_KEY = config('SECRET_KEY', default='reqmin-insecure-local-key')

DEBUG = config('DEBUG', default=False, cast=bool)

ALLOWED_HOSTS = []

# Application definition
INSTALLED_APPS = [
    # Reqmin apps
    'apps.corpus',
    'apps.preprocess',
    'apps.embed',
    'apps.similarity',
    'apps.minimizer',
    'apps.baselines',
    'apps.oracle',
    'apps.harness',
]

# No persistence: corpora, matrices and reports are plain files.
DATABASES = {}

# Internationalization
LANGUAGE_CODE = 'en-us'
TIME_ZONE = 'UTC'
USE_I18N = False
USE_TZ = True

# Default primary key field type
DEFAULT_AUTO_FIELD = 'django.db.models.BigAutoField'

# Output locations
LOGS_DIR = BASE_DIR / config('LOGS_DIR', default='logs')
LOGS_DIR.mkdir(exist_ok=True)
REPORTS_DIR = BASE_DIR / config('REPORTS_DIR', default='reports')

# Logging
LOGGING = {
    'version': 1,
    'disable_existing_loggers': False,
    'formatters': {
        'verbose': {
            'format': '[{levelname}] {asctime} {name} - {message}',
            'style': '{',
            'datefmt': '%Y-%m-%d %H:%M:%S',
        },
        'simple': {
            'format': '[{levelname}] {message}',
            'style': '{',
        },
    },
    'handlers': {
        'console': {
            'level': config('LOG_LEVEL', default='INFO'),
            'class': 'logging.StreamHandler',
            'formatter': 'simple',
        },
        'file': {
            'level': 'INFO',
            'class': 'logging.handlers.RotatingFileHandler',
            'filename': LOGS_DIR / 'reqmin.log',
            'maxBytes': 1024 * 1024 * 15,  # 15MB
            'backupCount': 10,
            'formatter': 'verbose',
        },
        'file_performance': {
            'level': 'INFO',
            'class': 'logging.handlers.RotatingFileHandler',
            'filename': LOGS_DIR / 'performance.log',
            'maxBytes': 1024 * 1024 * 10,  # 10MB
            'backupCount': 5,
            'formatter': 'verbose',
        },
    },
    'root': {
        'handlers': ['console', 'file'],
        'level': 'WARNING',
    },
    'loggers': {
        'apps': {
            'handlers': ['console', 'file'],
            'level': config('LOG_LEVEL', default='INFO'),
            'propagate': False,
        },
        'performance': {
            'handlers': ['file_performance'],
            'level': 'INFO',
            'propagate': False,
        },
    },
}

# ================================
# Engine defaults
# ================================
MINIMIZER_DEFAULTS = {
    'population_size': config('GA_POPULATION_SIZE', default=100, cast=int),
    'crossover_rate': config('GA_CROSSOVER_RATE', default=0.90, cast=float),
    'mutation_rate': config('GA_MUTATION_RATE', default=0.01, cast=float),
    'convergence_epsilon': config('GA_CONVERGENCE_EPSILON', default=0.0025, cast=float),
    'convergence_window': config('GA_CONVERGENCE_WINDOW', default=10, cast=int),
    'max_generations': config('GA_MAX_GENERATIONS', default=1000, cast=int),
    'repair_enabled': config('GA_REPAIR_ENABLED', default=False, cast=bool),
}

CBOW_DEFAULTS = {
    'window': config('CBOW_WINDOW', default=10, cast=int),
    'dim': config('CBOW_DIM', default=300, cast=int),
    'epochs': config('CBOW_EPOCHS', default=50, cast=int),
    'negative_samples': config('CBOW_NEGATIVE', default=5, cast=int),
    'learning_rate': config('CBOW_LEARNING_RATE', default=0.025, cast=float),
}

# Minimum share of corpus tokens an imported word-vector file must cover
WORD_VECTOR_MIN_COVERAGE = config('WORD_VECTOR_MIN_COVERAGE', default=0.95, cast=float)

# Branch-and-bound time cap per oracle instance (seconds)
ORACLE_TIME_CAP = config('ORACLE_TIME_CAP', default=60.0, cast=float)

SYNTH_DEFAULTS = {
    'n_req': config('SYNTH_N_REQ', default=54, cast=int),
    'n_cases': config('SYNTH_N_CASES', default=736, cast=int),
    'n_faults': config('SYNTH_N_FAULTS', default=220, cast=int),
    'target_rl': config('SYNTH_TARGET_RL', default=11.86, cast=float),
    'clone_rate': config('SYNTH_CLONE_RATE', default=0.5, cast=float),
}

HARNESS_DEFAULT_BUDGETS = config(
    'HARNESS_BUDGETS',
    default='0.1,0.2,0.3,0.4,0.5,0.6,0.7,0.8,0.9',
    cast=Csv(float),
)
HARNESS_DEFAULT_REPEATS = config('HARNESS_REPEATS', default=10, cast=int)
