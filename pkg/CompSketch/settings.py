from pathlib import Path

from decouple import config

# Build paths inside the project like this: BASE_DIR / 'subdir'.
BASE_DIR = Path(__file__).resolve().parent.parent


# SECURITY WARNING: keep the secret key used in production secret!
SECRET_KEY = config(
    'DJANGO_SECRET_KEY',
    default='django-insecure-compsketch-local-only-7k2v9q1x',
)

DEBUG = config('DJANGO_DEBUG', default=False, cast=bool)

ALLOWED_HOSTS = config(
    'DJANGO_ALLOWED_HOSTS',
    default='localhost,127.0.0.1',
    cast=lambda value: [host.strip() for host in value.split(',') if host.strip()],
)


# Application definition

INSTALLED_APPS = [
    'django.contrib.admin',
    'django.contrib.auth',
    'django.contrib.contenttypes',
    'django.contrib.sessions',
    'django.contrib.messages',
    'django.contrib.staticfiles',
    'sketch_testing',
]

MIDDLEWARE = [
    'django.middleware.security.SecurityMiddleware',
    'django.contrib.sessions.middleware.SessionMiddleware',
    'django.middleware.common.CommonMiddleware',
    'django.middleware.csrf.CsrfViewMiddleware',
    'django.contrib.auth.middleware.AuthenticationMiddleware',
    'django.contrib.messages.middleware.MessageMiddleware',
    'django.middleware.clickjacking.XFrameOptionsMiddleware',
]

ROOT_URLCONF = 'CompSketch.urls'

TEMPLATES = [
    {
        'BACKEND': 'django.template.backends.django.DjangoTemplates',
        'DIRS': [],
        'APP_DIRS': True,
        'OPTIONS': {
            'context_processors': [
                'django.template.context_processors.request',
                'django.contrib.auth.context_processors.auth',
                'django.contrib.messages.context_processors.messages',
            ],
        },
    },
]


# Database
# Power records from `compsketch ... --save` land here.

DATABASES = {
    'default': {
        'ENGINE': 'django.db.backends.sqlite3',
        'NAME': config('COMPSKETCH_DB', default=str(BASE_DIR / 'db.sqlite3')),
    }
}


LANGUAGE_CODE = 'en-us'

TIME_ZONE = 'UTC'

USE_I18N = True

USE_TZ = True

STATIC_URL = '/static/'

DEFAULT_AUTO_FIELD = 'django.db.models.BigAutoField'


# Complementary sketching defaults
# Read through sketch_testing.conf.get_setting so the numerical modules also
# work when Django settings are not configured.

COMPSKETCH = {
    'THREADS': config('COMPSKETCH_THREADS', default=1, cast=int),
    'DEFAULT_MODE': config('COMPSKETCH_MODE', default='simulation'),
    'DEFAULT_EPSILON': config('COMPSKETCH_EPSILON', default=0.5, cast=float),
    'DEFAULT_REPS': config('COMPSKETCH_REPS', default=100, cast=int),
    'LRT_LEVEL': 0.05,
    'FAILURE_BUDGET': 0.01,
    'RANK_CUTOFF': 1e-10,
    'MAX_REDRAWS': 3,
    'VARIANCE_FLOOR': 1e-8,
    'SIGMA_ESTIMATOR': config('COMPSKETCH_SIGMA_ESTIMATOR', default='sketch'),
}


LOGGING = {
    'version': 1,
    'disable_existing_loggers': False,
    'formatters': {
        'verbose': {
            'format': '{asctime} {levelname} {name} {message}',
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
        'sketch_testing': {
            'handlers': ['console'],
            'level': config('COMPSKETCH_LOG_LEVEL', default='WARNING'),
            'propagate': False,
        },
    },
}
