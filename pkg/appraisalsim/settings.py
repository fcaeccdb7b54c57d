from pathlib import Path
import os

# Build paths inside the project like this: BASE_DIR / 'subdir'.
BASE_DIR = Path(__file__).resolve().parent.parent

# Minimal .env loader so run defaults can live in a file.
ENV_PATH = BASE_DIR / ".env"
if ENV_PATH.exists():
    for line in ENV_PATH.read_text().splitlines():
        if not line or line.strip().startswith("#") or "=" not in line:
            continue
        key, _, value = line.partition("=")
        os.environ.setdefault(key.strip(), value.strip())


# Only management commands and the test runner use this project; there is no
# web surface, so the secret key never signs anything.
SECRET_KEY = os.getenv("DJANGO_SECRET_KEY", "appraisalsim-local-only")

DEBUG = False

ALLOWED_HOSTS = []


# Application definition

INSTALLED_APPS = [
    'appraisal',
]

MIDDLEWARE = []

# No models; the dummy backend keeps the test runner from creating databases.
DATABASES = {}


# Internationalization

LANGUAGE_CODE = 'en-us'

TIME_ZONE = 'UTC'

USE_I18N = False

USE_TZ = True


# Logging

APPRAISAL_LOG_LEVEL = os.getenv("APPRAISAL_LOG_LEVEL", "WARNING").upper()

LOGGING = {
    "version": 1,
    "disable_existing_loggers": False,
    "formatters": {
        "plain": {"format": "%(levelname)s %(name)s %(message)s"},
    },
    "handlers": {
        "console": {
            "class": "logging.StreamHandler",
            "formatter": "plain",
        },
    },
    "loggers": {
        "appraisal": {
            "handlers": ["console"],
            "level": APPRAISAL_LOG_LEVEL,
            "propagate": False,
        },
    },
}


# Integrator defaults
APPRAISAL_STEP = float(os.getenv("APPRAISAL_STEP", "0.01"))
APPRAISAL_HORIZON = float(os.getenv("APPRAISAL_HORIZON", "200"))
APPRAISAL_RECORD_EVERY = int(os.getenv("APPRAISAL_RECORD_EVERY", "1"))
APPRAISAL_CONVERGENCE_TOL = float(os.getenv("APPRAISAL_CONVERGENCE_TOL", "1e-10"))
APPRAISAL_DRIFT_TOL = float(os.getenv("APPRAISAL_DRIFT_TOL", "1e-6"))
APPRAISAL_CLAMP_TOL = float(os.getenv("APPRAISAL_CLAMP_TOL", "1e-10"))

# Verification suites
APPRAISAL_VERIFY_COUNT = int(os.getenv("APPRAISAL_VERIFY_COUNT", "20"))
APPRAISAL_VERIFY_SEED = int(os.getenv("APPRAISAL_VERIFY_SEED", "0"))
APPRAISAL_VERIFY_HORIZON = float(os.getenv("APPRAISAL_VERIFY_HORIZON", "500"))
APPRAISAL_VERIFY_WORKERS = int(os.getenv("APPRAISAL_VERIFY_WORKERS", "1"))
