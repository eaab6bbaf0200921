import logging
import os

import confy
from confy import env

logger = logging.getLogger(__name__)


BASE_DIR = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))
if os.path.exists(os.path.join(BASE_DIR, ".env")):
    confy.read_environment_file(os.path.join(BASE_DIR, ".env"))
os.environ.setdefault("BASE_DIR", BASE_DIR)

SECRET_KEY = env("SECRET_KEY", "treecorr-local-development-key")
DEBUG = env("DEBUG", False)
ALLOWED_HOSTS = []

SYSTEM_NAME = env("SYSTEM_NAME", "Tree Correlation Toolkit")

INSTALLED_APPS = [
    "django.contrib.contenttypes",
    "django.contrib.auth",
    "rest_framework",
    "treecorr",
    "treecorr.components.main",
    "treecorr.components.hypercube",
    "treecorr.components.trees",
    "treecorr.components.covariances",
    "treecorr.components.vectors",
    "treecorr.components.orderings",
    "treecorr.components.oracle",
]

# The toolkit keeps no persistent state
DATABASES = {}

USE_TZ = True
TIME_ZONE = "Australia/Perth"
DEFAULT_AUTO_FIELD = "django.db.models.AutoField"

REST_FRAMEWORK = {
    "DEFAULT_RENDERER_CLASSES": ("rest_framework.renderers.JSONRenderer",),
    "UNAUTHENTICATED_USER": None,
}

CACHES = {
    "default": {
        "BACKEND": "django.core.cache.backends.locmem.LocMemCache",
        "LOCATION": "treecorr",
        "OPTIONS": {"MAX_ENTRIES": 20000},
    },
}

CACHE_TIMEOUT_MOEBIUS = None  # never expires, columns are pure functions of their key
CACHE_KEY_MOEBIUS = "moebius-{}-{}-{}"


""" ==================== NUMERICAL BUDGETS AND TOLERANCES ======================== """

TREECORR_MAX_DIM = env("TREECORR_MAX_DIM", 64)

TREECORR_BUDGET = env("TREECORR_BUDGET", None)
TREECORR_ENUMERATION_BUDGET = TREECORR_BUDGET or env(
    "TREECORR_ENUMERATION_BUDGET", 10**8
)
TREECORR_LP_BUDGET = TREECORR_BUDGET or env("TREECORR_LP_BUDGET", 5 * 10**4)
TREECORR_EXACT_LP_BUDGET = env("TREECORR_EXACT_LP_BUDGET", 2000)
# dense simplex tableau cells, checked before anything is allocated
TREECORR_LP_CELL_BUDGET = env("TREECORR_LP_CELL_BUDGET", 25 * 10**6)
TREECORR_EXACT_LP_CELL_BUDGET = env("TREECORR_EXACT_LP_CELL_BUDGET", 2 * 10**6)

TREECORR_TAIL_MASS = env("TREECORR_TAIL_MASS", 1e-10)
TREECORR_MAX_MASS_DEFECT = env("TREECORR_MAX_MASS_DEFECT", 1e-5)
TREECORR_LP_TOLERANCE = env("TREECORR_LP_TOLERANCE", 1e-9)
TREECORR_LP_MAX_PIVOTS = env("TREECORR_LP_MAX_PIVOTS", 200000)
TREECORR_DEGENERATE_PIVOTS = env("TREECORR_DEGENERATE_PIVOTS", 50)
TREECORR_FLAG_STANDARD_ERRORS = env("TREECORR_FLAG_STANDARD_ERRORS", 5)
TREECORR_DEFAULT_P = env("TREECORR_DEFAULT_P", "1/2")
TREECORR_SAMPLE_CHUNK = env("TREECORR_SAMPLE_CHUNK", 2**16)
TREECORR_FIXTURES_DIR = env(
    "TREECORR_FIXTURES_DIR", os.path.join(BASE_DIR, "treecorr", "fixtures")
)


""" ==================== LOGGING ======================== """

TREECORR_LOG_DIR = env("TREECORR_LOG_DIR", os.path.join(BASE_DIR, "logs"))
TREECORR_CONSOLE_LOG_LEVEL = env("TREECORR_CONSOLE_LOG_LEVEL", "WARNING")
os.makedirs(TREECORR_LOG_DIR, exist_ok=True)

LOGGING = {
    "version": 1,
    "disable_existing_loggers": False,
    "formatters": {
        "verbose": {
            "format": "%(levelname)s %(asctime)s %(name)s [Line:%(lineno)s][%(funcName)s] %(message)s"
        },
    },
    "handlers": {
        "console": {
            "class": "logging.StreamHandler",
            "level": TREECORR_CONSOLE_LOG_LEVEL,
            "formatter": "verbose",
        },
        "treecorr_rotating_file": {
            "level": "DEBUG" if DEBUG else "INFO",
            "class": "logging.handlers.RotatingFileHandler",
            "filename": os.path.join(TREECORR_LOG_DIR, "treecorr.log"),
            "formatter": "verbose",
            "maxBytes": 5242880,
        },
    },
    "loggers": {
        "treecorr": {
            "handlers": ["console", "treecorr_rotating_file"],
            "level": "DEBUG" if DEBUG else "INFO",
            "propagate": False,
        },
    },
}
