from os import getenv
from pathlib import Path

from dotenv import load_dotenv

load_dotenv()

# Build paths inside the project like this: BASE_DIR / 'subdir'.
BASE_DIR = Path(__file__).resolve().parent.parent.parent

# SECURITY WARNING: keep the secret key used in production secret!
SECRET_KEY = getenv("SECRET_KEY", "your-default-secret-key")


# Application definition

INSTALLED_APPS = [
    # Third-party apps
    "rest_framework",
    # Local apps
    "apps.imaging",
    "apps.optics",
    "apps.psf",
    "apps.losses",
    "apps.metrics",
    "apps.solver",
    "apps.cli",
]

# The engine keeps no state between commands
DATABASES = {}


# Internationalization
LANGUAGE_CODE = "en-us"

TIME_ZONE = "UTC"

USE_I18N = True

USE_TZ = True


# Logging
LOGGING = {
    "version": 1,
    "disable_existing_loggers": False,
    "formatters": {
        "verbose": {
            "format": "{asctime} {levelname} {name}: {message}",
            "style": "{",
        },
    },
    "handlers": {
        "console": {
            "class": "logging.StreamHandler",
            "formatter": "verbose",
        },
    },
    "loggers": {
        "apps": {
            "handlers": ["console"],
            "level": getenv("DEFOCUS_LOG_LEVEL", "INFO"),
            "propagate": False,
        },
    },
}


# Engine settings
DEFOCUS = {
    "THREADS": int(getenv("DEFOCUS_THREADS", "0")) or None,
    "KERNEL_SIZE": 7,
    "PIXEL_SIZE_MM": 0.0056,
    "COC_LIMIT_MM": 0.061,
    "LOSS_WEIGHTS": {
        "ALPHA": 0.85,
        "LAMBDA_REC": 1.0,
        "LAMBDA_SMOOTH": 1e-3,
        "LAMBDA_SHARP": 1e-1,
    },
    "SOLVER": {
        "ITERATIONS": 500,
        "STEP_SIZE": 0.05,
        "OPTIMIZER": "adam",
        "INIT": "grid",
        "GRID_LEVELS": 20,
        "MIN_DEPTH_FRACTION": 0.05,
        "SEED": 0,
        "REFINE": True,
    },
    "ENABLE_NEGATIVE_CONTROLS": False,
}
