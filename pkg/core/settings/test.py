from .development import *

# Keep test output quiet
LOGGING = {
    **LOGGING,
    "loggers": {
        "apps": {
            "handlers": ["console"],
            "level": "WARNING",
            "propagate": False,
        },
    },
}

# Single-threaded by default so failures are easy to reproduce; negative
# controls (gradcheck --corrupt) exist only for the test suite
DEFOCUS = {
    **DEFOCUS,
    "THREADS": int(getenv("DEFOCUS_THREADS", "1")),
    "ENABLE_NEGATIVE_CONTROLS": True,
}
