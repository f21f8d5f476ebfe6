from .base import *

# Development settings
DEBUG = True
