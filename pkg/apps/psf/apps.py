from django.apps import AppConfig


class PsfConfig(AppConfig):
    default_auto_field = "django.db.models.BigAutoField"
    name = "apps.psf"
