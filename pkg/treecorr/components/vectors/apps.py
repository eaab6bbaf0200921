from django.apps import AppConfig


class VectorsConfig(AppConfig):
    default_auto_field = "django.db.models.BigAutoField"
    name = "treecorr.components.vectors"
