from django.apps import AppConfig


class OrderingsConfig(AppConfig):
    default_auto_field = "django.db.models.BigAutoField"
    name = "treecorr.components.orderings"
