from django.apps import AppConfig


class CovariancesConfig(AppConfig):
    default_auto_field = "django.db.models.BigAutoField"
    name = "treecorr.components.covariances"
