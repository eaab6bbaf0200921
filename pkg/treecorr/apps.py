from django.apps import AppConfig
from django.conf import settings


class TreecorrConfig(AppConfig):
    name = "treecorr"
    verbose_name = settings.SYSTEM_NAME
