from django.apps import AppConfig


class PilotwaveConfig(AppConfig):
    default_auto_field = 'django.db.models.BigAutoField'
    name = 'pilotwave'
