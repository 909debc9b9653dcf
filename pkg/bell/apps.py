from django.apps import AppConfig


class BellConfig(AppConfig):
    default_auto_field = 'django.db.models.BigAutoField'
    name = 'bell'
