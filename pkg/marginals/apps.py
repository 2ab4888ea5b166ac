from django.apps import AppConfig


class MarginalsConfig(AppConfig):
    default_auto_field = 'django.db.models.BigAutoField'
    name = 'marginals'
