from django.apps import AppConfig


class BivariateConfig(AppConfig):
    default_auto_field = 'django.db.models.BigAutoField'
    name = 'bivariate'
