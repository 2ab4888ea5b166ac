from django.apps import AppConfig


class CopulaConfig(AppConfig):
    default_auto_field = 'django.db.models.BigAutoField'
    name = 'copula'
    verbose_name = 'Copula evaluation and sampling'
