import os

import django

os.environ.setdefault("DJANGO_SETTINGS_MODULE", "NEGACOPULA.settings")
django.setup()
