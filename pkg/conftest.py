import os

import django

os.environ.setdefault("DJANGO_SETTINGS_MODULE", "polarization.settings")
django.setup()
