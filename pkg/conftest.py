import os

import django

os.environ.setdefault('DJANGO_SETTINGS_MODULE', 'transhp.settings')
django.setup()
