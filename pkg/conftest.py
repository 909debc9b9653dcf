import os

import django

os.environ.setdefault('DJANGO_SETTINGS_MODULE', 'loopbell.settings')
django.setup()
