import os

import django

os.environ.setdefault('DJANGO_SETTINGS_MODULE', 'ldplab.settings')
django.setup()
