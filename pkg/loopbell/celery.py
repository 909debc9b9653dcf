import os

from celery import Celery

os.environ.setdefault('DJANGO_SETTINGS_MODULE', 'loopbell.settings')

app = Celery("loopbell")
app.config_from_object('django.conf:settings', namespace='CELERY')
app.conf.task_default_queue = "loopbell_queue"
app.conf.enable_utc = True
app.autodiscover_tasks()
