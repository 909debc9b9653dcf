from django.db import models
from django.utils.translation import gettext_lazy as _


class Blocker(models.TextChoices):
    OPEN = 'OPEN', _('Open')
    BLOCK_PLUS = 'BLOCK_PLUS', _('Axis channel blocked')
    BLOCK_MINUS = 'BLOCK_MINUS', _('Complement channel blocked')


class Channel(models.TextChoices):
    PLUS = 'P', _('Axis channel')
    MINUS = 'M', _('Complement channel')


class StageLabel(models.TextChoices):
    STAGE1 = 'STAGE1', _('Stage 1')
    STAGE2 = 'STAGE2', _('Stage 2')
    STAGE3 = 'STAGE3', _('Stage 3')
    CUSTOM = 'CUSTOM', _('Custom')
