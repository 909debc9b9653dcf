from django.db import models
from django.utils.translation import gettext_lazy as _


class ScanModel(models.TextChoices):
    CLOSED_FORM = 'closed_form', _('Closed form')
    MONTE_CARLO = 'monte_carlo', _('Monte Carlo')


class OutputFormat(models.TextChoices):
    CSV = 'csv', _('CSV')
    JSON = 'json', _('JSON')


class RunCommand(models.TextChoices):
    STAGE = 'stage', _('Stage fractions')
    SCAN = 'scan', _('Grid scan')
    CHECK = 'check', _('Invariant suite')
    MC = 'mc', _('Monte Carlo')


class SeedSource(models.TextChoices):
    CLI = 'cli', _('Command line')
    ENV = 'env', _('Environment')
    DEFAULT = 'default', _('Built-in default')
