from django.apps import AppConfig


class AppraisalConfig(AppConfig):
    name = 'appraisal'
    verbose_name = 'Self-appraisal dynamics'
