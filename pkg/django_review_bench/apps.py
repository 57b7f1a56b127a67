# -*- coding: utf-8
from django.apps import AppConfig


class DjangoReviewBenchConfig(AppConfig):
    name = 'django_review_bench'
    verbose_name = 'Review bench'
    default_auto_field = 'django.db.models.BigAutoField'
