# -*- coding: utf-8 -*-
from django.db import models
from django.utils.translation import gettext as _
from model_utils.models import TimeStampedModel


class BenchRun(TimeStampedModel):
    class Status(models.TextChoices):
        RUNNING = 'running', _('Running')
        FINISHED = 'finished', _('Finished')
        FAILED = 'failed', _('Failed')

    id = models.BigAutoField(primary_key=True, verbose_name=_("Id"))
    config = models.JSONField(verbose_name=_("Config"), default=dict)
    cache_mode = models.CharField(max_length=16, verbose_name=_("Cache mode"))
    judge_backend = models.CharField(max_length=128, verbose_name=_("Judge backend"))
    output_dir = models.CharField(max_length=512, verbose_name=_("Output directory"))
    status = models.CharField(max_length=16, choices=Status.choices, default=Status.RUNNING,
                              verbose_name=_("Status"), db_index=True)
    paper_count = models.PositiveIntegerField(default=0, verbose_name=_("Papers"))
    profile_count = models.PositiveIntegerField(default=0, verbose_name=_("Profiles"))
    failed_granules = models.PositiveIntegerField(default=0, verbose_name=_("Failed granules"))

    class Meta:
        ordering = ('-created',)
        verbose_name = _("Bench run")
        verbose_name_plural = _("Bench runs")

    def __str__(self):
        return _("Bench run ") + f"{self.pk} ({self.status})"


class PaperRecord(TimeStampedModel):
    id = models.BigAutoField(primary_key=True, verbose_name=_("Id"))
    paper_id = models.CharField(max_length=255, unique=True, verbose_name=_("Paper id"))
    venue = models.CharField(max_length=128, verbose_name=_("Venue"), db_index=True)
    year = models.PositiveIntegerField(verbose_name=_("Year"))
    decision = models.CharField(max_length=16, verbose_name=_("Decision"))
    title = models.TextField(blank=True, verbose_name=_("Title"))

    class Meta:
        ordering = ('paper_id',)
        verbose_name = _("Paper")
        verbose_name_plural = _("Papers")

    def __str__(self):
        return self.paper_id


class ProfileRecord(TimeStampedModel):
    id = models.BigAutoField(primary_key=True, verbose_name=_("Id"))
    run = models.ForeignKey(BenchRun, on_delete=models.CASCADE, related_name='profiles', verbose_name=_("Run"))
    paper = models.ForeignKey(PaperRecord, on_delete=models.CASCADE, related_name='profiles',
                              verbose_name=_("Paper"))
    reviewer_id = models.CharField(max_length=255, verbose_name=_("Reviewer id"))
    reviewer_label = models.CharField(max_length=255, verbose_name=_("Reviewer label"), db_index=True)
    profile = models.JSONField(verbose_name=_("Profile"), default=dict)
    errors = models.JSONField(verbose_name=_("Errors"), default=dict)
    complete = models.BooleanField(default=False, verbose_name=_("Complete"))

    class Meta:
        ordering = ('run', 'paper__paper_id', 'reviewer_id')
        unique_together = (('run', 'paper', 'reviewer_id'),)
        verbose_name = _("Profile")
        verbose_name_plural = _("Profiles")
        indexes = [models.Index(fields=['run', 'reviewer_label'], name='review_bench_run_label_idx')]

    def __str__(self):
        return f"{self.paper.paper_id}/{self.reviewer_id}"

    @staticmethod
    def get_incomplete_for_run(run: BenchRun):
        return ProfileRecord.objects.filter(run=run, complete=False)
