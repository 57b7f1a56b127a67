# -*- coding: utf-8 -*-

from django.contrib.admin import ModelAdmin, site
from .models import BenchRun, PaperRecord, ProfileRecord


class BenchRunAdmin(ModelAdmin):
    readonly_fields = ('created', 'modified',)
    search_fields = ('id', 'judge_backend', 'output_dir')
    list_display = ('id', 'status', 'judge_backend', 'cache_mode', 'paper_count', 'profile_count', 'failed_granules')
    list_display_links = ('id',)
    list_filter = ('status', 'cache_mode', 'judge_backend')
    date_hierarchy = 'created'


class PaperRecordAdmin(ModelAdmin):
    readonly_fields = ('created', 'modified',)
    search_fields = ('paper_id', 'title', 'venue')
    list_display = ('id', 'paper_id', 'venue', 'year', 'decision')
    list_display_links = ('id', 'paper_id')
    list_filter = ('venue', 'decision')
    date_hierarchy = 'created'


class ProfileRecordAdmin(ModelAdmin):
    readonly_fields = ('created', 'modified',)
    search_fields = ('id', 'paper__paper_id', 'reviewer_id', 'reviewer_label')
    list_display = ('id', 'run', 'paper', 'reviewer_id', 'reviewer_label', 'complete')
    list_display_links = ('id',)
    list_filter = ('reviewer_label', 'complete')
    date_hierarchy = 'created'


site.register(BenchRun, BenchRunAdmin)
site.register(PaperRecord, PaperRecordAdmin)
site.register(ProfileRecord, ProfileRecordAdmin)
