# Generated by Django 3.2.9 on 2026-10-17 09:12

from django.db import migrations, models
import django.db.models.deletion
import django.utils.timezone
import model_utils.fields


class Migration(migrations.Migration):

    initial = True

    dependencies = [
    ]

    operations = [
        migrations.CreateModel(
            name='BenchRun',
            fields=[
                ('created', model_utils.fields.AutoCreatedField(default=django.utils.timezone.now, editable=False, verbose_name='created')),
                ('modified', model_utils.fields.AutoLastModifiedField(default=django.utils.timezone.now, editable=False, verbose_name='modified')),
                ('id', models.BigAutoField(primary_key=True, serialize=False, verbose_name='Id')),
                ('config', models.JSONField(default=dict, verbose_name='Config')),
                ('cache_mode', models.CharField(max_length=16, verbose_name='Cache mode')),
                ('judge_backend', models.CharField(max_length=128, verbose_name='Judge backend')),
                ('output_dir', models.CharField(max_length=512, verbose_name='Output directory')),
                ('status', models.CharField(choices=[('running', 'Running'), ('finished', 'Finished'), ('failed', 'Failed')], db_index=True, default='running', max_length=16, verbose_name='Status')),
                ('paper_count', models.PositiveIntegerField(default=0, verbose_name='Papers')),
                ('profile_count', models.PositiveIntegerField(default=0, verbose_name='Profiles')),
                ('failed_granules', models.PositiveIntegerField(default=0, verbose_name='Failed granules')),
            ],
            options={
                'verbose_name': 'Bench run',
                'verbose_name_plural': 'Bench runs',
                'ordering': ('-created',),
            },
        ),
        migrations.CreateModel(
            name='PaperRecord',
            fields=[
                ('created', model_utils.fields.AutoCreatedField(default=django.utils.timezone.now, editable=False, verbose_name='created')),
                ('modified', model_utils.fields.AutoLastModifiedField(default=django.utils.timezone.now, editable=False, verbose_name='modified')),
                ('id', models.BigAutoField(primary_key=True, serialize=False, verbose_name='Id')),
                ('paper_id', models.CharField(max_length=255, unique=True, verbose_name='Paper id')),
                ('venue', models.CharField(db_index=True, max_length=128, verbose_name='Venue')),
                ('year', models.PositiveIntegerField(verbose_name='Year')),
                ('decision', models.CharField(max_length=16, verbose_name='Decision')),
                ('title', models.TextField(blank=True, verbose_name='Title')),
            ],
            options={
                'verbose_name': 'Paper',
                'verbose_name_plural': 'Papers',
                'ordering': ('paper_id',),
            },
        ),
        migrations.CreateModel(
            name='ProfileRecord',
            fields=[
                ('created', model_utils.fields.AutoCreatedField(default=django.utils.timezone.now, editable=False, verbose_name='created')),
                ('modified', model_utils.fields.AutoLastModifiedField(default=django.utils.timezone.now, editable=False, verbose_name='modified')),
                ('id', models.BigAutoField(primary_key=True, serialize=False, verbose_name='Id')),
                ('reviewer_id', models.CharField(max_length=255, verbose_name='Reviewer id')),
                ('reviewer_label', models.CharField(db_index=True, max_length=255, verbose_name='Reviewer label')),
                ('profile', models.JSONField(default=dict, verbose_name='Profile')),
                ('errors', models.JSONField(default=dict, verbose_name='Errors')),
                ('complete', models.BooleanField(default=False, verbose_name='Complete')),
                ('paper', models.ForeignKey(on_delete=django.db.models.deletion.CASCADE, related_name='profiles', to='django_review_bench.paperrecord', verbose_name='Paper')),
                ('run', models.ForeignKey(on_delete=django.db.models.deletion.CASCADE, related_name='profiles', to='django_review_bench.benchrun', verbose_name='Run')),
            ],
            options={
                'verbose_name': 'Profile',
                'verbose_name_plural': 'Profiles',
                'ordering': ('run', 'paper__paper_id', 'reviewer_id'),
                'unique_together': {('run', 'paper', 'reviewer_id')},
            },
        ),
        migrations.AddIndex(
            model_name='profilerecord',
            index=models.Index(fields=['run', 'reviewer_label'], name='review_bench_run_label_idx'),
        ),
    ]
