# -*- coding: utf-8 -*-
import json

from django.core.management.base import BaseCommand, CommandError

from django_review_bench.conf import RunConfig
from django_review_bench.corpus import ingest_corpus
from django_review_bench.errors import ReviewBenchError
from django_review_bench.pipelines import dump_json, load_profiles, run_pipelines
from django_review_bench.reports import TESTS, compute_statistics, emit_report, table_records


def _csv(value: str):
    return tuple(v.strip() for v in value.split(',') if v.strip())


class Command(BaseCommand):
    help = 'Scores peer reviews with an LLM judge and reports cross-reviewer statistics'

    def add_arguments(self, parser):
        sub = parser.add_subparsers(dest='action', required=True)

        run = sub.add_parser('run', help='Run the dimension pipelines over a corpus directory')
        run.add_argument('--corpus', required=True)
        run.add_argument('--dimensions', type=_csv)
        run.add_argument('--config', help='JSON file overriding REVIEW_BENCH_* settings')
        run.add_argument('--cache', dest='cache_dir')
        run.add_argument('--cache-mode', dest='cache_mode', choices=('record', 'replay', 'passthrough'))
        run.add_argument('--out', dest='output_dir')
        run.add_argument('--parallelism', type=int)
        run.add_argument('--no-ledger', dest='ledger', action='store_false', default=None)

        report = sub.add_parser('report', help='Build the report bundle from persisted profiles')
        report.add_argument('--profiles', required=True)
        report.add_argument('--out', required=True)

        stats = sub.add_parser('stats', help='Run selected significance tests over persisted profiles')
        stats.add_argument('--profiles', required=True)
        stats.add_argument('--tests', type=_csv, default=TESTS)
        stats.add_argument('--out')

    def handle(self, *args, **options):
        try:
            getattr(self, f"handle_{options['action']}")(options)
        except ReviewBenchError as e:
            raise CommandError(f"{e.error_type.name}: {e}")
        except (OSError, ValueError) as e:
            raise CommandError(str(e))

    def handle_run(self, options):
        config = RunConfig.from_settings()
        if options.get('config'):
            config = RunConfig.from_file(options['config'], base=config)
        config = config.overlay({k: options.get(k) for k in ('dimensions', 'cache_dir', 'cache_mode', 'output_dir',
                                                             'parallelism', 'ledger')})
        diagnostics = []
        corpus = ingest_corpus(options['corpus'], diagnostics)
        for d in diagnostics:
            self.stderr.write(f"Skipped {d.path}: {d.message}")
        profiles = run_pipelines(corpus, config)
        failed = [(p.paper_id, p.reviewer_id, d) for p in profiles for d in config.dimensions if d in p.errors]
        for paper_id, reviewer_id, dimension in failed:
            self.stderr.write(f"Granule {paper_id}/{reviewer_id}/{dimension} is absent")
        self.stdout.write(self.style.SUCCESS(
            f"Wrote {len(profiles)} profiles for {len(corpus)} papers to {config.output_dir} "
            f"({len(failed)} absent granules)"))

    def handle_report(self, options):
        profiles = load_profiles(options['profiles'])
        bundle = emit_report(profiles, out_dir=options['out'])
        self.stdout.write(self.style.SUCCESS(
            f"Wrote report over {len(profiles)} profiles ({len(bundle.tables)} tables) to {options['out']}"))

    def handle_stats(self, options):
        profiles = load_profiles(options['profiles'])
        tables = compute_statistics(profiles, options['tests'])
        payload = {name: table_records(table) for name, table in tables.items()}
        if options.get('out'):
            dump_json(options['out'], payload)
            self.stdout.write(self.style.SUCCESS(f"Wrote {', '.join(sorted(tables))} to {options['out']}"))
        else:
            self.stdout.write(json.dumps(payload, sort_keys=True, indent=2))
