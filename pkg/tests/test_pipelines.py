#!/usr/bin/env python
# -*- coding: utf-8 -*-

"""
test_pipelines
------------

Tests for `django_review_bench` pipelines module.
"""
import json
import os
import shutil
import tempfile

from django.test import SimpleTestCase, TransactionTestCase

from django_review_bench.conf import RunConfig
from django_review_bench.errors import ErrorTypes
from django_review_bench.judge import ReplayStore
from django_review_bench.models import BenchRun, PaperRecord, ProfileRecord
from django_review_bench.pipelines import (MANIFEST_NAME, PROFILE_DIR, DimensionProfile, arun_pipelines,
                                           build_gateway, build_scholar, load_profiles, run_pipelines)
from .factories import miniature_corpus
from .stubs import CannedScholarSession, ExplodingBackend, ExplodingSession, ScriptedBackend


class PipelineRunMixin:
    def make_config(self, name, mode='record', **overrides):
        values = {'cache_dir': os.path.join(self.tmp, 'cache'), 'cache_mode': mode,
                  'output_dir': os.path.join(self.tmp, name)}
        values.update(overrides)
        return RunConfig.from_settings().overlay(values)

    def record(self, name='recorded', ledger=False, **overrides):
        config = self.make_config(name, **overrides)
        self.record_gateway = build_gateway(config, backend=ScriptedBackend())
        self.record_scholar = build_scholar(config, session=CannedScholarSession())
        return run_pipelines(self.corpus, config, gateway=self.record_gateway, scholar=self.record_scholar,
                             ledger=ledger)

    def replay(self, name='replayed', **overrides):
        config = self.make_config(name, 'replay', **overrides)
        self.replay_gateway = build_gateway(config, backend=ExplodingBackend())
        self.replay_scholar = build_scholar(config, session=ExplodingSession())
        return run_pipelines(self.corpus, config, gateway=self.replay_gateway, scholar=self.replay_scholar,
                             ledger=False)

    def profile_bytes(self, name):
        directory = os.path.join(self.tmp, name, PROFILE_DIR)
        result = {}
        for file_name in sorted(os.listdir(directory)):
            with open(os.path.join(directory, file_name), 'rb') as fh:
                result[file_name] = fh.read()
        return result


class PipelineTests(PipelineRunMixin, SimpleTestCase):
    def setUp(self) -> None:
        self.tmp = tempfile.mkdtemp()
        self.corpus = miniature_corpus()

    def tearDown(self) -> None:
        shutil.rmtree(self.tmp, ignore_errors=True)

    def test_record_run(self):
        profiles = self.record()
        self.assertEqual([p.key for p in profiles], [(paper, reviewer) for paper in ('paper-a', 'paper-b', 'paper-c')
                                                     for reviewer in ('human', 'sys-dr', 'sys-gpt')])
        self.assertEqual({p.key: p.errors for p in profiles if p.errors}, {})
        human = profiles[0]
        self.assertTrue(human.is_human)
        self.assertEqual(human.review_count, 2)
        self.assertIsNotNone(human.doa)
        self.assertIsNotNone(human.mcs)
        self.assertEqual((human.flaws.critical_recall, human.flaws.minor_recall), (1.0, 1.0))
        self.assertEqual(set(human.provenance['digests']), {'doa', 'novelty', 'flaw', 'mcs'})
        self.assertEqual(human.provenance['backend'], 'scripted-judge')
        self.assertGreater(self.record_scholar.requests_issued, 0)

    def test_replay_is_byte_identical_and_offline(self):
        self.record()
        self.replay()
        self.assertEqual(self.profile_bytes('recorded'), self.profile_bytes('replayed'))
        self.assertEqual(self.replay_gateway.stats.calls, 0)
        self.assertGreater(self.replay_gateway.stats.cache_hits, 0)
        self.assertEqual(self.replay_scholar.requests_issued, 0)

    def test_manifest(self):
        profiles = self.record()
        with open(os.path.join(self.tmp, 'recorded', MANIFEST_NAME)) as fh:
            manifest = json.load(fh)
        self.assertEqual(len(manifest['profiles']), len(profiles))
        self.assertTrue(all(p['complete'] for p in manifest['profiles']))
        self.assertEqual(manifest['judge_backend'], 'scripted-judge')
        self.assertIsNone(manifest['run'])
        stored = set(ReplayStore(os.path.join(self.tmp, 'cache', 'judge')).digests())
        self.assertTrue(set(manifest['digests']) <= stored)

    def test_corrupted_transcript_fails_one_granule(self):
        recorded = {p.key: p for p in self.record()}
        store = ReplayStore(os.path.join(self.tmp, 'cache', 'judge'))
        target = recorded[('paper-a', 'sys-gpt')]
        segmentation = [d for d in target.provenance['digests']['doa']
                        if store.metadata(d)['phase'] == 'doa-segmentation']
        self.assertEqual(len(segmentation), 1)
        with open(os.path.join(store.directory, f"{segmentation[0]}.txt"), 'w', encoding='utf-8') as fh:
            fh.write('A review that was never written. <sep> Garbled.')

        replayed = {p.key: p for p in self.replay()}
        broken = replayed[('paper-a', 'sys-gpt')]
        self.assertEqual(list(broken.errors), ['doa'])
        self.assertEqual(broken.errors['doa'][0], ErrorTypes.ReconstructionMismatch)
        self.assertIsNone(broken.doa)
        self.assertEqual(broken.mcs, target.mcs)

        before, after = self.profile_bytes('recorded'), self.profile_bytes('replayed')
        changed = [name for name in before if before[name] != after[name]]
        self.assertEqual(changed, ['paper-a__sys-gpt.json'])

    def test_empty_cache_replay_records_errors(self):
        profiles = self.replay()
        self.assertEqual(len(profiles), 9)
        for p in profiles:
            self.assertEqual({d: e[0] for d, e in p.errors.items()},
                             {d: ErrorTypes.ReplayMiss for d in ('doa', 'novelty', 'flaw', 'mcs')})
            self.assertFalse(p.complete(('doa',)))

    def test_dimension_subset(self):
        profiles = self.record(dimensions=['doa'])
        self.assertTrue(all(p.novelty is None and p.flaws is None and p.mcs is None for p in profiles))
        self.assertTrue(all(list(p.provenance['digests']) == ['doa'] for p in profiles))
        self.assertEqual(self.record_scholar.requests_issued, 0)

    def test_per_review_novelty_claims_are_prefixed(self):
        profiles = {p.key: p for p in self.record(bundle_policy={'novelty': 'per-review'})}
        claims = profiles[('paper-a', 'human')].artifacts['novelty_claims']
        self.assertEqual({c['claim_id'].split(':')[0] for c in claims}, {'h1', 'h2'})
        self.assertEqual(profiles[('paper-a', 'human')].extras['claims_per_review'], len(claims) / 2)
        self.assertEqual([c['claim_id'] for c in profiles[('paper-a', 'sys-gpt')].artifacts['novelty_claims']],
                         ['c1'])

    async def test_async_entry_point(self):
        config = self.make_config('async', dimensions=['mcs'])
        profiles = await arun_pipelines(self.corpus, config, gateway=build_gateway(config, backend=ScriptedBackend()),
                                        scholar=build_scholar(config, session=CannedScholarSession()), ledger=False)
        self.assertEqual(len(profiles), 9)
        self.assertTrue(all(p.mcs is not None and not p.errors for p in profiles))

    def test_load_profiles(self):
        profiles = self.record()
        self.assertEqual(load_profiles(os.path.join(self.tmp, 'recorded')), profiles)
        self.assertEqual(load_profiles(os.path.join(self.tmp, 'recorded', PROFILE_DIR)), profiles)

    def test_profile_round_trip(self):
        profile = DimensionProfile('p', 'human', 'human', 'ICLR', 2023, 'poster', 3,
                                   errors={'doa': (ErrorTypes.EmptyInput, 'nothing to segment')})
        data = json.loads(json.dumps(profile.to_dict()))
        self.assertEqual(data['errors']['doa'], {'type': 'EmptyInput', 'code': 9, 'message': 'nothing to segment'})
        self.assertEqual(DimensionProfile.from_dict(data), profile)
        self.assertEqual(profile.file_name, 'p__human.json')


class LedgerTests(PipelineRunMixin, TransactionTestCase):
    def setUp(self) -> None:
        self.tmp = tempfile.mkdtemp()
        self.corpus = miniature_corpus(system_ids=('sys-gpt',))

    def tearDown(self) -> None:
        shutil.rmtree(self.tmp, ignore_errors=True)

    def test_run_is_recorded(self):
        profiles = self.record(ledger=True, dimensions=['doa', 'mcs'])
        run = BenchRun.objects.get()
        self.assertEqual(run.status, BenchRun.Status.FINISHED)
        self.assertEqual((run.paper_count, run.profile_count, run.failed_granules), (3, len(profiles), 0))
        self.assertEqual(PaperRecord.objects.count(), 3)
        self.assertEqual(ProfileRecord.objects.filter(run=run).count(), 6)
        self.assertFalse(ProfileRecord.get_incomplete_for_run(run).exists())
        record = ProfileRecord.objects.get(paper__paper_id='paper-b', reviewer_id='sys-gpt')
        self.assertEqual(record.reviewer_label, 'GPT-4o')
        self.assertEqual(record.profile['doa'], {p.key: p for p in profiles}[('paper-b', 'sys-gpt')].to_dict()['doa'])
        with open(os.path.join(self.tmp, 'recorded', MANIFEST_NAME)) as fh:
            self.assertEqual(json.load(fh)['run'], run.pk)
