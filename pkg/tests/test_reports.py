#!/usr/bin/env python
# -*- coding: utf-8 -*-

"""
test_reports
------------

Tests for `django_review_bench` reports module.
"""
import dataclasses
import json
import math
import os
import shutil
import tempfile

from django.test import SimpleTestCase

from django_review_bench.constructiveness import AtomicComment, ConstructivenessResult, compute_mcs
from django_review_bench.depth import ArgumentUnit, DoAResult, Role, compute_doa
from django_review_bench.errors import InsufficientDataError
from django_review_bench.flaws import FlawScores, RankedEntry, RankedFlawList, compute_ncps
from django_review_bench.novelty import compute_novelty_metrics
from django_review_bench.pipelines import DimensionProfile
from django_review_bench.reports import (MACRO, accept_reject_table, compute_statistics, emit_report, label_order,
                                         pearson_table, profiles_frame, significance_table, summary_table)
from django_review_bench.schemas import ASPECTS


def doa_result(value, premises=(1, 1, 1, 1)):
    histogram = {a: n for a, n in zip(ASPECTS, premises)}
    return DoAResult(total_units=sum(premises), premise_count=sum(premises), premise_ratio=value,
                     grounding_score=value, doa=value, aspect_histogram={'all': histogram, 'premises': histogram},
                     grounding_histogram={'0': 0, '1': sum(premises), '2': 0}, aspect_doa={})


def mcs_result(value):
    return ConstructivenessResult(per_arc_clc=(value,), mcs=value, dim_means=(2 * value,) * 5, ar=1.0, sd=0.0,
                                  cd=1.0 if value >= 0.5 else 0.0)


def profile(paper_id, label, venue='ICLR', decision='poster', **components):
    reviewer_id = 'human' if label == 'human' else f"sys-{label.lower()}"
    return DimensionProfile(paper_id, reviewer_id, label, venue, 2023, decision, 1, **components)


class WorkedExampleReportTests(SimpleTestCase):
    def setUp(self) -> None:
        self.tmp = tempfile.mkdtemp()
        units = [ArgumentUnit('c', Role.Claim, 'clarity', 0), ArgumentUnit('p1', Role.Premise, 'experiment', 1, 2),
                 ArgumentUnit('p2', Role.Premise, 'experiment', 2, 1),
                 ArgumentUnit('p3', Role.Premise, 'novelty', 3, 0)]
        ranked = RankedFlawList('r1', tuple(RankedEntry(f"F{i}", i, w) for i, w in enumerate((1, 2, 1, 2), start=1)))
        arcs = [AtomicComment(f"A{i}", 't', 't', 'weakness', s) for i, s in enumerate(
            [(2, 2, 0, 1, 1), (2, 2, 1, 1, 1), (1, 2, 0, 0, 2), (2, 2, 0, 0, 1)])]
        self.example = profile('paper-x', 'human', doa=compute_doa(units),
                               novelty=compute_novelty_metrics([2 / 3, 2 / 3, 2.0]),
                               flaws=FlawScores(2 / 3, 1.0, compute_ncps(ranked), {'valid': 4, 'hallucinated': 0}, {}),
                               mcs=compute_mcs(arcs))

    def tearDown(self) -> None:
        shutil.rmtree(self.tmp, ignore_errors=True)

    def test_per_review_table(self):
        bundle = emit_report([self.example])
        row = bundle.tables['profiles'].iloc[0]
        self.assertAlmostEqual(row['doa'], 0.6)
        self.assertAlmostEqual(row['ns'], 0.778, places=3)
        self.assertAlmostEqual(row['ncps'], 0.864, places=3)
        self.assertAlmostEqual(row['mcs'], 0.575)
        self.assertAlmostEqual(row['critical_recall'], 0.667, places=3)

    def test_written_bundle_is_deterministic(self):
        emit_report([self.example], out_dir=os.path.join(self.tmp, 'one'))
        emit_report([self.example], out_dir=os.path.join(self.tmp, 'two'))
        for name in ('report.json', 'plots.json', os.path.join('tables', 'profiles.csv'),
                     os.path.join('tables', 'summary.csv'), os.path.join('tables', 'aspects.csv')):
            with open(os.path.join(self.tmp, 'one', name), 'rb') as a, \
                    open(os.path.join(self.tmp, 'two', name), 'rb') as b:
                self.assertEqual(a.read(), b.read(), name)
        with open(os.path.join(self.tmp, 'one', 'report.json')) as fh:
            report = json.load(fh)
        self.assertEqual(report['labels'], ['human'])
        self.assertAlmostEqual(report['profiles'][0]['doa'], 0.6)
        self.assertIsNone(report['summary'][0]['std'])
        with open(os.path.join(self.tmp, 'one', 'tables', 'profiles.csv')) as fh:
            self.assertIn('0.600000', fh.read())

    def test_empty_report(self):
        self.assertRaises(InsufficientDataError, emit_report, [])


class StatisticsTableTests(SimpleTestCase):
    def setUp(self) -> None:
        self.profiles = []
        for i in range(6):
            paper = f"p{i}"
            decision = 'reject' if i % 2 else 'poster'
            self.profiles.append(profile(paper, 'human', decision=decision, doa=doa_result(0.1 * i),
                                         mcs=mcs_result(0.1 * i)))
            self.profiles.append(profile(paper, 'GPT', decision=decision, doa=doa_result(0.1 * i + 0.2, (2, 0, 1, 1)),
                                         mcs=mcs_result(0.1 * i + 0.2)))

    def test_label_order(self):
        self.assertEqual(label_order(['b', 'human', 'a', 'b']), ['human', 'a', 'b'])

    def test_single_venue_family(self):
        table = significance_table(profiles_frame(self.profiles))
        doa = table[(table['metric'] == 'doa')].iloc[0]
        self.assertEqual(doa['family_size'], 1)
        self.assertEqual(doa['n_pairs'], 6)
        self.assertAlmostEqual(doa['p_value'], 2 / 64)
        self.assertAlmostEqual(doa['p_holm'], doa['p_value'])
        self.assertEqual(doa['stars'], '*')
        self.assertAlmostEqual(doa['mean_delta'], 0.2)
        ns = table[(table['metric'] == 'ns')].iloc[0]
        self.assertTrue(ns['absent'])
        self.assertEqual(ns['family_size'], 0)
        self.assertTrue(math.isnan(ns['p_holm']))

    def test_families_span_venues(self):
        moved = [dataclasses.replace(p, venue='NeurIPS') if p.paper_id in ('p4', 'p5') else p for p in self.profiles]
        table = significance_table(profiles_frame(moved))
        doa = table[table['metric'] == 'doa']
        self.assertEqual(list(doa['venue']), ['ICLR', 'NeurIPS'])
        self.assertEqual(list(doa['family_size']), [2, 2])
        self.assertTrue(all(doa['p_holm'] >= doa['p_value']))

    def test_identical_columns_correlate_perfectly(self):
        table = pearson_table(profiles_frame(self.profiles))
        pair = table[(table['metric_x'] == 'doa') & (table['metric_y'] == 'mcs')].iloc[0]
        self.assertAlmostEqual(pair['r'], 1.0)
        self.assertEqual(pair['n'], 12)
        diagonal = table[(table['metric_x'] == 'doa') & (table['metric_y'] == 'doa')].iloc[0]
        self.assertAlmostEqual(diagonal['r'], 1.0)
        missing = table[(table['metric_x'] == 'ns') & (table['metric_y'] == 'doa')].iloc[0]
        self.assertTrue(missing['absent'])

    def test_accept_reject(self):
        table = accept_reject_table(profiles_frame(self.profiles))
        human_doa = table[(table['label'] == 'human') & (table['metric'] == 'doa')].iloc[0]
        self.assertEqual((human_doa['n_accept'], human_doa['n_reject']), (3, 3))
        self.assertAlmostEqual(human_doa['delta'], -0.1)
        self.assertEqual(human_doa['method'], 'exact')

    def test_summary_pools_all_profiles(self):
        table = summary_table(profiles_frame(self.profiles))
        macro = table[(table['label'] == 'GPT') & (table['venue'] == MACRO) & (table['metric'] == 'doa')].iloc[0]
        self.assertEqual(macro['n'], 6)
        self.assertAlmostEqual(macro['mean'], 0.45)
        self.assertEqual(list(table['label'].unique()), ['human', 'GPT'])

    def test_unknown_test(self):
        self.assertRaises(ValueError, compute_statistics, self.profiles, ['anova'])
        self.assertEqual(set(compute_statistics(self.profiles, ['mw'])), {'accept_reject'})

    def test_aspect_alignment(self):
        bundle = emit_report(self.profiles)
        aspects = {row['label']: row for row in bundle.report['aspects']}
        self.assertAlmostEqual(aspects['human']['jsd'], 0.0)
        self.assertAlmostEqual(aspects['human']['entropy'], 2.0)
        self.assertAlmostEqual(aspects['GPT']['novelty'], 0.5)
        self.assertGreater(aspects['GPT']['jsd'], 0.0)
        self.assertEqual(bundle.plots['grounding_histogram']['human'], {'0': 0, '1': 24, '2': 0})
        self.assertEqual(bundle.report['venues'], ['ICLR'])
