#!/usr/bin/env python
# -*- coding: utf-8 -*-

"""
test_novelty
------------

Tests for `django_review_bench` novelty module.
"""
import json
import shutil
import tempfile

from django.test import SimpleTestCase

from django_review_bench.errors import EmptyInputError
from django_review_bench.judge import JudgeGateway, ReplayStore
from django_review_bench.novelty import (AggregationPolicy, NoveltyClaim, PairVerdict, aggregate_claim,
                                         compute_novelty_metrics, extract_paper_anchors, extract_targets,
                                         find_citations, score_claims, stance_distribution, verification_scope,
                                         verify_pair)
from django_review_bench.prompts import Phase
from django_review_bench.retrieval import CandidateWork
from django_review_bench.schemas import VERDICT_LABELS
from .factories import paper_text, review
from .stubs import ScriptedBackend


def verdict(candidate_id, score, claim_id='C1'):
    return PairVerdict(claim_id, candidate_id, score, VERDICT_LABELS[score])


def claim(claim_id='C1', stance='novel', text='The method is novel.'):
    return NoveltyClaim(claim_id, text, stance, 'medium')


POOL = [
    CandidateWork('rw1', 'Token routing', 'Routing tokens to experts.', 2019, 0.9),
    CandidateWork('rw2', 'Sparse attention', 'Attention over a subset of tokens.', 2020, 0.6),
    CandidateWork('rw3', 'Curriculum learning', 'Ordering examples by difficulty.', 2018, 0.3),
    CandidateWork('rw4', 'Dense baselines', 'Strong dense baselines revisited.', 2017, 0.1),
]


class AggregationTests(SimpleTestCase):
    def test_equal_relevances(self):
        relevances = {'a': 1.0, 'b': 1.0, 'c': 1.0}
        score = aggregate_claim([verdict('a', -2), verdict('b', 2), verdict('c', 2)], relevances)
        self.assertAlmostEqual(score, 0.667, places=3)
        self.assertEqual(aggregate_claim([verdict(x, 2) for x in 'abc'], relevances), 2.0)

    def test_only_top_three_relevances_count(self):
        relevances = {'a': 0.9, 'b': 0.1, 'c': 0.5, 'd': 0.7, 'e': 0.2}
        scores = {'a': 2, 'b': -2, 'c': -1, 'd': 1, 'e': -2}
        verdicts = [verdict(k, v) for k, v in scores.items()]
        expected = (2 * 0.9 + 1 * 0.7 + -1 * 0.5) / (0.9 + 0.7 + 0.5)
        self.assertAlmostEqual(aggregate_claim(verdicts, relevances), expected)

    def test_zero_relevances_fall_back_to_mean(self):
        relevances = {'a': 0.0, 'b': 0.0, 'c': 0.0, 'd': 0.0}
        verdicts = [verdict('d', -2), verdict('c', 1), verdict('b', 1), verdict('a', 2)]
        self.assertAlmostEqual(aggregate_claim(verdicts, relevances), (-2 + 1 + 1) / 3)
        self.assertAlmostEqual(aggregate_claim(verdicts[::-1], relevances), (2 + 1 + 1) / 3)

    def test_max_policy(self):
        verdicts = [verdict('a', -2), verdict('b', 1)]
        self.assertEqual(aggregate_claim(verdicts, {'a': 1.0, 'b': 0.1}, AggregationPolicy.Max), 1.0)

    def test_empty_verdicts(self):
        self.assertRaises(EmptyInputError, aggregate_claim, [], {})

    def test_inconsistent_label(self):
        self.assertRaises(ValueError, PairVerdict, 'C1', 'a', 2, 'UNSUPPORTED')


class MetricTests(SimpleTestCase):
    def test_worked_example(self):
        result = compute_novelty_metrics([2 / 3, 2 / 3, 2.0])
        self.assertAlmostEqual(result.mean_raw, 1.111, places=3)
        self.assertAlmostEqual(result.ns, 0.778, places=3)
        self.assertAlmostEqual(result.sr, 1 / 3)
        self.assertAlmostEqual(result.ssr, 1 / 3)

    def test_bounds(self):
        top = compute_novelty_metrics([2, 2])
        self.assertEqual((top.ns, top.sr, top.ssr), (1.0, 1.0, 1.0))
        bottom = compute_novelty_metrics([-2])
        self.assertEqual((bottom.ns, bottom.sr, bottom.ssr), (0.0, 0.0, 0.0))

    def test_no_claims_is_absent(self):
        self.assertIsNone(compute_novelty_metrics([]))

    def test_strict_support_tolerance(self):
        result = compute_novelty_metrics([2.0 - 1e-12, 1.0 - 1e-12, 0.99])
        self.assertAlmostEqual(result.ssr, 1 / 3)
        self.assertAlmostEqual(result.sr, 2 / 3)

    def test_stance_distribution(self):
        claims = [claim('C1', 'not_novel'), claim('C2', 'somewhat_novel'), claim('C3', 'novel')]
        self.assertEqual(stance_distribution(claims), (1 / 3, 1 / 3, 1 / 3, 0.0))
        self.assertEqual(stance_distribution([claim()]), (0.0, 0.0, 1.0, 0.0))
        self.assertRaises(EmptyInputError, stance_distribution, [])


class CitationTests(SimpleTestCase):
    def test_find_citations(self):
        text = ('Similar to Beltagy et al. (2020) and [3, 4]. See arXiv:2004.05150 and '
                'https://example.org/paper for details, also (Smith, 2019).')
        found = find_citations(text)
        self.assertIn('arXiv:2004.05150', found)
        self.assertIn('[3, 4]', found)
        self.assertIn('https://example.org/paper', found)
        self.assertIn('(Smith, 2019)', found)
        self.assertTrue(any(c.startswith('Beltagy et al') for c in found))
        self.assertEqual(find_citations(''), [])


class JudgedNoveltyTests(SimpleTestCase):
    def setUp(self) -> None:
        self.tmp = tempfile.mkdtemp()
        self.paper = paper_text('long document summarization', 'token routing')
        self.review = review('r1', summary='The paper proposes token routing.',
                             strengths='The idea is novel compared to Beltagy et al. (2020).',
                             weaknesses='The curriculum is incremental and not novel.')

    def tearDown(self) -> None:
        shutil.rmtree(self.tmp, ignore_errors=True)

    def gateway(self, backend):
        return JudgeGateway(backend, ReplayStore(self.tmp))

    def test_extract_targets(self):
        extraction = extract_targets(self.paper, self.review, self.gateway(ScriptedBackend()))
        self.assertEqual([c.stance for c in extraction.claims], ['novel', 'not_novel'])
        self.assertEqual(extraction.core_task, 'Sparse models for long document summarization.')
        self.assertTrue(any(c.startswith('Beltagy et al') for c in extraction.all_citations_raw))

    def test_non_verbatim_claim_is_dropped(self):
        def paraphrased(request):
            return json.dumps({'paper': {'core_task': 'summarization', 'contributions': []},
                               'review': {'novelty_claims': [
                                   {'claim_id': 'c1', 'text': 'The idea is novel compared to Beltagy et al. (2020).',
                                    'stance': 'novel', 'confidence_lang': 'high'},
                                   {'claim_id': 'c2', 'text': 'The work is entirely original.',
                                    'stance': 'novel', 'confidence_lang': 'high'}]}})

        backend = ScriptedBackend(overrides={Phase.NoveltyExtraction: paraphrased})
        extraction = extract_targets(self.paper, self.review, self.gateway(backend))
        self.assertEqual([c.claim_id for c in extraction.claims], ['c1'])

    def test_review_without_novelty_language(self):
        plain = review('r2', summary='The paper studies routing.', weaknesses='More datasets are needed.')
        self.assertEqual(extract_targets(self.paper, plain, self.gateway(ScriptedBackend())).claims, ())

    def test_paper_anchors(self):
        anchors = extract_paper_anchors(self.paper, self.gateway(ScriptedBackend()))
        self.assertEqual(anchors.core_task, 'Sparse models for long document summarization')
        self.assertEqual(len(anchors.contributions), 2)
        self.assertRaises(EmptyInputError, extract_paper_anchors, '  ', self.gateway(ScriptedBackend()))

    def test_verification_scope(self):
        self.assertEqual([c.id for c in verification_scope(POOL)], ['rw1', 'rw2', 'rw3'])
        self.assertEqual(len(verification_scope(POOL, AggregationPolicy.Max)), 4)

    def test_verify_pair_needs_abstract(self):
        bare = CandidateWork('rw9', 'Only a title', '', 2019, 0.5)
        self.assertRaises(EmptyInputError, verify_pair, claim(), bare, self.paper, self.gateway(ScriptedBackend()))

    def test_score_claims_matches_aggregation(self):
        claims = [claim('C1'), claim('C2', 'not_novel', 'The curriculum is incremental and not novel.')]
        backend = ScriptedBackend()
        verdicts, per_claim = score_claims(claims, POOL, self.paper, self.gateway(backend))
        self.assertEqual(len(verdicts), 6)
        self.assertEqual(backend.calls.count(Phase.NoveltyVerification), 6)
        relevances = {c.id: c.relevance for c in POOL}
        for c in claims:
            mine = [v for v in verdicts if v.claim_id == c.claim_id]
            self.assertAlmostEqual(per_claim[c.claim_id], aggregate_claim(mine, relevances))
            self.assertTrue(-2.0 <= per_claim[c.claim_id] <= 2.0)

    def test_off_schema_verdict_drops_only_that_pair(self):
        scripted = ScriptedBackend()

        def flaky(request):
            if 'Sparse attention' in request.slots['related_work_title_abstract']:
                return '{"score": 2, "label": "UNSUPPORTED"}'
            return json.dumps(scripted.answer_NoveltyVerification(request.slots))

        backend = ScriptedBackend(overrides={Phase.NoveltyVerification: flaky})
        verdicts, per_claim = score_claims([claim()], POOL, self.paper, self.gateway(backend))
        self.assertEqual([v.candidate_id for v in verdicts], ['rw1', 'rw3'])
        self.assertIn('C1', per_claim)

    def test_untitled_candidate_skips_only_that_pair(self):
        untitled = CandidateWork('rw0', '', 'Routing tokens to experts.', 2019, 0.95)
        backend = ScriptedBackend()
        verdicts, per_claim = score_claims([claim()], [untitled] + POOL[:2], self.paper, self.gateway(backend))
        self.assertEqual([v.candidate_id for v in verdicts], ['rw1', 'rw2'])
        self.assertEqual(backend.calls.count(Phase.NoveltyVerification), 2)
        relevances = {'rw0': 0.95, 'rw1': 0.9, 'rw2': 0.6}
        self.assertAlmostEqual(per_claim['C1'], aggregate_claim(verdicts, relevances))

    def test_claim_without_verdicts_is_unscored(self):
        backend = ScriptedBackend(overrides={Phase.NoveltyVerification: lambda r: 'not json'})
        verdicts, per_claim = score_claims([claim()], POOL, self.paper, self.gateway(backend))
        self.assertEqual((verdicts, per_claim), ([], {}))
