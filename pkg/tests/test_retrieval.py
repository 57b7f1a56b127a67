#!/usr/bin/env python
# -*- coding: utf-8 -*-

"""
test_retrieval
------------

Tests for `django_review_bench` retrieval module.
"""
import random
import shutil
import tempfile

from django.test import SimpleTestCase

from django_review_bench.errors import EmptyExtractionError, ReplayMissError, TransportError
from django_review_bench.judge import CacheMode, ReplayStore
from django_review_bench.retrieval import (CandidateWork, ScholarClient, SearchQuery, build_queries,
                                           candidate_from_api, dedup_candidates, filter_candidates,
                                           merge_candidates, mmr_select, retrieve_candidates, trigram_cosine)
from .factories import CandidateWorkFactory, faker
from .stubs import CannedScholarSession, ExplodingSession


def greedy_oracle(pool, k, lam):
    """MMR by exhaustive scan at every step, ties by (relevance desc, id asc)."""
    ordered = sorted(pool, key=lambda c: (-c.relevance, c.id))
    selected = []
    while len(selected) < min(k, len(ordered)):
        best, best_score = None, None
        for c in ordered:
            if c in selected:
                continue
            redundancy = max((trigram_cosine(c.similarity_text, s.similarity_text) for s in selected), default=0.0)
            score = lam * c.relevance - (1 - lam) * redundancy
            if best is None or score > best_score + 1e-12:
                best, best_score = c, score
        selected.append(best)
    return selected


class QueryTests(SimpleTestCase):
    def test_core_task_first(self):
        queries = build_queries({'core_task': ' token  routing ', 'contributions': [{'name': 'curriculum'}, 'gating']},
                                limit=7)
        self.assertEqual([q.text for q in queries], ['token routing', 'curriculum', 'gating'])
        self.assertTrue(all(q.limit == 7 for q in queries))

    def test_empty_core_task(self):
        self.assertRaises(EmptyExtractionError, build_queries, {'core_task': '  ', 'contributions': ['x']})

    def test_query_params(self):
        params = SearchQuery('token routing', 5).to_params()
        self.assertEqual(params['query'], 'token routing')
        self.assertEqual(params['limit'], 5)
        self.assertIn('publicationTypes', params['fields'].split(','))


class CandidateTests(SimpleTestCase):
    def test_relevance_falls_back_to_rank(self):
        c = candidate_from_api({'paperId': 'p1', 'title': 't', 'abstract': 'a', 'year': 2020}, rank=4)
        self.assertAlmostEqual(c.relevance, 0.25)
        scored = candidate_from_api({'paperId': 'p2', 'title': 't', 'abstract': 'a', 'score': 3.5}, rank=1)
        self.assertEqual(scored.relevance, 3.5)
        self.assertIsNone(scored.year)

    def test_item_without_id_is_skipped(self):
        self.assertIsNone(candidate_from_api({'title': 'orphan'}, rank=1))

    def test_invalid_relevance(self):
        self.assertRaises(ValueError, CandidateWork, 'x', 't', 'a', 2020, float('nan'))
        self.assertRaises(ValueError, CandidateWork, 'x', 't', 'a', 2020, -1.0)

    def test_merge_keeps_highest_relevance(self):
        low = CandidateWork('p1', 'Title', 'Abstract', 2020, 0.2)
        high = CandidateWork('p1', 'Title', 'Abstract', 2020, 0.9)
        other = CandidateWork('p0', 'Other', 'Abstract', 2020, 0.9)
        merged = merge_candidates([[low, other], [high]])
        self.assertEqual([(c.id, c.relevance) for c in merged], [('p0', 0.9), ('p1', 0.9)])


class FilterTests(SimpleTestCase):
    def test_temporal_filter_randomized(self):
        rng = random.Random(7)
        for _ in range(50):
            submission_year = rng.randint(2012, 2025)
            pool = [CandidateWork(f"c{i}", f"Paper {i}", 'An abstract.', rng.choice([None] + list(range(2008, 2030))),
                                  rng.random()) for i in range(20)]
            kept = filter_candidates(pool, submission_year)
            self.assertTrue(all(c.year is not None and c.year <= submission_year for c in kept))
            self.assertEqual(len(kept), sum(1 for c in pool if c.year is not None and c.year <= submission_year))

    def test_non_technical_items_are_dropped(self):
        pool = [
            CandidateWork('a', 'Erratum: a method', 'Fixes a figure.', 2019, 1.0),
            CandidateWork('b', 'A method', 'Body.', 2019, 1.0, publication_types=('Editorial',)),
            CandidateWork('c', 'Editorial board notes', 'Body.', 2019, 1.0, publication_types=('JournalArticle',)),
            CandidateWork('d', 'No abstract', '', 2019, 1.0),
        ]
        self.assertEqual([c.id for c in filter_candidates(pool, 2020)], ['c'])

    def test_untitled_items_are_dropped(self):
        pool = [
            CandidateWork('a', '', 'An abstract.', 2019, 1.0),
            CandidateWork('b', '   ', 'An abstract.', 2019, 0.8),
            CandidateWork('c', 'Token routing', 'An abstract.', 2019, 0.5),
        ]
        self.assertEqual([c.id for c in filter_candidates(pool, 2020)], ['c'])


class DedupTests(SimpleTestCase):
    def test_identical_pair_is_dropped(self):
        a = CandidateWork('a', 'Sparse routing', 'We route tokens sparsely.', 2019, 0.5)
        b = CandidateWork('b', 'Sparse routing', 'We route tokens sparsely.', 2020, 0.9)
        c = CandidateWork('c', 'Graph dropout', 'Edges are dropped at random during training.', 2019, 0.1)
        kept = dedup_candidates([a, b, c], 0.96)
        self.assertEqual([x.id for x in kept], ['b', 'c'])

    def test_idempotent(self):
        faker.seed_instance(11)
        pool = CandidateWorkFactory.build_batch(12)
        pool.append(CandidateWork('dup', pool[0].title, pool[0].abstract, 2019, 0.01))
        once = dedup_candidates(pool, 0.96)
        self.assertEqual(dedup_candidates(once, 0.96), once)
        kept = {c.id for c in once}
        self.assertFalse({'dup', pool[0].id} <= kept)

    def test_threshold_bounds(self):
        self.assertRaises(ValueError, dedup_candidates, [], 1.5)


class MMRTests(SimpleTestCase):
    def test_matches_greedy_oracle(self):
        faker.seed_instance(3)
        for trial in range(20):
            pool = CandidateWorkFactory.build_batch(5)
            for lam in (0.0, 0.5, 1.0):
                for k in (1, 3, 5):
                    self.assertEqual([c.id for c in mmr_select(pool, k, lam)],
                                     [c.id for c in greedy_oracle(pool, k, lam)], f"trial {trial} lam {lam} k {k}")

    def test_lambda_one_is_relevance_order(self):
        pool = [CandidateWork('b', 't1', 'a1', 2020, 0.5), CandidateWork('a', 't2', 'a2', 2020, 0.5),
                CandidateWork('c', 't3', 'a3', 2020, 0.9)]
        self.assertEqual([c.id for c in mmr_select(pool, 3, 1.0)], ['c', 'a', 'b'])

    def test_redundant_candidate_is_demoted(self):
        pool = [
            CandidateWork('a', 'Sparse token routing', 'Routing tokens sparsely for long inputs.', 2020, 1.0),
            CandidateWork('b', 'Sparse token routing', 'Routing tokens sparsely for long inputs!', 2020, 0.95),
            CandidateWork('c', 'Speech decoding', 'Streaming decoders for recognition.', 2020, 0.6),
        ]
        self.assertEqual([c.id for c in mmr_select(pool, 2, 0.5)], ['a', 'c'])

    def test_parameter_bounds(self):
        self.assertRaises(ValueError, mmr_select, [], 0, 0.5)
        self.assertRaises(ValueError, mmr_select, [], 3, 1.5)
        self.assertEqual(mmr_select([], 3, 0.5), [])


class ScholarClientTests(SimpleTestCase):
    def setUp(self) -> None:
        self.tmp = tempfile.mkdtemp()
        self.sleeps = []

    def tearDown(self) -> None:
        shutil.rmtree(self.tmp, ignore_errors=True)

    def scholar_client(self, session, mode=CacheMode.Record):
        return ScholarClient(ReplayStore(self.tmp, mode), api_key='secret', session=session, sleep=self.sleeps.append)

    def test_record_then_replay(self):
        session = CannedScholarSession()
        query = SearchQuery('token routing', 5)
        recorded = self.scholar_client(session).search(query)
        self.assertEqual(len(recorded), 5)
        self.assertEqual(session.queries[0]['query'], 'token routing')
        replayed = self.scholar_client(ExplodingSession(), CacheMode.Replay).search(query)
        self.assertEqual(replayed, recorded)

    def test_replay_miss(self):
        client = self.scholar_client(ExplodingSession(), CacheMode.Replay)
        self.assertRaises(ReplayMissError, client.search, SearchQuery('never recorded'))

    def test_cache_key_depends_on_limit(self):
        client = self.scholar_client(CannedScholarSession())
        self.assertEqual(client.cache_key(SearchQuery('q', 5)), client.cache_key(SearchQuery('q', 5)))
        self.assertNotEqual(client.cache_key(SearchQuery('q', 5)), client.cache_key(SearchQuery('q', 6)))

    def test_rate_limit_backoff(self):
        session = CannedScholarSession(statuses=[429, 503])
        client = self.scholar_client(session)
        self.assertEqual(len(client.search(SearchQuery('token routing'))), 5)
        self.assertEqual(self.sleeps, [1, 2])
        self.assertEqual(client.requests_issued, 3)

    def test_client_error(self):
        with self.assertRaises(TransportError) as ctx:
            self.scholar_client(CannedScholarSession(statuses=[404])).search(SearchQuery('token routing'))
        self.assertFalse(ctx.exception.transient)

    def test_api_key_header(self):
        self.assertEqual(self.scholar_client(CannedScholarSession())._headers(), {'x-api-key': 'secret'})

    def test_retrieve_candidates(self):
        client = self.scholar_client(CannedScholarSession())
        extraction = {'core_task': 'token routing', 'contributions': [{'name': 'curriculum training'}]}
        pool = retrieve_candidates(extraction, 2023, client, fetch_limit=10, k=30)
        ids = [c.id for c in pool]
        self.assertEqual(len(ids), 5)
        self.assertEqual(ids.count('shared-survey'), 1)
        self.assertFalse(any(i.endswith('-future') or i.endswith('-erratum') for i in ids))
        self.assertTrue(all(c.year <= 2023 for c in pool))
        top = retrieve_candidates(extraction, 2023, client, fetch_limit=10, k=2)
        self.assertEqual(top[0].id, ids[0])
        self.assertEqual(len(top), 2)
