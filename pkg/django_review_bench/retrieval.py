# -*- coding: utf-8 -*-
"""
Prior-work retrieval for novelty verification.

Queries are composed from the paper anchors (core task first, then one per
contribution), fetched from the Semantic Scholar Graph API, merged by id,
filtered, deduplicated and diversified with MMR.
"""
import concurrent.futures
import dataclasses
import hashlib
import json
import logging
import math
import os
import time
from collections import Counter
from typing import Any, Callable, Dict, Iterable, List, Mapping, Optional, Sequence, Tuple

import numpy as np
import requests
from requests_ratelimiter import LimiterSession

from .errors import EmptyExtractionError, ReplayMissError, TransportError
from .judge import CacheMode, ReplayStore, canonical_json
from .textutils import normalize_ws

logger = logging.getLogger('django_review_bench.retrieval')

S2_ENDPOINT = 'https://api.semanticscholar.org/graph/v1'
SEARCH_FIELDS = ('title', 'abstract', 'year', 'publicationTypes', 'externalIds')
DEFAULT_FETCH_LIMIT = 20
DEFAULT_MMR_K = 30
DEFAULT_MMR_LAMBDA = 0.5
DEFAULT_DEDUP_THRESHOLD = 0.96

NON_TECHNICAL_TYPES = frozenset({'Editorial', 'LettersAndComments', 'News'})
NON_TECHNICAL_TITLE_KEYWORDS = (
    'editorial', 'erratum', 'errata', 'corrigendum', 'correction to', 'retraction', 'retracted',
    "publisher's note", 'in memoriam', 'obituary', 'call for papers', 'preface', 'foreword',
    'front matter', 'table of contents',
)


@dataclasses.dataclass(frozen=True)
class SearchQuery:
    text: str
    limit: int = DEFAULT_FETCH_LIMIT
    fields_requested: Tuple[str, ...] = SEARCH_FIELDS

    def __post_init__(self):
        if self.limit < 1:
            raise ValueError(f"Query limit must be positive, got {self.limit}")
        object.__setattr__(self, 'fields_requested', tuple(self.fields_requested))

    def to_params(self) -> Dict[str, Any]:
        return {'query': self.text, 'limit': self.limit, 'fields': ','.join(self.fields_requested)}


@dataclasses.dataclass(frozen=True)
class CandidateWork:
    id: str
    title: str
    abstract: str
    year: Optional[int]
    relevance: float
    publication_types: Tuple[str, ...] = ()
    external_ids: Tuple[Tuple[str, str], ...] = ()

    def __post_init__(self):
        if not math.isfinite(self.relevance) or self.relevance < 0:
            raise ValueError(f"Candidate {self.id} has invalid relevance {self.relevance!r}")
        object.__setattr__(self, 'publication_types', tuple(self.publication_types or ()))
        object.__setattr__(self, 'external_ids', tuple(sorted(
            (str(k), str(v)) for k, v in dict(self.external_ids or ()).items())))

    @property
    def similarity_text(self) -> str:
        return normalize_ws(f"{self.title} {self.abstract}").lower()

    def to_dict(self) -> Dict[str, Any]:
        return {
            'id': self.id,
            'title': self.title,
            'abstract': self.abstract,
            'year': self.year,
            'relevance': self.relevance,
            'publication_types': list(self.publication_types),
            'external_ids': dict(self.external_ids),
        }

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> 'CandidateWork':
        return cls(id=data['id'], title=data.get('title') or '', abstract=data.get('abstract') or '',
                   year=data.get('year'), relevance=float(data.get('relevance', 0.0)),
                   publication_types=tuple(data.get('publication_types') or ()),
                   external_ids=tuple((data.get('external_ids') or {}).items()))


def _anchors(extraction) -> Tuple[str, List[str]]:
    if isinstance(extraction, Mapping):
        core_task = extraction.get('core_task') or ''
        contributions = extraction.get('contributions') or []
    else:
        core_task = getattr(extraction, 'core_task', '') or ''
        contributions = getattr(extraction, 'contributions', ()) or ()
    names = []
    for c in contributions:
        if isinstance(c, str):
            names.append(c)
        elif isinstance(c, Mapping):
            names.append(c.get('name') or '')
        else:
            names.append(getattr(c, 'name', '') or '')
    return normalize_ws(core_task), [normalize_ws(n) for n in names]


def build_queries(extraction, limit: int = DEFAULT_FETCH_LIMIT) -> List[SearchQuery]:
    core_task, names = _anchors(extraction)
    if not core_task:
        raise EmptyExtractionError('Paper extraction has no core_task to query')
    queries = [SearchQuery(core_task, limit)]
    for name in names:
        if not name:
            logger.warning('Skipping a contribution with an empty name')
            continue
        queries.append(SearchQuery(name, limit))
    return queries


def _is_non_technical(candidate: CandidateWork) -> bool:
    if candidate.publication_types:
        return any(t in NON_TECHNICAL_TYPES for t in candidate.publication_types)
    title = candidate.title.lower()
    return any(keyword in title for keyword in NON_TECHNICAL_TITLE_KEYWORDS)


def filter_candidates(raw: Iterable[CandidateWork], submission_year: int) -> List[CandidateWork]:
    kept = []
    for c in raw:
        if c.year is None or c.year > submission_year:
            continue
        if not (c.title or '').strip() or not (c.abstract or '').strip():
            continue
        if _is_non_technical(c):
            continue
        kept.append(c)
    return kept


def merge_candidates(batches: Iterable[Iterable[CandidateWork]]) -> List[CandidateWork]:
    """Union of per-query results keyed by id, keeping the highest relevance copy."""
    merged: Dict[str, CandidateWork] = {}
    for batch in batches:
        for c in batch:
            current = merged.get(c.id)
            if current is None or c.relevance > current.relevance:
                merged[c.id] = c
    return sorted(merged.values(), key=_rank_key)


def _rank_key(c: CandidateWork):
    return -c.relevance, c.id


def _trigrams(text: str) -> Counter:
    if len(text) < 3:
        return Counter([text]) if text else Counter()
    return Counter(text[i:i + 3] for i in range(len(text) - 2))


def trigram_cosine(a: str, b: str) -> float:
    ga, gb = _trigrams(normalize_ws(a).lower()), _trigrams(normalize_ws(b).lower())
    if not ga or not gb:
        return 0.0
    dot = sum(count * gb[g] for g, count in ga.items())
    norm_a = math.sqrt(sum(v * v for v in ga.values()))
    norm_b = math.sqrt(sum(v * v for v in gb.values()))
    return dot / (norm_a * norm_b)


def similarity_matrix(pool: Sequence[CandidateWork]) -> np.ndarray:
    """Pairwise trigram cosine over lowercased title+abstract."""
    grams = [_trigrams(c.similarity_text) for c in pool]
    vocabulary = {g: i for i, g in enumerate(sorted(set().union(*grams)))} if grams else {}
    counts = np.zeros((len(pool), max(1, len(vocabulary))), dtype=np.float64)
    for row, g in enumerate(grams):
        for gram, n in g.items():
            counts[row, vocabulary[gram]] = n
    norms = np.linalg.norm(counts, axis=1)
    norms[norms == 0] = 1.0
    unit = counts / norms[:, None]
    return np.clip(unit @ unit.T, 0.0, 1.0)


def dedup_candidates(pool: Sequence[CandidateWork], threshold: float = DEFAULT_DEDUP_THRESHOLD) -> List[CandidateWork]:
    if not 0.0 <= threshold <= 1.0:
        raise ValueError(f"Dedup threshold must lie in [0, 1], got {threshold}")
    ordered = sorted(pool, key=_rank_key)
    if not ordered:
        return []
    sim = similarity_matrix(ordered)
    retained: List[int] = []
    for i in range(len(ordered)):
        if retained and float(sim[i, retained].max()) >= threshold:
            logger.debug(f"Dropping near-duplicate candidate {ordered[i].id}")
            continue
        retained.append(i)
    return [ordered[i] for i in retained]


def mmr_select(pool: Sequence[CandidateWork], k: int = DEFAULT_MMR_K,
               lam: float = DEFAULT_MMR_LAMBDA) -> List[CandidateWork]:
    if k < 1:
        raise ValueError(f"MMR k must be at least 1, got {k}")
    if not 0.0 <= lam <= 1.0:
        raise ValueError(f"MMR lambda must lie in [0, 1], got {lam}")
    ordered = sorted(pool, key=_rank_key)
    if not ordered:
        return []
    sim = similarity_matrix(ordered)
    relevance = np.array([c.relevance for c in ordered])
    max_sim = np.zeros(len(ordered))
    remaining = list(range(len(ordered)))
    selected: List[int] = []
    while remaining and len(selected) < k:
        scores = lam * relevance[remaining] - (1.0 - lam) * max_sim[remaining]
        # remaining is kept in (relevance desc, id asc) order, so argmax resolves ties
        pick = remaining[int(np.argmax(scores))]
        selected.append(pick)
        remaining.remove(pick)
        max_sim = np.maximum(max_sim, sim[pick])
    return [ordered[i] for i in selected]


def candidate_from_api(item: Mapping[str, Any], rank: int) -> Optional[CandidateWork]:
    paper_id = item.get('paperId')
    if not paper_id:
        return None
    score = item.get('score', item.get('matchScore'))
    try:
        relevance = float(score) if score is not None else 1.0 / rank
    except (TypeError, ValueError):
        relevance = 1.0 / rank
    if not math.isfinite(relevance) or relevance < 0:
        relevance = 1.0 / rank
    year = item.get('year')
    return CandidateWork(
        id=str(paper_id),
        title=item.get('title') or '',
        abstract=item.get('abstract') or '',
        year=int(year) if year is not None else None,
        relevance=relevance,
        publication_types=tuple(item.get('publicationTypes') or ()),
        external_ids=tuple((item.get('externalIds') or {}).items()),
    )


class ScholarClient:
    """
    Semantic Scholar paper-search client with a per-minute rate limit and a
    replay cache keyed by (endpoint, query, limit, fields).
    """

    def __init__(self, store: ReplayStore, api_key: Optional[str] = None, endpoint: str = S2_ENDPOINT,
                 per_minute: int = 60, timeout: float = 30.0, max_attempts: int = 8,
                 session: Optional[requests.Session] = None, sleep: Callable[[float], None] = time.sleep):
        self.store = store
        self.api_key = api_key
        self.endpoint = endpoint.rstrip('/')
        self.timeout = timeout
        self.max_attempts = max(1, max_attempts)
        self.session = session or LimiterSession(per_minute=per_minute, burst=1)
        self.sleep = sleep
        self.requests_issued = 0

    @classmethod
    def from_env(cls, store: ReplayStore, api_key_env: str = 'S2_API_KEY', **kwargs) -> 'ScholarClient':
        return cls(store, api_key=os.environ.get(api_key_env) or None, **kwargs)

    def _headers(self) -> Dict[str, str]:
        headers: Dict[str, str] = {}
        if self.api_key:
            headers['x-api-key'] = self.api_key
        return headers

    def cache_key(self, query: SearchQuery) -> str:
        payload = {
            'endpoint': f"{self.endpoint}/paper/search",
            'query': query.text,
            'limit': query.limit,
            'fields': list(query.fields_requested),
        }
        return hashlib.sha256(canonical_json(payload).encode('utf-8')).hexdigest()

    def _get(self, query: SearchQuery) -> str:
        url = f"{self.endpoint}/paper/search"
        for attempt in range(self.max_attempts):
            try:
                response = self.session.get(url, params=query.to_params(), headers=self._headers(),
                                            timeout=self.timeout)
            except requests.RequestException as e:
                raise TransportError(f"Scholar search transport failure: {e}") from e
            self.requests_issued += 1
            if response.status_code == 429 or response.status_code >= 500:
                delay = min(2 ** attempt, 30)
                logger.warning(f"Scholar search answered {response.status_code}, waiting {delay}s")
                self.sleep(delay)
                continue
            if response.status_code >= 400:
                raise TransportError(f"Scholar search rejected '{query.text}' ({response.status_code})",
                                     status_code=response.status_code, transient=False)
            return response.text
        raise TransportError(f"Scholar search rate-limited too long for '{query.text}'", status_code=429)

    def search(self, query: SearchQuery) -> List[CandidateWork]:
        key = self.cache_key(query)
        mode = self.store.mode
        body = self.store.get(key) if mode != CacheMode.Passthrough else None
        if body is None:
            if mode == CacheMode.Replay:
                raise ReplayMissError(key, 'scholar-search')
            logger.info(f"Searching Semantic Scholar for '{query.text}' (limit {query.limit})")
            body = self._get(query)
            if mode == CacheMode.Record:
                self.store.put(key, body, {'query': query.text, 'limit': query.limit,
                                           'fields': list(query.fields_requested)})
        try:
            payload = json.loads(body)
        except ValueError as e:
            raise TransportError(f"Scholar search returned a non-JSON body: {e}", transient=False) from e
        candidates = []
        for rank, item in enumerate(payload.get('data') or [], start=1):
            c = candidate_from_api(item, rank)
            if c is not None:
                candidates.append(c)
        return candidates


def retrieve_candidates(extraction, submission_year: int, client: ScholarClient,
                        fetch_limit: int = DEFAULT_FETCH_LIMIT, k: int = DEFAULT_MMR_K,
                        lam: float = DEFAULT_MMR_LAMBDA, threshold: float = DEFAULT_DEDUP_THRESHOLD,
                        parallelism: int = 2) -> List[CandidateWork]:
    """merge -> filter -> dedup -> MMR over every query built from the extraction."""
    queries = build_queries(extraction, fetch_limit)
    with concurrent.futures.ThreadPoolExecutor(max_workers=max(1, parallelism)) as pool:
        batches = list(pool.map(client.search, queries))
    merged = merge_candidates(batches)
    filtered = filter_candidates(merged, submission_year)
    deduped = dedup_candidates(filtered, threshold)
    selected = mmr_select(deduped, k, lam)
    logger.info(f"Retrieved {len(merged)} candidates over {len(queries)} queries, "
                f"{len(filtered)} after filtering, {len(deduped)} after dedup, {len(selected)} selected")
    return selected
