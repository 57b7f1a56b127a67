# -*- coding: utf-8 -*-
"""
Pipeline driver.

A granule is one (paper, reviewer, dimension) triple. Paper-level stages
(novelty anchors and retrieval, the flaw bank) run once per paper and feed
every reviewer of it. A failing granule records an ``ErrorDescription`` in
its profile and never aborts the run.
"""
import asyncio
import dataclasses
import json
import logging
import os
from typing import Any, Awaitable, Dict, List, Optional, Sequence, Tuple

from asgiref.sync import async_to_sync, sync_to_async
from channels.db import database_sync_to_async
from django.utils import timezone

from . import constructiveness, depth, flaws, novelty
from .conf import RunConfig
from .constructiveness import ConstructivenessResult
from .corpus import CorpusEntry, ReviewerBundle, bundle_reviews
from .depth import DoAResult
from .errors import ErrorDescription, describe_exception
from .flaws import FlawScores, MicroFlaw
from .judge import DecodeParams, JudgeGateway, ReplayStore, ScopedGateway, atomic_write, build_backend
from .models import BenchRun, PaperRecord, ProfileRecord
from .novelty import NoveltyResult, PaperAnchors
from .retrieval import CandidateWork, ScholarClient, retrieve_candidates
from .serializers import (constructiveness_result_from_dict, doa_result_from_dict, error_from_dict,
                          flaw_scores_from_dict, novelty_result_from_dict, serialize_anchors, serialize_arc,
                          serialize_argument_unit, serialize_candidate, serialize_claim,
                          serialize_constructiveness_result, serialize_doa_result, serialize_error,
                          serialize_flaw_scores, serialize_micro_flaw, serialize_novelty_result,
                          serialize_ranked_list, serialize_verdict)

logger = logging.getLogger('django_review_bench.pipelines')

PROFILE_DIR = 'profiles'
MANIFEST_NAME = 'manifest.json'


@dataclasses.dataclass
class DimensionProfile:
    paper_id: str
    reviewer_id: str
    reviewer_label: str
    venue: str
    year: int
    decision: str
    review_count: int
    doa: Optional[DoAResult] = None
    novelty: Optional[NoveltyResult] = None
    flaws: Optional[FlawScores] = None
    mcs: Optional[ConstructivenessResult] = None
    errors: Dict[str, ErrorDescription] = dataclasses.field(default_factory=dict)
    extras: Dict[str, Any] = dataclasses.field(default_factory=dict)
    artifacts: Dict[str, Any] = dataclasses.field(default_factory=dict)
    provenance: Dict[str, Any] = dataclasses.field(default_factory=dict)

    @property
    def key(self) -> Tuple[str, str]:
        return self.paper_id, self.reviewer_id

    @property
    def is_human(self) -> bool:
        return self.reviewer_label == 'human'

    def complete(self, dimensions: Sequence[str]) -> bool:
        return not any(d in self.errors for d in dimensions)

    @property
    def file_name(self) -> str:
        return f"{self.paper_id}__{self.reviewer_id}.json"

    def to_dict(self) -> Dict[str, Any]:
        return {
            'paper_id': self.paper_id,
            'reviewer_id': self.reviewer_id,
            'reviewer_label': self.reviewer_label,
            'venue': self.venue,
            'year': self.year,
            'decision': self.decision,
            'review_count': self.review_count,
            'doa': serialize_doa_result(self.doa),
            'novelty': serialize_novelty_result(self.novelty),
            'flaws': serialize_flaw_scores(self.flaws),
            'mcs': serialize_constructiveness_result(self.mcs),
            'errors': {k: serialize_error(v) for k, v in self.errors.items()},
            'extras': self.extras,
            'artifacts': self.artifacts,
            'provenance': self.provenance,
        }

    @classmethod
    def from_dict(cls, d: Dict[str, Any]) -> 'DimensionProfile':
        return cls(
            paper_id=d['paper_id'],
            reviewer_id=d['reviewer_id'],
            reviewer_label=d['reviewer_label'],
            venue=d['venue'],
            year=d['year'],
            decision=d['decision'],
            review_count=d['review_count'],
            doa=doa_result_from_dict(d.get('doa')),
            novelty=novelty_result_from_dict(d.get('novelty')),
            flaws=flaw_scores_from_dict(d.get('flaws')),
            mcs=constructiveness_result_from_dict(d.get('mcs')),
            errors={k: error_from_dict(v) for k, v in (d.get('errors') or {}).items()},
            extras=d.get('extras') or {},
            artifacts=d.get('artifacts') or {},
            provenance=d.get('provenance') or {},
        )


@dataclasses.dataclass
class PaperStage:
    """Outputs shared by every reviewer of a paper, or the error that prevented them."""
    anchors: Optional[PaperAnchors] = None
    pool: Optional[List[CandidateWork]] = None
    novelty_error: Optional[ErrorDescription] = None
    novelty_digests: Tuple[str, ...] = ()
    flaw_bank: Optional[List[MicroFlaw]] = None
    flaw_error: Optional[ErrorDescription] = None
    flaw_digests: Tuple[str, ...] = ()


def dump_json(path: str, payload) -> None:
    atomic_write(path, (json.dumps(payload, sort_keys=True, indent=2, ensure_ascii=False) + '\n').encode('utf-8'))


def build_gateway(config: RunConfig, backend=None) -> JudgeGateway:
    store = ReplayStore(os.path.join(config.cache_dir, 'judge'), config.cache_mode)
    if backend is None:
        backend = build_backend(config.judge_backend, config.judge_model, config.judge_api_key_env,
                                endpoint=config.judge_endpoint or None, timeout=config.judge_timeout)
    return JudgeGateway(backend, store, max_attempts=config.judge_max_attempts, backoff=config.judge_backoff,
                        parallelism=config.parallelism)


def build_scholar(config: RunConfig, session=None) -> ScholarClient:
    store = ReplayStore(os.path.join(config.cache_dir, 'retrieval'), config.cache_mode)
    return ScholarClient.from_env(store, api_key_env=config.s2_api_key_env, endpoint=config.s2_endpoint,
                                  per_minute=config.s2_per_minute, session=session)


class BenchPipeline:
    def __init__(self, config: RunConfig, gateway: JudgeGateway, scholar: ScholarClient):
        self.config = config
        self.gateway = gateway
        self.scholar = scholar
        self.params = DecodeParams(temperature=config.temperature, top_p=config.top_p)

    def _scoped(self) -> ScopedGateway:
        return ScopedGateway(self.gateway, self.params)

    # Paper-level stages

    def novelty_stage(self, entry: CorpusEntry, stage: PaperStage):
        scoped = self._scoped()
        try:
            stage.anchors = novelty.extract_paper_anchors(entry.paper_text, scoped)
            stage.pool = retrieve_candidates(
                stage.anchors, entry.year, self.scholar, fetch_limit=self.config.fetch_limit,
                k=self.config.mmr_k, lam=self.config.mmr_lambda, threshold=self.config.dedup_threshold,
                parallelism=self.config.retrieval_parallelism)
        except Exception as e:
            logger.error(f"Novelty anchors for paper {entry.paper_id} failed: {e}")
            stage.novelty_error = describe_exception(e)
        stage.novelty_digests = tuple(sorted(scoped.digests))

    def flaw_stage(self, entry: CorpusEntry, bundles: Sequence[ReviewerBundle], stage: PaperStage):
        scoped = self._scoped()
        policy = self.config.policy_for('flaw')
        try:
            docs = [doc for b in bundles for doc in b.units(policy)]
            atomized = flaws.atomize_flaws(docs, scoped)
            stage.flaw_bank = flaws.adjudicate_flaws(atomized, entry.paper_text, scoped)
        except Exception as e:
            logger.error(f"Flaw bank for paper {entry.paper_id} failed: {e}")
            stage.flaw_error = describe_exception(e)
        stage.flaw_digests = tuple(sorted(scoped.digests))

    # Granules

    def doa_granule(self, entry: CorpusEntry, bundle: ReviewerBundle, profile: DimensionProfile, scoped):
        pooled, first_error = [], None
        docs = bundle.units(self.config.policy_for('doa'))
        for doc in docs:
            try:
                units = depth.analyze_review(doc, scoped)
            except Exception as e:
                if len(docs) == 1:
                    raise
                logger.warning(f"Excluding review {doc.reviewer_id} of paper {entry.paper_id} from DoA: {e}")
                first_error = first_error or e
                continue
            offset = len(pooled)
            pooled.extend(dataclasses.replace(u, ordinal=offset + i) for i, u in enumerate(units))
        if not pooled and first_error is not None:
            raise first_error
        profile.doa = depth.compute_doa(pooled)
        profile.artifacts['doa_units'] = [serialize_argument_unit(u) for u in pooled]

    def novelty_granule(self, entry: CorpusEntry, bundle: ReviewerBundle, profile: DimensionProfile, scoped,
                        stage: PaperStage):
        if stage.novelty_error is not None:
            profile.errors['novelty'] = stage.novelty_error
            return
        docs = bundle.units(self.config.policy_for('novelty'))
        claims = []
        citations = []
        for doc in docs:
            extraction = novelty.extract_targets(entry.paper_text, doc, scoped)
            for claim in extraction.claims:
                if len(docs) > 1:
                    claim = dataclasses.replace(claim, claim_id=f"{doc.reviewer_id}:{claim.claim_id}")
                claims.append(claim)
            citations.extend(extraction.all_citations_raw)
        context = entry.paper_context(self.config.paper_context_chars)
        verdicts, per_claim = novelty.score_claims(claims, stage.pool, context, scoped,
                                                   self.config.aggregation_policy)
        review_count = entry.human_count if bundle.label == 'human' else len(bundle.reviews)
        per_review = len(claims) / review_count if review_count else float(len(claims))
        scores = [per_claim[c.claim_id] for c in claims if c.claim_id in per_claim]
        profile.novelty = novelty.compute_novelty_metrics(scores, per_review)
        profile.extras['claim_count'] = len(claims)
        profile.extras['claims_per_review'] = per_review
        profile.extras['stance_counts'] = novelty.stance_counts(claims)
        profile.artifacts['novelty_claims'] = [serialize_claim(c) for c in claims]
        profile.artifacts['novelty_verdicts'] = [serialize_verdict(v) for v in verdicts]
        profile.artifacts['novelty_citations'] = citations
        profile.artifacts['novelty_anchors'] = serialize_anchors(stage.anchors)
        profile.artifacts['novelty_pool'] = [serialize_candidate(c) for c in stage.pool]

    def flaw_granule(self, entry: CorpusEntry, bundle: ReviewerBundle, profile: DimensionProfile,
                     stage: PaperStage):
        if stage.flaw_error is not None:
            profile.errors['flaw'] = stage.flaw_error
            return
        docs = bundle.units(self.config.policy_for('flaw'))
        reviewer_ids = [d.reviewer_id for d in docs]
        ranked = [flaws.recover_positions(doc, stage.flaw_bank, [doc.reviewer_id],
                                          self.config.experimental_severity_weights) for doc in docs]
        profile.flaws = flaws.score_reviewer(stage.flaw_bank, reviewer_ids, ranked)
        profile.artifacts['flaw_bank'] = [serialize_micro_flaw(f) for f in stage.flaw_bank
                                          if f.arguments_of(reviewer_ids)]
        profile.artifacts['flaw_rankings'] = [serialize_ranked_list(r) for r in ranked]

    def mcs_granule(self, entry: CorpusEntry, bundle: ReviewerBundle, profile: DimensionProfile, scoped):
        arcs = []
        for doc in bundle.units(self.config.policy_for('mcs')):
            arcs.extend(constructiveness.analyze_review(doc, scoped))
        profile.mcs = constructiveness.compute_mcs(arcs)
        profile.extras['arc_count'] = len(arcs)
        profile.artifacts['arcs'] = [serialize_arc(a) for a in arcs]

    def run_granule(self, dimension: str, entry: CorpusEntry, bundle: ReviewerBundle, profile: DimensionProfile,
                    stage: PaperStage) -> Tuple[str, ...]:
        scoped = self._scoped()
        logger.info(f"Granule {entry.paper_id}/{bundle.reviewer_id}/{dimension} started")
        try:
            if dimension == 'doa':
                self.doa_granule(entry, bundle, profile, scoped)
            elif dimension == 'novelty':
                self.novelty_granule(entry, bundle, profile, scoped, stage)
            elif dimension == 'flaw':
                self.flaw_granule(entry, bundle, profile, stage)
            else:
                self.mcs_granule(entry, bundle, profile, scoped)
        except Exception as e:
            logger.error(f"Granule {entry.paper_id}/{bundle.reviewer_id}/{dimension} failed: {e}")
            profile.errors[dimension] = describe_exception(e)
        digests = set(scoped.digests)
        if dimension == 'novelty':
            digests.update(stage.novelty_digests)
        elif dimension == 'flaw':
            digests.update(stage.flaw_digests)
        return tuple(sorted(digests))

    async def arun_paper(self, entry: CorpusEntry, limiter: asyncio.Semaphore) -> List[DimensionProfile]:
        bundles = bundle_reviews(entry)
        stage = PaperStage()
        dimensions = self.config.dimensions
        paper_jobs = []
        if 'novelty' in dimensions:
            paper_jobs.append(sync_to_async(self.novelty_stage, thread_sensitive=False)(entry, stage))
        if 'flaw' in dimensions:
            paper_jobs.append(sync_to_async(self.flaw_stage, thread_sensitive=False)(entry, bundles, stage))
        async with limiter:
            await asyncio.gather(*paper_jobs)

        profiles = {}
        for b in bundles:
            review_count = entry.human_count if b.label == 'human' else len(b.reviews)
            profiles[b.reviewer_id] = DimensionProfile(
                paper_id=entry.paper_id, reviewer_id=b.reviewer_id, reviewer_label=b.label, venue=entry.venue,
                year=entry.year, decision=entry.decision, review_count=review_count)

        async def granule(dimension: str, bundle: ReviewerBundle):
            async with limiter:
                return dimension, bundle.reviewer_id, await sync_to_async(self.run_granule, thread_sensitive=False)(
                    dimension, entry, bundle, profiles[bundle.reviewer_id], stage)

        results = await asyncio.gather(*(granule(d, b) for b in bundles for d in dimensions))
        digests: Dict[str, Dict[str, List[str]]] = {}
        for dimension, reviewer_id, granule_digests in results:
            digests.setdefault(reviewer_id, {})[dimension] = list(granule_digests)
        for reviewer_id, profile in profiles.items():
            profile.provenance = {
                'backend': self.gateway.backend_id,
                'digests': {d: digests[reviewer_id].get(d, []) for d in dimensions},
            }
        return [profiles[k] for k in sorted(profiles)]


@database_sync_to_async
def open_run(config: RunConfig, backend_id: str) -> Awaitable[BenchRun]:
    return BenchRun.objects.create(config=config.to_dict(), cache_mode=config.cache_mode,
                                   judge_backend=backend_id, output_dir=config.output_dir)


@database_sync_to_async
def record_profiles(run: BenchRun, entry: CorpusEntry, profiles: List[DimensionProfile],
                    dimensions: Sequence[str]) -> Awaitable[None]:
    paper, _ = PaperRecord.objects.update_or_create(
        paper_id=entry.paper_id,
        defaults={'venue': entry.venue, 'year': entry.year, 'decision': entry.decision, 'title': entry.title})
    for p in profiles:
        data = p.to_dict()
        ProfileRecord.objects.update_or_create(
            run=run, paper=paper, reviewer_id=p.reviewer_id,
            defaults={'reviewer_label': p.reviewer_label, 'profile': data, 'errors': data['errors'],
                      'complete': p.complete(dimensions)})


@database_sync_to_async
def close_run(run: BenchRun, status: str, papers: int, profiles: List[DimensionProfile],
              dimensions: Sequence[str]) -> Awaitable[BenchRun]:
    run.status = status
    run.paper_count = papers
    run.profile_count = len(profiles)
    run.failed_granules = sum(len([d for d in dimensions if d in p.errors]) for p in profiles)
    run.save(update_fields=('status', 'paper_count', 'profile_count', 'failed_granules', 'modified'))
    return run


def write_profiles(profiles: Sequence[DimensionProfile], out_dir: str) -> List[str]:
    directory = os.path.join(out_dir, PROFILE_DIR)
    paths = []
    for p in profiles:
        path = os.path.join(directory, p.file_name)
        dump_json(path, p.to_dict())
        paths.append(path)
    return paths


def load_profiles(directory: str) -> List[DimensionProfile]:
    if os.path.isdir(os.path.join(directory, PROFILE_DIR)):
        directory = os.path.join(directory, PROFILE_DIR)
    profiles = []
    for name in sorted(os.listdir(directory)):
        if name.endswith('.json'):
            with open(os.path.join(directory, name), 'r', encoding='utf-8') as fh:
                profiles.append(DimensionProfile.from_dict(json.load(fh)))
    return sorted(profiles, key=lambda p: p.key)


async def arun_pipelines(corpus: Sequence[CorpusEntry], config: RunConfig, gateway: Optional[JudgeGateway] = None,
                         scholar: Optional[ScholarClient] = None, ledger: Optional[bool] = None
                         ) -> List[DimensionProfile]:
    gateway = gateway or build_gateway(config)
    scholar = scholar or build_scholar(config)
    ledger = config.ledger if ledger is None else ledger
    pipeline = BenchPipeline(config, gateway, scholar)
    limiter = asyncio.Semaphore(config.parallelism)
    started = timezone.now()
    run = await open_run(config, gateway.backend_id) if ledger else None
    logger.info(f"Running {list(config.dimensions)} over {len(corpus)} papers "
                f"(cache {config.cache_mode}, judge {gateway.backend_id})")

    async def paper(entry: CorpusEntry):
        profiles = await pipeline.arun_paper(entry, limiter)
        if run is not None:
            await record_profiles(run, entry, profiles, config.dimensions)
        return profiles

    try:
        batches = await asyncio.gather(*(paper(e) for e in corpus))
    except BaseException:
        if run is not None:
            await close_run(run, BenchRun.Status.FAILED, len(corpus), [], config.dimensions)
        raise
    profiles = sorted((p for batch in batches for p in batch), key=lambda p: p.key)

    write_profiles(profiles, config.output_dir)
    dump_json(os.path.join(config.output_dir, MANIFEST_NAME), {
        'config': config.to_dict(),
        'started': started.isoformat(),
        'finished': timezone.now().isoformat(),
        'judge_backend': gateway.backend_id,
        'cache_mode': config.cache_mode,
        'gateway': gateway.stats.to_dict(),
        'retrieval_requests': scholar.requests_issued,
        'digests': sorted(gateway.digests),
        'profiles': [{'file': p.file_name, 'paper_id': p.paper_id, 'reviewer_id': p.reviewer_id,
                      'complete': p.complete(config.dimensions)} for p in profiles],
        'run': run.pk if run is not None else None,
    })
    if run is not None:
        await close_run(run, BenchRun.Status.FINISHED, len(corpus), profiles, config.dimensions)
    failed = sum(1 for p in profiles for d in config.dimensions if d in p.errors)
    logger.info(f"Wrote {len(profiles)} profiles to {config.output_dir} ({failed} failed granules)")
    return profiles


def run_pipelines(corpus: Sequence[CorpusEntry], config: RunConfig, **kwargs) -> List[DimensionProfile]:
    return async_to_sync(arun_pipelines)(corpus, config, **kwargs)
