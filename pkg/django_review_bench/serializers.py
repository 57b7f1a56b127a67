# -*- coding: utf-8 -*-
from typing import Any, Dict, Optional

from .constructiveness import AtomicComment, ConstructivenessResult
from .depth import ArgumentUnit, DoAResult
from .errors import ErrorDescription, ErrorTypes
from .flaws import FlawScores, MicroFlaw, RankedFlawList
from .models import BenchRun, ProfileRecord
from .novelty import NoveltyClaim, NoveltyResult, PairVerdict, PaperAnchors
from .retrieval import CandidateWork


def serialize_error(e: ErrorDescription) -> Dict[str, Any]:
    error_type, message = e
    return {'type': error_type.name, 'code': int(error_type), 'message': message}


def error_from_dict(d: Dict[str, Any]) -> ErrorDescription:
    return ErrorTypes(d['code']), d['message']


def serialize_doa_result(r: Optional[DoAResult]):
    if r is None:
        return None
    return {
        'total_units': r.total_units,
        'premise_count': r.premise_count,
        'premise_ratio': r.premise_ratio,
        'grounding_score': r.grounding_score,
        'doa': r.doa,
        'aspect_histogram': {k: dict(v) for k, v in r.aspect_histogram.items()},
        'grounding_histogram': dict(r.grounding_histogram),
        'aspect_doa': dict(r.aspect_doa),
    }


def doa_result_from_dict(d) -> Optional[DoAResult]:
    return DoAResult(**d) if d is not None else None


def serialize_novelty_result(r: Optional[NoveltyResult]):
    if r is None:
        return None
    return {
        'per_claim_scores': list(r.per_claim_scores),
        'mean_raw': r.mean_raw,
        'ns': r.ns,
        'sr': r.sr,
        'ssr': r.ssr,
        'claims_per_review': r.claims_per_review,
    }


def novelty_result_from_dict(d) -> Optional[NoveltyResult]:
    if d is None:
        return None
    return NoveltyResult(**dict(d, per_claim_scores=tuple(d['per_claim_scores'])))


def serialize_flaw_scores(r: Optional[FlawScores]):
    if r is None:
        return None
    return {
        'critical_recall': r.critical_recall,
        'minor_recall': r.minor_recall,
        'ncps': r.ncps,
        'counts': dict(r.counts),
        'topic_counts': {k: dict(v) for k, v in r.topic_counts.items()},
        'unlocated': r.unlocated,
    }


def flaw_scores_from_dict(d) -> Optional[FlawScores]:
    return FlawScores(**d) if d is not None else None


def serialize_constructiveness_result(r: Optional[ConstructivenessResult]):
    if r is None:
        return None
    return {
        'per_arc_clc': list(r.per_arc_clc),
        'mcs': r.mcs,
        'dim_means': list(r.dim_means),
        'ar': r.ar,
        'sd': r.sd,
        'cd': r.cd,
        'type_counts': dict(r.type_counts),
    }


def constructiveness_result_from_dict(d) -> Optional[ConstructivenessResult]:
    if d is None:
        return None
    return ConstructivenessResult(**dict(d, per_arc_clc=tuple(d['per_arc_clc']), dim_means=tuple(d['dim_means'])))


def serialize_argument_unit(u: ArgumentUnit):
    return {'ordinal': u.ordinal, 'text': u.text, 'role': u.role.value, 'aspect': u.aspect, 'grounding': u.grounding}


def serialize_claim(c: NoveltyClaim):
    return {
        'claim_id': c.claim_id,
        'text': c.text,
        'stance': c.stance,
        'confidence_lang': c.confidence_lang,
        'prior_work_strings': list(c.prior_work_strings),
        'mentions_prior_work': c.mentions_prior_work,
        'evidence_expected': c.evidence_expected,
    }


def serialize_verdict(v: PairVerdict):
    return {
        'claim_id': v.claim_id,
        'candidate_id': v.candidate_id,
        'score': v.score,
        'label': v.label,
        'stance_alignment': v.stance_alignment,
        'calibration': v.calibration,
        'explanation': v.explanation,
        'classification': dict(v.classification),
    }


def serialize_anchors(a: PaperAnchors):
    return {
        'core_task': a.core_task,
        'contributions': [{'name': c.name, 'author_claim_text': c.author_claim_text,
                           'description': c.description, 'source_hint': c.source_hint} for c in a.contributions],
    }


def serialize_candidate(c: CandidateWork):
    return c.to_dict()


def serialize_micro_flaw(f: MicroFlaw):
    return {
        'flaw_id': f.flaw_id,
        'description': f.description,
        'macro_topic': f.macro_topic,
        'arguments': [{'reviewer_id': a.reviewer_id, 'text': a.text} for a in f.arguments],
        'is_valid': f.is_valid,
        'severity': f.severity,
        'rationale': f.rationale,
    }


def serialize_ranked_list(r: RankedFlawList):
    return {
        'reviewer_id': r.reviewer_id,
        'entries': [{'flaw_id': e.flaw_id, 'position': e.position, 'weight': e.weight} for e in r.entries],
        'unlocated': list(r.unlocated),
    }


def serialize_arc(a: AtomicComment):
    return {
        'arc_id': a.arc_id,
        'text': a.text,
        'anchor_quote': a.anchor_quote,
        'comment_type': a.comment_type,
        'd_scores': list(a.d_scores) if a.d_scores is not None else None,
    }


def serialize_bench_run_model(m: BenchRun):
    return {
        'id': m.id,
        'status': m.status,
        'cache_mode': m.cache_mode,
        'judge_backend': m.judge_backend,
        'output_dir': m.output_dir,
        'paper_count': m.paper_count,
        'profile_count': m.profile_count,
        'failed_granules': m.failed_granules,
        'created': int(m.created.timestamp()),
        'modified': int(m.modified.timestamp()),
    }


def serialize_profile_record_model(m: ProfileRecord):
    return {
        'id': m.id,
        'run': m.run_id,
        'paper_id': m.paper.paper_id,
        'reviewer_id': m.reviewer_id,
        'reviewer_label': m.reviewer_label,
        'complete': m.complete,
        'errors': m.errors,
        'created': int(m.created.timestamp()),
    }
