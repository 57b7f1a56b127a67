# -*- coding: utf-8 -*-
"""
Novelty grounding: extract the claims a review makes about novelty, verify
each against retrieved prior work and aggregate the verdicts.
"""
import dataclasses
import enum
import logging
import re
from collections import Counter
from typing import Dict, List, Mapping, Optional, Sequence, Tuple

from .corpus import ReviewDocument
from .errors import EmptyInputError, SchemaViolation
from .judge import JudgeGateway, JudgeRequest
from .prompts import Phase
from .retrieval import CandidateWork
from .schemas import STANCES, VERDICT_LABELS
from .textutils import contains_verbatim, normalize_ws

logger = logging.getLogger('django_review_bench.novelty')

TOP_K = 3
STRICT_TOLERANCE = 1e-9

_CITATION_RES = (
    re.compile(r"\b[A-Z][\w'\-]+ (?:et al\.?|and [A-Z][\w'\-]+),? \(?(?:19|20)\d{2}[a-z]?\)?"),
    re.compile(r"\b[A-Z][\w'\-]+ \((?:19|20)\d{2}[a-z]?\)|\([A-Z][\w'\-]+, (?:19|20)\d{2}[a-z]?\)"),
    re.compile(r"\barXiv:\s?\d{4}\.\d{4,5}(?:v\d+)?", re.IGNORECASE),
    re.compile(r"\b10\.\d{4,9}/[^\s\"<>,;]+"),
    re.compile(r"https?://[^\s\)\]\"<>,]+"),
    re.compile(r"\[\d+(?:\s*[,\-]\s*\d+)*\]"),
)


class AggregationPolicy(str, enum.Enum):
    Top3Weighted = 'top3-weighted'
    Max = 'max'


@dataclasses.dataclass(frozen=True)
class Contribution:
    name: str
    author_claim_text: str = ''
    description: str = ''
    source_hint: str = ''

    @classmethod
    def from_dict(cls, data: Mapping) -> 'Contribution':
        return cls(name=data['name'], author_claim_text=data.get('author_claim_text', ''),
                   description=data.get('description', ''), source_hint=data.get('source_hint', ''))


@dataclasses.dataclass(frozen=True)
class PaperAnchors:
    core_task: str
    contributions: Tuple[Contribution, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, 'contributions', tuple(self.contributions))


@dataclasses.dataclass(frozen=True)
class NoveltyClaim:
    claim_id: str
    text: str
    stance: str
    confidence_lang: str
    prior_work_strings: Tuple[str, ...] = ()
    mentions_prior_work: Optional[bool] = None
    evidence_expected: Optional[str] = None

    def __post_init__(self):
        if self.stance not in STANCES:
            raise ValueError(f"Unknown stance '{self.stance}'")
        object.__setattr__(self, 'prior_work_strings', tuple(self.prior_work_strings))

    @classmethod
    def from_dict(cls, data: Mapping) -> 'NoveltyClaim':
        return cls(claim_id=data['claim_id'], text=data['text'], stance=data['stance'],
                   confidence_lang=data['confidence_lang'],
                   prior_work_strings=tuple(data.get('prior_work_strings') or ()),
                   mentions_prior_work=data.get('mentions_prior_work'),
                   evidence_expected=data.get('evidence_expected'))


@dataclasses.dataclass(frozen=True)
class NoveltyExtraction:
    core_task: str
    contributions: Tuple[Contribution, ...]
    key_terms: Tuple[str, ...]
    must_have_entities: Tuple[str, ...]
    claims: Tuple[NoveltyClaim, ...]
    all_citations_raw: Tuple[str, ...]


@dataclasses.dataclass(frozen=True)
class PairVerdict:
    claim_id: str
    candidate_id: str
    score: int
    label: str
    stance_alignment: Optional[str] = None
    calibration: Optional[str] = None
    explanation: str = ''
    classification: Mapping[str, int] = dataclasses.field(default_factory=dict)

    def __post_init__(self):
        if VERDICT_LABELS.get(self.score) != self.label:
            raise ValueError(f"Verdict score {self.score} is inconsistent with label '{self.label}'")


@dataclasses.dataclass(frozen=True)
class NoveltyResult:
    per_claim_scores: Tuple[float, ...]
    mean_raw: float
    ns: float
    sr: float
    ssr: float
    claims_per_review: Optional[float] = None


def find_citations(text: str) -> List[str]:
    """Citation-looking strings in order of first appearance."""
    hits = []
    for pattern in _CITATION_RES:
        hits.extend((m.start(), m.group(0).strip()) for m in pattern.finditer(text or ''))
    seen, ordered = set(), []
    for _, hit in sorted(hits):
        if hit not in seen:
            seen.add(hit)
            ordered.append(hit)
    return ordered


def _merge_citations(primary: Sequence[str], extra: Sequence[str]) -> Tuple[str, ...]:
    seen, merged = set(), []
    for c in list(primary) + list(extra):
        key = normalize_ws(c)
        if key and key not in seen:
            seen.add(key)
            merged.append(c)
    return tuple(merged)


def extract_targets(paper_text: str, review: ReviewDocument, gateway: JudgeGateway) -> NoveltyExtraction:
    review_text = review.text
    if not paper_text.strip() or not review_text.strip():
        raise EmptyInputError('Novelty extraction needs both paper and review text')
    response = gateway.invoke(JudgeRequest(Phase.NoveltyExtraction, {
        'paper_text': paper_text,
        'review_text': review_text,
    }))
    paper, review_part = response.parsed['paper'], response.parsed['review']
    claims = []
    for raw in review_part['novelty_claims']:
        claim = NoveltyClaim.from_dict(raw)
        if not contains_verbatim(review_text, claim.text):
            logger.warning(f"Dropping non-verbatim novelty claim {claim.claim_id} of review {review.reviewer_id}")
            continue
        claims.append(claim)
    return NoveltyExtraction(
        core_task=paper['core_task'],
        contributions=tuple(Contribution.from_dict(c) for c in paper['contributions']),
        key_terms=tuple(paper.get('key_terms') or ()),
        must_have_entities=tuple(paper.get('must_have_entities') or ()),
        claims=tuple(claims),
        all_citations_raw=_merge_citations(review_part.get('all_citations_raw') or (), find_citations(review_text)),
    )


def extract_paper_anchors(paper_text: str, gateway: JudgeGateway) -> PaperAnchors:
    """Core task and contributions of a paper, shared by every reviewer of it."""
    if not paper_text.strip():
        raise EmptyInputError('Paper anchors need a non-empty paper text')
    core = gateway.invoke(JudgeRequest(Phase.NoveltyCoreTask, {'paper_text': paper_text}))
    contributions = gateway.invoke(JudgeRequest(Phase.NoveltyContributions, {'paper_text': paper_text}))
    return PaperAnchors(core_task=normalize_ws(core.parsed['core_task']),
                        contributions=tuple(Contribution.from_dict(c) for c in contributions.parsed['contributions']))


def _rank_key(relevances: Mapping[str, float]):
    return lambda candidate_id: (-relevances.get(candidate_id, 0.0), candidate_id)


def verification_scope(pool: Sequence[CandidateWork], policy=AggregationPolicy.Top3Weighted) -> List[CandidateWork]:
    """Candidates the aggregation policy can use: the top three by relevance, or all of them."""
    ordered = sorted(pool, key=lambda c: (-c.relevance, c.id))
    if AggregationPolicy(policy) == AggregationPolicy.Top3Weighted:
        return ordered[:TOP_K]
    return ordered


def verify_pair(claim: NoveltyClaim, candidate: CandidateWork, paper_context: str,
                gateway: JudgeGateway) -> PairVerdict:
    if not ((candidate.title or '').strip() and (candidate.abstract or '').strip()):
        raise EmptyInputError(f"Candidate {candidate.id} lacks a title or abstract")
    response = gateway.invoke(JudgeRequest(Phase.NoveltyVerification, {
        'review_sentence': claim.text,
        'paper_abstract_intro': paper_context,
        'related_work_title_abstract': f"Title: {candidate.title}\nAbstract: {candidate.abstract}",
    }))
    doc = response.parsed
    return PairVerdict(
        claim_id=claim.claim_id,
        candidate_id=candidate.id,
        score=doc['score'],
        label=doc['label'],
        stance_alignment=doc.get('stance_alignment'),
        calibration=doc.get('calibration'),
        explanation=doc.get('explanation', ''),
        classification=dict(doc.get('classification') or {}),
    )


def aggregate_claim(verdicts: Sequence[PairVerdict], relevances: Mapping[str, float],
                    policy=AggregationPolicy.Top3Weighted) -> float:
    """
    Relevance-weighted mean over the three most relevant verdicts, ties by
    candidate id. When every relevance is zero the first three verdicts in
    input order are averaged without weights.
    """
    if not verdicts:
        raise EmptyInputError('Cannot aggregate a claim without verdicts')
    if AggregationPolicy(policy) == AggregationPolicy.Max:
        return float(max(v.score for v in verdicts))
    if all(relevances.get(v.candidate_id, 0.0) == 0 for v in verdicts):
        selected = verdicts[:TOP_K]
        return sum(v.score for v in selected) / len(selected)
    key = _rank_key(relevances)
    selected = sorted(verdicts, key=lambda v: key(v.candidate_id))[:TOP_K]
    weights = [relevances.get(v.candidate_id, 0.0) for v in selected]
    total = sum(weights)
    return sum(v.score * w for v, w in zip(selected, weights)) / total


def compute_novelty_metrics(per_claim: Sequence[float],
                            claims_per_review: Optional[float] = None) -> Optional[NoveltyResult]:
    """NS/SR/SSR over per-claim scores; ``None`` when the review made no claims."""
    if not per_claim:
        return None
    scores = tuple(float(s) for s in per_claim)
    mean = sum(scores) / len(scores)
    return NoveltyResult(
        per_claim_scores=scores,
        mean_raw=mean,
        ns=(mean + 2.0) / 4.0,
        sr=sum(1 for s in scores if s >= 1.0 - STRICT_TOLERANCE) / len(scores),
        ssr=sum(1 for s in scores if abs(s - 2.0) <= STRICT_TOLERANCE) / len(scores),
        claims_per_review=claims_per_review,
    )


def stance_counts(claims: Sequence[NoveltyClaim]) -> Dict[str, int]:
    counts = Counter(c.stance for c in claims)
    return {s: counts.get(s, 0) for s in STANCES}


def stance_distribution(claims: Sequence[NoveltyClaim]) -> Tuple[float, ...]:
    """Stance mass in (not_novel, somewhat_novel, novel, unclear) order."""
    if not claims:
        raise EmptyInputError('Stance distribution needs at least one claim')
    counts = stance_counts(claims)
    return tuple(counts[s] / len(claims) for s in STANCES)


def score_claims(claims: Sequence[NoveltyClaim], pool: Sequence[CandidateWork], paper_context: str,
                 gateway: JudgeGateway, policy=AggregationPolicy.Top3Weighted
                 ) -> Tuple[List[PairVerdict], Dict[str, float]]:
    """
    Verifies every claim against the policy's scope of the candidate pool.

    A verdict the judge answers off-schema, or a candidate without a title or
    abstract, is dropped for that pair only; a claim left with no verdicts
    gets no score.
    """
    scope = verification_scope(pool, policy)
    relevances = {c.id: c.relevance for c in pool}
    verdicts: List[PairVerdict] = []
    per_claim: Dict[str, float] = {}
    for claim in claims:
        claim_verdicts = []
        for candidate in scope:
            try:
                claim_verdicts.append(verify_pair(claim, candidate, paper_context, gateway))
            except (SchemaViolation, EmptyInputError) as e:
                logger.warning(f"Dropping verdict for claim {claim.claim_id} vs {candidate.id}: {e}")
        verdicts.extend(claim_verdicts)
        if claim_verdicts:
            per_claim[claim.claim_id] = aggregate_claim(claim_verdicts, relevances, policy)
        else:
            logger.warning(f"Claim {claim.claim_id} has no verdicts and is left unscored")
    return verdicts, per_claim
