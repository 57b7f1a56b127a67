# -*- coding: utf-8 -*-
"""
Consensus flaw bank for one paper, per-reviewer recall by severity and the
prioritization score over each review's own flaw order.
"""
import dataclasses
import logging
import math
from collections import Counter
from typing import Dict, Iterable, List, Mapping, Optional, Sequence, Tuple

from .corpus import ReviewDocument
from .errors import EmptyInputError, UnlocatableArgument
from .judge import JudgeGateway, JudgeRequest, canonical_json, invoke_keyed
from .prompts import Phase
from .schemas import MACRO_TOPICS, SEVERITIES
from .textutils import find_normalized, normalize_ws

logger = logging.getLogger('django_review_bench.flaws')

CRITICAL, MINOR = SEVERITIES
SEVERITY_WEIGHTS = {CRITICAL: 2, MINOR: 1}
FLAW_SECTIONS = ('summary', 'weaknesses', 'questions')


@dataclasses.dataclass(frozen=True)
class FlawArgument:
    reviewer_id: str
    text: str


@dataclasses.dataclass(frozen=True)
class MicroFlaw:
    flaw_id: str
    description: str
    macro_topic: str
    arguments: Tuple[FlawArgument, ...]
    is_valid: Optional[bool] = None
    severity: Optional[str] = None
    rationale: str = ''

    def __post_init__(self):
        object.__setattr__(self, 'arguments', tuple(self.arguments))
        if self.macro_topic not in MACRO_TOPICS:
            raise ValueError(f"Unknown macro topic '{self.macro_topic}'")
        if self.is_valid and self.severity not in SEVERITIES:
            raise ValueError(f"Valid flaw {self.flaw_id} needs a severity")
        if not self.is_valid and self.severity is not None:
            raise ValueError(f"Flaw {self.flaw_id} is not valid and cannot carry a severity")

    @property
    def contributing_reviewers(self) -> Tuple[str, ...]:
        return tuple(sorted({a.reviewer_id for a in self.arguments}))

    def arguments_of(self, reviewer_ids: Iterable[str]) -> List[FlawArgument]:
        ids = set(reviewer_ids)
        return [a for a in self.arguments if a.reviewer_id in ids]


@dataclasses.dataclass(frozen=True)
class RankedEntry:
    flaw_id: str
    position: int
    weight: float


@dataclasses.dataclass(frozen=True)
class RankedFlawList:
    reviewer_id: str
    entries: Tuple[RankedEntry, ...]
    unlocated: Tuple[str, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, 'entries', tuple(self.entries))
        object.__setattr__(self, 'unlocated', tuple(self.unlocated))
        positions = [e.position for e in self.entries]
        if any(b <= a for a, b in zip(positions, positions[1:])):
            raise ValueError('Ranked flaw positions must be strictly increasing')


@dataclasses.dataclass(frozen=True)
class FlawScores:
    critical_recall: Optional[float]
    minor_recall: Optional[float]
    ncps: Optional[float]
    counts: Mapping[str, int]
    topic_counts: Mapping[str, Mapping[str, int]]
    unlocated: int = 0


def flaw_input_text(reviews: Sequence[ReviewDocument]) -> str:
    blocks = []
    for review in reviews:
        body = review.section_text(*FLAW_SECTIONS)
        if body.strip():
            blocks.append(f"=== REVIEWER {review.reviewer_id} ===\n{body}")
    return '\n\n'.join(blocks)


def atomize_flaws(reviews: Sequence[ReviewDocument], gateway: JudgeGateway) -> List[MicroFlaw]:
    input_text = flaw_input_text(reviews)
    if not input_text:
        raise EmptyInputError('No review has Summary, Weaknesses or Questions content')
    known = {r.reviewer_id for r in reviews}
    response = gateway.invoke(JudgeRequest(Phase.FlawAtomization, {'input_text': input_text}))
    flaws, seen = [], set()
    for raw in response.parsed['micro_flaws']:
        if raw['flaw_id'] in seen:
            logger.warning(f"Dropping repeated flaw id {raw['flaw_id']}")
            continue
        arguments = []
        for arg in raw['arguments']:
            if arg['reviewer_id'] not in known:
                logger.warning(f"Flaw {raw['flaw_id']} cites unknown reviewer '{arg['reviewer_id']}', "
                               "dropping argument")
                continue
            arguments.append(FlawArgument(arg['reviewer_id'], arg['text']))
        if not arguments:
            logger.warning(f"Flaw {raw['flaw_id']} has no attributable argument, dropping it")
            continue
        seen.add(raw['flaw_id'])
        flaws.append(MicroFlaw(raw['flaw_id'], raw['description'], raw['macro_topic'], tuple(arguments)))
    logger.info(f"Atomized {len(flaws)} micro-flaws from {len(reviews)} reviews")
    return flaws


def adjudicate_flaws(flaws: Sequence[MicroFlaw], paper_text: str, gateway: JudgeGateway) -> List[MicroFlaw]:
    if not flaws:
        return []
    bank = [{
        'flaw_id': f.flaw_id,
        'description': f.description,
        'macro_topic': f.macro_topic,
        'arguments': [{'reviewer_id': a.reviewer_id, 'text': a.text} for a in f.arguments],
    } for f in flaws]
    request = JudgeRequest(Phase.FlawAdjudication,
                           {'paper_text': paper_text, 'micro_flaws_json': canonical_json(bank)})
    verdicts = invoke_keyed(gateway, request, 'verdicts', 'flaw_id', [f.flaw_id for f in flaws])
    adjudicated = []
    for f in flaws:
        v = verdicts[f.flaw_id]
        severity = v.get('severity') if v['is_valid'] else None
        adjudicated.append(dataclasses.replace(f, is_valid=v['is_valid'], severity=severity,
                                               rationale=v.get('rationale', '')))
    return adjudicated


def locate_flaw(review_text: str, flaw: MicroFlaw, reviewer_ids: Iterable[str]) -> int:
    """Offset of the earliest contributing argument of the reviewer in the review text."""
    offsets = [find_normalized(review_text, a.text) for a in flaw.arguments_of(reviewer_ids)]
    offsets = [o for o in offsets if o is not None]
    if not offsets:
        raise UnlocatableArgument(f"No argument of flaw {flaw.flaw_id} occurs in the review text")
    return min(offsets)


def recover_positions(review: ReviewDocument, attributed: Sequence[MicroFlaw],
                      reviewer_ids: Optional[Iterable[str]] = None,
                      weights: Optional[Mapping[str, int]] = None) -> RankedFlawList:
    """
    Orders the reviewer's valid flaws by where they first appear in the review.

    Flaws whose argument text cannot be found are listed in ``unlocated`` and
    left out of the ranking.
    """
    weights = weights or SEVERITY_WEIGHTS
    reviewer_ids = list(reviewer_ids) if reviewer_ids is not None else [review.reviewer_id]
    text = normalize_ws(review.text)
    located, unlocated = [], []
    for flaw in attributed:
        if not flaw.is_valid or not flaw.arguments_of(reviewer_ids):
            continue
        try:
            located.append((locate_flaw(text, flaw, reviewer_ids), flaw.flaw_id, flaw))
        except UnlocatableArgument as e:
            logger.warning(f"Reviewer {review.reviewer_id}: {e}")
            unlocated.append(flaw.flaw_id)
    located.sort(key=lambda item: (item[0], item[1]))
    entries = [RankedEntry(flaw_id, position, weights[flaw.severity])
               for position, (_, flaw_id, flaw) in enumerate(located, start=1)]
    return RankedFlawList(review.reviewer_id, tuple(entries), tuple(sorted(unlocated)))


def compute_recall(consensus: Sequence[MicroFlaw],
                   reviewer_flaws: Iterable[str]) -> Tuple[Optional[float], Optional[float]]:
    """Critical and minor recall; a severity without consensus flaws yields ``None``."""
    found = set(reviewer_flaws)
    recalls = []
    for severity in (CRITICAL, MINOR):
        truth = {f.flaw_id for f in consensus if f.is_valid and f.severity == severity}
        recalls.append(len(truth & found) / len(truth) if truth else None)
    return recalls[0], recalls[1]


def _discounted(weights: Sequence[int]) -> float:
    return sum(w / math.log2(p + 1) for p, w in enumerate(weights, start=1))


def compute_ncps(ranked: RankedFlawList) -> Optional[float]:
    if not ranked.entries:
        return None
    cps, ideal = critique_prioritization(ranked)
    return cps / ideal


def critique_prioritization(ranked: RankedFlawList) -> Tuple[float, float]:
    """(CPS, iCPS) of a ranked list; positions are 1..k so discounting follows list order."""
    weights = [e.weight for e in ranked.entries]
    return _discounted(weights), _discounted(sorted(weights, reverse=True))


def score_reviewer(flaws: Sequence[MicroFlaw], reviewer_ids: Iterable[str],
                   ranked_lists: Sequence[RankedFlawList]) -> FlawScores:
    """
    Recall, prioritization and hallucination counts for one reviewer label.

    ``ranked_lists`` holds one list per review the label wrote; nCPS is the
    mean over the lists that have entries.
    """
    reviewer_ids = list(reviewer_ids)
    mine = [f for f in flaws if f.arguments_of(reviewer_ids)]
    valid = [f for f in mine if f.is_valid]
    critical_recall, minor_recall = compute_recall(flaws, [f.flaw_id for f in mine])
    ncps_values = [v for v in (compute_ncps(r) for r in ranked_lists) if v is not None]
    severities = Counter(f.severity for f in valid)
    topics = {s: Counter(f.macro_topic for f in valid if f.severity == s) for s in SEVERITIES}
    return FlawScores(
        critical_recall=critical_recall,
        minor_recall=minor_recall,
        ncps=sum(ncps_values) / len(ncps_values) if ncps_values else None,
        counts={
            'extracted': len(mine),
            'valid': len(valid),
            'hallucinated': len(mine) - len(valid),
            'critical': severities.get(CRITICAL, 0),
            'minor': severities.get(MINOR, 0),
        },
        topic_counts={s: {t: topics[s].get(t, 0) for t in MACRO_TOPICS} for s in SEVERITIES},
        unlocated=len({fid for r in ranked_lists for fid in r.unlocated}),
    )
