# -*- coding: utf-8 -*-
"""
Depth of analysis: segment a review into argumentative units, classify their
role and aspect, grade the grounding of every premise and score the result.
"""
import dataclasses
import enum
import logging
from collections import Counter
from typing import Dict, List, Optional, Sequence, Tuple

from .corpus import ReviewDocument
from .errors import EmptyInputError, ReconstructionMismatch
from .judge import JudgeGateway, JudgeRequest, invoke_keyed
from .prompts import Phase, SEPARATOR
from .schemas import ASPECTS
from .textutils import normalize_ws, strip_headings

logger = logging.getLogger('django_review_bench.depth')

MAX_GROUNDING = 2


class Role(str, enum.Enum):
    Claim = 'claim'
    Premise = 'premise'


@dataclasses.dataclass(frozen=True)
class ArgumentUnit:
    text: str
    role: Role
    aspect: str
    ordinal: int
    grounding: Optional[int] = None

    def __post_init__(self):
        object.__setattr__(self, 'role', Role(self.role))
        if not self.text.strip():
            raise ValueError(f"Argument unit {self.ordinal} is empty")
        if self.aspect not in ASPECTS:
            raise ValueError(f"Unknown aspect '{self.aspect}'")
        if self.grounding is not None:
            if self.role != Role.Premise:
                raise ValueError(f"Claim unit {self.ordinal} cannot carry a grounding level")
            if self.grounding not in (0, 1, 2):
                raise ValueError(f"Grounding {self.grounding} outside 0..2")

    @property
    def is_premise(self) -> bool:
        return self.role == Role.Premise


@dataclasses.dataclass(frozen=True)
class DoAResult:
    total_units: int
    premise_count: int
    premise_ratio: float
    grounding_score: float
    doa: float
    aspect_histogram: Dict[str, Dict[str, int]]
    grounding_histogram: Dict[str, int]
    aspect_doa: Dict[str, float]

    def distribution(self, premises_only: bool) -> Optional[Tuple[float, ...]]:
        counts = self.aspect_histogram['premises' if premises_only else 'all']
        total = sum(counts.values())
        if not total:
            return None
        return tuple(counts[a] / total for a in ASPECTS)


def _check_ordinals(units: Sequence[ArgumentUnit]):
    ordinals = [u.ordinal for u in units]
    if any(b <= a for a, b in zip(ordinals, ordinals[1:])):
        raise ValueError('Argument unit ordinals must be strictly increasing')


def _visible(text: str) -> str:
    return normalize_ws(strip_headings(text.replace(SEPARATOR, ' ')))


def split_marked_text(marked: str) -> List[str]:
    spans = []
    for piece in marked.split(SEPARATOR):
        span = normalize_ws(strip_headings(piece))
        if span:
            spans.append(span)
    return spans


def segment_adus(review: ReviewDocument, gateway: JudgeGateway) -> List[str]:
    if not review.has_core_sections:
        raise EmptyInputError(f"Review {review.reviewer_id} has no Summary, Strengths or Weaknesses text")
    source = review.text
    response = gateway.invoke(JudgeRequest(Phase.DoaSegmentation, {'raw_review_text': source}))
    marked = response.parsed['text']
    if _visible(marked) != _visible(source):
        logger.warning(f"Segmentation of review {review.reviewer_id} altered the text, skipping it for DoA")
        raise ReconstructionMismatch(f"Segmented text of review {review.reviewer_id} does not reconstruct the input")
    spans = split_marked_text(marked)
    if not spans:
        raise EmptyInputError(f"Segmentation of review {review.reviewer_id} produced no units")
    return spans


def _numbered(items: Sequence[Tuple[int, str]]) -> str:
    return '\n'.join(f"[{index}] {text}" for index, text in items)


def classify_adus(spans: Sequence[str], macro_context: str, gateway: JudgeGateway) -> List[ArgumentUnit]:
    if not spans:
        raise EmptyInputError('Cannot classify an empty span list')
    request = JudgeRequest(Phase.DoaClassification, {
        'macro_context': macro_context,
        'argument_list': _numbered(list(enumerate(spans))),
    })
    answers = invoke_keyed(gateway, request, 'arguments', 'index', range(len(spans)))
    return [ArgumentUnit(text=span, role=answers[i]['role'], aspect=answers[i]['aspect'], ordinal=i)
            for i, span in enumerate(spans)]


def grade_premises(units: Sequence[ArgumentUnit], macro_context: str, gateway: JudgeGateway) -> List[ArgumentUnit]:
    premises = [u for u in units if u.is_premise]
    if not premises:
        return list(units)
    request = JudgeRequest(Phase.DoaGrounding, {
        'macro_context': macro_context,
        'premise_list': _numbered([(u.ordinal, u.text) for u in premises]),
    })
    answers = invoke_keyed(gateway, request, 'premises', 'index', [u.ordinal for u in premises])
    return [dataclasses.replace(u, grounding=answers[u.ordinal]['grounding']) if u.is_premise else u
            for u in units]


def _harmonic(r: float, s: float) -> float:
    return 0.0 if r + s == 0 else 2.0 * r * s / (r + s)


def _score(units: Sequence[ArgumentUnit]) -> Tuple[float, float, float]:
    premises = [u for u in units if u.is_premise]
    ratio = len(premises) / len(units)
    if not premises:
        return ratio, 0.0, 0.0
    grounding = sum(u.grounding or 0 for u in premises) / (MAX_GROUNDING * len(premises))
    return ratio, grounding, _harmonic(ratio, grounding)


def compute_doa(units: Sequence[ArgumentUnit]) -> Optional[DoAResult]:
    """Harmonic mean of premise ratio and normalized grounding; ``None`` for a review with no units."""
    if not units:
        return None
    _check_ordinals(units)
    ratio, grounding, doa = _score(units)
    all_counts = Counter(u.aspect for u in units)
    premise_counts = Counter(u.aspect for u in units if u.is_premise)
    levels = Counter(u.grounding for u in units if u.is_premise)
    aspect_doa = {}
    for aspect in ASPECTS:
        subset = [u for u in units if u.aspect == aspect]
        if subset:
            aspect_doa[aspect] = _score(subset)[2]
    return DoAResult(
        total_units=len(units),
        premise_count=sum(premise_counts.values()),
        premise_ratio=ratio,
        grounding_score=grounding,
        doa=doa,
        aspect_histogram={
            'all': {a: all_counts.get(a, 0) for a in ASPECTS},
            'premises': {a: premise_counts.get(a, 0) for a in ASPECTS},
        },
        grounding_histogram={str(level): levels.get(level, 0) for level in range(MAX_GROUNDING + 1)},
        aspect_doa=aspect_doa,
    )


def aspect_distribution(units: Sequence[ArgumentUnit], premises_only: bool = False) -> Tuple[float, ...]:
    qualifying = [u for u in units if u.is_premise or not premises_only]
    if not qualifying:
        raise EmptyInputError('No qualifying units for an aspect distribution')
    counts = Counter(u.aspect for u in qualifying)
    return tuple(counts.get(a, 0) / len(qualifying) for a in ASPECTS)


def analyze_review(review: ReviewDocument, gateway: JudgeGateway) -> List[ArgumentUnit]:
    """Segment, classify and grade one review; phases run strictly in order."""
    spans = segment_adus(review, gateway)
    macro_context = review.text
    units = classify_adus(spans, macro_context, gateway)
    units = grade_premises(units, macro_context, gateway)
    logger.info(f"Review {review.reviewer_id}: {len(units)} units, {sum(u.is_premise for u in units)} premises")
    return units
