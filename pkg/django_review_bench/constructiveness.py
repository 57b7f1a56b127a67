# -*- coding: utf-8 -*-
import dataclasses
import logging
from typing import List, Optional, Sequence, Tuple

from .corpus import ReviewDocument
from .errors import EmptyInputError
from .judge import JudgeGateway, JudgeRequest, canonical_json, invoke_keyed
from .prompts import Phase
from .schemas import ARC_DIMENSIONS, COMMENT_TYPES
from .textutils import contains_verbatim, word_count

logger = logging.getLogger('django_review_bench.constructiveness')

ANCHOR_MIN_WORDS = 5
ANCHOR_MAX_WORDS = 25
DIMENSION_MAX = 2


@dataclasses.dataclass(frozen=True)
class AtomicComment:
    arc_id: str
    text: str
    anchor_quote: str
    comment_type: str
    d_scores: Optional[Tuple[int, ...]] = None

    def __post_init__(self):
        if self.comment_type not in COMMENT_TYPES:
            raise ValueError(f"Unknown comment type '{self.comment_type}'")
        if self.d_scores is not None:
            scores = tuple(self.d_scores)
            if len(scores) != len(ARC_DIMENSIONS) or any(s not in (0, 1, 2) for s in scores):
                raise ValueError(f"ARC {self.arc_id} needs five scores in 0..2, got {scores}")
            object.__setattr__(self, 'd_scores', scores)

    @property
    def clc(self) -> float:
        return sum(self.d_scores) / (DIMENSION_MAX * len(ARC_DIMENSIONS))


@dataclasses.dataclass(frozen=True)
class ConstructivenessResult:
    per_arc_clc: Tuple[float, ...]
    mcs: float
    dim_means: Tuple[float, ...]
    ar: float
    sd: float
    cd: float
    type_counts: dict = dataclasses.field(default_factory=dict)


def extract_arcs(review: ReviewDocument, gateway: JudgeGateway) -> List[AtomicComment]:
    """
    Atomic comments of one review, in judge order.

    Comments whose anchor quote is not in the review, or whose id repeats, are
    dropped. The 5-25 word anchor length is not enforced: a shorter or longer
    quote is kept and only logged, so short critiques still count towards MCS.
    """
    source = review.text
    if not source.strip():
        raise EmptyInputError(f"Review {review.reviewer_id} is empty")
    response = gateway.invoke(JudgeRequest(Phase.ArcExtraction, {'raw_review_text': source}))
    arcs, seen = [], set()
    for raw in response.parsed['arcs']:
        arc = AtomicComment(raw['arc_id'], raw['text'], raw['anchor_quote'], raw['comment_type'])
        if arc.arc_id in seen:
            logger.warning(f"Dropping repeated ARC id {arc.arc_id} of review {review.reviewer_id}")
            continue
        if not contains_verbatim(source, arc.anchor_quote):
            logger.warning(f"Dropping ARC {arc.arc_id} of review {review.reviewer_id}: anchor quote not in review")
            continue
        words = word_count(arc.anchor_quote)
        if not ANCHOR_MIN_WORDS <= words <= ANCHOR_MAX_WORDS:
            logger.warning(f"ARC {arc.arc_id} anchor quote has {words} words")
        seen.add(arc.arc_id)
        arcs.append(arc)
    return arcs


def score_arcs(arcs: Sequence[AtomicComment], macro_context: str, gateway: JudgeGateway) -> List[AtomicComment]:
    if not arcs:
        return []
    arc_list = canonical_json([{'arc_id': a.arc_id, 'text': a.text, 'anchor_quote': a.anchor_quote,
                                'comment_type': a.comment_type} for a in arcs])
    request = JudgeRequest(Phase.ArcScoring, {'raw_review_text': macro_context, 'arc_json_list': arc_list})
    scores = invoke_keyed(gateway, request, 'scores', 'arc_id', [a.arc_id for a in arcs])
    return [dataclasses.replace(a, d_scores=tuple(scores[a.arc_id][d] for d in ARC_DIMENSIONS)) for a in arcs]


def compute_mcs(arcs: Sequence[AtomicComment]) -> Optional[ConstructivenessResult]:
    """Mean comment-level constructiveness and its densities; ``None`` without scored ARCs."""
    if not arcs:
        return None
    if any(a.d_scores is None for a in arcs):
        raise ValueError('Every ARC must be scored before computing MCS')
    n = len(arcs)
    clc = tuple(a.clc for a in arcs)
    dim_means = tuple(sum(a.d_scores[k] for a in arcs) / n for k in range(len(ARC_DIMENSIONS)))
    types = {t: sum(1 for a in arcs if a.comment_type == t) for t in COMMENT_TYPES}
    return ConstructivenessResult(
        per_arc_clc=clc,
        mcs=sum(clc) / n,
        dim_means=dim_means,
        ar=sum(1 for a in arcs if a.d_scores[0] >= 1) / n,
        sd=sum(1 for a in arcs if a.d_scores[3] == DIMENSION_MAX) / n,
        cd=sum(1 for c in clc if c >= 0.5) / n,
        type_counts=types,
    )


def analyze_review(review: ReviewDocument, gateway: JudgeGateway) -> List[AtomicComment]:
    arcs = extract_arcs(review, gateway)
    scored = score_arcs(arcs, review.text, gateway)
    logger.info(f"Review {review.reviewer_id}: {len(scored)} ARCs scored")
    return scored
