# -*- coding: utf-8 -*-
"""
Corpus documents: one JSON file per paper carrying the manuscript text and
its reviews split into canonical sections.
"""
import dataclasses
import enum
import json
import logging
import os
from typing import Any, Dict, List, Mapping, Optional, Tuple

from jsonschema import Draft202012Validator

from .errors import CorpusError, DuplicatePaperError, EmptyCorpusError
from .judge import atomic_write
from .textutils import SECTION_ORDER, render_sections

logger = logging.getLogger('django_review_bench.corpus')

HUMAN = 'human'
DECISIONS = ('oral', 'spotlight', 'poster', 'reject')
ACCEPT_DECISIONS = frozenset({'oral', 'spotlight', 'poster'})


class ReviewerType(str, enum.Enum):
    Human = 'human'
    System = 'system'


class BundlePolicy(str, enum.Enum):
    Concatenate = 'concatenate'
    PerReview = 'per-review'


_SECTIONS_SCHEMA = {
    'type': 'object',
    'properties': {name: {'type': 'string'} for name in SECTION_ORDER},
    'additionalProperties': {'type': 'string'},
}

CORPUS_SCHEMA = {
    'type': 'object',
    'required': ['paper_id', 'venue', 'year', 'decision', 'paper_text', 'reviews'],
    'properties': {
        'paper_id': {'type': 'string', 'minLength': 1},
        'venue': {'type': 'string', 'minLength': 1},
        'year': {'type': 'integer', 'minimum': 1900},
        'decision': {'enum': list(DECISIONS)},
        'title': {'type': 'string'},
        'abstract': {'type': 'string'},
        'introduction': {'type': 'string'},
        'paper_text': {'type': 'string', 'pattern': r'\S'},
        'human_review_count': {'type': 'integer', 'minimum': 0},
        'reviews': {
            'type': 'array',
            'minItems': 1,
            'items': {
                'type': 'object',
                'required': ['reviewer_id', 'reviewer_type', 'sections'],
                'properties': {
                    'reviewer_id': {'type': 'string', 'minLength': 1},
                    'reviewer_type': {'enum': [t.value for t in ReviewerType]},
                    'system_name': {'type': 'string', 'minLength': 1},
                    'sections': _SECTIONS_SCHEMA,
                },
                'if': {'properties': {'reviewer_type': {'const': 'system'}}},
                'then': {'required': ['system_name']},
            },
        },
    },
}

_validator = Draft202012Validator(CORPUS_SCHEMA)


@dataclasses.dataclass(frozen=True)
class ReviewDocument:
    reviewer_id: str
    reviewer_type: ReviewerType
    sections: Mapping[str, str]
    system_name: Optional[str] = None

    def __post_init__(self):
        object.__setattr__(self, 'reviewer_type', ReviewerType(self.reviewer_type))
        object.__setattr__(self, 'sections', {k: v for k, v in dict(self.sections).items()})

    @property
    def is_human(self) -> bool:
        return self.reviewer_type == ReviewerType.Human

    @property
    def label(self) -> str:
        return HUMAN if self.is_human else self.system_name

    @property
    def text(self) -> str:
        return render_sections(self.sections)

    def section_text(self, *names: str) -> str:
        return render_sections(self.sections, names)

    @property
    def has_core_sections(self) -> bool:
        return any((self.sections.get(n) or '').strip() for n in ('summary', 'strengths', 'weaknesses'))


@dataclasses.dataclass(frozen=True)
class CorpusEntry:
    paper_id: str
    venue: str
    year: int
    decision: str
    paper_text: str
    reviews: Tuple[ReviewDocument, ...]
    title: str = ''
    abstract: str = ''
    introduction: str = ''
    human_review_count: Optional[int] = None

    def __post_init__(self):
        object.__setattr__(self, 'reviews', tuple(self.reviews))
        if self.decision not in DECISIONS:
            raise CorpusError(f"Paper {self.paper_id} has unknown decision '{self.decision}'")
        if not self.paper_text.strip():
            raise CorpusError(f"Paper {self.paper_id} has an empty paper_text")
        if not self.reviews:
            raise CorpusError(f"Paper {self.paper_id} has no reviews")

    @property
    def accepted(self) -> bool:
        return self.decision in ACCEPT_DECISIONS

    @property
    def human_reviews(self) -> Tuple[ReviewDocument, ...]:
        return tuple(r for r in self.reviews if r.is_human)

    @property
    def human_count(self) -> int:
        if self.human_review_count is not None:
            return self.human_review_count
        return len(self.human_reviews)

    def paper_context(self, max_chars: int = 6000) -> str:
        """Abstract + introduction when supplied, else the head of the paper body."""
        parts = [p.strip() for p in (self.abstract, self.introduction) if p and p.strip()]
        if parts:
            return '\n\n'.join(parts)
        return self.paper_text[:max_chars]


@dataclasses.dataclass(frozen=True)
class ReviewerBundle:
    """All reviews one reviewer label wrote for a paper; humans share a single bundle."""
    paper_id: str
    reviewer_id: str
    label: str
    reviews: Tuple[ReviewDocument, ...]

    def concatenated(self) -> ReviewDocument:
        if len(self.reviews) == 1:
            return self.reviews[0]
        names = []
        for r in self.reviews:
            names.extend(n for n in r.sections if n not in names)
        sections = {
            name: '\n\n'.join((r.sections.get(name) or '').strip() for r in self.reviews
                              if (r.sections.get(name) or '').strip())
            for name in names
        }
        first = self.reviews[0]
        return ReviewDocument(self.reviewer_id, first.reviewer_type, sections, first.system_name)

    def units(self, policy) -> Tuple[ReviewDocument, ...]:
        if BundlePolicy(policy) == BundlePolicy.Concatenate:
            return (self.concatenated(),)
        return self.reviews


@dataclasses.dataclass(frozen=True)
class CorpusDiagnostic:
    path: str
    message: str


def bundle_reviews(entry: CorpusEntry) -> List[ReviewerBundle]:
    bundles: Dict[str, List[ReviewDocument]] = {}
    labels: Dict[str, str] = {}
    for review in entry.reviews:
        key = HUMAN if review.is_human else review.reviewer_id
        bundles.setdefault(key, []).append(review)
        labels[key] = review.label
    return [ReviewerBundle(entry.paper_id, key, labels[key], tuple(bundles[key])) for key in sorted(bundles)]


def review_from_dict(data: Mapping[str, Any]) -> ReviewDocument:
    return ReviewDocument(
        reviewer_id=data['reviewer_id'],
        reviewer_type=data['reviewer_type'],
        sections=data.get('sections') or {},
        system_name=data.get('system_name'),
    )


def entry_from_dict(data: Mapping[str, Any]) -> CorpusEntry:
    errors = sorted(_validator.iter_errors(data), key=lambda e: [str(p) for p in e.absolute_path])
    if errors:
        first = errors[0]
        path = '/'.join(str(p) for p in first.absolute_path) or '<root>'
        raise CorpusError(f"{first.message} at '{path}'")
    reviews = tuple(review_from_dict(r) for r in data['reviews'])
    seen = set()
    for r in reviews:
        if r.reviewer_id in seen:
            raise CorpusError(f"Reviewer id '{r.reviewer_id}' appears twice")
        if not r.is_human and r.reviewer_id == HUMAN:
            raise CorpusError(f"Reviewer id '{HUMAN}' is reserved for the human bundle")
        seen.add(r.reviewer_id)
    return CorpusEntry(
        paper_id=data['paper_id'],
        venue=data['venue'],
        year=data['year'],
        decision=data['decision'],
        paper_text=data['paper_text'],
        reviews=reviews,
        title=data.get('title', ''),
        abstract=data.get('abstract', ''),
        introduction=data.get('introduction', ''),
        human_review_count=data.get('human_review_count'),
    )


def entry_to_dict(entry: CorpusEntry) -> Dict[str, Any]:
    data = {
        'paper_id': entry.paper_id,
        'venue': entry.venue,
        'year': entry.year,
        'decision': entry.decision,
        'paper_text': entry.paper_text,
        'title': entry.title,
        'abstract': entry.abstract,
        'introduction': entry.introduction,
        'reviews': [],
    }
    if entry.human_review_count is not None:
        data['human_review_count'] = entry.human_review_count
    for r in entry.reviews:
        review = {'reviewer_id': r.reviewer_id, 'reviewer_type': r.reviewer_type.value, 'sections': dict(r.sections)}
        if r.system_name:
            review['system_name'] = r.system_name
        data['reviews'].append(review)
    return data


def ingest_corpus(path: str, diagnostics: Optional[List[CorpusDiagnostic]] = None) -> List[CorpusEntry]:
    """
    Loads every ``*.json`` document under ``path``.

    Malformed files are appended to ``diagnostics`` and skipped. Duplicate
    paper ids and an empty result raise.
    """
    if diagnostics is None:
        diagnostics = []
    if not os.path.isdir(path):
        raise EmptyCorpusError(f"Corpus directory '{path}' does not exist")
    entries: List[CorpusEntry] = []
    origins: Dict[str, str] = {}
    for name in sorted(os.listdir(path)):
        if not name.endswith('.json'):
            continue
        file_path = os.path.join(path, name)
        try:
            with open(file_path, 'r', encoding='utf-8') as fh:
                data = json.load(fh)
            entry = entry_from_dict(data)
        except (ValueError, CorpusError) as e:
            logger.warning(f"Skipping malformed corpus file {file_path}: {e}")
            diagnostics.append(CorpusDiagnostic(file_path, str(e)))
            continue
        if entry.paper_id in origins:
            raise DuplicatePaperError(
                f"Paper id '{entry.paper_id}' appears in both {origins[entry.paper_id]} and {file_path}")
        origins[entry.paper_id] = file_path
        entries.append(entry)
    if not entries:
        raise EmptyCorpusError(f"No valid corpus documents under '{path}'")
    logger.info(f"Ingested {len(entries)} papers from {path} ({len(diagnostics)} malformed)")
    return entries


def dump_corpus(entries, path: str) -> None:
    for entry in entries:
        body = json.dumps(entry_to_dict(entry), sort_keys=True, indent=2, ensure_ascii=False) + '\n'
        atomic_write(os.path.join(path, f"{entry.paper_id}.json"), body.encode('utf-8'))
