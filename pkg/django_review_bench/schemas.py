# -*- coding: utf-8 -*-
import functools
import json
import logging
import re
from typing import Any, Dict

from jsonschema import Draft202012Validator

from .errors import SchemaViolation
from .prompts import Phase, TEXT_PHASES, as_phase

logger = logging.getLogger('django_review_bench.schemas')

ASPECTS = ('novelty', 'methodology', 'experiment', 'clarity')
STANCES = ('not_novel', 'somewhat_novel', 'novel', 'unclear')
CONFIDENCE_LEVELS = ('high', 'medium', 'low')
EVIDENCE_KINDS = ('method_similarity', 'task_similarity', 'results_similarity', 'theory_overlap', 'dataset_overlap')
STANCE_ALIGNMENTS = ('aligned', 'partial', 'insufficient', 'contradicted')
CALIBRATIONS = ('accurate', 'overstated', 'understated', 'N/A')
VERDICT_LABELS = {
    2: 'SUPPORTED',
    1: 'OVERSTATED',
    0: 'AMBIGUOUS',
    -1: 'UNDERSTATED',
    -2: 'UNSUPPORTED',
}
MACRO_TOPICS = (
    'Novelty & Contribution',
    'Clarity & Presentation',
    'Applicability, Scalability & Limitations',
    'Experimental Design & Evaluation',
    'Related Work & Citations',
    'Methodology & Theoretical Soundness',
    'Reproducibility & Open Science',
)
SEVERITIES = ('Critical', 'Minor')
COMMENT_TYPES = ('weakness', 'strength', 'question', 'suggestion', 'observation')
ARC_DIMENSIONS = ('D1_actionability', 'D2_specificity', 'D3_justification', 'D4_solution', 'D5_tone')

_FENCE_RE = re.compile(r"^\s*```[A-Za-z0-9_-]*[ \t]*\r?\n(.*?)\r?\n?[ \t]*```\s*$", re.DOTALL)

_STRING = {'type': 'string'}
_NONEMPTY = {'type': 'string', 'minLength': 1}
_STRINGS = {'type': 'array', 'items': _STRING}
_INDEX = {'type': 'integer', 'minimum': 0}

_CONTRIBUTION = {
    'type': 'object',
    'required': ['name'],
    'properties': {
        'name': _NONEMPTY,
        'author_claim_text': _STRING,
        'description': _STRING,
        'source_hint': _STRING,
    },
    'additionalProperties': False,
}

_NOVELTY_CLAIM = {
    'type': 'object',
    'required': ['claim_id', 'text', 'stance', 'confidence_lang'],
    'properties': {
        'claim_id': _NONEMPTY,
        'text': _NONEMPTY,
        'stance': {'enum': list(STANCES)},
        'confidence_lang': {'enum': list(CONFIDENCE_LEVELS)},
        'mentions_prior_work': {'type': 'boolean'},
        'prior_work_strings': _STRINGS,
        'evidence_expected': {'enum': list(EVIDENCE_KINDS)},
    },
    'additionalProperties': False,
}

_SCORE_LABEL_RULES = [
    {'if': {'properties': {'score': {'const': score}}, 'required': ['score']},
     'then': {'properties': {'label': {'const': label}}}}
    for score, label in VERDICT_LABELS.items()
]

_DIMENSION_SCORE = {'type': 'integer', 'minimum': 0, 'maximum': 2}

SCHEMAS: Dict[Phase, Dict[str, Any]] = {
    Phase.DoaClassification: {
        'type': 'object',
        'required': ['arguments'],
        'properties': {
            'arguments': {
                'type': 'array',
                'items': {
                    'type': 'object',
                    'required': ['index', 'role', 'aspect'],
                    'properties': {
                        'index': _INDEX,
                        'role': {'enum': ['claim', 'premise']},
                        'aspect': {'enum': list(ASPECTS)},
                    },
                },
            },
        },
    },
    Phase.DoaGrounding: {
        'type': 'object',
        'required': ['premises'],
        'properties': {
            'premises': {
                'type': 'array',
                'items': {
                    'type': 'object',
                    'required': ['index', 'grounding'],
                    'properties': {
                        'index': _INDEX,
                        'grounding': {'enum': [0, 1, 2]},
                    },
                },
            },
        },
    },
    Phase.NoveltyExtraction: {
        'type': 'object',
        'required': ['paper', 'review'],
        'properties': {
            'paper': {
                'type': 'object',
                'required': ['core_task', 'contributions'],
                'properties': {
                    'core_task': _STRING,
                    'contributions': {'type': 'array', 'items': _CONTRIBUTION},
                    'key_terms': _STRINGS,
                    'must_have_entities': _STRINGS,
                },
                'additionalProperties': False,
            },
            'review': {
                'type': 'object',
                'required': ['novelty_claims'],
                'properties': {
                    'novelty_claims': {'type': 'array', 'items': _NOVELTY_CLAIM},
                    'all_citations_raw': _STRINGS,
                },
                'additionalProperties': False,
            },
        },
        'additionalProperties': False,
    },
    Phase.NoveltyCoreTask: {
        'type': 'object',
        'required': ['core_task'],
        'properties': {'core_task': _NONEMPTY},
        'additionalProperties': False,
    },
    Phase.NoveltyContributions: {
        'type': 'object',
        'required': ['contributions'],
        'properties': {'contributions': {'type': 'array', 'items': _CONTRIBUTION}},
        'additionalProperties': False,
    },
    Phase.NoveltyVerification: {
        'type': 'object',
        'required': ['score', 'label'],
        'properties': {
            'review_sentence_id': _STRING,
            'related_paper_id': _STRING,
            'classification': {
                'type': 'object',
                'properties': {'claim': {'enum': [0, 1]}, 'proof': {'enum': [0, 1]}},
                'additionalProperties': False,
            },
            'stance_alignment': {'enum': list(STANCE_ALIGNMENTS)},
            'calibration': {'enum': list(CALIBRATIONS)},
            'score': {'type': 'integer', 'minimum': -2, 'maximum': 2},
            'label': {'enum': list(VERDICT_LABELS.values())},
            'explanation': _STRING,
        },
        'additionalProperties': False,
        'allOf': _SCORE_LABEL_RULES,
    },
    Phase.FlawAtomization: {
        'type': 'object',
        'required': ['micro_flaws'],
        'properties': {
            'micro_flaws': {
                'type': 'array',
                'items': {
                    'type': 'object',
                    'required': ['flaw_id', 'description', 'macro_topic', 'arguments'],
                    'properties': {
                        'flaw_id': _NONEMPTY,
                        'description': _STRING,
                        'macro_topic': {'enum': list(MACRO_TOPICS)},
                        'arguments': {
                            'type': 'array',
                            'minItems': 1,
                            'items': {
                                'type': 'object',
                                'required': ['reviewer_id', 'text'],
                                'properties': {'reviewer_id': _NONEMPTY, 'text': _NONEMPTY},
                            },
                        },
                    },
                },
            },
        },
    },
    Phase.FlawAdjudication: {
        'type': 'object',
        'required': ['verdicts'],
        'properties': {
            'verdicts': {
                'type': 'array',
                'items': {
                    'type': 'object',
                    'required': ['flaw_id', 'is_valid'],
                    'properties': {
                        'flaw_id': _NONEMPTY,
                        'is_valid': {'type': 'boolean'},
                        'severity': {'enum': list(SEVERITIES) + [None]},
                        'rationale': _STRING,
                    },
                    'if': {'properties': {'is_valid': {'const': True}}},
                    'then': {'required': ['severity'], 'properties': {'severity': {'enum': list(SEVERITIES)}}},
                    'else': {'properties': {'severity': {'const': None}}},
                },
            },
        },
    },
    Phase.ArcExtraction: {
        'type': 'object',
        'required': ['arcs'],
        'properties': {
            'arcs': {
                'type': 'array',
                'items': {
                    'type': 'object',
                    'required': ['arc_id', 'text', 'anchor_quote', 'comment_type'],
                    'properties': {
                        'arc_id': _NONEMPTY,
                        'text': _NONEMPTY,
                        'anchor_quote': _NONEMPTY,
                        'comment_type': {'enum': list(COMMENT_TYPES)},
                    },
                },
            },
        },
    },
    Phase.ArcScoring: {
        'type': 'object',
        'required': ['scores'],
        'properties': {
            'scores': {
                'type': 'array',
                'items': {
                    'type': 'object',
                    'required': ['arc_id'] + list(ARC_DIMENSIONS),
                    'properties': dict({'arc_id': _NONEMPTY}, **{d: _DIMENSION_SCORE for d in ARC_DIMENSIONS}),
                },
            },
        },
    },
}


@functools.lru_cache(maxsize=None)
def get_validator(phase: Phase) -> Draft202012Validator:
    schema = SCHEMAS[phase]
    Draft202012Validator.check_schema(schema)
    return Draft202012Validator(schema)


def trim_fences(raw: str) -> str:
    m = _FENCE_RE.match(raw)
    return m.group(1) if m else raw


def _error_path(error) -> str:
    return '/'.join(str(p) for p in error.absolute_path)


def _error_order(error):
    return [(0, p, '') if isinstance(p, int) else (1, 0, str(p)) for p in error.absolute_path], error.message


def parse_strict_json(raw: str, phase_id) -> Dict[str, Any]:
    """
    Parses a judge answer for the given phase.

    Fence trimming is the only normalization applied. Text phases return
    ``{"text": raw}`` untouched.
    """
    phase = as_phase(phase_id)
    raw = raw if raw is not None else ''
    if phase in TEXT_PHASES:
        if not raw.strip():
            raise SchemaViolation(phase.value, '', 'empty response', raw)
        return {'text': raw}

    body = trim_fences(raw)
    try:
        document = json.loads(body)
    except ValueError as e:
        raise SchemaViolation(phase.value, '', f"invalid JSON ({e})", raw) from None

    errors = list(get_validator(phase).iter_errors(document))
    if errors:
        first = min(errors, key=_error_order)
        logger.info(f"Judge output for {phase.value} rejected: {first.message} at '{_error_path(first)}'")
        raise SchemaViolation(phase.value, _error_path(first), first.message, raw)
    return document
