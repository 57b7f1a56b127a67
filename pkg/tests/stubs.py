# -*- coding: utf-8 -*-
"""
Offline stand-ins for the judge and Semantic Scholar.

``ScriptedBackend`` answers every phase deterministically from the request
slots, so recorded transcripts are stable across runs and machines.
"""
import hashlib
import json
import re

import requests

from django_review_bench.judge import BackendReply, JudgeBackend
from django_review_bench.prompts import SEPARATOR
from django_review_bench.schemas import VERDICT_LABELS

SCRIPTED_IDENTITY = 'scripted-judge'

SENTENCE_RE = re.compile(r"[^.?!\n]+[.?!]")
NUMBERED_RE = re.compile(r"^\[(\d+)\] (.*)$", re.M)
REVIEWER_BLOCK_RE = re.compile(r"^=== REVIEWER (.+?) ===$", re.M)

# keyword -> (macro topic, valid, severity)
FLAW_KEYWORDS = {
    'baseline': ('Experimental Design & Evaluation', True, 'Critical'),
    'ablation': ('Experimental Design & Evaluation', True, 'Critical'),
    'notation': ('Clarity & Presentation', True, 'Minor'),
    'typo': ('Clarity & Presentation', True, 'Minor'),
    'proof': ('Methodology & Theoretical Soundness', False, None),
}
ASPECT_KEYWORDS = (
    ('novel', 'novelty'),
    ('experiment', 'experiment'),
    ('baseline', 'experiment'),
    ('clear', 'clarity'),
    ('notation', 'clarity'),
)


def sentences(text):
    return [s.strip() for s in SENTENCE_RE.findall(text or '') if s.strip()]


def stable_int(text, modulo):
    return int(hashlib.sha256(text.encode('utf-8')).hexdigest(), 16) % modulo


def _aspect(text):
    lowered = text.lower()
    for keyword, aspect in ASPECT_KEYWORDS:
        if keyword in lowered:
            return aspect
    return 'methodology'


def _grounding(text):
    if 'et al' in text or re.search(r"\(\d{4}\)", text):
        return 2
    if re.search(r"\b(Table|Figure|Section|Eq)\b", text):
        return 1
    return 0


class ScriptedBackend(JudgeBackend):
    """Judge stand-in; ``overrides`` maps a phase to a callable returning raw text for that phase."""

    def __init__(self, identity=SCRIPTED_IDENTITY, overrides=None):
        self.identity = identity
        self.overrides = dict(overrides or {})
        self.calls = []

    def generate(self, prompt, request):
        self.calls.append(request.phase)
        if request.phase in self.overrides:
            return BackendReply(self.overrides[request.phase](request), total_tokens=1)
        handler = getattr(self, f"answer_{request.phase.name}")
        answer = handler(request.slots)
        text = answer if isinstance(answer, str) else json.dumps(answer, sort_keys=True)
        return BackendReply(text, total_tokens=len(prompt) // 4)

    def answer_DoaSegmentation(self, slots):
        return re.sub(r"([.?!])(\s+)", rf"\1 {SEPARATOR}\2", slots['raw_review_text'])

    def answer_DoaClassification(self, slots):
        arguments = []
        for index, text in NUMBERED_RE.findall(slots['argument_list']):
            premise = _grounding(text) > 0 or 'because' in text.lower() or int(index) % 2 == 1
            arguments.append({'index': int(index), 'role': 'premise' if premise else 'claim',
                              'aspect': _aspect(text)})
        return {'arguments': arguments}

    def answer_DoaGrounding(self, slots):
        return {'premises': [{'index': int(index), 'grounding': _grounding(text)}
                             for index, text in NUMBERED_RE.findall(slots['premise_list'])]}

    def answer_NoveltyExtraction(self, slots):
        claims = []
        for sentence in sentences(slots['review_text']):
            lowered = sentence.lower()
            if 'novel' not in lowered:
                continue
            stance = 'not_novel' if ('not novel' in lowered or 'incremental' in lowered) else 'novel'
            claims.append({'claim_id': f"c{len(claims) + 1}", 'text': sentence, 'stance': stance,
                           'confidence_lang': 'medium', 'mentions_prior_work': 'et al' in sentence})
        first = sentences(slots['paper_text'])[:1]
        return {'paper': {'core_task': first[0] if first else 'task', 'contributions': []},
                'review': {'novelty_claims': claims}}

    def answer_NoveltyCoreTask(self, slots):
        first = sentences(slots['paper_text'])
        return {'core_task': first[0].rstrip('.') if first else 'unspecified task'}

    def answer_NoveltyContributions(self, slots):
        found = sentences(slots['paper_text'])[1:3]
        return {'contributions': [{'name': s.rstrip('.'), 'description': s} for s in found]}

    def answer_NoveltyVerification(self, slots):
        score = stable_int(slots['review_sentence'] + slots['related_work_title_abstract'], 5) - 2
        return {'score': score, 'label': VERDICT_LABELS[score],
                'classification': {'claim': 1, 'proof': 1 if score != 0 else 0},
                'explanation': 'scripted'}

    def answer_FlawAtomization(self, slots):
        text = slots['input_text']
        headers = list(REVIEWER_BLOCK_RE.finditer(text))
        blocks = []
        for i, header in enumerate(headers):
            end = headers[i + 1].start() if i + 1 < len(headers) else len(text)
            blocks.append((header.group(1), text[header.end():end]))
        flaws = []
        for keyword, (topic, _, _) in FLAW_KEYWORDS.items():
            arguments = []
            for reviewer_id, body in blocks:
                hit = next((s for s in sentences(body) if keyword in s.lower()), None)
                if hit:
                    arguments.append({'reviewer_id': reviewer_id, 'text': hit})
            if arguments:
                flaws.append({'flaw_id': f"F-{keyword}", 'description': f"Concerns about the {keyword}",
                              'macro_topic': topic, 'arguments': arguments})
        return {'micro_flaws': flaws}

    def answer_FlawAdjudication(self, slots):
        verdicts = []
        for flaw in json.loads(slots['micro_flaws_json']):
            _, valid, severity = FLAW_KEYWORDS[flaw['flaw_id'][2:]]
            verdict = {'flaw_id': flaw['flaw_id'], 'is_valid': valid, 'rationale': 'scripted'}
            verdict['severity'] = severity
            verdicts.append(verdict)
        return {'verdicts': verdicts}

    def answer_ArcExtraction(self, slots):
        arcs = []
        for sentence in sentences(slots['raw_review_text']):
            lowered = sentence.lower()
            if sentence.endswith('?'):
                kind = 'question'
            elif 'should' in lowered:
                kind = 'suggestion'
            elif 'lack' in lowered or 'missing' in lowered:
                kind = 'weakness'
            else:
                continue
            arcs.append({'arc_id': f"A{len(arcs) + 1}", 'text': sentence, 'anchor_quote': sentence,
                         'comment_type': kind})
        return {'arcs': arcs}

    def answer_ArcScoring(self, slots):
        scores = []
        for arc in json.loads(slots['arc_json_list']):
            text = arc['text'].lower()
            scores.append({
                'arc_id': arc['arc_id'],
                'D1_actionability': 2 if 'should' in text else 1 if arc['comment_type'] == 'question' else 0,
                'D2_specificity': 2 if re.search(r"\b(table|figure|section)\b", text) else 1,
                'D3_justification': 1 if 'because' in text else 0,
                'D4_solution': 2 if 'should' in text and 'add' in text else 0,
                'D5_tone': 2 if 'please' in text else 1,
            })
        return {'scores': scores}


class ExplodingBackend(JudgeBackend):
    """Fails on any live judge call; replay runs must never reach it."""

    def __init__(self, identity=SCRIPTED_IDENTITY):
        self.identity = identity

    def generate(self, prompt, request):
        raise AssertionError(f"Unexpected live judge call for {request.phase.value}")


class ExplodingSession(requests.Session):
    def request(self, method, url, *args, **kwargs):
        raise AssertionError(f"Unexpected network access: {method} {url}")


def make_response(payload, status_code=200):
    response = requests.Response()
    response.status_code = status_code
    response._content = json.dumps(payload).encode('utf-8')
    response.encoding = 'utf-8'
    return response


class CannedScholarSession(requests.Session):
    """
    Semantic Scholar stand-in: every query returns the same small family of
    works derived from the query text, plus a post-submission work and an
    erratum that the retrieval filters must remove.
    """

    def __init__(self, statuses=()):
        super().__init__()
        self.statuses = list(statuses)
        self.queries = []

    def get(self, url, params=None, **kwargs):
        self.queries.append(dict(params or {}))
        if self.statuses:
            return make_response({'message': 'Too Many Requests'}, status_code=self.statuses.pop(0))
        query = params['query']
        slug = hashlib.sha256(query.encode('utf-8')).hexdigest()[:8]
        data = [
            {'paperId': f"{slug}-a", 'title': f"A study of {query}",
             'abstract': f"We investigate {query} with a new estimator and report gains.", 'year': 2019,
             'publicationTypes': ['JournalArticle']},
            {'paperId': f"{slug}-b", 'title': f"Revisiting {query} baselines",
             'abstract': f"Strong baselines for {query} are often overlooked in prior evaluations.", 'year': 2020,
             'publicationTypes': ['Conference']},
            {'paperId': 'shared-survey', 'title': 'A survey of representation learning',
             'abstract': 'We survey methods for representation learning across modalities.', 'year': 2018,
             'publicationTypes': ['Review']},
            {'paperId': f"{slug}-future", 'title': f"{query} at scale",
             'abstract': 'Published after the submission deadline.', 'year': 2031},
            {'paperId': f"{slug}-erratum", 'title': f"Erratum: {query}",
             'abstract': 'Correction of a figure.', 'year': 2017},
        ]
        return make_response({'total': len(data), 'offset': 0, 'data': data[:int(params.get('limit', 20))]})
