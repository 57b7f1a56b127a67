# -*- coding: utf-8 -*-
"""
Staged judge prompt templates.

Templates carry ``{slot_name}`` markers. Rendering is a single pass over the
template, so braces inside slot values (JSON lists, LaTeX) are never expanded.
"""
import enum
import logging
import re
from typing import Dict, Mapping, Tuple

from .errors import MissingSlotError, UnknownPhaseError

logger = logging.getLogger('django_review_bench.prompts')

_SLOT_RE = re.compile(r"\{([a-z_]+)\}")
_EXAMPLE_RE = re.compile(r"^EXAMPLE RESPONSE:\n(.*?)(?:\n\n|\Z)", re.MULTILINE | re.DOTALL)

SEPARATOR = '<sep>'


class Phase(str, enum.Enum):
    DoaSegmentation = 'doa-segmentation'
    DoaClassification = 'doa-classification'
    DoaGrounding = 'doa-grounding'
    NoveltyExtraction = 'novelty-extraction'
    NoveltyCoreTask = 'novelty-core-task'
    NoveltyContributions = 'novelty-contributions'
    NoveltyVerification = 'novelty-verification'
    FlawAtomization = 'flaw-atomization'
    FlawAdjudication = 'flaw-adjudication'
    ArcExtraction = 'arc-extraction'
    ArcScoring = 'arc-scoring'


# Phases whose answer is marked-up text rather than a JSON document.
TEXT_PHASES = frozenset({Phase.DoaSegmentation})


DOA_SEGMENTATION = """ROLE AND OBJECTIVE
You are an expert NLP researcher working on argumentation mining in scholarly text. Segment the scientific peer review below into Argumentative Discourse Units (ADUs).

GUIDELINES
1. After each independent logical unit, insert the exact marker <sep>.
2. Reproduce the original text in the same order. Do not add, remove or alter any word.
3. Split compound sentences where a claim is joined with the reason or evidence supporting it. Split at:
   - logical and causal conjunctions ("because", "as", "since", "due to", "but", "however", ...);
   - relative pronouns ("which", "that", "who", ...);
   - participial phrases that state a result or proof ("demonstrating", "showing", "proving", "making", "resulting in", ...).
4. Ignore structural headings such as "**Summary:**" or "**Strengths:**". Never append <sep> to a heading.

EXAMPLE RESPONSE:
The method is not novel. <sep> Similar routing was introduced by Fedus et al. (2021). <sep>

INPUT REVIEW TEXT:
{raw_review_text}
"""

DOA_CLASSIFICATION = """ROLE AND OBJECTIVE
Classify the Argument Role and the Aspect Topic of every segmented ADU in the list below. Use the full review as macro-context.

1. ARGUMENT ROLE (choose exactly one)
- Claim (Conclusion / Point): the statement being argued for; the central or contestable point that needs support.
- Premise (Reason / Support): a statement offered to support a claim; reasons, evidence or justification.

Example
- Macro-context: "The proposed method is not novel. Similar architectures were already introduced by Smith et al. (2023)."
- "The proposed method is not novel." -> claim (it needs evidence).
- "Similar architectures were already introduced by Smith et al. (2023)." -> premise (it is the evidence).

2. ASPECT TOPIC (choose exactly one)
- novelty: Novelty & Related Work. Originality, overlap with prior work, literature coverage.
- methodology: Methodology & Theoretical Soundness. Mathematics, algorithms, architecture, dataset construction.
- experiment: Experimental Design & Evaluation. Empirical setup, baselines, ablations, metrics.
- clarity: Clarity, Presentation & Reproducibility. Writing quality, typos, formatting, missing details.

OUTPUT FORMAT
Respond ONLY with a valid JSON object of the form
{"arguments": [{"index": <int>, "role": "claim" | "premise", "aspect": "novelty" | "methodology" | "experiment" | "clarity"}]}
with exactly one entry per input index.

EXAMPLE RESPONSE:
{"arguments": [{"index": 0, "role": "claim", "aspect": "novelty"}, {"index": 1, "role": "premise", "aspect": "novelty"}]}

MACRO-CONTEXT:
{macro_context}

LIST OF ARGUMENTS:
{argument_list}
"""

DOA_GROUNDING = """ROLE AND OBJECTIVE
You are an expert NLP researcher. You receive a full peer review for context and a list of PREMISES. Rate the grounding (depth of evidence) of EACH premise.

GROUNDING SCORE DEFINITIONS
- Score 0 (Generic / Vague): no specific anchor ("the datasets", "past research", "the equations").
- Score 1 (Internal Grounding): anchored to an element inside the manuscript ("Equation 4", "Table 2", "the proposed module").
- Score 2 (External / Comparative): anchored to knowledge outside the manuscript ("(Smith et al., 2023)", "RoBERTa", "the GLUE benchmark").

OUTPUT FORMAT
Respond ONLY with a valid JSON object of the form
{"premises": [{"index": <int>, "grounding": 0 | 1 | 2}]}
with exactly one entry per input index.

EXAMPLE RESPONSE:
{"premises": [{"index": 1, "grounding": 2}, {"index": 3, "grounding": 0}]}

MACRO-CONTEXT:
{macro_context}

LIST OF PREMISES:
{premise_list}
"""

NOVELTY_EXTRACTION = """ROLE AND OBJECTIVE
TASK: Extract structured targets for verifiable novelty checking.
Two sources follow: PAPER TEXT and REVIEW TEXT.
Return STRICT JSON only (no markdown, no code fences, no extra keys).
The output MUST contain both top-level keys "paper" and "review".
Every novelty claim "text" MUST be verbatim from the REVIEW TEXT (at most two sentences).
If the review makes no novelty claim, return an empty "novelty_claims" list and still include "review".

EXAMPLE RESPONSE:
{"paper": {"core_task": "Long document summarization", "contributions": [{"name": "Token routing", "author_claim_text": "We route tokens to experts.", "description": "Sparse expert routing for long inputs.", "source_hint": "Abstract"}], "key_terms": ["token routing"], "must_have_entities": ["arXiv"]}, "review": {"novelty_claims": [{"claim_id": "C1", "text": "The routing idea is not novel.", "stance": "not_novel", "confidence_lang": "high", "mentions_prior_work": true, "prior_work_strings": ["Fedus et al. (2021)"], "evidence_expected": "method_similarity"}], "all_citations_raw": ["Fedus et al. (2021)"]}}

OUTPUT JSON SCHEMA (must match exactly):
{
  "paper": {
    "core_task": "string (<=20 words)",
    "contributions": [
      {
        "name": "short contribution name (<=15 words)",
        "author_claim_text": "verbatim quote from the paper (<=40 words)",
        "description": "normalized paraphrase (<=60 words)",
        "source_hint": "location tag such as Abstract, Introduction, Conclusion"
      }
    ],
    "key_terms": ["5-12 short phrases"],
    "must_have_entities": ["model, dataset or metric names"]
  },
  "review": {
    "novelty_claims": [
      {
        "claim_id": "C1",
        "text": "verbatim review claim",
        "stance": "not_novel | somewhat_novel | novel | unclear",
        "confidence_lang": "high | medium | low",
        "mentions_prior_work": true,
        "prior_work_strings": ["author-year strings or titles as written"],
        "evidence_expected": "method_similarity | task_similarity | results_similarity | theory_overlap | dataset_overlap"
      }
    ],
    "all_citations_raw": ["anything that looks like a citation, title, arXiv id or URL"]
  }
}

PAPER TEXT:
{paper_text}

REVIEW TEXT:
{review_text}
"""

NOVELTY_CORE_TASK = """ROLE AND OBJECTIVE
TASK: Extract the core task of a research paper.
The full paper text follows.
Return STRICT JSON only (no markdown, no code fences, no extra keys).

OUTPUT JSON SCHEMA (must match exactly):
{"core_task": "string (<=20 words)"}

EXAMPLE RESPONSE:
{"core_task": "Long document summarization with sparse experts"}

PAPER TEXT:
{paper_text}
"""

NOVELTY_CONTRIBUTIONS = """ROLE AND OBJECTIVE
TASK: Extract the main contributions the authors claim.
The full paper text follows.
Return STRICT JSON only (no markdown, no code fences, no extra keys).

OUTPUT JSON SCHEMA (must match exactly):
{
  "contributions": [
    {
      "name": "complete method-type phrase (<=10 words)",
      "author_claim_text": "verbatim quote from the paper (<=40 words)",
      "description": "normalized paraphrase (<=60 words)",
      "source_hint": "location tag such as Abstract, Introduction, Conclusion"
    }
  ]
}

EXAMPLE RESPONSE:
{"contributions": [{"name": "Sparse token routing for long inputs", "author_claim_text": "We route each token to one expert.", "description": "A router that sends tokens to a single expert.", "source_hint": "Introduction"}]}

PAPER TEXT:
{paper_text}
"""

NOVELTY_VERIFICATION = """ROLE AND OBJECTIVE
You are an impartial judge. Decide whether the review sentence is a claim about the paper and how it relates to the related-work evidence.
Use ONLY the text provided. If the claim is too vague or the evidence is missing, use "insufficient".

CLASSIFICATION
- claim: 1 if the sentence is a reviewer claim about the paper under review, else 0.
- proof: 1 if the sentence provides evidence for a claim about the paper, else 0.

AXIS 1, EVIDENCE SUPPORT (stance_alignment)
- "aligned": the claim agrees with and is supported by the related work.
- "partial": some relation exists but the evidence is not conclusive.
- "insufficient": the claim is vague, the evidence is missing, or it cannot be verified.
- "contradicted": the evidence contradicts the claim or no supporting evidence was found.

AXIS 2, CALIBRATION
- "accurate": the strength of the claim matches the evidence.
- "overstated": the reviewer claims too strongly.
- "understated": the reviewer should have been firmer.
- "N/A": the evidence is insufficient to judge calibration.

VERDICT SCALE [-2, +2]
+2 SUPPORTED: the novelty assessment agrees with the retrieved evidence.
+1 OVERSTATED: some relation exists but a "same as / not novel" claim is too strong.
 0 AMBIGUOUS: the claim is too vague or cannot be verified with this evidence.
-1 UNDERSTATED: the reviewer misses very close prior work present in the candidate pool.
-2 UNSUPPORTED: the evidence contradicts the claim, or no supporting evidence was found.

OUTPUT FORMAT
Return STRICT JSON only (no markdown, no code fences, no extra keys).
EXAMPLE RESPONSE:
{
  "review_sentence_id": "S_001",
  "related_paper_id": "P123",
  "classification": {"claim": 1, "proof": 0},
  "stance_alignment": "aligned",
  "calibration": "accurate",
  "score": 2,
  "label": "SUPPORTED",
  "explanation": "Short explanation"
}

REVIEW SENTENCE:
{review_sentence}

PAPER ABSTRACT AND INTRODUCTION:
{paper_abstract_intro}

RELATED WORK (TITLE AND ABSTRACT):
{related_work_title_abstract}
"""

FLAW_ATOMIZATION = """ROLE AND OBJECTIVE
You are an expert meta-reviewer for top-tier computer science venues. Read the raw reviews from several reviewers and consolidate their arguments into a list of unique Micro-flaws.

GROUPING RULES (STRICTLY ENFORCED)
1. Conceptual Consistency (Must Split): arguments in one Micro-flaw MUST address the same fundamental problem. Never merge distinct scientific issues because they share a broad topic.
2. Allowed Aggregation (Can Group): arguments MAY share a Micro-flaw when they point at the exact same error in the paper, for example multiple reviewers citing the same missing baseline.
3. No Forced Fit: when an argument fits no existing Micro-flaw precisely, open a new one.
4. No Upper Bound: the number of Micro-flaws is unlimited and several may share a Macro-topic.

TAXONOMY (7 Macro-topics): Novelty & Contribution; Clarity & Presentation; Applicability, Scalability & Limitations; Experimental Design & Evaluation; Related Work & Citations; Methodology & Theoretical Soundness; Reproducibility & Open Science.

OUTPUT FORMAT
Respond ONLY with a valid JSON object of the form
{"micro_flaws": [{"flaw_id": "F1", "description": "...", "macro_topic": "<one of the 7 Macro-topics>",
  "arguments": [{"reviewer_id": "<id from the reviewer header>", "text": "<verbatim argument text>"}]}]}
Copy every argument text verbatim from the review it comes from.

EXAMPLE RESPONSE:
{"micro_flaws": [{"flaw_id": "F1", "description": "The ablation uses a single seed.", "macro_topic": "Experimental Design & Evaluation", "arguments": [{"reviewer_id": "R1", "text": "The ablation uses a single seed."}]}]}

INPUT REVIEWS:
{input_text}
"""

FLAW_ADJUDICATION = """ROLE AND OBJECTIVE
You are a strict and objective Meta-Reviewer. Given the full paper text and a JSON list of Micro-flaws raised by reviewers, verify each flaw against the manuscript on your own.

FOR EACH MICRO-FLAW, ANSWER:
1. is_valid (True/False): does the flaw genuinely exist in the paper? Answer False for a hallucination, a misunderstanding or an unreasonable request.
2. severity ("Critical" / "Minor"): only when valid, following the ontology below.

SEVERITY ONTOLOGY
- Critical (w=2): fixing it requires new experiments, proof revisions or changes to core claims. Covers methodology, experimental design, novelty, and severe reproducibility or applicability issues.
- Minor (w=1): fixable through textual or editorial revision. Covers clarity and presentation, missing citations, documentation gaps.
- Borderline rule: Prefer Critical if fixing the issue can plausibly alter the main conclusions; prefer Minor if the fix is purely editorial.

OUTPUT FORMAT
Respond ONLY with a valid JSON object of the form
{"verdicts": [{"flaw_id": "F1", "is_valid": true, "severity": "Critical" | "Minor" | null, "rationale": "..."}]}
Use severity null for every invalid flaw.

EXAMPLE RESPONSE:
{"verdicts": [{"flaw_id": "F1", "is_valid": true, "severity": "Critical", "rationale": "Only one seed is reported."}, {"flaw_id": "F2", "is_valid": false, "severity": null, "rationale": "The baseline is in Table 2."}]}

PAPER TEXT:
{paper_text}

MICRO-FLAWS:
{micro_flaws_json}
"""

ARC_EXTRACTION = """ROLE AND OBJECTIVE
You are an expert peer-review analyst. Decompose the peer review below into distinct Atomic Review Comments (ARCs).

EXTRACTION RULES
1. Extract ALL distinct points from Summary, Strengths, Weaknesses, Questions and Suggestions.
2. One point per ARC: when a sentence carries two critiques, split it into two ARCs.
3. Anchor Quote: give a verbatim 5-25 word substring copied EXACTLY from the review to anchor the comment.
4. Comment Type: exactly one of weakness, strength, question, suggestion, observation.

OUTPUT FORMAT
Respond ONLY with a valid JSON object of the form
{"arcs": [{"arc_id": "A1", "text": "...", "anchor_quote": "...", "comment_type": "weakness"}]}

EXAMPLE RESPONSE:
{"arcs": [{"arc_id": "A1", "text": "The ablation needs more seeds.", "anchor_quote": "the curriculum ablation uses a single seed", "comment_type": "weakness"}]}

INPUT REVIEW TEXT:
{raw_review_text}
"""

ARC_SCORING = """ROLE AND OBJECTIVE
You are an expert peer-review analyst. Given the full peer review as macro-context and a list of Atomic Review Comments (ARCs), score EACH comment on five dimensions.

SCORING RUBRIC (Score 0, 1, or 2 for each)
- D1_actionability: can the author act on it?
  0 opinion without guidance ("poorly written"); 1 general direction ("needs more baselines"); 2 specific and implementable ("add [MethodX] on CIFAR-10").
- D2_specificity: does it reference concrete elements of the paper?
  0 vague ("has issues"); 1 semi-specific ("methodology section unclear"); 2 pinpoints the element ("Eq 7 in Sec 4.2 missing term").
- D3_justification: is it backed by evidence?
  0 bare assertion ("not novel"); 1 partial reasoning ("similar to prior work on X"); 2 full evidence ("same loss as [Author2020] Eq 3").
- D4_solution: does it suggest an improvement?
  0 problem only ("baselines weak"); 1 implicit fix ("lacks recent SOTA"); 2 explicit fix ("add [M2023] achieving X%").
- D5_tone: is it respectful?
  0 Hostile / dismissive; 1 neutral and factual; 2 professional, constructive and encouraging.

OUTPUT FORMAT
Respond ONLY with a valid JSON object of the form
{"scores": [{"arc_id": "A1", "D1_actionability": 0, "D2_specificity": 0, "D3_justification": 0, "D4_solution": 0, "D5_tone": 0}]}
with one entry per ARC.

EXAMPLE RESPONSE:
{"scores": [{"arc_id": "A1", "D1_actionability": 2, "D2_specificity": 1, "D3_justification": 1, "D4_solution": 2, "D5_tone": 1}]}

MACRO-CONTEXT:
{raw_review_text}

LIST OF ARCS:
{arc_json_list}
"""

TEMPLATES: Dict[Phase, str] = {
    Phase.DoaSegmentation: DOA_SEGMENTATION,
    Phase.DoaClassification: DOA_CLASSIFICATION,
    Phase.DoaGrounding: DOA_GROUNDING,
    Phase.NoveltyExtraction: NOVELTY_EXTRACTION,
    Phase.NoveltyCoreTask: NOVELTY_CORE_TASK,
    Phase.NoveltyContributions: NOVELTY_CONTRIBUTIONS,
    Phase.NoveltyVerification: NOVELTY_VERIFICATION,
    Phase.FlawAtomization: FLAW_ATOMIZATION,
    Phase.FlawAdjudication: FLAW_ADJUDICATION,
    Phase.ArcExtraction: ARC_EXTRACTION,
    Phase.ArcScoring: ARC_SCORING,
}


def as_phase(phase_id) -> Phase:
    if isinstance(phase_id, Phase):
        return phase_id
    try:
        return Phase(phase_id)
    except ValueError:
        raise UnknownPhaseError(f"Unknown judge phase '{phase_id}'") from None


def required_slots(phase_id) -> Tuple[str, ...]:
    """Slot names in order of first appearance in the phase template."""
    template = TEMPLATES[as_phase(phase_id)]
    seen = []
    for m in _SLOT_RE.finditer(template):
        if m.group(1) not in seen:
            seen.append(m.group(1))
    return tuple(seen)


def example_responses(phase_id) -> Tuple[str, ...]:
    """Example answers embedded in the phase template, in order of appearance."""
    return tuple(m.group(1) for m in _EXAMPLE_RE.finditer(TEMPLATES[as_phase(phase_id)]))


def render_prompt(phase_id, slots: Mapping[str, str]) -> str:
    phase = as_phase(phase_id)
    names = required_slots(phase)
    for name in names:
        value = slots.get(name) if slots else None
        if value is None or not str(value).strip():
            raise MissingSlotError(phase.value, name)

    def substitute(m):
        name = m.group(1)
        return str(slots[name]) if name in names else m.group(0)

    return _SLOT_RE.sub(substitute, TEMPLATES[phase])
