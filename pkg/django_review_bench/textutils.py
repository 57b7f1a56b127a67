import re
from typing import Iterable, Optional

_WS_RE = re.compile(r"\s+")

# "**Summary:**", "## Weaknesses", "Questions:" on a line of their own, and inline bold labels.
_HEADING_LINE_RE = re.compile(
    r"^[ \t]*(?:#{1,6}[ \t]*)?(?:\*\*|__)?[ \t]*"
    r"(summary|strengths?|weaknesses?|questions?|limitations?|soundness|presentation|contribution|"
    r"rating|confidence|review|comments?)"
    r"[ \t]*:?[ \t]*(?:\*\*|__)?[ \t]*:?[ \t]*$",
    re.IGNORECASE | re.MULTILINE,
)
_INLINE_LABEL_RE = re.compile(r"(?:\*\*|__)[A-Za-z][A-Za-z &/]{0,40}:(?:\*\*|__)"
                              r"|(?:\*\*|__)[A-Za-z][A-Za-z &/]{0,40}(?:\*\*|__):")

SECTION_ORDER = ('summary', 'strengths', 'weaknesses', 'questions')


def normalize_ws(text: str) -> str:
    return _WS_RE.sub(' ', text or '').strip()


def strip_headings(text: str) -> str:
    text = _HEADING_LINE_RE.sub(' ', text or '')
    return _INLINE_LABEL_RE.sub(' ', text)


def contains_verbatim(haystack: str, needle: str) -> bool:
    needle = normalize_ws(needle)
    if not needle:
        return False
    return needle in normalize_ws(haystack)


def find_normalized(haystack: str, needle: str) -> Optional[int]:
    """Offset of the first occurrence of needle in whitespace-normalized haystack, or None."""
    needle = normalize_ws(needle)
    if not needle:
        return None
    idx = normalize_ws(haystack).find(needle)
    return idx if idx >= 0 else None


def render_sections(sections: dict, names: Iterable[str] = SECTION_ORDER) -> str:
    parts = []
    for name in names:
        body = (sections.get(name) or '').strip()
        if body:
            parts.append(f"**{name.capitalize()}:**\n{body}")
    return '\n\n'.join(parts)


def word_count(text: str) -> int:
    return len(normalize_ws(text).split(' ')) if normalize_ws(text) else 0
