"""Data model and JSONL ingestion for questions, passages, and cited answers.

A cited answer is plain text whose sentences may carry bracketed passage
markers such as ``[2]``. Parsing segments the text at terminal punctuation,
attaches trailing markers and closing quotes to the sentence they follow,
and collects the cited passage indices per sentence. Markers pointing at
passages that do not exist are dropped with a warning so that generated
candidates with hallucinated indices still flow through downstream scoring.
"""
from __future__ import annotations

import json
import re
import warnings
from dataclasses import dataclass
from typing import Any, Iterable, Iterator

from .errors import CitationWarning, DataError, ParseError

_MARKER = re.compile(r"\[(\d+)\]")
_MARKER_WITH_SPACE = re.compile(r"\s*\[\d+\]")
_WORD_CHAR = re.compile(r"\w")
_TERMINAL_CHARS = ".!?"
_CLOSING_QUOTES = "\"'”’»"


@dataclass(frozen=True)
class Passage:
    """One retrieved passage. ``index`` is the 1-based position within the instance."""

    index: int
    title: str
    text: str
    retrieval_score: float

    def __post_init__(self) -> None:
        if self.index < 1:
            raise DataError(f"passage index must be >= 1, got {self.index}")
        if not self.text:
            raise DataError(f"passage {self.index} has empty text")
        if self.retrieval_score < 0:
            raise DataError(
                f"passage {self.index} has negative retrieval_score {self.retrieval_score}"
            )


@dataclass(frozen=True)
class Instance:
    """A question with its retrieved passages and optional supervision.

    ``facts`` lists atomic facts used for correctness scoring; ``gold_answer``
    is a reference cited answer used to seed training sets.
    """

    id: str
    question: str
    passages: tuple[Passage, ...]
    facts: tuple[str, ...] | None = None
    gold_answer: str | None = None

    def __post_init__(self) -> None:
        if not self.passages:
            raise DataError(f"instance {self.id!r} has no passages")
        seen = set()
        for p in self.passages:
            if p.index in seen:
                raise DataError(f"instance {self.id!r} repeats passage index {p.index}")
            seen.add(p.index)

    @property
    def citation_indices(self) -> frozenset[int]:
        """The set of passage indices a sentence may legally cite."""
        return frozenset(p.index for p in self.passages)

    def passage_by_index(self, index: int) -> Passage:
        for p in self.passages:
            if p.index == index:
                return p
        raise KeyError(index)

    def to_dict(self) -> dict[str, Any]:
        d: dict[str, Any] = {
            "id": self.id,
            "question": self.question,
            "passages": [
                {"title": p.title, "text": p.text, "retrieval_score": p.retrieval_score}
                for p in self.passages
            ],
        }
        if self.facts is not None:
            d["facts"] = list(self.facts)
        if self.gold_answer is not None:
            d["gold_answer"] = self.gold_answer
        return d


@dataclass(frozen=True)
class Sentence:
    """One answer sentence with its citation set.

    ``raw_span`` is the half-open character range this sentence occupied in
    the full answer; the spans of all sentences partition the full text.
    """

    text_without_citations: str
    citations: frozenset[int]
    raw_span: tuple[int, int]


@dataclass(frozen=True)
class CitedAnswer:
    sentences: tuple[Sentence, ...]
    full_text: str

    def __post_init__(self) -> None:
        # Raw spans must tile full_text with no gaps or overlaps.
        pos = 0
        for s in self.sentences:
            if s.raw_span[0] != pos:
                raise ParseError(
                    f"sentence span {s.raw_span} does not start at offset {pos}"
                )
            pos = s.raw_span[1]
        if pos != len(self.full_text):
            raise ParseError(
                f"sentence spans cover {pos} of {len(self.full_text)} characters"
            )

    def content(self) -> tuple[tuple[str, frozenset[int]], ...]:
        """Sentence texts and citation sets, ignoring raw span positions."""
        return tuple((s.text_without_citations, s.citations) for s in self.sentences)


def strip_citations(text: str) -> str:
    """Remove all ``[k]`` markers and collapse runs of whitespace.

    Idempotent; whitespace that only existed to separate a marker from the
    surrounding words is collapsed away with it.
    """
    out = _MARKER_WITH_SPACE.sub("", text)
    out = re.sub(r"\s+", " ", out)
    return out.strip()


def _segment_boundaries(text: str) -> list[int]:
    """End offsets of sentence segments, excluding any unterminated tail."""
    ends: list[int] = []
    i = 0
    n = len(text)
    while i < n:
        if text[i] not in _TERMINAL_CHARS:
            i += 1
            continue
        j = i
        while j < n and text[j] in _TERMINAL_CHARS:
            j += 1
        # Closing quotes and citation markers directly after the terminal
        # punctuation belong to the sentence they follow.
        while True:
            if j < n and text[j] in _CLOSING_QUOTES:
                j += 1
                continue
            m = _MARKER_WITH_SPACE.match(text, j)
            if m:
                j = m.end()
                continue
            break
        ends.append(j)
        i = j
    return ends


def parse_answer(full_text: str, valid_indices: frozenset[int] | set[int]) -> CitedAnswer:
    """Parse a cited answer into sentences with citation sets.

    Markers whose index is not in ``valid_indices`` are excluded and
    reported via :class:`CitationWarning`. Segments that are empty once
    markers and whitespace are removed are dropped (with a warning); their
    character span is folded into the neighboring sentence so the spans
    still partition ``full_text``. An answer with no surviving sentences is
    a :class:`ParseError`.
    """
    if not full_text:
        raise ParseError("empty answer text")
    valid = frozenset(valid_indices)

    ends = _segment_boundaries(full_text)
    segments: list[tuple[int, int]] = []
    prev = 0
    for e in ends:
        segments.append((prev, e))
        prev = e
    if prev < len(full_text):
        if full_text[prev:].strip():
            segments.append((prev, len(full_text)))
        elif segments:
            # Trailing whitespace attaches to the final sentence.
            s, _ = segments[-1]
            segments[-1] = (s, len(full_text))
        else:
            raise ParseError("answer contains only whitespace")

    built: list[tuple[str, frozenset[int], int, int]] = []
    pending_start: int | None = None
    for start, end in segments:
        seg = full_text[start:end]
        cits: set[int] = set()
        for m in _MARKER.finditer(seg):
            k = int(m.group(1))
            if k in valid:
                cits.add(k)
            else:
                warnings.warn(
                    f"citation [{k}] does not name a passage; dropped",
                    CitationWarning,
                    stacklevel=2,
                )
        text = strip_citations(seg)
        eff_start = pending_start if pending_start is not None else start
        # A scoreable sentence needs at least one word character; stray
        # punctuation left over after marker stripping is not a sentence.
        if not _WORD_CHAR.search(text):
            warnings.warn(
                f"sentence at {start}:{end} is empty once citations are stripped; dropped",
                CitationWarning,
                stacklevel=2,
            )
            pending_start = eff_start
            continue
        built.append((text, frozenset(cits), eff_start, end))
        pending_start = None
    if pending_start is not None and built:
        # Dropped trailing segments fold into the last kept sentence.
        text, cits, s0, _ = built[-1]
        built[-1] = (text, cits, s0, segments[-1][1])
    if not built:
        raise ParseError("answer parsed to zero sentences")

    sentences = tuple(
        Sentence(text_without_citations=t, citations=c, raw_span=(s, e))
        for t, c, s, e in built
    )
    return CitedAnswer(sentences=sentences, full_text=full_text)


def render_sentence(sentence: Sentence) -> str:
    """Render one sentence with markers in canonical position.

    Markers are placed ascending, immediately before the terminal
    punctuation run (and any closing quotes attached to it).
    """
    text = sentence.text_without_citations
    m = re.search(rf"[{re.escape(_TERMINAL_CHARS)}]+[{re.escape(_CLOSING_QUOTES)}]*$", text)
    body, tail = (text[: m.start()], text[m.start() :]) if m else (text, "")
    if sentence.citations:
        markers = "".join(f"[{k}]" for k in sorted(sentence.citations))
        return f"{body} {markers}{tail}".lstrip()
    return text


def render_answer(answer: CitedAnswer) -> str:
    """Canonical single-line rendering: sentences joined by one space."""
    return " ".join(render_sentence(s) for s in answer.sentences)


def _require(obj: dict[str, Any], key: str, kind: type, path: str, line: int) -> Any:
    if key not in obj:
        raise DataError(f"missing required field {key!r}", path=path, line=line)
    value = obj[key]
    if kind is float:
        if not isinstance(value, (int, float)) or isinstance(value, bool):
            raise DataError(f"field {key!r} must be a number", path=path, line=line)
        return float(value)
    if not isinstance(value, kind):
        raise DataError(f"field {key!r} must be {kind.__name__}", path=path, line=line)
    return value


def iter_jsonl(path: str) -> Iterator[tuple[int, Any]]:
    """Yield (line_number, parsed_object) for each nonblank line of a JSONL file."""
    try:
        fh = open(path, encoding="utf-8")
    except OSError as exc:
        raise DataError(f"cannot open: {exc}", path=path) from exc
    with fh:
        for lineno, raw in enumerate(fh, start=1):
            if not raw.strip():
                continue
            try:
                yield lineno, json.loads(raw)
            except json.JSONDecodeError as exc:
                raise DataError(f"malformed JSON: {exc.msg}", path=path, line=lineno) from exc


def instance_from_dict(obj: Any, path: str = "<memory>", line: int = 0) -> Instance:
    if not isinstance(obj, dict):
        raise DataError("expected a JSON object", path=path, line=line)
    iid = _require(obj, "id", str, path, line)
    question = _require(obj, "question", str, path, line)
    raw_passages = _require(obj, "passages", list, path, line)
    if not raw_passages:
        raise DataError("field 'passages' must be nonempty", path=path, line=line)
    passages = []
    for i, rp in enumerate(raw_passages, start=1):
        if not isinstance(rp, dict):
            raise DataError(f"passage {i} must be an object", path=path, line=line)
        passages.append(
            Passage(
                index=i,
                title=_require(rp, "title", str, path, line),
                text=_require(rp, "text", str, path, line),
                retrieval_score=_require(rp, "retrieval_score", float, path, line),
            )
        )
    facts = None
    if "facts" in obj and obj["facts"] is not None:
        raw_facts = obj["facts"]
        if not isinstance(raw_facts, list) or not all(isinstance(f, str) for f in raw_facts):
            raise DataError("field 'facts' must be a list of strings", path=path, line=line)
        facts = tuple(raw_facts)
    gold = None
    if "gold_answer" in obj and obj["gold_answer"] is not None:
        if not isinstance(obj["gold_answer"], str):
            raise DataError("field 'gold_answer' must be a string", path=path, line=line)
        gold = obj["gold_answer"]
    try:
        return Instance(id=iid, question=question, passages=tuple(passages), facts=facts, gold_answer=gold)
    except DataError as exc:
        raise DataError(str(exc), path=path, line=line) from exc


def load_instances(path: str) -> list[Instance]:
    """Load instances from JSONL, preserving file order.

    Any malformed line raises a :class:`DataError` carrying the path and
    line number.
    """
    out = []
    for lineno, obj in iter_jsonl(path):
        out.append(instance_from_dict(obj, path=path, line=lineno))
    return out


def dump_instances(instances: Iterable[Instance], path: str) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for inst in instances:
            fh.write(json.dumps(inst.to_dict(), sort_keys=True, separators=(",", ":")))
            fh.write("\n")
