"""Two deliberately different toy subword tokenizers.

The scorer-style tokenizer folds each space into the surface of the token
that follows it (`"a b"` -> `"a"`, `" b"`). The model-style tokenizer
replaces each space with an underscore prefix on the next token
(`"a b"` -> `"a"`, `"_b"`) and emits `[k]` citation markers as atomic
tokens. Both segment words by greedy longest match against a fixed merge
table, falling back to single characters, so any input tokenizes.
"""
from __future__ import annotations

import re
from dataclasses import dataclass
from functools import lru_cache
from importlib.resources import files

from .errors import ContractError

_MARKER_CHUNK = re.compile(r"(\[\d+\])")
_MARKER_FULL = re.compile(r"\[\d+\]")

SPACE_MARKER = "_"


@dataclass(frozen=True)
class Token:
    surface: str
    is_special: bool = False
    is_citation_marker: bool = False

    def __post_init__(self) -> None:
        if not self.surface and not self.is_special:
            raise ContractError("non-special token with empty surface")


@dataclass(frozen=True)
class Tokenization:
    tokens: tuple[Token, ...]
    source_text: str

    def surfaces(self) -> tuple[str, ...]:
        return tuple(t.surface for t in self.tokens)


class MergeTable:
    """Fixed piece vocabulary; line order in the source file is kept for digests."""

    def __init__(self, pieces: list[str]):
        cleaned = [p for p in (p.strip() for p in pieces) if p]
        self.ordered = tuple(cleaned)
        self._pieces = frozenset(cleaned)
        self._max_len = max((len(p) for p in cleaned), default=1)

    @classmethod
    def from_file(cls, path: str) -> MergeTable:
        with open(path, encoding="utf-8") as fh:
            return cls(fh.read().splitlines())

    def segment(self, word: str) -> list[str]:
        """Greedy longest-match split; unknown characters become 1-char pieces."""
        out: list[str] = []
        i = 0
        n = len(word)
        while i < n:
            for length in range(min(self._max_len, n - i), 0, -1):
                piece = word[i : i + length]
                if piece in self._pieces:
                    out.append(piece)
                    i += length
                    break
            else:
                out.append(word[i])
                i += 1
        return out


def _data_text(name: str) -> list[str]:
    return (files("calf") / "data" / name).read_text(encoding="utf-8").splitlines()


@lru_cache(maxsize=None)
def scorer_table() -> MergeTable:
    return MergeTable(_data_text("scorer_pieces.txt"))


@lru_cache(maxsize=None)
def model_table() -> MergeTable:
    return MergeTable(_data_text("model_pieces.txt"))


def _normalize(text: str) -> str:
    return " ".join(text.split())


def tokenize_scorer(text: str) -> Tokenization:
    """Segment with the scorer vocabulary; spaces attach to the next token."""
    norm = _normalize(text)
    tokens: list[Token] = []
    for wi, word in enumerate(norm.split(" ") if norm else []):
        for pi, piece in enumerate(scorer_table().segment(word)):
            surface = " " + piece if wi > 0 and pi == 0 else piece
            tokens.append(Token(surface=surface))
    return Tokenization(tokens=tuple(tokens), source_text=text)


def tokenize_model(text: str) -> Tokenization:
    """Segment with the model vocabulary; spaces become underscore prefixes.

    Each bracketed index such as ``[2]`` is one atomic token flagged as a
    citation marker, never split by the merge table.
    """
    norm = _normalize(text)
    tokens: list[Token] = []
    for wi, word in enumerate(norm.split(" ") if norm else []):
        pending_space = wi > 0
        for chunk in _MARKER_CHUNK.split(word):
            if not chunk:
                continue
            if _MARKER_FULL.fullmatch(chunk):
                surface = SPACE_MARKER + chunk if pending_space else chunk
                tokens.append(Token(surface=surface, is_citation_marker=True))
                pending_space = False
                continue
            for piece in model_table().segment(chunk):
                surface = SPACE_MARKER + piece if pending_space else piece
                tokens.append(Token(surface=surface))
                pending_space = False
    return Tokenization(tokens=tuple(tokens), source_text=text)


def detokenize(tokenization: Tokenization) -> str:
    """Invert either convention back to space-normalized text.

    Exact only for sources that contain no literal underscore; the model
    convention cannot distinguish one from a space.
    """
    parts: list[str] = []
    for tok in tokenization.tokens:
        if tok.is_special:
            continue
        parts.append(tok.surface.replace(SPACE_MARKER, " "))
    return _normalize("".join(parts))
