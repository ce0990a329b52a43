"""Character vocabularies and fixed-length one-hot encoding of line notations.

Encoding is strictly character level: ``"Cl"`` is two symbols.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import (
    EmptyInputError,
    EncodingError,
    SequenceOverflowError,
    UnknownCharacterError,
)

__all__ = [
    "UNK_TOKEN",
    "SMILES_MAX_LEN",
    "INCHI_MAX_LEN",
    "Vocabulary",
    "EncoderSpec",
    "build_vocabulary",
    "encode_onehot",
    "encode_batch",
    "decode_onehot",
]

UNK_TOKEN = "<UNK>"
SMILES_MAX_LEN = 82
INCHI_MAX_LEN = 162


@dataclass(frozen=True)
class Vocabulary:
    """Ordered characters; the UNK slot, when reserved, is the last column."""

    chars: tuple
    has_unk: bool = False

    def __post_init__(self):
        chars = tuple(self.chars)
        if len(set(chars)) != len(chars):
            raise EncodingError("vocabulary has duplicate characters")
        if any(len(c) != 1 for c in chars):
            raise EncodingError("vocabulary entries must be single characters")
        object.__setattr__(self, "chars", chars)
        object.__setattr__(self, "_index", {c: i for i, c in enumerate(chars)})

    @property
    def index(self):
        return dict(self._index)

    @property
    def unk_index(self):
        return len(self.chars) if self.has_unk else None

    def __len__(self):
        return len(self.chars) + (1 if self.has_unk else 0)

    def lookup(self, char):
        return self._index.get(char)

    def symbol(self, i):
        if i == self.unk_index:
            return UNK_TOKEN
        return self.chars[i]

    def to_lines(self):
        return list(self.chars) + ([UNK_TOKEN] if self.has_unk else [])

    @classmethod
    def from_lines(cls, lines):
        lines = list(lines)
        has_unk = UNK_TOKEN in lines
        if has_unk and lines.index(UNK_TOKEN) != len(lines) - 1:
            raise EncodingError(f"{UNK_TOKEN} must be the last vocabulary entry")
        return cls(tuple(c for c in lines if c != UNK_TOKEN), has_unk)

    def save(self, path):
        """Write one character per line, UTF-8, UNK as the literal ``<UNK>``."""
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write("\n".join(self.to_lines()) + "\n")

    @classmethod
    def load(cls, path):
        with open(path, encoding="utf-8", newline="\n") as fh:
            text = fh.read()
        lines = text.split("\n")
        if lines and lines[-1] == "":
            lines.pop()
        return cls.from_lines(lines)


def build_vocabulary(corpus, reserve_unk=False):
    """Sorted (by code point) set of every character in ``corpus``."""
    corpus = list(corpus)
    if not corpus:
        raise EmptyInputError("cannot build a vocabulary from an empty corpus")
    chars = set()
    for s in corpus:
        chars.update(s)
    return Vocabulary(tuple(sorted(chars)), reserve_unk)


@dataclass(frozen=True)
class EncoderSpec:
    vocabulary: Vocabulary
    max_len: int
    overflow_policy: str = "reject"
    unknown_policy: str = "reject"

    def __post_init__(self):
        if self.max_len < 1:
            raise EncodingError(f"max_len must be >= 1, got {self.max_len}")
        if self.overflow_policy not in ("reject", "truncate"):
            raise EncodingError(f"unknown overflow_policy {self.overflow_policy!r}")
        if self.unknown_policy not in ("reject", "map_to_unk"):
            raise EncodingError(f"unknown unknown_policy {self.unknown_policy!r}")
        if self.unknown_policy == "map_to_unk" and not self.vocabulary.has_unk:
            raise EncodingError("map_to_unk needs a vocabulary with a reserved UNK slot")

    @property
    def width(self):
        return len(self.vocabulary)


def _indices(s, spec):
    if not s:
        raise EmptyInputError("cannot encode an empty string")
    if len(s) > spec.max_len:
        if spec.overflow_policy == "reject":
            raise SequenceOverflowError(
                f"string of length {len(s)} exceeds max_len {spec.max_len}: {s!r}"
            )
        s = s[: spec.max_len]
    vocab = spec.vocabulary
    idx = []
    for offset, ch in enumerate(s):
        i = vocab.lookup(ch)
        if i is None:
            if spec.unknown_policy == "reject":
                raise UnknownCharacterError(ch, offset, s)
            i = vocab.unk_index
        idx.append(i)
    return idx


def encode_onehot(s, spec):
    """One-hot matrix ``[max_len, |vocab|]``; rows past ``len(s)`` are zero."""
    out = np.zeros((spec.max_len, spec.width))
    idx = _indices(s, spec)
    out[np.arange(len(idx)), idx] = 1.0
    return out


def encode_batch(strings, spec):
    """Stack :func:`encode_onehot` over ``strings`` into ``[B, max_len, |vocab|]``."""
    strings = list(strings)
    out = np.zeros((len(strings), spec.max_len, spec.width))
    for b, s in enumerate(strings):
        idx = _indices(s, spec)
        out[b, np.arange(len(idx)), idx] = 1.0
    return out


def decode_onehot(m, spec):
    """Inverse of :func:`encode_onehot` for well-formed matrices."""
    m = np.asarray(m, dtype=np.float64)
    if m.shape != (spec.max_len, spec.width):
        raise EncodingError(f"matrix shape {m.shape} != ({spec.max_len}, {spec.width})")
    sums = m.sum(axis=1)
    chars = []
    in_padding = False
    for t, row_sum in enumerate(sums):
        if row_sum == 0:
            in_padding = True
            continue
        if row_sum != 1 or not np.all((m[t] == 0) | (m[t] == 1)):
            raise EncodingError(f"row {t} is not one-hot (sum {row_sum})")
        if in_padding:
            raise EncodingError(f"non-zero row {t} after zero padding")
        chars.append(spec.vocabulary.symbol(int(np.argmax(m[t]))))
    if not chars:
        raise EncodingError("all-zero matrix decodes to an empty string")
    return "".join(chars)
