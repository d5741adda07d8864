"""Calendar timestamps of claims and evidence, and day-level distances between them.

The sign convention throughout the package: evidence published after its claim
gets a positive day offset, evidence published before it a negative one, and
same-day publication gives zero. Snippets without a recoverable timestamp carry
``None`` wherever a day offset is expected.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from datetime import date

import numpy as np

MAX_SNIPPETS = 10

_MONTH_NUMBERS = {
    "january": 1, "february": 2, "march": 3, "april": 4, "may": 5, "june": 6,
    "july": 7, "august": 8, "september": 9, "october": 10, "november": 11,
    "december": 12,
}
_MONTH_NUMBERS.update({name[:3]: num for name, num in _MONTH_NUMBERS.items()})

_ISO = re.compile(r"\s*(\d{4})-(\d{2})-(\d{2})(?!\d)")
_MONTH_FIRST = re.compile(r"\s*([a-z]{3,9})\s+(\d{1,2}),\s*(\d{4})(?!\d)", re.IGNORECASE)
_DAY_FIRST = re.compile(r"\s*(\d{1,2})\s+([a-z]{3,9})\s+(\d{4})(?!\d)", re.IGNORECASE)


def parse_date(text: str | None) -> date | None:
    """Extract a calendar date from the beginning of a snippet's text.

    Recognized prefixes (case-insensitive, leading whitespace tolerated):
    ``YYYY-MM-DD``, ``Mon D, YYYY`` / ``Month D, YYYY`` with English month
    names or three-letter abbreviations, and ``D Month YYYY``. Anything else,
    including syntactically well-formed but invalid calendar dates such as
    Feb 30, yields ``None``.
    """
    if not text:
        return None
    m = _ISO.match(text)
    if m:
        return _checked_date(int(m.group(1)), int(m.group(2)), int(m.group(3)))
    m = _MONTH_FIRST.match(text)
    if m:
        month = _MONTH_NUMBERS.get(m.group(1).lower())
        if month is not None:
            return _checked_date(int(m.group(3)), month, int(m.group(2)))
    m = _DAY_FIRST.match(text)
    if m:
        month = _MONTH_NUMBERS.get(m.group(2).lower())
        if month is not None:
            return _checked_date(int(m.group(3)), month, int(m.group(1)))
    return None


def _checked_date(year: int, month: int, day: int) -> date | None:
    try:
        return date(year, month, day)
    except ValueError:
        return None


def days_between(a: date, b: date) -> int:
    """Signed number of calendar days from ``a`` to ``b`` (negative when b is earlier)."""
    return (b - a).days


def _finite_vector(value, name: str, owner: str) -> np.ndarray:
    vec = np.asarray(value, dtype=np.float64)
    if vec.ndim != 1:
        raise ValueError(f"{name} of {owner} must be a one-dimensional vector")
    if not np.all(np.isfinite(vec)):
        raise ValueError(f"{name} of {owner} contains NaN or Inf")
    return vec


@dataclass(frozen=True, eq=False)
class Claim:
    """A dated, domain-labeled statement with precomputed content and metadata vectors."""

    claim_id: str
    domain: str
    label: str
    timestamp: date
    claim_vector: np.ndarray
    metadata_vector: np.ndarray

    def __post_init__(self):
        object.__setattr__(
            self, "claim_vector",
            _finite_vector(self.claim_vector, "claim_vector", f"claim {self.claim_id!r}"))
        object.__setattr__(
            self, "metadata_vector",
            _finite_vector(self.metadata_vector, "metadata_vector", f"claim {self.claim_id!r}"))


@dataclass(frozen=True, eq=False)
class EvidenceSnippet:
    """One retrieved evidence item: content vector, search position, optional date."""

    snippet_id: str
    evidence_vector: np.ndarray
    search_rank: int
    snippet_text: str | None = None
    timestamp: date | None = None

    def __post_init__(self):
        object.__setattr__(
            self, "evidence_vector",
            _finite_vector(self.evidence_vector, "evidence_vector",
                           f"snippet {self.snippet_id!r}"))
        if not isinstance(self.search_rank, int) or self.search_rank < 1:
            raise ValueError(
                f"snippet {self.snippet_id!r}: search_rank must be an integer >= 1")


@dataclass(frozen=True, eq=False)
class EvidenceSet:
    """The ordered evidence snippets retrieved for one claim (at most ten)."""

    snippets: tuple[EvidenceSnippet, ...]

    def __post_init__(self):
        object.__setattr__(self, "snippets", tuple(self.snippets))
        if not 1 <= len(self.snippets) <= MAX_SNIPPETS:
            raise ValueError(
                f"evidence set must hold 1..{MAX_SNIPPETS} snippets, got {len(self.snippets)}")
        ranks = [s.search_rank for s in self.snippets]
        if len(set(ranks)) != len(ranks):
            raise ValueError("search_rank values must be unique within an evidence set")

    def __len__(self) -> int:
        return len(self.snippets)

    def __iter__(self):
        return iter(self.snippets)

    def __getitem__(self, index: int) -> EvidenceSnippet:
        return self.snippets[index]


@dataclass(frozen=True)
class DeltaSet:
    """Per-snippet day offsets to the claim, ``None`` for undated snippets."""

    deltas: tuple[int | None, ...]

    def __post_init__(self):
        object.__setattr__(self, "deltas", tuple(self.deltas))

    def __len__(self) -> int:
        return len(self.deltas)

    def present_indices(self) -> tuple[int, ...]:
        return tuple(j for j, d in enumerate(self.deltas) if d is not None)

    def present_values(self) -> tuple[int, ...]:
        return tuple(d for d in self.deltas if d is not None)


def temporal_distance(claim: Claim, snippet: EvidenceSnippet) -> int | None:
    """Day offset from claim to snippet publication, ``None`` if the snippet is undated."""
    if snippet.timestamp is None:
        return None
    return days_between(claim.timestamp, snippet.timestamp)


def compute_delta_set(claim: Claim, evidence: EvidenceSet) -> DeltaSet:
    """Element-wise day offsets for a whole evidence set, preserving snippet order."""
    return DeltaSet(tuple(temporal_distance(claim, s) for s in evidence))
