"""Synthetic claim-verification datasets with a planted temporal relevance signal.

Every label gets a signature direction in the leading evidence-vector
coordinates. For a time-insensitive claim, all snippets carry the gold label's
signature. For a time-sensitive claim, only snippets inside a relevance window
(defined by the configured ranking hypothesis: most recent, most recent at or
before the claim, closest to the claim, closest to the temporal medoid, or top
search positions) carry the gold signature; all other snippets adversarially
carry one fixed wrong label's signature. The gold label is therefore
recoverable from the evidence vectors only when snippets are weighted
according to the planted scheme.

The trailing four evidence-vector coordinates encode each snippet's temporal
standing (recency, closeness to the claim, closeness to the medoid, search
position), so a linear scorer can realize each hypothesis' ordering. Claim and
metadata vectors are pure noise and carry no label information.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from datetime import date, timedelta
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from .data import ClaimInstance, save_dataset
from .model import DomainSchema
from .rankings import RankingMethod, medoid
from .temporal import Claim, EvidenceSet, EvidenceSnippet

TEMPORAL_FEATURES = 4
_BASE_DATE = date(2016, 1, 1)
_CLAIM_DATE_SPAN = 1461  # four years of possible claim dates


@dataclass(frozen=True)
class SyntheticSpec:
    """Generator configuration; every field is part of the deterministic output."""

    domains: Mapping[str, Sequence[str]]
    claims_per_domain: int
    method: RankingMethod = RankingMethod.EVIDENCE_RECENCY
    dim: int = 32
    meta_dim: int = 8
    min_snippets: int = 5
    max_snippets: int = 10
    window_days: int = 30
    horizon_days: int = 365
    time_sensitive_fraction: float = 0.7
    missing_timestamp_rate: float = 0.1
    post_claim_rate: float = 0.5
    noise_scale: float = 0.1
    temporal_scale: float = 1.0
    text_date_rate: float = 0.5
    search_window: int = 1
    split_fractions: tuple[float, float, float] = (0.6, 0.2, 0.2)

    def __post_init__(self):
        object.__setattr__(self, "domains",
                           {d: tuple(v) for d, v in self.domains.items()})
        if not self.domains:
            raise ValueError("at least one domain is required")
        for domain, labels in self.domains.items():
            if len(labels) < 2:
                raise ValueError(f"domain {domain!r} needs at least two labels so that "
                                 "adversarial evidence has a wrong label to vote for")
        if self.claims_per_domain < 1:
            raise ValueError("claims_per_domain must be >= 1")
        if not 1 <= self.min_snippets <= self.max_snippets <= 10:
            raise ValueError("snippet counts must satisfy 1 <= min <= max <= 10")
        if self.horizon_days < 1:
            raise ValueError("horizon_days must be >= 1")
        if not 0 <= self.window_days <= self.horizon_days:
            raise ValueError("window_days must lie within [0, horizon_days]: "
                             "a window larger than the horizon is unsatisfiable")
        for name in ("time_sensitive_fraction", "missing_timestamp_rate",
                     "post_claim_rate", "text_date_rate"):
            value = getattr(self, name)
            if not 0.0 <= value <= 1.0:
                raise ValueError(f"{name} must lie in [0, 1]")
        if self.dim < TEMPORAL_FEATURES + 1:
            raise ValueError(f"dim must be > {TEMPORAL_FEATURES} to leave room for "
                             "label signatures next to the temporal features")
        if self.meta_dim < 1:
            raise ValueError("meta_dim must be >= 1")
        if self.search_window < 1:
            raise ValueError("search_window must be >= 1")
        fractions = tuple(float(f) for f in self.split_fractions)
        if len(fractions) != 3 or any(f < 0 for f in fractions) or \
                abs(sum(fractions) - 1.0) > 1e-9:
            raise ValueError("split_fractions must be three nonnegative numbers summing to 1")
        object.__setattr__(self, "split_fractions", fractions)

    @property
    def signature_dim(self) -> int:
        return self.dim - TEMPORAL_FEATURES

    @classmethod
    def from_obj(cls, obj: dict) -> "SyntheticSpec":
        kwargs = dict(obj)
        if "method" in kwargs:
            kwargs["method"] = RankingMethod.from_name(kwargs["method"])
        if "split_fractions" in kwargs:
            kwargs["split_fractions"] = tuple(kwargs["split_fractions"])
        return cls(**kwargs)


@dataclass
class SyntheticDataset:
    """Generated splits plus the planted structure needed for self-checks."""

    spec: SyntheticSpec
    seed: int
    schema: DomainSchema
    splits: dict[str, list[ClaimInstance]]
    signatures: np.ndarray                      # (total_labels, signature_dim)
    relevant: dict[str, tuple[bool, ...]]       # claim_id -> in-window flags
    true_deltas: dict[str, tuple[int, ...]]     # claim_id -> day offsets before erasure
    sensitive: dict[str, bool] = field(default_factory=dict)


def _window_flags(deltas: list[int], ranks: np.ndarray, method: RankingMethod,
                  window: int, search_window: int) -> list[bool]:
    if method is RankingMethod.SEARCH_RANK:
        return [int(r) <= search_window for r in ranks]
    if method is RankingMethod.EVIDENCE_RECENCY:
        top = max(deltas)
        return [d >= top - window for d in deltas]
    if method is RankingMethod.CLAIM_RECENCY:
        pre = [d for d in deltas if d <= 0]
        if not pre:
            return [False] * len(deltas)
        top = max(pre)
        return [d <= 0 and d >= top - window for d in deltas]
    if method is RankingMethod.CLAIM_CLOSENESS:
        return [abs(d) <= window for d in deltas]
    if method is RankingMethod.EVIDENCE_CLUSTERING:
        center = medoid(deltas)
        return [abs(d - center) <= window for d in deltas]
    raise ValueError(f"unhandled ranking method: {method}")


def _ensure_window_nonempty(deltas: list[int], method: RankingMethod, window: int,
                            rng: np.random.Generator) -> None:
    """Nudge one snippet into the window when a draw left it empty."""
    if method is RankingMethod.CLAIM_RECENCY and not any(d <= 0 for d in deltas):
        deltas[int(rng.integers(len(deltas)))] = int(rng.integers(-window, 1))
    elif method is RankingMethod.CLAIM_CLOSENESS and not any(abs(d) <= window for d in deltas):
        deltas[int(rng.integers(len(deltas)))] = int(rng.integers(-window, window + 1))


def _date_text(day: date, variant: int, claim_id: str, index: int) -> str:
    if variant == 0:
        prefix = day.isoformat()
    elif variant == 1:
        prefix = f"{day.strftime('%b')} {day.day}, {day.year}"
    else:
        prefix = f"{day.day} {day.strftime('%B')} {day.year}"
    return f"{prefix} - coverage related to {claim_id}, item {index}"


def generate_synthetic(spec: SyntheticSpec, seed: int) -> SyntheticDataset:
    """Build a dataset deterministically from the spec and seed."""
    rng = np.random.default_rng(seed)
    schema = DomainSchema.from_labels(spec.domains)
    signatures = rng.normal(size=(schema.total_labels, spec.signature_dim))
    signatures /= np.linalg.norm(signatures, axis=1, keepdims=True)

    splits: dict[str, list[ClaimInstance]] = {"train": [], "dev": [], "test": []}
    relevant: dict[str, tuple[bool, ...]] = {}
    true_deltas: dict[str, tuple[int, ...]] = {}
    sensitive_flags: dict[str, bool] = {}

    for domain in schema.domains:
        labels = schema.labels[domain]
        instances = []
        for i in range(spec.claims_per_domain):
            claim_id = f"{domain}-{i:05d}"
            claim_date = _BASE_DATE + timedelta(days=int(rng.integers(_CLAIM_DATE_SPAN)))
            k = int(rng.integers(spec.min_snippets, spec.max_snippets + 1))
            ranks = rng.permutation(k) + 1
            deltas = []
            for _ in range(k):
                if rng.random() < spec.post_claim_rate:
                    deltas.append(int(rng.integers(1, spec.horizon_days + 1)))
                else:
                    deltas.append(int(rng.integers(-spec.horizon_days, 1)))
            _ensure_window_nonempty(deltas, spec.method, spec.window_days, rng)
            in_window = _window_flags(deltas, ranks, spec.method,
                                      spec.window_days, spec.search_window)
            sensitive = bool(rng.random() < spec.time_sensitive_fraction)
            gold = labels[int(rng.integers(len(labels)))]
            others = [lab for lab in labels if lab != gold]
            wrong = others[int(rng.integers(len(others)))]

            center = medoid(deltas)
            snippets = []
            for j in range(k):
                delta = deltas[j]
                voted = gold if (not sensitive or in_window[j]) else wrong
                vec = rng.normal(size=spec.dim) * spec.noise_scale
                vec[:spec.signature_dim] += signatures[schema.global_index(domain, voted)]
                # monotone encodings of the four relevance hypotheses, shifted
                # to be roughly zero-mean so fresh ReLU scorers stay alive
                features = np.array([
                    delta / spec.horizon_days,
                    0.5 - abs(delta) / spec.horizon_days,
                    0.5 - abs(delta - center) / spec.horizon_days,
                    0.5 - (int(ranks[j]) - 1) / max(k - 1, 1),
                ])
                vec[spec.signature_dim:] += spec.temporal_scale * features
                snippet_date = claim_date + timedelta(days=delta)
                missing = rng.random() < spec.missing_timestamp_rate
                if rng.random() < spec.text_date_rate:
                    text = _date_text(snippet_date, int(rng.integers(3)), claim_id, j)
                else:
                    text = f"coverage related to {claim_id}, item {j}"
                snippets.append(EvidenceSnippet(
                    snippet_id=f"{claim_id}-e{j}",
                    evidence_vector=vec,
                    search_rank=int(ranks[j]),
                    snippet_text=text,
                    timestamp=None if missing else snippet_date,
                ))
            claim = Claim(
                claim_id=claim_id,
                domain=domain,
                label=gold,
                timestamp=claim_date,
                claim_vector=rng.normal(size=spec.dim) * spec.noise_scale,
                metadata_vector=rng.normal(size=spec.meta_dim) * spec.noise_scale,
            )
            instances.append(ClaimInstance(claim, EvidenceSet(tuple(snippets))))
            relevant[claim_id] = tuple(in_window)
            true_deltas[claim_id] = tuple(deltas)
            sensitive_flags[claim_id] = sensitive

        order = rng.permutation(len(instances))
        n_train = int(spec.split_fractions[0] * len(instances))
        n_dev = int(spec.split_fractions[1] * len(instances))
        for pos, idx in enumerate(order):
            if pos < n_train:
                splits["train"].append(instances[idx])
            elif pos < n_train + n_dev:
                splits["dev"].append(instances[idx])
            else:
                splits["test"].append(instances[idx])

    return SyntheticDataset(spec, seed, schema, splits, signatures,
                            relevant, true_deltas, sensitive_flags)


def decode_label(dataset: SyntheticDataset, instance: ClaimInstance,
                 snippet_index: int) -> str:
    """Nearest-signature readout: the label a snippet's vector votes for."""
    spec = dataset.spec
    schema = dataset.schema
    domain = instance.claim.domain
    content = instance.evidence[snippet_index].evidence_vector[:spec.signature_dim]
    labels = schema.labels[domain]
    scores = [float(dataset.signatures[schema.global_index(domain, lab)] @ content)
              for lab in labels]
    return labels[int(np.argmax(scores))]


def write_splits(dataset: SyntheticDataset, out_dir) -> None:
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    for name, instances in dataset.splits.items():
        save_dataset(instances, out_dir / f"{name}.jsonl")


def respec(spec: SyntheticSpec, **changes) -> SyntheticSpec:
    """A copy of the spec with the given fields replaced."""
    return replace(spec, **changes)
