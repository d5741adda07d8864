"""The differentiable veracity head, with manual forward and backward passes.

Per snippet, the claim, evidence and metadata vectors are fused by
concatenation with element-wise difference and product blocks. The fused
vector feeds two heads: a label head (projection into label-embedding space,
dot-product similarity against all label embeddings, domain mask, per-domain
affine layer with Leaky ReLU) and a ranking head (affine layer with ReLU
producing a nonnegative score). Class logits are the score-weighted sum of the
per-snippet label vectors, followed by a softmax over the claim's domain
labels.

Parameters split into two disjoint named sets: "classification" (everything
except the ranking layer) and "ranking" (the ranking layer only), each driven
by its own optimizer during fine-tuning.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from .listmle import ScoredRanking, listmle_gradient, listmle_loss
from .rankings import GroundTruthRanking
from .temporal import Claim, EvidenceSet

LABEL_EMBEDDING_DIM = 16
LEAKY_SLOPE = 0.01
CHECKPOINT_VERSION = 1


@dataclass
class DomainSchema:
    """Domains with their ordered label vocabularies and global label indexing."""

    domains: tuple[str, ...]
    labels: dict[str, tuple[str, ...]]
    _offsets: dict[str, int] = field(init=False, repr=False)

    def __post_init__(self):
        self.domains = tuple(self.domains)
        if len(set(self.domains)) != len(self.domains):
            raise ValueError("duplicate domain names")
        self.labels = {d: tuple(self.labels[d]) for d in self.domains}
        offsets, total = {}, 0
        for d in self.domains:
            names = self.labels[d]
            if not names or len(set(names)) != len(names):
                raise ValueError(f"domain {d!r} needs a non-empty set of distinct labels")
            offsets[d] = total
            total += len(names)
        self._offsets = offsets

    @classmethod
    def from_labels(cls, labels: Mapping[str, Sequence[str]]) -> "DomainSchema":
        return cls(tuple(labels.keys()), {d: tuple(v) for d, v in labels.items()})

    @property
    def total_labels(self) -> int:
        return sum(len(v) for v in self.labels.values())

    def n_labels(self, domain: str) -> int:
        return len(self.labels[domain])

    def label_slice(self, domain: str) -> slice:
        start = self._offsets[domain]
        return slice(start, start + len(self.labels[domain]))

    def local_index(self, domain: str, label: str) -> int:
        try:
            return self.labels[domain].index(label)
        except ValueError:
            raise ValueError(f"label {label!r} is not registered for domain {domain!r}")

    def global_index(self, domain: str, label: str) -> int:
        return self._offsets[domain] + self.local_index(domain, label)

    def mask(self, domain: str) -> np.ndarray:
        """0/1 vector over all global labels, 1 exactly on this domain's labels."""
        if domain not in self._offsets:
            raise ValueError(f"unknown domain {domain!r}")
        out = np.zeros(self.total_labels)
        out[self.label_slice(domain)] = 1.0
        return out


@dataclass
class ModelParameters:
    """All trainable tensors, addressable by name for optimizer scoping."""

    d: int
    d_m: int
    d_l: int
    label_embeddings: np.ndarray            # (T, d_l)
    fusion_projection: np.ndarray           # (d_l, d_f)
    label_fc_w: dict[str, np.ndarray]       # domain -> (n_domain, T)
    label_fc_b: dict[str, np.ndarray]       # domain -> (n_domain,)
    ranking_w: np.ndarray                   # (d_f,)
    ranking_b: np.ndarray                   # (1,)

    @property
    def fused_dim(self) -> int:
        return 4 * self.d + self.d_m

    def named(self) -> dict[str, np.ndarray]:
        out = {
            "label_embeddings": self.label_embeddings,
            "fusion_projection": self.fusion_projection,
        }
        for domain in self.label_fc_w:
            out[f"label_fc_w/{domain}"] = self.label_fc_w[domain]
            out[f"label_fc_b/{domain}"] = self.label_fc_b[domain]
        out["ranking_w"] = self.ranking_w
        out["ranking_b"] = self.ranking_b
        return out

    def ranking_named(self) -> dict[str, np.ndarray]:
        return {"ranking_w": self.ranking_w, "ranking_b": self.ranking_b}

    def classification_named(self) -> dict[str, np.ndarray]:
        ranking = self.ranking_named()
        return {k: v for k, v in self.named().items() if k not in ranking}

    def copy(self) -> "ModelParameters":
        return ModelParameters(
            d=self.d, d_m=self.d_m, d_l=self.d_l,
            label_embeddings=self.label_embeddings.copy(),
            fusion_projection=self.fusion_projection.copy(),
            label_fc_w={k: v.copy() for k, v in self.label_fc_w.items()},
            label_fc_b={k: v.copy() for k, v in self.label_fc_b.items()},
            ranking_w=self.ranking_w.copy(),
            ranking_b=self.ranking_b.copy(),
        )


def _xavier(rng: np.random.Generator, fan_in: int, fan_out: int, shape) -> np.ndarray:
    bound = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-bound, bound, size=shape)


def init_parameters(schema: DomainSchema, d: int, d_m: int, seed: int,
                    d_l: int = LABEL_EMBEDDING_DIM) -> ModelParameters:
    """Xavier-uniform weights (per-matrix fan-in/fan-out bounds), zero biases."""
    if d < 1 or d_m < 1:
        raise ValueError("vector dimensions must be >= 1")
    rng = np.random.default_rng(seed)
    d_f = 4 * d + d_m
    t = schema.total_labels
    label_embeddings = _xavier(rng, d_l, t, (t, d_l))
    fusion_projection = _xavier(rng, d_f, d_l, (d_l, d_f))
    label_fc_w, label_fc_b = {}, {}
    for domain in schema.domains:
        n = schema.n_labels(domain)
        label_fc_w[domain] = _xavier(rng, t, n, (n, t))
        label_fc_b[domain] = np.zeros(n)
    ranking_w = _xavier(rng, d_f, 1, (d_f,))
    ranking_b = np.zeros(1)
    return ModelParameters(d, d_m, d_l, label_embeddings, fusion_projection,
                           label_fc_w, label_fc_b, ranking_w, ranking_b)


def fuse(claim_vec: np.ndarray, evidence_vec: np.ndarray,
         meta_vec: np.ndarray) -> np.ndarray:
    """[claim; evidence; claim - evidence; claim * evidence; metadata]."""
    c = np.asarray(claim_vec, dtype=np.float64)
    e = np.asarray(evidence_vec, dtype=np.float64)
    m = np.asarray(meta_vec, dtype=np.float64)
    for name, vec in (("claim", c), ("evidence", e), ("metadata", m)):
        if vec.ndim != 1:
            raise ValueError(f"{name} block must be a one-dimensional vector")
    if c.shape != e.shape:
        raise ValueError(
            f"evidence block length {e.shape[0]} does not match claim block length {c.shape[0]}")
    return np.concatenate([c, e, c - e, c * e, m])


def ranking_score(fused: np.ndarray, params: ModelParameters) -> float:
    """ReLU(w . f + b): the nonnegative relevance score of one fused vector."""
    z = float(params.ranking_w @ np.asarray(fused, dtype=np.float64) + params.ranking_b[0])
    return max(z, 0.0)


def domain_label_vector(fused: np.ndarray, domain: str, params: ModelParameters,
                        schema: DomainSchema) -> np.ndarray:
    """Masked label-similarity readout for one fused vector.

    Projects the fused vector into label-embedding space, scores it against
    every label embedding, zeroes similarities outside the claim's domain, and
    applies the domain's affine layer with Leaky ReLU.
    """
    if domain not in schema.labels:
        raise ValueError(f"unknown domain {domain!r}")
    f = np.asarray(fused, dtype=np.float64)
    projected = params.fusion_projection @ f
    similarities = params.label_embeddings @ projected
    masked = similarities * schema.mask(domain)
    pre = params.label_fc_w[domain] @ masked + params.label_fc_b[domain]
    return np.where(pre >= 0.0, pre, LEAKY_SLOPE * pre)


@dataclass
class ForwardTrace:
    """Every intermediate of one claim's forward pass, kept for backprop."""

    domain: str
    fused: np.ndarray                  # (K, d_f)
    rank_pre: np.ndarray               # (K,) affine outputs before ReLU
    rank_scores: np.ndarray            # (K,) nonnegative ranking scores
    projected: np.ndarray              # (K, d_l)
    similarities: np.ndarray           # (K, T) before the domain mask
    masked_similarities: np.ndarray    # (K, T)
    label_pre: np.ndarray              # (K, n_domain) before Leaky ReLU
    label_vectors: np.ndarray          # (K, n_domain)
    logits: np.ndarray                 # (n_domain,)
    probs: np.ndarray                  # (n_domain,)


def forward(claim: Claim, evidence: EvidenceSet, params: ModelParameters,
            schema: DomainSchema) -> ForwardTrace:
    """Run the head over one claim and its evidence set, retaining intermediates."""
    if claim.domain not in schema.labels:
        raise ValueError(f"unknown domain {claim.domain!r}")
    if claim.claim_vector.shape[0] != params.d:
        raise ValueError(f"claim block length {claim.claim_vector.shape[0]} "
                         f"does not match configured dimension {params.d}")
    if claim.metadata_vector.shape[0] != params.d_m:
        raise ValueError(f"metadata block length {claim.metadata_vector.shape[0]} "
                         f"does not match configured dimension {params.d_m}")
    fused = np.stack([
        fuse(claim.claim_vector, s.evidence_vector, claim.metadata_vector)
        for s in evidence
    ])
    rank_pre = fused @ params.ranking_w + params.ranking_b[0]
    rank_scores = np.maximum(rank_pre, 0.0)
    projected = fused @ params.fusion_projection.T
    similarities = projected @ params.label_embeddings.T
    masked = similarities * schema.mask(claim.domain)
    w, b = params.label_fc_w[claim.domain], params.label_fc_b[claim.domain]
    label_pre = masked @ w.T + b
    label_vectors = np.where(label_pre >= 0.0, label_pre, LEAKY_SLOPE * label_pre)
    logits = rank_scores @ label_vectors
    shifted = logits - logits.max()
    exp = np.exp(shifted)
    probs = exp / exp.sum()
    return ForwardTrace(claim.domain, fused, rank_pre, rank_scores, projected,
                        similarities, masked, label_pre, label_vectors, logits, probs)


def classification_loss(trace: ForwardTrace, gold_label_index: int) -> float:
    """Cross entropy of the gold label under the trace's softmax."""
    logits = trace.logits
    if not 0 <= gold_label_index < logits.shape[0]:
        raise ValueError(f"gold label index {gold_label_index} out of range")
    m = logits.max()
    return float(m + np.log(np.exp(logits - m).sum()) - logits[gold_label_index])


@dataclass
class Gradients:
    """Backward-pass output: the two loss gradients kept strictly apart.

    ``ce`` holds cross-entropy gradients for every parameter the claim touched
    (the ranking layer included, since scores weight the logits); ``ranking``
    holds listwise-loss gradients for the ranking layer only. ``score`` is the
    listwise gradient at the score level, zero at masked snippets.
    """

    ce: dict[str, np.ndarray]
    ranking: dict[str, np.ndarray]
    score: np.ndarray
    classification_loss: float
    ranking_loss: float


def backward(trace: ForwardTrace, gold_label_index: int, params: ModelParameters,
             schema: DomainSchema, truth: GroundTruthRanking | None = None,
             class_weight: float = 1.0, ranking_weight: float = 1.0) -> Gradients:
    """Analytic gradients of both losses for one claim.

    With ``truth`` None (no ranking supervision) the listwise side is empty
    and only cross-entropy gradients are produced.
    """
    domain = trace.domain
    n = trace.probs.shape[0]
    onehot = np.zeros(n)
    onehot[gold_label_index] = 1.0

    delta_logits = (trace.probs - onehot) * class_weight
    d_label_vectors = np.outer(trace.rank_scores, delta_logits)
    d_scores_ce = trace.label_vectors @ delta_logits
    leaky_gate = np.where(trace.label_pre >= 0.0, 1.0, LEAKY_SLOPE)
    d_label_pre = d_label_vectors * leaky_gate
    w = params.label_fc_w[domain]
    grad_fc_w = d_label_pre.T @ trace.masked_similarities
    grad_fc_b = d_label_pre.sum(axis=0)
    d_masked = d_label_pre @ w
    d_similarities = d_masked * schema.mask(domain)
    grad_embeddings = d_similarities.T @ trace.projected
    d_projected = d_similarities @ params.label_embeddings
    grad_projection = d_projected.T @ trace.fused
    relu_gate = (trace.rank_pre > 0.0).astype(np.float64)
    d_rank_pre_ce = d_scores_ce * relu_gate
    ce = {
        "label_embeddings": grad_embeddings,
        "fusion_projection": grad_projection,
        f"label_fc_w/{domain}": grad_fc_w,
        f"label_fc_b/{domain}": grad_fc_b,
        "ranking_w": trace.fused.T @ d_rank_pre_ce,
        "ranking_b": np.array([d_rank_pre_ce.sum()]),
    }
    ce_loss = classification_loss(trace, gold_label_index) * class_weight

    score_grad = np.zeros_like(trace.rank_scores)
    ranking_grads: dict[str, np.ndarray] = {}
    rank_loss = 0.0
    if truth is not None:
        score_grad = listmle_gradient(trace.rank_scores, truth) * ranking_weight
        d_rank_pre = score_grad * relu_gate
        ranking_grads = {
            "ranking_w": trace.fused.T @ d_rank_pre,
            "ranking_b": np.array([d_rank_pre.sum()]),
        }
        rank_loss = listmle_loss([ScoredRanking(trace.rank_scores, truth)]) * ranking_weight
    return Gradients(ce, ranking_grads, score_grad, ce_loss, rank_loss)


def save_checkpoint(path, params: ModelParameters, schema: DomainSchema,
                    seed: int) -> None:
    """Write a JSON checkpoint; floats round-trip exactly via repr."""
    tensors = {}
    for name, array in params.named().items():
        tensors[name] = {"shape": list(array.shape), "data": array.ravel().tolist()}
    payload = {
        "format_version": CHECKPOINT_VERSION,
        "seed": seed,
        "dims": {"d": params.d, "d_m": params.d_m, "d_l": params.d_l},
        "schema": {
            "domains": list(schema.domains),
            "labels": {d: list(schema.labels[d]) for d in schema.domains},
        },
        "tensors": tensors,
    }
    with open(path, "w") as fh:
        json.dump(payload, fh)
        fh.write("\n")


def load_checkpoint(path) -> tuple[ModelParameters, DomainSchema, int]:
    with open(path) as fh:
        payload = json.load(fh)
    if payload.get("format_version") != CHECKPOINT_VERSION:
        raise ValueError(f"unsupported checkpoint version: {payload.get('format_version')}")
    schema = DomainSchema.from_labels(payload["schema"]["labels"])
    dims = payload["dims"]

    def tensor(name):
        entry = payload["tensors"][name]
        return np.array(entry["data"], dtype=np.float64).reshape(entry["shape"])

    label_fc_w = {d: tensor(f"label_fc_w/{d}") for d in schema.domains}
    label_fc_b = {d: tensor(f"label_fc_b/{d}") for d in schema.domains}
    params = ModelParameters(
        d=dims["d"], d_m=dims["d_m"], d_l=dims["d_l"],
        label_embeddings=tensor("label_embeddings"),
        fusion_projection=tensor("fusion_projection"),
        label_fc_w=label_fc_w, label_fc_b=label_fc_b,
        ranking_w=tensor("ranking_w"), ranking_b=tensor("ranking_b"),
    )
    return params, schema, payload["seed"]
