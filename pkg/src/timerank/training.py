"""Two-phase training: multi-domain pre-training, then per-domain fine-tuning.

Pre-training optimizes only the classification loss; batches from each domain
are fed alternately, capped at the smallest domain's batch count so large
domains cannot dominate an epoch. The ranking layer moves only through the
classification loss in this phase (and in the base-model control), mirroring a
model that learns evidence weighting implicitly.

Fine-tuning with a ranking method runs both losses on every batch: the
classification step (RMSProp) then updates only the classification parameters,
and the listwise ranking step (Adam) updates only the ranking parameters.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field, replace
from typing import Callable, Sequence

import numpy as np

from .data import ClaimInstance
from .metrics import macro_f1, micro_f1
from .model import (DomainSchema, LABEL_EMBEDDING_DIM, ModelParameters, backward,
                    forward, init_parameters)
from .optim import Adam, RMSProp
from .rankings import RankingMethod, build_ground_truth


@dataclass(frozen=True)
class TrainingConfig:
    batch_size: int = 32
    max_epochs: int = 150
    patience: int = 5
    seed: int = 0
    ranking_method: RankingMethod | None = None
    classification_lr: float = 2e-4
    ranking_lr: float = 1e-3
    classification_loss_weight: float = 1.0
    ranking_loss_weight: float = 1.0
    pretrain_runs: int = 3
    label_embedding_dim: int = LABEL_EMBEDDING_DIM

    def __post_init__(self):
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")
        if self.patience < 1:
            raise ValueError("patience must be >= 1")
        if self.max_epochs < 1:
            raise ValueError("max_epochs must be >= 1")
        if self.pretrain_runs < 1:
            raise ValueError("pretrain_runs must be >= 1")

    @classmethod
    def from_obj(cls, obj: dict) -> "TrainingConfig":
        kwargs = {k: v for k, v in obj.items() if k in cls.__dataclass_fields__}
        unknown = set(obj) - set(kwargs) - {"mode", "domain", "methods"}
        if unknown:
            raise ValueError(f"unknown training config keys: {sorted(unknown)}")
        method = kwargs.get("ranking_method")
        if isinstance(method, str):
            kwargs["ranking_method"] = (None if method in ("none", "base")
                                        else RankingMethod.from_name(method))
        return cls(**kwargs)

    def with_method(self, method: RankingMethod | None) -> "TrainingConfig":
        return replace(self, ranking_method=method)


@dataclass
class TrainingState:
    """Parameters plus everything needed to continue or inspect a run."""

    params: ModelParameters
    schema: DomainSchema
    rmsprop: RMSProp
    adam: Adam
    epoch: int = 0
    best_dev_metric: float = float("-inf")
    epochs_since_improvement: int = 0
    log: list[dict] = field(default_factory=list)
    dev_micro_by_domain: dict[str, float] = field(default_factory=dict)
    final_params: ModelParameters | None = None  # last-epoch params; params holds the best-dev snapshot


def initial_state(schema: DomainSchema, d: int, d_m: int,
                  config: TrainingConfig) -> TrainingState:
    params = init_parameters(schema, d, d_m, seed=config.seed,
                             d_l=config.label_embedding_dim)
    return TrainingState(params=params, schema=schema,
                         rmsprop=RMSProp(lr=config.classification_lr),
                         adam=Adam(lr=config.ranking_lr))


def _accumulate(acc: dict[str, np.ndarray], grads: dict[str, np.ndarray]) -> None:
    for name, grad in grads.items():
        if name in acc:
            acc[name] = acc[name] + grad
        else:
            acc[name] = grad.copy()


def _train_batch(state: TrainingState, batch: Sequence[ClaimInstance],
                 config: TrainingConfig,
                 method: RankingMethod | None) -> tuple[float, float]:
    """One optimizer step (or two, with ranking supervision) on one batch.

    Returns (mean classification loss, summed ranking loss). With no ranking
    method the classification gradients update every parameter, ranking layer
    included; with one, they update only the classification set and the
    listwise gradients update only the ranking set.
    """
    params, schema = state.params, state.schema
    ce_acc: dict[str, np.ndarray] = {}
    rank_acc: dict[str, np.ndarray] = {}
    ce_total = 0.0
    rank_total = 0.0
    for instance in batch:
        truth = (build_ground_truth(method, instance.claim, instance.evidence)
                 if method is not None else None)
        trace = forward(instance.claim, instance.evidence, params, schema)
        gold = schema.local_index(instance.claim.domain, instance.claim.label)
        grads = backward(trace, gold, params, schema, truth=truth,
                         class_weight=config.classification_loss_weight,
                         ranking_weight=config.ranking_loss_weight)
        _accumulate(ce_acc, grads.ce)
        if truth is not None:
            _accumulate(rank_acc, grads.ranking)
        ce_total += grads.classification_loss
        rank_total += grads.ranking_loss
    for name in ce_acc:
        ce_acc[name] /= len(batch)
    scope = params.named() if method is None else params.classification_named()
    state.rmsprop.step(scope, ce_acc)
    if method is not None:
        state.adam.step(params.ranking_named(), rank_acc)
    return ce_total / len(batch), rank_total


def predict_label(params: ModelParameters, schema: DomainSchema,
                  instance: ClaimInstance) -> str:
    trace = forward(instance.claim, instance.evidence, params, schema)
    return schema.labels[instance.claim.domain][int(np.argmax(trace.probs))]


def _dev_metrics(params: ModelParameters, schema: DomainSchema,
                 instances: Sequence[ClaimInstance]) -> tuple[float, float]:
    """Pooled micro F1 and mean per-domain macro F1 over a dev set."""
    if not instances:
        return 0.0, 0.0
    golds = [inst.claim.label for inst in instances]
    preds = [predict_label(params, schema, inst) for inst in instances]
    micro = micro_f1(golds, preds)
    by_domain: dict[str, tuple[list, list]] = {}
    for inst, pred in zip(instances, preds):
        gold_list, pred_list = by_domain.setdefault(inst.claim.domain, ([], []))
        gold_list.append(inst.claim.label)
        pred_list.append(pred)
    macros = [macro_f1(g, p, schema.labels[d]) for d, (g, p) in sorted(by_domain.items())]
    return micro, float(np.mean(macros))


def pretrain(train_by_domain: dict[str, Sequence[ClaimInstance]],
             dev_by_domain: dict[str, Sequence[ClaimInstance]],
             schema: DomainSchema, config: TrainingConfig) -> TrainingState:
    """Alternating-domain classification training with pooled-dev early stopping."""
    domains = [d for d in schema.domains if train_by_domain.get(d)]
    if not domains:
        raise ValueError("pretraining needs at least one domain with training claims")
    first = train_by_domain[domains[0]][0]
    d = first.claim.claim_vector.shape[0]
    d_m = first.claim.metadata_vector.shape[0]
    state = initial_state(schema, d, d_m, config)
    rng = np.random.default_rng(config.seed)
    smallest = min(len(train_by_domain[dom]) for dom in domains)
    cap = math.ceil(smallest / config.batch_size)
    dev_pool = [inst for dom in domains for inst in dev_by_domain.get(dom, [])]

    best_params = state.params.copy()
    best_metric = float("-inf")
    since_improvement = 0
    for epoch in range(1, config.max_epochs + 1):
        started = time.perf_counter()
        perms = {dom: rng.permutation(len(train_by_domain[dom])) for dom in domains}
        epoch_losses = {dom: [] for dom in domains}
        batches_drawn = {dom: 0 for dom in domains}
        for b in range(cap):
            for dom in domains:
                idx = perms[dom][b * config.batch_size:(b + 1) * config.batch_size]
                if len(idx) == 0:
                    continue
                batch = [train_by_domain[dom][i] for i in idx]
                cls_loss, _ = _train_batch(state, batch, config, method=None)
                epoch_losses[dom].append(cls_loss)
                batches_drawn[dom] += 1
        dev_micro, dev_macro = _dev_metrics(state.params, schema, dev_pool)
        elapsed = time.perf_counter() - started
        for dom in domains:
            state.log.append({
                "epoch": epoch,
                "domain": dom,
                "classification_loss": float(np.mean(epoch_losses[dom]))
                if epoch_losses[dom] else 0.0,
                "ranking_loss": 0.0,
                "dev_micro_f1": dev_micro,
                "dev_macro_f1": dev_macro,
                "elapsed_seconds": elapsed,
                "batches": batches_drawn[dom],
            })
        state.epoch = epoch
        if dev_micro > best_metric:
            best_metric = dev_micro
            best_params = state.params.copy()
            since_improvement = 0
        else:
            since_improvement += 1
            if since_improvement >= config.patience:
                break
    state.final_params = state.params
    state.params = best_params
    state.best_dev_metric = best_metric
    state.epochs_since_improvement = since_improvement
    state.dev_micro_by_domain = {}
    for dom in domains:
        dev = dev_by_domain.get(dom, [])
        if dev:
            golds = [inst.claim.label for inst in dev]
            preds = [predict_label(best_params, schema, inst) for inst in dev]
            state.dev_micro_by_domain[dom] = micro_f1(golds, preds)
    return state


def finetune(domain: str, train: Sequence[ClaimInstance],
             dev: Sequence[ClaimInstance], pretrained: TrainingState,
             config: TrainingConfig) -> TrainingState:
    """Per-domain fine-tuning with fresh optimizer state, returning the best checkpoint.

    With ``config.ranking_method`` set, each batch takes a classification step
    over the classification parameters and a listwise ranking step over the
    ranking parameters; with None only the classification path runs and the
    ranking layer keeps learning implicitly (base-model control).
    """
    schema = pretrained.schema
    if domain not in schema.labels:
        raise ValueError(f"unknown domain {domain!r}")
    if not train:
        raise ValueError(f"fine-tuning needs training claims for domain {domain!r}")
    method = config.ranking_method
    state = TrainingState(params=pretrained.params.copy(), schema=schema,
                          rmsprop=RMSProp(lr=config.classification_lr),
                          adam=Adam(lr=config.ranking_lr))
    rng = np.random.default_rng(config.seed)

    best_params = state.params.copy()
    best_metric = float("-inf")
    since_improvement = 0
    for epoch in range(1, config.max_epochs + 1):
        started = time.perf_counter()
        perm = rng.permutation(len(train))
        cls_losses = []
        rank_loss_total = 0.0
        for start in range(0, len(train), config.batch_size):
            batch = [train[i] for i in perm[start:start + config.batch_size]]
            cls_loss, rank_loss = _train_batch(state, batch, config, method)
            cls_losses.append(cls_loss)
            rank_loss_total += rank_loss
        dev_micro, dev_macro = _dev_metrics(state.params, schema, dev)
        state.log.append({
            "epoch": epoch,
            "domain": domain,
            "classification_loss": float(np.mean(cls_losses)),
            "ranking_loss": rank_loss_total,
            "dev_micro_f1": dev_micro,
            "dev_macro_f1": dev_macro,
            "elapsed_seconds": time.perf_counter() - started,
        })
        state.epoch = epoch
        if dev_micro > best_metric:
            best_metric = dev_micro
            best_params = state.params.copy()
            since_improvement = 0
        else:
            since_improvement += 1
            if since_improvement >= config.patience:
                break
    state.final_params = state.params
    state.params = best_params
    state.best_dev_metric = best_metric
    state.epochs_since_improvement = since_improvement
    state.dev_micro_by_domain = {domain: best_metric if dev else 0.0}
    return state


def select_best(runs: Sequence[TrainingState],
                key: Callable[[TrainingState], float] | None = None) -> TrainingState:
    """The run maximizing the dev metric; ties break toward the earliest run."""
    if not runs:
        raise ValueError("select_best needs at least one run")
    if key is None:
        key = lambda state: state.best_dev_metric
    best_index = 0
    best_value = key(runs[0])
    for i, run in enumerate(runs[1:], start=1):
        value = key(run)
        if value > best_value:
            best_index, best_value = i, value
    return runs[best_index]


def write_training_log(records: Sequence[dict], path) -> None:
    """One JSON object per line, one line per epoch record."""
    import json

    with open(path, "w") as fh:
        for record in records:
            fh.write(json.dumps(record))
            fh.write("\n")
