"""Full per-domain, per-method experiments and their result tables.

For every domain, the best of several pre-training runs (chosen on that
domain's dev split) is fine-tuned once per ranking method and evaluated on the
test split. The resulting table has one row per domain, micro and macro F1 per
method, a time-aware column holding the per-metric best across the temporal
methods, and a cross-domain average row.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Sequence

import numpy as np

from .data import (ClaimInstance, group_by_domain, load_splits,
                   schema_from_instances)
from .errors import DataError
from .metrics import kendall_tau_b, macro_f1, micro_f1
from .model import DomainSchema, ModelParameters, forward
from .rankings import RankingMethod, build_ground_truth
from .training import TrainingConfig, finetune, pretrain, select_best

BASE_COLUMN = "base"
TEMPORAL_COLUMNS = ("evidence_recency", "claim_recency", "claim_closeness",
                    "evidence_clustering")
COLUMN_ORDER = (BASE_COLUMN, "search_rank") + TEMPORAL_COLUMNS
TIME_AWARE_COLUMN = "time_aware"

COLUMN_TITLES = {
    "base": "Base Model",
    "search_rank": "Search Ranking",
    "evidence_recency": "Evidence Recency",
    "claim_recency": "Claim Recency",
    "claim_closeness": "Claim Closeness",
    "evidence_clustering": "Evidence Clustering",
    "time_aware": "Time-Aware Ranking",
}

DEFAULT_METHODS: tuple[RankingMethod | None, ...] = (
    None,
    RankingMethod.SEARCH_RANK,
    RankingMethod.EVIDENCE_RECENCY,
    RankingMethod.CLAIM_RECENCY,
    RankingMethod.CLAIM_CLOSENESS,
    RankingMethod.EVIDENCE_CLUSTERING,
)


def method_column(method: RankingMethod | None) -> str:
    return BASE_COLUMN if method is None else method.value


@dataclass(frozen=True)
class MetricPair:
    micro: float
    macro: float


@dataclass
class ResultTable:
    domains: tuple[str, ...]
    columns: tuple[str, ...]
    cells: dict[str, dict[str, MetricPair]]

    @classmethod
    def build(cls, domains: Sequence[str],
              results: dict[tuple[str, str], MetricPair]) -> "ResultTable":
        present = [c for c in COLUMN_ORDER
                   if any((d, c) in results for d in domains)]
        temporal = [c for c in TEMPORAL_COLUMNS if c in present]
        columns = tuple(present) + ((TIME_AWARE_COLUMN,) if temporal else ())
        cells: dict[str, dict[str, MetricPair]] = {}
        for domain in domains:
            row = {c: results[(domain, c)] for c in present if (domain, c) in results}
            if temporal:
                row[TIME_AWARE_COLUMN] = MetricPair(
                    micro=max(row[c].micro for c in temporal),
                    macro=max(row[c].macro for c in temporal),
                )
            cells[domain] = row
        return cls(tuple(domains), columns, cells)

    def average(self) -> dict[str, MetricPair]:
        out = {}
        for column in self.columns:
            micros = [self.cells[d][column].micro for d in self.domains
                      if column in self.cells[d]]
            macros = [self.cells[d][column].macro for d in self.domains
                      if column in self.cells[d]]
            if micros:
                out[column] = MetricPair(float(np.mean(micros)), float(np.mean(macros)))
        return out

    def to_json_obj(self) -> dict:
        def pair_obj(pair: MetricPair) -> dict:
            return {"micro_f1": pair.micro, "macro_f1": pair.macro}

        return {
            "columns": list(self.columns),
            "domains": {
                d: {c: pair_obj(p) for c, p in self.cells[d].items()}
                for d in self.domains
            },
            "average": {c: pair_obj(p) for c, p in self.average().items()},
        }

    def to_markdown(self) -> str:
        header = ["Domain"]
        for column in self.columns:
            title = COLUMN_TITLES.get(column, column)
            header += [f"{title} Micro", f"{title} Macro"]
        lines = ["| " + " | ".join(header) + " |",
                 "|" + "---|" * len(header)]
        averages = self.average()
        for domain in self.domains:
            row = [domain]
            for column in self.columns:
                pair = self.cells[domain].get(column)
                row += (["-", "-"] if pair is None
                        else [f"{pair.micro:.4f}", f"{pair.macro:.4f}"])
            lines.append("| " + " | ".join(row) + " |")
        avg_row = ["avg."]
        for column in self.columns:
            pair = averages.get(column)
            avg_row += (["-", "-"] if pair is None
                        else [f"{pair.micro:.4f}", f"{pair.macro:.4f}"])
        lines.append("| " + " | ".join(avg_row) + " |")
        return "\n".join(lines) + "\n"


def evaluate_instances(params: ModelParameters, schema: DomainSchema,
                       instances: Sequence[ClaimInstance],
                       method: RankingMethod | None) -> dict:
    """Micro/macro F1 (pooled and per domain) plus mean rank correlation.

    The rank correlation compares predicted ranking scores with the ground
    truth that ``method`` would simulate; claims where it is undefined (fewer
    than two included snippets, or constant scores) are skipped.
    """
    if not instances:
        raise ValueError("cannot evaluate an empty instance list")
    golds, preds, domains = [], [], []
    taus = []
    for instance in instances:
        trace = forward(instance.claim, instance.evidence, params, schema)
        pred = schema.labels[instance.claim.domain][int(np.argmax(trace.probs))]
        golds.append(instance.claim.label)
        preds.append(pred)
        domains.append(instance.claim.domain)
        if method is not None:
            truth = build_ground_truth(method, instance.claim, instance.evidence)
            tau = kendall_tau_b(trace.rank_scores, truth)
            if tau is not None:
                taus.append(tau)
    per_domain = {}
    for domain in sorted(set(domains)):
        dg = [g for g, d in zip(golds, domains) if d == domain]
        dp = [p for p, d in zip(preds, domains) if d == domain]
        per_domain[domain] = {
            "micro_f1": micro_f1(dg, dp),
            "macro_f1": macro_f1(dg, dp, schema.labels[domain]),
        }
    return {
        "micro_f1": micro_f1(golds, preds),
        "macro_f1": float(np.mean([v["macro_f1"] for v in per_domain.values()])),
        "mean_kendall_tau": float(np.mean(taus)) if taus else None,
        "per_domain": per_domain,
    }


@dataclass
class ExperimentReport:
    table: ResultTable
    mean_tau: dict[str, dict[str, float | None]]
    config: TrainingConfig
    methods: tuple[RankingMethod | None, ...]

    def to_json_obj(self) -> dict:
        cfg = {
            "seed": self.config.seed,
            "batch_size": self.config.batch_size,
            "max_epochs": self.config.max_epochs,
            "patience": self.config.patience,
            "classification_lr": self.config.classification_lr,
            "ranking_lr": self.config.ranking_lr,
            "classification_loss_weight": self.config.classification_loss_weight,
            "ranking_loss_weight": self.config.ranking_loss_weight,
            "pretrain_runs": self.config.pretrain_runs,
            "label_embedding_dim": self.config.label_embedding_dim,
        }
        return {
            "config": cfg,
            "methods": [method_column(m) for m in self.methods],
            "table": self.table.to_json_obj(),
            "mean_kendall_tau": self.mean_tau,
        }

    def to_markdown(self) -> str:
        return self.table.to_markdown()


def run_experiment(data_dir, methods: Sequence[RankingMethod | None],
                   config: TrainingConfig) -> ExperimentReport:
    """Pre-train once (shared), then fine-tune and test per domain and method."""
    splits = load_splits(data_dir)
    all_instances = splits["train"] + splits["dev"] + splits["test"]
    schema = schema_from_instances(all_instances)
    train_bd = group_by_domain(splits["train"])
    dev_bd = group_by_domain(splits["dev"])
    test_bd = group_by_domain(splits["test"])
    domains = sorted(train_bd)
    for domain in domains:
        if domain not in dev_bd or domain not in test_bd:
            raise DataError(f"domain {domain!r} is missing from the dev or test split")

    runs = [pretrain(train_bd, dev_bd, schema,
                     replace(config, seed=config.seed + i, ranking_method=None))
            for i in range(config.pretrain_runs)]

    results: dict[tuple[str, str], MetricPair] = {}
    mean_tau: dict[str, dict[str, float | None]] = {}
    for d_index, domain in enumerate(domains):
        best = select_best(
            runs, key=lambda st: st.dev_micro_by_domain.get(domain, float("-inf")))
        mean_tau[domain] = {}
        for m_index, method in enumerate(methods):
            cfg = replace(config, ranking_method=method,
                          seed=config.seed + 1000 * (d_index + 1) + m_index)
            state = finetune(domain, train_bd[domain], dev_bd[domain], best, cfg)
            scores = evaluate_instances(state.params, schema, test_bd[domain], method)
            column = method_column(method)
            results[(domain, column)] = MetricPair(
                scores["micro_f1"], scores["per_domain"][domain]["macro_f1"])
            mean_tau[domain][column] = scores["mean_kendall_tau"]
    table = ResultTable.build(domains, results)
    return ExperimentReport(table, mean_tau, config, tuple(methods))
