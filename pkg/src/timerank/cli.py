"""Command-line interface.

Subcommands: parse-dates, build-rankings, generate, train, evaluate,
experiment. Exit codes: 0 success, 1 usage error, 2 data error, 3 numerical
failure. All randomness comes from seeds in flags or config files; no
environment variables are consulted.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import replace
from pathlib import Path

from .data import (group_by_domain, instance_to_obj, load_dataset, load_splits,
                   save_dataset, schema_from_instances, validate_against_schema)
from .errors import DataError, NumericalError
from .experiment import DEFAULT_METHODS, evaluate_instances, run_experiment
from .model import load_checkpoint, save_checkpoint
from .rankings import RankingMethod, build_ground_truth
from .synthetic import SyntheticSpec, generate_synthetic, write_splits
from .temporal import EvidenceSet, EvidenceSnippet, parse_date
from .training import (TrainingConfig, finetune, pretrain, select_best,
                       write_training_log)


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise _UsageError(message)


def _method_or_none(name: str) -> RankingMethod | None:
    if name in ("none", "base"):
        return None
    return RankingMethod.from_name(name)


def _load_json(path, what: str) -> dict:
    try:
        with open(path) as fh:
            return json.load(fh)
    except json.JSONDecodeError as exc:
        raise DataError(f"{what} {path}: invalid JSON ({exc})")


def cmd_parse_dates(args) -> int:
    instances = load_dataset(args.input)
    total = 0
    dated_before = 0
    filled = 0
    updated = []
    for instance in instances:
        snippets = []
        for snippet in instance.evidence:
            total += 1
            timestamp = snippet.timestamp
            if timestamp is not None:
                dated_before += 1
            elif snippet.snippet_text is not None:
                parsed = parse_date(snippet.snippet_text)
                if parsed is not None:
                    timestamp = parsed
                    filled += 1
            snippets.append(EvidenceSnippet(
                snippet_id=snippet.snippet_id,
                evidence_vector=snippet.evidence_vector,
                search_rank=snippet.search_rank,
                snippet_text=snippet.snippet_text,
                timestamp=timestamp,
            ))
        updated.append(replace(instance, evidence=EvidenceSet(tuple(snippets))))
    save_dataset(updated, args.output)
    summary = {
        "claims": len(updated),
        "snippets": total,
        "dated_before": dated_before,
        "filled_from_text": filled,
        "dated_after": dated_before + filled,
        "dated_share_before": dated_before / total if total else 0.0,
        "dated_share_after": (dated_before + filled) / total if total else 0.0,
    }
    print(json.dumps(summary))
    return 0


def cmd_build_rankings(args) -> int:
    method = args.method
    instances = load_dataset(args.input)
    with open(args.output, "w") as fh:
        for instance in instances:
            truth = build_ground_truth(method, instance.claim, instance.evidence)
            fh.write(json.dumps({
                "claim_id": instance.claim.claim_id,
                "method": method.value,
                "order": list(truth.order),
                "tie_groups": [list(g) for g in truth.tie_groups],
                "included": list(truth.included),
            }))
            fh.write("\n")
    return 0


def cmd_generate(args) -> int:
    obj = _load_json(args.spec, "generator spec")
    try:
        spec = SyntheticSpec.from_obj(obj)
    except (TypeError, ValueError) as exc:
        raise DataError(f"generator spec {args.spec}: {exc}")
    dataset = generate_synthetic(spec, args.seed)
    write_splits(dataset, args.out)
    return 0


def _training_config(obj: dict) -> TrainingConfig:
    try:
        return TrainingConfig.from_obj(obj)
    except (TypeError, ValueError) as exc:
        raise DataError(f"training config: {exc}")


def cmd_train(args) -> int:
    obj = _load_json(args.config, "training config")
    config = _training_config(obj)
    mode = obj.get("mode", "both" if "domain" in obj else "pretrain")
    if mode not in ("pretrain", "finetune", "both"):
        raise DataError(f"training config: unknown mode {mode!r}")
    domain = obj.get("domain")
    if mode in ("finetune", "both") and not domain:
        raise DataError("training config: fine-tuning needs a 'domain'")

    splits = load_splits(args.data)
    schema = schema_from_instances(splits["train"] + splits["dev"] + splits["test"])
    train_bd = group_by_domain(splits["train"])
    dev_bd = group_by_domain(splits["dev"])
    log: list[dict] = []

    if mode == "finetune":
        if not args.init:
            raise DataError("mode 'finetune' needs --init with a starting checkpoint")
        params, ckpt_schema, seed = load_checkpoint(args.init)
        validate_against_schema(splits["train"] + splits["dev"], ckpt_schema)
        from .training import TrainingState
        from .optim import Adam, RMSProp
        start = TrainingState(params=params, schema=ckpt_schema,
                              rmsprop=RMSProp(lr=config.classification_lr),
                              adam=Adam(lr=config.ranking_lr))
        states = [start]
        schema = ckpt_schema
    else:
        states = []
        for i in range(config.pretrain_runs):
            run_cfg = replace(config, seed=config.seed + i, ranking_method=None)
            state = pretrain(train_bd, dev_bd, schema, run_cfg)
            for record in state.log:
                log.append({"phase": f"pretrain_run{i}", **record})
            states.append(state)

    if mode == "pretrain":
        final = select_best(states)
    else:
        if domain not in train_bd:
            raise DataError(f"domain {domain!r} has no training claims")
        best = select_best(
            states, key=lambda st: st.dev_micro_by_domain.get(domain, float("-inf")))
        final = finetune(domain, train_bd[domain], dev_bd.get(domain, []), best, config)
        for record in final.log:
            log.append({"phase": "finetune", **record})

    save_checkpoint(args.out, final.params, schema, config.seed)
    log_path = args.log if args.log else f"{args.out}.log.jsonl"
    write_training_log(log, log_path)
    return 0


def cmd_evaluate(args) -> int:
    params, schema, _ = load_checkpoint(args.ckpt)
    splits = load_splits(args.data)
    instances = splits[args.split]
    validate_against_schema(instances, schema)
    print(json.dumps(evaluate_instances(params, schema, instances, args.method)))
    return 0


def cmd_experiment(args) -> int:
    obj = _load_json(args.config, "experiment config")
    config = _training_config(obj)
    method_names = obj.get("methods")
    if method_names is None:
        methods = DEFAULT_METHODS
    else:
        try:
            methods = tuple(_method_or_none(name) for name in method_names)
        except ValueError as exc:
            raise DataError(f"experiment config: {exc}")
    report = run_experiment(args.data, methods, config)
    out = Path(args.report)
    if out.suffix == ".md":
        out.write_text(report.to_markdown())
    else:
        out.write_text(json.dumps(report.to_json_obj(), indent=2) + "\n")
    return 0


def _build_parser() -> _Parser:
    parser = _Parser(prog="timerank",
                     description="Time-aware evidence ranking for claim verification")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("parse-dates",
                       help="fill missing snippet timestamps from text prefixes")
    p.add_argument("input")
    p.add_argument("output")
    p.set_defaults(func=cmd_parse_dates)

    p = sub.add_parser("build-rankings",
                       help="emit simulated ground-truth rankings per claim")
    p.add_argument("--method", required=True, type=RankingMethod.from_name)
    p.add_argument("input")
    p.add_argument("output")
    p.set_defaults(func=cmd_build_rankings)

    p = sub.add_parser("generate", help="generate synthetic train/dev/test splits")
    p.add_argument("--spec", required=True)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("train", help="pretrain and/or fine-tune a model")
    p.add_argument("--config", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--init", help="checkpoint to start from (mode=finetune)")
    p.add_argument("--log", help="training log path (default: <out>.log.jsonl)")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("evaluate", help="evaluate a checkpoint on a dataset split")
    p.add_argument("--ckpt", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--method", required=True, type=_method_or_none,
                   help="ranking method for rank-correlation reporting, or 'none'")
    p.add_argument("--split", default="test", choices=("train", "dev", "test"))
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("experiment",
                       help="pretrain, fine-tune and evaluate every method per domain")
    p.add_argument("--config", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--report", required=True, help="output path (.json or .md)")
    p.set_defaults(func=cmd_experiment)
    return parser


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except _UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 1
    try:
        return args.func(args)
    except DataError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return 2
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 3
    except FileNotFoundError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return 2


def entrypoint() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entrypoint()
