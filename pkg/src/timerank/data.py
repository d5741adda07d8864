"""Line-delimited JSON datasets: one claim with its evidence snippets per line.

Record layout:
  claim_id, domain, label, claim_timestamp ("YYYY-MM-DD"),
  claim_vector (array), metadata_vector (array),
  evidence: up to ten objects with snippet_id, optional snippet_text,
  timestamp ("YYYY-MM-DD" or null), vector (array), search_rank (unique int).
"""

from __future__ import annotations

from dataclasses import dataclass
from datetime import date
from pathlib import Path
from typing import Iterable, Sequence

from .errors import DataError
from .model import DomainSchema
from .temporal import Claim, EvidenceSet, EvidenceSnippet

SPLIT_NAMES = ("train", "dev", "test")


@dataclass(frozen=True, eq=False)
class ClaimInstance:
    claim: Claim
    evidence: EvidenceSet


def _parse_iso(value, where: str) -> date:
    try:
        return date.fromisoformat(value)
    except (TypeError, ValueError):
        raise DataError(f"{where}: invalid ISO date {value!r}")


def instance_from_obj(obj: dict, where: str = "<record>") -> ClaimInstance:
    try:
        snippets = []
        for k, ev in enumerate(obj["evidence"]):
            ts = ev.get("timestamp")
            snippets.append(EvidenceSnippet(
                snippet_id=ev["snippet_id"],
                evidence_vector=ev["vector"],
                search_rank=ev["search_rank"],
                snippet_text=ev.get("snippet_text"),
                timestamp=None if ts is None else _parse_iso(ts, f"{where} evidence[{k}]"),
            ))
        claim = Claim(
            claim_id=obj["claim_id"],
            domain=obj["domain"],
            label=obj["label"],
            timestamp=_parse_iso(obj["claim_timestamp"], where),
            claim_vector=obj["claim_vector"],
            metadata_vector=obj["metadata_vector"],
        )
        return ClaimInstance(claim, EvidenceSet(tuple(snippets)))
    except DataError:
        raise
    except (KeyError, TypeError, ValueError) as exc:
        raise DataError(f"{where}: {exc}")


def instance_to_obj(instance: ClaimInstance) -> dict:
    claim = instance.claim
    evidence = []
    for s in instance.evidence:
        entry = {"snippet_id": s.snippet_id}
        if s.snippet_text is not None:
            entry["snippet_text"] = s.snippet_text
        entry["timestamp"] = None if s.timestamp is None else s.timestamp.isoformat()
        entry["vector"] = s.evidence_vector.tolist()
        entry["search_rank"] = s.search_rank
        evidence.append(entry)
    return {
        "claim_id": claim.claim_id,
        "domain": claim.domain,
        "label": claim.label,
        "claim_timestamp": claim.timestamp.isoformat(),
        "claim_vector": claim.claim_vector.tolist(),
        "metadata_vector": claim.metadata_vector.tolist(),
        "evidence": evidence,
    }


def load_dataset(path) -> list[ClaimInstance]:
    """Parse a dataset file, enforcing consistent vector dimensions throughout."""
    import json

    path = Path(path)
    instances: list[ClaimInstance] = []
    dims = None
    with open(path) as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.strip()
            if not line:
                continue
            where = f"{path}:{lineno}"
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise DataError(f"{where}: invalid JSON ({exc})")
            instance = instance_from_obj(obj, where)
            d = instance.claim.claim_vector.shape[0]
            d_m = instance.claim.metadata_vector.shape[0]
            for s in instance.evidence:
                if s.evidence_vector.shape[0] != d:
                    raise DataError(
                        f"{where}: evidence vector length {s.evidence_vector.shape[0]} "
                        f"does not match claim vector length {d}")
            if dims is None:
                dims = (d, d_m)
            elif dims != (d, d_m):
                raise DataError(
                    f"{where}: vector dimensions {(d, d_m)} differ from earlier lines {dims}")
            instances.append(instance)
    return instances


def save_dataset(instances: Iterable[ClaimInstance], path) -> None:
    import json

    with open(path, "w") as fh:
        for instance in instances:
            fh.write(json.dumps(instance_to_obj(instance)))
            fh.write("\n")


def schema_from_instances(instances: Sequence[ClaimInstance]) -> DomainSchema:
    """Schema with sorted domains and sorted per-domain label vocabularies."""
    labels: dict[str, set[str]] = {}
    for instance in instances:
        labels.setdefault(instance.claim.domain, set()).add(instance.claim.label)
    if not labels:
        raise DataError("cannot build a schema from an empty dataset")
    return DomainSchema.from_labels(
        {d: tuple(sorted(labels[d])) for d in sorted(labels)})


def group_by_domain(instances: Sequence[ClaimInstance]) -> dict[str, list[ClaimInstance]]:
    grouped: dict[str, list[ClaimInstance]] = {}
    for instance in instances:
        grouped.setdefault(instance.claim.domain, []).append(instance)
    return {d: grouped[d] for d in sorted(grouped)}


def load_splits(data_dir) -> dict[str, list[ClaimInstance]]:
    """Load train/dev/test files from a directory, failing loudly on a missing one."""
    data_dir = Path(data_dir)
    splits = {}
    for name in SPLIT_NAMES:
        path = data_dir / f"{name}.jsonl"
        if not path.exists():
            raise DataError(f"missing split file: {path}")
        splits[name] = load_dataset(path)
    return splits


def validate_against_schema(instances: Sequence[ClaimInstance],
                            schema: DomainSchema) -> None:
    """Check every claim's domain and label against a schema (e.g. a checkpoint's)."""
    for instance in instances:
        claim = instance.claim
        if claim.domain not in schema.labels:
            raise DataError(f"claim {claim.claim_id!r}: unknown domain {claim.domain!r}")
        if claim.label not in schema.labels[claim.domain]:
            raise DataError(
                f"claim {claim.claim_id!r}: label {claim.label!r} is not registered "
                f"for domain {claim.domain!r}")
