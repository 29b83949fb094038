"""Ingestion and generation of decimal-comparison test data.

Reads per-item correctness records, aggregates them into per-type scores,
derives empirical class priors and train/test splits, and simulates
synthetic cohorts from the careless-error model.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

import numpy as np

from .domain import DEFAULT_DOMAIN, Domain, DomainError, TypeScores, correct_prob


class ParseError(ValueError):
    """Malformed input document; message carries the offending row."""


@dataclass(frozen=True)
class DctRecord:
    student_id: str
    answers: tuple[int, ...]  # 24 binary correctness flags by default
    label: str | None = None  # expert or generating class, when known


@dataclass(frozen=True)
class ItemMap:
    """Assignment of raw item indices to item types."""

    types: tuple[int, ...]  # types[i] is the type of item i+1

    def __post_init__(self) -> None:
        object.__setattr__(self, "types", tuple(int(t) for t in self.types))

    def validate(self, domain: Domain = DEFAULT_DOMAIN) -> None:
        counts = [0] * domain.n_types
        for t in self.types:
            if t not in domain.type_ids:
                raise DomainError(f"item map references unknown type {t}")
            counts[t - 1] += 1
        if tuple(counts) != domain.item_counts:
            raise DomainError(
                f"item map type counts {tuple(counts)} != roster {domain.item_counts}"
            )

    @classmethod
    def contiguous(cls, domain: Domain = DEFAULT_DOMAIN) -> "ItemMap":
        """Default map: the first 5 items are type 1, the next 5 type 2, ..."""
        types: list[int] = []
        for t, n in zip(domain.type_ids, domain.item_counts):
            types.extend([t] * n)
        return cls(tuple(types))

    @classmethod
    def from_csv(cls, path: str) -> "ItemMap":
        with open(path, encoding="utf-8") as fh:
            rows = list(csv.DictReader(fh))
        try:
            by_item = {int(r["item"]): int(r["type"]) for r in rows}
        except (KeyError, ValueError) as exc:
            raise ParseError(f"item map needs integer 'item' and 'type' columns: {exc}")
        return cls(tuple(by_item[i] for i in sorted(by_item)))


@dataclass(frozen=True)
class SplitPlan:
    seed: int = 0
    k: int = 5
    test_fraction: float = 0.2

    def __post_init__(self) -> None:
        if not 0.0 < self.test_fraction < 1.0:
            raise ValueError("test_fraction must be in (0, 1)")
        if self.k < 1:
            raise ValueError("k must be >= 1")


def _n_items(domain: Domain) -> int:
    return sum(domain.item_counts)


def parse_dct(text: str, domain: Domain = DEFAULT_DOMAIN) -> list[DctRecord]:
    """Parse `student_id,i01..iNN[,expert_class]` delimited text."""
    n = _n_items(domain)
    reader = csv.reader(io.StringIO(text))
    try:
        header = next(reader)
    except StopIteration:
        raise ParseError("empty document: missing header row")
    has_label = len(header) == n + 2
    if not has_label and len(header) != n + 1:
        raise ParseError(f"header has {len(header)} columns, expected {n + 1} or {n + 2}")
    records: list[DctRecord] = []
    for lineno, row in enumerate(reader, start=2):
        if not row:
            continue
        if len(row) != len(header):
            raise ParseError(f"row {lineno}: {len(row)} columns, expected {len(header)}")
        flags = []
        for col in row[1 : n + 1]:
            if col not in ("0", "1"):
                raise ParseError(f"row {lineno}: non-binary flag {col!r}")
            flags.append(int(col))
        label = row[n + 1].strip() if has_label else ""
        if label and label not in domain.fine_classes:
            raise ParseError(f"row {lineno}: unknown class label {label!r}")
        records.append(DctRecord(row[0], tuple(flags), label or None))
    return records


def format_dct(records: Iterable[DctRecord], domain: Domain = DEFAULT_DOMAIN) -> str:
    n = _n_items(domain)
    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(["student_id"] + [f"i{i:02d}" for i in range(1, n + 1)] + ["expert_class"])
    for r in records:
        writer.writerow([r.student_id, *r.answers, r.label or ""])
    return out.getvalue()


def aggregate(
    record: DctRecord, item_map: ItemMap | None = None, domain: Domain = DEFAULT_DOMAIN
) -> TypeScores:
    """Per-type correct counts for one record."""
    item_map = item_map or ItemMap.contiguous(domain)
    item_map.validate(domain)
    if len(record.answers) != len(item_map.types):
        raise DomainError(
            f"{record.student_id}: {len(record.answers)} answers, map covers {len(item_map.types)}"
        )
    counts = [0] * domain.n_types
    for flag, t in zip(record.answers, item_map.types):
        counts[t - 1] += int(flag)
    return TypeScores(record.student_id, tuple(counts), record.label)


def parse_type_scores(text: str, domain: Domain = DEFAULT_DOMAIN) -> list[TypeScores]:
    """Parse `student_id,t1..t6[,label]` delimited text."""
    reader = csv.reader(io.StringIO(text))
    try:
        header = next(reader)
    except StopIteration:
        raise ParseError("empty document: missing header row")
    n = domain.n_types
    has_label = len(header) == n + 2
    if not has_label and len(header) != n + 1:
        raise ParseError(f"header has {len(header)} columns, expected {n + 1} or {n + 2}")
    out: list[TypeScores] = []
    for lineno, row in enumerate(reader, start=2):
        if not row:
            continue
        if len(row) != len(header):
            raise ParseError(f"row {lineno}: {len(row)} columns, expected {len(header)}")
        try:
            counts = tuple(int(c) for c in row[1 : n + 1])
        except ValueError:
            raise ParseError(f"row {lineno}: non-integer count")
        label = row[n + 1].strip() if has_label else ""
        scores = TypeScores(row[0], counts, label or None)
        try:
            scores.validate(domain)
        except DomainError as exc:
            raise ParseError(f"row {lineno}: {exc}")
        out.append(scores)
    return out


def format_type_scores(scores: Iterable[TypeScores], domain: Domain = DEFAULT_DOMAIN) -> str:
    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(["student_id"] + [f"t{t}" for t in domain.type_ids] + ["label"])
    for s in scores:
        writer.writerow([s.student_id, *s.counts, s.label or ""])
    return out.getvalue()


def empirical_priors(
    labels: Sequence[str], domain: Domain = DEFAULT_DOMAIN, epsilon: float = 0.0
) -> dict[str, float]:
    """Relative class frequencies, optionally epsilon-smoothed."""
    if not labels:
        raise ValueError("cannot derive priors from an empty label list")
    unknown = set(labels) - set(domain.fine_classes)
    if unknown:
        raise DomainError(f"unknown class labels: {sorted(unknown)}")
    counts = {c: epsilon for c in domain.fine_classes}
    for lab in labels:
        counts[lab] += 1.0
    total = sum(counts.values())
    return {c: counts[c] / total for c in domain.fine_classes}


def parse_priors(text: str, domain: Domain = DEFAULT_DOMAIN) -> dict[str, float]:
    """Parse `class,probability` rows (header optional)."""
    priors: dict[str, float] = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.strip()
        if not line or line.lower().startswith("class"):
            continue
        parts = [p.strip() for p in line.split(",")]
        if len(parts) != 2:
            raise ParseError(f"row {lineno}: expected 'class,probability'")
        cls, prob = parts
        if cls not in domain.fine_classes:
            raise ParseError(f"row {lineno}: unknown class {cls!r}")
        priors[cls] = float(prob)
    if abs(sum(priors.values()) - 1.0) > 1e-6:
        raise ParseError("priors do not sum to 1")
    return priors


def format_priors(priors: Mapping[str, float], domain: Domain = DEFAULT_DOMAIN) -> str:
    lines = ["class,probability"]
    lines += [f"{c},{priors.get(c, 0.0):.12g}" for c in domain.fine_classes]
    return "\n".join(lines) + "\n"


def make_splits(dataset: Sequence, plan: SplitPlan) -> list[tuple[list, list]]:
    """k random train/test partitions, deterministic given plan.seed."""
    if not dataset:
        raise ValueError("cannot split an empty dataset")
    rng = np.random.default_rng(plan.seed)
    n = len(dataset)
    n_test = round(plan.test_fraction * n)
    splits = []
    for _ in range(plan.k):
        perm = rng.permutation(n)
        test_idx = set(perm[:n_test].tolist())
        train = [dataset[i] for i in range(n) if i not in test_idx]
        test = [dataset[i] for i in sorted(test_idx)]
        splits.append((train, test))
    return splits


def simulate_cohort(
    priors: Mapping[str, float],
    pcm: float,
    n: int,
    seed: int = 0,
    domain: Domain = DEFAULT_DOMAIN,
    item_map: ItemMap | None = None,
) -> list[DctRecord]:
    """Sample records from the careless-error model; the generating class
    is stored in each record's label field."""
    if n < 1:
        raise ValueError("n must be >= 1")
    item_map = item_map or ItemMap.contiguous(domain)
    item_map.validate(domain)
    classes = list(domain.fine_classes)
    p_class = np.array([float(priors.get(c, 0.0)) for c in classes])
    if np.any(p_class < 0) or abs(p_class.sum() - 1.0) > 1e-9:
        raise ValueError("priors must be nonnegative and sum to 1")
    rng = np.random.default_rng(seed)
    width = len(str(n))
    records = []
    for i in range(n):
        cls = classes[int(rng.choice(len(classes), p=p_class))]
        p_item = [correct_prob(cls, t, pcm, domain) for t in item_map.types]
        answers = tuple(int(rng.random() < p) for p in p_item)
        records.append(DctRecord(f"sim{i + 1:0{width}d}", answers, cls))
    return records
