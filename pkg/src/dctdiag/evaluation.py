"""Model evaluation: comparison grids with the desirable/undesirable change
policy, hold-out prediction scoring, and adaptive belief trajectories."""

from __future__ import annotations

import io
from dataclasses import dataclass, field
from typing import Callable, Mapping, Sequence

import numpy as np

from . import bn
from .bn import BayesNet, Posterior, absorb_round, holdout_predict, posterior, rank_classes
from .domain import (
    CLASS_NODE,
    DEFAULT_DOMAIN,
    Domain,
    DomainError,
    EXPECT_UNKNOWN,
    TypeScores,
    coarse_of,
)

MATCH = "match"
DESIRABLE = "desirable"
UNDESIRABLE = "undesirable"
CHANGE_KINDS = (MATCH, DESIRABLE, UNDESIRABLE)


@dataclass(frozen=True)
class ComparisonGrid:
    """Counts of (reference class, model class) pairs; rows are reference."""

    labels: tuple[str, ...]
    counts: np.ndarray

    def __post_init__(self) -> None:
        object.__setattr__(self, "counts", np.asarray(self.counts, dtype=int))
        if self.counts.shape != (len(self.labels), len(self.labels)):
            raise ValueError("grid must be square over its labels")
        if np.any(self.counts < 0):
            raise ValueError("grid counts must be nonnegative")

    @property
    def total(self) -> int:
        return int(self.counts.sum())


def comparison_grid(
    ref_labels: Sequence[str],
    model_labels: Sequence[str],
    labels: Sequence[str] | None = None,
) -> ComparisonGrid:
    if len(ref_labels) != len(model_labels):
        raise ValueError(
            f"label lists differ in length: {len(ref_labels)} vs {len(model_labels)}"
        )
    if labels is None:
        labels = DEFAULT_DOMAIN.fine_classes
    labels = tuple(labels)
    index = {c: i for i, c in enumerate(labels)}
    counts = np.zeros((len(labels), len(labels)), dtype=int)
    for r, m in zip(ref_labels, model_labels):
        if r not in index or m not in index:
            raise ValueError(f"label pair ({r!r}, {m!r}) outside grid vocabulary")
        counts[index[r], index[m]] += 1
    return ComparisonGrid(labels, counts)


def change_kind(
    frm: str,
    to: str,
    domain: Domain = DEFAULT_DOMAIN,
    overrides: Mapping[tuple[str, str], str] | None = None,
) -> str:
    """Expert change policy for fine reclassifications.

    A move out of a partially specified class to a fully specified class of
    the same coarse group is desirable, as is any move out of the residual
    (all-'.') class. Everything else off the diagonal is undesirable:
    changes between specific classes, changes into the residual class, and
    cross-group moves.
    """
    if frm not in domain.fine_classes or to not in domain.fine_classes:
        raise DomainError(f"unknown class in ({frm!r}, {to!r})")
    if overrides and (frm, to) in overrides:
        kind = overrides[(frm, to)]
        if kind not in CHANGE_KINDS:
            raise ValueError(f"override kind {kind!r} invalid")
        return kind
    if frm == to:
        return MATCH
    frm_pat, to_pat = domain.patterns[frm], domain.patterns[to]
    if all(ch == EXPECT_UNKNOWN for ch in frm_pat):
        return DESIRABLE
    frm_dotted = EXPECT_UNKNOWN in frm_pat
    to_specified = EXPECT_UNKNOWN not in to_pat
    if frm_dotted and to_specified and coarse_of(frm, domain) == coarse_of(to, domain):
        return DESIRABLE
    return UNDESIRABLE


def coarse_change_kind(frm: str, to: str, domain: Domain = DEFAULT_DOMAIN) -> str:
    """Coarse policy: only moves out of the residual group are desirable."""
    if frm not in domain.coarse_classes or to not in domain.coarse_classes:
        raise DomainError(f"unknown coarse class in ({frm!r}, {to!r})")
    if frm == to:
        return MATCH
    if frm == "UN":
        return DESIRABLE
    return UNDESIRABLE


@dataclass(frozen=True)
class GridSummary:
    match_pct: float
    desirable_pct: float
    undesirable_pct: float

    def rounded(self) -> tuple[float, float, float]:
        return (
            round(self.match_pct, 2),
            round(self.desirable_pct, 2),
            round(self.undesirable_pct, 2),
        )


def grid_summary(
    grid: ComparisonGrid,
    kind_fn: Callable[[str, str], str] = change_kind,
) -> GridSummary:
    """Percentage of students per change kind under a cell policy."""
    if grid.total == 0:
        raise ValueError("cannot summarize an empty grid")
    tally = {k: 0 for k in CHANGE_KINDS}
    for i, r in enumerate(grid.labels):
        for j, m in enumerate(grid.labels):
            c = int(grid.counts[i, j])
            if c:
                tally[kind_fn(r, m)] += c
    scale = 100.0 / grid.total
    return GridSummary(
        tally[MATCH] * scale, tally[DESIRABLE] * scale, tally[UNDESIRABLE] * scale
    )


def render_grid(grid: ComparisonGrid, kind_fn: Callable[[str, str], str] = change_kind) -> str:
    """Human-readable grid; desirable cells carry a '+', undesirable a '!'."""
    width = max(6, max(len(l) for l in grid.labels) + 2)
    out = io.StringIO()
    out.write("".ljust(width))
    for l in grid.labels:
        out.write(l.rjust(width))
    out.write("\n")
    for i, r in enumerate(grid.labels):
        out.write(r.ljust(width))
        for j, m in enumerate(grid.labels):
            c = int(grid.counts[i, j])
            mark = ""
            if c and i != j:
                kind = kind_fn(r, m)
                mark = "+" if kind == DESIRABLE else "!" if kind == UNDESIRABLE else ""
            out.write(f"{c}{mark}".rjust(width))
        out.write("\n")
    return out.getvalue()


def grid_to_csv(grid: ComparisonGrid) -> str:
    lines = ["ref\\model," + ",".join(grid.labels)]
    for i, r in enumerate(grid.labels):
        lines.append(r + "," + ",".join(str(int(c)) for c in grid.counts[i]))
    return "\n".join(lines) + "\n"


def summary_to_text(summary: GridSummary) -> str:
    m, d, u = summary.rounded()
    return f"match_pct: {m:.2f}\ndesirable_pct: {d:.2f}\nundesirable_pct: {u:.2f}\n"


@dataclass(frozen=True)
class PredictionReport:
    avg_accuracy: float
    avg_prob: float
    per_type: Mapping[int, tuple[float, float]]  # type_id -> (accuracy, prob)


def prediction_eval(
    net: BayesNet,
    dataset: Sequence[TypeScores],
    domain: Domain = DEFAULT_DOMAIN,
) -> PredictionReport:
    """Leave-one-type-out prediction over every student and target type.

    Accuracy scores 1 when the MAP state equals the actual observed state;
    the probability measure is the posterior mass on the actual state.
    """
    from .domain import observed_state

    scheme = net.meta.get("scheme")
    if scheme is None:
        raise DomainError("net has no scheme metadata")
    if not dataset:
        raise ValueError("empty dataset")
    acc: dict[int, list[float]] = {t: [] for t in domain.type_ids}
    prob: dict[int, list[float]] = {t: [] for t in domain.type_ids}
    for scores in dataset:
        scores.validate(domain)
        for t in domain.type_ids:
            actual = observed_state(scores.counts[t - 1], t, scheme, domain)
            post = holdout_predict(net, scores, t)
            acc[t].append(1.0 if bn.map_state(post) == actual else 0.0)
            prob[t].append(post.prob(actual))
    per_type = {
        t: (float(np.mean(acc[t])), float(np.mean(prob[t]))) for t in domain.type_ids
    }
    all_acc = [v for t in domain.type_ids for v in acc[t]]
    all_prob = [v for t in domain.type_ids for v in prob[t]]
    return PredictionReport(float(np.mean(all_acc)), float(np.mean(all_prob)), per_type)


def report_to_text(report: PredictionReport) -> str:
    lines = [
        f"avg_accuracy: {report.avg_accuracy:.4f}",
        f"avg_prob: {report.avg_prob:.4f}",
    ]
    for t, (a, p) in sorted(report.per_type.items()):
        lines.append(f"type{t}: accuracy={a:.4f} prob={p:.4f}")
    return "\n".join(lines) + "\n"


def adaptive_trajectory(
    net: BayesNet, rounds: Sequence[Mapping[str, str]]
) -> list[Posterior]:
    """Fold prior absorption over evidence rounds, recording the class
    posterior after each round."""
    root = net.meta.get("class_node", CLASS_NODE)
    trajectory: list[Posterior] = []
    current = net
    for i, evidence in enumerate(rounds):
        try:
            current = absorb_round(current, evidence)
        except bn.BnError as exc:
            raise bn.BnError(f"round {i}: {exc}") from exc
        trajectory.append(posterior(current, {}, root))
    return trajectory
