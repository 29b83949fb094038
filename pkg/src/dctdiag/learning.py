"""Learning workflows: CPT fitting with pseudocounts, penalized-likelihood
scoring, EM mixture clustering with class-count selection, and greedy
score-based structure search under an optional ancestral constraint.
"""

from __future__ import annotations

import itertools
import math
import warnings
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np

from .bn import BayesNet, Variable, validate
from .domain import (
    CLASS_NODE,
    DEFAULT_DOMAIN,
    Domain,
    SCHEME_COUNT,
    TypeScores,
    observed_state,
    type_node,
    type_states,
)
from .pipeline import DctRecord


class LearningError(ValueError):
    pass


@dataclass(frozen=True)
class DiscreteDataset:
    """Complete records over a shared roster of discrete variables,
    stored as state indices."""

    variables: tuple[Variable, ...]
    codes: np.ndarray  # shape (n_records, n_variables)

    def __post_init__(self) -> None:
        codes = np.asarray(self.codes, dtype=int)
        object.__setattr__(self, "codes", codes)
        if codes.ndim != 2 or codes.shape[1] != len(self.variables):
            raise LearningError("codes must be (n_records, n_variables)")
        for j, v in enumerate(self.variables):
            col = codes[:, j]
            if col.size and (col.min() < 0 or col.max() >= len(v.states)):
                raise LearningError(f"codes for {v.name!r} out of range")

    @property
    def n(self) -> int:
        return self.codes.shape[0]

    def column(self, name: str) -> np.ndarray:
        for j, v in enumerate(self.variables):
            if v.name == name:
                return self.codes[:, j]
        raise LearningError(f"dataset has no variable {name!r}")

    def cardinality(self, name: str) -> int:
        for v in self.variables:
            if v.name == name:
                return len(v.states)
        raise LearningError(f"dataset has no variable {name!r}")


def dataset_from_type_scores(
    scores: Sequence[TypeScores],
    scheme: str = SCHEME_COUNT,
    include_class: bool = True,
    domain: Domain = DEFAULT_DOMAIN,
) -> DiscreteDataset:
    """Encode labeled type scores as a 7-variable (or 6 without the class
    label) discrete dataset matching the student-net state spaces."""
    variables: list[Variable] = []
    if include_class:
        variables.append(Variable(CLASS_NODE, domain.fine_classes))
    for t in domain.type_ids:
        variables.append(Variable(type_node(t), type_states(t, scheme, domain)))
    rows = []
    for s in scores:
        s.validate(domain)
        row = []
        if include_class:
            if s.label is None:
                raise LearningError(f"{s.student_id}: missing class label")
            row.append(domain.fine_classes.index(s.label))
        for t in domain.type_ids:
            state = observed_state(s.counts[t - 1], t, scheme, domain)
            row.append(variables[-domain.n_types + t - 1].states.index(state))
        rows.append(row)
    return DiscreteDataset(tuple(variables), np.array(rows, dtype=int).reshape(len(rows), len(variables)))


def dataset_from_dct(records: Sequence[DctRecord]) -> DiscreteDataset:
    """Encode raw records as binary item variables (1 = correct first)."""
    if not records:
        raise LearningError("empty record list")
    n_items = len(records[0].answers)
    variables = tuple(
        Variable(f"i{i:02d}", ("1", "0")) for i in range(1, n_items + 1)
    )
    codes = np.array([[1 - a for a in r.answers] for r in records], dtype=int)
    return DiscreteDataset(variables, codes)


# ---------------------------------------------------------------------------
# Parameter learning and scoring


def _parent_config_codes(dataset: DiscreteDataset, parents: Sequence[str]) -> tuple[np.ndarray, int]:
    """Mixed-radix parent-assignment index per record, first parent most
    significant (matches BayesNet CPT row order)."""
    idx = np.zeros(dataset.n, dtype=int)
    n_rows = 1
    for p in parents:
        card = dataset.cardinality(p)
        idx = idx * card + dataset.column(p)
        n_rows *= card
    return idx, n_rows


def family_counts(
    dataset: DiscreteDataset, var: str, parents: Sequence[str]
) -> np.ndarray:
    """Occurrence counts, shape (parent configurations, states)."""
    idx, n_rows = _parent_config_codes(dataset, parents)
    card = dataset.cardinality(var)
    flat = np.bincount(idx * card + dataset.column(var), minlength=n_rows * card)
    return flat.reshape(n_rows, card).astype(float)


def learn_cpts(structure: BayesNet, dataset: DiscreteDataset, alpha: float = 1.0) -> BayesNet:
    """Refit every CPT of `structure` from data with Dirichlet pseudocount
    alpha per cell. With alpha = 0, unobserved parent rows fall back to
    uniform with a warning."""
    if alpha < 0:
        raise LearningError("alpha must be >= 0")
    cpts: dict[str, np.ndarray] = {}
    for v in structure.variables:
        counts = family_counts(dataset, v.name, structure.parents[v.name])
        smoothed = counts + alpha
        totals = smoothed.sum(axis=1, keepdims=True)
        rows = np.empty_like(smoothed)
        empty = totals[:, 0] == 0
        if np.any(empty):
            warnings.warn(
                f"{v.name}: {int(empty.sum())} unobserved parent rows set uniform",
                stacklevel=2,
            )
            rows[empty] = 1.0 / counts.shape[1]
        nonempty = ~empty
        rows[nonempty] = smoothed[nonempty] / totals[nonempty]
        cpts[v.name] = rows
    net = BayesNet(structure.variables, structure.parents, cpts, meta=dict(structure.meta))
    problems = validate(net)
    if problems:
        raise LearningError(f"learned net invalid: {problems[0]}")
    return net


def log_likelihood(net: BayesNet, dataset: DiscreteDataset) -> float:
    """Sum of per-record log joint probabilities; -inf when a record has
    probability zero."""
    total = 0.0
    for v in net.variables:
        idx, _ = _parent_config_codes(dataset, net.parents[v.name])
        probs = net.cpts[v.name][idx, dataset.column(v.name)]
        with np.errstate(divide="ignore"):
            logs = np.log(probs)
        if np.any(np.isneginf(logs)):
            return float("-inf")
        total += float(logs.sum())
    return total


def parameter_count(net: BayesNet) -> int:
    """Free parameters: (states - 1) per CPT row, summed over variables."""
    total = 0
    for v in net.variables:
        n_rows = int(np.prod([len(net.variable(p).states) for p in net.parents[v.name]]))
        total += n_rows * (len(v.states) - 1)
    return total


@dataclass(frozen=True)
class StructureScore:
    loglik: float
    dim: int
    score: float  # loglik - (dim / 2) * ln(N)


def bic_score(net: BayesNet, dataset: DiscreteDataset) -> StructureScore:
    ll = log_likelihood(net, dataset)
    d = parameter_count(net)
    penalty = 0.5 * d * math.log(max(dataset.n, 1))
    return StructureScore(ll, d, ll - penalty)


# ---------------------------------------------------------------------------
# EM mixture clustering


@dataclass(frozen=True)
class MixtureModel:
    """Mixture of independent per-variable discrete distributions."""

    variables: tuple[Variable, ...]
    weights: np.ndarray  # (k,)
    components: tuple[np.ndarray, ...]  # per variable: (k, n_states)
    responsibilities: np.ndarray  # (n, k)
    loglik: float
    loglik_trace: tuple[float, ...]

    @property
    def k(self) -> int:
        return len(self.weights)

    def hard_assignments(self) -> np.ndarray:
        return self.responsibilities.argmax(axis=1)

    def max_responsibility(self) -> np.ndarray:
        return self.responsibilities.max(axis=1)


def _log_resp(
    dataset: DiscreteDataset, weights: np.ndarray, components: Sequence[np.ndarray]
) -> tuple[np.ndarray, float]:
    with np.errstate(divide="ignore"):
        log_joint = np.broadcast_to(np.log(weights), (dataset.n, len(weights))).copy()
        for j, comp in enumerate(components):
            log_joint += np.log(comp[:, dataset.codes[:, j]]).T
    m = log_joint.max(axis=1, keepdims=True)
    m = np.where(np.isfinite(m), m, 0.0)
    log_norm = m[:, 0] + np.log(np.exp(log_joint - m).sum(axis=1))
    return log_joint - log_norm[:, None], float(log_norm.sum())


def _m_step(
    dataset: DiscreteDataset, resp: np.ndarray
) -> tuple[np.ndarray, list[np.ndarray]]:
    nk = resp.sum(axis=0)
    weights = nk / dataset.n
    components = []
    for j, v in enumerate(dataset.variables):
        onehot = np.eye(len(v.states))[dataset.codes[:, j]]  # (n, s)
        counts = resp.T @ onehot  # (k, s)
        denom = np.where(nk > 0, nk, 1.0)[:, None]
        comp = counts / denom
        comp[nk == 0] = 1.0 / len(v.states)
        components.append(comp)
    return weights, components


def em_fit(
    dataset: DiscreteDataset,
    k: int,
    seed: int = 0,
    max_iters: int = 300,
    tol: float = 1e-7,
    init_resp: np.ndarray | None = None,
) -> MixtureModel:
    """EM for a mixture of independent discretes; log-likelihood is
    non-decreasing per iteration and fitting is deterministic given seed."""
    if k < 1:
        raise LearningError("k must be >= 1")
    if dataset.n == 0:
        raise LearningError("empty dataset")
    if k > dataset.n:
        raise LearningError(f"k={k} exceeds dataset size {dataset.n}")
    if init_resp is None:
        rng = np.random.default_rng(seed)
        init_resp = rng.dirichlet(np.ones(k), size=dataset.n)
    weights, components = _m_step(dataset, np.asarray(init_resp))
    trace: list[float] = []
    resp = np.asarray(init_resp)
    for _ in range(max_iters):
        log_resp, ll = _log_resp(dataset, weights, components)
        resp = np.exp(log_resp)
        trace.append(ll)
        if len(trace) > 1 and abs(trace[-1] - trace[-2]) < tol:
            break
        weights, components = _m_step(dataset, resp)
    return MixtureModel(
        dataset.variables,
        weights,
        tuple(components),
        resp,
        trace[-1],
        tuple(trace),
    )


def mixture_dim(model_k: int, variables: Sequence[Variable]) -> int:
    return (model_k - 1) + model_k * sum(len(v.states) - 1 for v in variables)


@dataclass(frozen=True)
class SelectionResult:
    best: MixtureModel
    best_k: int
    scores: Mapping[int, float]  # two-part code analog per candidate k
    unclassified: np.ndarray  # bool mask per record

    @property
    def n_unclassified(self) -> int:
        return int(self.unclassified.sum())


def select_classes(
    dataset: DiscreteDataset,
    k_candidates: Iterable[int],
    seed: int = 0,
    restarts: int = 5,
    unclassified_threshold: float = 0.5,
    max_iters: int = 300,
) -> SelectionResult:
    """Fit each candidate class count (best of `restarts` seeds by
    log-likelihood) and pick the k minimizing -loglik + (d/2) ln N."""
    candidates = sorted(set(int(k) for k in k_candidates))
    if not candidates:
        raise LearningError("no candidate class counts")
    scores: dict[int, float] = {}
    models: dict[int, MixtureModel] = {}
    for k in candidates:
        best: MixtureModel | None = None
        for r in range(restarts):
            model = em_fit(dataset, k, seed=seed * 1000 + k * 17 + r, max_iters=max_iters)
            if best is None or model.loglik > best.loglik:
                best = model
        assert best is not None
        d = mixture_dim(k, dataset.variables)
        scores[k] = -best.loglik + 0.5 * d * math.log(dataset.n)
        models[k] = best
    best_k = min(candidates, key=lambda k: (scores[k], k))
    best = models[best_k]
    unclassified = best.max_responsibility() < unclassified_threshold
    return SelectionResult(best, best_k, scores, unclassified)


def clustering_report(
    result: SelectionResult, ids: Sequence[str] | None = None
) -> str:
    """Delimited text: record id, hard class, max responsibility, flag."""
    assign = result.best.hard_assignments()
    maxes = result.best.max_responsibility()
    lines = ["record_id,cluster,max_responsibility,unclassified"]
    for i in range(len(assign)):
        rid = ids[i] if ids is not None else str(i)
        lines.append(
            f"{rid},{int(assign[i])},{maxes[i]:.6f},{int(result.unclassified[i])}"
        )
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# Greedy structure search


def _is_dag(parents: Mapping[str, set[str]]) -> bool:
    seen: dict[str, int] = {}

    def visit(n: str) -> bool:
        state = seen.get(n, 0)
        if state == 1:
            return False
        if state == 2:
            return True
        seen[n] = 1
        ok = all(visit(p) for p in parents[n])
        seen[n] = 2
        return ok

    return all(visit(n) for n in parents)


def _descendants(parents: Mapping[str, set[str]], root: str) -> set[str]:
    children: dict[str, set[str]] = {n: set() for n in parents}
    for n, ps in parents.items():
        for p in ps:
            children[p].add(n)
    out: set[str] = set()
    stack = [root]
    while stack:
        n = stack.pop()
        for c in children[n]:
            if c not in out:
                out.add(c)
                stack.append(c)
    return out


def _constraint_ok(parents: Mapping[str, set[str]], root: str | None) -> bool:
    if root is None:
        return True
    return _descendants(parents, root) == set(parents) - {root}


@dataclass(frozen=True)
class SearchResult:
    net: BayesNet
    score: StructureScore
    arcs: tuple[tuple[str, str], ...]
    arcs_per_node: float
    n_params: int


def _family_score(
    dataset: DiscreteDataset, var: str, parents: tuple[str, ...]
) -> tuple[float, int]:
    """Decomposable BIC family term: max log-likelihood minus penalty."""
    counts = family_counts(dataset, var, parents)
    totals = counts.sum(axis=1, keepdims=True)
    with np.errstate(divide="ignore", invalid="ignore"):
        contrib = counts * (np.log(counts) - np.log(totals))
    ll = float(np.nansum(np.where(counts > 0, contrib, 0.0)))
    d = counts.shape[0] * (counts.shape[1] - 1)
    return ll - 0.5 * d * math.log(max(dataset.n, 1)), d


def greedy_structure_search(
    dataset: DiscreteDataset,
    constraint_root: str | None = None,
    seed: int = 0,
    restarts: int = 3,
    alpha: float = 1.0,
    max_parents: int | None = None,
) -> SearchResult:
    """Hill climbing over add/delete/reverse arc moves maximizing the
    penalized likelihood score.

    With `constraint_root` set, the search starts from the star rooted
    there and rejects any move after which the root is no longer an
    ancestor of every other variable; the constraint therefore holds on
    every accepted intermediate state.
    """
    names = [v.name for v in dataset.variables]
    if constraint_root is not None and constraint_root not in names:
        raise LearningError(f"constraint root {constraint_root!r} not in dataset")
    rng = np.random.default_rng(seed)
    cache: dict[tuple[str, tuple[str, ...]], tuple[float, int]] = {}

    def fam(var: str, parents: set[str]) -> tuple[float, int]:
        key = (var, tuple(sorted(parents)))
        if key not in cache:
            cache[key] = _family_score(dataset, var, key[1])
        return cache[key]

    def total(parents: Mapping[str, set[str]]) -> tuple[float, int]:
        s = 0.0
        d = 0
        for n in names:
            fs, fd = fam(n, parents[n])
            s += fs
            d += fd
        return s, d

    def start_graph(restart: int) -> dict[str, set[str]]:
        parents: dict[str, set[str]] = {n: set() for n in names}
        if constraint_root is not None:
            for n in names:
                if n != constraint_root:
                    parents[n].add(constraint_root)
        if restart > 0:
            # Perturb with random extra arcs along a random topological order.
            order = [n for n in names if n != constraint_root]
            rng.shuffle(order)
            if constraint_root is not None:
                order = [constraint_root] + order
            for i, child in enumerate(order):
                for p in order[:i]:
                    if p not in parents[child] and rng.random() < 0.15:
                        parents[child].add(p)
        return parents

    def moves(parents: dict[str, set[str]]):
        for child in names:
            for parent in names:
                if parent == child:
                    continue
                if parent in parents[child]:
                    trial = {n: set(ps) for n, ps in parents.items()}
                    trial[child].discard(parent)
                    yield ("del", parent, child), trial
                    rev = {n: set(ps) for n, ps in parents.items()}
                    rev[child].discard(parent)
                    rev[parent].add(child)
                    yield ("rev", parent, child), rev
                else:
                    trial = {n: set(ps) for n, ps in parents.items()}
                    trial[child].add(parent)
                    yield ("add", parent, child), trial

    def climb(parents: dict[str, set[str]]) -> dict[str, set[str]]:
        current, _ = total(parents)
        while True:
            best = None  # ((-delta, params, arc_key), trial, new_score)
            for kind, trial in moves(parents):
                if max_parents is not None and any(
                    len(ps) > max_parents for ps in trial.values()
                ):
                    continue
                if not _is_dag(trial) or not _constraint_ok(trial, constraint_root):
                    continue
                s, d = total(trial)
                delta = s - current
                if delta <= 1e-9:
                    continue
                # Ties: largest gain, then fewest parameters, then arc order.
                key = (-delta, d, kind)
                if best is None or key < best[0]:
                    best = (key, trial, s)
            if best is None:
                return parents
            parents, current = best[1], best[2]

    best_parents: dict[str, set[str]] | None = None
    best_score = -math.inf
    for r in range(max(1, restarts)):
        result = climb(start_graph(r))
        s, _ = total(result)
        if s > best_score:
            best_score = s
            best_parents = result
    assert best_parents is not None

    skeleton = BayesNet(
        dataset.variables,
        {n: tuple(sorted(best_parents[n])) for n in names},
        {
            n: np.full(
                (
                    int(np.prod([dataset.cardinality(p) for p in sorted(best_parents[n])])),
                    dataset.cardinality(n),
                ),
                1.0 / dataset.cardinality(n),
            )
            for n in names
        },
        meta={"learned": True, "constraint_root": constraint_root},
    )
    net = learn_cpts(skeleton, dataset, alpha=alpha)
    score = bic_score(net, dataset)
    arcs = tuple(
        sorted((p, n) for n in names for p in best_parents[n])
    )
    return SearchResult(
        net, score, arcs, len(arcs) / len(names), parameter_count(net)
    )
