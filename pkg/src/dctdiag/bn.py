"""Discrete Bayesian networks with exact inference.

Variables are named, states are ordered labels, and each CPT is a matrix
with one row per joint parent assignment (mixed-radix order over parent
states, first parent most significant) and one column per state. Inference
is exact: variable elimination with a min-fill ordering, checked in tests
against full-joint enumeration.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np

ROW_SUM_TOL = 1e-9


class BnError(ValueError):
    """Malformed network or query input."""


class InconsistentEvidenceError(BnError):
    """Evidence has zero likelihood under the network."""


@dataclass(frozen=True)
class Variable:
    name: str
    states: tuple[str, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "states", tuple(self.states))
        if len(self.states) < 2:
            raise BnError(f"variable {self.name!r} needs at least 2 states")
        if len(set(self.states)) != len(self.states):
            raise BnError(f"variable {self.name!r} has duplicate state labels")


@dataclass(frozen=True)
class BayesNet:
    """Immutable network. Construction checks shapes and name references;
    numeric and acyclicity invariants are reported by :func:`validate` so
    that deliberately broken nets can still be inspected."""

    variables: tuple[Variable, ...]
    parents: Mapping[str, tuple[str, ...]]
    cpts: Mapping[str, np.ndarray]
    meta: Mapping = field(default_factory=dict)

    def __post_init__(self) -> None:
        names = [v.name for v in self.variables]
        if len(set(names)) != len(names):
            raise BnError("duplicate variable names")
        by_name = {v.name: v for v in self.variables}
        for name in names:
            if name not in self.parents or name not in self.cpts:
                raise BnError(f"variable {name!r} missing parents or CPT")
            for p in self.parents[name]:
                if p not in by_name:
                    raise BnError(f"{name!r} references unknown parent {p!r}")
        object.__setattr__(
            self, "cpts", {n: np.asarray(self.cpts[n], dtype=float) for n in names}
        )
        object.__setattr__(self, "parents", {n: tuple(self.parents[n]) for n in names})

    def variable(self, name: str) -> Variable:
        for v in self.variables:
            if v.name == name:
                return v
        raise BnError(f"unknown variable {name!r}")

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(v.name for v in self.variables)

    def state_index(self, name: str, state: str) -> int:
        var = self.variable(name)
        try:
            return var.states.index(state)
        except ValueError:
            raise BnError(f"variable {name!r} has no state {state!r}") from None

    def row_index(self, name: str, parent_states: Sequence[str]) -> int:
        """Mixed-radix CPT row index for a joint parent assignment."""
        idx = 0
        for p, s in zip(self.parents[name], parent_states):
            idx = idx * len(self.variable(p).states) + self.state_index(p, s)
        return idx

    def with_prior(self, root: str, prior: np.ndarray) -> "BayesNet":
        if self.parents[root]:
            raise BnError(f"{root!r} is not a root variable")
        cpts = dict(self.cpts)
        cpts[root] = np.asarray(prior, dtype=float).reshape(1, -1)
        return BayesNet(self.variables, self.parents, cpts, meta=dict(self.meta))


def validate(net: BayesNet) -> list[str]:
    """Return diagnostics for every violated invariant; empty means ok."""
    problems: list[str] = []
    order = _topological_order(net)
    if order is None:
        problems.append("cycle: parent graph is not acyclic")
    for v in net.variables:
        cpt = net.cpts[v.name]
        n_rows = int(np.prod([len(net.variable(p).states) for p in net.parents[v.name]]))
        if cpt.shape != (n_rows, len(v.states)):
            problems.append(
                f"{v.name}: CPT shape {cpt.shape} != ({n_rows}, {len(v.states)})"
            )
            continue
        if np.any(cpt < 0):
            problems.append(f"{v.name}: CPT has negative entries")
        bad = np.nonzero(np.abs(cpt.sum(axis=1) - 1.0) > ROW_SUM_TOL)[0]
        if bad.size:
            problems.append(f"{v.name}: CPT row {int(bad[0])} sums to {cpt[bad[0]].sum():.6g}")
    return problems


def _topological_order(net: BayesNet) -> list[str] | None:
    indeg = {v.name: len(net.parents[v.name]) for v in net.variables}
    children: dict[str, list[str]] = {v.name: [] for v in net.variables}
    for v in net.variables:
        for p in net.parents[v.name]:
            children[p].append(v.name)
    order = [n for n, d in indeg.items() if d == 0]
    seen = 0
    while seen < len(order):
        n = order[seen]
        seen += 1
        for c in children[n]:
            indeg[c] -= 1
            if indeg[c] == 0:
                order.append(c)
    return order if len(order) == len(net.variables) else None


@dataclass(frozen=True)
class Posterior:
    variable: str
    states: tuple[str, ...]
    probs: np.ndarray
    evidence: Mapping[str, str] = field(default_factory=dict)

    def __post_init__(self) -> None:
        object.__setattr__(self, "probs", np.asarray(self.probs, dtype=float))

    def prob(self, state: str) -> float:
        return float(self.probs[self.states.index(state)])

    def as_dict(self) -> dict[str, float]:
        return {s: float(p) for s, p in zip(self.states, self.probs)}


# ---------------------------------------------------------------------------
# Factors for variable elimination


@dataclass(frozen=True)
class _Factor:
    vars: tuple[str, ...]
    table: np.ndarray  # one axis per variable, in `vars` order

    def multiply(self, other: "_Factor") -> "_Factor":
        union = self.vars + tuple(v for v in other.vars if v not in self.vars)
        a = _expand(self, union)
        b = _expand(other, union)
        return _Factor(union, a * b)

    def marginalize(self, var: str) -> "_Factor":
        axis = self.vars.index(var)
        return _Factor(
            self.vars[:axis] + self.vars[axis + 1 :], self.table.sum(axis=axis)
        )


def _expand(f: _Factor, union: tuple[str, ...]) -> np.ndarray:
    shape = [1] * len(union)
    src = list(f.table.shape)
    perm = [f.vars.index(v) for v in union if v in f.vars]
    table = np.transpose(f.table, perm) if perm else f.table
    it = iter(table.shape)
    for i, v in enumerate(union):
        if v in f.vars:
            shape[i] = next(it)
    return table.reshape(shape)


def _cpt_factor(net: BayesNet, name: str, evidence: Mapping[str, str]) -> _Factor:
    scope = net.parents[name] + (name,)
    shape = tuple(len(net.variable(v).states) for v in scope)
    table = net.cpts[name].reshape(shape)
    keep: list[str] = []
    index: list = []
    for v in scope:
        if v in evidence:
            index.append(net.state_index(v, evidence[v]))
        else:
            index.append(slice(None))
            keep.append(v)
    return _Factor(tuple(keep), table[tuple(index)])


def _check_evidence(net: BayesNet, evidence: Mapping[str, str]) -> None:
    for v, s in evidence.items():
        net.state_index(v, s)  # raises on unknown variable or state


def _min_fill_order(factors: list[_Factor], eliminate: set[str]) -> list[str]:
    adj: dict[str, set[str]] = {v: set() for f in factors for v in f.vars}
    for f in factors:
        for a in f.vars:
            adj[a].update(v for v in f.vars if v != a)
    order: list[str] = []
    remaining = set(eliminate) & set(adj)
    while remaining:
        best, best_fill = None, None
        for v in sorted(remaining):
            nbrs = adj[v] - {v}
            fill = sum(
                1
                for a in nbrs
                for b in nbrs
                if a < b and b not in adj[a]
            )
            if best_fill is None or fill < best_fill:
                best, best_fill = v, fill
        assert best is not None
        order.append(best)
        nbrs = adj[best]
        for a in nbrs:
            adj[a].update(nbrs - {a})
            adj[a].discard(best)
        del adj[best]
        remaining.discard(best)
    return order


def posterior(net: BayesNet, evidence: Mapping[str, str], query: str) -> Posterior:
    """Exact P(query | evidence) by variable elimination."""
    qvar = net.variable(query)
    _check_evidence(net, evidence)
    if query in evidence:
        probs = np.zeros(len(qvar.states))
        probs[net.state_index(query, evidence[query])] = 1.0
        return Posterior(query, qvar.states, probs, dict(evidence))
    factors = [_cpt_factor(net, v.name, evidence) for v in net.variables]
    eliminate = {v.name for v in net.variables if v.name != query and v.name not in evidence}
    for var in _min_fill_order(factors, eliminate):
        related = [f for f in factors if var in f.vars]
        rest = [f for f in factors if var not in f.vars]
        prod = related[0]
        for f in related[1:]:
            prod = prod.multiply(f)
        factors = rest + [prod.marginalize(var)]
    result = _Factor((), np.array(1.0))
    for f in factors:
        result = result.multiply(f)
    table = np.asarray(result.table, dtype=float)
    if result.vars != (query,):
        table = np.moveaxis(table, result.vars.index(query), 0).reshape(len(qvar.states), -1).sum(axis=1)
    total = table.sum()
    if total <= 0.0:
        raise InconsistentEvidenceError(f"evidence {dict(evidence)} has zero likelihood")
    return Posterior(query, qvar.states, table / total, dict(evidence))


def posterior_enumeration(net: BayesNet, evidence: Mapping[str, str], query: str) -> Posterior:
    """Reference oracle: build the full joint table and condition it."""
    qvar = net.variable(query)
    _check_evidence(net, evidence)
    names = net.names
    joint = _Factor((), np.array(1.0))
    for v in net.variables:
        scope = net.parents[v.name] + (v.name,)
        shape = tuple(len(net.variable(s).states) for s in scope)
        joint = joint.multiply(_Factor(scope, net.cpts[v.name].reshape(shape)))
    table = joint.table
    index = []
    for v in joint.vars:
        index.append(
            net.state_index(v, evidence[v]) if v in evidence else slice(None)
        )
    sliced = table[tuple(index)]
    kept = [v for v in joint.vars if v not in evidence]
    if query in evidence:
        probs = np.zeros(len(qvar.states))
        probs[net.state_index(query, evidence[query])] = 1.0
        return Posterior(query, qvar.states, probs, dict(evidence))
    axis = kept.index(query)
    marg = np.moveaxis(np.asarray(sliced), axis, 0).reshape(len(qvar.states), -1).sum(axis=1)
    total = marg.sum()
    if total <= 0.0:
        raise InconsistentEvidenceError(f"evidence {dict(evidence)} has zero likelihood")
    return Posterior(query, qvar.states, marg / total, dict(evidence))


def rank_classes(p: Posterior) -> list[tuple[str, float]]:
    """States by probability descending; ties keep canonical state order."""
    order = sorted(range(len(p.states)), key=lambda i: (-p.probs[i], i))
    return [(p.states[i], float(p.probs[i])) for i in order]


def map_state(p: Posterior) -> str:
    return rank_classes(p)[0][0]


def absorb_round(net: BayesNet, evidence: Mapping[str, str]) -> BayesNet:
    """Replace the class-node prior with its posterior given one round of
    type-node evidence; everything else is untouched."""
    root = net.meta.get("class_node", "fineClass")
    allowed = set(net.meta.get("type_nodes", [n for n in net.names if n != root]))
    bad = set(evidence) - allowed
    if bad:
        raise BnError(f"absorb_round evidence must be on type nodes, got {sorted(bad)}")
    if not evidence:
        return net
    post = posterior(net, evidence, root)
    return net.with_prior(root, post.probs)


def change_ratios(prior: np.ndarray, post: np.ndarray) -> np.ndarray:
    """Per-state belief change post/prior; 0/0 is 1, x/0 is +inf."""
    prior = np.asarray(prior, dtype=float)
    post = np.asarray(post, dtype=float)
    if prior.shape != post.shape:
        raise BnError("prior and posterior must share support")
    out = np.empty_like(prior)
    for i, (a, b) in enumerate(zip(prior, post)):
        if a > 0:
            out[i] = b / a
        else:
            out[i] = 1.0 if b == 0 else np.inf
    return out


def holdout_predict(net: BayesNet, scores, target: int) -> Posterior:
    """Predict one type node from the five others.

    `scores` is a TypeScores; the evidence scheme is taken from net.meta.
    """
    from . import domain as dom

    scheme = net.meta.get("scheme")
    if scheme is None:
        raise BnError("net has no scheme metadata; cannot map scores to evidence")
    evidence = dom.scores_to_evidence(scores, scheme, exclude=(target,))
    return posterior(net, evidence, dom.type_node(target))


# ---------------------------------------------------------------------------
# Serialization


def to_dict(net: BayesNet) -> dict:
    return {
        "variables": [{"name": v.name, "states": list(v.states)} for v in net.variables],
        "parents": {v.name: list(net.parents[v.name]) for v in net.variables},
        "cpts": {v.name: net.cpts[v.name].tolist() for v in net.variables},
        "meta": dict(net.meta),
    }


def from_dict(doc: Mapping) -> BayesNet:
    variables = tuple(
        Variable(v["name"], tuple(v["states"])) for v in doc["variables"]
    )
    parents = {n: tuple(ps) for n, ps in doc["parents"].items()}
    cpts = {n: np.array(rows, dtype=float) for n, rows in doc["cpts"].items()}
    return BayesNet(variables, parents, cpts, meta=dict(doc.get("meta", {})))


def save(net: BayesNet, path: str) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(to_dict(net), fh, indent=2)
        fh.write("\n")


def load(path: str) -> BayesNet:
    with open(path, encoding="utf-8") as fh:
        return from_dict(json.load(fh))
