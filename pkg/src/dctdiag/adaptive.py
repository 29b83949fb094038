"""Adaptive item-type selection and per-student diagnosis sessions.

The next item type is chosen by a sequencing tactic layered over a
coverage rule (every type once before any repeats) and expected
information gain from exact inference on the current beliefs.
"""

from __future__ import annotations

import json
import time
import uuid
from dataclasses import dataclass, field, replace
from typing import Mapping, Sequence

import numpy as np

from . import bn
from .bn import BayesNet, Posterior, absorb_round, change_ratios, posterior
from .domain import (
    CLASS_NODE,
    DEFAULT_DOMAIN,
    Domain,
    DomainError,
    build_student_net,
    type_node,
)

EASY_FIRST = "easy_first"
HARD_FIRST = "hard_first"
ALTERNATING = "alternating"
MAX_GAIN = "max_gain"
TACTICS = (EASY_FIRST, HARD_FIRST, ALTERNATING, MAX_GAIN)


class SessionError(ValueError):
    pass


def entropy(probs: np.ndarray) -> float:
    """Shannon entropy in nats."""
    p = np.asarray(probs, dtype=float)
    p = p[p > 0]
    return float(-(p * np.log(p)).sum())


def expected_info_gain(net: BayesNet, type_id: int) -> float:
    """Expected reduction in class-posterior entropy from observing one
    type node, under the net's current beliefs."""
    root = net.meta.get("class_node", CLASS_NODE)
    node = type_node(type_id)
    if node not in net.names:
        raise bn.BnError(f"net has no node {node!r}")
    h0 = entropy(posterior(net, {}, root).probs)
    node_var = net.variable(node)
    node_marginal = posterior(net, {}, node).probs
    expected = 0.0
    for state, p_state in zip(node_var.states, node_marginal):
        if p_state <= 0:
            continue
        cond = posterior(net, {node: state}, root).probs
        expected += p_state * entropy(cond)
    return max(h0 - expected, 0.0)


@dataclass(frozen=True)
class Answer:
    type_id: int
    state: str
    timestamp: float


@dataclass(frozen=True)
class Session:
    """Immutable diagnosis state; steps return a new Session."""

    session_id: str
    net: BayesNet
    tactic: str
    scheme: str
    pcm: float
    initial_priors: tuple[float, ...]
    history: tuple[Answer, ...] = ()
    last_ratios: tuple[float, ...] | None = None
    difficulty_order: tuple[int, ...] = (1, 2, 3, 4, 5, 6)

    def __post_init__(self) -> None:
        if self.tactic not in TACTICS:
            raise SessionError(f"unknown tactic {self.tactic!r}")

    @property
    def class_node(self) -> str:
        return self.net.meta.get("class_node", CLASS_NODE)

    def coverage(self) -> dict[int, int]:
        counts = {t: 0 for t in self.difficulty_order}
        for a in self.history:
            counts[a.type_id] = counts.get(a.type_id, 0) + 1
        return counts

    def fine_posterior(self) -> Posterior:
        return posterior(self.net, {}, self.class_node)


def new_session(
    tactic: str = MAX_GAIN,
    scheme: str = "band",
    pcm: float = 0.11,
    priors: Mapping[str, float] | None = None,
    domain: Domain = DEFAULT_DOMAIN,
    session_id: str | None = None,
    difficulty_order: Sequence[int] | None = None,
) -> Session:
    from .domain import uniform_priors

    priors = priors if priors is not None else uniform_priors(domain)
    net = build_student_net(scheme, pcm, priors, domain)
    prior_vec = tuple(float(priors.get(c, 0.0)) for c in domain.fine_classes)
    return Session(
        session_id=session_id or uuid.uuid4().hex[:12],
        net=net,
        tactic=tactic,
        scheme=scheme,
        pcm=pcm,
        initial_priors=prior_vec,
        difficulty_order=tuple(difficulty_order or domain.type_ids),
    )


def _max_gain_pick(net: BayesNet, candidates: Sequence[int]) -> int:
    gains = {t: expected_info_gain(net, t) for t in candidates}
    best = max(gains.values())
    # Canonical (ascending type id) tie-break.
    return min(t for t in sorted(candidates) if gains[t] >= best - 1e-12)


def next_item(session: Session) -> int:
    """Recommend the next item type under the session's tactic."""
    coverage = session.coverage()
    uncovered = [t for t in session.difficulty_order if coverage[t] == 0]
    if not uncovered:
        return _max_gain_pick(session.net, list(session.difficulty_order))
    if session.tactic == MAX_GAIN:
        return _max_gain_pick(session.net, uncovered)
    if session.tactic == EASY_FIRST:
        return uncovered[0]
    if session.tactic == HARD_FIRST:
        return uncovered[-1]
    # Alternating: easiest remaining, hardest remaining, easiest, ...
    n_covered = len(session.difficulty_order) - len(uncovered)
    return uncovered[0] if n_covered % 2 == 0 else uncovered[-1]


@dataclass(frozen=True)
class StepResult:
    session: Session
    ranked: list[tuple[str, float]]
    ratios: dict[str, float]
    recommendation: int


def session_step(session: Session, type_id: int, state: str) -> StepResult:
    """Absorb one observed answer; on inconsistent evidence the original
    session is unchanged and the error propagates."""
    node = type_node(type_id)
    if node not in net_names(session.net):
        raise SessionError(f"unknown item type {type_id}")
    prior = posterior(session.net, {}, session.class_node).probs
    new_net = absorb_round(session.net, {node: state})
    post = posterior(new_net, {}, session.class_node)
    ratios = change_ratios(prior, post.probs)
    updated = replace(
        session,
        net=new_net,
        history=session.history + (Answer(type_id, state, time.time()),),
        last_ratios=tuple(float(r) for r in ratios),
    )
    return StepResult(
        session=updated,
        ranked=bn.rank_classes(post),
        ratios={c: float(r) for c, r in zip(post.states, ratios)},
        recommendation=next_item(updated),
    )


def what_if(session: Session, type_id: int, state: str) -> StepResult:
    """Snapshot query: the returned session is the step result, but the
    caller keeps the original; nothing is mutated either way."""
    return session_step(session, type_id, state)


def net_names(net: BayesNet) -> tuple[str, ...]:
    return net.names


# ---------------------------------------------------------------------------
# Persistence and replay


def session_to_dict(session: Session) -> dict:
    return {
        "session_id": session.session_id,
        "tactic": session.tactic,
        "scheme": session.scheme,
        "pcm": session.pcm,
        "initial_priors": list(session.initial_priors),
        "difficulty_order": list(session.difficulty_order),
        "history": [
            {"type_id": a.type_id, "state": a.state, "timestamp": a.timestamp}
            for a in session.history
        ],
    }


def session_from_dict(doc: Mapping, domain: Domain = DEFAULT_DOMAIN) -> Session:
    """Rebuild a session by replaying its recorded history from the stored
    initial priors."""
    priors = {
        c: p for c, p in zip(domain.fine_classes, doc["initial_priors"])
    }
    session = new_session(
        tactic=doc["tactic"],
        scheme=doc["scheme"],
        pcm=float(doc["pcm"]),
        priors=priors,
        domain=domain,
        session_id=doc["session_id"],
        difficulty_order=doc.get("difficulty_order"),
    )
    for a in doc["history"]:
        result = session_step(session, int(a["type_id"]), a["state"])
        session = result.session
    return session


def save_session(session: Session, path: str) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(session_to_dict(session), fh, indent=2)
        fh.write("\n")


def load_session(path: str, domain: Domain = DEFAULT_DOMAIN) -> Session:
    with open(path, encoding="utf-8") as fh:
        return session_from_dict(json.load(fh), domain)
