"""Decimal-comparison misconception domain.

Fixed vocabulary of 12 fine diagnosis classes and 6 test item types, the
expert expectation grid over {H, L, .}, banding of raw correct counts, the
expert rule classifier, and construction of the student Bayesian network
from the expectation grid via a binomial careless-error model.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np
import yaml

from .bn import BayesNet, Variable

FINE_CLASSES: tuple[str, ...] = (
    "ATE", "AMO", "MIS", "AU", "LWH", "LZE", "LRV", "LU", "SDF", "SRN", "SU", "UN",
)
COARSE_CLASSES: tuple[str, ...] = ("L", "S", "A", "UN")

EXPECT_HIGH = "H"
EXPECT_LOW = "L"
EXPECT_UNKNOWN = "."
EXPECTATIONS = (EXPECT_HIGH, EXPECT_LOW, EXPECT_UNKNOWN)

BAND_HIGH = "H"
BAND_MEDIUM = "M"
BAND_LOW = "L"
BANDS = (BAND_HIGH, BAND_MEDIUM, BAND_LOW)

SCHEME_COUNT = "count"
SCHEME_BAND = "band"
SCHEMES = (SCHEME_COUNT, SCHEME_BAND)

# Per-item careless-mistake probability presets.
PCM_PRESETS: Mapping[str, float] = {"low": 0.03, "mid": 0.11, "high": 0.22}

DEFAULT_ITEM_COUNTS: tuple[int, ...] = (5, 5, 4, 4, 3, 3)

# Expert expectation pattern per class, one character per item type 1..6.
_DEFAULT_PATTERNS: dict[str, str] = {
    "ATE": "HHHHHH",
    "AMO": "HHHLHH",
    "MIS": "LLLLLL",
    "AU":  "HH....",
    "LWH": "LHLHHH",
    "LZE": "LHHHHH",
    "LRV": "LHLHHL",
    "LU":  "LH....",
    "SDF": "HLHLHH",
    "SRN": "HLHLLL",
    "SU":  "HL....",
    "UN":  "......",
}

_DEFAULT_COARSE_MAP: dict[str, str] = {
    "LWH": "L", "LZE": "L", "LRV": "L", "LU": "L",
    "SDF": "S", "SRN": "S", "SU": "S",
    "ATE": "A", "AMO": "A", "MIS": "A", "AU": "A",
    "UN": "UN",
}

CLASS_NODE = "fineClass"
COARSE_NODE = "coarseClass"


def type_node(type_id: int) -> str:
    return f"type{type_id}"


class DomainError(ValueError):
    """Invalid domain configuration or out-of-range domain input."""


@dataclass(frozen=True)
class Domain:
    """Configurable vocabulary: classes, per-type item counts, expectation
    patterns, and the fine-to-coarse grouping.

    The compiled-in default reproduces the expert table for the decimal
    domain; alternative domains load from YAML via :meth:`from_yaml`.
    """

    fine_classes: tuple[str, ...] = FINE_CLASSES
    item_counts: tuple[int, ...] = DEFAULT_ITEM_COUNTS
    patterns: Mapping[str, str] = field(default_factory=lambda: dict(_DEFAULT_PATTERNS))
    coarse_map: Mapping[str, str] = field(default_factory=lambda: dict(_DEFAULT_COARSE_MAP))
    coarse_classes: tuple[str, ...] = COARSE_CLASSES

    def __post_init__(self) -> None:
        if len(set(self.fine_classes)) != len(self.fine_classes):
            raise DomainError("duplicate fine class names")
        if any(n < 1 for n in self.item_counts):
            raise DomainError("item counts must be >= 1")
        for cls in self.fine_classes:
            pat = self.patterns.get(cls)
            if pat is None:
                raise DomainError(f"missing expectation pattern for {cls}")
            if len(pat) != self.n_types:
                raise DomainError(f"pattern for {cls} must have {self.n_types} entries")
            if any(ch not in EXPECTATIONS for ch in pat):
                raise DomainError(f"pattern for {cls} has entries outside H/L/.")
            if self.coarse_map.get(cls) not in self.coarse_classes:
                raise DomainError(f"missing or unknown coarse group for {cls}")

    @property
    def n_types(self) -> int:
        return len(self.item_counts)

    @property
    def type_ids(self) -> range:
        return range(1, self.n_types + 1)

    def item_count(self, type_id: int) -> int:
        if type_id not in self.type_ids:
            raise DomainError(f"unknown item type {type_id}")
        return self.item_counts[type_id - 1]

    def fully_specified(self) -> tuple[str, ...]:
        """Classes whose pattern has no '.' entries, in canonical order."""
        return tuple(c for c in self.fine_classes if "." not in self.patterns[c])

    def partially_specified(self) -> tuple[str, ...]:
        return tuple(c for c in self.fine_classes if "." in self.patterns[c])

    def to_dict(self) -> dict:
        return {
            "classes": list(self.fine_classes),
            "item_counts": list(self.item_counts),
            "patterns": {c: self.patterns[c] for c in self.fine_classes},
            "coarse_classes": list(self.coarse_classes),
            "coarse_map": {c: self.coarse_map[c] for c in self.fine_classes},
        }

    @classmethod
    def from_dict(cls, doc: Mapping) -> "Domain":
        try:
            return cls(
                fine_classes=tuple(doc["classes"]),
                item_counts=tuple(int(n) for n in doc["item_counts"]),
                patterns=dict(doc["patterns"]),
                coarse_map=dict(doc["coarse_map"]),
                coarse_classes=tuple(doc["coarse_classes"]),
            )
        except KeyError as exc:
            raise DomainError(f"domain config missing key {exc}") from exc

    @classmethod
    def from_yaml(cls, path: str) -> "Domain":
        with open(path, encoding="utf-8") as fh:
            return cls.from_dict(yaml.safe_load(fh))

    def to_yaml(self, path: str) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            yaml.safe_dump(self.to_dict(), fh, sort_keys=False)


DEFAULT_DOMAIN = Domain()


@dataclass(frozen=True)
class TypeScores:
    """A student's per-item-type correct counts."""

    student_id: str
    counts: tuple[int, ...]
    label: str | None = None

    def validate(self, domain: Domain = DEFAULT_DOMAIN) -> None:
        if len(self.counts) != domain.n_types:
            raise DomainError(
                f"{self.student_id}: expected {domain.n_types} counts, got {len(self.counts)}"
            )
        for t, c in zip(domain.type_ids, self.counts):
            if not 0 <= c <= domain.item_count(t):
                raise DomainError(
                    f"{self.student_id}: type {t} count {c} out of range 0..{domain.item_count(t)}"
                )
        if self.label is not None and self.label not in domain.fine_classes:
            raise DomainError(f"{self.student_id}: unknown class label {self.label!r}")


def band_of(score: int, n_items: int) -> str:
    """Band a correct count: Low for 0-1, High for the top two counts,
    Medium for whatever remains (empty for 3-item types)."""
    if n_items < 2:
        raise DomainError("banding needs at least 2 items")
    if not 0 <= score <= n_items:
        raise DomainError(f"score {score} out of range 0..{n_items}")
    if score >= n_items - 1:
        return BAND_HIGH
    if score <= 1:
        return BAND_LOW
    return BAND_MEDIUM


def bands_available(n_items: int) -> tuple[str, ...]:
    """Reachable bands for a type, best first. Medium is unreachable when
    every count is already High or Low (n_items <= 3)."""
    reachable = {band_of(k, n_items) for k in range(n_items + 1)}
    return tuple(b for b in BANDS if b in reachable)


def band_pattern(scores: TypeScores, domain: Domain = DEFAULT_DOMAIN) -> str:
    """Banded rendering of a score vector, e.g. 541233 -> 'HHLMHH'."""
    scores.validate(domain)
    return "".join(
        band_of(c, domain.item_count(t)) for t, c in zip(domain.type_ids, scores.counts)
    )


def expectation_of(cls: str, type_id: int, domain: Domain = DEFAULT_DOMAIN) -> str:
    if cls not in domain.fine_classes:
        raise DomainError(f"unknown class {cls!r}")
    if type_id not in domain.type_ids:
        raise DomainError(f"unknown item type {type_id}")
    return domain.patterns[cls][type_id - 1]


def correct_prob(cls: str, type_id: int, pcm: float, domain: Domain = DEFAULT_DOMAIN) -> float:
    """Per-item probability of a correct answer for a class on a type.

    High expectation: correct unless a careless slip (1-pcm). Low: correct
    only via a careless slip (pcm). Unknown: 50/50.
    """
    if not 0.0 <= pcm <= 1.0:
        raise DomainError(f"pcm {pcm} outside [0, 1]")
    exp = expectation_of(cls, type_id, domain)
    if exp == EXPECT_HIGH:
        return 1.0 - pcm
    if exp == EXPECT_LOW:
        return pcm
    return 0.5


def count_distribution(
    cls: str, type_id: int, pcm: float, domain: Domain = DEFAULT_DOMAIN
) -> np.ndarray:
    """Binomial distribution over correct counts, ordered from all correct
    (k = N) down to none correct (k = 0)."""
    n = domain.item_count(type_id)
    p = correct_prob(cls, type_id, pcm, domain)
    ks = np.arange(n, -1, -1)
    pmf = np.array([math.comb(n, int(k)) * p**int(k) * (1 - p) ** int(n - k) for k in ks])
    return pmf / pmf.sum()


def band_distribution(
    cls: str, type_id: int, pcm: float, domain: Domain = DEFAULT_DOMAIN
) -> np.ndarray:
    """Count distribution accumulated into (High, Medium, Low) masses."""
    n = domain.item_count(type_id)
    counts = count_distribution(cls, type_id, pcm, domain)
    out = np.zeros(3)
    for i, k in enumerate(range(n, -1, -1)):
        out[BANDS.index(band_of(k, n))] += counts[i]
    return out


def coarse_of(fine: str, domain: Domain = DEFAULT_DOMAIN) -> str:
    if fine not in domain.fine_classes:
        raise DomainError(f"unknown class {fine!r}")
    return domain.coarse_map[fine]


def expert_classify(scores: TypeScores, domain: Domain = DEFAULT_DOMAIN) -> str:
    """Expert rule classification of a banded score vector.

    Tier 1: fully specified patterns, tested in canonical order; a pattern
    matches iff every entry equals the student's band exactly (a Medium
    band matches nothing). Tier 2: partially specified patterns, matched on
    their non-'.' entries only; the all-'.' residual class matches anything.
    """
    bands = band_pattern(scores, domain)
    for cls in domain.fully_specified():
        if domain.patterns[cls] == bands:
            return cls
    for cls in domain.partially_specified():
        pat = domain.patterns[cls]
        if all(p == EXPECT_UNKNOWN or p == b for p, b in zip(pat, bands)):
            return cls
    raise DomainError(f"no class matches band pattern {bands!r}")  # pragma: no cover


def type_states(type_id: int, scheme: str, domain: Domain = DEFAULT_DOMAIN) -> tuple[str, ...]:
    """State labels of a type node, best performance first."""
    n = domain.item_count(type_id)
    if scheme == SCHEME_COUNT:
        return tuple(str(k) for k in range(n, -1, -1))
    if scheme == SCHEME_BAND:
        return bands_available(n)
    raise DomainError(f"unknown value scheme {scheme!r}")


def observed_state(count: int, type_id: int, scheme: str, domain: Domain = DEFAULT_DOMAIN) -> str:
    """Node state label for an observed correct count under a scheme."""
    n = domain.item_count(type_id)
    if not 0 <= count <= n:
        raise DomainError(f"type {type_id} count {count} out of range 0..{n}")
    if scheme == SCHEME_COUNT:
        return str(count)
    if scheme == SCHEME_BAND:
        return band_of(count, n)
    raise DomainError(f"unknown value scheme {scheme!r}")


def scores_to_evidence(
    scores: TypeScores,
    scheme: str,
    domain: Domain = DEFAULT_DOMAIN,
    exclude: Sequence[int] = (),
) -> dict[str, str]:
    scores.validate(domain)
    return {
        type_node(t): observed_state(c, t, scheme, domain)
        for t, c in zip(domain.type_ids, scores.counts)
        if t not in exclude
    }


def uniform_priors(domain: Domain = DEFAULT_DOMAIN) -> dict[str, float]:
    return {c: 1.0 / len(domain.fine_classes) for c in domain.fine_classes}


def build_student_net(
    scheme: str,
    pcm: float,
    priors: Mapping[str, float],
    domain: Domain = DEFAULT_DOMAIN,
) -> BayesNet:
    """Build the expert-elicited student network.

    fineClass is the root with the given prior; coarseClass is its
    deterministic child; each type node is a child of fineClass only, with
    binomial (or band-accumulated) careless-error rows.
    """
    if scheme not in SCHEMES:
        raise DomainError(f"unknown value scheme {scheme!r}")
    prior_vec = np.array([float(priors.get(c, 0.0)) for c in domain.fine_classes])
    extra = set(priors) - set(domain.fine_classes)
    if extra:
        raise DomainError(f"priors name unknown classes: {sorted(extra)}")
    if np.any(prior_vec < 0) or abs(prior_vec.sum() - 1.0) > 1e-9:
        raise DomainError("priors must be nonnegative and sum to 1")

    variables = [Variable(CLASS_NODE, domain.fine_classes)]
    parents: dict[str, tuple[str, ...]] = {CLASS_NODE: ()}
    cpts: dict[str, np.ndarray] = {CLASS_NODE: prior_vec.reshape(1, -1)}

    variables.append(Variable(COARSE_NODE, domain.coarse_classes))
    parents[COARSE_NODE] = (CLASS_NODE,)
    coarse_cpt = np.zeros((len(domain.fine_classes), len(domain.coarse_classes)))
    for i, cls in enumerate(domain.fine_classes):
        coarse_cpt[i, domain.coarse_classes.index(coarse_of(cls, domain))] = 1.0
    cpts[COARSE_NODE] = coarse_cpt

    for t in domain.type_ids:
        states = type_states(t, scheme, domain)
        rows = np.zeros((len(domain.fine_classes), len(states)))
        for i, cls in enumerate(domain.fine_classes):
            if scheme == SCHEME_COUNT:
                rows[i] = count_distribution(cls, t, pcm, domain)
            else:
                full = band_distribution(cls, t, pcm, domain)
                rows[i] = [full[BANDS.index(b)] for b in states]
        variables.append(Variable(type_node(t), states))
        parents[type_node(t)] = (CLASS_NODE,)
        cpts[type_node(t)] = rows

    meta = {
        "scheme": scheme,
        "pcm": pcm,
        "class_node": CLASS_NODE,
        "coarse_node": COARSE_NODE,
        "type_nodes": [type_node(t) for t in domain.type_ids],
        "item_counts": list(domain.item_counts),
    }
    return BayesNet(tuple(variables), parents, cpts, meta=meta)
