"""Acceptance gate: one test per headline criterion, each printing a single
PASS/FAIL line (run with -s to see them live).

The parameter-recovery L1 criterion is encoded faithfully and marked as an
expected failure: per-row L1 error at its stated sample size is dominated by
binomial sampling noise on the 50/50 rows of partially-specified classes and
cannot meet a 0.05 budget with 12-way class sampling of 5000 students.
"""

import math

import numpy as np
import pytest
from fastapi.testclient import TestClient

from dctdiag import bn, fixtures
from dctdiag.adaptive import new_session, next_item, session_step
from dctdiag.bn import BayesNet, posterior, posterior_enumeration
from dctdiag.domain import (
    FINE_CLASSES,
    TypeScores,
    band_distribution,
    build_student_net,
    count_distribution,
    expert_classify,
    scores_to_evidence,
    uniform_priors,
)
from dctdiag.evaluation import ComparisonGrid, adaptive_trajectory, grid_summary
from dctdiag.learning import (
    dataset_from_type_scores,
    greedy_structure_search,
    learn_cpts,
    select_classes,
)
from dctdiag.pipeline import SplitPlan, aggregate, make_splits, simulate_cohort
from dctdiag.service import create_app

from test_bn import random_net


def check(name):
    """Decorator printing one PASS/FAIL line per criterion."""

    def wrap(fn):
        def run(self):
            try:
                fn(self)
            except BaseException:
                print(f"FAIL {name}")
                raise
            print(f"PASS {name}")

        run.__name__ = fn.__name__
        return run

    return wrap


def without_coarse(net):
    keep = tuple(v for v in net.variables if v.name != "coarseClass")
    return BayesNet(
        keep,
        {v.name: net.parents[v.name] for v in keep},
        {v.name: net.cpts[v.name] for v in keep},
        meta=dict(net.meta),
    )


class TestAcceptance:
    @check("cpt-worked-example")
    def test_cpt_worked_example(self):
        counts = count_distribution("LWH", 2, 0.1)
        assert tuple(round(p, 2) for p in counts) == (0.59, 0.33, 0.07, 0.01, 0.0, 0.0)
        bands = band_distribution("LWH", 2, 0.1)
        assert tuple(round(p, 2) for p in bands) == (0.92, 0.08, 0.0)

    @check("pcm-calibration")
    def test_pcm_calibration(self):
        for pcm, expected in ((0.03, 0.99), (0.11, 0.90), (0.22, 0.70)):
            p_high = band_distribution("ATE", 1, pcm)[0]
            assert abs(p_high - expected) <= 0.005, (pcm, p_high)

    @check("expert-rule-fixtures")
    def test_expert_rule_fixtures(self):
        cases = {(4, 5, 0, 4, 3, 3): "AU", (4, 4, 3, 3, 2, 2): "ATE",
                 (0, 5, 0, 4, 3, 3): "LWH"}
        for counts, expected in cases.items():
            assert expert_classify(TypeScores("x", counts)) == expected
        # Totality: every possible score vector classifies to exactly one class.
        from itertools import product

        seen_tier1 = {}
        for counts in product(range(6), range(6), range(5), range(5), range(4), range(4)):
            cls = expert_classify(TypeScores("x", counts))
            assert cls in FINE_CLASSES
        # Tier-1 non-overlap: fully-specified patterns are pairwise distinct.
        from dctdiag.domain import DEFAULT_DOMAIN

        full = [p for p in DEFAULT_DOMAIN.patterns.values() if "." not in p]
        assert len(full) == len(set(full))

    @check("expert-grid-arithmetic")
    def test_expert_grid_arithmetic(self):
        grid = ComparisonGrid(fixtures.TABLE2_LABELS, fixtures.TABLE2_COUNTS)
        assert grid.total == 2437
        summary = grid_summary(grid)
        assert abs(summary.match_pct - 82.93) <= 0.01
        assert abs(summary.desirable_pct - 15.63) <= 0.01
        assert abs(summary.undesirable_pct - 1.44) <= 0.01

    @check("inference-oracle")
    def test_inference_oracle(self):
        rng = np.random.default_rng(2024)
        checked = 0
        while checked < 200:
            net = random_net(rng, max_nodes=8, max_states=6)
            names = list(net.names)
            n_ev = int(rng.integers(0, len(names)))
            ev = rng.choice(names, size=n_ev, replace=False).tolist()
            evidence = {
                v: net.variable(v).states[int(rng.integers(len(net.variable(v).states)))]
                for v in ev
            }
            query = str(rng.choice([n for n in names if n not in evidence]))
            try:
                expected = posterior_enumeration(net, evidence, query)
            except bn.InconsistentEvidenceError:
                continue
            got = posterior(net, evidence, query)
            assert np.abs(got.probs - expected.probs).max() < 1e-9
            checked += 1
        # Student-net posteriors equal the naive-Bayes closed form.
        for scheme in ("band", "count"):
            net = build_student_net(scheme, 0.11, fixtures.table2_priors())
            for seed in range(10):
                r = np.random.default_rng(seed)
                counts = tuple(int(r.integers(0, n + 1)) for n in (5, 5, 4, 4, 3, 3))
                evidence = scores_to_evidence(TypeScores("x", counts), scheme)
                weights = net.cpts["fineClass"][0].copy()
                for node, state in evidence.items():
                    col = net.variable(node).states.index(state)
                    weights = weights * net.cpts[node][:, col]
                closed = weights / weights.sum()
                got = posterior(net, evidence, "fineClass").probs
                assert np.abs(got - closed).max() < 1e-9

    @pytest.mark.xfail(
        strict=True,
        reason="per-row L1 at N=5000 is bounded below by sampling noise on "
        "50/50 rows (~400 samples/class gives expected L1 near 0.05 on a "
        "single Bernoulli row before any multi-state or multi-row union)",
    )
    @check("parameter-recovery-l1")
    def test_parameter_recovery_l1(self):
        truth = without_coarse(build_student_net("band", 0.11, fixtures.table2_priors()))
        scores = [aggregate(r) for r in simulate_cohort(fixtures.table2_priors(), 0.11, 5000, seed=19)]
        ds = dataset_from_type_scores(scores, "band")
        fitted = learn_cpts(truth, ds, alpha=1.0)
        for name in truth.names:
            diff = np.abs(fitted.cpts[name] - truth.cpts[name]).sum(axis=1)
            assert diff.max() < 0.05, name

    @check("parameter-recovery-map-agreement")
    def test_parameter_recovery_map_agreement(self):
        priors = fixtures.table2_priors()
        truth = build_student_net("band", 0.11, priors)
        scores = [aggregate(r) for r in simulate_cohort(priors, 0.11, 5000, seed=19)]
        [(train, test)] = make_splits(scores, SplitPlan(seed=3, k=1, test_fraction=0.2))
        structure = without_coarse(truth)
        fitted = learn_cpts(structure, dataset_from_type_scores(train, "band"), alpha=1.0)
        agree = 0
        for s in test:
            evidence = scores_to_evidence(s, "band")
            map_true = bn.map_state(posterior(truth, evidence, "fineClass"))
            map_fit = bn.map_state(posterior(fitted, evidence, "fineClass"))
            agree += map_true == map_fit
        assert agree / len(test) >= 0.99, agree / len(test)

    @check("clustering-recovery")
    def test_clustering_recovery(self):
        priors = {c: 0.25 for c in ("ATE", "MIS", "LWH", "SDF")}
        cohort = simulate_cohort(priors, 0.02, 2000, seed=7)
        ds = dataset_from_type_scores(
            [aggregate(r) for r in cohort], "band", include_class=False
        )
        result = select_classes(ds, range(2, 9), seed=1, restarts=3, max_iters=100)
        assert result.best_k == 4
        labels = [r.label for r in cohort]
        hard = result.best.hard_assignments()
        agree = 0
        for cluster in range(4):
            members = [l for l, h in zip(labels, hard) if h == cluster]
            if members:
                agree += max(members.count(c) for c in priors)
        assert agree / len(labels) >= 0.95

    @check("structure-recovery")
    def test_structure_recovery(self):
        scores = [aggregate(r) for r in simulate_cohort(uniform_priors(), 0.11, 5000, seed=11)]
        ds = dataset_from_type_scores(scores, "band")
        expected = tuple(sorted(("fineClass", f"type{t}") for t in range(1, 7)))
        constrained = greedy_structure_search(ds, constraint_root="fineClass", seed=0, restarts=2)
        assert constrained.arcs == expected
        unconstrained = greedy_structure_search(ds, constraint_root=None, seed=0, restarts=2)
        assert unconstrained.arcs == expected

    @check("adaptive-convergence")
    def test_adaptive_convergence(self):
        priors = fixtures.table2_priors()
        net = build_student_net("band", 0.11, priors)
        modal = {"type1": "L", "type2": "H", "type3": "L",
                 "type4": "H", "type5": "H", "type6": "H"}
        trajectory = adaptive_trajectory(net, [modal] * 10)
        assert trajectory[-1].prob("LWH") >= 0.999
        # Independent repeated-Bayes oracle on raw band likelihoods.
        belief = np.array([priors[c] for c in FINE_CLASSES])
        state_index = {"H": 0, "M": 1, "L": 2}
        for step in range(10):
            for i, c in enumerate(FINE_CLASSES):
                like = 1.0
                for t in range(1, 7):
                    dist = band_distribution(c, t, 0.11)
                    col = state_index[modal[f"type{t}"]]
                    # 3-item types have no Medium band: (H, L) order.
                    if t in (5, 6):
                        col = 0 if modal[f"type{t}"] == "H" else 1
                    like *= dist[col]
                belief[i] *= like
            belief = belief / belief.sum()
            assert np.abs(trajectory[step].probs - belief).max() < 1e-9

    @check("item-selection")
    def test_item_selection(self):
        def oracle_pick(session):
            def h(p):
                return -sum(x * math.log(x) for x in p if x > 0)

            coverage = session.coverage()
            candidates = [t for t in range(1, 7) if coverage[t] == 0] or list(range(1, 7))
            gains = {}
            for t in candidates:
                node = f"type{t}"
                h0 = h(session.fine_posterior().probs)
                marginal = posterior(session.net, {}, node)
                expected = sum(
                    p * h(posterior(session.net, {node: s}, "fineClass").probs)
                    for s, p in zip(marginal.states, marginal.probs)
                    if p > 0
                )
                gains[t] = max(h0 - expected, 0.0)
            best = max(gains.values())
            return min(t for t in candidates if gains[t] >= best - 1e-12)

        rng = np.random.default_rng(99)
        states = {"band": {5: ("H", "L"), 6: ("H", "L")}}
        for trial in range(50):
            raw = rng.dirichlet(np.ones(12))
            priors = {c: float(p) for c, p in zip(FINE_CLASSES, raw)}
            session = new_session(tactic="max_gain", priors=priors)
            for _ in range(int(rng.integers(0, 8))):
                t = int(rng.integers(1, 7))
                options = ("H", "L") if t in (5, 6) else ("H", "M", "L")
                session = session_step(session, t, str(rng.choice(options))).session
            assert next_item(session) == oracle_pick(session), trial
        # EIG is exactly zero at a point-mass posterior.
        from dctdiag.adaptive import expected_info_gain

        certain = new_session(priors={"ATE": 1.0})
        for t in range(1, 7):
            assert expected_info_gain(certain.net, t) == 0.0

    @check("service-contract")
    def test_service_contract(self):
        client = TestClient(create_app())
        created = client.post(
            "/sessions",
            json={"tactic": "max_gain", "scheme": "band", "pcm": 0.11, "priors": "table2"},
        )
        assert created.status_code == 201
        sid = created.json()["session_id"]
        assert client.get(f"/sessions/{sid}").status_code == 200
        assert client.get(f"/sessions/{sid}/next-item").status_code == 200
        answered = client.post(
            f"/sessions/{sid}/answer", json={"type_id": 1, "state": "L"}
        )
        assert answered.status_code == 200
        wire = {e["state"]: e["probability"] for e in answered.json()["fine_posterior"]}
        reference = session_step(
            new_session(tactic="max_gain", scheme="band", pcm=0.11, priors=fixtures.table2_priors()),
            1,
            "L",
        ).session.fine_posterior()
        for state, prob in zip(reference.states, reference.probs):
            assert abs(wire[state] - prob) < 1e-6
        preview = client.post(
            f"/sessions/{sid}/answer", json={"type_id": 2, "state": "H", "what_if": True}
        )
        assert preview.status_code == 200
        assert len(client.get(f"/sessions/{sid}").json()["history"]) == 1
        assert client.post(
            "/sessions", json={"tactic": "bogus"}
        ).status_code == 400
        assert client.get("/sessions/nope").status_code == 404
        locked = client.post(
            "/sessions", json={"pcm": 0.0, "priors": {"ATE": 1.0}}
        ).json()["session_id"]
        assert client.post(
            f"/sessions/{locked}/answer", json={"type_id": 1, "state": "L"}
        ).status_code == 409
        assert client.delete(f"/sessions/{sid}").status_code == 204
        assert client.get(f"/sessions/{sid}").status_code == 404
