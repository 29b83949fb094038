"""Evaluation tests: comparison grids, the change policy, the frozen expert
grid fixture, hold-out prediction, and adaptive trajectories."""

import numpy as np
import pytest

from dctdiag import fixtures
from dctdiag.bn import posterior
from dctdiag.domain import (
    DEFAULT_DOMAIN,
    DomainError,
    FINE_CLASSES,
    TypeScores,
    build_student_net,
    uniform_priors,
)
from dctdiag.evaluation import (
    DESIRABLE,
    MATCH,
    UNDESIRABLE,
    ComparisonGrid,
    adaptive_trajectory,
    change_kind,
    coarse_change_kind,
    comparison_grid,
    grid_summary,
    grid_to_csv,
    prediction_eval,
    render_grid,
    report_to_text,
    summary_to_text,
)


class TestComparisonGrid:
    def test_counts_pairs(self):
        grid = comparison_grid(["ATE", "ATE", "MIS"], ["ATE", "MIS", "MIS"])
        i, j = FINE_CLASSES.index("ATE"), FINE_CLASSES.index("MIS")
        assert grid.counts[i, i] == 1
        assert grid.counts[i, j] == 1
        assert grid.counts[j, j] == 1
        assert grid.total == 3

    def test_length_mismatch_rejected(self):
        with pytest.raises(ValueError):
            comparison_grid(["ATE"], [])

    def test_unknown_label_rejected(self):
        with pytest.raises(ValueError):
            comparison_grid(["XYZ"], ["ATE"])

    def test_negative_counts_rejected(self):
        with pytest.raises(ValueError):
            ComparisonGrid(("a", "b"), np.array([[1, -1], [0, 0]]))

    def test_csv_round_structure(self):
        grid = comparison_grid(["ATE"], ["MIS"])
        csv_text = grid_to_csv(grid)
        lines = csv_text.strip().splitlines()
        assert lines[0].split(",")[1:] == list(FINE_CLASSES)
        assert len(lines) == 13


class TestChangeKind:
    def test_diagonal_is_match(self):
        for c in FINE_CLASSES:
            assert change_kind(c, c) == MATCH

    def test_dotted_to_specified_same_group_is_desirable(self):
        assert change_kind("AU", "ATE") == DESIRABLE
        assert change_kind("AU", "AMO") == DESIRABLE
        assert change_kind("LU", "LWH") == DESIRABLE
        assert change_kind("LU", "LZE") == DESIRABLE
        assert change_kind("SU", "SDF") == DESIRABLE
        assert change_kind("SU", "SRN") == DESIRABLE

    def test_residual_to_anything_is_desirable(self):
        for c in FINE_CLASSES:
            if c != "UN":
                assert change_kind("UN", c) == DESIRABLE

    def test_specified_to_specified_is_undesirable(self):
        assert change_kind("LRV", "LWH") == UNDESIRABLE
        assert change_kind("ATE", "MIS") == UNDESIRABLE

    def test_cross_group_and_into_residual_are_undesirable(self):
        assert change_kind("SU", "ATE") == UNDESIRABLE
        assert change_kind("AU", "LWH") == UNDESIRABLE
        assert change_kind("LU", "UN") == UNDESIRABLE
        assert change_kind("SDF", "SU") == UNDESIRABLE

    def test_overrides(self):
        assert change_kind("ATE", "MIS", overrides={("ATE", "MIS"): DESIRABLE}) == DESIRABLE
        with pytest.raises(ValueError):
            change_kind("ATE", "MIS", overrides={("ATE", "MIS"): "nope"})

    def test_unknown_class_rejected(self):
        with pytest.raises(DomainError):
            change_kind("ATE", "XYZ")


class TestCoarseChangeKind:
    def test_policy(self):
        assert coarse_change_kind("A", "A") == MATCH
        assert coarse_change_kind("UN", "A") == DESIRABLE
        assert coarse_change_kind("A", "UN") == UNDESIRABLE
        assert coarse_change_kind("L", "S") == UNDESIRABLE
        with pytest.raises(DomainError):
            coarse_change_kind("A", "ATE")


class TestExpertGridFixture:
    def grid(self):
        return ComparisonGrid(fixtures.TABLE2_LABELS, fixtures.TABLE2_COUNTS)

    def test_total(self):
        assert self.grid().total == fixtures.TABLE2_TOTAL == 2437

    def test_summary_matches_published_percentages(self):
        summary = grid_summary(self.grid())
        assert summary.rounded() == (82.93, 15.63, 1.44)

    def test_tallies(self):
        grid = self.grid()
        tally = {MATCH: 0, DESIRABLE: 0, UNDESIRABLE: 0}
        for i, r in enumerate(grid.labels):
            for j, m in enumerate(grid.labels):
                tally[change_kind(r, m)] += int(grid.counts[i, j])
        assert tally == {MATCH: 2021, DESIRABLE: 381, UNDESIRABLE: 35}

    def test_priors_preset(self):
        priors = fixtures.table2_priors()
        assert sum(priors.values()) == pytest.approx(1.0, abs=1e-12)
        assert priors["ATE"] == pytest.approx(1050 / 2437)
        assert priors["LWH"] == pytest.approx(386 / 2437)
        assert priors["LRV"] == pytest.approx(10 / 2437)

    def test_render_marks_cells(self):
        text = render_grid(self.grid())
        assert "63+" in text  # dotted-to-specified desirable cell
        assert "10!" in text  # specified-to-specified undesirable cell


class TestGridSummary:
    def test_empty_grid_rejected(self):
        grid = ComparisonGrid(FINE_CLASSES, np.zeros((12, 12), dtype=int))
        with pytest.raises(ValueError):
            grid_summary(grid)

    def test_percentages_sum_to_100(self):
        grid = comparison_grid(
            ["ATE", "UN", "AU", "LRV"], ["ATE", "MIS", "ATE", "LWH"]
        )
        s = grid_summary(grid)
        assert s.match_pct + s.desirable_pct + s.undesirable_pct == pytest.approx(100.0)
        assert s.rounded() == (25.0, 50.0, 25.0)

    def test_text_rendering(self):
        s = grid_summary(comparison_grid(["ATE"], ["ATE"]))
        assert "match_pct: 100.00" in summary_to_text(s)


class TestPredictionEval:
    def test_deterministic_model_scores_perfectly(self):
        net = build_student_net("count", 0.0, {"ATE": 1.0})
        data = [TypeScores("s", (5, 5, 4, 4, 3, 3))]
        report = prediction_eval(net, data)
        assert report.avg_accuracy == 1.0
        assert report.avg_prob == pytest.approx(1.0)

    def test_per_type_structure_and_bounds(self):
        net = build_student_net("band", 0.11, uniform_priors())
        data = [
            TypeScores("a", (0, 5, 0, 4, 3, 3)),
            TypeScores("b", (5, 5, 4, 4, 3, 3)),
            TypeScores("c", (2, 2, 2, 2, 1, 1)),
        ]
        report = prediction_eval(net, data)
        assert sorted(report.per_type) == [1, 2, 3, 4, 5, 6]
        for acc, prob in report.per_type.values():
            assert 0.0 <= acc <= 1.0
            assert 0.0 <= prob <= 1.0
        averaged = np.mean([v[0] for v in report.per_type.values()])
        assert report.avg_accuracy == pytest.approx(float(averaged))
        text = report_to_text(report)
        assert "avg_accuracy" in text and "type6" in text

    def test_empty_dataset_rejected(self):
        net = build_student_net("band", 0.11, uniform_priors())
        with pytest.raises(ValueError):
            prediction_eval(net, [])


class TestAdaptiveTrajectory:
    def test_length_matches_rounds(self):
        net = build_student_net("band", 0.11, uniform_priors())
        rounds = [{"type1": "L"}, {"type2": "H"}, {"type3": "L"}]
        traj = adaptive_trajectory(net, rounds)
        assert len(traj) == 3

    def test_matches_batch_posterior(self):
        net = build_student_net("band", 0.11, uniform_priors())
        rounds = [{"type1": "L"}, {"type2": "H"}, {"type3": "L"}]
        traj = adaptive_trajectory(net, rounds)
        merged = {k: v for r in rounds for k, v in r.items()}
        batch = posterior(net, merged, "fineClass")
        assert np.abs(traj[-1].probs - batch.probs).max() < 1e-12

    def test_modal_evidence_converges(self):
        net = build_student_net("band", 0.11, fixtures.table2_priors())
        modal = {"type1": "L", "type2": "H", "type3": "L",
                 "type4": "H", "type5": "H", "type6": "H"}
        traj = adaptive_trajectory(net, [modal] * 10)
        lwh = [p.prob("LWH") for p in traj]
        assert all(a < b for a, b in zip(lwh, lwh[1:]))
        assert lwh[-1] > 0.999
