import math
import os
import pathlib

import numpy as np
import pytest

import bargain

SOURCE_DIR = pathlib.Path(os.environ.get("BARGAIN_SOURCE_DIR", pathlib.Path(__file__).parents[2]))


def unit_box():
    return bargain.StateSpace.box(np.zeros(1), np.ones(1))


def toy_game(x0, transformed=False):
    left = bargain.centered_quadratic(np.array([0.0]))
    if transformed:
        left = bargain.transform_cost(left, "power", 2.0)
    right = bargain.centered_quadratic(np.array([1.0]))
    return bargain.Game([left, right], [1.0, 1.0], unit_box(), np.array([x0]))


def harmonic(alpha0=0.5):
    cfg = bargain.SolverConfig()
    cfg.step_kind = bargain.StepKind.HARMONIC
    cfg.alpha0 = alpha0
    return cfg


class ShiftedSquare(bargain.CostModel):
    def __init__(self, center):
        super().__init__()
        self.center = np.asarray(center, dtype=float)

    def dimension(self):
        return self.center.size

    def evaluate(self, x):
        return float(np.sum((x - self.center) ** 2))

    def gradient(self, x):
        return 2.0 * (x - self.center)


@pytest.mark.parametrize("x0", [0.1, 0.35, 0.9])
def test_toy_methods(x0):
    g = toy_game(x0)
    dibs = bargain.solve(g, bargain.Method.DIBS, np.array([x0]), harmonic())
    assert abs(dibs.final_state[0] - 0.5) <= 1e-6
    naive = bargain.solve(g, bargain.Method.NAIVE, np.array([x0]), harmonic())
    assert abs(naive.final_state[0] - x0) <= 1e-9
    ksbs = bargain.solve_ksbs(g, np.array([x0]))
    assert abs(ksbs.final_state[0] - 0.5) <= 1e-4


def test_transform_moves_ksbs_but_not_dibs():
    g = toy_game(0.2, transformed=True)
    dibs = bargain.solve(g, bargain.Method.DIBS, np.array([0.2]), harmonic())
    ksbs = bargain.solve_ksbs(g, np.array([0.2]))
    assert abs(dibs.final_state[0] - 0.5) <= 1e-6
    assert abs(ksbs.final_state[0] - (math.sqrt(5) - 1) / 2) <= 1e-4


def test_python_cost_model_drives_dibs():
    models = [ShiftedSquare([1.0, 1.0]), ShiftedSquare([-1.0, 1.0])]
    x0 = np.array([0.0, -2.0])
    g = bargain.Game(models, [100.0, 100.0], bargain.StateSpace.unbounded(2), x0)
    assert np.allclose(g.preferred_states[0], [1.0, 1.0], atol=1e-6)
    cfg = harmonic(1.0)
    cfg.trajectory_stride = 1
    r = bargain.solve(g, bargain.Method.DIBS, x0, cfg)
    residual, weights = bargain.stationarity_residual(g, r.final_state)
    assert residual <= 1e-4
    assert sum(weights) == pytest.approx(1.0)
    assert bargain.check_bounded(r.trajectory, g.preferred_states, x0)


def test_direction_oracles():
    sq = bargain.centered_quadratic(np.zeros(5))
    x = np.eye(5)[0]
    exact = bargain.exact_direction(sq, x, np.zeros(5))
    assert np.allclose(exact, -x)
    est = bargain.estimate_direction(sq, x, queries=1000, seed=7)
    assert float(est @ exact) >= 0.9


def test_simplex_projection_and_gradients():
    p = bargain.project_simplex(np.array([0.5, 0.5, 1.0]))
    assert p.sum() == pytest.approx(1.0)
    assert (p >= 0).all()
    m = bargain.formation_cost(4, 1)
    x = bargain.formation_initial_state(4) + 0.1
    fd = bargain.finite_diff_gradient(m, x)
    assert np.allclose(m.gradient(x), fd, rtol=1e-5, atol=1e-8)


def test_run_toy_experiment_is_deterministic():
    cfg = {"experiment": "toy", "seed": 5, "n_scenarios": 2, "methods": ["dibs", "naive"]}
    first = bargain.run_experiment(cfg)
    assert first == bargain.run_experiment(cfg)
    assert len(first) == 2 * 2 * 2  # scenarios x methods x {plain, transformed}
    for rec in first:
        assert rec["error"] is None
        if rec["method"] == "dibs":
            assert abs(rec["final_state"][0] - 0.5) <= 1e-6


def test_shipped_config_parses():
    text = (SOURCE_DIR / "configs" / "toy.json").read_text()
    records = bargain.run_experiment(text)
    assert len(records) == 10 * 4 * 2


def test_errors_are_typed():
    with pytest.raises(bargain.ConfigError, match="unknown key 'bogus'"):
        bargain.run_experiment({"experiment": "toy", "bogus": 1})
    with pytest.raises(bargain.BargainError):
        bargain.relative_error(np.zeros(2), np.ones(2), np.zeros(2))
