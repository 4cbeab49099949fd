import numpy as np
import pytest

from boundgame import game, seesaw
from boundgame.qobjects import DensityMatrix, Povm, bound_entangled_state, paper_measurements_d3
from boundgame.witness import is_ppt

SQ3 = np.sqrt(3.0)
PAPER_VALUE = 0.25 + 1 / (2 * SQ3)


class TestOptimizeState:
    def test_paper_measurements_reach_paper_value(self):
        state, value = seesaw.optimize_state(3, paper_measurements_d3())
        assert value >= PAPER_VALUE - 1e-6
        ok, min_eig = is_ppt(state, tol=1e-7)
        assert ok
        assert min_eig >= -1e-7

    def test_uniform_measurements_give_one_third(self):
        trivial = [Povm(z, tuple(np.eye(9, dtype=complex) / 3 for _ in range(3))) for z in range(4)]
        _, value = seesaw.optimize_state(3, trivial)
        assert abs(value - 1 / 3) < 1e-7


class TestOptimizeMeasurements:
    def test_bound_entangled_state_reaches_paper_value(self):
        povms, value = seesaw.optimize_measurements(3, bound_entangled_state())
        assert value >= PAPER_VALUE - 1e-6
        for povm in povms:
            total = sum(povm.effects)
            assert np.max(np.abs(total - np.eye(9))) < 1e-7

    def test_maximally_mixed_state_gives_one_third(self):
        mixed = DensityMatrix(3, 3, np.eye(9) / 9)
        _, value = seesaw.optimize_measurements(3, mixed)
        assert abs(value - 1 / 3) < 1e-7


class TestSeesaw:
    @pytest.fixture(scope="class")
    def small_run(self):
        return seesaw.seesaw(seesaw.SeesawConfig(d=3, restarts=6, seed=7, max_rounds=60))

    def test_reaches_violation(self, small_run):
        assert small_run.best_value > 0.5

    def test_traces_monotone(self, small_run):
        slack = 10 * small_run.config.solver_tol
        for trace in small_run.value_traces:
            diffs = np.diff(trace)
            if len(diffs):
                assert diffs.min() > -slack

    def test_best_value_reproduced_by_rescoring(self, small_run):
        strat = seesaw.best_strategy(small_run)
        rescored = game.score_quantum(game.GameSpec(3), strat)
        assert abs(rescored - small_run.best_value) < 1e-6

    def test_returned_strategy_feasible(self, small_run):
        ok, min_eig = is_ppt(small_run.state, tol=1e-7)
        assert ok and min_eig >= -1e-7
        for povm in small_run.measurements:
            total = sum(povm.effects)
            assert np.max(np.abs(total - np.eye(9))) < 1e-7
            for e in povm.effects:
                assert np.linalg.eigvalsh((e + e.conj().T) / 2)[0] >= -1e-10

    def test_deterministic_given_seed(self):
        cfg = seesaw.SeesawConfig(d=3, restarts=2, seed=42, max_rounds=25)
        a = seesaw.seesaw(cfg)
        b = seesaw.seesaw(cfg)
        assert a.best_value == b.best_value
        assert a.value_traces == b.value_traces

    def test_parallel_matches_serial(self):
        serial = seesaw.seesaw(seesaw.SeesawConfig(d=3, restarts=2, seed=9, max_rounds=25))
        parallel = seesaw.seesaw(seesaw.SeesawConfig(d=3, restarts=2, seed=9, max_rounds=25, threads=2))
        assert abs(serial.best_value - parallel.best_value) < 1e-12
        assert serial.best_restart == parallel.best_restart

    def test_config_validation(self):
        with pytest.raises(ValueError):
            seesaw.SeesawConfig(d=3, restarts=0)
        with pytest.raises(ValueError):
            seesaw.SeesawConfig(d=3, conv_tol=0.0)


class TestRandomMeasurements:
    def test_projective_product_structure(self):
        rng = np.random.default_rng(1)
        povms = seesaw.random_product_measurements(3, rng)
        assert len(povms) == 4
        for povm in povms:
            total = sum(povm.effects)
            assert np.max(np.abs(total - np.eye(9))) < 1e-12
            for e in povm.effects:
                assert np.max(np.abs(e @ e - e)) < 1e-12
