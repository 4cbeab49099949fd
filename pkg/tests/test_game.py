import numpy as np
import pytest

from boundgame import game, qobjects as qo

SQ3 = np.sqrt(3.0)


class TestWinningAnswer:
    def test_formula_cases(self):
        assert game.winning_answer(3, (1, 2), (2, 1), 0) == 0
        assert game.winning_answer(3, (1, 2), (2, 1), 3) == 2
        assert game.winning_answer(5, (2, 0), (0, 0), 1) == 1

    def test_out_of_range(self):
        with pytest.raises(ValueError):
            game.winning_answer(3, (3, 0), (0, 0), 0)
        with pytest.raises(ValueError):
            game.winning_answer(3, (0, 0), (0, 0), 4)

    def test_table_matches_scalar(self):
        d = 5
        w = game.winning_table(d)
        rng = np.random.default_rng(0)
        for _ in range(50):
            x0, x1, y0, y1 = rng.integers(0, d, size=4)
            z = int(rng.integers(0, d + 1))
            assert w[z, x0 * d + x1, y0 * d + y1] == game.winning_answer(
                d, (int(x0), int(x1)), (int(y0), int(y1)), z
            )


class TestScoreQuantum:
    def test_paper_value(self):
        val = game.score_quantum(game.GameSpec(3), game.paper_strategy_d3())
        assert abs(val - (0.25 + 1 / (2 * SQ3))) < 1e-9

    def test_maximally_mixed_scores_third(self):
        strat = game.paper_strategy_d3()
        mixed = qo.DensityMatrix(3, 3, np.eye(9) / 9)
        val = game.score_quantum(
            game.GameSpec(3), game.QuantumStrategy(mixed, strat.alice, strat.bob, strat.measurements)
        )
        assert abs(val - 1 / 3) < 1e-12

    def test_per_bell_state_multiset(self):
        strat = game.paper_strategy_d3()
        dec = qo.bell_decompose(strat.state)
        spec = game.GameSpec(3)
        scores = []
        for ket in dec.kets:
            st = qo.DensityMatrix(3, 3, np.outer(ket, ket.conj()))
            scores.append(
                game.score_quantum(spec, game.QuantumStrategy(st, strat.alice, strat.bob, strat.measurements))
            )
        got = np.sort(scores)
        expect = np.sort([0, 0, 0.25, 0.25, 0.25, 0.5, 0.5, 0.5, 0.75])
        assert np.max(np.abs(got - expect)) < 1e-9

    def test_bell_decomposition_identity(self):
        strat = game.paper_strategy_d3()
        dec = qo.bell_decompose(strat.state)
        spec = game.GameSpec(3)
        total = 0.0
        for w, ket in zip(dec.weights, dec.kets):
            st = qo.DensityMatrix(3, 3, np.outer(ket, ket.conj()))
            total += w * game.score_quantum(
                spec, game.QuantumStrategy(st, strat.alice, strat.bob, strat.measurements)
            )
        assert abs(total - game.score_quantum(spec, strat)) < 1e-10

    def test_affine_in_state(self):
        strat = game.paper_strategy_d3()
        spec = game.GameSpec(3)
        s0 = game.score_quantum(spec, strat)
        mixed = qo.DensityMatrix(3, 3, np.eye(9) / 9)
        s1 = game.score_quantum(
            spec, game.QuantumStrategy(mixed, strat.alice, strat.bob, strat.measurements)
        )
        for nu in (0.2, 0.5, 0.9):
            st = qo.isotropic_mix(strat.state, nu)
            val = game.score_quantum(
                spec, game.QuantumStrategy(st, strat.alice, strat.bob, strat.measurements)
            )
            assert abs(val - ((1 - nu) * s0 + nu * s1)) < 1e-10

    def test_outcome_distributions_normalized(self):
        rng = np.random.default_rng(3)
        from boundgame.linalg import random_unitaries
        from boundgame.seesaw import random_product_measurements

        d = 3
        meas = random_product_measurements(d, rng)
        g = rng.standard_normal((9, 9)) + 1j * rng.standard_normal((9, 9))
        m = g @ g.conj().T
        m /= np.trace(m).real
        state = qo.DensityMatrix(3, 3, m)
        fam = qo.encoding_unitaries(3)
        encoded = game.encoded_states(state, fam, fam)
        for z in range(4):
            effects = np.stack(meas[z].effects)
            p = np.einsum("kab,cba->kc", encoded, effects).real
            assert np.max(np.abs(p.sum(axis=1) - 1.0)) < 1e-10

    def test_game_operator_agrees_with_score(self):
        strat = game.paper_strategy_d3()
        spec = game.GameSpec(3)
        g = game.game_operator(spec, strat.alice, strat.bob, strat.measurements)
        via_op = float(np.trace(g @ strat.state.matrix).real)
        assert abs(via_op - game.score_quantum(spec, strat)) < 1e-12


class TestScoreClassical:
    @pytest.mark.parametrize("d", [3, 5, 7])
    def test_first_coordinate_strategy(self, d):
        enc = tuple(i // d for i in range(d * d))
        strat = game.ClassicalStrategy(d, enc, enc)
        assert abs(game.score_classical(game.GameSpec(d), strat) - 2 / (d + 1)) < 1e-12

    def test_constant_encodings_match_bruteforce(self):
        spec = game.GameSpec(3)
        strat = game.ClassicalStrategy(3, (0,) * 9, (0,) * 9)
        fast = game.score_classical(spec, strat)
        slow = game.score_classical_bruteforce(spec, strat)
        assert abs(fast - slow) < 1e-15

    def test_random_strategies_match_bruteforce(self):
        rng = np.random.default_rng(5)
        spec = game.GameSpec(3)
        for _ in range(20):
            f = tuple(int(v) for v in rng.integers(0, 3, 9))
            g = tuple(int(v) for v in rng.integers(0, 3, 9))
            strat = game.ClassicalStrategy(3, f, g)
            assert abs(game.score_classical(spec, strat) - game.score_classical_bruteforce(spec, strat)) < 1e-15

    def test_best_response_dominates_explicit_decoders(self):
        rng = np.random.default_rng(6)
        spec = game.GameSpec(3)
        for _ in range(10):
            f = tuple(int(v) for v in rng.integers(0, 3, 9))
            g = tuple(int(v) for v in rng.integers(0, 3, 9))
            best = game.score_classical(spec, game.ClassicalStrategy(3, f, g))
            for _ in range(5):
                dec = rng.integers(0, 3, (3, 3, 4))
                fixed = game.score_classical(spec, game.ClassicalStrategy(3, f, g, dec))
                assert fixed <= best + 1e-12
            realized = game.best_response_decoder(game.ClassicalStrategy(3, f, g))
            via_table = game.score_classical(spec, game.ClassicalStrategy(3, f, g, realized))
            assert abs(via_table - best) < 1e-15


class TestNoiseThreshold:
    def test_paper_threshold(self):
        strat = game.paper_strategy_d3()
        th = game.noise_threshold(game.GameSpec(3), strat, 0.5)
        assert abs(th - (9 - 4 * SQ3) / 11) < 1e-8

    def test_above_threshold_no_violation(self):
        spec = game.GameSpec(3)
        strat = game.paper_strategy_d3()
        th = game.noise_threshold(spec, strat, 0.5)
        mixed = qo.isotropic_mix(strat.state, min(th + 0.01, 1.0))
        val = game.score_quantum(
            spec, game.QuantumStrategy(mixed, strat.alice, strat.bob, strat.measurements)
        )
        assert val < 0.5

    def test_requires_violation(self):
        strat = game.paper_strategy_d3()
        mixed = qo.DensityMatrix(3, 3, np.eye(9) / 9)
        weak = game.QuantumStrategy(mixed, strat.alice, strat.bob, strat.measurements)
        with pytest.raises(ValueError):
            game.noise_threshold(game.GameSpec(3), weak, 0.5)
