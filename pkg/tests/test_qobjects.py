import numpy as np
import pytest

from boundgame import qobjects as qo

SQ3 = np.sqrt(3.0)


class TestWeyl:
    def test_order_d(self):
        x, z = qo.weyl_operators(3)
        assert np.allclose(np.linalg.matrix_power(x, 3), np.eye(3))
        assert np.allclose(np.linalg.matrix_power(z, 3), np.eye(3))

    def test_commutation_phase(self):
        x, z = qo.weyl_operators(3)
        omega = np.exp(2j * np.pi / 3)
        assert np.allclose(z @ x, omega * x @ z, atol=1e-14)

    def test_wraparound(self):
        x, _ = qo.weyl_operators(3)
        v2 = np.zeros(3)
        v2[2] = 1.0
        out = x @ v2
        assert abs(out[0] - 1.0) < 1e-15


class TestEncodings:
    def test_identity_label(self):
        fam = qo.encoding_unitaries(3)
        assert np.allclose(fam.member(0, 0), np.eye(3))

    def test_single_generator(self):
        fam = qo.encoding_unitaries(3)
        x, _ = qo.weyl_operators(3)
        assert np.allclose(fam.member(1, 0), x)

    @pytest.mark.parametrize("d", [3, 5])
    def test_trace_orthogonality(self, d):
        fam = qo.encoding_unitaries(d)
        us = fam.unitaries
        for i, u in enumerate(us):
            for j, v in enumerate(us):
                ol = abs(np.trace(u.conj().T @ v))
                assert abs(ol - (d if i == j else 0.0)) < 1e-10


class TestMub:
    def test_computational_branch(self):
        v = qo.mub_vector(3, 3, 1)
        expect = np.zeros(3)
        expect[1] = 1.0
        assert np.allclose(v, expect)

    @pytest.mark.parametrize("d", [3, 5, 7])
    def test_unbiasedness(self, d):
        bases = [[qo.mub_vector(d, j, l) for l in range(d)] for j in range(d + 1)]
        for j in range(d + 1):
            gram = np.array([[np.vdot(a, b) for b in bases[j]] for a in bases[j]])
            assert np.max(np.abs(gram - np.eye(d))) < 1e-12
            for jp in range(j + 1, d + 1):
                for a in bases[j]:
                    for b in bases[jp]:
                        assert abs(abs(np.vdot(a, b)) ** 2 - 1 / d) < 1e-12

    def test_range_checks(self):
        with pytest.raises(ValueError):
            qo.mub_vector(3, 4, 0)
        with pytest.raises(ValueError):
            qo.mub_vector(3, 0, 3)
        with pytest.raises(ValueError):
            qo.mub_vector(4, 0, 0)


class TestBoundEntangledState:
    def test_unit_trace(self):
        rho = qo.bound_entangled_state()
        assert abs(np.trace(rho.matrix).real - 1.0) < 1e-14

    def test_nonzero_spectrum(self):
        rho = qo.bound_entangled_state()
        got = np.sort(np.linalg.eigvalsh(rho.matrix))
        expect = np.sort([0.0, 0.0, (SQ3 - 1) / 3] + [2 / 9] * 3 + [(2 - SQ3) / 9] * 3)
        assert np.max(np.abs(got - expect)) < 1e-10

    def test_partial_transpose_nonnegative(self):
        from boundgame import linalg

        rho = qo.bound_entangled_state()
        pt = linalg.partial_transpose(rho.matrix, 3, 3, "A")
        got = np.sort(np.linalg.eigvalsh(pt))
        expect = np.sort([0.0] * 3 + [(4 - SQ3) / 9] * 3 + [(SQ3 - 1) / 9] * 3)
        assert np.max(np.abs(got - expect)) < 1e-10
        assert got[0] > -1e-12


class TestIsotropicMix:
    def test_endpoints(self):
        rho = qo.bound_entangled_state()
        assert np.allclose(qo.isotropic_mix(rho, 0.0).matrix, rho.matrix)
        assert np.allclose(qo.isotropic_mix(rho, 1.0).matrix, np.eye(9) / 9)

    def test_midpoint_game_value(self):
        from boundgame.game import GameSpec, QuantumStrategy, paper_strategy_d3, score_quantum

        strat = paper_strategy_d3()
        mixed = qo.isotropic_mix(strat.state, 0.5)
        val = score_quantum(GameSpec(3), QuantumStrategy(mixed, strat.alice, strat.bob, strat.measurements))
        expect = (3 + 2 * SQ3 - (2 * SQ3 - 1) * 0.5) / 12
        assert abs(val - expect) < 1e-12

    def test_range_check(self):
        with pytest.raises(ValueError):
            qo.isotropic_mix(qo.bound_entangled_state(), 1.5)


class TestBellBasis:
    def test_orthonormal(self):
        kets = qo.bell_basis(3)
        basis = np.stack(kets, axis=1)
        gram = basis.conj().T @ basis
        assert np.max(np.abs(gram - np.eye(9))) < 1e-12

    def test_maximally_entangled_marginals(self):
        kets = qo.bell_basis(3)
        for ket in kets:
            proj = np.outer(ket, ket.conj()).reshape(3, 3, 3, 3)
            red_a = np.trace(proj, axis1=1, axis2=3)
            red_b = np.trace(proj, axis1=0, axis2=2)
            assert np.max(np.abs(red_a - np.eye(3) / 3)) < 1e-12
            assert np.max(np.abs(red_b - np.eye(3) / 3)) < 1e-12

    def test_bound_entangled_state_is_bell_diagonal(self):
        rho = qo.bound_entangled_state()
        dec = qo.bell_decompose(rho)
        weights = np.sort(dec.weights)
        eigs = np.sort(np.linalg.eigvalsh(rho.matrix))
        assert np.max(np.abs(weights - eigs)) < 1e-10
        basis = np.stack(dec.kets, axis=1)
        g = basis.conj().T @ rho.matrix @ basis
        off = g - np.diag(np.diag(g))
        assert np.max(np.abs(off)) < 1e-10

    def test_non_bell_diagonal_rejected(self):
        rng = np.random.default_rng(11)
        g = rng.standard_normal((9, 9)) + 1j * rng.standard_normal((9, 9))
        m = g @ g.conj().T
        m /= np.trace(m).real
        with pytest.raises(ValueError):
            qo.bell_decompose(qo.DensityMatrix(3, 3, m))


class TestPaperMeasurements:
    def test_completeness(self):
        for povm in qo.paper_measurements_d3():
            total = sum(povm.effects)
            assert np.max(np.abs(total - np.eye(9))) < 1e-12

    def test_projectivity(self):
        for povm in qo.paper_measurements_d3():
            for i, a in enumerate(povm.effects):
                assert abs(np.trace(a).real - 3.0) < 1e-12  # rank-3 products
                for j, b in enumerate(povm.effects):
                    expect = a if i == j else np.zeros_like(a)
                    assert np.max(np.abs(a @ b - expect)) < 1e-12

    def test_game_value(self):
        from boundgame.game import GameSpec, paper_strategy_d3, score_quantum

        val = score_quantum(GameSpec(3), paper_strategy_d3())
        assert abs(val - (0.25 + 1 / (2 * SQ3))) < 1e-12


class TestValidation:
    def test_density_matrix_rejects_bad_trace(self):
        with pytest.raises(ValueError):
            qo.DensityMatrix(3, 3, np.eye(9))

    def test_povm_rejects_incomplete(self):
        e = np.eye(9) / 4
        with pytest.raises(ValueError):
            qo.Povm(0, (e, e, e))
