"""Quantum objects for the d-dimensional communication game.

Weyl-Heisenberg shift/clock unitaries, mutually unbiased bases, the two-qutrit
bound entangled state, isotropic mixing, the generalized Bell basis, and the
explicit d=3 product measurements.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import linalg

_SQ3 = np.sqrt(3.0)


def is_odd_prime(d: int) -> bool:
    if d < 3 or d % 2 == 0:
        return False
    return all(d % k for k in range(3, int(d**0.5) + 1, 2))


@dataclass(frozen=True)
class DensityMatrix:
    """A bipartite state on a dim_a x dim_b product space."""

    dim_a: int
    dim_b: int
    matrix: np.ndarray

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=complex)
        n = self.dim_a * self.dim_b
        if m.shape != (n, n):
            raise ValueError(f"state is {m.shape}, expected ({n}, {n})")
        if not linalg.is_hermitian(m, tol=1e-12):
            raise ValueError("state is not Hermitian")
        if abs(np.trace(m).real - 1.0) > 1e-12:
            raise ValueError("state trace differs from 1")
        if float(np.linalg.eigvalsh(m)[0]) < -1e-10:
            raise ValueError("state has a significantly negative eigenvalue")
        object.__setattr__(self, "matrix", m)

    @property
    def dim(self) -> int:
        return self.dim_a * self.dim_b


@dataclass(frozen=True)
class Povm:
    """One measurement: PSD effects, one per outcome, summing to the identity."""

    z: int
    effects: tuple[np.ndarray, ...]

    def __post_init__(self):
        effs = tuple(np.asarray(e, dtype=complex) for e in self.effects)
        n = effs[0].shape[0]
        total = np.zeros((n, n), dtype=complex)
        for e in effs:
            if e.shape != (n, n):
                raise ValueError("effects have inconsistent shapes")
            if float(np.linalg.eigvalsh(linalg.hermitize(e))[0]) < -1e-10:
                raise ValueError(f"effect for z={self.z} is not PSD")
            total += e
        if float(np.max(np.abs(total - np.eye(n)))) > 1e-10:
            raise ValueError(f"effects for z={self.z} do not sum to the identity")
        object.__setattr__(self, "effects", effs)

    @property
    def dim(self) -> int:
        return self.effects[0].shape[0]


@dataclass(frozen=True)
class UnitaryFamily:
    """Unitaries indexed by pairs (x0, x1) in [d]^2, in row-major label order."""

    d: int
    unitaries: tuple[np.ndarray, ...]

    def __post_init__(self):
        us = tuple(np.asarray(u, dtype=complex) for u in self.unitaries)
        if len(us) != self.d * self.d:
            raise ValueError("expected d^2 unitaries")
        eye = np.eye(us[0].shape[0])
        for u in us:
            if float(np.max(np.abs(u @ u.conj().T - eye))) > 1e-12:
                raise ValueError("family member is not unitary")
        object.__setattr__(self, "unitaries", us)

    def member(self, x0: int, x1: int) -> np.ndarray:
        return self.unitaries[x0 * self.d + x1]


def weyl_operators(d: int) -> tuple[np.ndarray, np.ndarray]:
    """Shift X = sum |k+1><k| and clock Z = sum w^k |k><k|, w = exp(2 pi i/d)."""
    if d < 2:
        raise ValueError("d must be >= 2")
    x = np.zeros((d, d), dtype=complex)
    for k in range(d):
        x[(k + 1) % d, k] = 1.0
    omega = np.exp(2j * np.pi / d)
    z = np.diag(omega ** np.arange(d))
    return x, z


def encoding_unitaries(d: int) -> UnitaryFamily:
    """The d^2 encodings U_(x0,x1) = X^x0 Z^x1."""
    x, z = weyl_operators(d)
    members = []
    for x0 in range(d):
        for x1 in range(d):
            members.append(np.linalg.matrix_power(x, x0) @ np.linalg.matrix_power(z, x1))
    return UnitaryFamily(d, tuple(members))


def mub_vector(d: int, j: int, l: int) -> np.ndarray:
    """Vector l of basis j from the standard d+1 mutually unbiased bases.

    Bases j in [d] use the quadratic-phase construction
    (1/sqrt(d)) sum_k w^(kl + j k^2) |k>, and j = d is the computational
    basis. Requires d an odd prime.
    """
    if not is_odd_prime(d):
        raise ValueError("d must be an odd prime")
    if not (0 <= j <= d):
        raise ValueError(f"basis index j={j} out of range [0, {d}]")
    if not (0 <= l < d):
        raise ValueError(f"outcome index l={l} out of range [0, {d})")
    if j == d:
        v = np.zeros(d, dtype=complex)
        v[l] = 1.0
        return v
    k = np.arange(d)
    omega = np.exp(2j * np.pi / d)
    return omega ** ((k * l + j * k * k) % d) / np.sqrt(d)


def mub_projector(d: int, j: int, l: int) -> np.ndarray:
    v = mub_vector(d, j, l)
    return np.outer(v, v.conj())


def bound_entangled_state() -> DensityMatrix:
    """The explicit two-qutrit bound entangled state (rank 7, PPT)."""
    a1 = (4 - _SQ3) / 27
    a2 = (1 - _SQ3) / 27 - 1j / (9 * _SQ3)
    a3 = (1 + 2 * _SQ3) / 27
    a4 = (5 - 2 * _SQ3) / 54 + 1j * (5 * _SQ3 - 12) / 54
    a5 = (_SQ3 - 4) / 54 + 1j / 18
    c = np.conj
    m = np.array(
        [
            [a1, 0, 0, 0, a2, 0, 0, 0, c(a2)],
            [0, a3, 0, 0, 0, a4, c(a4), 0, 0],
            [0, 0, a1, a5, 0, 0, 0, c(a5), 0],
            [0, 0, c(a5), a1, 0, 0, 0, a5, 0],
            [c(a2), 0, 0, 0, a1, 0, 0, 0, a2],
            [0, c(a4), 0, 0, 0, a3, a4, 0, 0],
            [0, a4, 0, 0, 0, c(a4), a3, 0, 0],
            [0, 0, a5, c(a5), 0, 0, 0, a1, 0],
            [a2, 0, 0, 0, c(a2), 0, 0, 0, a1],
        ],
        dtype=complex,
    )
    return DensityMatrix(3, 3, m)


def isotropic_mix(rho: DensityMatrix, nu: float) -> DensityMatrix:
    """Convex mixture with the maximally mixed state on the full space.

    nu = 0 returns the state unchanged; nu = 1 the normalized identity.
    """
    if not (0.0 <= nu <= 1.0):
        raise ValueError("nu must lie in [0, 1]")
    n = rho.dim
    mixed = nu * np.eye(n) / n + (1 - nu) * rho.matrix
    return DensityMatrix(rho.dim_a, rho.dim_b, mixed)


def max_entangled_ket(d: int) -> np.ndarray:
    v = np.zeros(d * d, dtype=complex)
    for k in range(d):
        v[k * d + k] = 1.0
    return v / np.sqrt(d)


_BELL_CONVENTIONS = ("I_x_U", "U_x_I", "I_x_Uconj", "Uconj_x_I")


def _bell_kets(d: int, convention: str) -> list[np.ndarray]:
    phi = max_entangled_ket(d)
    fam = encoding_unitaries(d)
    eye = np.eye(d)
    kets = []
    for u in fam.unitaries:
        if convention == "I_x_U":
            w = np.kron(eye, u)
        elif convention == "U_x_I":
            w = np.kron(u, eye)
        elif convention == "I_x_Uconj":
            w = np.kron(eye, u.conj())
        elif convention == "Uconj_x_I":
            w = np.kron(u.conj(), eye)
        else:
            raise ValueError(f"unknown convention {convention!r}")
        kets.append(w @ phi)
    return kets


def bell_basis(d: int, convention: str = "I_x_U") -> list[np.ndarray]:
    """The d^2 maximally entangled basis kets, Weyl unitaries on one share."""
    if d < 2:
        raise ValueError("d must be >= 2")
    return _bell_kets(d, convention)


@dataclass(frozen=True)
class BellDecomposition:
    convention: str
    kets: tuple[np.ndarray, ...] = field(repr=False)
    weights: np.ndarray


def bell_decompose(rho: DensityMatrix, off_diag_tol: float = 1e-10) -> BellDecomposition:
    """Diagonalize a Bell-diagonal state over the generalized Bell basis.

    Tries the one-sided Weyl conventions and their conjugates in a fixed
    order and returns the first that leaves all off-diagonal Bell-basis
    elements below tolerance. The winning convention is recorded; the four
    conventions produce the same projector set up to relabeling, so several
    may succeed.
    """
    if rho.dim_a != rho.dim_b:
        raise ValueError("Bell decomposition needs equal local dimensions")
    d = rho.dim_a
    for convention in _BELL_CONVENTIONS:
        kets = _bell_kets(d, convention)
        basis = np.stack(kets, axis=1)  # columns are Bell kets
        g = basis.conj().T @ rho.matrix @ basis
        off = g - np.diag(np.diag(g))
        if float(np.max(np.abs(off))) <= off_diag_tol:
            return BellDecomposition(convention, tuple(kets), np.real(np.diag(g)).copy())
    raise ValueError("state is not Bell-diagonal under any supported convention")


# Relabeling (E~_0, E~_1, E~_2) per z for the second factor of the d=3
# measurements, given as (basis j, outcome l) pairs.
_D3_RELABEL = {
    0: ((0, 1), (0, 0), (0, 2)),
    1: ((2, 0), (2, 2), (2, 1)),
    2: ((1, 1), (1, 0), (1, 2)),
    3: ((3, 1), (3, 2), (3, 0)),
}


def paper_measurements_d3() -> list[Povm]:
    """The four explicit 3-outcome product measurements on two qutrits.

    M_(c|z) = sum_b E_(b|z) x E~_(b-c|z) with the second factor a fixed
    relabeling of the mutually unbiased bases.
    """
    d = 3
    povms = []
    for z in range(d + 1):
        relabel = _D3_RELABEL[z]
        effects = []
        for c in range(d):
            m = np.zeros((d * d, d * d), dtype=complex)
            for b in range(d):
                first = mub_projector(d, z, b)
                jj, ll = relabel[(b - c) % d]
                second = mub_projector(d, jj, ll)
                m += np.kron(first, second)
            effects.append(m)
        povms.append(Povm(z, tuple(effects)))
    return povms
