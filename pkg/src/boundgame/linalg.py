"""Dense complex linear algebra kernels.

Everything operates on plain ``numpy.ndarray`` values (complex128 unless
noted). All functions are pure; arrays are never mutated in place.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

HERMITICITY_TOL = 1e-10


def _as_matrix(m) -> np.ndarray:
    a = np.asarray(m)
    if a.ndim != 2:
        raise ValueError(f"expected a matrix, got ndim={a.ndim}")
    return a


def is_hermitian(m, tol: float = HERMITICITY_TOL) -> bool:
    a = _as_matrix(m)
    if a.shape[0] != a.shape[1]:
        return False
    return float(np.max(np.abs(a - a.conj().T))) <= tol


def hermitize(m) -> np.ndarray:
    """Hermitian part (M + M†)/2."""
    a = _as_matrix(m)
    return (a + a.conj().T) / 2


def kron(a, b) -> np.ndarray:
    """Kronecker product."""
    return np.kron(np.asarray(a), np.asarray(b))


def partial_transpose(m, dim_a: int, dim_b: int, subsystem: str = "A") -> np.ndarray:
    """Transpose one tensor factor of a matrix on a dim_a x dim_b product space.

    Involution: applying twice on the same subsystem returns the input.
    """
    a = _as_matrix(m)
    n = dim_a * dim_b
    if a.shape != (n, n):
        raise ValueError(f"matrix is {a.shape}, expected ({n}, {n})")
    r = a.reshape(dim_a, dim_b, dim_a, dim_b)
    if subsystem == "A":
        r = r.transpose(2, 1, 0, 3)
    elif subsystem == "B":
        r = r.transpose(0, 3, 2, 1)
    else:
        raise ValueError("subsystem must be 'A' or 'B'")
    return r.reshape(n, n).copy()


def hermitian_basis(d: int) -> list[np.ndarray]:
    """Orthonormal basis of d x d Hermitian matrices, tr(g_j g_k) = delta_jk.

    Convention: generalized Gell-Mann matrices with unit Hilbert-Schmidt norm,
    plus the normalized identity I/sqrt(d).
    """
    if d < 1:
        raise ValueError("d must be >= 1")
    basis = [np.eye(d, dtype=complex) / np.sqrt(d)]
    for k in range(1, d):
        diag = np.zeros(d)
        diag[:k] = 1.0
        diag[k] = -k
        basis.append(np.diag(diag).astype(complex) / np.sqrt(k * (k + 1)))
    for j in range(d):
        for k in range(j + 1, d):
            sym = np.zeros((d, d), dtype=complex)
            sym[j, k] = sym[k, j] = 1 / np.sqrt(2)
            basis.append(sym)
            asym = np.zeros((d, d), dtype=complex)
            asym[j, k] = -1j / np.sqrt(2)
            asym[k, j] = 1j / np.sqrt(2)
            basis.append(asym)
    return basis


def realignment_matrix(rho, dim_a: int, dim_b: int) -> np.ndarray:
    """Correlation matrix C[j, k] = tr((g_j x g_k) rho) over Hermitian bases.

    Returns a real dim_a^2 x dim_b^2 matrix; its trace norm is the quantity
    tested by the realignment (CCNR) criterion.
    """
    a = _as_matrix(rho)
    n = dim_a * dim_b
    if a.shape != (n, n):
        raise ValueError(f"matrix is {a.shape}, expected ({n}, {n})")
    ga = hermitian_basis(dim_a)
    gb = hermitian_basis(dim_b)
    # tr((g_j x g_l) rho) = sum g_j[i,k] g_l[m,n] rho[(k,n),(i,m)]
    r = a.reshape(dim_a, dim_b, dim_a, dim_b)
    ga_arr = np.stack(ga)  # (dA^2, dA, dA)
    gb_arr = np.stack(gb)  # (dB^2, dB, dB)
    c = np.einsum("jik,lmn,knim->jl", ga_arr, gb_arr, r, optimize=True)
    return np.real(c)


def trace_norm(m) -> float:
    """Sum of singular values."""
    a = _as_matrix(m)
    return float(np.sum(np.linalg.svd(a, compute_uv=False)))


@dataclass(frozen=True)
class HermitianSpectrum:
    """Eigenvalues in non-increasing order with matching orthonormal columns."""

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray

    def reconstruct(self) -> np.ndarray:
        v = self.eigenvectors
        return (v * self.eigenvalues) @ v.conj().T


def eigh(h, tol: float = HERMITICITY_TOL) -> HermitianSpectrum:
    """Full Hermitian eigendecomposition, eigenvalues sorted descending."""
    a = _as_matrix(h)
    if not is_hermitian(a, tol=tol):
        raise ValueError("matrix is not Hermitian within tolerance")
    vals, vecs = np.linalg.eigh(a)
    return HermitianSpectrum(vals[::-1].copy(), vecs[:, ::-1].copy())


def group_eigenvalues(values, rtol: float = 1e-8) -> list[tuple[float, int]]:
    """Group a sorted spectrum into (value, multiplicity) pairs.

    Neighbors closer than rtol * max(1, |scale|) are merged; the reported
    value is the group mean.
    """
    vals = np.sort(np.asarray(values, dtype=float))[::-1]
    scale = max(1.0, float(np.max(np.abs(vals))) if vals.size else 1.0)
    groups: list[list[float]] = []
    for v in vals:
        if groups and abs(groups[-1][-1] - v) <= rtol * scale:
            groups[-1].append(v)
        else:
            groups.append([v])
    return [(float(np.mean(g)), len(g)) for g in groups]


def random_unitary(d: int, seed: int) -> np.ndarray:
    """Haar-random d x d unitary, deterministic for a fixed seed.

    QR of a complex Gaussian matrix with the R-diagonal phase fixed so the
    factorization is unique, which makes the distribution Haar.
    """
    if d < 1:
        raise ValueError("d must be >= 1")
    rng = np.random.default_rng(seed)
    g = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
    q, r = np.linalg.qr(g)
    phases = np.diag(r).copy()
    phases /= np.abs(phases)
    return q * phases


def random_unitaries(d: int, count: int, seed: int) -> list[np.ndarray]:
    """A deterministic stream of Haar unitaries from one seed."""
    rng = np.random.default_rng(seed)
    out = []
    for _ in range(count):
        g = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
        q, r = np.linalg.qr(g)
        phases = np.diag(r).copy()
        phases /= np.abs(phases)
        out.append(q * phases)
    return out
