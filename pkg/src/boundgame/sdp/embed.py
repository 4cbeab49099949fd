"""Complex-to-real embedding for Hermitian SDP data.

embed(H) = [[Re H, -Im H], [Im H, Re H]] is PSD iff H is, with every
eigenvalue doubled in multiplicity, and tr(embed(A) embed(B)) = 2 Re tr(AB).
The factor 2 is absorbed where programs are assembled: objective and
constraint matrices for a Hermitian variable use embed(.)/2 against the
unscaled right-hand sides, so reported values match the complex problem.
"""

from __future__ import annotations

import numpy as np

from .. import linalg


def embed_complex(h) -> np.ndarray:
    """Real symmetric 2n x 2n embedding of a Hermitian matrix."""
    a = np.asarray(h, dtype=complex)
    if not linalg.is_hermitian(a, tol=1e-10):
        raise ValueError("embedding requires a Hermitian matrix")
    re, im = a.real, a.imag
    top = np.hstack([re, -im])
    bot = np.hstack([im, re])
    return np.vstack([top, bot])


def unembed_real(x) -> np.ndarray:
    """Recover the Hermitian matrix whose embedding best matches x.

    Averages the two real copies and antisymmetrizes the imaginary part, so
    it is exact on true embeddings and a projection otherwise.
    """
    x = np.asarray(x, dtype=float)
    n2 = x.shape[0]
    if n2 % 2:
        raise ValueError("embedded matrix must have even dimension")
    n = n2 // 2
    re = (x[:n, :n] + x[n:, n:]) / 2
    im = (x[n:, :n] - x[:n, n:]) / 2
    h = re + 1j * im
    return (h + h.conj().T) / 2


def embedded_entries(blk: int, h, scale: float = 1.0):
    """Upper-triangle sparse entries of scale * embed(h) for program assembly."""
    e = embed_complex(h) * scale
    n2 = e.shape[0]
    out = []
    for i in range(n2):
        for j in range(i, n2):
            v = e[i, j]
            if v != 0.0:
                out.append((blk, i, j, float(v)))
    return out
