"""The symmetrized minor of the moment matrix.

After averaging over the invariance group, the minor spanned by the
{1 x sigma_y} row block and the {(rho_x x 1) M_(c|z)} block contains only
d(d+1) + 2 unknowns: the state-overlap means Delta_rho and Delta_sigma and
the win-offset probabilities q(ctilde | z). Every entry is one of a small
set of symbols; the model stores one 0/1 structure matrix per symbol.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from ..game import winning_table

CONST_SYMBOLS = ("const_d", "const_1", "const_0", "inv_d")
COUPLED_SYMBOLS = ("delta_rho", "d_delta_sigma", "delta_rho_over_d")


@dataclass
class ReducedMomentModel:
    d: int
    size: int
    n_sigma: int
    structure: dict = field(repr=False)  # symbol -> csr 0/1 matrix
    unknowns: list  # "delta_rho", "delta_sigma", ("q", z, ctilde)

    def unknown_count(self) -> int:
        return len(self.unknowns)

    def coefficient_matrix(self, key) -> sp.csr_matrix:
        """The matrix multiplying one unknown inside G-bar."""
        if key == "delta_rho":
            return (self.structure["delta_rho"] + self.structure["delta_rho_over_d"] / self.d).tocsr()
        if key == "delta_sigma":
            return (self.d * self.structure["d_delta_sigma"]).tocsr()
        kind, z, ctilde = key
        assert kind == "q"
        return self.structure[("q", z, ctilde)]

    def constant_matrix(self) -> sp.csr_matrix:
        return (
            self.d * self.structure["const_d"]
            + self.structure["const_1"]
            + self.structure["inv_d"] / self.d
        ).tocsr()

    def assemble(self, delta_rho: float, delta_sigma: float, q: np.ndarray) -> np.ndarray:
        """Dense G-bar for given unknown values; q indexed [z, ctilde]."""
        g = self.constant_matrix().toarray()
        g += delta_rho * self.coefficient_matrix("delta_rho").toarray()
        g += delta_sigma * self.coefficient_matrix("delta_sigma").toarray()
        for z in range(self.d + 1):
            for ct in range(self.d):
                g += q[z, ct] * self.structure[("q", z, ct)].toarray()
        return g

    def objective_coefficients(self) -> dict:
        """Objective weight per unknown: (1/(d+1)) on each q(0|z)."""
        coef = {}
        for key in self.unknowns:
            if isinstance(key, tuple) and key[2] == 0:
                coef[key] = 1.0 / (self.d + 1)
            else:
                coef[key] = 0.0
        return coef


def build_reduced_model(d: int) -> ReducedMomentModel:
    if d not in (3, 5, 7):
        raise ValueError("reduced model supports d in {3, 5, 7}")
    n_sigma = d * d
    n_m = d * d * d * (d + 1)
    size = n_sigma + n_m

    # column descriptors of the (x, z, c) block, ordered x-major then z then c
    per_x = d * (d + 1)
    xs = np.arange(n_m) // per_x
    zs = (np.arange(n_m) % per_x) // d
    cs = np.arange(n_m) % d

    structure: dict = {}

    def coo_to_csr(rows, cols, shape_rows=None):
        rows = np.asarray(rows, dtype=np.int64)
        cols = np.asarray(cols, dtype=np.int64)
        data = np.ones(len(rows))
        return sp.csr_matrix((data, (rows, cols)), shape=(size, size))

    # sigma-sigma block
    diag = np.arange(n_sigma)
    structure["const_d"] = coo_to_csr(diag, diag)
    offr, offc = np.where(~np.eye(n_sigma, dtype=bool))
    structure["d_delta_sigma"] = coo_to_csr(offr, offc)

    # sigma-M block: q(c - w_z(x, y) | z), mirrored below the diagonal
    w = winning_table(d)  # w[z, xlab, ylab]
    ylab = np.arange(n_sigma)
    q_rows: dict = {(z, ct): [[], []] for z in range(d + 1) for ct in range(d)}
    for j in range(n_m):
        ct_per_y = (cs[j] - w[zs[j], xs[j], ylab]) % d
        col = n_sigma + j
        for y in range(n_sigma):
            acc = q_rows[(int(zs[j]), int(ct_per_y[y]))]
            acc[0].append(y)
            acc[1].append(col)
    for (z, ct), (rr, cc) in q_rows.items():
        rows = np.concatenate([rr, cc]) if rr else np.empty(0, dtype=np.int64)
        cols = np.concatenate([cc, rr]) if rr else np.empty(0, dtype=np.int64)
        structure[("q", z, ct)] = coo_to_csr(rows, cols)

    # M-M block
    same_x = xs[:, None] == xs[None, :]
    same_z = zs[:, None] == zs[None, :]
    same_c = cs[:, None] == cs[None, :]

    def mm(mask):
        r, c = np.where(mask)
        return coo_to_csr(r + n_sigma, c + n_sigma)

    eye_m = np.eye(n_m, dtype=bool)
    structure["const_1"] = mm(eye_m)
    structure["delta_rho"] = mm(same_z & same_c & ~same_x)
    structure["const_0"] = mm(same_z & ~same_c)
    structure["inv_d"] = mm(~same_z & same_x)
    structure["delta_rho_over_d"] = mm(~same_z & ~same_x)

    unknowns = ["delta_rho", "delta_sigma"] + [("q", z, ct) for z in range(d + 1) for ct in range(d)]
    return ReducedMomentModel(d=d, size=size, n_sigma=n_sigma, structure=structure, unknowns=unknowns)


def structure_partition_ok(model: ReducedMomentModel) -> bool:
    """Every G-bar position belongs to exactly one symbol."""
    total = sp.csr_matrix((model.size, model.size))
    for mat in model.structure.values():
        total = total + mat
    dense = total.toarray()
    return bool(np.all(dense == 1.0))


def grouped_strategy_values(d, alice_states, bob_states, measurements):
    """Symmetrized moment values of an explicit unentangled strategy.

    alice_states an array (d^2, d, d) of message states rho_x (same for
    Bob), measurements a list of d+1 POVMs on the joint space. Returns
    (delta_rho, delta_sigma, q[z, ctilde]) as grouped averages.
    """
    n_in = d * d
    ra = np.asarray(alice_states)
    rb = np.asarray(bob_states)
    overlaps_a = np.einsum("xab,yba->xy", ra, ra).real
    overlaps_b = np.einsum("xab,yba->xy", rb, rb).real
    off = ~np.eye(n_in, dtype=bool)
    delta_rho = float(overlaps_a[off].mean())
    delta_sigma = float(overlaps_b[off].mean())

    w = winning_table(d)
    q = np.zeros((d + 1, d))
    joint = np.einsum("xab,ycd->xyacbd", ra, rb).reshape(n_in * n_in, d * d, d * d)
    for z in range(d + 1):
        effects = np.stack(measurements[z].effects)
        p = np.einsum("kab,cba->kc", joint, effects).real  # [xy, c]
        wflat = w[z].reshape(-1)
        for ct in range(d):
            q[z, ct] = p[np.arange(n_in * n_in), (wflat + ct) % d].mean()
    return delta_rho, delta_sigma, q
