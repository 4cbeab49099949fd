"""The full d=3 moment matrix, without symmetrization.

Monomials: identity, the d^2 message states of each sender, the measurement
operators, and the products (rho_x x 1) M_(c|z). Matrix entries are traces
of monomial products; projectivity, purity, normalization and measurement
completeness fix or tie most of them, and the rest stay free. Solving this
program validates the symmetrized reduction at d=3.
"""

from __future__ import annotations

import numpy as np

from ..game import winning_answer
from ..sdp.program import ConicProgram

D3 = 3


def _monomials(d: int):
    mons = [("one",)]
    for x in range(d * d):
        mons.append(("rho", x))
    for y in range(d * d):
        mons.append(("sig", y))
    for z in range(d + 1):
        for c in range(d):
            mons.append(("M", z, c))
    for x in range(d * d):
        for z in range(d + 1):
            for c in range(d):
                mons.append(("N", x, z, c))
    return mons


def _pairkey(a, b):
    return tuple(sorted((a, b)))


def _symbol(a, b, d):
    """Symbol key of the entry tr(u v') for monomial descriptors a, b."""
    order = {"one": 0, "rho": 1, "sig": 2, "M": 3, "N": 4}
    if order[a[0]] > order[b[0]]:
        a, b = b, a
    ka, kb = a[0], b[0]
    if ka == "one":
        if kb == "one":
            return ("const", float(d * d))
        if kb in ("rho", "sig"):
            return ("const", float(d))
        if kb == "M":
            return ("m", (b[1], b[2]))
        return ("t", b[1], (b[2], b[3]))
    if ka == "rho":
        if kb == "rho":
            if a[1] == b[1]:
                return ("const", float(d))
            return ("r", _pairkey(a[1], b[1]))
        if kb == "sig":
            return ("const", 1.0)
        if kb == "M":
            return ("t", a[1], (b[1], b[2]))
        # rho_x against (rho_x' x 1) M
        if a[1] == b[1]:
            return ("t", a[1], (b[2], b[3]))
        return ("s", _pairkey(a[1], b[1]), (b[2], b[3]))
    if ka == "sig":
        if kb == "sig":
            if a[1] == b[1]:
                return ("const", float(d))
            return ("w", _pairkey(a[1], b[1]))
        if kb == "M":
            return ("u", a[1], (b[1], b[2]))
        return ("p", b[1], a[1], b[2], b[3])
    if ka == "M":
        if kb == "M":
            (z1, c1), (z2, c2) = (a[1], a[2]), (b[1], b[2])
            if z1 == z2:
                if c1 == c2:
                    return ("m", (z1, c1))
                return ("const", 0.0)
            return ("alpha", _pairkey((z1, c1), (z2, c2)))
        # M_(c|z) against (rho_x x 1) M_(c'|z')
        (z1, c1), (x2, z2, c2) = (a[1], a[2]), (b[1], b[2], b[3])
        if z1 == z2:
            if c1 == c2:
                return ("t", x2, (z1, c1))
            return ("const", 0.0)
        return ("beta", x2, _pairkey((z1, c1), (z2, c2)))
    # N against N
    (x1, z1, c1), (x2, z2, c2) = (a[1], a[2], a[3]), (b[1], b[2], b[3])
    if z1 == z2:
        if c1 != c2:
            return ("const", 0.0)
        if x1 == x2:
            return ("t", x1, (z1, c1))
        return ("s", _pairkey(x1, x2), (z1, c1))
    if x1 == x2:
        return ("beta", x1, _pairkey((z1, c1), (z2, c2)))
    return ("g", _pairkey((x1, z1, c1), (x2, z2, c2)))


def build_full_moment_matrix(d: int = D3) -> ConicProgram:
    """The unsymmetrized positivity program whose optimum bounds the game.

    Maximizes the average winning probability over the moment matrix, with
    fixed entries, equal-symbol ties, probability normalization, and the
    linear sums implied by complete measurements.
    """
    if d != D3:
        raise ValueError("the full moment matrix is built for d=3 only")
    mons = _monomials(d)
    n = len(mons)
    index = {m: i for i, m in enumerate(mons)}

    positions: dict = {}
    fixed: list = []
    for i in range(n):
        for j in range(i, n):
            sym = _symbol(mons[i], mons[j], d)
            if sym[0] == "const":
                fixed.append((i, j, sym[1]))
            else:
                positions.setdefault(sym, []).append((i, j))

    prog = ConicProgram("max", [n])

    def pos_entry(i, j, scale=1.0):
        return (0, i, j, scale if i == j else 0.5 * scale)

    for i, j, value in fixed:
        prog.add_constraint([pos_entry(i, j)], value)

    rep = {sym: pos_list[0] for sym, pos_list in positions.items()}
    for sym, pos_list in positions.items():
        ri, rj = rep[sym]
        for (i, j) in pos_list[1:]:
            prog.add_constraint([pos_entry(i, j), pos_entry(ri, rj, -1.0)], 0.0)

    def rep_entry(sym, scale=1.0):
        ri, rj = rep[sym]
        return pos_entry(ri, rj, scale)

    zc_all = [(z, c) for z in range(d + 1) for c in range(d)]

    # completeness sums: summing any M-linear family over outcomes removes M
    for z in range(d + 1):
        prog.add_constraint([rep_entry(("m", (z, c))) for c in range(d)], float(d * d))
        for x in range(d * d):
            prog.add_constraint([rep_entry(("t", x, (z, c))) for c in range(d)], float(d))
        for y in range(d * d):
            prog.add_constraint([rep_entry(("u", y, (z, c))) for c in range(d)], float(d))
        for x in range(d * d):
            for y in range(d * d):
                prog.add_constraint(
                    [rep_entry(("p", x, y, z, c)) for c in range(d)], 1.0
                )
        for xx in [(x1, x2) for x1 in range(d * d) for x2 in range(x1 + 1, d * d)]:
            prog.add_constraint(
                [rep_entry(("s", xx, (z, c))) for c in range(d)]
                + [rep_entry(("r", xx), -1.0)],
                0.0,
            )
    for zf, cf in zc_all:
        for z in range(d + 1):
            if z == zf:
                continue
            prog.add_constraint(
                [rep_entry(("alpha", _pairkey((z, c), (zf, cf)))) for c in range(d)]
                + [rep_entry(("m", (zf, cf)), -1.0)],
                0.0,
            )
            for x in range(d * d):
                prog.add_constraint(
                    [rep_entry(("beta", x, _pairkey((z, c), (zf, cf)))) for c in range(d)]
                    + [rep_entry(("t", x, (zf, cf)), -1.0)],
                    0.0,
                )
            for x in range(d * d):
                for xf in range(d * d):
                    if x == xf:
                        continue
                    prog.add_constraint(
                        [
                            rep_entry(("g", _pairkey((x, z, c), (xf, zf, cf))))
                            for c in range(d)
                        ]
                        + [rep_entry(("s", _pairkey(x, xf), (zf, cf)), -1.0)],
                        0.0,
                    )

    # objective: average winning probability over the p-entries
    weight = 1.0 / (d**4 * (d + 1))
    for x0 in range(d):
        for x1 in range(d):
            for y0 in range(d):
                for y1 in range(d):
                    for z in range(d + 1):
                        c = winning_answer(d, (x0, x1), (y0, y1), z)
                        x = x0 * d + x1
                        y = y0 * d + y1
                        i, j = rep[("p", x, y, z, c)]
                        prog.add_objective(0, i, j, weight if i == j else 0.5 * weight)

    _ = index
    return prog


def full_gamma_of_strategy(d, alice_states, bob_states, measurements) -> np.ndarray:
    """Real moment matrix of an explicit unentangled strategy (the oracle).

    Feeding its entries through the program's constraints must satisfy them
    exactly; its objective value equals the strategy's game score.
    """
    mons = _monomials(d)
    eye = np.eye(d, dtype=complex)
    ops = []
    for m in mons:
        if m[0] == "one":
            ops.append(np.eye(d * d, dtype=complex))
        elif m[0] == "rho":
            ops.append(np.kron(alice_states[m[1]], eye))
        elif m[0] == "sig":
            ops.append(np.kron(eye, bob_states[m[1]]))
        elif m[0] == "M":
            ops.append(np.asarray(measurements[m[1]].effects[m[2]]))
        else:
            x, z, c = m[1], m[2], m[3]
            ops.append(np.kron(alice_states[x], eye) @ np.asarray(measurements[z].effects[c]))
    n = len(ops)
    gamma = np.empty((n, n))
    for i in range(n):
        for j in range(i, n):
            val = float(np.trace(ops[i] @ ops[j].conj().T).real)
            gamma[i, j] = gamma[j, i] = val
    return gamma
