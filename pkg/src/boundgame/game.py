"""The prepare-and-measure communication game.

Winning condition, quantum-strategy scoring, classical scoring with
best-response decoding, exact classical maximization for d=3, and the
isotropic-noise threshold search.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from itertools import permutations, product

import numpy as np

from .qobjects import DensityMatrix, Povm, UnitaryFamily, is_odd_prime


@dataclass(frozen=True)
class GameSpec:
    """Game dimension: inputs x, y in [d]^2, z in [d+1], outcome c in [d]."""

    d: int

    def __post_init__(self):
        if not is_odd_prime(self.d):
            raise ValueError("game dimension must be an odd prime")

    @property
    def n_inputs(self) -> int:
        return self.d * self.d

    @property
    def n_settings(self) -> int:
        return self.d + 1

    @property
    def n_triples(self) -> int:
        return self.d**4 * (self.d + 1)


def winning_answer(d: int, x: tuple[int, int], y: tuple[int, int], z: int) -> int:
    """The unique correct output for inputs (x, y, z)."""
    x0, x1 = x
    y0, y1 = y
    if not all(0 <= v < d for v in (x0, x1, y0, y1)) or not (0 <= z <= d):
        raise ValueError("input indices out of range")
    if z == d:
        return (x0 - y0) % d
    return (x1 + y1 - 2 * z * (x0 - y0)) % d


def winning_table(d: int) -> np.ndarray:
    """w[z, xlab, ylab] with labels in row-major (i0, i1) order."""
    x0 = np.arange(d).repeat(d)
    x1 = np.tile(np.arange(d), d)
    w = np.empty((d + 1, d * d, d * d), dtype=np.int64)
    for z in range(d + 1):
        if z == d:
            w[z] = (x0[:, None] - x0[None, :]) % d
        else:
            w[z] = (x1[:, None] + x1[None, :] - 2 * z * (x0[:, None] - x0[None, :])) % d
    return w


@dataclass(frozen=True)
class QuantumStrategy:
    state: DensityMatrix
    alice: UnitaryFamily
    bob: UnitaryFamily
    measurements: tuple[Povm, ...]

    def __post_init__(self):
        d = self.alice.d
        if self.bob.d != d:
            raise ValueError("Alice and Bob encode different dimensions")
        if (self.state.dim_a, self.state.dim_b) != (d, d):
            raise ValueError("state dimensions do not match the encodings")
        if len(self.measurements) != d + 1:
            raise ValueError(f"expected {d + 1} measurements")
        for m in self.measurements:
            if m.dim != d * d or len(m.effects) != d:
                raise ValueError("measurement dimensions inconsistent with the game")
        object.__setattr__(self, "measurements", tuple(self.measurements))

    @property
    def d(self) -> int:
        return self.alice.d


def paper_strategy_d3() -> QuantumStrategy:
    from .qobjects import bound_entangled_state, encoding_unitaries, paper_measurements_d3

    fam = encoding_unitaries(3)
    return QuantumStrategy(bound_entangled_state(), fam, fam, tuple(paper_measurements_d3()))


def _joint_unitaries(alice: UnitaryFamily, bob: UnitaryFamily) -> np.ndarray:
    """Stack of U_x (x) U_y over all (xlab, ylab), shape (d^4, d^2, d^2)."""
    d = alice.d
    ua = np.stack(alice.unitaries)
    ub = np.stack(bob.unitaries)
    joint = np.einsum("xab,ycd->xyacbd", ua, ub).reshape(d**4, d * d, d * d)
    return np.ascontiguousarray(joint)


def encoded_states(state: DensityMatrix, alice: UnitaryFamily, bob: UnitaryFamily) -> np.ndarray:
    """All d^4 encoded joint states (U_x x U_y) Psi (.)^dagger.

    Computed once per strategy and reused across measurement settings.
    """
    joint = _joint_unitaries(alice, bob)
    return joint @ state.matrix @ joint.conj().transpose(0, 2, 1)


def outcome_sums(encoded: np.ndarray, w: np.ndarray, z: int, d: int) -> list[np.ndarray]:
    """S_c = sum of encoded states over input pairs whose winning answer is c."""
    wflat = w[z].reshape(-1)
    return [encoded[wflat == c].sum(axis=0) for c in range(d)]


def score_quantum(spec: GameSpec, strategy: QuantumStrategy) -> float:
    """Average winning probability R_d of an entanglement-assisted strategy."""
    d = spec.d
    if strategy.d != d:
        raise ValueError("strategy dimension does not match the game")
    encoded = encoded_states(strategy.state, strategy.alice, strategy.bob)
    w = winning_table(d)
    total = 0.0
    for z in range(d + 1):
        effects = strategy.measurements[z].effects
        for c, s_c in enumerate(outcome_sums(encoded, w, z, d)):
            total += float(np.real(np.einsum("ij,ji->", s_c, effects[c])))
    return total / spec.n_triples


def game_operator(
    spec: GameSpec,
    alice: UnitaryFamily,
    bob: UnitaryFamily,
    measurements: tuple[Povm, ...] | list[Povm],
) -> np.ndarray:
    """Hermitian G with R_d = Re tr(G rho) for any shared state rho."""
    d = spec.d
    joint = _joint_unitaries(alice, bob)
    w = winning_table(d)
    g = np.zeros((d * d, d * d), dtype=complex)
    for z in range(d + 1):
        effects = np.stack(measurements[z].effects)
        gathered = effects[w[z].reshape(-1)]
        g += np.einsum("kji,kjl,klm->im", joint.conj(), gathered, joint, optimize=True)
    g /= spec.n_triples
    return (g + g.conj().T) / 2


def score_table(d: int, p: np.ndarray) -> float:
    """Score a raw conditional-probability table p[c, xlab, ylab, z]."""
    w = winning_table(d)
    total = 0.0
    for z in range(d + 1):
        for xl in range(d * d):
            for yl in range(d * d):
                total += p[w[z, xl, yl], xl, yl, z]
    return total / (d**4 * (d + 1))


# --- classical strategies -------------------------------------------------

BEST_RESPONSE = "best-response"


@dataclass(frozen=True)
class ClassicalStrategy:
    """Deterministic encodings with either a fixed or a best-response decoder.

    Encodings are length-d^2 tuples over [d], indexed row-major by (i0, i1).
    An explicit decoder is an array dec[m_a, m_b, z] -> c.
    """

    d: int
    alice: tuple[int, ...]
    bob: tuple[int, ...]
    decoder: object = BEST_RESPONSE

    def __post_init__(self):
        d = self.d
        for enc in (self.alice, self.bob):
            if len(enc) != d * d or any(not (0 <= int(v) < d) for v in enc):
                raise ValueError("encoding must map [d]^2 into [d]")
        if not (isinstance(self.decoder, str) and self.decoder == BEST_RESPONSE):
            dec = np.asarray(self.decoder)
            if dec.shape != (d, d, d + 1) or dec.min() < 0 or dec.max() >= d:
                raise ValueError("decoder must be a [d]x[d]x[d+1] table over [d]")
            object.__setattr__(self, "decoder", dec)


def _alice_forms(d: int) -> np.ndarray:
    """a_z(x) = x1 - 2 z x0 for z < d and x0 for z = d, per input label."""
    x0 = np.arange(d).repeat(d)
    x1 = np.tile(np.arange(d), d)
    forms = np.empty((d + 1, d * d), dtype=np.int64)
    for z in range(d):
        forms[z] = (x1 - 2 * z * x0) % d
    forms[d] = x0
    return forms


def _bob_forms(d: int) -> np.ndarray:
    """b_z(y) = y1 + 2 z y0 for z < d and y0 for z = d; w_z = a_z + b_z (a - b at z=d)."""
    y0 = np.arange(d).repeat(d)
    y1 = np.tile(np.arange(d), d)
    forms = np.empty((d + 1, d * d), dtype=np.int64)
    for z in range(d):
        forms[z] = (y1 + 2 * z * y0) % d
    forms[d] = y0
    return forms


def _form_histogram(encoding, forms: np.ndarray, d: int) -> np.ndarray:
    """h[z, m, t] = #{inputs: encoding = m and form value = t}."""
    enc = np.asarray(encoding, dtype=np.int64)
    h = np.zeros((d + 1, d, d), dtype=np.int64)
    for z in range(d + 1):
        np.add.at(h[z], (enc, forms[z]), 1)
    return h


def outcome_counts(strategy: ClassicalStrategy) -> np.ndarray:
    """n[z, m_a, m_b, c] = #{(x, y): encodings give (m_a, m_b), w_z(x, y) = c}."""
    d = strategy.d
    ha = _form_histogram(strategy.alice, _alice_forms(d), d)
    hb = _form_histogram(strategy.bob, _bob_forms(d), d)
    n = np.zeros((d + 1, d, d, d), dtype=np.int64)
    for z in range(d + 1):
        for c in range(d):
            if z == d:
                cols = [(a - c) % d for a in range(d)]  # w = a - b
            else:
                cols = [(c - a) % d for a in range(d)]  # w = a + b
            gathered = hb[z][:, cols]  # [m_b, a] = hb[z, m_b, b(a, c)]
            n[z, :, :, c] = ha[z] @ gathered.T
    return n


def score_classical(spec: GameSpec, strategy: ClassicalStrategy) -> float:
    """R_d of a deterministic classical strategy.

    With the best-response decoder, Charlie plays argmax_c of the count
    N(c | m_a, m_b, z); ties break toward the smallest outcome index.
    """
    d = spec.d
    if strategy.d != d:
        raise ValueError("strategy dimension does not match the game")
    n = outcome_counts(strategy)
    if isinstance(strategy.decoder, str):
        total = int(n.max(axis=3).sum())
    else:
        dec = strategy.decoder
        total = 0
        for z in range(d + 1):
            for ma in range(d):
                for mb in range(d):
                    total += int(n[z, ma, mb, dec[ma, mb, z]])
    return total / spec.n_triples


def best_response_decoder(strategy: ClassicalStrategy) -> np.ndarray:
    """The argmax decoder table realized by best-response play."""
    n = outcome_counts(strategy)
    d = strategy.d
    dec = np.empty((d, d, d + 1), dtype=np.int64)
    for z in range(d + 1):
        dec[:, :, z] = np.argmax(n[z], axis=2)
    return dec


def score_classical_bruteforce(spec: GameSpec, strategy: ClassicalStrategy) -> float:
    """Direct enumeration over every (x, y, z); independent of the histogram path."""
    d = spec.d
    n = np.zeros((d + 1, d, d, d), dtype=np.int64)
    for x0, x1, y0, y1, z in product(range(d), range(d), range(d), range(d), range(d + 1)):
        ma = strategy.alice[x0 * d + x1]
        mb = strategy.bob[y0 * d + y1]
        w = winning_answer(d, (x0, x1), (y0, y1), z)
        n[z, ma, mb, w] += 1
    if isinstance(strategy.decoder, str):
        total = int(n.max(axis=3).sum())
    else:
        dec = strategy.decoder
        total = sum(
            int(n[z, ma, mb, dec[ma, mb, z]])
            for z in range(d + 1)
            for ma in range(d)
            for mb in range(d)
        )
    return total / spec.n_triples


# --- exact classical maximum for d = 3 ------------------------------------


def canonical_classes(d: int = 3) -> list[tuple[int, ...]]:
    """Canonical representatives of encodings modulo output relabeling.

    The representative is the lexicographically least tuple over all d!
    output permutations. For d=3 there are (3^9 + 3)/6 = 3281 classes.
    """
    if d != 3:
        raise ValueError("canonical enumeration is implemented for d=3 only")
    n = d * d
    perms = list(permutations(range(d)))
    reps = set()
    for idx in range(d**n):
        f = tuple((idx // d**k) % d for k in range(n))
        reps.add(min(tuple(p[v] for v in f) for p in perms))
    return sorted(reps)


@dataclass(frozen=True)
class ClassicalMaxResult:
    d: int
    value: Fraction
    win_count: int
    total_count: int
    class_count: int
    best_alice: tuple[int, ...]
    best_bob: tuple[int, ...]
    maximizer_count: int
    includes_first_coordinate_pair: bool

    @property
    def value_float(self) -> float:
        return float(self.value)


def classical_exact_max(d: int = 3) -> ClassicalMaxResult:
    """Exact best-response maximum over all deterministic strategy classes.

    Both encodings are reduced to canonical classes modulo message
    relabeling (the decoder absorbs relabelings); outcome counts come from
    per-class histograms over the separable forms of the winning condition,
    combined by cyclic convolution.
    """
    if d != 3:
        raise ValueError("exact enumeration is implemented for d=3 only")
    classes = canonical_classes(d)
    n_cls = len(classes)
    expected = (d ** (d * d) + 3) // 6
    if n_cls != expected:
        raise AssertionError(f"class count {n_cls} != Burnside count {expected}")

    fa = _alice_forms(d)
    fb = _bob_forms(d)
    cls_arr = np.asarray(classes, dtype=np.int64)  # (n_cls, 9)

    def histograms(forms: np.ndarray) -> np.ndarray:
        h = np.zeros((n_cls, d + 1, d, d), dtype=np.float32)
        for z in range(d + 1):
            fz = forms[z]
            for lab in range(d * d):
                np.add.at(h[:, z], (np.arange(n_cls), cls_arr[:, lab], np.full(n_cls, fz[lab])), 1.0)
        return h

    ha = histograms(fa)
    hb = histograms(fb)

    total = np.zeros((n_cls, n_cls), dtype=np.float32)
    for z in range(d + 1):
        for ma in range(d):
            for mb in range(d):
                a = ha[:, z, ma, :]  # (n_cls, d)
                b = hb[:, z, mb, :]
                best = None
                for c in range(d):
                    if z == d:
                        bc = np.stack([b[:, (aa - c) % d] for aa in range(d)], axis=1)
                    else:
                        bc = np.stack([b[:, (c - aa) % d] for aa in range(d)], axis=1)
                    ncount = a @ bc.T
                    best = ncount if best is None else np.maximum(best, ncount)
                total += best

    win = int(total.max())
    denom = d**4 * (d + 1)
    arg = np.argwhere(total == total.max())
    ai, bi = (int(arg[0][0]), int(arg[0][1]))

    first_coord = tuple(i // d for i in range(d * d))  # f(x) = x0
    perms = list(permutations(range(d)))
    canon_first = min({tuple(p[v] for v in first_coord) for p in perms})
    fc_idx = classes.index(canon_first)
    includes = bool(np.isclose(total[fc_idx, fc_idx], win))

    return ClassicalMaxResult(
        d=d,
        value=Fraction(win, denom),
        win_count=win,
        total_count=denom,
        class_count=n_cls,
        best_alice=classes[ai],
        best_bob=classes[bi],
        maximizer_count=int(arg.shape[0]),
        includes_first_coordinate_pair=includes,
    )


# --- noise threshold -------------------------------------------------------


def noise_threshold(
    spec: GameSpec,
    strategy: QuantumStrategy,
    bound: float,
    tol: float = 1e-10,
) -> float:
    """Largest noise rate nu keeping the isotropic mixture above the bound.

    The score is affine in nu, so bisection converges to the crossing point
    up to arithmetic error.
    """
    s0 = score_quantum(spec, strategy)
    if s0 <= bound:
        raise ValueError("strategy does not violate the bound at nu = 0")
    d = spec.d
    mixed = DensityMatrix(d, d, np.eye(d * d) / (d * d))
    s1 = score_quantum(spec, QuantumStrategy(mixed, strategy.alice, strategy.bob, strategy.measurements))

    def value(nu: float) -> float:
        return (1 - nu) * s0 + nu * s1

    if value(1.0) > bound:
        return 1.0
    lo, hi = 0.0, 1.0
    while hi - lo > tol:
        mid = (lo + hi) / 2
        if value(mid) > bound:
            lo = mid
        else:
            hi = mid
    return lo
