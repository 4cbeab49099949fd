"""Alternating convex search over PPT states and measurements.

Encodings stay fixed to the Weyl-Heisenberg unitaries; the state step and
the measurement steps are each semidefinite programs, iterated until the
game value converges. Restarts draw random product projective measurements.
"""

from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from . import game as game_mod
from .game import GameSpec, QuantumStrategy, encoded_states, game_operator, winning_table
from .qobjects import DensityMatrix, Povm, UnitaryFamily, encoding_unitaries
from .sdp.program import ConicProgram
from .sdp.solver import DEFAULT_TOL, SolverFailure, solve_required

# stalled half-step solves are usable when residuals sit within this band
_STALL_SLACK = 50.0


# --- embedded-program assembly --------------------------------------------


def _hermitian_units(n: int):
    """Index descriptors (p, q, kind) for the n^2 Hermitian matrix units."""
    units = []
    for p in range(n):
        units.append((p, p, "diag"))
    for p in range(n):
        for q in range(p + 1, n):
            units.append((p, q, "re"))
            units.append((p, q, "im"))
    return units


def _unit_entries(blk: int, p: int, q: int, kind: str, n: int, sign: float = 1.0):
    """Embedded upper-triangle entries of one Hermitian matrix unit.

    The unit matrices are E_pp, (e_pq + e_qp), and i(e_qp - e_pq); their
    embeddings have two entries each in the [[Re, -Im], [Im, Re]] layout.
    """
    if kind == "diag":
        return [(blk, p, p, sign), (blk, n + p, n + p, sign)]
    if kind == "re":
        return [(blk, p, q, sign), (blk, n + p, n + q, sign)]
    return [(blk, p, n + q, -sign), (blk, q, n + p, sign)]


def _unit_value(h: np.ndarray, p: int, q: int, kind: str) -> float:
    if kind == "diag":
        return float(h[p, p].real)
    if kind == "re":
        return float(h[p, q].real)
    return float(h[p, q].imag)


def _pt_index(p: int, d: int) -> tuple[int, int]:
    return divmod(p, d)


@lru_cache(maxsize=None)
def _ppt_tie_rows(d: int):
    """Constraint rows equating block 1 with the partial transpose of block 0.

    One row per Hermitian degree of freedom: the (p, q) component of the
    transposed block equals the (p', q') component of the state block, where
    (p', q') swaps the first-factor indices. For p != q the images p', q'
    never coincide, so the unit kinds map one-to-one (with a sign flip when
    the image pair comes out reversed for an imaginary unit).
    """
    n = d * d
    rows = []
    for p, q, kind in _hermitian_units(n):
        a, b = _pt_index(p, d)
        c, e = _pt_index(q, d)
        pp, qq = c * d + b, a * d + e
        sign = 1.0
        if pp > qq:
            pp, qq = qq, pp
            if kind == "im":
                sign = -1.0
        entries = _unit_entries(1, p, q, kind, n) + _unit_entries(0, pp, qq, kind, n, sign=-sign)
        rows.append(entries)
    return rows


def _objective_entries(blk: int, g: np.ndarray, n: int):
    """Entries of embed(g)/2 so the program value equals Re tr(g X_complex)."""
    out = []
    re = g.real
    im = g.imag
    for p in range(n):
        v = re[p, p] / 2
        if v:
            out.append((blk, p, p, v))
            out.append((blk, n + p, n + p, v))
        for q in range(p + 1, n):
            v = re[p, q] / 2
            if v:
                out.append((blk, p, q, v))
                out.append((blk, n + p, n + q, v))
            w = im[p, q] / 2
            if w:
                out.append((blk, p, n + q, -w))
                out.append((blk, q, n + p, w))
    return out


def state_program(d: int, g: np.ndarray) -> ConicProgram:
    """maximize Re tr(g Psi) over unit-trace PSD Psi with PSD partial transpose."""
    n = d * d
    prog = ConicProgram("max", [2 * n, 2 * n])
    for entry in _objective_entries(0, g, n):
        prog.add_objective(*entry)
    prog.add_constraint([(0, i, i, 0.5) for i in range(2 * n)], 1.0)
    for row in _ppt_tie_rows(d):
        prog.add_constraint(row, 0.0)
    return prog


def measurement_program(d: int, f_ops: list[np.ndarray]) -> ConicProgram:
    """maximize sum_c Re tr(f_c M_c) over POVMs (M_c PSD, summing to identity)."""
    n = d * d
    prog = ConicProgram("max", [2 * n] * d)
    for c, f in enumerate(f_ops):
        for entry in _objective_entries(c, f, n):
            prog.add_objective(*entry)
    for p, q, kind in _hermitian_units(n):
        entries = []
        for c in range(d):
            entries.extend(_unit_entries(c, p, q, kind, n))
        rhs = 2.0 if (kind == "diag" and p == q) else 0.0
        prog.add_constraint(entries, rhs)
    return prog


def _unembed_block(x: np.ndarray) -> np.ndarray:
    n = x.shape[0] // 2
    re = (x[:n, :n] + x[n:, n:]) / 2
    im = (x[n:, :n] - x[:n, n:]) / 2
    h = re + 1j * im
    return (h + h.conj().T) / 2


def _clean_state(h: np.ndarray, d: int) -> DensityMatrix:
    vals, vecs = np.linalg.eigh(h)
    vals = np.clip(vals, 0.0, None)
    m = (vecs * vals) @ vecs.conj().T
    m /= np.trace(m).real
    m = (m + m.conj().T) / 2
    return DensityMatrix(d, d, m)


def _clean_povm(z: int, effects: list[np.ndarray]) -> Povm:
    n = effects[0].shape[0]
    cleaned = []
    for e in effects:
        vals, vecs = np.linalg.eigh((e + e.conj().T) / 2)
        vals = np.clip(vals, 0.0, None)
        cleaned.append((vecs * vals) @ vecs.conj().T)
    total = sum(cleaned)
    vals, vecs = np.linalg.eigh(total)
    inv_sqrt = (vecs / np.sqrt(vals)) @ vecs.conj().T
    fixed = [inv_sqrt @ e @ inv_sqrt for e in cleaned]
    fixed = [(e + e.conj().T) / 2 for e in fixed]
    # absorb the remaining machine-epsilon mismatch into the last effect
    resid = np.eye(n) - sum(fixed)
    fixed[-1] = fixed[-1] + resid
    fixed[-1] = (fixed[-1] + fixed[-1].conj().T) / 2
    return Povm(z, tuple(fixed))


def optimize_state(
    d: int,
    measurements,
    encodings: tuple[UnitaryFamily, UnitaryFamily] | None = None,
    solver_tol: float = DEFAULT_TOL,
) -> tuple[DensityMatrix, float]:
    """State half-step: best PPT state for fixed measurements."""
    spec = GameSpec(d)
    alice, bob = encodings if encodings is not None else (encoding_unitaries(d),) * 2
    g = game_operator(spec, alice, bob, measurements)
    sol = solve_required(state_program(d, g), tol=solver_tol, slack=_STALL_SLACK)
    state = _clean_state(_unembed_block(sol.primal_blocks[0]), d)
    return state, sol.primal_value


def optimize_measurements(
    d: int,
    state: DensityMatrix,
    encodings: tuple[UnitaryFamily, UnitaryFamily] | None = None,
    solver_tol: float = DEFAULT_TOL,
) -> tuple[list[Povm], float]:
    """Measurement half-step: the d+1 settings decouple into separate SDPs."""
    spec = GameSpec(d)
    alice, bob = encodings if encodings is not None else (encoding_unitaries(d),) * 2
    encoded = encoded_states(state, alice, bob)
    w = winning_table(d)
    value = 0.0
    povms = []
    for z in range(d + 1):
        f_ops = [(s + s.conj().T) / 2 / spec.n_triples for s in game_mod.outcome_sums(encoded, w, z, d)]
        sol = solve_required(measurement_program(d, f_ops), tol=solver_tol, slack=_STALL_SLACK)
        value += sol.primal_value
        povms.append(_clean_povm(z, [_unembed_block(b) for b in sol.primal_blocks]))
    return povms, value


def random_product_measurements(d: int, rng: np.random.Generator) -> list[Povm]:
    """Projective product measurements from Haar-random local bases.

    M_(c|z) = sum_b P_b x Q_(b-c) mirrors the product structure of the
    known optimum; unbiased POVM starts rarely escape the 1/d plateau.
    """
    povms = []
    for z in range(d + 1):
        ua = _haar(rng, d)
        ub = _haar(rng, d)
        pa = [np.outer(ua[:, b], ua[:, b].conj()) for b in range(d)]
        qb = [np.outer(ub[:, b], ub[:, b].conj()) for b in range(d)]
        effects = []
        for c in range(d):
            m = np.zeros((d * d, d * d), dtype=complex)
            for b in range(d):
                m += np.kron(pa[b], qb[(b - c) % d])
            effects.append(m)
        povms.append(Povm(z, tuple(effects)))
    return povms


def _haar(rng: np.random.Generator, d: int) -> np.ndarray:
    g = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
    q, r = np.linalg.qr(g)
    ph = np.diag(r).copy()
    ph /= np.abs(ph)
    return q * ph


@dataclass(frozen=True)
class SeesawConfig:
    d: int
    restarts: int = 50
    seed: int = 0
    max_rounds: int = 200
    conv_tol: float = 1e-8
    solver_tol: float = 1e-8
    threads: int = 1

    def __post_init__(self):
        if self.restarts < 1:
            raise ValueError("restarts must be >= 1")
        if self.conv_tol <= 0:
            raise ValueError("conv_tol must be positive")


@dataclass
class SeesawResult:
    config: SeesawConfig
    best_value: float
    state: DensityMatrix
    measurements: list[Povm]
    rounds_used: int
    best_restart: int
    value_traces: list[list[float]] = field(repr=False)

    @property
    def best_trace(self) -> list[float]:
        return self.value_traces[self.best_restart]


def _run_restart(args):
    d, restart_seed, max_rounds, conv_tol, solver_tol = args
    rng = np.random.default_rng(np.random.SeedSequence(restart_seed))
    measurements = random_product_measurements(d, rng)
    encodings = (encoding_unitaries(d),) * 2
    trace: list[float] = []
    state = None
    value = -np.inf
    try:
        for _ in range(max_rounds):
            state, _ = optimize_state(d, measurements, encodings, solver_tol)
            measurements, new_value = optimize_measurements(d, state, encodings, solver_tol)
            trace.append(new_value)
            if abs(new_value - value) < conv_tol:
                value = new_value
                break
            value = new_value
    except SolverFailure:
        return None
    return value, state.matrix, [np.stack(m.effects) for m in measurements], trace


def seesaw(config: SeesawConfig) -> SeesawResult:
    """Best strategy over random restarts; deterministic for a fixed seed.

    Restart r uses the child seed spawned from (seed, r), so results do not
    depend on scheduling; ties between restarts break toward the lower index.
    """
    d = config.d
    seeds = [
        np.random.SeedSequence(entropy=config.seed, spawn_key=(r,)).generate_state(1)[0]
        for r in range(config.restarts)
    ]
    jobs = [(d, int(s), config.max_rounds, config.conv_tol, config.solver_tol) for s in seeds]

    if config.threads > 1:
        with ProcessPoolExecutor(max_workers=config.threads) as pool:
            outcomes = list(pool.map(_run_restart, jobs))
    else:
        outcomes = [_run_restart(j) for j in jobs]

    succeeded = [(r, o) for r, o in enumerate(outcomes) if o is not None]
    if not succeeded:
        raise SolverFailure("every seesaw restart failed")

    best_idx, best = succeeded[0]
    for r, o in succeeded[1:]:
        if o[0] > best[0]:
            best_idx, best = r, o
    value, state_mat, effect_stacks, _ = best
    state = DensityMatrix(d, d, state_mat)
    povms = [Povm(z, tuple(stack)) for z, stack in enumerate(effect_stacks)]
    return SeesawResult(
        config=config,
        best_value=value,
        state=state,
        measurements=povms,
        rounds_used=len(best[3]),
        best_restart=best_idx,
        value_traces=[o[3] if o is not None else [] for o in outcomes],
    )


def best_strategy(result: SeesawResult) -> QuantumStrategy:
    fam = encoding_unitaries(result.config.d)
    return QuantumStrategy(result.state, fam, fam, tuple(result.measurements))
