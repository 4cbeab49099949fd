"""Primal bound and dual certificate for the reduced relaxation.

The paper-facing primal maximizes (1/(d+1)) sum_z q(0|z) over the unknowns
subject to G-bar(vars) >= 0 and per-z normalization. The engine solves the
conic dual of that statement, which simultaneously returns the optimizing
assignment (as equality multipliers) and the certificate blocks Y^(l) with
normalization multipliers nu_z. Certificate verification is independent
arithmetic: eigendecompositions and explicit constraint residuals only.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from ..sdp.program import ConicProgram, _BlockData
from ..sdp.solver import DEFAULT_TOL, solve_core, solve_required
from .blockdiag import BlockDiagonalizer, block_diagonalize
from .reduced import ReducedMomentModel, build_reduced_model


@dataclass
class DualCertificate:
    d: int
    reduced: bool
    seed: int
    blocks: list  # PSD blocks Y^(l)
    nu: np.ndarray  # one multiplier per measurement setting
    objective: float
    residuals: dict = field(default_factory=dict)


@dataclass
class RelaxationResult:
    d: int
    primal_value: float
    dual_value: float
    assignment: dict
    certificate: DualCertificate
    gap: float
    block_sizes: list
    fallback: bool


def _free_unknowns(model: ReducedMomentModel):
    """Unknowns left after substituting q(0|z) = 1 - sum_{ct>=1} q(ct|z).

    Eliminating the normalization rows keeps the engine-dual interior
    nonempty; a paired-slack encoding of the equalities would force its
    dual slacks to zero identically and destroy the central path.
    """
    return [k for k in model.unknowns if not (isinstance(k, tuple) and k[2] == 0)]


def _engine_data(model: ReducedMomentModel, diag: BlockDiagonalizer):
    """Compile the relaxation into solver block data.

    Engine primal: minimize <G0', Y> subject to one equality row per free
    unknown, where G0' absorbs the substituted q(0|z) structure matrices.
    The engine dual side is exactly the paper-facing primal (shifted by the
    constant 1); the engine primal solution is the certificate.
    """
    d = model.d
    free = _free_unknowns(model)
    m = len(free)

    g0_shift = model.constant_matrix()
    for z in range(d + 1):
        g0_shift = g0_shift + model.structure[("q", z, 0)]
    g0_parts = diag.transform_matrix(g0_shift)

    b = np.zeros(m)
    coef_parts = []
    for k, key in enumerate(free):
        coef = model.coefficient_matrix(key)
        if isinstance(key, tuple):
            coef = coef - model.structure[("q", key[1], 0)]
            b[k] = -1.0 / (d + 1)
        coef_parts.append(diag.transform_matrix(coef))

    data = []
    basis = []
    for li in range(len(diag.block_slices)):
        stack = np.stack([-parts[li] for parts in coef_parts])
        stack = (stack + stack.transpose(0, 2, 1)) / 2
        c_block = (g0_parts[li] + g0_parts[li].T) / 2
        # Directions touched by no data matrix carry a zero operator for
        # every feasible point; dropping them restores a strict interior.
        gram = c_block @ c_block + np.einsum("kab,kcb->ac", stack, stack)
        vals, vecs = np.linalg.eigh(gram)
        scale = max(float(vals[-1]), 1e-300)
        keep = vecs[:, vals > 1e-16 * scale]
        if keep.shape[1] == 0:
            continue
        stack = np.matmul(np.matmul(keep.T, stack), keep)
        stack = (stack + stack.transpose(0, 2, 1)) / 2
        c_block = keep.T @ c_block @ keep
        c_block = (c_block + c_block.T) / 2
        data.append(_BlockData.from_stack(m, stack, c_block))
        basis.append((li, keep))
    return data, b, basis


def solve_relaxation(
    d: int,
    use_blocks: bool | None = None,
    seed: int = 0,
    tol: float = DEFAULT_TOL,
) -> RelaxationResult:
    """Solve the reduced relaxation, returning assignment and certificate.

    use_blocks defaults to False for d=3 (the unreduced minor is cheap) and
    True for d=5,7 where block reduction is required for tractability.
    """
    model = build_reduced_model(d)
    if use_blocks is None:
        use_blocks = d > 3
    if use_blocks:
        diag = block_diagonalize(model, seed=seed)
    else:
        diag = _identity_diagonalizer(model, seed)
    data, b, basis = _engine_data(model, diag)
    sol = solve_core(data, b, "min", tol=tol)
    if sol.status == "numerical-limit" and max(sol.gap, sol.primal_residual, sol.dual_residual) > 100 * tol:
        raise RuntimeError(
            f"relaxation solve stalled: gap={sol.gap:.2e} pinf={sol.primal_residual:.2e}"
        )

    # undo the q(0|z) substitution: both values shift by the constant 1
    free = _free_unknowns(model)
    y = sol.dual_multipliers
    q = np.zeros((d + 1, d))
    assignment = {"delta_rho": float(y[0]), "delta_sigma": float(y[1])}
    for k, key in enumerate(free):
        if isinstance(key, tuple):
            q[key[1], key[2]] = y[k]
    for z in range(d + 1):
        q[z, 0] = 1.0 - q[z, 1:].sum()
    assignment["q"] = q

    # expand the solved blocks back to the full block coordinates
    y_blocks = [np.zeros((len(ix), len(ix))) for ix in diag.block_slices]
    for (li, keep), blk in zip(basis, sol.primal_blocks):
        y_blocks[li] = keep @ np.asarray(blk) @ keep.T
    nu = np.empty(d + 1)
    for z in range(d + 1):
        parts = diag.transform_matrix(model.structure[("q", z, 0)])
        nu[z] = 1.0 / (d + 1) + sum(float(np.sum(yb * p)) for yb, p in zip(y_blocks, parts))
    dual_value = 1.0 + float(sol.primal_value)
    cert = DualCertificate(
        d=d,
        reduced=bool(use_blocks),
        seed=seed,
        blocks=y_blocks,
        nu=nu,
        objective=dual_value,
        residuals={
            "solver_gap": float(sol.gap),
            "solver_primal_residual": float(sol.primal_residual),
            "solver_dual_residual": float(sol.dual_residual),
        },
    )
    return RelaxationResult(
        d=d,
        primal_value=1.0 + float(sol.dual_value),
        dual_value=dual_value,
        assignment=assignment,
        certificate=cert,
        gap=float(sol.gap),
        block_sizes=diag.block_sizes,
        fallback=diag.fallback,
    )


def solve_primal(d: int, use_blocks: bool | None = None, seed: int = 0, tol: float = DEFAULT_TOL):
    """Optimal value and (Delta_rho, Delta_sigma, q) assignment."""
    res = solve_relaxation(d, use_blocks=use_blocks, seed=seed, tol=tol)
    return res.primal_value, res.assignment


def solve_dual(d: int, use_blocks: bool | None = None, seed: int = 0, tol: float = DEFAULT_TOL) -> DualCertificate:
    """Feasible dual certificate whose objective upper-bounds the game value."""
    return solve_relaxation(d, use_blocks=use_blocks, seed=seed, tol=tol).certificate


def relaxation_program(d: int, use_blocks: bool | None = None, seed: int = 0) -> ConicProgram:
    """The relaxation as a plain conic program (for SDPA export).

    Encodes the engine-primal side; its optimal value is the game bound
    minus the substitution constant 1 (so d=3 solves to -1/2 as a min,
    i.e. +1/2 after the exporter's sign normalization).
    """
    model = build_reduced_model(d)
    if use_blocks is None:
        use_blocks = d > 3
    if use_blocks:
        diag = block_diagonalize(model, seed=seed)
    else:
        diag = _identity_diagonalizer(model, seed)
    data, b, _basis = _engine_data(model, diag)
    prog = ConicProgram("min", [bd.n for bd in data])
    for blk, bd in enumerate(data):
        for i, j in zip(*np.nonzero(np.triu(bd.c))):
            prog.add_objective(blk, int(i), int(j), float(bd.c[i, j]))
    for k in range(len(b)):
        entries = []
        for blk, bd in enumerate(data):
            mat = bd.stack[k]
            for i, j in zip(*np.nonzero(np.triu(mat))):
                entries.append((blk, int(i), int(j), float(mat[i, j])))
        prog.add_constraint(entries, float(b[k]))
    return prog


def _identity_diagonalizer(model: ReducedMomentModel, seed: int) -> BlockDiagonalizer:
    return BlockDiagonalizer(
        transform=np.eye(model.size),
        block_slices=[np.arange(model.size)],
        leakage=0.0,
        fallback=False,
        seed=seed,
    )


# --- certificate verification ----------------------------------------------

PSD_TOL = 1e-9
EQ_TOL = 1e-8


@dataclass
class VerificationReport:
    ok: bool
    certified_bound: float
    objective: float
    min_eigs: list
    max_equality_residual: float
    failures: list

    def to_dict(self):
        return {
            "ok": self.ok,
            "certified_bound": self.certified_bound,
            "objective": self.objective,
            "min_eigs": [float(v) for v in self.min_eigs],
            "max_equality_residual": self.max_equality_residual,
            "failures": list(self.failures),
        }


def verify_certificate(cert: DualCertificate, d: int | None = None) -> VerificationReport:
    """Re-check a certificate with independent arithmetic.

    PSD of every block via eigendecomposition, every dual equality
    constraint against the rebuilt structure matrices, and the objective
    recomputed from scratch. The certified bound adds a conservative slack:
    equality residuals weighted by a priori caps on the primal unknowns
    (|q| <= sqrt(d), |Delta| <= 1 from PSD minors of G-bar) plus any
    negative eigenvalue mass times a trace cap on G-bar.
    """
    d = cert.d if d is None else d
    model = build_reduced_model(d)
    if cert.reduced:
        diag = block_diagonalize(model, seed=cert.seed)
    else:
        diag = _identity_diagonalizer(model, cert.seed)
    if len(diag.block_slices) != len(cert.blocks):
        return VerificationReport(False, np.inf, cert.objective, [], np.inf, ["block structure mismatch"])

    failures = []
    min_eigs = []
    neg_mass = 0.0
    for li, y in enumerate(cert.blocks):
        y = np.asarray(y)
        if y.shape[0] != len(diag.block_slices[li]):
            failures.append(f"block {li} has wrong size")
            min_eigs.append(float("nan"))
            continue
        evs = np.linalg.eigvalsh((y + y.T) / 2)
        min_eigs.append(float(evs[0]))
        neg_mass += float(np.sum(np.abs(evs[evs < 0])))
        if evs[0] < -PSD_TOL:
            failures.append(f"block {li} min eigenvalue {evs[0]:.3e}")

    def pair(key):
        parts = diag.transform_matrix(model.coefficient_matrix(key))
        return sum(float(np.sum(np.asarray(y) * p)) for y, p in zip(cert.blocks, parts))

    residuals = {}
    max_res = 0.0
    for z in range(d + 1):
        for ct in range(d):
            target = cert.nu[z] - (1.0 / (d + 1) if ct == 0 else 0.0)
            r = pair(("q", z, ct)) - target
            residuals[f"q({ct}|{z})"] = r
            max_res = max(max_res, abs(r))
            if abs(r) > EQ_TOL:
                failures.append(f"dual equality q({ct}|{z}) residual {r:.3e}")
    for name in ("delta_rho", "delta_sigma"):
        r = pair(name)
        residuals[name] = r
        max_res = max(max_res, abs(r))
        if abs(r) > EQ_TOL:
            failures.append(f"dual equality {name} residual {r:.3e}")

    g0_parts = diag.transform_matrix(model.constant_matrix())
    objective = sum(float(np.sum(np.asarray(y) * p)) for y, p in zip(cert.blocks, g0_parts))
    objective += float(np.sum(cert.nu))
    if abs(objective - cert.objective) > 1e-7 * (1 + abs(cert.objective)):
        failures.append(f"stored objective {cert.objective} != recomputed {objective}")

    cap_q = np.sqrt(d)
    cap_delta = 1.0
    trace_cap = d**3 * (d + 2)  # tr(G-bar) at any feasible point
    slack = 0.0
    for key, r in residuals.items():
        cap = cap_delta if key.startswith("delta") else cap_q
        slack += abs(r) * cap
    slack += neg_mass * trace_cap
    certified = objective + slack
    return VerificationReport(
        ok=not failures,
        certified_bound=float(certified),
        objective=float(objective),
        min_eigs=min_eigs,
        max_equality_residual=float(max_res),
        failures=failures,
    )


# --- JSON persistence -------------------------------------------------------


def certificate_to_json(cert: DualCertificate) -> str:
    payload = {
        "d": cert.d,
        "reduced": cert.reduced,
        "seed": cert.seed,
        "blocks": [np.asarray(b).tolist() for b in cert.blocks],
        "nu": np.asarray(cert.nu).tolist(),
        "objective": cert.objective,
        "residuals": cert.residuals,
    }
    return json.dumps(payload)


def certificate_from_json(text: str) -> DualCertificate:
    raw = json.loads(text)
    return DualCertificate(
        d=int(raw["d"]),
        reduced=bool(raw["reduced"]),
        seed=int(raw["seed"]),
        blocks=[np.asarray(b, dtype=float) for b in raw["blocks"]],
        nu=np.asarray(raw["nu"], dtype=float),
        objective=float(raw["objective"]),
        residuals=dict(raw.get("residuals", {})),
    )
