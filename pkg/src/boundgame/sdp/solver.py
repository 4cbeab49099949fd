"""Primal-dual interior-point solver.

Canonical form (internal): minimize <C, X> subject to <A_k, X> = b_k and X
in a product of PSD and nonnegative-diagonal cones. Infeasible start,
Nesterov-Todd scaling, Mehrotra predictor-corrector, dense per-block linear
algebra. Deterministic: no randomness anywhere in the iteration.
"""

from __future__ import annotations

import numpy as np
import scipy.linalg as sla

from .program import ConicProgram, SdpSolution, _BlockData, _entries_to_blocks

DEFAULT_TOL = 1e-9
MAX_ITER = 150
STEP_FRACTION = 0.98


class SolverFailure(Exception):
    """Raised when a solve that was required to reach optimality did not."""


def _chol(x):
    """Lower Cholesky factor, robust at the cone boundary.

    When the plain factorization fails from rounding, eigenvalues are
    clipped to a relative floor and the factor is re-triangularized by QR,
    so callers always get a usable triangular factor of a nearby PD matrix.
    """
    try:
        return sla.cholesky(x, lower=True, check_finite=False)
    except np.linalg.LinAlgError:
        vals, vecs = np.linalg.eigh((x + x.T) / 2)
        floor = max(vals[-1], 1.0) * 1e-14
        vals = np.clip(vals, floor, None)
        f = vecs * np.sqrt(vals)
        _, r = np.linalg.qr(f.T)
        lower = r.T
        signs = np.sign(np.diag(lower))
        signs[signs == 0] = 1.0
        return lower * signs


def _svd(z):
    """SVD with a fallback from the divide-and-conquer driver to the
    classic one, which converges where gesdd occasionally gives up."""
    try:
        return sla.svd(z, check_finite=False)
    except np.linalg.LinAlgError:
        return sla.svd(z, check_finite=False, lapack_driver="gesvd")


def _nt_scaling(x, s):
    """W with W S W = X, via Cholesky factors and an SVD coupling."""
    lx = _chol(x)
    ls = _chol(s)
    z = ls.T @ lx
    u, sig, vt = _svd(z)
    r = lx @ vt.T / np.sqrt(sig)
    return r @ r.T


def _max_step_psd(x, delta, lx=None):
    """Largest alpha with X + alpha * Delta PSD (inf -> 10)."""
    if lx is None:
        lx = _chol(x)
    t = sla.solve_triangular(lx, delta, lower=True, check_finite=False)
    t = sla.solve_triangular(lx, t.T, lower=True, check_finite=False)
    lam = float(np.min(sla.eigvalsh((t + t.T) / 2, check_finite=False)))
    return 10.0 if lam >= -1e-16 else -1.0 / lam


def _max_step_diag(x, delta):
    neg = delta < 0
    if not np.any(neg):
        return 10.0
    return float(np.min(-x[neg] / delta[neg]))


def _dot(xs, ys):
    return float(sum(np.sum(x * y) for x, y in zip(xs, ys)))


def solve(prog: ConicProgram, tol: float = DEFAULT_TOL, max_iter: int = MAX_ITER, verbose: bool = False) -> SdpSolution:
    """Solve to relative gap and feasibility residuals <= tol.

    Status is 'optimal' only when all three criteria hold; stalls are
    reported as 'numerical-limit' (never silently wrong), divergence of the
    multipliers with a near-feasible dual as 'infeasible'.
    """
    m = prog.n_constraints
    c_blocks = _entries_to_blocks(prog.block_sizes, prog.obj_entries)
    data = [
        _BlockData(
            size,
            m,
            [[(i, j, v) for (_b, i, j, v) in row if _b == bi] for row in prog.con_entries],
            c_blocks[bi],
        )
        for bi, size in enumerate(prog.block_sizes)
    ]
    b = np.asarray(prog.rhs, dtype=float)
    return solve_core(data, b, prog.sense, tol=tol, max_iter=max_iter, verbose=verbose)


def solve_core(
    data: list[_BlockData],
    b: np.ndarray,
    sense: str,
    tol: float = DEFAULT_TOL,
    max_iter: int = MAX_ITER,
    verbose: bool = False,
) -> SdpSolution:
    """Run the interior-point iteration on compiled block data.

    The objective blocks inside `data` carry the user-sense objective;
    `data` is consumed (rescaled in place).
    """
    m = len(b)
    sign = 1.0 if sense == "min" else -1.0
    c_blocks = [sign * d.c for d in data]

    # Row scaling improves conditioning; exact solution is unchanged.
    row_norm = np.sqrt(sum(d.row_norms_sq() for d in data))
    row_scale = np.where(row_norm > 0, row_norm, 1.0)
    for d in data:
        d.rescale_rows(1.0 / row_scale)
    b_s = b / row_scale

    c_norm = max(1.0, np.sqrt(sum(float(np.sum(c * c)) for c in c_blocks)))
    c_s = [c / c_norm for c in c_blocks]

    sizes = [d.n for d in data]
    is_diag = [d.is_diag for d in data]
    nu_total = sum(sizes)

    beta = max(10.0, np.sqrt(nu_total), float(np.max(np.abs(b_s))) * np.sqrt(nu_total) if m else 10.0)
    eta = max(10.0, np.sqrt(nu_total))
    x = [np.full(n, beta) if dg else beta * np.eye(n) for n, dg in zip(sizes, is_diag)]
    s = [np.full(n, eta) if dg else eta * np.eye(n) for n, dg in zip(sizes, is_diag)]
    y = np.zeros(m)

    def apply_a(xs):
        out = np.zeros(m)
        for d, xb in zip(data, xs):
            out += d.apply_a(xb)
        return out

    def apply_at(yv):
        return [d.apply_at(yv) for d in data]

    # convergence is measured in the user's units, not the scaled ones
    b_ref = 1.0 + float(np.linalg.norm(b))
    c_ref = 1.0 + c_norm

    best = None
    status = "numerical-limit"
    reason = "max iterations"
    iters_done = 0
    mu_hist: list[float] = []
    since_improve = 0

    for it in range(max_iter):
        iters_done = it + 1
        rp = b_s - apply_a(x)
        at_y = apply_at(y)
        rd = [c - sb - ab for c, sb, ab in zip(c_s, s, at_y)]
        mu = _dot(x, s) / nu_total

        pobj = _dot(c_s, x)
        dobj = float(b_s @ y)
        pobj_u, dobj_u = pobj * c_norm, dobj * c_norm
        gap = abs(pobj_u - dobj_u) / (1 + abs(pobj_u) + abs(dobj_u))
        pinf = float(np.linalg.norm(rp * row_scale)) / b_ref
        dinf = np.sqrt(sum(float(np.sum(r * r)) for r in rd)) * c_norm / c_ref

        if verbose:
            print(f"  it={it:3d} mu={mu:.3e} gap={gap:.3e} pinf={pinf:.3e} dinf={dinf:.3e}")

        snapshot = (gap, pinf, dinf, pobj, dobj, [xb.copy() for xb in x], y.copy(), [sb.copy() for sb in s])
        score_now = gap + pinf + dinf
        if best is None or score_now < (best[0] + best[1] + best[2]):
            improved = best is None or score_now < 0.97 * (best[0] + best[1] + best[2])
            best = snapshot
            since_improve = 0 if improved else since_improve + 1
        else:
            since_improve += 1
        if since_improve >= 8:
            reason = "no progress"
            break

        if gap <= tol and pinf <= tol and dinf <= tol:
            status = "optimal"
            reason = "converged"
            break

        if float(np.linalg.norm(y)) > 1e12 and dinf < 1e-7 and abs(dobj_u) > 1e9:
            status = "infeasible"
            break

        mu_hist.append(mu)
        if len(mu_hist) > 30 and mu_hist[-1] > 0.9 * mu_hist[-10]:
            reason = "mu stalled"
            break

        # NT scaling: W = R R' with R' S R = R^{-1} X R^{-T} = diag(signt)
        w, sinv, lx_f, ls_f, r_fac, r_inv, signt = [], [], [], [], [], [], []
        try:
            for xb, sb, dg in zip(x, s, is_diag):
                if dg:
                    w.append(np.sqrt(xb / sb))
                    sinv.append(1.0 / sb)
                    lx_f.append(None)
                    ls_f.append(None)
                    r_fac.append(None)
                    r_inv.append(None)
                    signt.append(None)
                else:
                    lxb = _chol(xb)
                    lsb = _chol(sb)
                    z = lsb.T @ lxb
                    u, sig, vt = _svd(z)
                    r = lxb @ vt.T / np.sqrt(sig)
                    lx_inv = sla.solve_triangular(lxb, np.eye(len(sb)), lower=True, check_finite=False)
                    rinv = np.sqrt(sig)[:, None] * (vt @ lx_inv)
                    w.append(r @ r.T)
                    sinv.append(sla.cho_solve((lsb, True), np.eye(len(sb)), check_finite=False))
                    lx_f.append(lxb)
                    ls_f.append(lsb)
                    r_fac.append(r)
                    r_inv.append(rinv)
                    signt.append(sig)
        except np.linalg.LinAlgError:
            reason = "cone factorization failed"
            break

        schur = np.zeros((m, m))
        for d, wb in zip(data, w):
            schur += d.schur(wb)
        schur = (schur + schur.T) / 2

        cho = _factor_with_jitter(schur)
        if cho is None:
            reason = "schur factorization failed"
            break

        def schur_solve(rhs):
            """Factor-backed solve with one round of iterative refinement."""
            dy = sla.cho_solve(cho, rhs, check_finite=False)
            resid = rhs - schur @ dy
            dy += sla.cho_solve(cho, resid, check_finite=False)
            return dy

        def solve_newton(v_target):
            """Direction from A(W A*(dy) W) = rp - A(V) + A(W Rd W)."""
            wrw = [
                (wb * rb * wb if dg else wb @ rb @ wb)
                for wb, rb, dg in zip(w, rd, is_diag)
            ]
            rhs = rp - apply_a(v_target) + apply_a(wrw)
            dy = schur_solve(rhs)
            at_dy = apply_at(dy)
            ds = [rb - ab for rb, ab in zip(rd, at_dy)]
            dx = []
            for vb, wb, db, dg in zip(v_target, w, ds, is_diag):
                if dg:
                    dx.append(vb - wb * db * wb)
                else:
                    t = wb @ db @ wb
                    dx.append(vb - (t + t.T) / 2)
            return dx, dy, ds

        # Predictor (affine scaling step toward mu = 0)
        v_aff = [-xb for xb in x]
        dx_a, dy_a, ds_a = solve_newton(v_aff)

        ap = _step_length(x, dx_a, is_diag, lx_f, 1.0)
        ad = _step_length(s, ds_a, is_diag, ls_f, 1.0)
        gap_aff = sum(
            float(np.sum((xb + ap * dxb) * (sb + ad * dsb)))
            for xb, dxb, sb, dsb in zip(x, dx_a, s, ds_a)
        )
        sigma = min(1.0, max(1e-10, (max(gap_aff, 0.0) / (mu * nu_total)) ** 3))

        # Mehrotra corrector: the second-order term is mapped through the
        # NT scaling and the Lyapunov operator of the scaled point, which is
        # diagonal there (L_V^{-1}(K)_ij = 2 K_ij / (sig_i + sig_j)).
        def corrector(sig):
            v_corr = []
            for bi, (xb, sinvb, dxb, dsb, dg) in enumerate(zip(x, sinv, dx_a, ds_a, is_diag)):
                if dg:
                    v_corr.append(sig * mu * sinvb - xb - sinvb * dsb * dxb)
                else:
                    r, rinv, sg = r_fac[bi], r_inv[bi], signt[bi]
                    dx_hat = rinv @ dxb @ rinv.T
                    ds_hat = r.T @ dsb @ r
                    cross = dx_hat @ ds_hat
                    cross = (cross + cross.T) / (sg[:, None] + sg[None, :])
                    v_corr.append(sig * mu * sinvb - xb - r @ cross @ r.T)
            return solve_newton(v_corr)

        dx, dy, ds = corrector(sigma)
        ap = _step_length(x, dx, is_diag, lx_f, STEP_FRACTION)
        ad = _step_length(s, ds, is_diag, ls_f, STEP_FRACTION)
        if min(ap, ad) < 0.05 and sigma < 0.5:
            # steps collapsed: fall back to a centering step
            dx, dy, ds = corrector(0.8)
            ap = _step_length(x, dx, is_diag, lx_f, STEP_FRACTION)
            ad = _step_length(s, ds, is_diag, ls_f, STEP_FRACTION)
        if min(ap, ad) < 1e-10:
            reason = "step collapse"
            break

        x = [xb + ap * dxb for xb, dxb in zip(x, dx)]
        s = [sb + ad * dsb for sb, dsb in zip(s, ds)]
        y = y + ad * dy

    gap, pinf, dinf, pobj, dobj, xs, ys, ss = best
    if status != "infeasible" and gap <= tol and pinf <= tol and dinf <= tol:
        status = "optimal"
        reason = "converged"

    # Undo scaling; map back to the user's sense. The slack blocks satisfy
    # C - A*(y) = S for min problems and A*(y) - C = S for max problems.
    primal_internal = pobj * c_norm
    dual_internal = dobj * c_norm
    y_user = sign * (ys / row_scale) * c_norm
    s_user = [sb * c_norm for sb in ss]
    return SdpSolution(
        sense=sense,
        status=status,
        primal_value=sign * primal_internal,
        dual_value=sign * dual_internal,
        primal_blocks=xs,
        dual_multipliers=y_user,
        dual_slack_blocks=s_user,
        gap=gap,
        primal_residual=pinf,
        dual_residual=dinf,
        iterations=iters_done,
        stop_reason=reason,
    )


def _step_length(blocks, deltas, is_diag, factors, fraction):
    alpha = 1.0 / fraction if fraction else 1.0
    for xb, db, dg, f in zip(blocks, deltas, is_diag, factors):
        step = _max_step_diag(xb, db) if dg else _max_step_psd(xb, db, f)
        alpha = min(alpha, step)
    return min(1.0, fraction * alpha) if fraction < 1.0 else min(1.0, alpha)


def _factor_with_jitter(schur):
    jitter = 0.0
    scale = float(np.max(np.abs(np.diag(schur)))) or 1.0
    for _ in range(6):
        try:
            mat = schur if jitter == 0.0 else schur + jitter * np.eye(len(schur))
            return sla.cho_factor(mat, lower=True, check_finite=False)
        except np.linalg.LinAlgError:
            jitter = max(jitter * 100, 1e-14 * scale)
    return None


def solve_required(
    prog: ConicProgram,
    tol: float = DEFAULT_TOL,
    max_iter: int = MAX_ITER,
    slack: float = 1.0,
) -> SdpSolution:
    """solve() that raises SolverFailure unless the result is usable.

    A stalled solve is still accepted when every residual lies within
    slack * tol; callers that can tolerate near-optimal points (the seesaw
    half-steps) pass slack > 1.
    """
    sol = solve(prog, tol=tol, max_iter=max_iter)
    if sol.optimal:
        return sol
    band = slack * tol
    if sol.status != "infeasible" and max(sol.gap, sol.primal_residual, sol.dual_residual) <= band:
        return sol
    raise SolverFailure(
        f"solver stopped with status {sol.status}: gap={sol.gap:.2e} "
        f"pinf={sol.primal_residual:.2e} dinf={sol.dual_residual:.2e}"
    )
