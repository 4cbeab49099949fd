"""Command-line interface.

Subcommands cover the full workflow: state verification, strategy
evaluation, noise sweeps, the seesaw search, the certified relaxation
bound, and the exact classical maximum. Every command honours --json for
machine-readable reports; exit codes are 0 on success, 1 on user error,
2 on numerical failure.
"""

from __future__ import annotations

import csv
import json
import sys
import time

import click
import numpy as np

from . import __version__, game, linalg, seesaw as seesaw_mod, serialize, witness
from . import qobjects as qo
from .relaxation import (
    build_full_moment_matrix,
    certificate_to_json,
    solve_relaxation,
    verify_certificate,
)
from .sdp.program import prune_dependent_rows
from .sdp.solver import SolverFailure, solve


class UserError(click.ClickException):
    exit_code = 1


class NumericalError(click.ClickException):
    exit_code = 2


def _report(command: str, parameters: dict, results: dict, started: float, as_json: bool, lines):
    payload = {
        "command": command,
        "parameters": parameters,
        "results": results,
        "wall_time_s": round(time.time() - started, 3),
        "toolkit_version": __version__,
    }
    if as_json:
        click.echo(json.dumps(payload, indent=1))
    else:
        for line in lines:
            click.echo(line)
        click.echo(f"({payload['wall_time_s']} s)")
    return payload


@click.group()
def main():
    """Bound entanglement in the prepare-and-measure game."""


@main.command("verify-state")
@click.option("--json", "as_json", is_flag=True, help="emit a JSON report")
def cmd_verify_state(as_json):
    """Spectra, rank, PPT verdict, and realignment value of the built-in state."""
    t0 = time.time()
    rho = qo.bound_entangled_state()
    spectrum = linalg.eigh(rho.matrix)
    groups = linalg.group_eigenvalues(spectrum.eigenvalues)
    rank = sum(mult for value, mult in groups if value > 1e-10)
    pt = linalg.partial_transpose(rho.matrix, 3, 3, "A")
    pt_groups = linalg.group_eigenvalues(np.linalg.eigvalsh(pt))
    rep = witness.witness_report(rho)
    results = {
        "spectrum": [{"value": v, "multiplicity": m, "tol": 1e-10} for v, m in groups],
        "partial_transpose_spectrum": [
            {"value": v, "multiplicity": m, "tol": 1e-10} for v, m in pt_groups
        ],
        "rank": rank,
        "ppt": rep.ppt,
        "min_pt_eigenvalue": rep.min_pt_eigenvalue,
        "ccnr": {"value": rep.ccnr_value, "tol": 1e-9},
        "entangled_by_ccnr": rep.entangled_by_ccnr,
    }
    lines = [
        f"spectrum: {', '.join(f'{v:.10f} (x{m})' for v, m in groups)}",
        f"partial transpose: {', '.join(f'{v:.10f} (x{m})' for v, m in pt_groups)}",
        f"rank: {rank}",
        f"PPT: {rep.ppt} (min eigenvalue {rep.min_pt_eigenvalue:.2e})",
        f"CCNR: {rep.ccnr_value:.6f} -> entangled: {rep.entangled_by_ccnr}",
    ]
    _report("verify-state", {}, results, t0, as_json, lines)


def _strategy_from_option(d, strategy):
    if strategy == "paper":
        if d != 3:
            raise UserError("the built-in strategy exists for d=3 only")
        return game.paper_strategy_d3()
    try:
        file_d, state, povms = serialize.load_strategy_bundle(strategy)
    except (OSError, KeyError, ValueError, json.JSONDecodeError) as exc:
        raise UserError(f"cannot load strategy from {strategy!r}: {exc}") from exc
    if file_d != d:
        raise UserError(f"strategy file is for d={file_d}, requested d={d}")
    fam = qo.encoding_unitaries(d)
    return game.QuantumStrategy(state, fam, fam, tuple(povms))


@main.command("eval")
@click.option("--d", "d", type=int, default=3, show_default=True)
@click.option("--strategy", default="paper", show_default=True, help="'paper' or a bundle path")
@click.option("--noise", type=float, default=0.0, show_default=True, help="isotropic noise rate")
@click.option("--json", "as_json", is_flag=True)
def cmd_eval(d, strategy, noise, as_json):
    """Game value of a strategy against the classical bound 2/(d+1)."""
    t0 = time.time()
    if not qo.is_odd_prime(d):
        raise UserError("d must be an odd prime")
    strat = _strategy_from_option(d, strategy)
    if not (0.0 <= noise <= 1.0):
        raise UserError("noise must lie in [0, 1]")
    if noise > 0:
        mixed = qo.isotropic_mix(strat.state, noise)
        strat = game.QuantumStrategy(mixed, strat.alice, strat.bob, strat.measurements)
    spec = game.GameSpec(d)
    value = game.score_quantum(spec, strat)
    bound = 2.0 / (d + 1)
    results = {
        "d": d,
        "value": {"value": value, "tol": 1e-12},
        "bound": bound,
        "violation": value > bound,
        "noise": noise,
        "strategy_fingerprint": serialize.strategy_fingerprint(strat.state, strat.measurements),
    }
    lines = [
        f"R_{d} = {value:.9f}",
        f"classical/unentangled bound = {bound:.9f}",
        f"violation: {results['violation']}",
    ]
    _report("eval", {"d": d, "strategy": strategy, "noise": noise}, results, t0, as_json, lines)


@main.command("noise-sweep")
@click.option("--d", "d", type=int, default=3, show_default=True)
@click.option("--strategy", default="paper", show_default=True)
@click.option("--steps", type=int, default=11, show_default=True)
@click.option("--out", "out_path", type=click.Path(), default="noise_sweep.csv", show_default=True)
@click.option("--json", "as_json", is_flag=True)
def cmd_noise_sweep(d, strategy, steps, out_path, as_json):
    """Game value along the isotropic-noise line, plus the bisected threshold."""
    t0 = time.time()
    if steps < 2:
        raise UserError("steps must be >= 2")
    strat = _strategy_from_option(d, strategy)
    spec = game.GameSpec(d)
    bound = 2.0 / (d + 1)
    rows = []
    for k in range(steps):
        nu = k / (steps - 1)
        mixed = qo.isotropic_mix(strat.state, nu)
        value = game.score_quantum(spec, game.QuantumStrategy(mixed, strat.alice, strat.bob, strat.measurements))
        rows.append((nu, value, value > bound))
    try:
        threshold = game.noise_threshold(spec, strat, bound)
    except ValueError as exc:
        raise UserError(str(exc)) from exc
    with open(out_path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["nu", "value", "violated"])
        for nu, value, violated in rows:
            writer.writerow([f"{nu:.10f}", f"{value:.12f}", int(violated)])
    results = {
        "d": d,
        "threshold": {"value": threshold, "tol": 1e-10},
        "bound": bound,
        "csv": str(out_path),
        "rows": [{"nu": nu, "value": v, "violated": bool(f)} for nu, v, f in rows],
    }
    lines = [f"threshold nu = {threshold:.9f}", f"wrote {out_path} ({steps} rows)"]
    _report("noise-sweep", {"d": d, "steps": steps}, results, t0, as_json, lines)


@main.command("seesaw")
@click.option("--d", "d", type=int, default=3, show_default=True)
@click.option("--restarts", type=int, default=None, help="default 50 (d=3,5) or 20 (d=7)")
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--max-rounds", type=int, default=200, show_default=True)
@click.option("--threads", type=int, default=1, show_default=True)
@click.option("--out", "out_dir", type=click.Path(), default=None, help="strategy bundle directory")
@click.option("--json", "as_json", is_flag=True)
def cmd_seesaw(d, restarts, seed, max_rounds, threads, out_dir, as_json):
    """Alternating search over PPT states and measurements."""
    t0 = time.time()
    if d not in (3, 5, 7):
        raise UserError("seesaw supports d in {3, 5, 7}")
    if restarts is None:
        restarts = 20 if d == 7 else 50
    config = seesaw_mod.SeesawConfig(
        d=d, restarts=restarts, seed=seed, max_rounds=max_rounds, threads=threads
    )
    try:
        result = seesaw_mod.seesaw(config)
    except SolverFailure as exc:
        raise NumericalError(str(exc)) from exc
    strat = seesaw_mod.best_strategy(result)
    spec = game.GameSpec(d)
    rescored = game.score_quantum(spec, strat)
    bound = 2.0 / (d + 1)
    tolerance = game.noise_threshold(spec, strat, bound) if rescored > bound else 0.0
    results = {
        "d": d,
        "best_value": {"value": result.best_value, "tol": config.solver_tol},
        "rescored_value": rescored,
        "bound": bound,
        "noise_tolerance": {"value": tolerance, "tol": 1e-10},
        "best_restart": result.best_restart,
        "rounds_used": result.rounds_used,
        "value_traces": result.value_traces,
    }
    if out_dir:
        bundle = serialize.save_strategy_bundle(
            out_dir, d, result.state, result.measurements,
            extra={"seesaw_value": result.best_value, "seed": seed},
        )
        results["bundle"] = str(bundle)
    lines = [
        f"best R_{d} = {result.best_value:.6f} (restart {result.best_restart}, {result.rounds_used} rounds)",
        f"noise tolerance = {tolerance:.6f}",
    ] + ([f"bundle: {results['bundle']}"] if out_dir else [])
    _report(
        "seesaw",
        {"d": d, "restarts": restarts, "seed": seed, "threads": threads},
        results, t0, as_json, lines,
    )


@main.command("bound")
@click.option("--d", "d", type=int, default=3, show_default=True)
@click.option("--no-symmetrize", "no_sym", is_flag=True, help="solve the full moment matrix (d=3)")
@click.option("--certificate", "cert_path", type=click.Path(), default=None)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--json", "as_json", is_flag=True)
def cmd_bound(d, no_sym, cert_path, seed, as_json):
    """Certified upper bound on the game value without entanglement."""
    t0 = time.time()
    if d not in (3, 5, 7):
        raise UserError("the relaxation supports d in {3, 5, 7}")
    if no_sym:
        if d != 3:
            raise UserError("--no-symmetrize is implemented for d=3 only")
        prog, _ = prune_dependent_rows(build_full_moment_matrix(3))
        sol = solve(prog, tol=1e-8)
        if sol.status == "infeasible" or max(sol.gap, sol.primal_residual) > 1e-5:
            raise NumericalError(f"full moment matrix solve failed: {sol.status}")
        results = {
            "d": d,
            "mode": "full-moment-matrix",
            "primal": {"value": sol.primal_value, "gap": sol.gap},
            "dual": {"value": sol.dual_value, "gap": sol.gap},
        }
        lines = [f"full-matrix bound: {sol.primal_value:.9f} (dual {sol.dual_value:.9f})"]
        _report("bound", {"d": d, "no_symmetrize": True}, results, t0, as_json, lines)
        return
    try:
        res = solve_relaxation(d, seed=seed, tol=1e-9)
    except (RuntimeError, SolverFailure) as exc:
        raise NumericalError(str(exc)) from exc
    rep = verify_certificate(res.certificate)
    results = {
        "d": d,
        "mode": "symmetrized",
        "primal": {"value": res.primal_value, "gap": res.gap},
        "dual": {"value": res.dual_value, "gap": res.gap},
        "certified_bound": {"value": rep.certified_bound, "tol": rep.max_equality_residual},
        "certificate_verified": rep.ok,
        "block_sizes": res.block_sizes,
        "block_fallback": res.fallback,
    }
    if cert_path:
        with open(cert_path, "w") as fh:
            fh.write(certificate_to_json(res.certificate))
        results["certificate_file"] = str(cert_path)
    lines = [
        f"primal = {res.primal_value:.9f}, dual = {res.dual_value:.9f}",
        f"certified bound = {rep.certified_bound:.9f} (verified: {rep.ok})",
    ]
    _report("bound", {"d": d, "seed": seed}, results, t0, as_json, lines)


@main.command("classical")
@click.option("--d", "d", type=int, default=3, show_default=True)
@click.option("--json", "as_json", is_flag=True)
def cmd_classical(d, as_json):
    """Exact classical maximum by canonical enumeration (d=3)."""
    t0 = time.time()
    if d != 3:
        raise UserError("exact classical enumeration is implemented for d=3 only")
    res = game.classical_exact_max(d)
    results = {
        "d": d,
        "value": {"numerator": res.value.numerator, "denominator": res.value.denominator,
                  "float": res.value_float, "tol": 0.0},
        "win_count": res.win_count,
        "total_count": res.total_count,
        "canonical_class_count": res.class_count,
        "maximizer_count": res.maximizer_count,
        "includes_first_coordinate_pair": res.includes_first_coordinate_pair,
        "witness_alice": list(res.best_alice),
        "witness_bob": list(res.best_bob),
    }
    lines = [
        f"classical max = {res.value} ({res.win_count}/{res.total_count})",
        f"canonical classes: {res.class_count}",
        f"witness includes m_A = x0 pair: {res.includes_first_coordinate_pair}",
    ]
    _report("classical", {"d": d}, results, t0, as_json, lines)


if __name__ == "__main__":
    main()
