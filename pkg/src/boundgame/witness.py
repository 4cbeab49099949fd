"""Entanglement detection: PPT test and the realignment (CCNR) criterion."""

from __future__ import annotations

from dataclasses import dataclass, asdict

import numpy as np

from . import linalg
from .qobjects import DensityMatrix

PPT_TOL = 1e-9
CCNR_TOL = 1e-9


def is_ppt(rho: DensityMatrix, tol: float = PPT_TOL) -> tuple[bool, float]:
    """Whether the partial transpose is PSD; also returns its least eigenvalue."""
    pt = linalg.partial_transpose(rho.matrix, rho.dim_a, rho.dim_b, "A")
    min_eig = float(np.linalg.eigvalsh(pt)[0])
    return min_eig >= -tol, min_eig


def ccnr(rho: DensityMatrix) -> float:
    """Trace norm of the realignment matrix; > 1 witnesses entanglement."""
    c = linalg.realignment_matrix(rho.matrix, rho.dim_a, rho.dim_b)
    return linalg.trace_norm(c)


@dataclass(frozen=True)
class WitnessReport:
    ppt: bool
    min_pt_eigenvalue: float
    ccnr_value: float
    entangled_by_ccnr: bool

    def to_dict(self) -> dict:
        return asdict(self)


def witness_report(rho: DensityMatrix, ppt_tol: float = PPT_TOL) -> WitnessReport:
    ppt, min_eig = is_ppt(rho, tol=ppt_tol)
    value = ccnr(rho)
    return WitnessReport(
        ppt=ppt,
        min_pt_eigenvalue=min_eig,
        ccnr_value=value,
        entangled_by_ccnr=value > 1.0 + CCNR_TOL,
    )
