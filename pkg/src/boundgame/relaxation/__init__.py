"""Moment-matrix relaxation bounding the game value without entanglement.

Builds the symmetrized minor of the tracial moment matrix, optionally
block-diagonalizes its structure matrices, solves the primal bound and
extracts an independently verifiable dual certificate.
"""

from .symmetry import symmetry_actions, SymmetryAction
from .reduced import ReducedMomentModel, build_reduced_model, grouped_strategy_values
from .blockdiag import BlockDiagonalizer, block_diagonalize
from .solve import (
    DualCertificate,
    solve_primal,
    solve_dual,
    solve_relaxation,
    verify_certificate,
    certificate_to_json,
    certificate_from_json,
)
from .fullgamma import build_full_moment_matrix, full_gamma_of_strategy

__all__ = [
    "symmetry_actions",
    "SymmetryAction",
    "ReducedMomentModel",
    "build_reduced_model",
    "grouped_strategy_values",
    "BlockDiagonalizer",
    "block_diagonalize",
    "DualCertificate",
    "solve_primal",
    "solve_dual",
    "solve_relaxation",
    "verify_certificate",
    "certificate_to_json",
    "certificate_from_json",
    "build_full_moment_matrix",
    "full_gamma_of_strategy",
]
