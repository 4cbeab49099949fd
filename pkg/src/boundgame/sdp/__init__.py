"""Self-contained semidefinite programming engine.

Standard equality-constrained conic form over a product of PSD blocks,
solved by a primal-dual interior-point method with Nesterov-Todd scaling
and a Mehrotra predictor-corrector. Includes a complex-to-real embedding
layer and SDPA sparse-format export/import for cross-validation.
"""

from .program import ConicProgram, SdpSolution
from .solver import solve
from .embed import embed_complex, unembed_real, embedded_entries
from .sdpa import export_sdpa, parse_sdpa

__all__ = [
    "ConicProgram",
    "SdpSolution",
    "solve",
    "embed_complex",
    "unembed_real",
    "embedded_entries",
    "export_sdpa",
    "parse_sdpa",
]
