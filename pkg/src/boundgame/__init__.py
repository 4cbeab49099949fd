"""Bound entanglement in prepare-and-measure games.

Construction and certification toolkit: the explicit two-qutrit bound
entangled state and its game violation, entanglement witnesses, alternating
SDP search over PPT states and measurements, and the symmetrized
moment-matrix relaxation with dual certificates.
"""

__version__ = "0.1.0"
