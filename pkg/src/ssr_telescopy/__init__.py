"""Exact numerics for ancilla-assisted two-telescope interferometry under
photon-number superselection: Fock-space simulation, twirling, quantum and
classical Fisher information, ancilla catalog, fundamental bounds, and a
linear-optical teleportation pipeline with Monte Carlo verification.
"""

from .catalog import AncillaSpec, SqueezedParams, build, closed_ratio, sector_ratio
from .fock import SparseKet, basis_ket, permanent, qft_matrix, transition_amplitude
from .qfi import QfiReport, SourceParams, optimal_qfi, qfi_ratio_end_to_end, sld_qfi
from .twirl import BlockDensity, twirl_global, twirl_local

__version__ = "0.1.0"

__all__ = [
    "AncillaSpec",
    "BlockDensity",
    "QfiReport",
    "SourceParams",
    "SparseKet",
    "SqueezedParams",
    "__version__",
    "basis_ket",
    "build",
    "closed_ratio",
    "optimal_qfi",
    "permanent",
    "qfi_ratio_end_to_end",
    "qft_matrix",
    "sector_ratio",
    "sld_qfi",
    "transition_amplitude",
    "twirl_global",
    "twirl_local",
]
