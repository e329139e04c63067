"""Trapped-atom motional-state entanglement and cavity-mediated state transfer.

Truncated Fock-space simulation toolkit: two-mode squeezing/mixing of
motional modes under a bichromatic drive, atom-cavity coupling with cavity
decay, cascaded (unidirectional) two-site state transfer via quantum
trajectories, and the accompanying fidelity/validity diagnostics.
"""

__version__ = "0.1.0"

from .errors import ConsistencyError, IntegrationError, ResourceLimitError
from .fock import (
    DensityMatrix,
    FockSpace,
    Operator,
    StateVector,
    TruncationWarning,
    cat_state,
    coherent_state,
    destroy,
    fock_state,
    make_space,
    number,
    partial_trace,
    position_quadrature,
    truncated_phase_state,
    two_mode_squeezed_state,
)

__all__ = [
    "__version__",
    "ConsistencyError",
    "IntegrationError",
    "ResourceLimitError",
    "DensityMatrix",
    "FockSpace",
    "Operator",
    "StateVector",
    "TruncationWarning",
    "cat_state",
    "coherent_state",
    "destroy",
    "fock_state",
    "make_space",
    "number",
    "partial_trace",
    "position_quadrature",
    "truncated_phase_state",
    "two_mode_squeezed_state",
]
