"""Softened-cutoff (FP) states of the free Dirac field on a flat torus.

The package builds the mode-wise projectors of a state defined by a softened
time cutoff on a slab, and ships diagnostics that tell whether the state is
Hadamard (mode sums converge) or not (they persist).
"""

__version__ = "0.1.0"

from .errors import FPStatesError  # noqa: E402
from .fpstate import FPState, build_fp_state, ceiling_state, reference_state  # noqa: E402
from .softening import SlabConfig, bump, indicator, tabulated  # noqa: E402
from .spectrum import ModelParams, Spectrum, synthetic_spectrum, torus_spectrum  # noqa: E402

__all__ = [
    "FPState",
    "FPStatesError",
    "ModelParams",
    "SlabConfig",
    "Spectrum",
    "__version__",
    "build_fp_state",
    "bump",
    "ceiling_state",
    "indicator",
    "reference_state",
    "synthetic_spectrum",
    "tabulated",
    "torus_spectrum",
]
