"""diskphase: a finite-volume laboratory for coupled bulk-surface
phase-field dynamics on the disk.

The package discretizes an Allen-Cahn bulk coupled through its boundary
trace to Cahn-Hilliard-type surface dynamics, in four variants (with and
without a quasi-static bulk chemical potential, with and without surface
diffusion), and ships the experiments that measure conservation, energy
dissipation, a priori bounds, continuous dependence, and the vanishing-
parameter convergence rates.
"""

from .geometry import Grid, GridError, SampleError, build_grid, sample_bulk, sample_surface
from .potentials import (
    AssumptionViolation,
    LipschitzPerturbation,
    MonotoneGraph,
    PotentialPair,
    validate_assumptions,
)
from .stepper import (
    CoupledState,
    CoupledStepper,
    IncompatibleTraceError,
    ProblemVariant,
    StepError,
    StepperConfig,
)

__version__ = "0.1.0"

__all__ = [
    "Grid",
    "GridError",
    "SampleError",
    "build_grid",
    "sample_bulk",
    "sample_surface",
    "MonotoneGraph",
    "LipschitzPerturbation",
    "PotentialPair",
    "AssumptionViolation",
    "validate_assumptions",
    "ProblemVariant",
    "CoupledState",
    "CoupledStepper",
    "StepperConfig",
    "StepError",
    "IncompatibleTraceError",
    "__version__",
]
