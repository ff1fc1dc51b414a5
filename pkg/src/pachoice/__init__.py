"""Preferential-attachment trees with limited choice.

Simulation of min/max/d-choice attachment, the threshold-weight Markov
chain it induces, the two-choice balls-and-bins process, a constructive
monotone coupling between them, and the closed-form recurrence machinery
for the doubly-logarithmic max-degree law.
"""

from .ballsbins import BinsState, CouplingReport, DominationError, coupled_run, run_two_choice
from .fstats import KMaxExceededError, ThresholdVector, compute_from_degrees, decay_trace
from .model import GrowthSnapshot, ModelSpec, TreeState, grow, init, max_degree, step
from .rng import RandomSource
from .sampler import EndpointList, WeightIndex

__version__ = "0.1.0"

__all__ = [
    "BinsState",
    "CouplingReport",
    "DominationError",
    "EndpointList",
    "GrowthSnapshot",
    "KMaxExceededError",
    "ModelSpec",
    "RandomSource",
    "ThresholdVector",
    "TreeState",
    "WeightIndex",
    "compute_from_degrees",
    "coupled_run",
    "decay_trace",
    "grow",
    "init",
    "max_degree",
    "run_two_choice",
    "step",
    "__version__",
]
