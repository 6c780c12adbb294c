"""Particle simulation of a Vlasov-Poisson plasma coupled to a point charge,
with numerical checks of the a priori estimates that control it."""

from .constants import c0_of, constants_table, radius_R
from .core import (ChargeState, ConstantsTable, DiagnosticRecord, GridField, GridSpec, Interaction,
                   ParticleEnsemble, SimState)
from .dynamics import backward_flow, initial_state, step
from .initial_data import DensityProfile, initial_moment, sample

__all__ = [
    "ChargeState", "ConstantsTable", "DensityProfile", "DiagnosticRecord", "GridField", "GridSpec",
    "Interaction", "ParticleEnsemble", "SimState", "backward_flow", "c0_of", "constants_table",
    "initial_moment", "initial_state", "radius_R", "sample", "step",
]

__version__ = "0.1.0"
