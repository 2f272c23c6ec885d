"""Continuous-time Swendsen-Wang Monte Carlo for the transverse-field triangular antiferromagnet."""

from .exact import ed_oracle, hamiltonian
from .lattice import LatticeSpec
from .observables import (Estimate, Measurement, ObservableAccumulators, finalize,
                          integrated_autocorrelation, measure, order_parameter)
from .simulation import SimulationResult, run_simulation
from .worldline import SweepInfo, WorldlineConfiguration, space_action, sw_sweep

__all__ = [
    "Estimate", "LatticeSpec", "Measurement", "ObservableAccumulators", "SimulationResult",
    "SweepInfo", "WorldlineConfiguration", "ed_oracle", "finalize", "hamiltonian",
    "integrated_autocorrelation", "measure", "order_parameter", "run_simulation",
    "space_action", "sw_sweep",
]
