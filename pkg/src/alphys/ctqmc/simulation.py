"""Thermalize, sweep and measure."""

from dataclasses import dataclass

import numpy as np

from .observables import ObservableAccumulators, finalize, measure
from .worldline import WorldlineConfiguration, sw_sweep


@dataclass
class SimulationResult:
    estimates: dict
    info: dict
    accumulators: ObservableAccumulators
    inserted_cuts: np.ndarray  # (measured sweeps, sites)
    config: WorldlineConfiguration


def run_simulation(spec, sweeps, thermalization, rng, metropolis=False, kernels=None):
    """Run `sweeps` total sweeps and measure after the first `thermalization`."""
    if not (sweeps > thermalization >= 0):
        raise ValueError("need sweeps > thermalization >= 0")
    config = WorldlineConfiguration.random(spec.n_sites, spec.beta, rng)
    acc = ObservableAccumulators(spec.n_sites, spec.beta)
    inserted = []
    accepted = 0
    for sweep in range(sweeps):
        config, info = sw_sweep(config, spec, rng, metropolis=metropolis, kernels=kernels)
        if sweep >= thermalization:
            acc.add(measure(config, spec, kernels))
            inserted.append(info.inserted)
            accepted += info.accepted
    est, info = finalize(acc)
    info["acceptance"] = accepted / acc.count
    return SimulationResult(est, info, acc, np.array(inserted), config)
