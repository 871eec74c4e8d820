"""chaosctl: stabilize unstable periodic orbits of chaotic 1-D maps by
feedback modulation of the map parameter.

The package bundles the map abstraction (``dynamics``), a periodic-orbit
finder (``orbits``), eight proportional and delayed feedback laws
(``control``), gain-range formulas and companion-matrix stability analysis
(``stability``), a heuristic gain search (``search``), a closed-loop
simulator (``sim``), bundled benchmark scenarios (``figures``), and a CLI
(``chaosctl``).
"""

from .dynamics import NoiseSpec, ParamMap, iterate_free, logistic_map, logistic_step
from .orbits import PeriodicOrbit, find_fixed_point, find_upo, orbit_multiplier
from .stability import (
    GainRange,
    alpha_gain,
    beta_range,
    gamma_fixed_range,
    spectral_radius,
)
from .sim import SimulationConfig, SimulationResult, batch, lock_fraction, run

__version__ = "0.1.0"

__all__ = [
    "NoiseSpec",
    "ParamMap",
    "PeriodicOrbit",
    "GainRange",
    "SimulationConfig",
    "SimulationResult",
    "alpha_gain",
    "batch",
    "beta_range",
    "find_fixed_point",
    "find_upo",
    "gamma_fixed_range",
    "iterate_free",
    "lock_fraction",
    "logistic_map",
    "logistic_step",
    "orbit_multiplier",
    "run",
    "spectral_radius",
    "__version__",
]
