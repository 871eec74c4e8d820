"""Parametrized 1-D maps, the logistic instance, and seeded trajectory iteration.

A map is supplied as evaluation and derivative callbacks; all callbacks must
accept both Python floats and numpy arrays (elementwise). All arithmetic is
plain 64-bit floating point.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import DomainError, UnboundedTrajectoryError

log = logging.getLogger(__name__)

#: tolerance for state-domain membership checks
DOMAIN_TOL = 1e-12

#: excursion beyond the state domain treated as a genuine escape (noise-free)
ESCAPE_TOL = 1e-9


@dataclass(frozen=True)
class ParamMap:
    """A scalar map x -> eval(x, r) with analytic partial derivatives.

    Attributes
    ----------
    eval : callable(x, r) -> x_next
    deriv_x : callable(x, r) -> d eval / dx
    deriv_r : callable(x, r) -> d eval / dr
    nominal_r0 : parameter value at which the free map is chaotic
    chaotic_range : (lo, hi) parameter interval with chaotic dynamics
    state_domain : (lo, hi) invariant state interval
    max_bounded_r : largest parameter keeping the state domain invariant,
        or None when no such cap applies (4.0 for the logistic map)
    """

    eval: Callable[[float, float], float]
    deriv_x: Callable[[float, float], float]
    deriv_r: Callable[[float, float], float]
    nominal_r0: float
    chaotic_range: tuple[float, float]
    state_domain: tuple[float, float] = (0.0, 1.0)
    max_bounded_r: float | None = None
    name: str = "custom"


def _logistic_eval(x, r):
    return r * x * (1.0 - x)


def _logistic_deriv_x(x, r):
    return r * (1.0 - 2.0 * x)


def _logistic_deriv_r(x, r):
    return x * (1.0 - x)


def logistic_map(r0: float = 3.8) -> ParamMap:
    """The logistic map r*x*(1-x) on [0, 1] with nominal parameter ``r0``."""
    return ParamMap(
        eval=_logistic_eval,
        deriv_x=_logistic_deriv_x,
        deriv_r=_logistic_deriv_r,
        nominal_r0=float(r0),
        chaotic_range=(3.57, 4.0),
        state_domain=(0.0, 1.0),
        max_bounded_r=4.0,
        name="logistic",
    )


def logistic_step(x: float, r: float) -> float:
    """One logistic iteration; rejects states outside [0, 1] beyond 1e-12."""
    if x < -DOMAIN_TOL or x > 1.0 + DOMAIN_TOL:
        raise DomainError(f"state {x!r} outside [0, 1]")
    return r * x * (1.0 - x)


@dataclass(frozen=True)
class NoiseSpec:
    """Additive state noise: amplitude * N(0,1) per step, seeded.

    The generator is numpy's PCG64 with ziggurat standard normals, so a
    given seed reproduces the identical sequence on every platform. A zero
    amplitude draws nothing at all, which keeps noiseless trajectories
    bit-identical regardless of seed.
    """

    amplitude: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if self.amplitude < 0:
            raise ValueError("noise amplitude must be >= 0")

    def draws(self, n: int) -> np.ndarray | None:
        """Pre-draw the n standard-normal variates, or None if amplitude 0."""
        if self.amplitude == 0.0:
            return None
        return np.random.default_rng(self.seed).standard_normal(n)


def iterate_free(
    pmap: ParamMap,
    x0: float,
    r: float,
    n: int,
    noise: NoiseSpec = NoiseSpec(),
) -> np.ndarray:
    """Iterate the uncontrolled map n times from x0 at fixed parameter r.

    Returns the length-(n+1) trajectory [x0, x1, ..., xn]. Noise is added to
    the state after each map application; results are clamped to the state
    domain (clamp events logged at DEBUG). Escapes beyond what the noise
    amplitude can explain raise UnboundedTrajectoryError.
    """
    lo, hi = pmap.state_domain
    if not (lo - DOMAIN_TOL <= x0 <= hi + DOMAIN_TOL):
        raise DomainError(f"x0={x0!r} outside state domain [{lo}, {hi}]")
    if n < 0:
        raise ValueError("n must be >= 0")
    sigma = noise.draws(n)
    escape = ESCAPE_TOL + 10.0 * noise.amplitude
    out = np.empty(n + 1)
    out[0] = x0
    x = float(x0)
    clamped = 0
    for k in range(n):
        x = pmap.eval(x, r)
        if sigma is not None:
            x += noise.amplitude * sigma[k]
        if x < lo - escape or x > hi + escape:
            raise UnboundedTrajectoryError(
                f"iterate {k + 1} left [{lo}, {hi}]: x={x!r} (r={r!r})"
            )
        if x < lo:
            x = lo
            clamped += 1
        elif x > hi:
            x = hi
            clamped += 1
        out[k + 1] = x
    if clamped:
        log.debug("iterate_free: clamped %d of %d iterates to the domain", clamped, n)
    return out
