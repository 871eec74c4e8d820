"""Closed-loop simulation of the parameter-modulated map under any control law.

Each step applies x_{k+1} = eval(x_k, r0 + u_k) with u_k from the law, adds
seeded noise, clamps to the state domain, and records per-step state,
control, phase, and distance to the (phase-matched) orbit. Convergence is
declared when that distance stays below the tolerance for a full window of
consecutive steps after first activation.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from .control import ControlLaw, Controller
from .dynamics import DOMAIN_TOL, ESCAPE_TOL, NoiseSpec, ParamMap
from .errors import ChaosControlError, DomainError, UnboundedTrajectoryError

log = logging.getLogger(__name__)

DEFAULT_CONVERGENCE_TOL = 1e-6


def default_delta(pmap: ParamMap) -> float:
    """Default control-effort bound: 0.2, tightened by the parameter cap."""
    if pmap.max_bounded_r is not None:
        return min(0.2, pmap.max_bounded_r - pmap.nominal_r0)
    return 0.2


@dataclass(frozen=True)
class SimulationConfig:
    """Everything one closed-loop run needs; immutable and shareable."""

    pmap: ParamMap
    law: ControlLaw
    x0: float
    steps: int
    noise: NoiseSpec = NoiseSpec()
    convergence_tol: float = DEFAULT_CONVERGENCE_TOL
    convergence_window: int | None = None  # None -> 4 * period
    saturation_mode: str = "strict"
    relock: bool = False
    history0: tuple[float, ...] = ()

    def __post_init__(self):
        if self.steps < 1:
            raise ValueError("steps must be >= 1")
        if self.convergence_tol <= 0:
            raise ValueError("convergence_tol must be > 0")
        lo, hi = self.pmap.state_domain
        if not (lo - DOMAIN_TOL <= self.x0 <= hi + DOMAIN_TOL):
            raise DomainError(f"x0={self.x0!r} outside state domain")

    @property
    def window(self) -> int:
        if self.convergence_window is not None:
            return self.convergence_window
        return 4 * self.law.orbit.period


@dataclass
class SimulationResult:
    """Trajectory, controls, phase log, and summary metrics of one run."""

    states: np.ndarray  # length steps + 1
    controls: np.ndarray  # length steps
    phases: list[int | None]  # 1-based phase per step, length steps
    distances: np.ndarray  # per-step distance to tracked/nearest component
    k0: int | None
    converged_at: int | None
    peak_u: float
    clamp_count: int
    saturation_count: int
    relock_count: int

    @property
    def final_state(self) -> float:
        return float(self.states[-1])


def run(cfg: SimulationConfig) -> SimulationResult:
    """Execute one closed-loop run; deterministic given the noise seed."""
    pmap, law = cfg.pmap, cfg.law
    r0 = pmap.nominal_r0
    lo, hi = pmap.state_domain
    u_max = None
    if pmap.max_bounded_r is not None:
        u_max = pmap.max_bounded_r - r0
    ctrl = Controller(
        law,
        saturation_mode=cfg.saturation_mode,
        relock=cfg.relock,
        u_max=u_max,
    )
    for h in cfg.history0:
        ctrl.prime(h)
    sigma = cfg.noise.draws(cfg.steps)
    escape = ESCAPE_TOL + 10.0 * cfg.noise.amplitude

    steps = cfg.steps
    states = np.empty(steps + 1)
    controls = np.empty(steps)
    distances = np.empty(steps + 1)
    phases: list[int | None] = []
    states[0] = cfg.x0
    x = float(cfg.x0)
    clamped = 0
    orbit = law.orbit

    for k in range(steps):
        u, phase = ctrl.step(k, x)
        controls[k] = u
        phases.append(phase)
        if phase is not None:
            distances[k] = abs(x - orbit.points[phase - 1])
        else:
            distances[k] = orbit.distance_to(x)
        x = pmap.eval(x, r0 + u)
        if sigma is not None:
            x += cfg.noise.amplitude * sigma[k]
        if x < lo - escape or x > hi + escape:
            raise UnboundedTrajectoryError(
                f"state left [{lo}, {hi}] at step {k + 1}: x={x!r}"
            )
        if x < lo:
            x = lo
            clamped += 1
        elif x > hi:
            x = hi
            clamped += 1
        states[k + 1] = x

    # distance of the final state, using the would-be next phase if locked
    st = ctrl.state
    if st.activated:
        j = st.current_target(steps)
        distances[steps] = abs(x - orbit.points[j])
    else:
        distances[steps] = orbit.distance_to(x)

    k0 = st.first_k0
    converged_at = None
    if k0 is not None:
        window = cfg.window
        streak = 0
        for k in range(k0, steps + 1):
            if distances[k] < cfg.convergence_tol:
                streak += 1
                if streak >= window:
                    converged_at = k
                    break
            else:
                streak = 0

    if clamped:
        log.debug("run: clamped %d of %d states to the domain", clamped, steps)
    return SimulationResult(
        states=states,
        controls=controls,
        phases=phases,
        distances=distances,
        k0=k0,
        converged_at=converged_at,
        peak_u=float(np.max(np.abs(controls))) if steps else 0.0,
        clamp_count=clamped,
        saturation_count=ctrl.saturation_count,
        relock_count=ctrl.relock_count,
    )


def waiting_time(result: SimulationResult) -> int | None:
    """Steps until first activation (None if the law never engaged)."""
    return result.k0


def lock_fraction(result: SimulationResult, orbit, tube: float) -> float:
    """Fraction of post-activation states within ``tube`` of the orbit."""
    if tube <= 0:
        raise ValueError("tube must be > 0")
    if result.k0 is None:
        return 0.0
    tail = result.states[result.k0:]
    pts = np.asarray(orbit.points)
    dmin = np.min(np.abs(tail[:, None] - pts[None, :]), axis=1)
    return float(np.mean(dmin < tube))


@dataclass
class BatchOutcome:
    """One batch slot: either a result or the error that stopped the run."""

    result: SimulationResult | None = None
    error: str | None = None

    @property
    def ok(self) -> bool:
        return self.error is None


def batch(configs: list[SimulationConfig]) -> list[BatchOutcome]:
    """Run each config independently; failures become per-item records."""
    out = []
    for cfg in configs:
        try:
            out.append(BatchOutcome(result=run(cfg)))
        except ChaosControlError as exc:
            out.append(BatchOutcome(error=f"{type(exc).__name__}: {exc}"))
    return out


def contraction_rate(
    result: SimulationResult, epsilon: float, period: int, floor: float = 1e-13
) -> float:
    """Fitted per-cycle contraction envelope after activation.

    Sampling the phase-matched distance every full cycle, d_l at l cycles
    past activation, this returns the smallest sigma with d_l <= sigma^l *
    epsilon over the run (distances below the numerical floor ignored). The
    closed loop is non-normal, so d_l need not fall monotonically, but a
    converging lock must come out with sigma < 1.
    """
    if result.k0 is None:
        return math.inf
    ds = result.distances[result.k0::period]
    rates = [
        (float(d) / epsilon) ** (1.0 / l)
        for l, d in enumerate(ds)
        if l >= 1 and d > floor
    ]
    return max(rates, default=0.0)
