"""The eight feedback laws that modulate the map parameter each step.

Laws come in three families:

* proportional (SPF): the perturbation is gain * (x - p_i), gated by an
  epsilon neighborhood of an orbit component (per-point, switching, or
  phase-locked after first detection);
* delayed (DFC): the perturbation is gain * (x_k - x_{k-m}), gated by an
  epsilon/sqrt(2) neighborhood of the delay-embedded orbit;
* extended delayed (EDFC): DFC plus a geometric memory term R * u_{k-m}.

Phase-locked variants stop checking the neighborhood once activated and walk
the gain index around the orbit; an optional relock mode drops the lock and
re-enters detection when the state strays beyond 10 * epsilon (useful under
noise, off by default). A gain convention shared by every law: gains[j]
is the gain used while the current state sits at orbit component j.
"""

from __future__ import annotations

import logging
import math
from collections import deque
from dataclasses import dataclass, field

from .errors import (
    AmbiguousMatchError,
    EffortViolationError,
    ParameterRangeError,
)
from .orbits import PeriodicOrbit

log = logging.getLogger(__name__)

RELOCK_FACTOR = 10.0


def delay_vectors(orbit: PeriodicOrbit) -> list[tuple[float, ...]]:
    """The m delay-embedded orbit vectors (p_i, p_{i-1}, ..., p_{i-m})."""
    m = orbit.period
    pts = orbit.points
    return [tuple(pts[(i - j) % m] for j in range(m + 1)) for i in range(m)]


def min_delay_vector_distance(orbit: PeriodicOrbit) -> float:
    vecs = delay_vectors(orbit)
    m = orbit.period
    if m == 1:
        return float("inf")
    return min(
        math.dist(vecs[i], vecs[j])
        for i in range(m)
        for j in range(i)
    )


def _check_common(law) -> None:
    if law.epsilon < 0:
        raise ValueError("epsilon must be >= 0")
    if law.delta <= 0:
        raise ValueError("delta must be > 0")


def _warn_effort(law, max_gain: float) -> None:
    if abs(max_gain) * law.epsilon > law.delta:
        log.warning(
            "%s: max |gain| * epsilon = %.4g exceeds delta = %.4g; "
            "worst-case activation can saturate the control",
            type(law).__name__,
            abs(max_gain) * law.epsilon,
            law.delta,
        )


def _check_spf_epsilon(law) -> None:
    if law.epsilon >= law.orbit.min_pair_distance / 2.0:
        raise ValueError(
            "epsilon must stay below half the smallest orbit point spacing"
        )


def _check_dfc_epsilon(law) -> None:
    bound = min_delay_vector_distance(law.orbit) / math.sqrt(2.0)
    if law.epsilon >= bound:
        raise ValueError(
            f"epsilon {law.epsilon} must stay below {bound:.4g} "
            "(delay-embedded orbit separation / sqrt(2))"
        )


@dataclass(frozen=True)
class SpfOgy:
    """Per-point proportional law targeting one orbit component (1-based index)."""

    orbit: PeriodicOrbit
    index: int
    gain: float
    epsilon: float
    delta: float

    def __post_init__(self):
        _check_common(self)
        if not 1 <= self.index <= self.orbit.period:
            raise ValueError("index must be in 1..m")
        _check_spf_epsilon(self)
        _warn_effort(self, self.gain)


@dataclass(frozen=True)
class SpfSwitch:
    """Switching proportional law: fires near whichever component is entered."""

    orbit: PeriodicOrbit
    gains: tuple[float, ...]
    epsilon: float
    delta: float

    def __post_init__(self):
        _check_common(self)
        if len(self.gains) != self.orbit.period:
            raise ValueError("need one gain per orbit component")
        _check_spf_epsilon(self)
        _warn_effort(self, max(abs(g) for g in self.gains))


class SpfBeta(SpfSwitch):
    """Switching proportional law with freely chosen gains."""


@dataclass(frozen=True)
class SpfPhase:
    """Phase-locked proportional law: after detection, cycles the gain index."""

    orbit: PeriodicOrbit
    gains: tuple[float, ...]
    epsilon: float
    delta: float

    def __post_init__(self):
        _check_common(self)
        if len(self.gains) != self.orbit.period:
            raise ValueError("need one gain per orbit component")
        _check_spf_epsilon(self)
        _warn_effort(self, max(abs(g) for g in self.gains))


@dataclass(frozen=True)
class DfcFix:
    """Delayed feedback gamma*(x_k - x_{k-1}) around a fixed point."""

    orbit: PeriodicOrbit
    gain: float
    epsilon: float
    delta: float

    def __post_init__(self):
        _check_common(self)
        if self.orbit.period != 1:
            raise ValueError("DfcFix targets a fixed point (period 1)")
        _warn_effort(self, self.gain)


@dataclass(frozen=True)
class DfcSwitch:
    """Switching delayed feedback gated by the full delay-embedded vector."""

    orbit: PeriodicOrbit
    gains: tuple[float, ...]
    epsilon: float
    delta: float

    def __post_init__(self):
        _check_common(self)
        if len(self.gains) != self.orbit.period:
            raise ValueError("need one gain per orbit component")
        _check_dfc_epsilon(self)
        _warn_effort(self, max(abs(g) for g in self.gains))


@dataclass(frozen=True)
class DfcPhase:
    """Phase-locked delayed feedback: detection once, then open-loop gain cycling."""

    orbit: PeriodicOrbit
    gains: tuple[float, ...]
    epsilon: float
    delta: float

    def __post_init__(self):
        _check_common(self)
        if len(self.gains) != self.orbit.period:
            raise ValueError("need one gain per orbit component")
        _check_dfc_epsilon(self)
        _warn_effort(self, max(abs(g) for g in self.gains))


@dataclass(frozen=True)
class EdfcPhase:
    """Phase-locked delayed feedback with geometric control memory R*u_{k-m}."""

    orbit: PeriodicOrbit
    gains: tuple[float, ...]
    R: float
    epsilon: float
    delta: float

    def __post_init__(self):
        _check_common(self)
        if len(self.gains) != self.orbit.period:
            raise ValueError("need one gain per orbit component")
        if not 0.0 <= self.R < 1.0:
            raise ValueError("memory coefficient R must satisfy 0 <= R < 1")
        _check_dfc_epsilon(self)
        _warn_effort(self, max(abs(g) for g in self.gains))


ControlLaw = (
    SpfOgy | SpfSwitch | SpfBeta | SpfPhase | DfcFix | DfcSwitch | DfcPhase | EdfcPhase
)


@dataclass
class ControllerState:
    """Mutable per-run controller bookkeeping.

    k0 is the step of the current lock (None while detecting); first_k0
    keeps the very first activation for waiting-time metrics even if a
    relock drops the lock later. entry_phase is 0-based internally; the
    ``phase`` property reports 1-based or None.
    """

    m: int
    activated: bool = False
    k0: int | None = None
    first_k0: int | None = None
    entry_phase: int | None = None
    state_history: deque = field(default_factory=deque)
    control_history: deque = field(default_factory=deque)

    def __post_init__(self):
        self.state_history = deque(self.state_history, maxlen=self.m + 1)
        self.control_history = deque(self.control_history, maxlen=self.m)

    @property
    def phase(self) -> int | None:
        return None if self.entry_phase is None else self.entry_phase + 1

    def current_target(self, k: int) -> int:
        """0-based orbit component tracked at step k (requires a lock)."""
        return (self.entry_phase + k - self.k0) % self.m

    def lock(self, k: int, phase0: int) -> None:
        self.activated = True
        self.k0 = k
        self.entry_phase = phase0
        if self.first_k0 is None:
            self.first_k0 = k

    def unlock(self) -> None:
        self.activated = False
        self.k0 = None
        self.entry_phase = None


def match_component(x: float, law) -> int | None:
    """0-based index of the unique component with |x - p_i| <= epsilon."""
    hits = [
        i for i, p in enumerate(law.orbit.points) if abs(x - p) <= law.epsilon
    ]
    if len(hits) > 1:
        raise AmbiguousMatchError(
            f"state {x!r} is within epsilon of components {hits}; shrink epsilon"
        )
    return hits[0] if hits else None


def match_delay_vector(history, law) -> int | None:
    """0-based index i with the embedded history within eps/sqrt(2) of vector i.

    ``history`` is the last m+1 states, oldest first.
    """
    m = law.orbit.period
    if len(history) < m + 1:
        return None
    vec = tuple(reversed(history))  # (x_k, x_{k-1}, ..., x_{k-m})
    thresh = law.epsilon / math.sqrt(2.0)
    hits = [
        i for i, P in enumerate(delay_vectors(law.orbit))
        if math.dist(vec, P) <= thresh
    ]
    if len(hits) > 1:
        raise AmbiguousMatchError(
            f"embedded state matches delay vectors {hits}; shrink epsilon"
        )
    return hits[0] if hits else None


def u_spf_ogy(x: float, law: SpfOgy) -> float:
    """Perturbation of the per-point proportional law at state x."""
    p = law.orbit.points[law.index - 1]
    if abs(x - p) <= law.epsilon:
        return law.gain * (x - p)
    return 0.0


def u_spf_switch(x: float, law: SpfSwitch) -> tuple[float, int | None]:
    """(perturbation, matched 1-based component) of the switching law."""
    i = match_component(x, law)
    if i is None:
        return 0.0, None
    return law.gains[i] * (x - law.orbit.points[i]), i + 1


def u_spf_phase(x: float, k: int, st: ControllerState, law: SpfPhase) -> float:
    """Phase-locked proportional perturbation at step k (0 before activation)."""
    if not st.activated or k < st.k0:
        return 0.0
    j = st.current_target(k)
    return law.gains[j] * (x - law.orbit.points[j])


def u_dfc_fix(x: float, x_prev: float, law: DfcFix) -> float:
    """Fixed-point delayed feedback, gated in the (x_k, x_{k-1}) plane."""
    p = law.orbit.points[0]
    if math.hypot(x - p, x_prev - p) <= law.epsilon / math.sqrt(2.0):
        return law.gain * (x - x_prev)
    return 0.0


def u_dfc_switch(history, law: DfcSwitch) -> tuple[float, int | None]:
    """(perturbation, matched 1-based component) of the switching delayed law.

    ``history`` is the last m+1 states, oldest first.
    """
    i = match_delay_vector(history, law)
    if i is None:
        return 0.0, None
    return law.gains[i] * (history[-1] - history[0]), i + 1


def u_dfc_phase(
    x: float, x_delay: float, k: int, st: ControllerState, law: DfcPhase
) -> float:
    """Phase-locked delayed feedback at step k (0 before activation)."""
    if not st.activated or k < st.k0:
        return 0.0
    j = st.current_target(k)
    return law.gains[j] * (x - x_delay)


def u_edfc_phase(
    x: float,
    x_delay: float,
    u_delay: float,
    k: int,
    st: ControllerState,
    law: EdfcPhase,
) -> float:
    """Extended phase-locked delayed feedback with R*u_{k-m} memory."""
    if not st.activated or k < st.k0:
        return 0.0
    j = st.current_target(k)
    u = law.gains[j] * (x - x_delay)
    if law.R != 0.0:
        # skipped entirely at R = 0 so the reduction to the memoryless law
        # is bit-exact
        u += law.R * u_delay
    return u


class Controller:
    """Drives one law over a run: detection, phase lock, saturation, history.

    saturation_mode 'strict' raises EffortViolationError when |u| > delta
    and ParameterRangeError when r0 + u leaves the admissible parameter
    band; 'clamp' saturates instead and counts the events. The applied
    (post-saturation) control is what enters the EDFC memory.
    """

    def __init__(
        self,
        law: ControlLaw,
        saturation_mode: str = "strict",
        relock: bool = False,
        u_max: float | None = None,
    ):
        if saturation_mode not in ("strict", "clamp"):
            raise ValueError("saturation_mode must be 'strict' or 'clamp'")
        self.law = law
        self.mode = saturation_mode
        self.relock = relock
        self.u_max = u_max  # parameter-band cap on u (e.g. 4 - r0), or None
        self.state = ControllerState(m=law.orbit.period)
        self.saturation_count = 0
        self.relock_count = 0
        self._phase_locked = isinstance(law, (SpfPhase, DfcPhase, EdfcPhase))

    def prime(self, x: float) -> None:
        """Seed the state history with a past state (oldest first)."""
        self.state.state_history.append(float(x))

    def _raw_control(self, k: int, x: float) -> tuple[float, int | None]:
        law, st = self.law, self.state
        hist = st.state_history
        if isinstance(law, SpfOgy):
            u = u_spf_ogy(x, law)
            near = abs(x - law.orbit.points[law.index - 1]) <= law.epsilon
            if near and st.first_k0 is None:
                st.first_k0 = k
            return u, law.index if near else None
        if isinstance(law, (SpfBeta, SpfSwitch)):
            u, phase = u_spf_switch(x, law)
            if phase is not None and st.first_k0 is None:
                st.first_k0 = k
            return u, phase
        if isinstance(law, SpfPhase):
            if not st.activated:
                i = match_component(x, law)
                if i is not None:
                    st.lock(k, i)
            elif self.relock:
                j = st.current_target(k)
                if abs(x - law.orbit.points[j]) > RELOCK_FACTOR * law.epsilon:
                    st.unlock()
                    self.relock_count += 1
            u = u_spf_phase(x, k, st, law)
            phase = st.current_target(k) + 1 if st.activated else None
            return u, phase
        if isinstance(law, DfcFix):
            if len(hist) < 2:
                return 0.0, None
            u = u_dfc_fix(x, hist[-2], law)
            near = (
                math.hypot(x - law.orbit.points[0], hist[-2] - law.orbit.points[0])
                <= law.epsilon / math.sqrt(2.0)
            )
            if near and st.first_k0 is None:
                st.first_k0 = k
            return u, 1 if near else None
        if isinstance(law, DfcSwitch):
            u, phase = u_dfc_switch(list(hist), law)
            if phase is not None and st.first_k0 is None:
                st.first_k0 = k
            return u, phase
        # phase-locked delayed laws
        if not st.activated:
            i = match_delay_vector(list(hist), law)
            if i is not None:
                st.lock(k, i)
        elif self.relock:
            j = st.current_target(k)
            if abs(x - law.orbit.points[j]) > RELOCK_FACTOR * law.epsilon:
                st.unlock()
                self.relock_count += 1
        if not st.activated:
            return 0.0, None
        m = law.orbit.period
        x_delay = hist[0] if len(hist) == m + 1 else x
        if isinstance(law, DfcPhase):
            u = u_dfc_phase(x, x_delay, k, st, law)
        else:
            u_delay = (
                st.control_history[0]
                if len(st.control_history) == m
                else 0.0
            )
            u = u_edfc_phase(x, x_delay, u_delay, k, st, law)
        return u, st.current_target(k) + 1

    def _saturate(self, u: float) -> float:
        law = self.law
        if abs(u) > law.delta:
            if self.mode == "strict":
                raise EffortViolationError(
                    f"|u| = {abs(u):.6g} exceeds delta = {law.delta}"
                )
            u = math.copysign(law.delta, u)
            self.saturation_count += 1
        if self.u_max is not None and u > self.u_max:
            if self.mode == "strict":
                raise ParameterRangeError(
                    f"r0 + u would exceed the admissible parameter range (u = {u:.6g})"
                )
            u = self.u_max
            self.saturation_count += 1
        return u

    def step(self, k: int, x: float) -> tuple[float, int | None]:
        """Consume state x_k, return (applied control u_k, 1-based phase or None)."""
        self.state.state_history.append(float(x))
        u, phase = self._raw_control(k, x)
        if u != 0.0:
            u = self._saturate(u)
        self.state.control_history.append(u)
        return u, phase
