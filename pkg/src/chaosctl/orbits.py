"""Locate periodic orbits of the free map and compute their multipliers.

The finder seeds a dense grid over the state domain, runs Newton iteration on
g(x) = f^m(x) - x with the chain-rule derivative, deduplicates the refined
roots, and assembles genuine period-m cycles by forward iteration. When
several cycles coexist it keeps the one embedded in the attractor (sampled
by a long free trajectory), tie-breaking by smallest starting point.

Orbit points are stored in forward-iteration order starting at the smallest
point, each point being the exact float image of its predecessor.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .dynamics import ParamMap
from .errors import NoOrbitError

#: refined roots closer than this are treated as the same root
DEDUPE_TOL = 1e-8

#: cycle points must be at least this far apart to count as period-m
DISTINCT_TOL = 1e-8

#: a cycle belongs to the attractor if every point has a trajectory sample
#: within this distance
ATTRACTOR_TOL = 1e-3

ATTRACTOR_SAMPLE_STEPS = 10_000

DEFAULT_SEEDS = 4096


@dataclass(frozen=True)
class PeriodicOrbit:
    """A period-m cycle of the free map at parameter r0.

    points are in forward-iteration order starting from the smallest one;
    multiplier is the product of d f/dx along the cycle (|multiplier| > 1
    for an unstable orbit); min_pair_distance is +inf for a fixed point.
    """

    period: int
    points: tuple[float, ...]
    r0: float
    multiplier: float
    min_pair_distance: float

    def nearest_index(self, value: float) -> int:
        """Index of the orbit component closest to ``value``."""
        return min(range(self.period), key=lambda i: abs(self.points[i] - value))

    def distance_to(self, x: float) -> float:
        """Distance from x to the nearest orbit component."""
        return min(abs(x - p) for p in self.points)


def _composite(pmap: ParamMap, x, r: float, m: int):
    """f^m(x) and its derivative along the forward orbit (arrays ok)."""
    fm = x
    dm = np.ones_like(np.asarray(x, dtype=float))
    for _ in range(m):
        dm = dm * pmap.deriv_x(fm, r)
        fm = pmap.eval(fm, r)
    return fm, dm


def composite_roots(
    pmap: ParamMap,
    r: float,
    m: int,
    tol: float = 1e-12,
    n_seeds: int = DEFAULT_SEEDS,
) -> np.ndarray:
    """All solutions of f^m(x) = x in the state domain, sorted ascending.

    Newton refinement from a uniform seed grid; roots accepted when the
    composite residual drops below ``tol``, deduplicated at 1e-8.
    """
    lo, hi = pmap.state_domain
    x = np.linspace(lo, hi, n_seeds)
    for _ in range(80):
        fm, dm = _composite(pmap, x, r, m)
        g = fm - x
        gp = dm - 1.0
        safe = np.abs(gp) > 1e-12
        step = np.where(safe, g / np.where(safe, gp, 1.0), 0.0)
        x = x - step
        np.clip(x, lo - 0.25, hi + 0.25, out=x)
    fm, _ = _composite(pmap, x, r, m)
    ok = (np.abs(fm - x) < tol) & (x >= lo - 1e-9) & (x <= hi + 1e-9)
    roots = np.sort(x[ok])
    keep = []
    for v in roots:
        if not keep or v - keep[-1] > DEDUPE_TOL:
            keep.append(float(v))
    return np.array(keep)


def _polish(pmap: ParamMap, x: float, r: float, m: int, tol: float) -> float:
    """Scalar Newton polish of a composite root to full precision."""
    for _ in range(60):
        fm, dm = _composite(pmap, x, r, m)
        g = fm - x
        gp = dm - 1.0
        if abs(gp) < 1e-14:
            break
        step = g / gp
        x -= step
        if abs(step) < 1e-16:
            break
    fm, _ = _composite(pmap, x, r, m)
    if abs(fm - x) > max(tol, 1e-11):
        raise NoOrbitError(f"root polish failed at x={x!r} (residual {fm - x!r})")
    return float(x)


def _forward_orbit(pmap: ParamMap, p1: float, r: float, m: int) -> tuple[float, ...]:
    pts = [p1]
    x = p1
    for _ in range(m - 1):
        x = pmap.eval(x, r)
        pts.append(float(x))
    return tuple(pts)


def _proper_divisors(m: int) -> list[int]:
    return [d for d in range(1, m) if m % d == 0]


def _attractor_sample(pmap: ParamMap, r: float) -> np.ndarray:
    """Sorted sample of the attractor from a long free trajectory."""
    lo, hi = pmap.state_domain
    x = lo + 0.5123456789 * (hi - lo)
    for _ in range(200):
        x = pmap.eval(x, r)
    out = np.empty(ATTRACTOR_SAMPLE_STEPS)
    for k in range(ATTRACTOR_SAMPLE_STEPS):
        x = pmap.eval(x, r)
        out[k] = x
    out.sort()
    return out


def _in_attractor(points: tuple[float, ...], sample: np.ndarray) -> bool:
    for p in points:
        i = np.searchsorted(sample, p)
        d = min(
            abs(p - sample[j]) for j in (i - 1, i) if 0 <= j < len(sample)
        )
        if d >= ATTRACTOR_TOL:
            return False
    return True


def _assemble_cycles(
    pmap: ParamMap, r: float, m: int, roots: np.ndarray, tol: float
) -> list[tuple[float, ...]]:
    """Group composite roots into genuine period-m cycles, canonical order."""
    assigned = np.zeros(len(roots), dtype=bool)
    cycles = []
    for idx in range(len(roots)):
        if assigned[idx]:
            continue
        p = roots[idx]
        if abs(p) < 1e-6:
            assigned[idx] = True  # extinction fixed point, never a target
            continue
        orbit = _forward_orbit(pmap, p, r, m)
        # mark every visited root as consumed
        for q in orbit:
            j = np.searchsorted(roots, q)
            for jj in (j - 1, j):
                if 0 <= jj < len(roots) and abs(roots[jj] - q) < 1e-6:
                    assigned[jj] = True
        if m > 1:
            dmin = min(
                abs(a - b) for i, a in enumerate(orbit) for b in orbit[:i]
            )
            if dmin < DISTINCT_TOL:
                continue  # sub-period root
            if any(
                abs(_composite(pmap, p, r, d)[0] - p) < DISTINCT_TOL
                for d in _proper_divisors(m)
            ):
                continue
        # canonical form: polish the smallest point, rebuild forward
        p1 = _polish(pmap, min(orbit), r, m, tol)
        cycles.append(_forward_orbit(pmap, p1, r, m))
    # dedupe cycles that met at different roots
    unique = []
    for c in cycles:
        if not any(abs(c[0] - u[0]) < DEDUPE_TOL for u in unique):
            unique.append(c)
    return unique


def _make_orbit(pmap: ParamMap, r: float, points: tuple[float, ...]) -> PeriodicOrbit:
    m = len(points)
    mult = 1.0
    for p in points:
        mult *= pmap.deriv_x(p, r)
    if m > 1:
        dmin = min(abs(a - b) for i, a in enumerate(points) for b in points[:i])
    else:
        dmin = float("inf")
    return PeriodicOrbit(
        period=m,
        points=points,
        r0=float(r),
        multiplier=float(mult),
        min_pair_distance=float(dmin),
    )


def find_upo(pmap: ParamMap, r: float, m: int, tol: float = 1e-12) -> PeriodicOrbit:
    """Find one genuine period-m orbit of the free map at parameter r.

    When several coexist, prefers the cycle embedded in the chaotic
    attractor; ties go to the smallest starting point. Raises NoOrbitError
    when no genuine period-m cycle exists within ``tol``.
    """
    if m < 1:
        raise ValueError("period must be >= 1")
    if tol <= 0:
        raise ValueError("tol must be > 0")
    roots = composite_roots(pmap, r, m, tol=max(tol, 1e-12))
    cycles = _assemble_cycles(pmap, r, m, roots, tol)
    if not cycles:
        raise NoOrbitError(f"no genuine period-{m} cycle at r={r}")
    if len(cycles) > 1:
        sample = _attractor_sample(pmap, r)
        embedded = [c for c in cycles if _in_attractor(c, sample)]
        if embedded:
            cycles = embedded
        cycles.sort(key=lambda c: c[0])
    return _make_orbit(pmap, r, cycles[0])


def find_fixed_point(pmap: ParamMap, r: float, tol: float = 1e-12) -> PeriodicOrbit:
    """The interior fixed point of the map (x = 0 excluded)."""
    roots = composite_roots(pmap, r, 1, tol=max(tol, 1e-12))
    interior = [x for x in roots if abs(x) >= 1e-6]
    if not interior:
        raise NoOrbitError(f"no interior fixed point at r={r}")
    # unimodal maps cross the diagonal once in the interior; keep the largest
    p1 = _polish(pmap, max(interior), r, 1, tol)
    return _make_orbit(pmap, r, (p1,))


def orbit_multiplier(pmap: ParamMap, orbit: PeriodicOrbit) -> float:
    """Product of d f/dx along the cycle (the orbit's stability multiplier)."""
    mult = 1.0
    for p in orbit.points:
        mult *= pmap.deriv_x(p, orbit.r0)
    return float(mult)


def align_gains(
    orbit: PeriodicOrbit,
    labeled_points: tuple[float, ...],
    labeled_gains: tuple[float, ...],
) -> tuple[float, ...]:
    """Re-anchor a gain tuple given with its own point labels onto the orbit.

    Each labeled point is matched to the nearest orbit component and carries
    its gain along. Raises if the labels do not describe this orbit.
    """
    if len(labeled_points) != orbit.period or len(labeled_gains) != orbit.period:
        raise ValueError("labels must cover every orbit component")
    gains: list[float | None] = [None] * orbit.period
    for lp, lg in zip(labeled_points, labeled_gains):
        i = orbit.nearest_index(lp)
        if abs(orbit.points[i] - lp) > 0.02:
            raise ValueError(f"labeled point {lp} matches no orbit component")
        if gains[i] is not None:
            raise ValueError("two labeled points map to the same component")
        gains[i] = float(lg)
    return tuple(gains)  # type: ignore[arg-type]
