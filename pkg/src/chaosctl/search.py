"""Heuristic search for gain tuples with a stable closed-loop spectrum.

Deterministic for a fixed seed: a handful of structured starting tuples
(single-gain ranges when feasible), then batches of random tuples inside the
bounds interleaved with coordinate-wise refinement (coarse line scan plus
golden-section) of the best tuple so far. The first tuple whose spectral
radius clears the target is returned immediately, so enlarging the budget
can only find the same solution or a later one, never lose it.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .dynamics import ParamMap
from .errors import NoOrbitError
from .orbits import PeriodicOrbit, find_upo
from . import stability

GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0

DEFAULT_BOUNDS = (-10.0, 10.0)
DEFAULT_BUDGET = 20_000
DEFAULT_TARGET = 0.999


@dataclass(frozen=True)
class SearchConfig:
    """Search space and stopping rules for one gain-tuple search."""

    r: float
    m: int
    law: str = "dfc"  # "dfc" or "edfc"
    R: float = 0.0
    bounds: tuple[float, float] = DEFAULT_BOUNDS
    budget: int = DEFAULT_BUDGET
    seed: int = 0
    target_radius: float = DEFAULT_TARGET
    frozen: dict[int, float] = field(default_factory=dict)

    def __post_init__(self):
        if self.budget < 0:
            raise ValueError("budget must be >= 0")
        if not self.bounds[0] < self.bounds[1]:
            raise ValueError("bounds must be a non-empty interval")
        if not 0.0 < self.target_radius < 1.0:
            raise ValueError("target_radius must lie in (0, 1)")
        if self.law not in ("dfc", "edfc"):
            raise ValueError("law must be 'dfc' or 'edfc'")
        for i in self.frozen:
            if not 0 <= i < self.m:
                raise ValueError(f"frozen index {i} out of range")


@dataclass(frozen=True)
class SearchResult:
    gains: tuple[float, ...]
    radius: float
    evaluations: int


class _Budget(Exception):
    pass


class _Found(Exception):
    def __init__(self, gains, radius):
        self.gains = gains
        self.radius = radius


class _Objective:
    """Counts evaluations, tracks the best tuple, raises on first hit."""

    def __init__(self, pmap, orbit, cfg: SearchConfig):
        self.pmap = pmap
        self.orbit = orbit
        self.cfg = cfg
        self.count = 0
        self.best: tuple[float, ...] | None = None
        self.best_radius = math.inf

    def radius_of(self, gains) -> float:
        if self.cfg.law == "dfc":
            return stability.dfc_product_radius(self.pmap, self.orbit, gains)
        return stability.edfc_product_radius(
            self.pmap, self.orbit, gains, self.cfg.R
        )

    def __call__(self, gains) -> float:
        if self.count >= self.cfg.budget:
            raise _Budget
        self.count += 1
        rad = self.radius_of(gains)
        clean = tuple(float(v) for v in gains)
        if rad < self.best_radius:
            self.best_radius = rad
            self.best = clean
        if rad < self.cfg.target_radius:
            raise _Found(clean, rad)
        return rad


def _apply_frozen(gains, cfg: SearchConfig) -> list[float]:
    g = [float(v) for v in gains]
    for i, v in cfg.frozen.items():
        g[i] = float(v)
    return g


def _structured_starts(pmap, orbit, cfg: SearchConfig) -> list[list[float]]:
    """Deterministic first candidates: zero tuple and single-gain midpoints."""
    m = cfg.m
    starts = [_apply_frozen([0.0] * m, cfg)]
    for i in range(m):
        if i in cfg.frozen:
            continue
        rng = stability.single_gamma_range(pmap, orbit, i)
        if rng.feasible:
            g = [0.0] * m
            g[i] = min(max(rng.midpoint, cfg.bounds[0]), cfg.bounds[1])
            starts.append(_apply_frozen(g, cfg))
    return starts


def _line_refine(objective, gains, j, bounds, coarse=9, golden_iters=24):
    """Coarse scan then golden-section along coordinate j; returns best found."""
    lo, hi = bounds
    grid = np.linspace(lo, hi, coarse)
    vals = []
    for v in grid:
        g = list(gains)
        g[j] = float(v)
        vals.append(objective(g))
    b = int(np.argmin(vals))
    a = grid[max(b - 1, 0)]
    c = grid[min(b + 1, coarse - 1)]
    # golden-section inside the bracketing cell pair
    x1 = c - GOLDEN * (c - a)
    x2 = a + GOLDEN * (c - a)
    g1 = list(gains)
    g1[j] = x1
    f1 = objective(g1)
    g2 = list(gains)
    g2[j] = x2
    f2 = objective(g2)
    for _ in range(golden_iters):
        if f1 < f2:
            c, x2, f2 = x2, x1, f1
            x1 = c - GOLDEN * (c - a)
            g1 = list(gains)
            g1[j] = x1
            f1 = objective(g1)
        else:
            a, x1, f1 = x1, x2, f2
            x2 = a + GOLDEN * (c - a)
            g2 = list(gains)
            g2[j] = x2
            f2 = objective(g2)


def search_gains(
    cfg: SearchConfig, orbit: PeriodicOrbit, pmap: ParamMap
) -> SearchResult | None:
    """Search for a gain tuple whose closed-loop spectral radius beats the target.

    Returns None when the evaluation budget runs out first. Every returned
    tuple is re-verified through the explicit matrix product before being
    accepted.
    """
    if orbit.period != cfg.m:
        raise ValueError("orbit period and search period disagree")
    objective = _Objective(pmap, orbit, cfg)
    rng = np.random.default_rng(cfg.seed)
    lo, hi = cfg.bounds
    free = [i for i in range(cfg.m) if i not in cfg.frozen]
    try:
        for g in _structured_starts(pmap, orbit, cfg):
            objective(g)
        while True:
            for _ in range(64):
                g = _apply_frozen(rng.uniform(lo, hi, cfg.m), cfg)
                objective(g)
            base = list(objective.best or _apply_frozen([0.0] * cfg.m, cfg))
            for j in free:
                _line_refine(objective, base, j, cfg.bounds)
                base = list(objective.best)
    except _Budget:
        return None
    except _Found as hit:
        verify = _verify_radius(pmap, orbit, cfg, hit.gains)
        if verify >= 1.0 - stability.STABILITY_MARGIN:
            # disagreement between routes; treat as not found
            return None
        return SearchResult(
            gains=hit.gains, radius=hit.radius, evaluations=objective.count
        )


def _verify_radius(pmap, orbit, cfg: SearchConfig, gains) -> float:
    """Independent re-check of a candidate through the other spectral route."""
    if cfg.law == "dfc":
        P = stability.dfc_product_matrix(pmap, orbit, gains)
        return stability.spectral_radius(P)
    P = stability.edfc_product_matrix(pmap, orbit, gains, cfg.R)
    coeffs = np.poly(P)
    return float(np.max(np.abs(stability.durand_kerner(coeffs))))


@dataclass
class ScanRow:
    r: float
    found: bool
    gains: tuple[float, ...] | None = None
    radius: float | None = None
    error: str | None = None


def stabilizable_range_scan(
    r_lo: float,
    r_hi: float,
    step: float,
    cfg: SearchConfig,
    pmap_factory,
) -> list[ScanRow]:
    """Run the gain search on every parameter grid point in [r_lo, r_hi].

    ``cfg`` is the per-point template (its r is replaced); ``pmap_factory``
    builds the map at each grid parameter. Rows flag parameters where no
    period-m orbit exists instead of aborting the scan.
    """
    if not r_lo < r_hi:
        return []
    n = int(round((r_hi - r_lo) / step))
    rows = []
    for k in range(n + 1):
        r = r_lo + k * step
        if r > r_hi + 1e-12:
            break
        pmap = pmap_factory(r)
        point_cfg = SearchConfig(
            r=r,
            m=cfg.m,
            law=cfg.law,
            R=cfg.R,
            bounds=cfg.bounds,
            budget=cfg.budget,
            seed=cfg.seed,
            target_radius=cfg.target_radius,
            frozen=dict(cfg.frozen),
        )
        try:
            orbit = find_upo(pmap, r, cfg.m)
        except NoOrbitError as exc:
            rows.append(ScanRow(r=r, found=False, error=str(exc)))
            continue
        res = search_gains(point_cfg, orbit, pmap)
        if res is None:
            rows.append(ScanRow(r=r, found=False))
        else:
            rows.append(ScanRow(r=r, found=True, gains=res.gains, radius=res.radius))
    return rows
