"""Bundled experiment scenarios: the eight published logistic-map benchmarks.

Each scenario builds closed-loop runs at published parameters (map value,
gain tuple, activation radius, noise level) and carries acceptance checks
that decide whether a reproduction counts as successful. Gain tuples that
were published against a specific labeling of the orbit are re-anchored onto
our canonical point order, either by value matching (when the labeled
points are known) or by picking the unique cyclic rotation that the
closed-loop spectrum accepts.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import stability
from .control import DfcFix, DfcPhase, EdfcPhase, SpfBeta, SpfOgy, SpfSwitch
from .dynamics import NoiseSpec, logistic_map
from .orbits import align_gains, find_fixed_point, find_upo
from .sim import SimulationConfig, SimulationResult, lock_fraction, run

FIGURE_IDS = tuple(f"fig{i}" for i in range(1, 9))

#: component values the period-4 gain tuple at r=3.62 was published with
LABELED_POINTS_362 = (0.5522, 0.8951, 0.3398, 0.8121)
LABELED_GAINS_362 = (0.0, 0.0, 0.0, 4.7997)

GAINS_367 = (0.4, 4.97156, -0.598, 2.09)
GAINS_376 = (1.333, 6.79, -0.6999, 3.601)
GAINS_380 = (3.50293, 1.38, 7.49498, -1.181)

NOISE_SPF = 5e-4
NOISE_DFC = 2e-5

ENSEMBLE_SEEDS = 20


@dataclass
class Check:
    name: str
    ok: bool
    expected: str
    actual: str


@dataclass
class ReproReport:
    figure: str
    runs: list[tuple[str, SimulationConfig, SimulationResult]]
    checks: list[Check]
    metrics: dict = field(default_factory=dict)

    @property
    def ok(self) -> bool:
        return all(c.ok for c in self.checks)


def resolve_gain_rotation(pmap, orbit, gains, R: float = 0.0):
    """Anchor an unlabeled gain tuple: the rotation the spectrum accepts.

    Returns (gains in canonical component order, spectral radius). Exactly
    one rotation of each published tuple is stable; we pick the minimum.
    """
    m = orbit.period
    best = None
    for s in range(m):
        rot = tuple(gains[(j + s) % m] for j in range(m))
        rad = stability.closed_loop_radius(pmap, orbit, rot, R)
        if best is None or rad < best[1]:
            best = (rot, rad)
    return best


def stays_locked(result: SimulationResult, orbit, tube: float,
                 tail: int = 2000, frac: float = 0.99) -> bool:
    """Did the run finish inside the tube? Judged over the trailing window."""
    if result.k0 is None:
        return False
    states = result.states[-tail:]
    pts = np.asarray(orbit.points)
    dmin = np.min(np.abs(states[:, None] - pts[None, :]), axis=1)
    return bool(np.mean(dmin < tube) >= frac)


def _metrics(res: SimulationResult) -> dict:
    return {
        "k0": res.k0,
        "converged_at": res.converged_at,
        "peak_u": res.peak_u,
        "clamp_count": res.clamp_count,
        "saturation_count": res.saturation_count,
        "relock_count": res.relock_count,
        "final_state": res.final_state,
    }


def _fig1(seed: int) -> ReproReport:
    """Switching vs per-point proportional control on the r=3.8 4-cycle, noisy."""
    r = 3.8
    pmap = logistic_map(r)
    orbit = find_upo(pmap, r, 4)
    alphas = tuple(stability.alpha_gain(pmap, p) for p in orbit.points)
    eps, delta, steps = 0.005, 0.2, 3000

    def law_switch():
        return SpfSwitch(orbit=orbit, gains=alphas, epsilon=eps, delta=delta)

    def law_point(i):
        return SpfOgy(orbit=orbit, index=i, gain=alphas[i - 1], epsilon=eps, delta=delta)

    def cfg(law, s):
        return SimulationConfig(
            pmap=pmap, law=law, x0=0.5, steps=steps,
            noise=NoiseSpec(amplitude=NOISE_SPF, seed=s),
        )

    runs = [("switching", cfg(law_switch(), seed), run(cfg(law_switch(), seed)))]
    for i in range(1, 5):
        c = cfg(law_point(i), seed)
        runs.append((f"per_point_{i}", c, run(c)))

    tube = 3 * eps
    mean_sw = float(np.mean([
        lock_fraction(run(cfg(law_switch(), s)), orbit, tube)
        for s in range(ENSEMBLE_SEEDS)
    ]))
    checks = []
    per_point_means = {}
    for i in range(1, 5):
        mean_i = float(np.mean([
            lock_fraction(run(cfg(law_point(i), s)), orbit, tube)
            for s in range(ENSEMBLE_SEEDS)
        ]))
        per_point_means[i] = mean_i
        checks.append(Check(
            name=f"switching beats per-point law {i} under noise",
            ok=mean_sw > mean_i,
            expected=f"mean lock fraction > {mean_i:.4f}",
            actual=f"{mean_sw:.4f}",
        ))
    report = ReproReport("fig1", runs, checks)
    report.metrics["ensemble_mean_lock"] = {"switching": mean_sw, **{
        f"per_point_{i}": v for i, v in per_point_means.items()}}
    return report


def _fig2(seed: int) -> ReproReport:
    """Proportional vs delayed control of the r=3.8 fixed point."""
    r = 3.8
    pmap = logistic_map(r)
    orbit = find_fixed_point(pmap, r)
    delta = 0.2
    beta_mid = stability.alpha_gain(pmap, orbit.points[0])
    gamma = stability.gamma_fixed_range(r).midpoint
    steps = 100_000

    entries = [
        ("beta_mid", SpfBeta(orbit=orbit, gains=(beta_mid,), epsilon=0.005, delta=delta), 0.94),
        ("beta_low", SpfBeta(orbit=orbit, gains=(5.0,), epsilon=0.005, delta=delta), 0.94),
        ("dfc_fix", DfcFix(orbit=orbit, gain=gamma, epsilon=0.005, delta=delta), 0.94),
        ("beta_low_wide", SpfBeta(orbit=orbit, gains=(5.0,), epsilon=delta / 5.0, delta=delta), 0.5),
    ]
    runs = []
    for label, law, x0 in entries:
        cfg = SimulationConfig(
            pmap=pmap, law=law, x0=x0, steps=steps, convergence_window=8,
        )
        runs.append((label, cfg, run(cfg)))

    checks = []
    for label, _, res in runs:
        checks.append(Check(
            name=f"{label} converges with bounded effort",
            ok=res.converged_at is not None and res.peak_u <= delta,
            expected=f"converged within {steps} steps, peak |u| <= {delta}",
            actual=f"converged_at={res.converged_at}, peak_u={res.peak_u:.4g}",
        ))
    by = {label: res for label, _, res in runs}
    checks.append(Check(
        name="smaller gain needs less effort",
        ok=by["beta_low"].peak_u < by["beta_mid"].peak_u,
        expected=f"peak < {by['beta_mid'].peak_u:.4g}",
        actual=f"{by['beta_low'].peak_u:.4g}",
    ))
    return ReproReport("fig2", runs, checks)


def _fig3(seed: int) -> ReproReport:
    """Fixed-point stabilization with a seeded delay buffer."""
    r = 3.8
    pmap = logistic_map(r)
    orbit = find_fixed_point(pmap, r)
    delta = 0.2
    gamma = stability.gamma_fixed_range(r).midpoint
    steps = 20_000
    runs = []
    cfg_d = SimulationConfig(
        pmap=pmap,
        law=DfcFix(orbit=orbit, gain=gamma, epsilon=0.005, delta=delta),
        x0=0.94, steps=steps, history0=(0.45,), convergence_window=8,
    )
    runs.append(("dfc_fix", cfg_d, run(cfg_d)))
    beta_mid = stability.alpha_gain(pmap, orbit.points[0])
    cfg_b = SimulationConfig(
        pmap=pmap,
        law=SpfBeta(orbit=orbit, gains=(beta_mid,), epsilon=0.005, delta=delta),
        x0=0.94, steps=steps, convergence_window=8,
    )
    runs.append(("beta_mid", cfg_b, run(cfg_b)))
    checks = [
        Check(
            name=f"{label} converges with bounded effort",
            ok=res.converged_at is not None and res.peak_u <= delta,
            expected=f"converged within {steps} steps, peak |u| <= {delta}",
            actual=f"converged_at={res.converged_at}, peak_u={res.peak_u:.4g}",
        )
        for label, _, res in runs
    ]
    return ReproReport("fig3", runs, checks)


def _fig4(seed: int) -> ReproReport:
    """Single-gain phase-locked delayed feedback on the r=3.62 4-cycle."""
    r = 3.62
    pmap = logistic_map(r)
    orbit = find_upo(pmap, r, 4)
    gains = align_gains(orbit, LABELED_POINTS_362, LABELED_GAINS_362)
    law = DfcPhase(orbit=orbit, gains=gains, epsilon=0.05, delta=4.0 - r)
    cfg = SimulationConfig(pmap=pmap, law=law, x0=0.5, steps=20_000)
    res = run(cfg)
    radius = stability.dfc_product_radius(pmap, orbit, gains)

    i = orbit.nearest_index(0.8121)
    rng = stability.single_gamma_range(pmap, orbit, i)
    gamma = gains[i]
    checks = [
        Check("run converges to the 4-cycle",
              res.converged_at is not None,
              "converged_at within 20000 steps", f"converged_at={res.converged_at}"),
        Check("orbit points match the published cycle to 5e-4",
              all(orbit.distance_to(p) < 5e-4 for p in LABELED_POINTS_362),
              "every labeled point within 5e-4 of the found cycle",
              f"points={tuple(round(p, 6) for p in orbit.points)}"),
        Check("closed-loop spectral radius below one",
              radius < 1.0, "spectral radius < 1", f"{radius:.6f}"),
        Check("published gain inside the single-gain range",
              rng.feasible and rng.contains(gamma),
              f"{gamma} in ({rng.lower:.4f}, {rng.upper:.4f})",
              f"feasible={rng.feasible}"),
    ]
    report = ReproReport("fig4", [("dfc_phase", cfg, res)], checks)
    report.metrics["spectral_radius"] = radius
    report.metrics["single_gain_range"] = (rng.lower, rng.upper)
    return report


def _dfc_phase_figure(fig: str, r: float, gains_published, noise_amp: float,
                      seed: int, steps: int, relock: bool) -> ReproReport:
    pmap = logistic_map(r)
    orbit = find_upo(pmap, r, 4)
    gains, radius = resolve_gain_rotation(pmap, orbit, gains_published)
    law = DfcPhase(orbit=orbit, gains=gains, epsilon=0.05, delta=4.0 - r)
    noise = NoiseSpec(amplitude=noise_amp, seed=seed)
    mode = "clamp" if noise_amp else "strict"
    cfg = SimulationConfig(
        pmap=pmap, law=law, x0=0.5, steps=steps, noise=noise,
        saturation_mode=mode, relock=relock,
    )
    res = run(cfg)
    checks = [
        Check("closed-loop spectral radius below one",
              radius < 1.0, "spectral radius < 1", f"{radius:.6f}"),
    ]
    if noise_amp == 0.0:
        checks.append(Check(
            "run converges to the 4-cycle",
            res.converged_at is not None,
            f"converged_at within {steps} steps",
            f"converged_at={res.converged_at}",
        ))
    else:
        locked = 0
        for s in range(ENSEMBLE_SEEDS):
            cfg_s = SimulationConfig(
                pmap=pmap, law=law, x0=0.5, steps=steps,
                noise=NoiseSpec(amplitude=noise_amp, seed=s),
                saturation_mode="clamp", relock=True,
            )
            if stays_locked(run(cfg_s), orbit, tube=0.05):
                locked += 1
        need = int(0.9 * ENSEMBLE_SEEDS)
        checks.append(Check(
            "noisy ensemble stays locked",
            locked >= need,
            f">= {need}/{ENSEMBLE_SEEDS} seeds locked in the 0.05 tube",
            f"{locked}/{ENSEMBLE_SEEDS}",
        ))
    report = ReproReport(fig, [("dfc_phase", cfg, res)], checks)
    report.metrics["spectral_radius"] = radius
    report.metrics["gains_canonical"] = gains
    return report


def _fig5(seed: int) -> ReproReport:
    return _dfc_phase_figure("fig5", 3.67, GAINS_367, 0.0, seed, 20_000, False)


def _fig6(seed: int) -> ReproReport:
    return _dfc_phase_figure("fig6", 3.67, GAINS_367, NOISE_DFC, seed, 6000, True)


def _edfc_figure(fig: str, r: float, gains_published, seed: int) -> ReproReport:
    pmap = logistic_map(r)
    orbit = find_upo(pmap, r, 4)
    R = 0.3
    gains, radius = resolve_gain_rotation(pmap, orbit, gains_published, R)
    law = EdfcPhase(orbit=orbit, gains=gains, R=R, epsilon=0.05, delta=4.0 - r)
    cfg = SimulationConfig(
        pmap=pmap, law=law, x0=0.5, steps=30_000,
        saturation_mode="clamp", relock=True,
    )
    res = run(cfg)

    # coefficient identity between the block Jacobian and its closed form
    worst = 0.0
    for p, g in zip(orbit.points, gains):
        J = stability.edfc_jacobian(pmap, p, g, R, 4, orbit.r0)
        ref = stability.edfc_char_poly(
            pmap.deriv_x(p, r), pmap.deriv_r(p, r), g, R
        )
        worst = max(worst, float(np.max(np.abs(np.poly(J) - ref))))

    checks = [
        Check("closed-loop spectral radius below one",
              radius < 1.0, "spectral radius < 1", f"{radius:.6f}"),
        Check("run converges to the 4-cycle",
              res.converged_at is not None,
              "converged_at within 30000 steps", f"converged_at={res.converged_at}"),
        Check("block-Jacobian polynomial matches the closed form",
              worst <= 1e-10, "coefficient gap <= 1e-10", f"{worst:.2e}"),
    ]
    report = ReproReport(fig, [("edfc_phase", cfg, res)], checks)
    report.metrics["spectral_radius"] = radius
    report.metrics["gains_canonical"] = gains
    report.metrics["charpoly_gap"] = worst
    return report


def _fig7(seed: int) -> ReproReport:
    return _edfc_figure("fig7", 3.76, GAINS_376, seed)


def _fig8(seed: int) -> ReproReport:
    return _edfc_figure("fig8", 3.8, GAINS_380, seed)


_BUILDERS = {
    "fig1": _fig1,
    "fig2": _fig2,
    "fig3": _fig3,
    "fig4": _fig4,
    "fig5": _fig5,
    "fig6": _fig6,
    "fig7": _fig7,
    "fig8": _fig8,
}


def reproduce(figure: str, seed: int = 0) -> ReproReport:
    """Run one bundled scenario and its acceptance checks."""
    if figure not in _BUILDERS:
        raise KeyError(f"unknown figure id {figure!r}; choose from {FIGURE_IDS}")
    report = _BUILDERS[figure](seed)
    for label, _, res in report.runs:
        report.metrics.setdefault("runs", {})[label] = _metrics(res)
    return report
