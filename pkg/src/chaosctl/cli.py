"""Command-line front end: orbits, gain ranges, stability checks, simulation,
gain search, parameter scans, and bundled scenario reproduction.

Exit codes
----------
0  success
1  bad flags or configuration
2  no orbit found (upo)
3  not converged (simulate) / nothing found (search, scan)
4  strict-mode effort or parameter violation (simulate)
5  scenario acceptance check failed (repro)

Files are UTF-8: CSV runs with header ``k,x,u,phase,dist`` (floats written
in shortest round-trip form, phases 1-based or empty), JSON metrics. The
environment variable CHAOSCTL_SEED supplies a default seed.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys
from pathlib import Path

from . import figures, plots, stability
from .control import (
    DfcFix,
    DfcPhase,
    DfcSwitch,
    EdfcPhase,
    SpfBeta,
    SpfOgy,
    SpfPhase,
    SpfSwitch,
)
from .dynamics import NoiseSpec, logistic_map
from .errors import (
    ChaosControlError,
    ConfigError,
    EffortViolationError,
    NoOrbitError,
    ParameterRangeError,
)
from .orbits import find_upo
from .search import SearchConfig, search_gains, stabilizable_range_scan
from .sim import SimulationConfig, default_delta, run

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_NO_ORBIT = 2
EXIT_NOT_FOUND = 3
EXIT_EFFORT = 4
EXIT_CHECK_FAILED = 5

LAW_NAMES = (
    "spf-ogy",
    "spf-switch",
    "spf-beta",
    "spf-phase",
    "dfc-fix",
    "dfc-switch",
    "dfc-phase",
    "edfc-phase",
)

SPEC_KEYS = {
    "map",
    "r",
    "law",
    "gains",
    "epsilon",
    "delta",
    "R",
    "x0",
    "steps",
    "noise_amplitude",
    "seed",
    "output",
    "period",
    "index",
    "convergence_tol",
    "convergence_window",
    "saturation_mode",
    "relock",
    "history0",
}


class _Parser(argparse.ArgumentParser):
    """argparse that reports usage problems as ConfigError (exit 1)."""

    def error(self, message):
        raise ConfigError(message)


def _emit(obj) -> None:
    print(json.dumps(obj, indent=2, sort_keys=True))


def _default_seed() -> int:
    return int(os.environ.get("CHAOSCTL_SEED", "0"))


def _parse_gains(text: str) -> tuple[float, ...]:
    try:
        return tuple(float(v) for v in text.split(","))
    except ValueError as exc:
        raise ConfigError(f"bad gains {text!r}: {exc}") from None


def write_run_csv(path, result) -> None:
    """Per-step records, byte-stable for identical runs."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["k", "x", "u", "phase", "dist"])
        for k in range(len(result.controls)):
            w.writerow([
                k,
                repr(float(result.states[k])),
                repr(float(result.controls[k])),
                "" if result.phases[k] is None else result.phases[k],
                repr(float(result.distances[k])),
            ])


def _build_parser() -> _Parser:
    p = _Parser(prog="chaosctl", description=__doc__,
                formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = p.add_subparsers(dest="command", required=True)

    up = sub.add_parser("upo", help="locate a periodic orbit of the free map")
    up.add_argument("--r", type=float, required=True)
    up.add_argument("--period", type=int, required=True)
    up.add_argument("--tol", type=float, default=1e-12)

    gp = sub.add_parser("gains", help="stabilizing gain ranges")
    gp.add_argument("--law", choices=("spf", "dfc-fix", "dfc-single"), required=True)
    gp.add_argument("--r", type=float, required=True)
    gp.add_argument("--period", type=int, default=1)
    gp.add_argument("--index", type=int, help="1-based component (dfc-single)")

    cp = sub.add_parser("check-stability", help="closed-loop spectral radius of a gain tuple")
    cp.add_argument("--law", choices=("dfc", "edfc"), required=True)
    cp.add_argument("--r", type=float, required=True)
    cp.add_argument("--period", type=int, required=True)
    cp.add_argument("--gains", type=str, required=True)
    cp.add_argument("--R", type=float, default=0.0)

    sp = sub.add_parser("simulate", help="closed-loop run; CSV out, metrics JSON")
    sp.add_argument("--config", type=str, help="JSON experiment spec (flags override)")
    sp.add_argument("--map", dest="map_name", choices=("logistic",))
    sp.add_argument("--r", type=float)
    sp.add_argument("--law", choices=LAW_NAMES)
    sp.add_argument("--gains", type=str)
    sp.add_argument("--epsilon", type=float)
    sp.add_argument("--delta", type=float)
    sp.add_argument("--R", type=float)
    sp.add_argument("--x0", type=float)
    sp.add_argument("--steps", type=int)
    sp.add_argument("--noise", type=float, dest="noise_amplitude")
    sp.add_argument("--seed", type=int)
    sp.add_argument("--out", type=str, dest="output")
    sp.add_argument("--period", type=int)
    sp.add_argument("--index", type=int)
    sp.add_argument("--convergence-tol", type=float, dest="convergence_tol")
    sp.add_argument("--convergence-window", type=int, dest="convergence_window")
    sp.add_argument("--saturation", choices=("strict", "clamp"), dest="saturation_mode")
    sp.add_argument("--relock", action="store_const", const=True, default=None)
    sp.add_argument("--plot", type=str, help="also render the run to this PNG")

    se = sub.add_parser("search", help="heuristic gain-tuple search")
    se.add_argument("--r", type=float, required=True)
    se.add_argument("--period", type=int, required=True)
    se.add_argument("--law", choices=("dfc", "edfc"), default="dfc")
    se.add_argument("--R", type=float, default=0.0)
    se.add_argument("--budget", type=int, default=20_000)
    se.add_argument("--seed", type=int)
    se.add_argument("--bounds", type=str, default="-10:10")
    se.add_argument("--target-radius", type=float, default=0.999)
    se.add_argument("--freeze", type=str,
                    help="1-based components to pin, e.g. '1,2,3' or '1=0.5,3'")

    sc = sub.add_parser("scan", help="gain search across a parameter range")
    sc.add_argument("--r-range", type=str, required=True, help="lo:hi:step")
    sc.add_argument("--period", type=int, required=True)
    sc.add_argument("--law", choices=("dfc", "edfc"), default="dfc")
    sc.add_argument("--R", type=float, default=0.0)
    sc.add_argument("--budget", type=int, default=20_000)
    sc.add_argument("--seed", type=int)
    sc.add_argument("--plot", type=str, help="render the scan to this PNG")

    rp = sub.add_parser("repro", help="run a bundled scenario with its checks")
    rp.add_argument("figure", type=str)
    rp.add_argument("--out", type=str, default="repro_out")
    rp.add_argument("--seed", type=int)

    return p


def _cmd_upo(args) -> int:
    pmap = logistic_map(args.r)
    try:
        orbit = find_upo(pmap, args.r, args.period, tol=args.tol)
    except NoOrbitError as exc:
        _emit({"error": str(exc), "r": args.r, "period": args.period})
        return EXIT_NO_ORBIT
    _emit({
        "r": args.r,
        "period": orbit.period,
        "points": list(orbit.points),
        "multiplier": orbit.multiplier,
        "min_pair_distance": orbit.min_pair_distance,
    })
    return EXIT_OK


def _cmd_gains(args) -> int:
    pmap = logistic_map(args.r)
    if args.law == "spf":
        orbit = find_upo(pmap, args.r, args.period)
        ranges = []
        for p in orbit.points:
            rng = stability.beta_range(pmap, p)
            ranges.append({
                "point": p,
                "lower": rng.lower,
                "upper": rng.upper,
                "feasible": rng.feasible,
                "alpha": stability.alpha_gain(pmap, p),
            })
        _emit({"law": "spf", "r": args.r, "period": orbit.period, "ranges": ranges})
        return EXIT_OK
    if args.law == "dfc-fix":
        rng = stability.gamma_fixed_range(args.r)
        _emit({
            "law": "dfc-fix",
            "r": args.r,
            "lower": rng.lower,
            "upper": rng.upper,
            "feasible": rng.feasible,
        })
        return EXIT_OK
    # dfc-single
    if args.index is None:
        raise ConfigError("--index is required for dfc-single")
    orbit = find_upo(pmap, args.r, args.period)
    if not 1 <= args.index <= orbit.period:
        raise ConfigError(f"--index must be in 1..{orbit.period}")
    rng = stability.single_gamma_range(pmap, orbit, args.index - 1)
    value, satisfied = stability.feasibility_condition(pmap, orbit)
    _emit({
        "law": "dfc-single",
        "r": args.r,
        "period": orbit.period,
        "index": args.index,
        "point": orbit.points[args.index - 1],
        "lower": rng.lower,
        "upper": rng.upper,
        "feasible": rng.feasible,
        "condition_value": value,
        "condition_satisfied": satisfied,
    })
    return EXIT_OK


def _cmd_check_stability(args) -> int:
    pmap = logistic_map(args.r)
    orbit = find_upo(pmap, args.r, args.period)
    gains = _parse_gains(args.gains)
    if len(gains) != orbit.period:
        raise ConfigError("need one gain per orbit component")
    radius = stability.closed_loop_radius(pmap, orbit, gains, args.R)
    _emit({
        "law": args.law,
        "r": args.r,
        "period": orbit.period,
        "gains": list(gains),
        "R": args.R,
        "spectral_radius": radius,
        "stable": stability.is_stable(radius),
    })
    return EXIT_OK


def _load_spec(args) -> dict:
    spec: dict = {}
    if args.config:
        try:
            raw = json.loads(Path(args.config).read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {args.config}: {exc}") from None
        if not isinstance(raw, dict):
            raise ConfigError("config must be a JSON object")
        unknown = set(raw) - SPEC_KEYS
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        spec.update(raw)
    for key in SPEC_KEYS:
        attr = "map_name" if key == "map" else key
        value = getattr(args, attr, None)
        if value is not None:
            spec[key] = value
    spec.setdefault("map", "logistic")
    spec.setdefault("period", 1)
    spec.setdefault("x0", 0.5)
    spec.setdefault("steps", 10_000)
    spec.setdefault("noise_amplitude", 0.0)
    spec.setdefault("seed", _default_seed())
    spec.setdefault("output", "run.csv")
    spec.setdefault("R", 0.0)
    spec.setdefault("saturation_mode", "strict")
    spec.setdefault("relock", False)
    spec.setdefault("history0", [])
    if "r" not in spec:
        raise ConfigError("r is required")
    if "law" not in spec:
        raise ConfigError("law is required")
    if spec["law"] not in LAW_NAMES:
        raise ConfigError(f"unknown law {spec['law']!r}")
    return spec


def _build_law(spec: dict, pmap, orbit):
    epsilon = spec.get("epsilon", 0.005)
    delta = spec.get("delta", default_delta(pmap))
    name = spec["law"]
    gains = spec.get("gains")
    if isinstance(gains, str):
        gains = _parse_gains(gains)
    elif gains is not None:
        gains = tuple(float(g) for g in gains)
    if name in ("spf-ogy", "spf-switch") and gains is None:
        gains = tuple(stability.alpha_gain(pmap, p) for p in orbit.points)
    if gains is None and name != "dfc-fix":
        raise ConfigError(f"law {name} needs gains")
    if name == "spf-ogy":
        index = spec.get("index", 1)
        gain = gains[index - 1] if len(gains) == orbit.period else gains[0]
        return SpfOgy(orbit=orbit, index=index, gain=gain, epsilon=epsilon, delta=delta)
    if name in ("spf-switch", "spf-beta", "spf-phase", "dfc-switch", "dfc-phase",
                "edfc-phase"):
        if len(gains) != orbit.period:
            raise ConfigError("need one gain per orbit component")
    if name == "spf-switch":
        return SpfSwitch(orbit=orbit, gains=gains, epsilon=epsilon, delta=delta)
    if name == "spf-beta":
        return SpfBeta(orbit=orbit, gains=gains, epsilon=epsilon, delta=delta)
    if name == "spf-phase":
        return SpfPhase(orbit=orbit, gains=gains, epsilon=epsilon, delta=delta)
    if name == "dfc-fix":
        gain = gains[0] if gains else stability.gamma_fixed_range(pmap.nominal_r0).midpoint
        return DfcFix(orbit=orbit, gain=gain, epsilon=epsilon, delta=delta)
    if name == "dfc-switch":
        return DfcSwitch(orbit=orbit, gains=gains, epsilon=epsilon, delta=delta)
    if name == "dfc-phase":
        return DfcPhase(orbit=orbit, gains=gains, epsilon=epsilon, delta=delta)
    return EdfcPhase(orbit=orbit, gains=gains, R=spec["R"], epsilon=epsilon, delta=delta)


def _cmd_simulate(args) -> int:
    spec = _load_spec(args)
    pmap = logistic_map(spec["r"])
    orbit = find_upo(pmap, spec["r"], spec["period"])
    try:
        law = _build_law(spec, pmap, orbit)
        cfg = SimulationConfig(
            pmap=pmap,
            law=law,
            x0=spec["x0"],
            steps=spec["steps"],
            noise=NoiseSpec(amplitude=spec["noise_amplitude"], seed=spec["seed"]),
            convergence_tol=spec.get("convergence_tol", 1e-6),
            convergence_window=spec.get("convergence_window"),
            saturation_mode=spec["saturation_mode"],
            relock=spec["relock"],
            history0=tuple(spec["history0"]),
        )
    except (ValueError, TypeError) as exc:
        raise ConfigError(str(exc)) from None
    try:
        result = run(cfg)
    except (EffortViolationError, ParameterRangeError) as exc:
        _emit({"error": str(exc), "spec": _json_spec(spec)})
        return EXIT_EFFORT
    write_run_csv(spec["output"], result)
    if args.plot:
        plots.render_run(result, orbit, args.plot, f"{spec['law']} at r={spec['r']}")
    _emit({
        "spec": _json_spec(spec),
        "metrics": {
            "k0": result.k0,
            "converged_at": result.converged_at,
            "peak_u": result.peak_u,
            "clamp_count": result.clamp_count,
            "saturation_count": result.saturation_count,
            "relock_count": result.relock_count,
            "final_state": result.final_state,
        },
    })
    return EXIT_OK if result.converged_at is not None else EXIT_NOT_FOUND


def _json_spec(spec: dict) -> dict:
    out = dict(spec)
    if isinstance(out.get("gains"), tuple):
        out["gains"] = list(out["gains"])
    if isinstance(out.get("history0"), tuple):
        out["history0"] = list(out["history0"])
    return out


def _parse_freeze(text: str | None) -> dict[int, float]:
    frozen: dict[int, float] = {}
    if not text:
        return frozen
    for part in text.split(","):
        if "=" in part:
            idx, val = part.split("=", 1)
            frozen[int(idx) - 1] = float(val)
        else:
            frozen[int(part) - 1] = 0.0
    return frozen


def _cmd_search(args) -> int:
    pmap = logistic_map(args.r)
    try:
        orbit = find_upo(pmap, args.r, args.period)
    except NoOrbitError as exc:
        _emit({"error": str(exc)})
        return EXIT_NO_ORBIT
    lo, _, hi = args.bounds.partition(":")
    cfg = SearchConfig(
        r=args.r,
        m=args.period,
        law=args.law,
        R=args.R,
        bounds=(float(lo), float(hi)),
        budget=args.budget,
        seed=args.seed if args.seed is not None else _default_seed(),
        target_radius=args.target_radius,
        frozen=_parse_freeze(args.freeze),
    )
    res = search_gains(cfg, orbit, pmap)
    if res is None:
        _emit({"r": args.r, "found": False, "budget": args.budget})
        return EXIT_NOT_FOUND
    _emit({
        "r": args.r,
        "found": True,
        "gains": list(res.gains),
        "radius": res.radius,
        "evaluations": res.evaluations,
    })
    return EXIT_OK


def _cmd_scan(args) -> int:
    try:
        lo, hi, step = (float(v) for v in args.r_range.split(":"))
    except ValueError:
        raise ConfigError(f"bad --r-range {args.r_range!r}; expected lo:hi:step") from None
    cfg = SearchConfig(
        r=lo,
        m=args.period,
        law=args.law,
        R=args.R,
        budget=args.budget,
        seed=args.seed if args.seed is not None else _default_seed(),
    )
    rows = stabilizable_range_scan(lo, hi, step, cfg, logistic_map)
    for row in rows:
        _emit_row = {
            "r": row.r,
            "found": row.found,
            "gains": list(row.gains) if row.gains else None,
            "radius": row.radius,
        }
        if row.error:
            _emit_row["error"] = row.error
        print(json.dumps(_emit_row, sort_keys=True))
    if args.plot and rows:
        plots.render_scan(rows, args.plot, f"{args.law} scan {lo}..{hi}")
    return EXIT_OK if rows and all(r.found for r in rows) else EXIT_NOT_FOUND


def _cmd_repro(args) -> int:
    figure = args.figure
    if figure not in figures.FIGURE_IDS:
        _emit({"error": f"unknown figure id {figure!r}", "known": list(figures.FIGURE_IDS)})
        return EXIT_USAGE
    seed = args.seed if args.seed is not None else _default_seed()
    report = figures.reproduce(figure, seed=seed)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    for label, cfg, result in report.runs:
        write_run_csv(out / f"{figure}_{label}.csv", result)
        plots.render_run(
            result, cfg.law.orbit, out / f"{figure}_{label}.png",
            f"{figure} {label} (r={cfg.pmap.nominal_r0})",
        )
    payload = {
        "figure": figure,
        "ok": report.ok,
        "checks": [
            {"name": c.name, "ok": c.ok, "expected": c.expected, "actual": c.actual}
            for c in report.checks
        ],
        "metrics": report.metrics,
    }
    (out / f"{figure}_metrics.json").write_text(
        json.dumps(payload, indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )
    _emit(payload)
    if not report.ok:
        for c in report.checks:
            if not c.ok:
                print(
                    f"CHECK FAILED: {c.name}\n  expected: {c.expected}\n  actual:   {c.actual}",
                    file=sys.stderr,
                )
        return EXIT_CHECK_FAILED
    return EXIT_OK


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
        handler = {
            "upo": _cmd_upo,
            "gains": _cmd_gains,
            "check-stability": _cmd_check_stability,
            "simulate": _cmd_simulate,
            "search": _cmd_search,
            "scan": _cmd_scan,
            "repro": _cmd_repro,
        }[args.command]
        return handler(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except NoOrbitError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NO_ORBIT
    except ChaosControlError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
