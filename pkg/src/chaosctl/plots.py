"""Render simulation runs and scans to image files.

Used by the report path of the CLI: every reproduced scenario writes a PNG
next to its CSV. matplotlib is imported lazily with the Agg backend so the
numeric library never pays for it.
"""

from __future__ import annotations

from pathlib import Path


def _pyplot():
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    return plt


def render_run(result, orbit, path, title: str) -> Path:
    """Two stacked panels: states with orbit levels, and controls."""
    plt = _pyplot()
    path = Path(path)
    fig, (ax_x, ax_u) = plt.subplots(
        2, 1, sharex=True, figsize=(9.0, 5.5), height_ratios=[2, 1]
    )
    ks = range(len(result.states))
    ax_x.plot(ks, result.states, ".", ms=2.0, color="tab:blue")
    for p in orbit.points:
        ax_x.axhline(p, color="0.6", lw=0.6, zorder=0)
    if result.k0 is not None:
        ax_x.axvline(result.k0, color="tab:red", lw=0.8, ls="--", label=f"$k_0$={result.k0}")
        ax_x.legend(loc="upper right", fontsize=8)
    ax_x.set_ylabel("$x_k$")
    ax_x.set_title(title, fontsize=10)
    ax_u.plot(range(len(result.controls)), result.controls, lw=0.7, color="tab:orange")
    ax_u.set_ylabel("$u_k$")
    ax_u.set_xlabel("$k$")
    fig.tight_layout()
    fig.savefig(path, dpi=130)
    plt.close(fig)
    return path


def render_scan(rows, path, title: str) -> Path:
    """Search outcome per parameter value: radius where found, marks where not."""
    plt = _pyplot()
    path = Path(path)
    fig, ax = plt.subplots(figsize=(7.0, 3.4))
    found_r = [row.r for row in rows if row.found]
    found_rad = [row.radius for row in rows if row.found]
    missed_r = [row.r for row in rows if not row.found]
    ax.plot(found_r, found_rad, "o-", ms=4, color="tab:green", label="stabilized")
    if missed_r:
        ax.plot(missed_r, [1.0] * len(missed_r), "x", color="tab:red", label="not found")
    ax.axhline(1.0, color="0.5", lw=0.8, ls="--")
    ax.set_xlabel("$r$")
    ax.set_ylabel("spectral radius")
    ax.set_title(title, fontsize=10)
    ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=130)
    plt.close(fig)
    return path
