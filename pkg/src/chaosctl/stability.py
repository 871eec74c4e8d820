"""Gain-range formulas, companion-matrix spectra, and stability verdicts.

Two independent routes to the closed-loop spectrum are kept side by side:
a product-form characteristic polynomial solved with our own Durand-Kerner
iteration, and explicit matrix products handed to numpy's eigensolver. The
tests require both to agree.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .dynamics import ParamMap
from .errors import RootConvergenceError, SingularSensitivityError
from .orbits import PeriodicOrbit

#: a configuration is called stable only if the spectral radius clears 1 by this
STABILITY_MARGIN = 1e-9

#: parameter-sensitivity magnitudes below this are treated as singular
SENSITIVITY_FLOOR = 1e-14


@dataclass(frozen=True)
class GainRange:
    """An open interval of stabilizing gains; empty when lower >= upper."""

    lower: float
    upper: float

    @property
    def feasible(self) -> bool:
        return self.lower < self.upper

    @property
    def midpoint(self) -> float:
        return 0.5 * (self.lower + self.upper)

    def contains(self, g: float) -> bool:
        return self.lower < g < self.upper


@dataclass(frozen=True)
class CompanionJacobian:
    """(m+1)-dimensional companion matrix of one delay-embedded control step.

    Only the (1,1) and (1,m+1) entries of the first row are populated;
    the subdiagonal is all ones.
    """

    dimension: int
    a11: float
    a1m1: float

    @property
    def matrix(self) -> np.ndarray:
        n = self.dimension
        J = np.zeros((n, n))
        J[0, 0] = self.a11
        J[0, n - 1] = self.a1m1
        for i in range(1, n):
            J[i, i - 1] = 1.0
        return J


def alpha_gain(pmap: ParamMap, p: float, r0: float | None = None) -> float:
    """Gain that cancels the linearized next-step error at orbit point p.

    Equals -f_x/f_r evaluated at (p, r0); for the logistic map this is
    r0*(2p - 1) / (p*(1 - p)).
    """
    r0 = pmap.nominal_r0 if r0 is None else r0
    fr = pmap.deriv_r(p, r0)
    if abs(fr) < SENSITIVITY_FLOOR:
        raise SingularSensitivityError(f"|f_r({p}, {r0})| < {SENSITIVITY_FLOOR}")
    return -pmap.deriv_x(p, r0) / fr


def beta_range(pmap: ParamMap, p: float, r0: float | None = None) -> GainRange:
    """Open interval of proportional gains b with |f_x + b*f_r| < 1 at p."""
    r0 = pmap.nominal_r0 if r0 is None else r0
    fx = pmap.deriv_x(p, r0)
    fr = pmap.deriv_r(p, r0)
    if abs(fr) < SENSITIVITY_FLOOR:
        raise SingularSensitivityError(f"|f_r({p}, {r0})| < {SENSITIVITY_FLOOR}")
    a = (-1.0 - fx) / fr
    b = (1.0 - fx) / fr
    return GainRange(min(a, b), max(a, b))


def gamma_fixed_range(r0: float) -> GainRange:
    """Stabilizing delayed-feedback gains for the logistic interior fixed point."""
    if not 3.0 < r0 <= 4.0:
        raise ValueError("fixed-point delayed feedback needs 3 < r0 <= 4")
    lower = r0 * r0 * (r0 - 3.0) / (2.0 * (r0 - 1.0))
    upper = r0 * r0 / (r0 - 1.0)
    return GainRange(lower, upper)


def jury_quadratic(A: float, B: float) -> bool:
    """True iff both roots of z^2 + A z + B lie strictly inside the unit circle."""
    return abs(B) < 1.0 and abs(A) < 1.0 + B


def companion_jacobian(
    pmap: ParamMap, p: float, gamma: float, m: int, r0: float | None = None
) -> CompanionJacobian:
    """Jacobian of one delayed-feedback step at orbit point p with gain gamma."""
    r0 = pmap.nominal_r0 if r0 is None else r0
    fr = pmap.deriv_r(p, r0)
    return CompanionJacobian(
        dimension=m + 1,
        a11=pmap.deriv_x(p, r0) + gamma * fr,
        a1m1=-gamma * fr,
    )


def char_poly_product(jacobians: list[CompanionJacobian]) -> np.ndarray:
    """Characteristic polynomial of the product of companion Jacobians.

    Returns descending coefficients of
    -z^(m+1) + prod_i (a1m1_i + z * a11_i), length m+2.
    """
    if not jacobians:
        raise ValueError("need at least one Jacobian")
    dim = jacobians[0].dimension
    if any(J.dimension != dim for J in jacobians):
        raise ValueError("all Jacobians must share one dimension")
    prod = np.array([1.0])
    for J in jacobians:
        prod = np.convolve(prod, np.array([J.a11, J.a1m1]))
    m = len(jacobians)
    coeffs = np.zeros(dim + 1)
    coeffs[0] = -1.0
    coeffs[dim - m:] += prod
    return coeffs


def durand_kerner(
    coeffs, max_iter: int = 500, step_tol: float = 1e-13
) -> np.ndarray:
    """All complex roots of a polynomial by simultaneous Durand-Kerner iteration.

    ``coeffs`` are descending-order real or complex coefficients. Exact zero
    roots (trailing zero coefficients) are deflated first. Initial points sit
    on the classic (0.4 + 0.9i)^k spiral, which is deterministic and breaks
    real-axis symmetry. Raises RootConvergenceError if the residual has not
    dropped below 1e-10 (relative to the coefficient scale) within the
    iteration budget.
    """
    c = np.asarray(coeffs, dtype=complex)
    if np.max(np.abs(c)) == 0.0:
        raise ValueError("zero polynomial has no defined roots")
    # trailing coefficients at rounding-noise level are structural zero
    # roots (e.g. singular factors of a matrix product); deflate them
    tiny = 1e-14 * np.max(np.abs(c))
    nz = np.flatnonzero(np.abs(c) > tiny)
    n_zero = len(c) - 1 - nz[-1]
    c = c[nz[0]: nz[-1] + 1]
    c = c / c[0]
    n = len(c) - 1
    if n == 0:
        return np.zeros(n_zero, dtype=complex)
    base = 0.4 + 0.9j
    z = base ** np.arange(1, n + 1)
    bound = 1.0 + np.max(np.abs(c[1:])) if n >= 1 else 1.0
    z = z * max(1.0, bound / abs(base))
    for _ in range(max_iter):
        pz = np.polyval(c, z)
        denom = np.ones_like(z)
        for i in range(n):
            others = np.delete(z, i)
            denom[i] = np.prod(z[i] - others)
        step = pz / denom
        z = z - step
        if np.max(np.abs(step)) < step_tol * max(1.0, np.max(np.abs(z))):
            break
    pz = np.polyval(c, z)
    # the scale floor of 1 makes the test absolute for roots inside the
    # unit disk and relative for large ones
    scale = np.array([max(1.0, np.polyval(np.abs(c), abs(zi))) for zi in z])
    if np.max(np.abs(pz) / scale) > 1e-10:
        raise RootConvergenceError(
            f"Durand-Kerner residual {np.max(np.abs(pz)):.3e} after {max_iter} iterations"
        )
    if n_zero:
        z = np.concatenate([z, np.zeros(n_zero, dtype=complex)])
    return z


def spectral_radius(obj) -> float:
    """Largest eigenvalue/root modulus of a square matrix or polynomial.

    1-D input is read as descending polynomial coefficients and solved with
    Durand-Kerner; 2-D input goes through numpy's eigensolver.
    """
    arr = np.asarray(obj, dtype=float) if not np.iscomplexobj(obj) else np.asarray(obj)
    if arr.ndim == 1:
        return float(np.max(np.abs(durand_kerner(arr))))
    if arr.ndim == 2 and arr.shape[0] == arr.shape[1]:
        return float(np.max(np.abs(np.linalg.eigvals(arr))))
    raise ValueError("expected polynomial coefficients or a square matrix")


def is_stable(radius: float) -> bool:
    """Stability verdict with the reporting margin applied."""
    return radius < 1.0 - STABILITY_MARGIN


def dfc_companions(
    pmap: ParamMap, orbit: PeriodicOrbit, gains
) -> list[CompanionJacobian]:
    """Per-point companion Jacobians for a delayed-feedback gain tuple.

    gains[j] is the gain that fires while the state is at orbit component j.
    """
    m = orbit.period
    if len(gains) != m:
        raise ValueError("need one gain per orbit component")
    return [
        companion_jacobian(pmap, p, g, m, orbit.r0)
        for p, g in zip(orbit.points, gains)
    ]


def dfc_product_radius(pmap: ParamMap, orbit: PeriodicOrbit, gains) -> float:
    """Closed-loop spectral radius of a delayed-feedback tuple (polynomial route)."""
    return spectral_radius(char_poly_product(dfc_companions(pmap, orbit, gains)))


def dfc_product_matrix(pmap: ParamMap, orbit: PeriodicOrbit, gains) -> np.ndarray:
    """Explicit product of the per-point companion Jacobians (matrix route)."""
    P = np.eye(orbit.period + 1)
    for J in dfc_companions(pmap, orbit, gains):
        P = J.matrix @ P
    return P


def single_gamma_range(pmap: ParamMap, orbit: PeriodicOrbit, i: int) -> GainRange:
    """Stabilizing gains for component i when every other gain is zero.

    With the other gains zero the nonzero closed-loop spectrum is a
    quadratic whose unit-circle condition solves in closed form. The range
    is empty (feasible False) when the orbit multiplier makes the quadratic
    unstabilizable by a single gain.
    """
    m = orbit.period
    if not 0 <= i < m:
        raise ValueError(f"component index {i} out of range for period {m}")
    a = [pmap.deriv_x(p, orbit.r0) for p in orbit.points]
    C = 1.0
    for j in range(m):
        if j != i:
            C *= a[j]
    b = pmap.deriv_r(orbit.points[i], orbit.r0)
    bc = b * C
    if abs(bc) < SENSITIVITY_FLOOR:
        return GainRange(float("inf"), float("-inf"))
    mu = a[i] * C  # orbit multiplier
    g_lo = 0.5 * (-1.0 - mu)
    g_hi = 1.0
    # dividing by a negative flips both the order and the crossing, so an
    # infeasible (crossed) interval in g-space stays crossed in gamma-space
    if bc > 0:
        return GainRange(g_lo / bc, g_hi / bc)
    return GainRange(g_hi / bc, g_lo / bc)


def feasibility_condition(
    pmap: ParamMap, orbit: PeriodicOrbit
) -> tuple[float, bool]:
    """|1 + orbit multiplier| and whether it admits a single-gain stabilizer."""
    mu = 1.0
    for p in orbit.points:
        mu *= pmap.deriv_x(p, orbit.r0)
    value = abs(1.0 + mu)
    return float(value), bool(value < 2.0)


def edfc_jacobian(
    pmap: ParamMap,
    p: float,
    gamma: float,
    R: float,
    m: int,
    r0: float | None = None,
) -> np.ndarray:
    """2m-dimensional Jacobian of one extended-delayed-feedback step.

    State order is (x_k, ..., x_{k-m+1}, u_k, ..., u_{k-m+1}); gamma is the
    gain used for the control computed during this step.
    """
    if not 0.0 <= R < 1.0:
        raise ValueError("memory coefficient R must satisfy 0 <= R < 1")
    r0 = pmap.nominal_r0 if r0 is None else r0
    a = pmap.deriv_x(p, r0)
    b = pmap.deriv_r(p, r0)
    J = np.zeros((2 * m, 2 * m))
    J[0, 0] = a
    J[0, m] = b
    for j in range(1, m):
        J[j, j - 1] = 1.0
    J[m, 0] = gamma * a
    J[m, m - 1] = -gamma
    J[m, m] = gamma * b
    J[m, 2 * m - 1] = R
    for j in range(1, m):
        J[m + j, m + j - 1] = 1.0
    return J


def edfc_char_poly(a: float, b: float, gamma: float, R: float) -> np.ndarray:
    """Characteristic polynomial of a single extended-feedback Jacobian, m = 4.

    Descending coefficients of z^3 * (z^5 - (a + gamma*b) z^4 - R z + aR + gamma*b).
    """
    c = np.zeros(9)
    c[0] = 1.0
    c[1] = -(a + gamma * b)
    c[4] = -R
    c[5] = a * R + gamma * b
    return c


def edfc_product_matrix(
    pmap: ParamMap, orbit: PeriodicOrbit, gains, R: float
) -> np.ndarray:
    """Closed-loop one-cycle Jacobian product for an extended-feedback tuple.

    gains[j] is the gain that fires while the state is at component j. The
    control computed on the step leaving component j is the one the law
    evaluates for the next component, so the Jacobian taken at component j
    carries gains[(j+1) mod m].
    """
    m = orbit.period
    if len(gains) != m:
        raise ValueError("need one gain per orbit component")
    P = np.eye(2 * m)
    for j, p in enumerate(orbit.points):
        P = edfc_jacobian(pmap, p, gains[(j + 1) % m], R, m, orbit.r0) @ P
    return P


def edfc_product_radius(
    pmap: ParamMap, orbit: PeriodicOrbit, gains, R: float
) -> float:
    """Spectral radius of the extended-feedback one-cycle product."""
    return spectral_radius(edfc_product_matrix(pmap, orbit, gains, R))


def closed_loop_radius(
    pmap: ParamMap, orbit: PeriodicOrbit, gains, R: float = 0.0
) -> float:
    """Spectral radius of the one-cycle linearization for a delay-feedback tuple."""
    if R == 0.0:
        return dfc_product_radius(pmap, orbit, gains)
    return edfc_product_radius(pmap, orbit, gains, R)
