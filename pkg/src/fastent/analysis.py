"""Accuracy, bias, Lipschitz and shape-property probes for the kernels.

Everything here is a deterministic computation over declared grids or a
seeded sample, producing small report records that the CLI serializes.
The divergence accuracy grid deliberately stays away from the axes when
the exact kernel is involved, because the exact symmetrized divergence
is unbounded there; excluded points are counted, never silently skipped.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .kernels import (
    NATURAL,
    ApproxCoefficients,
    DomainError,
    KernelVariant,
    fea_term,
    fea_term_curvature,
    fea_term_grad,
    kl_term_fea,
    kl_term_values,
    term_values,
)

__all__ = [
    "AccuracyReport",
    "BiasProfile",
    "ConcavityReport",
    "ConvexityReport",
    "Grid1D",
    "Grid2D",
    "PropertyViolationError",
    "STANDARD_SE_GRID",
    "STANDARD_KL_GRID",
    "bernoulli_bias",
    "bias_profile",
    "entropy_concavity_probe",
    "kl_convexity_probe",
    "lipschitz_estimate",
    "mae_on_grid",
    "two_symbol_stationary_point",
]


class PropertyViolationError(RuntimeError):
    """A probe detected a violation of a structural property it relies on."""


@dataclass(frozen=True)
class Grid1D:
    """Uniform grid of probabilities including both endpoints."""

    lo: float
    hi: float
    n_points: int

    def __post_init__(self) -> None:
        if not (0.0 <= self.lo < self.hi <= 1.0):
            raise DomainError(f"need 0 <= lo < hi <= 1, got [{self.lo}, {self.hi}]")
        if self.n_points < 2:
            raise DomainError("a grid needs at least 2 points")

    def points(self) -> np.ndarray:
        return np.linspace(self.lo, self.hi, self.n_points)

    def describe(self) -> str:
        return f"uniform[{self.lo:g},{self.hi:g}]x{self.n_points}"


@dataclass(frozen=True)
class Grid2D:
    """Tensor grid over the unit square, optionally restricted to a diagonal band."""

    x: Grid1D
    y: Grid1D
    band: float | None = None  # keep only |x - y| <= band when set

    def meshgrid(self) -> tuple[np.ndarray, np.ndarray]:
        gx, gy = np.meshgrid(self.x.points(), self.y.points(), indexing="ij")
        if self.band is None:
            return gx.ravel(), gy.ravel()
        keep = np.abs(gx - gy) <= self.band
        return gx[keep], gy[keep]

    def describe(self) -> str:
        tag = f"{self.x.describe()}*{self.y.describe()}"
        if self.band is not None:
            tag += f"|band{self.band:g}"
        return tag


# Declared default evaluation regions.  The 1D grid is dense enough that
# the reported MAE is stable to <1% under refinement; the 2D grid keeps a
# 1e-3 margin from the axes where the exact divergence blows up.
STANDARD_SE_GRID = Grid1D(0.0, 1.0, 100001)
STANDARD_KL_GRID = Grid2D(Grid1D(1e-3, 1.0, 1001), Grid1D(1e-3, 1.0, 1001))


@dataclass(frozen=True)
class AccuracyReport:
    """Mean/max absolute gap between two kernel variants on a grid."""

    mae: float
    max_abs_error: float
    argmax_error: float | tuple[float, float]
    grid: str
    compared: str
    n_points: int
    excluded: int = 0


def mae_on_grid(
    variant_a: KernelVariant,
    variant_b: KernelVariant,
    grid: Grid1D | Grid2D,
    coeffs: ApproxCoefficients = NATURAL,
) -> AccuracyReport:
    """Mean and max of |a - b| over the grid.

    A 1D grid compares entropy terms, a 2D grid divergence terms.  Points
    where either variant is non-finite (the exact divergence on the axes,
    the Mitchell log at zero) are excluded and reported in ``excluded``.
    """
    if isinstance(grid, Grid1D):
        pts = grid.points()
        va = term_values(pts, variant_a, coeffs)
        vb = term_values(pts, variant_b, coeffs)
        where = pts
    else:
        gx, gy = grid.meshgrid()
        va = kl_term_values(gx, gy, variant_a, coeffs)
        vb = kl_term_values(gx, gy, variant_b, coeffs)
        where = None
    with np.errstate(invalid="ignore"):  # inf - inf at flagged points
        diff = np.abs(va - vb)
    finite = np.isfinite(diff)
    excluded = int(diff.size - finite.sum())
    if excluded == diff.size:
        raise DomainError("every grid point was excluded; shrink the grid toward the interior")
    diff_f = diff[finite]
    k = int(np.argmax(diff_f))
    if where is not None:
        argmax = float(where[finite][k])
    else:
        argmax = (float(gx[finite][k]), float(gy[finite][k]))
    return AccuracyReport(
        mae=float(diff_f.mean()),
        max_abs_error=float(diff_f[k]),
        argmax_error=argmax,
        grid=grid.describe(),
        compared=f"{variant_a.value}-vs-{variant_b.value}",
        n_points=int(diff.size),
        excluded=excluded,
    )


def bernoulli_bias(p, coeffs: ApproxCoefficients = NATURAL):
    """Two-symbol entropy gap: approximate minus exact at (p, 1-p).

    Accepts a float or an ndarray of probabilities.
    """
    scalar = np.isscalar(p)
    p = np.atleast_1d(np.asarray(p, dtype=np.float64))
    approx = term_values(p, KernelVariant.FEA, coeffs) + term_values(
        1.0 - p, KernelVariant.FEA, coeffs
    )
    exact = term_values(p, KernelVariant.EXACT_LOG, coeffs) + term_values(
        1.0 - p, KernelVariant.EXACT_LOG, coeffs
    )
    out = approx - exact
    return float(out[0]) if scalar else out


@dataclass(frozen=True)
class BiasProfile:
    """Bernoulli-entropy bias curve over a grid of success probabilities."""

    p_grid: Grid1D
    bias: np.ndarray

    def __post_init__(self) -> None:
        # the construction is symmetric in p <-> 1-p; checkable by grid
        # reversal whenever the grid itself is symmetric about one half
        if abs(self.p_grid.lo + self.p_grid.hi - 1.0) < 1e-15 and not np.allclose(
            self.bias, self.bias[::-1], atol=1e-12
        ):
            raise PropertyViolationError("bias profile violates its p <-> 1-p symmetry")


def bias_profile(grid: Grid1D = Grid1D(0.0, 1.0, 10001), coeffs: ApproxCoefficients = NATURAL) -> BiasProfile:
    return BiasProfile(p_grid=grid, bias=bernoulli_bias(grid.points(), coeffs))


def lipschitz_estimate(grid: Grid1D, coeffs: ApproxCoefficients = NATURAL) -> float:
    """Supremum of |h''| for the rational entropy term over the grid.

    Evaluated from the closed-form second derivative; its modulus is
    monotone decreasing, so the supremum sits at the left endpoint.
    """
    curv = np.abs(fea_term_curvature(grid.points(), coeffs))
    return float(curv.max())


def two_symbol_stationary_point(
    coeffs: ApproxCoefficients = NATURAL,
    scan_points: int = 4097,
    tol: float = 1e-12,
) -> float:
    """Root of the two-symbol entropy gradient on (0, 1), by bisection.

    Scans for sign changes first and refuses to continue if more than one
    is found; verifies the curvature at the root is negative (an interior
    maximum) before returning it.
    """

    def g(t):
        return fea_term_grad(t, coeffs) - fea_term_grad(1.0 - t, coeffs)

    ts = np.linspace(0.0, 1.0, scan_points)
    vals = g(ts)
    zeros = np.nonzero(vals == 0.0)[0]
    crossings = np.nonzero(vals[:-1] * vals[1:] < 0.0)[0]
    n_roots = zeros.size + crossings.size
    if n_roots != 1:
        raise PropertyViolationError(
            f"expected exactly one root of the two-symbol gradient, found {n_roots}"
        )
    if zeros.size:
        root = float(ts[zeros[0]])
    else:
        lo, hi = float(ts[crossings[0]]), float(ts[crossings[0] + 1])
        flo = g(lo)
        while hi - lo > tol:
            mid = 0.5 * (lo + hi)
            fmid = g(mid)
            if fmid == 0.0:
                lo = hi = mid
                break
            if (flo > 0) == (fmid > 0):
                lo, flo = mid, fmid
            else:
                hi = mid
        root = 0.5 * (lo + hi)
    curvature = fea_term_curvature(root, coeffs) + fea_term_curvature(1.0 - root, coeffs)
    if not curvature < 0.0:
        raise PropertyViolationError(f"two-symbol curvature at {root} is {curvature}, not negative")
    return root


@dataclass(frozen=True)
class ConvexityReport:
    """Outcome of the two divergence-convexity probes.

    ``confirmed`` is True only when both the finite-difference Hessians
    and the midpoint sampling are consistent with joint convexity on the
    probed region; otherwise the violating coordinates are reported so
    the claim can be recorded as unconfirmed.
    """

    min_hessian_eig: float
    hessian_argmin: tuple[float, float]
    midpoint_violations: int
    worst_violation_gap: float
    violation_examples: tuple = ()
    n_segments: int = 0
    grid: str = ""
    fd_step: float = 0.0
    confirmed: bool = False


def kl_convexity_probe(
    grid_points: int = 201,
    margin: float = 1e-3,
    fd_step: float = 1e-4,
    n_segments: int = 100000,
    seed: int = 20240501,
    midpoint_tol: float = 1e-10,
    hessian_tol: float = -1e-6,
    coeffs: ApproxCoefficients = NATURAL,
) -> ConvexityReport:
    """Probe joint convexity of the rational divergence on the unit square.

    Two independent probes guard against step-size artifacts: 2x2
    finite-difference Hessians on an interior grid, and midpoint-convexity
    checks on seeded random segments over the full closed square.
    """
    f = lambda a, b: kl_term_fea(a, b, coeffs)  # noqa: E731

    ax = np.linspace(margin, 1.0 - margin, grid_points)
    gx, gy = np.meshgrid(ax, ax, indexing="ij")
    h = fd_step
    fxx = (f(gx + h, gy) - 2.0 * f(gx, gy) + f(gx - h, gy)) / h**2
    fyy = (f(gx, gy + h) - 2.0 * f(gx, gy) + f(gx, gy - h)) / h**2
    fxy = (f(gx + h, gy + h) - f(gx + h, gy - h) - f(gx - h, gy + h) + f(gx - h, gy - h)) / (
        4.0 * h**2
    )
    min_eig = 0.5 * ((fxx + fyy) - np.sqrt((fxx - fyy) ** 2 + 4.0 * fxy**2))
    k = int(np.argmin(min_eig))
    eig_min = float(min_eig.ravel()[k])
    argmin = (float(gx.ravel()[k]), float(gy.ravel()[k]))

    rng = np.random.default_rng(seed)
    u = rng.random((n_segments, 2))
    v = rng.random((n_segments, 2))
    fu = f(u[:, 0], u[:, 1])
    fv = f(v[:, 0], v[:, 1])
    mid = 0.5 * (u + v)
    gap = f(mid[:, 0], mid[:, 1]) - 0.5 * (fu + fv)
    violating = gap > midpoint_tol
    n_viol = int(violating.sum())
    worst = float(gap.max())
    examples = tuple(
        (tuple(map(float, u[i])), tuple(map(float, v[i])), float(gap[i]))
        for i in np.argsort(gap)[::-1][: min(5, n_viol)]
    )
    return ConvexityReport(
        min_hessian_eig=eig_min,
        hessian_argmin=argmin,
        midpoint_violations=n_viol,
        worst_violation_gap=worst,
        violation_examples=examples,
        n_segments=n_segments,
        grid=f"interior[{margin:g},{1 - margin:g}]x{grid_points}^2",
        fd_step=fd_step,
        confirmed=(n_viol == 0 and eig_min >= hessian_tol),
    )


@dataclass(frozen=True)
class ConcavityReport:
    """Second-difference concavity check of the two-symbol entropy curve."""

    max_second_difference: float
    concave: bool
    min_location: float
    minima_at_ends: bool
    endpoint_value_gap: float


def entropy_concavity_probe(
    grid: Grid1D = Grid1D(0.0, 1.0, 10001),
    tol: float = 1e-10,
    coeffs: ApproxCoefficients = NATURAL,
) -> ConcavityReport:
    """Check the two-symbol rational entropy is concave with end minima."""
    p = grid.points()
    b = fea_term(p, coeffs) + fea_term(1.0 - p, coeffs)
    second = b[2:] - 2.0 * b[1:-1] + b[:-2]
    max_second = float(second.max())
    k = int(np.argmin(b))
    min_loc = float(p[k])
    at_ends = k in (0, p.size - 1)
    return ConcavityReport(
        max_second_difference=max_second,
        concave=max_second <= tol,
        min_location=min_loc,
        minima_at_ends=at_ends,
        endpoint_value_gap=float(abs(b[0] - b[-1])),
    )
