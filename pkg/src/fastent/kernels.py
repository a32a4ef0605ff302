"""Scalar and vector kernels for entropy and symmetrized-divergence terms.

Three kernel families are provided and selected uniformly through
:class:`KernelVariant`:

* ``EXACT_LOG`` -- the textbook terms ``-x*log(x)`` and
  ``0.5*(x-y)*(log(x)-log(y))``, with their log singularities surfaced
  as typed errors (gradients) or infinity markers (divergence values).
* ``FEA`` -- compact rational approximations that are finite, with
  finite gradients, on the whole closed domain.
* ``MITCHELL`` -- the classic piecewise-linear base-2 logarithm baseline
  built on the IEEE-754 exponent/mantissa decomposition.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from enum import Enum

import numpy as np

__all__ = [
    "ApproxCoefficients",
    "DomainError",
    "KernelVariant",
    "NATURAL",
    "ProbVector",
    "ShapeError",
    "SingularityError",
    "entropy",
    "entropy_grad",
    "fea_term",
    "fea_term_curvature",
    "fea_term_grad",
    "kl_divergence",
    "kl_term_exact",
    "kl_term_fea",
    "kl_term_fea_grad",
    "kl_term_values",
    "mitchell_entropy_term",
    "mitchell_kl_term",
    "mitchell_log2",
    "rebase_coefficients",
    "shannon_term_exact",
    "shannon_term_exact_grad",
    "term_grads",
    "term_values",
]

LN2 = math.log(2.0)

# Elementary operations needed for one term evaluation, kept as documented
# cost-model constants (never asserted at runtime).  The entropy term is
# 6 ops, or 5 with the additive constant omitted; a naive count of the
# divergence term's arithmetic gives 8 rather than the commonly quoted 7,
# since no published accounting convention pins it down.
SE_TERM_ELEMENTARY_OPS = 6
KL_TERM_ELEMENTARY_OPS = 7


class DomainError(ValueError):
    """An argument lies outside the domain the operation is defined on."""


class ShapeError(ValueError):
    """Operands have incompatible lengths or shapes."""


class SingularityError(ArithmeticError):
    """Evaluation requested at a point where the exact-log kernel is singular.

    Raised instead of silently emitting an infinite gradient, so that
    optimizers consuming these kernels can never ingest an infinity.
    """


@dataclass(frozen=True)
class ApproxCoefficients:
    """Constants of the rational entropy/divergence approximations.

    The defaults are the published constants for natural-log measures;
    :func:`rebase_coefficients` produces instances for other log bases.
    ``base_scale`` multiplies the exact-log and Mitchell kernels so that
    every variant reports in the same log base as the rational ones.
    """

    se_a: float = 0.6648
    se_b: float = 0.2086
    se_c: float = 0.5754
    se_d: float = 0.0206
    kl_p: float = 0.3011
    kl_q: float = 0.1636
    base_scale: float = 1.0

    def __post_init__(self) -> None:
        for name in ("se_a", "se_b", "se_c", "se_d", "kl_p", "kl_q", "base_scale"):
            value = getattr(self, name)
            if not (math.isfinite(value) and value > 0):
                raise DomainError(f"{name} must be finite and > 0, got {value!r}")


NATURAL = ApproxCoefficients()


class KernelVariant(Enum):
    """Selector used to pick kernels uniformly in analysis and benchmarks."""

    EXACT_LOG = "exact"
    FEA = "fea"
    MITCHELL = "mitchell"


@dataclass(frozen=True)
class ProbVector:
    """A finite discrete probability distribution.

    Entries must lie in [0, 1] and sum to 1 within ``SUM_TOL``.  Scalar
    term operations accept any x in [0, 1]; this wrapper is only required
    by the distribution-level operations.
    """

    values: np.ndarray

    SUM_TOL = 1e-9

    def __post_init__(self) -> None:
        v = np.asarray(self.values, dtype=np.float64)
        if v.ndim != 1 or v.size < 1:
            raise ShapeError("probability vector must be one-dimensional and non-empty")
        if not np.all(np.isfinite(v)):
            raise DomainError("probability vector entries must be finite")
        if np.any(v < 0.0) or np.any(v > 1.0):
            raise DomainError("probability vector entries must lie in [0, 1]")
        total = float(np.sum(v))
        if abs(total - 1.0) > self.SUM_TOL:
            raise DomainError(f"probabilities sum to {total!r}, not 1 within {self.SUM_TOL}")
        object.__setattr__(self, "values", v)

    def __len__(self) -> int:
        return self.values.size


def _check_unit(x: float, name: str = "x") -> float:
    x = float(x)
    if not (0.0 <= x <= 1.0):
        raise DomainError(f"{name} must lie in [0, 1], got {x!r}")
    return x


def shannon_term_exact(x: float, coeffs: ApproxCoefficients = NATURAL) -> float:
    """Exact entropy term ``-x*log(x)``, with the continuous limit 0 at x=0."""
    x = _check_unit(x)
    if x == 0.0:
        return 0.0
    return -x * math.log(x) * coeffs.base_scale


def shannon_term_exact_grad(x: float, coeffs: ApproxCoefficients = NATURAL) -> float:
    """Derivative ``-(log(x) + 1)`` of the exact entropy term.

    Raises :class:`SingularityError` at x=0 rather than returning an
    infinity.
    """
    x = float(x)
    if x == 0.0:
        raise SingularityError("exact entropy gradient is singular at x = 0")
    if not (0.0 < x <= 1.0):
        raise DomainError(f"x must lie in (0, 1], got {x!r}")
    return -(math.log(x) + 1.0) * coeffs.base_scale


def fea_term(x, coeffs: ApproxCoefficients = NATURAL):
    """Rational entropy term ``x*(a/(x+b) - c*x) + d``.

    Finite for every x in [0, 1].  Accepts a float or an ndarray of
    probabilities.
    """
    x = _unit_operand(x)
    return x * (coeffs.se_a / (x + coeffs.se_b) - coeffs.se_c * x) + coeffs.se_d


def fea_term_grad(x, coeffs: ApproxCoefficients = NATURAL):
    """Derivative ``a*b/(x+b)**2 - 2*c*x`` of the rational entropy term.

    Finite and bounded on the whole closed interval [0, 1].
    """
    x = _unit_operand(x)
    return coeffs.se_a * coeffs.se_b / (x + coeffs.se_b) ** 2 - 2.0 * coeffs.se_c * x


def fea_term_curvature(x, coeffs: ApproxCoefficients = NATURAL):
    """Second derivative ``-2*a*b/(x+b)**3 - 2*c`` of the rational entropy term.

    Strictly negative on [0, 1]; its modulus is monotone decreasing, so
    the supremum sits at the left endpoint.
    """
    x = _unit_operand(x)
    return -2.0 * coeffs.se_a * coeffs.se_b / (x + coeffs.se_b) ** 3 - 2.0 * coeffs.se_c


def kl_term_exact(x: float, y: float, coeffs: ApproxCoefficients = NATURAL) -> float:
    """Exact symmetrized divergence term ``0.5*(x-y)*(log(x)-log(y))``.

    Returns 0 when x == y (including both zero).  When exactly one
    argument is zero, the mathematically correct limit ``+inf`` is
    returned as a typed marker, never raised.
    """
    x = _check_unit(x, "x")
    y = _check_unit(y, "y")
    if x == y:
        return 0.0
    if x == 0.0 or y == 0.0:
        return math.inf
    return 0.5 * (x - y) * (math.log(x) - math.log(y)) * coeffs.base_scale


def kl_term_fea(x, y, coeffs: ApproxCoefficients = NATURAL):
    """Rational divergence term ``p*(x-y)**2 / ((x+q)*(y+q) + p)``.

    Finite, nonnegative and symmetric on the whole closed square; the
    symmetry is bit-exact because every subexpression is symmetric under
    swapping x and y.
    """
    x = _unit_operand(x, "x")
    y = _unit_operand(y, "y")
    p, q = coeffs.kl_p, coeffs.kl_q
    return p * (x - y) ** 2 / ((x + q) * (y + q) + p)


def kl_term_fea_grad(x, y, coeffs: ApproxCoefficients = NATURAL):
    """Quotient-rule partials (d/dx, d/dy) of the rational divergence term.

    Both partials are finite on the closed square because the denominator
    is bounded below by p > 0.
    """
    x = _unit_operand(x, "x")
    y = _unit_operand(y, "y")
    p, q = coeffs.kl_p, coeffs.kl_q
    u = x - y
    den = (x + q) * (y + q) + p
    gx = p * u * (2.0 * den - u * (y + q)) / den**2
    gy = p * u * (-2.0 * den - u * (x + q)) / den**2
    return gx, gy


def mitchell_log2(x: float) -> float:
    """Piecewise-linear base-2 logarithm ``e + m`` for ``x = 2**e * (1+m)``.

    Exact at dyadic points (mantissa zero); elsewhere it underestimates
    log2 by at most ~0.0861.
    """
    x = float(x)
    if not (math.isfinite(x) and x > 0.0):
        raise DomainError(f"Mitchell log requires a finite x > 0, got {x!r}")
    mant, exp = math.frexp(x)  # x = mant * 2**exp with mant in [0.5, 1)
    return (exp - 1) + (2.0 * mant - 1.0)


def mitchell_entropy_term(x: float, coeffs: ApproxCoefficients = NATURAL) -> float:
    """Entropy term with the log replaced by the Mitchell approximation.

    Returns 0 at x = 0 by convention, mirroring the exact term's limit.
    """
    x = _check_unit(x)
    if x == 0.0:
        return 0.0
    return -x * LN2 * mitchell_log2(x) * coeffs.base_scale


def mitchell_kl_term(x: float, y: float, coeffs: ApproxCoefficients = NATURAL) -> float:
    """Symmetrized divergence term built on the Mitchell logarithm.

    Unlike the exact term there is no defined limit at zero arguments:
    the Mitchell log is undefined at 0, so zeros are a domain error.
    """
    x = _check_unit(x, "x")
    y = _check_unit(y, "y")
    if x == 0.0 or y == 0.0:
        raise DomainError("Mitchell divergence term requires x > 0 and y > 0")
    if x == y:
        return 0.0
    return 0.5 * (x - y) * (mitchell_log2(x) - mitchell_log2(y)) * LN2 * coeffs.base_scale


def rebase_coefficients(base: float, coeffs: ApproxCoefficients = NATURAL) -> ApproxCoefficients:
    """Re-parameterize the kernels to another log base.

    Divides the scale constants (se_a, se_c, se_d, kl_p) by log(base) and
    sets ``base_scale`` to 1/log(base); the shift constants se_b and kl_q
    are base-independent.  Changing base therefore costs no additional
    elementary operations at evaluation time.

    The entropy term is linear in its scale constants, so rebased values
    equal the natural-log values divided by log(base) exactly.  The
    divergence constant kl_p appears in both numerator and denominator,
    so its rebase reshapes that approximant slightly instead of scaling
    it; no value identity is promised for the divergence term.
    """
    base = float(base)
    if not (math.isfinite(base) and base > 1.0):
        raise DomainError(f"log base must be finite and > 1, got {base!r}")
    scale = 1.0 / math.log(base)
    return replace(
        coeffs,
        se_a=coeffs.se_a * scale,
        se_c=coeffs.se_c * scale,
        se_d=coeffs.se_d * scale,
        kl_p=coeffs.kl_p * scale,
        base_scale=coeffs.base_scale * scale,
    )


# ---------------------------------------------------------------------------
# Distribution-level operations (scalar reference path).
#
# These fold the scalar term kernels left to right with no hidden
# reordering, so `entropy(v)` is bit-identical to summing the term values
# in sequence.  Grid sweeps and benchmarks should use the array paths
# below or :mod:`fastent.batch` instead.
# ---------------------------------------------------------------------------

_SE_TERMS = {
    KernelVariant.EXACT_LOG: shannon_term_exact,
    KernelVariant.FEA: fea_term,
    KernelVariant.MITCHELL: mitchell_entropy_term,
}

_KL_TERMS = {
    KernelVariant.EXACT_LOG: kl_term_exact,
    KernelVariant.FEA: kl_term_fea,
    KernelVariant.MITCHELL: mitchell_kl_term,
}


def entropy(
    v: ProbVector,
    variant: KernelVariant = KernelVariant.FEA,
    coeffs: ApproxCoefficients = NATURAL,
) -> float:
    """Sum of the selected per-term entropy kernel over all entries."""
    term = _SE_TERMS[variant]
    total = 0.0
    for x in v.values:
        total += term(float(x), coeffs)
    return total


def entropy_grad(
    v: ProbVector,
    variant: KernelVariant = KernelVariant.FEA,
    coeffs: ApproxCoefficients = NATURAL,
) -> np.ndarray:
    """Componentwise term gradients of :func:`entropy`.

    The exact-log variant raises :class:`SingularityError` if any entry
    is zero; the rational variant never errors on [0, 1].
    """
    return term_grads(v.values, variant, coeffs)


def kl_divergence(
    vx: ProbVector,
    vy: ProbVector,
    variant: KernelVariant = KernelVariant.FEA,
    coeffs: ApproxCoefficients = NATURAL,
) -> float:
    """Componentwise sum of the selected divergence kernel.

    The exact variant may return ``inf`` when a component pair has
    exactly one zero.
    """
    if len(vx) != len(vy):
        raise ShapeError(f"length mismatch: {len(vx)} vs {len(vy)}")
    term = _KL_TERMS[variant]
    total = 0.0
    for x, y in zip(vx.values, vy.values):
        total += term(float(x), float(y), coeffs)
    return total


# ---------------------------------------------------------------------------
# Array paths for grid sweeps.
# ---------------------------------------------------------------------------

def _unit_operand(x, name: str = "x"):
    """Validate a float or ndarray of probabilities; NaN never passes."""
    if np.isscalar(x):
        return _check_unit(x, name)
    x = np.asarray(x, dtype=np.float64)
    ok = (x >= 0.0) & (x <= 1.0)
    if not ok.all():
        bad = x[~ok]
        raise DomainError(f"{name} entries must lie in [0, 1]; offending value {bad.flat[0]!r}")
    return x


def _mitchell_log2_array(x: np.ndarray) -> np.ndarray:
    # np.frexp(0) would yield the silently wrong value -2; mark zeros -inf
    # so downstream terms produce the correct infinite limits.
    mant, exp = np.frexp(x)
    out = (exp - 1) + (2.0 * mant - 1.0)
    return np.where(x == 0.0, -np.inf, out)


def term_values(
    x: np.ndarray,
    variant: KernelVariant,
    coeffs: ApproxCoefficients = NATURAL,
    omit_constant: bool = False,
) -> np.ndarray:
    """Vectorized entropy terms of one variant over an array of probabilities.

    ``omit_constant`` drops the additive constant of the rational term
    (the optimization-mode form, one elementary operation cheaper); it is
    ignored by the other variants.
    """
    x = np.asarray(_unit_operand(x), dtype=np.float64)
    if variant is KernelVariant.FEA:
        out = x * (coeffs.se_a / (x + coeffs.se_b) - coeffs.se_c * x)
        if not omit_constant:
            out = out + coeffs.se_d
        return out
    if variant is KernelVariant.EXACT_LOG:
        out = np.zeros_like(x)
        nz = x > 0.0
        out[nz] = -x[nz] * np.log(x[nz]) * coeffs.base_scale
        return out
    out = np.zeros_like(x)
    nz = x > 0.0
    out[nz] = -x[nz] * LN2 * _mitchell_log2_array(x[nz]) * coeffs.base_scale
    return out


def term_grads(
    x: np.ndarray,
    variant: KernelVariant,
    coeffs: ApproxCoefficients = NATURAL,
) -> np.ndarray:
    """Vectorized entropy-term gradients of one variant."""
    x = np.asarray(_unit_operand(x), dtype=np.float64)
    if variant is KernelVariant.FEA:
        return fea_term_grad(x, coeffs)
    if np.any(x == 0.0):
        raise SingularityError(f"{variant.value} entropy gradient is singular at x = 0")
    if variant is KernelVariant.EXACT_LOG:
        return -(np.log(x) + 1.0) * coeffs.base_scale
    # Mitchell term: -x*ln2*(e + 2*mant - 1); slope of the mantissa part
    # on the piece containing x is 2**(-e) = 2**(1-exp).
    mant, exp = np.frexp(x)
    slope = np.ldexp(np.ones_like(x), 1 - exp)
    return -LN2 * (_mitchell_log2_array(x) + x * slope) * coeffs.base_scale


def kl_term_values(
    x: np.ndarray,
    y: np.ndarray,
    variant: KernelVariant,
    coeffs: ApproxCoefficients = NATURAL,
) -> np.ndarray:
    """Vectorized divergence terms of one variant over probability pairs.

    Points where the exact or Mitchell log diverges come back as
    non-finite entries for the caller to flag and exclude; they are not
    silently skipped and they never raise here.
    """
    x = np.asarray(_unit_operand(x, "x"), dtype=np.float64)
    y = np.asarray(_unit_operand(y, "y"), dtype=np.float64)
    if x.shape != y.shape:
        raise ShapeError(f"shape mismatch: {x.shape} vs {y.shape}")
    if variant is KernelVariant.FEA:
        return kl_term_fea(x, y, coeffs)
    with np.errstate(divide="ignore", invalid="ignore"):
        if variant is KernelVariant.EXACT_LOG:
            raw = 0.5 * (x - y) * (np.log(x) - np.log(y)) * coeffs.base_scale
            return np.where(x == y, 0.0, raw)
        raw = (
            0.5
            * (x - y)
            * (_mitchell_log2_array(x) - _mitchell_log2_array(y))
            * LN2
            * coeffs.base_scale
        )
    # Mitchell's log has no limit at 0, so (0, 0) stays NaN for the
    # caller to count as an exclusion; only the x == y > 0 diagonal is 0.
    return np.where((x == y) & (x > 0.0), 0.0, raw)
