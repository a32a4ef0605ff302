"""Spectral projected gradient minimizer over convex feasible sets.

The variant implemented projects once per iteration to build a feasible
descent direction and backtracks along it with a nonmonotone Armijo rule
(window ``history_len``), using Barzilai-Borwein spectral step lengths
clamped to ``[alpha_min, alpha_max]``.  It is entirely deterministic:
identical inputs produce identical iterate sequences.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass

import numpy as np

from .kernels import DomainError

__all__ = [
    "NumericError",
    "SpgConfig",
    "SpgResult",
    "StagnationError",
    "project_box",
    "project_simplex",
    "spg_minimize",
]

_MAX_BACKTRACKS = 50


class NumericError(ArithmeticError):
    """The objective or its gradient produced a non-finite value."""


class StagnationError(RuntimeError):
    """Line search failed to make progress; carries the best iterate seen."""

    def __init__(self, message: str, result: "SpgResult"):
        super().__init__(message)
        self.result = result


@dataclass(frozen=True)
class SpgConfig:
    """Optimizer settings.

    gamma is the sufficient-decrease parameter of the Armijo rule,
    history_len the nonmonotone window, and tol_pg the infinity-norm
    stopping tolerance on the unit-step projected gradient.
    """

    gamma: float = 1e-4
    history_len: int = 10
    alpha_min: float = 1e-30
    alpha_max: float = 1e30
    tol_pg: float = 1e-8
    max_iter: int = 10000

    def __post_init__(self) -> None:
        if not (0.0 < self.gamma < 1.0):
            raise DomainError("gamma must lie in (0, 1)")
        if not (0.0 < self.alpha_min < self.alpha_max):
            raise DomainError("need 0 < alpha_min < alpha_max")
        if self.history_len < 1:
            raise DomainError("history_len must be >= 1")
        if self.tol_pg <= 0.0:
            raise DomainError("tol_pg must be positive")


@dataclass(frozen=True)
class SpgResult:
    minimizer: np.ndarray
    objective_value: float
    iterations: int
    function_evals: int
    converged: bool
    final_pg_norm: float


def project_simplex(v: np.ndarray) -> np.ndarray:
    """Euclidean projection onto the probability simplex.

    Sort-based threshold method: with u the entries in descending order,
    the prefix rho is the largest j such that u_j exceeds the running
    threshold (cumsum(u) - 1)/j, and the projection clips v minus that
    threshold at zero.  Idempotent and permutation-equivariant.
    """
    v = np.asarray(v, dtype=np.float64)
    if v.ndim != 1 or v.size == 0:
        raise DomainError("simplex projection expects a non-empty vector")
    if not np.all(np.isfinite(v)):
        raise DomainError("simplex projection requires finite entries")
    # the projection is invariant under constant shifts; recentering on the
    # maximum keeps the threshold arithmetic accurate for huge inputs such
    # as trial points produced with the largest spectral steps
    v = v - v.max()
    u = np.sort(v)[::-1]
    cssm = np.cumsum(u) - 1.0
    j = np.arange(1, v.size + 1)
    cond = u - cssm / j > 0.0
    # the first index always qualifies in exact arithmetic (u_1 - (u_1 - 1) = 1)
    cond[0] = True
    rho = int(np.nonzero(cond)[0][-1])
    theta = cssm[rho] / (rho + 1.0)
    return np.maximum(v - theta, 0.0)


def project_box(v: np.ndarray, lo, hi) -> np.ndarray:
    """Componentwise clamp onto the box [lo, hi]."""
    v = np.asarray(v, dtype=np.float64)
    lo = np.broadcast_to(np.asarray(lo, dtype=np.float64), v.shape)
    hi = np.broadcast_to(np.asarray(hi, dtype=np.float64), v.shape)
    if np.any(lo > hi):
        raise DomainError("box bounds must satisfy lo <= hi componentwise")
    return np.clip(v, lo, hi)


def _evaluate(objective, x, evals):
    f, g = objective(x)
    f = float(f)
    g = np.asarray(g, dtype=np.float64)
    evals[0] += 1
    if not np.isfinite(f) or not np.all(np.isfinite(g)):
        raise NumericError(f"non-finite objective or gradient at iterate (f={f!r})")
    return f, g


def spg_minimize(
    objective,
    projection,
    x0: np.ndarray,
    cfg: SpgConfig = SpgConfig(),
    callback=None,
) -> SpgResult:
    """Minimize ``objective`` over the feasible set defined by ``projection``.

    Parameters
    ----------
    objective : callable(x) -> (value, gradient)
        Continuously differentiable on the feasible set.
    projection : callable(x) -> x_feasible
        Euclidean projector onto the feasible convex set.
    x0 : ndarray
        Feasible starting point (projected defensively on entry).
    cfg : SpgConfig
        Tolerances, step bounds and iteration caps.
    callback : callable(record) or None
        Invoked per accepted iterate with a dict carrying
        iter, f, pg_norm, alpha and backtracks.

    Stops when the unit-step projected gradient satisfies
    ``||P(x - g) - x||_inf <= cfg.tol_pg`` or after ``cfg.max_iter``
    accepted steps.  Raises :class:`StagnationError` (with the best
    iterate attached) if a line search exceeds 50 backtracks, and
    :class:`NumericError` on non-finite objective values.
    """
    evals = [0]
    x = projection(np.asarray(x0, dtype=np.float64))
    f, g = _evaluate(objective, x, evals)
    fhist: deque = deque([f], maxlen=cfg.history_len)

    best_f, best_x = f, x.copy()

    pg = projection(x - g) - x
    pg_norm = float(np.max(np.abs(pg)))
    alpha = 1.0 if pg_norm == 0.0 else min(max(1.0 / pg_norm, cfg.alpha_min), cfg.alpha_max)

    iterations = 0
    converged = pg_norm <= cfg.tol_pg
    while not converged and iterations < cfg.max_iter:
        d = projection(x - alpha * g) - x
        gtd = float(g @ d)
        fmax = max(fhist)

        lam = 1.0
        backtracks = 0
        while True:
            x_trial = x + lam * d
            f_trial, g_trial = _evaluate(objective, x_trial, evals)
            if f_trial <= fmax + cfg.gamma * lam * gtd:
                break
            backtracks += 1
            if backtracks > _MAX_BACKTRACKS:
                raise StagnationError(
                    f"line search stalled after {_MAX_BACKTRACKS} backtracks "
                    f"(iteration {iterations}, f={f!r})",
                    SpgResult(
                        minimizer=best_x,
                        objective_value=best_f,
                        iterations=iterations,
                        function_evals=evals[0],
                        converged=False,
                        final_pg_norm=pg_norm,
                    ),
                )
            # safeguarded quadratic interpolation of the 1-d model
            denom = 2.0 * (f_trial - f - lam * gtd)
            lam_new = -gtd * lam * lam / denom if denom > 0 else 0.5 * lam
            lam = min(max(lam_new, 0.1 * lam), 0.5 * lam)

        s = x_trial - x
        y = g_trial - g
        sy = float(s @ y)
        x, f, g = x_trial, f_trial, g_trial
        fhist.append(f)
        if f < best_f:
            best_f, best_x = f, x.copy()
        iterations += 1

        pg = projection(x - g) - x
        pg_norm = float(np.max(np.abs(pg)))
        converged = pg_norm <= cfg.tol_pg

        if sy <= 0.0:
            alpha = cfg.alpha_max
        else:
            alpha = min(max(float(s @ s) / sy, cfg.alpha_min), cfg.alpha_max)

        if callback is not None:
            callback(
                {
                    "iter": iterations,
                    "f": f,
                    "pg_norm": pg_norm,
                    "alpha": alpha,
                    "backtracks": backtracks,
                }
            )

    return SpgResult(
        minimizer=x,
        objective_value=f,
        iterations=iterations,
        function_evals=evals[0],
        converged=converged,
        final_pg_norm=pg_norm,
    )
