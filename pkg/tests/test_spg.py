"""Projection oracles and optimizer correctness against brute-force KKT solves."""

import itertools

import numpy as np
import pytest

from fastent.kernels import DomainError
from fastent.spg import (
    NumericError,
    SpgConfig,
    SpgResult,
    StagnationError,
    project_box,
    project_simplex,
    spg_minimize,
)


def simplex_qp_bruteforce(A, b):
    """Reference minimizer of 1/2 x'Ax - b'x over the simplex.

    Enumerates every candidate active set, solves the equality-constrained
    KKT system on the free coordinates, and keeps the feasible stationary
    point with the smallest objective.  Exponential in N by design; used
    only as an oracle for small instances.
    """
    n = b.size
    best_val, best_x = np.inf, None
    for r in range(1, n + 1):
        for free in itertools.combinations(range(n), r):
            idx = list(free)
            K = np.zeros((r + 1, r + 1))
            K[:r, :r] = A[np.ix_(idx, idx)]
            K[:r, r] = 1.0
            K[r, :r] = 1.0
            rhs = np.concatenate([b[idx], [1.0]])
            try:
                sol = np.linalg.solve(K, rhs)
            except np.linalg.LinAlgError:
                continue
            x_free, mu = sol[:r], sol[r]
            if np.any(x_free < -1e-12):
                continue
            x = np.zeros(n)
            x[idx] = np.maximum(x_free, 0.0)
            grad = A @ x - b
            # dual feasibility on the clamped coordinates
            if np.any(grad[np.setdiff1d(np.arange(n), idx)] + mu < -1e-9):
                continue
            val = 0.5 * x @ A @ x - b @ x
            if val < best_val:
                best_val, best_x = val, x
    return best_x, best_val


class TestProjectSimplex:
    def test_fixed_point_on_feasible(self):
        v = np.array([0.5, 0.5])
        np.testing.assert_array_equal(project_simplex(v), v)

    def test_kkt_threshold_cases(self):
        np.testing.assert_allclose(project_simplex(np.array([2.0, 0.0])), [1.0, 0.0], atol=1e-15)
        np.testing.assert_allclose(project_simplex(np.array([0.4, 0.4])), [0.5, 0.5], atol=1e-15)

    def test_idempotent(self):
        rng = np.random.default_rng(3)
        for _ in range(50):
            w = project_simplex(rng.normal(size=6))
            np.testing.assert_allclose(project_simplex(w), w, atol=1e-15)

    def test_valid_distribution(self):
        rng = np.random.default_rng(4)
        for scale in (1.0, 1e6, 1e20):
            w = project_simplex(rng.normal(size=8) * scale)
            assert np.all(w >= 0.0)
            assert np.sum(w) == pytest.approx(1.0, abs=1e-9)

    def test_permutation_equivariant(self):
        rng = np.random.default_rng(5)
        v = rng.normal(size=7)
        perm = rng.permutation(7)
        np.testing.assert_allclose(project_simplex(v)[perm], project_simplex(v[perm]), atol=1e-15)

    def test_matches_quadratic_oracle(self):
        # projection <=> QP with A = I, b = v
        rng = np.random.default_rng(6)
        for _ in range(10):
            v = rng.normal(size=5) * 2.0
            x_ref, _ = simplex_qp_bruteforce(np.eye(5), v)
            np.testing.assert_allclose(project_simplex(v), x_ref, atol=1e-10)

    def test_domain_error(self):
        with pytest.raises(DomainError):
            project_simplex(np.array([np.nan, 0.5]))
        with pytest.raises(DomainError):
            project_simplex(np.array([np.inf, 0.5]))


class TestProjectBox:
    def test_inside_unchanged(self):
        v = np.array([0.2, 0.8])
        np.testing.assert_array_equal(project_box(v, 0.0, 1.0), v)

    def test_clamps(self):
        np.testing.assert_array_equal(project_box(np.array([-1.0, 2.0]), 0.0, 1.0), [0.0, 1.0])

    def test_idempotent_and_nonexpansive(self):
        rng = np.random.default_rng(8)
        lo, hi = -0.5, 1.5
        for _ in range(100):
            u, v = rng.normal(size=4) * 3, rng.normal(size=4) * 3
            pu, pv = project_box(u, lo, hi), project_box(v, lo, hi)
            np.testing.assert_array_equal(project_box(pu, lo, hi), pu)
            assert np.linalg.norm(pu - pv) <= np.linalg.norm(u - v) + 1e-15

    def test_inconsistent_bounds(self):
        with pytest.raises(DomainError):
            project_box(np.zeros(2), 1.0, 0.0)


def quadratic(A, b):
    def f(x):
        g = A @ x - b
        return 0.5 * float(x @ (A @ x)) - float(b @ x), g

    return f


class TestSpgMinimize:
    def test_projection_of_feasible_target(self):
        c = np.array([0.6, 0.2, 0.2])
        res = spg_minimize(quadratic(2 * np.eye(3), 2 * c), project_simplex, np.full(3, 1 / 3))
        assert res.converged
        np.testing.assert_allclose(res.minimizer, c, atol=1e-7)
        assert res.objective_value == pytest.approx(-float(c @ c), abs=1e-10)

    def test_infeasible_target_projects(self):
        v = np.array([2.0, 0.0])
        res = spg_minimize(quadratic(2 * np.eye(2), 2 * v), project_simplex, np.full(2, 0.5))
        np.testing.assert_allclose(res.minimizer, [1.0, 0.0], atol=1e-7)

    def test_box_quadratic_matches_clamp(self):
        target = np.array([-0.3, 0.4, 1.7])
        proj = lambda x: project_box(x, 0.0, 1.0)  # noqa: E731
        res = spg_minimize(quadratic(2 * np.eye(3), 2 * target), proj, np.full(3, 0.5))
        np.testing.assert_allclose(res.minimizer, [0.0, 0.4, 1.0], atol=1e-7)

    @pytest.mark.parametrize("seed", range(20))
    def test_matches_kkt_oracle_on_simplex(self, seed):
        rng = np.random.default_rng(1000 + seed)
        n = int(rng.integers(2, 7))
        M = rng.normal(size=(n, n))
        A = M @ M.T + n * np.eye(n)  # strongly convex
        b = rng.normal(size=n) * 2.0
        x_ref, val_ref = simplex_qp_bruteforce(A, b)
        res = spg_minimize(quadratic(A, b), project_simplex, np.full(n, 1.0 / n))
        assert res.converged
        np.testing.assert_allclose(res.minimizer, x_ref, atol=1e-6)
        assert res.objective_value == pytest.approx(val_ref, abs=1e-9)

    def test_all_iterates_feasible(self):
        rng = np.random.default_rng(99)
        A = np.diag([1.0, 10.0, 100.0, 1.0])
        b = rng.normal(size=4)
        seen = []
        res = spg_minimize(
            quadratic(A, b),
            project_simplex,
            np.full(4, 0.25),
            callback=lambda rec: seen.append(rec),
        )
        assert seen, "callback should observe accepted iterates"
        fixed = project_simplex(res.minimizer)
        np.testing.assert_allclose(res.minimizer, fixed, atol=1e-12)
        assert res.converged and res.final_pg_norm <= SpgConfig().tol_pg

    def test_nonmonotone_envelope(self):
        rng = np.random.default_rng(123)
        A = np.diag(np.geomspace(1, 1000, 5))
        b = rng.normal(size=5)
        trace = []
        spg_minimize(quadratic(A, b), project_simplex, np.full(5, 0.2),
                     callback=lambda rec: trace.append(rec["f"]))
        M = SpgConfig().history_len
        f0 = quadratic(A, b)(project_simplex(np.full(5, 0.2)))[0]
        values = [f0] + trace
        for k in range(1, len(values)):
            window = values[max(0, k - M):k]
            assert values[k] <= max(window) + 1e-10

    def test_deterministic(self):
        rng = np.random.default_rng(77)
        A = np.diag([3.0, 1.0, 2.0])
        b = rng.normal(size=3)
        t1, t2 = [], []
        r1 = spg_minimize(quadratic(A, b), project_simplex, np.full(3, 1 / 3),
                          callback=lambda rec: t1.append(rec["f"]))
        r2 = spg_minimize(quadratic(A, b), project_simplex, np.full(3, 1 / 3),
                          callback=lambda rec: t2.append(rec["f"]))
        assert t1 == t2
        np.testing.assert_array_equal(r1.minimizer, r2.minimizer)

    def test_counts_function_evals(self):
        calls = [0]
        base = quadratic(2 * np.eye(2), np.array([0.5, 0.5]))

        def counting(x):
            calls[0] += 1
            return base(x)

        res = spg_minimize(counting, project_simplex, np.array([0.9, 0.1]))
        assert res.function_evals == calls[0]

    def test_numeric_error_on_nonfinite(self):
        def bad(x):
            return np.inf, np.zeros_like(x)

        with pytest.raises(NumericError):
            spg_minimize(bad, project_simplex, np.array([0.5, 0.5]))

    def test_stagnation_carries_best_iterate(self):
        # a deceptive objective: zero at the start, a unit jump everywhere
        # else, so no step length can satisfy the sufficient-decrease test
        x0 = np.array([1.0, 1.0])

        def cliff(x):
            f = 0.0 if np.array_equal(x, x0) else 1.0
            return f, -np.ones_like(x)

        with pytest.raises(StagnationError) as excinfo:
            spg_minimize(cliff, lambda v: np.clip(v, -10, 10), x0)
        result = excinfo.value.result
        assert isinstance(result, SpgResult)
        assert not result.converged
        assert np.all(np.isfinite(result.minimizer))

    def test_max_iter_flags_unconverged(self):
        A = np.diag(np.geomspace(1, 1e6, 6))
        b = np.ones(6)
        res = spg_minimize(
            quadratic(A, b), project_simplex, np.full(6, 1 / 6),
            SpgConfig(max_iter=3),
        )
        assert not res.converged
        assert res.iterations == 3
