import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from uhdgof.process import marked_process, project, step_value, t0_quantile


class TestProject:
    def test_basis_vector_selects_column(self, rng):
        X = rng.standard_normal((10, 4))
        e1 = np.array([1.0, 0.0, 0.0, 0.0])
        assert np.array_equal(project(X, e1), X[:, 0])

    def test_zero_row_projects_to_zero(self, rng):
        X = rng.standard_normal((5, 3))
        X[2] = 0.0
        alpha = np.array([1.0, 1.0, 1.0]) / np.sqrt(3)
        assert project(X, alpha)[2] == 0.0

    def test_matches_bruteforce_dot(self, rng):
        X = rng.standard_normal((3, 4))
        alpha = rng.standard_normal(4)
        alpha /= np.linalg.norm(alpha)
        expected = np.array([sum(X[i, j] * alpha[j] for j in range(4)) for i in range(3)])
        assert np.abs(project(X, alpha) - expected).max() < 1e-14

    def test_non_unit_alpha_rejected(self, rng):
        X = rng.standard_normal((5, 3))
        with pytest.raises(ValueError, match="unit norm"):
            project(X, np.array([1.0, 1.0, 0.0]))

    def test_dimension_mismatch(self, rng):
        X = rng.standard_normal((5, 3))
        with pytest.raises(ValueError, match="dimension mismatch"):
            project(X, np.array([1.0, 0.0]))


class TestMarkedProcess:
    def test_zero_residuals(self, rng):
        z = rng.standard_normal(10)
        table = marked_process(z, np.zeros(10))
        assert np.all(table.R == 0.0) and np.all(table.psi == 0.0)

    def test_two_point_hand_case(self):
        table = marked_process(np.array([0.0, 1.0]), np.array([2.0, -2.0]))
        assert table.R == pytest.approx([2 / np.sqrt(2), 0.0])
        assert table.psi == pytest.approx([2.0, 4.0])

    def test_n_below_two_rejected(self):
        with pytest.raises(ValueError, match="n >= 2"):
            marked_process(np.array([1.0]), np.array([0.5]))

    def test_matches_naive_double_loop(self, rng):
        n = 50
        z = rng.standard_normal(n)
        eps = rng.standard_normal(n)
        table = marked_process(z, eps)
        for t in rng.uniform(-2, 2, 10):
            r_naive = sum(eps[i] for i in range(n) if z[i] <= t) / np.sqrt(n)
            psi_naive = sum(eps[i] ** 2 for i in range(n) if z[i] <= t) / n
            assert step_value(table.z_sorted, table.R, t) == pytest.approx(r_naive, abs=1e-12)
            assert step_value(table.z_sorted, table.psi, t) == pytest.approx(psi_naive, abs=1e-12)

    def test_tie_handling_cumulates_whole_group(self):
        z = np.array([1.0, 0.0, 1.0, 2.0])
        eps = np.array([1.0, 2.0, 3.0, 4.0])
        table = marked_process(z, eps)
        # at t = 1, both tied points are included
        assert step_value(table.z_sorted, table.R, 1.0) == pytest.approx((2 + 1 + 3) / 2.0)

    def test_increment_identity(self, rng):
        z = rng.standard_normal(30)
        eps = rng.standard_normal(30)
        table = marked_process(z, eps)
        diffs = np.diff(table.R)
        assert np.abs(diffs - table.eps_sorted[1:] / np.sqrt(30)).max() < 1e-14

    def test_final_values(self, rng):
        z = rng.standard_normal(40)
        eps = rng.standard_normal(40)
        table = marked_process(z, eps)
        assert table.R[-1] == pytest.approx(eps.sum() / np.sqrt(40), abs=1e-12)
        assert table.psi[-1] == pytest.approx((eps ** 2).mean(), abs=1e-12)

    def test_psi_nondecreasing(self, rng):
        table = marked_process(rng.standard_normal(25), rng.standard_normal(25))
        assert np.all(np.diff(table.psi) >= 0.0)

    @given(st.sampled_from(["exp", "cube", "atan"]))
    @settings(max_examples=10, deadline=None)
    def test_monotone_reparameterization_invariance(self, name):
        g = np.random.default_rng(17)
        z = g.standard_normal(40)
        eps = g.standard_normal(40)
        f = {"exp": np.exp, "cube": lambda v: v ** 3, "atan": np.arctan}[name]
        a = marked_process(z, eps)
        b = marked_process(f(z), eps)
        assert np.array_equal(a.R, b.R)
        assert np.array_equal(a.psi, b.psi)
        assert a.t0_index == b.t0_index


class TestT0:
    def test_quantile_position_n100(self, rng):
        z = rng.standard_normal(100)
        t0, idx = t0_quantile(z)
        assert idx == 98  # ceil(0.99 * 100) = 99th order statistic
        assert t0 == np.sort(z)[98]

    def test_n2_takes_maximum(self):
        t0, idx = t0_quantile(np.array([3.0, 1.0]))
        assert idx == 1 and t0 == 3.0

    def test_all_equal(self):
        t0, _ = t0_quantile(np.full(10, 2.5))
        assert t0 == 2.5

    def test_consistent_with_table(self, rng):
        z = rng.standard_normal(77)
        t0, idx = t0_quantile(z)
        table = marked_process(z, rng.standard_normal(77))
        assert table.t0_index == idx and table.t0 == t0
