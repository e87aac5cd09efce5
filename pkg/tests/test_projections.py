import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from uhdgof.families import gaussian
from uhdgof.lasso import FittedModel, fit_cv_post_lasso
from uhdgof.projections import (build_projection_set, dc_sis_screen,
                                distance_correlation, screen_size, sparse_sir,
                                split_data)
from uhdgof.simulate import Scenario, gen_study1


def dcor_bruteforce(u, v):
    """Independent double-centering implementation with explicit loops."""
    n = len(u)
    A = np.zeros((n, n))
    B = np.zeros((n, n))
    for i in range(n):
        for j in range(n):
            A[i, j] = abs(u[i] - u[j])
            B[i, j] = abs(v[i] - v[j])
    for D in (A, B):
        row = D.mean(axis=1)
        col = D.mean(axis=0)
        grand = D.mean()
        for i in range(n):
            for j in range(n):
                D[i, j] = D[i, j] - row[i] - col[j] + grand
    dcov2 = (A * B).mean()
    dvu = (A * A).mean()
    dvv = (B * B).mean()
    if dvu <= 0 or dvv <= 0:
        return 0.0
    return np.sqrt(max(dcov2, 0.0) / np.sqrt(dvu * dvv))


class TestSplit:
    def test_even_split_sizes(self):
        plan = split_data(6, seed=0)
        assert plan.indices_d1.size == 3 and plan.indices_d2.size == 3
        assert np.intersect1d(plan.indices_d1, plan.indices_d2).size == 0
        assert np.array_equal(np.sort(np.concatenate([plan.indices_d1, plan.indices_d2])),
                              np.arange(6))

    def test_odd_split_sizes(self):
        plan = split_data(7, seed=1)
        assert plan.indices_d1.size == 4 and plan.indices_d2.size == 3

    def test_deterministic(self):
        a, b = split_data(100, seed=42), split_data(100, seed=42)
        assert np.array_equal(a.indices_d1, b.indices_d1)

    def test_different_seeds_differ(self):
        assert not np.array_equal(split_data(100, 1).indices_d1,
                                  split_data(100, 2).indices_d1)

    def test_too_small(self):
        with pytest.raises(ValueError, match="n >= 4"):
            split_data(3, seed=0)


class TestDistanceCorrelation:
    def test_self_correlation_is_one(self, rng):
        u = rng.standard_normal(40)
        assert distance_correlation(u, u) == pytest.approx(1.0, abs=1e-12)

    def test_affine_invariance(self, rng):
        u = rng.standard_normal(40)
        assert distance_correlation(u, -2.5 * u + 3.0) == pytest.approx(1.0, abs=1e-12)

    def test_hand_case_vs_bruteforce(self):
        u = np.array([0.0, 1.0, 2.0])
        v = np.array([0.0, 1.0, 0.0])
        assert distance_correlation(u, v) == pytest.approx(dcor_bruteforce(u, v), abs=1e-12)

    def test_random_cases_vs_bruteforce(self, rng):
        for _ in range(5):
            u = rng.standard_normal(25)
            v = rng.standard_normal(25) + 0.5 * u
            assert distance_correlation(u, v) == pytest.approx(
                dcor_bruteforce(u, v), abs=1e-12)

    def test_constant_input_gives_zero(self, rng):
        u = rng.standard_normal(10)
        assert distance_correlation(u, np.ones(10)) == 0.0

    def test_length_mismatch(self):
        with pytest.raises(ValueError, match="length mismatch"):
            distance_correlation(np.arange(4.0), np.arange(5.0))


class TestScreen:
    def test_full_screen_returns_all(self, rng):
        X = rng.standard_normal((30, 5))
        y = rng.standard_normal(30)
        assert set(dc_sis_screen(X, y, 5).tolist()) == set(range(5))

    def test_constant_column_ranked_last(self, rng):
        X = rng.standard_normal((40, 4))
        X[:, 2] = 1.0
        y = X[:, 0] + rng.standard_normal(40)
        order = dc_sis_screen(X, y, 4)
        assert order[-1] == 2

    def test_k_out_of_range(self, rng):
        X = rng.standard_normal((20, 3))
        y = rng.standard_normal(20)
        with pytest.raises(ValueError, match="out of range"):
            dc_sis_screen(X, y, 4)

    def test_screen_size_rule(self):
        assert screen_size(150) == int(150 / np.log(150))
        assert screen_size(5) == 2  # floor rule

    def test_signal_columns_survive_screening(self):
        k = int(150 / np.log(150))
        assert k == 29
        hits = 0
        for seed in range(100):
            data = gen_study1(Scenario(1, "H11", 0.0, 300, 100, seed=seed))
            sel = set(dc_sis_screen(data.X, data.y, k).tolist())
            if set(range(5)) <= sel:
                hits += 1
        assert hits >= 95


class TestSparseSir:
    def test_single_index_direction_recovery(self):
        hits = 0
        tried = 0
        for seed in range(100):
            g = np.random.default_rng(seed)
            X = g.standard_normal((400, 50))
            beta = np.zeros(50)
            beta[:5] = 1.0
            y = (X @ beta) ** 3 + g.standard_normal(400)
            k = min(screen_size(400), 50)
            scr = dc_sis_screen(X, y, k)
            dirs = sparse_sir(X[:, scr], y, scr, 50, n_slices=10, max_d=5, seed=seed)
            if not dirs:
                continue
            tried += 1
            cos = abs(dirs[0] @ (beta / np.linalg.norm(beta)))
            if cos >= 0.9:
                hits += 1
        assert tried >= 95
        assert hits >= 0.90 * tried

    def test_binary_forces_two_slices(self, rng):
        X = rng.standard_normal((120, 10))
        y = (rng.random(120) < 0.5).astype(float)
        dirs = sparse_sir(X, y, np.arange(10), 10, n_slices=7, max_d=5,
                          seed=0, binary=True)
        assert len(dirs) <= 1  # rank of the between-class covariance is 1

    def test_constant_response_raises(self, rng):
        X = rng.standard_normal((50, 5))
        with pytest.raises(ValueError, match="distinct response"):
            sparse_sir(X, np.ones(50), np.arange(5), 5, n_slices=10, max_d=3)

    def test_directions_are_unit_norm_in_full_space(self, rng):
        X = rng.standard_normal((200, 20))
        y = X[:, 3] + 0.5 * rng.standard_normal(200)
        scr = dc_sis_screen(X, y, 8)
        dirs = sparse_sir(X[:, scr], y, scr, 20, n_slices=10, max_d=3, seed=1)
        for d in dirs:
            assert d.shape == (20,)
            assert np.linalg.norm(d) == pytest.approx(1.0, abs=1e-12)
            assert np.all(d[np.setdiff1d(np.arange(20), scr)] == 0.0)


def make_model(coefficients, intercept=0.0):
    coefficients = np.asarray(coefficients, dtype=float)
    return FittedModel(intercept=intercept, coefficients=coefficients,
                       support=np.flatnonzero(coefficients), lam=0.1,
                       family=gaussian())


class TestBuildProjectionSet:
    def test_theta0_is_normalized_coefficients(self):
        model = make_model([2.0, 0.0, 0.0])
        ps = build_projection_set(model, [], "D1")
        assert ps.includes_theta0
        assert ps.d_hat == 0
        assert np.allclose(ps.directions[0], [1.0, 0.0, 0.0])

    def test_duplicate_sir_direction_removed(self):
        model = make_model([1.0, 1.0, 0.0])
        dup = np.array([1.0, 1.0, 0.0]) / np.sqrt(2)
        other = np.array([0.0, 0.0, 1.0])
        ps = build_projection_set(model, [dup, other], "D1")
        assert ps.directions.shape[0] == 2  # dup collapsed into theta0
        assert ps.d_hat == 1
        # the SIR list for the local-smoothing terms is kept un-deduplicated
        assert ps.sir_directions.shape[0] == 2

    def test_zero_coefficients_omits_theta0(self):
        model = make_model([0.0, 0.0, 0.0])
        sir = [np.array([0.0, 1.0, 0.0])]
        ps = build_projection_set(model, sir, "D2")
        assert not ps.includes_theta0
        assert ps.d_hat == 0
        assert np.allclose(ps.directions[0], [0.0, 1.0, 0.0])

    def test_fallback_to_screened_coordinate(self):
        model = make_model([0.0, 0.0, 0.0])
        ps = build_projection_set(model, [], "D1", fallback_index=2)
        assert ps.used_fallback
        assert np.allclose(ps.directions[0], [0.0, 0.0, 1.0])

    def test_no_fallback_raises(self):
        model = make_model([0.0, 0.0])
        with pytest.raises(ValueError, match="fallback"):
            build_projection_set(model, [], "D1")

    @given(st.integers(min_value=0, max_value=2 ** 32 - 1))
    @settings(max_examples=25, deadline=None)
    def test_unit_norms_property(self, seed):
        g = np.random.default_rng(seed)
        model = make_model(g.standard_normal(6))
        sir = [g.standard_normal(6) * g.uniform(0.1, 5)] * 2
        ps = build_projection_set(model, sir, "D1", fallback_index=0)
        norms = np.linalg.norm(ps.directions, axis=1)
        assert np.abs(norms - 1.0).max() < 1e-12
        assert ps.d_hat == ps.directions.shape[0] - 1


def test_projection_estimation_uses_only_its_half():
    """Perturbing the other half leaves the ProjectionSet bit-identical."""
    from uhdgof.runner import Config, estimate_projections

    data = gen_study1(Scenario(1, "H11", 0.0, 120, 15, seed=9))
    plan = split_data(data.n, seed=3)
    cfg = Config(method="tcvm_c", family=gaussian(), seed=3)
    x1, y1 = data.X[plan.indices_d1], data.y[plan.indices_d1]
    ps_a = estimate_projections(x1, y1, cfg, "D1", seed=11)
    # perturb D2 rows; D1 inputs unchanged
    X2 = data.X.copy()
    X2[plan.indices_d2] += 37.0
    x1_again = X2[plan.indices_d1]
    ps_b = estimate_projections(x1_again, y1, cfg, "D1", seed=11)
    assert np.array_equal(ps_a.directions, ps_b.directions)
