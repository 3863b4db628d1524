import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

import oracles
from edfcp.bootstrap import MultiplierConfig, replicate_paths
from edfcp.core import MonitorConfig, interval_boundaries, quantile
from edfcp.thresholds import (
    DegenerateConditioningError,
    bootstrap_threshold,
    conditional_quantiles,
    interval_sups,
    mc_threshold,
    simulate_null_paths,
    xi_from_alpha,
)


class TestConditionalQuantiles:
    def test_p1_is_plain_quantile(self, rng):
        s = rng.random((300, 1))
        assert conditional_quantiles(s, 0.9) == [quantile(s[:, 0], 0.9)]

    def test_order_one_is_max_of_survivors(self, rng):
        s = rng.random((50, 4))
        levels = conditional_quantiles(s, 1.0)
        # at order 1 every row survives, so each level is the column maximum
        assert levels == list(s.max(axis=0))

    @pytest.mark.parametrize("seed", range(5))
    def test_filter_and_sort_oracle(self, seed):
        s = np.random.default_rng(seed).random((200, 3))
        assert conditional_quantiles(s, 0.9) == oracles.filter_and_sort_quantiles(s, 0.9)

    def test_levels_are_members(self, rng):
        s = rng.exponential(size=(500, 5))
        for i, g in enumerate(conditional_quantiles(s, 0.98)):
            assert g in s[:, i]

    @given(
        st.integers(1, 30).flatmap(
            lambda r: st.lists(st.lists(st.integers(0, 4), min_size=4, max_size=4), min_size=r, max_size=r)
        ),
        st.floats(0.0, 1.0),
    )
    def test_survivors_never_empty(self, rows, order):
        # each level is attained by a surviving row, which therefore survives
        s = np.array(rows, dtype=float)
        levels = conditional_quantiles(s, order)
        assert np.any(np.all(s <= np.array(levels), axis=1))

    def test_empty_input(self):
        with pytest.raises(ValueError):
            conditional_quantiles(np.empty((0, 3)), 0.5)

    def test_degenerate_error_type(self):
        assert issubclass(DegenerateConditioningError, ValueError)

    def test_survivor_telescoping(self, rng):
        p, order = 5, 0.95 ** (1 / 5)
        s = rng.random((20000, p))
        levels = conditional_quantiles(s, order)
        surv = np.all(s <= np.array(levels), axis=1).mean()
        assert abs(surv - 0.95) < 3 * np.sqrt(0.95 * 0.05 / 20000) + 5 / 20000


class TestXi:
    def test_p1(self):
        assert xi_from_alpha(0.05, 1) == pytest.approx(0.05, abs=1e-15)

    @pytest.mark.parametrize("alpha,steps", [(0.05, 50), (0.01, 7), (0.2, 1000)])
    def test_identity(self, alpha, steps):
        xi = xi_from_alpha(alpha, steps)
        assert abs((1 - xi) ** steps - (1 - alpha)) < 1e-12

    def test_first_order(self):
        assert abs(xi_from_alpha(0.05, 50) - 0.001) < 5e-5

    def test_invalid(self):
        with pytest.raises(ValueError):
            xi_from_alpha(0.05, 0)


class TestIntervalSups:
    def test_against_loop(self, rng):
        paths = rng.random((7, 51))
        b = interval_boundaries(50, 100, 4)
        got = interval_sups(paths, b)
        for r in range(7):
            for i in range(4):
                ks = range(b[i] + 1, b[i + 1] + 1)
                assert got[r, i] == max(paths[r, k - 50] for k in ks)


class TestMonteCarlo:
    def test_deterministic(self):
        cfg = MonitorConfig(m=20, n=40, p=3, detector="S")
        a = mc_threshold(cfg, M=500, seed=3)
        assert a == mc_threshold(cfg, M=500, seed=3)
        assert a != mc_threshold(cfg, M=500, seed=4)
        assert a.boundaries == tuple(interval_boundaries(20, 40, 3))
        assert a.order == pytest.approx(0.95 ** (1 / 3))
        assert a.meta["mode"] == "mc" and a.meta["seed"] == 3

    def test_p1_direct(self):
        cfg = MonitorConfig(m=20, n=40, detector="R", gamma=0.5)
        th = mc_threshold(cfg, M=800, seed=1)
        sup = simulate_null_paths(cfg, 800, 1).max(axis=1)
        assert th.levels == (quantile(sup, 0.95),)

    def test_multivariate_rejected(self):
        with pytest.raises(ValueError, match="Monte Carlo thresholds require univariate i.i.d. mode"):
            mc_threshold(MonitorConfig(m=10, n=20, dim=2), M=10)

    def test_distribution_free_sampler(self):
        # ranks of normal draws equal ranks of their uniform transforms
        from scipy.stats import norm

        cfg = MonitorConfig(m=15, n=30, p=2)
        a = mc_threshold(cfg, M=300, seed=8)
        b = mc_threshold(cfg, M=300, seed=8, sampler=lambda r, n: norm.ppf(r.random(n)))
        assert a.levels == b.levels


class TestBootstrap:
    def test_deterministic(self, rng):
        X = rng.random((40, 1))
        cfg = MonitorConfig(m=40, n=70, p=2)
        mult = MultiplierConfig(B=200, seed=12)
        a = bootstrap_threshold(X, cfg, mult)
        assert a == bootstrap_threshold(X, cfg, mult)
        assert a.boundaries == tuple(interval_boundaries(40, 70, 2))
        assert a.meta["ell"] == 3 and a.meta["mode"] == "bootstrap"

    def test_p1_direct(self, rng):
        X = rng.random((40, 2))
        cfg = MonitorConfig(m=40, n=70, detector="S", dim=2)
        mult = MultiplierConfig(B=150, seed=2)
        sup = replicate_paths(X, cfg, mult).values.max(axis=1)
        assert bootstrap_threshold(X, cfg, mult).levels == (quantile(sup, 0.95),)

    def test_monotone_invariance(self, rng):
        X = rng.standard_normal((30, 2))
        Y = np.column_stack([X[:, 0] ** 3 + X[:, 0], np.exp(X[:, 1])])
        cfg = MonitorConfig(m=30, n=50, p=3, dim=2, gamma=0.5)
        mult = MultiplierConfig(B=100, seed=6)
        assert bootstrap_threshold(X, cfg, mult).levels == bootstrap_threshold(Y, cfg, mult).levels

    def test_p_too_large(self, rng):
        # m' = floor(400 / 39) = 10, so p may not exceed 10
        X = rng.random((20, 1))
        with pytest.raises(ValueError, match="p exceeds m - m'"):
            bootstrap_threshold(X, MonitorConfig(m=20, n=39, p=11), MultiplierConfig(B=10))
