import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from flowsenate.pcp import PcpConfig, default_lambda, pcp_decompose, vote_floor


def low_rank_plus_spikes(rng, n=50, rank=3, n_spikes=50, spike_scale=10.0):
    """Ground-truth pair (L, A): random rank-r matrix plus sparse spikes."""
    U = rng.normal(size=(n, rank))
    V = rng.normal(size=(rank, n))
    L = U @ V
    rms = math.sqrt(float((L * L).mean()))
    A = np.zeros((n, n))
    idx = rng.choice(n * n, size=n_spikes, replace=False)
    signs = rng.choice([-1.0, 1.0], size=n_spikes)
    A.flat[idx] = signs * spike_scale * rms * (1.0 + rng.random(n_spikes))
    return L, A


class TestDefaultLambda:
    def test_square(self):
        assert default_lambda(50, 50) == pytest.approx(2.0 / math.sqrt(50))

    def test_wide_uses_larger_dimension(self):
        assert default_lambda(20, 100) == pytest.approx(2.0 / 10.0)
        assert default_lambda(100, 20) == pytest.approx(2.0 / 10.0)

    def test_scale_passthrough(self):
        assert default_lambda(25, 25, C=1.0) == pytest.approx(0.2)

    def test_validation(self):
        with pytest.raises(ValueError):
            default_lambda(0, 5)
        with pytest.raises(ValueError):
            default_lambda(5, 5, C=0.0)


class TestConfig:
    def test_lam_prefers_override(self):
        cfg = PcpConfig(lambda_override=0.05)
        assert cfg.lam(50, 50) == 0.05

    def test_lam_from_scale(self):
        assert PcpConfig(C=2.0).lam(50, 50) == pytest.approx(2.0 / math.sqrt(50))

    def test_invalid(self):
        with pytest.raises(ValueError):
            PcpConfig(C=-1.0)
        with pytest.raises(ValueError):
            PcpConfig(rho=1.0)


class TestDecompose:
    def test_zero_matrix(self):
        d = pcp_decompose(np.zeros((8, 8)))
        assert d.converged
        assert np.allclose(d.N_matrix, 0) and np.allclose(d.A_matrix, 0)

    def test_rejects_bad_input(self):
        with pytest.raises(ValueError):
            pcp_decompose(np.zeros(5))
        with pytest.raises(ValueError):
            pcp_decompose(np.array([[np.nan, 1.0], [0.0, 2.0]]))

    def test_pure_low_rank_has_no_spikes(self):
        rng = np.random.default_rng(0)
        L, _ = low_rank_plus_spikes(rng, n=40, rank=2, n_spikes=1)
        d = pcp_decompose(L)
        assert d.converged
        thresh = 1e-3 * float(np.linalg.norm(L))
        assert not (np.abs(d.A_matrix) > thresh).any()
        assert np.linalg.norm(d.N_matrix - L) / np.linalg.norm(L) <= 1e-3

    def test_recovers_planted_support(self):
        rng = np.random.default_rng(7)
        L, A = low_rank_plus_spikes(rng)
        X = L + A
        d = pcp_decompose(X)
        assert d.converged
        thresh = 1e-3 * float(np.linalg.norm(X))
        assert np.array_equal(np.abs(d.A_matrix) > thresh, A != 0)
        assert np.linalg.norm(d.N_matrix - L) / np.linalg.norm(L) <= 1e-3

    def test_feasibility_at_convergence(self):
        rng = np.random.default_rng(3)
        L, A = low_rank_plus_spikes(rng, n=30, rank=2, n_spikes=15)
        X = L + A
        d = pcp_decompose(X)
        assert d.converged
        gap = np.linalg.norm(X - d.N_matrix - d.A_matrix) / np.linalg.norm(X)
        assert gap <= 1e-7
        assert d.residual <= 1e-7

    def test_objective_beats_both_trivial_points(self):
        rng = np.random.default_rng(11)
        for _ in range(5):
            X = rng.normal(size=(25, 40)) + rng.poisson(3.0, size=(25, 40))
            d = pcp_decompose(X)
            assert d.converged
            lam = d.lam
            nuclear = float(np.linalg.svd(X, compute_uv=False).sum())
            l1 = float(lam * np.abs(X).sum())
            assert d.objective <= min(nuclear, l1) + 1e-6 * float(np.linalg.norm(X))

    def test_history_kept_on_request(self):
        X = np.random.default_rng(5).normal(size=(12, 12))
        d = pcp_decompose(X, PcpConfig(keep_history=True))
        assert len(d.objective_history) == d.iterations
        assert d.objective == pytest.approx(d.objective_history[-1], rel=1e-9)

    def test_iterations_capped(self):
        X = np.random.default_rng(9).normal(size=(15, 15))
        d = pcp_decompose(X, PcpConfig(max_iters=3))
        assert d.iterations <= 3

    @settings(max_examples=20, deadline=None)
    @given(st.integers(0, 10_000))
    def test_sum_matches_input_when_converged(self, seed):
        rng = np.random.default_rng(seed)
        X = rng.normal(size=(12, 17)) * rng.integers(1, 20)
        d = pcp_decompose(X)
        if d.converged:
            gap = np.linalg.norm(X - d.N_matrix - d.A_matrix)
            assert gap <= 1e-6 * max(1.0, np.linalg.norm(X))


class TestVoteFloor:
    def test_small_matrix_uses_absolute_floor(self):
        assert vote_floor(np.zeros((4, 4))) == pytest.approx(1e-6)

    def test_scales_with_magnitude(self):
        X = np.full((10, 10), 1000.0)
        assert vote_floor(X) > vote_floor(X / 1000.0)

    def test_deterministic(self):
        X = np.random.default_rng(2).normal(size=(9, 9))
        assert vote_floor(X) == vote_floor(X.copy())
