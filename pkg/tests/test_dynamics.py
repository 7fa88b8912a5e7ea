import math
import warnings

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from entrofact import dynamics, exact, model
from entrofact.exact import BlockWeights, Distribution, Space

import oracles


def random_gibbs(rng, n, q, scale=0.5):
    G = rng.standard_normal((n * q, n * q)) * scale
    return exact.gibbs_distribution(model.SpinSystem(n, q, G + G.T, rng.standard_normal(n * q)))


def test_full_block_is_rank_one():
    d = random_gibbs(np.random.default_rng(0), 2, 3)
    k = dynamics.block_kernel(d, BlockWeights.full(2))
    np.testing.assert_allclose(k.matrix, np.tile(d.probs, (9, 1)), atol=1e-15)
    assert dynamics.spectral_gap(k) == pytest.approx(1.0, abs=1e-9)
    assert dynamics.mixing_time_tv(k, 0.5) == 1
    assert dynamics.contraction_rate(d, k, budget=5) == pytest.approx(1.0, abs=1e-12)


def test_glauber_single_edge_hand_matrix():
    beta = 0.3
    d = exact.gibbs_distribution(model.build_potts(model.complete_graph(2), beta, 2))
    k = dynamics.block_kernel(d, BlockWeights.glauber(2))
    e = math.exp(2 * beta)
    agree, disagree = e / (1 + e), 1 / (1 + e)
    # states (1,1),(1,2),(2,1),(2,2); each update picks one site w.p. 1/2 and resamples it given the other
    hand = np.array([
        [agree, 0.5 * disagree, 0.5 * disagree, 0],
        [0.5 * agree, disagree, 0, 0.5 * agree],
        [0.5 * agree, 0, disagree, 0.5 * agree],
        [0, 0.5 * disagree, 0.5 * disagree, agree],
    ])
    np.testing.assert_allclose(k.matrix, hand, atol=1e-14)


def test_kernel_matches_oracle_and_is_reversible():
    rng = np.random.default_rng(1)
    for _ in range(5):
        n, q = int(rng.integers(2, 4)), int(rng.integers(2, 4))
        d = random_gibbs(rng, n, q)
        a = BlockWeights.random(n, rng)
        k = dynamics.block_kernel(d, a)
        mu = {tuple(s): p for s, p in zip(d.space.configs.tolist(), d.probs)}
        ref = oracles.block_kernel(mu, [(set(exact.sites_of(m)), w) for m, w in a.entries.items()])
        np.testing.assert_allclose(k.matrix, ref, atol=1e-12)
        assert k.row_error() <= 1e-12
        assert k.balance_error() <= 1e-10


def test_kernel_rejections():
    d = exact.uniform_distribution(Space.uniform(2, 2))
    with pytest.raises(ValueError):
        dynamics.block_kernel(d, BlockWeights.glauber(3))
    with pytest.warns(RuntimeWarning):
        dynamics.block_kernel(d, BlockWeights(2, {1: 1.0}))


def test_half_step_examples():
    rng = np.random.default_rng(2)
    d = exact.product_distribution([rng.dirichlet(np.ones(3)) for _ in range(3)])
    a = BlockWeights.random(3, rng)
    lhs, rhs = dynamics.half_step_check(d, a, np.full(27, 2.0))
    assert lhs == pytest.approx(0, abs=1e-14) and rhs == pytest.approx(0, abs=1e-14)
    for _ in range(20):
        f = rng.exponential(size=27)
        lhs, rhs = dynamics.half_step_check(d, a, f)
        assert abs(lhs - rhs) <= 1e-10
    lhs, rhs = dynamics.half_step_check(d, BlockWeights.full(3), rng.exponential(size=27))
    assert abs(lhs) <= 1e-12 and abs(rhs) <= 1e-12


@given(st.integers(0, 2 ** 20))
def test_half_step_identity(seed):
    rng = np.random.default_rng(seed)
    n, q = int(rng.integers(1, 4)), int(rng.integers(2, 4))
    d = random_gibbs(rng, n, q, 0.8)
    f = rng.exponential(size=d.space.size) * (rng.random(d.space.size) < 0.7)
    if not f.any():
        return
    lhs, rhs = dynamics.half_step_check(d, BlockWeights.random(n, rng), f)
    assert abs(lhs - rhs) <= 1e-10


def test_convexity_chain():
    rng = np.random.default_rng(3)
    for _ in range(3):
        n = int(rng.integers(2, 4))
        d = random_gibbs(rng, n, 2)
        a = BlockWeights.random(n, rng)
        k = dynamics.block_kernel(d, a)
        for _ in range(200):
            f = rng.exponential(size=d.space.size) ** 2
            mix = sum(w * exact.entropy(d, exact.conditional_expectation(d, m, f)) for m, w in a.entries.items())
            assert exact.entropy(d, k.apply(f)) <= mix + 1e-10


def test_product_glauber_spectrum_and_contraction():
    d = exact.product_distribution([[0.5, 0.5], [0.5, 0.5]])
    k = dynamics.block_kernel(d, BlockWeights.glauber(2))
    assert dynamics.spectral_gap(k) == pytest.approx(0.5, abs=1e-9)
    ev = np.sort(np.linalg.eigvals(k.matrix).real)
    np.testing.assert_allclose(ev, [0, 0.5, 0.5, 1], atol=1e-12)
    w = dynamics.find_contraction_witness(d, k, budget=50)
    assert w.value >= 0.5 - 1e-9
    # one step of P cannot contract entropy faster than it contracts variance
    assert w.value <= dynamics.variance_contraction(k) + 0.02


def _grid_contraction(d, k, levels):
    grid = np.array(np.meshgrid(*[levels] * d.space.size, indexing="ij")).reshape(d.space.size, -1).T
    p = d.probs
    def ent(F):
        m = F @ p
        return (F * np.log(F)) @ p - m * np.log(m)
    e = ent(grid)
    ok = e > 1e-10
    return float(np.max(ent(grid[ok] @ k.matrix.T) / e[ok]))


def test_contraction_witness_vs_grid():
    d = exact.product_distribution([[0.5, 0.5], [0.5, 0.5]])
    k = dynamics.block_kernel(d, BlockWeights.glauber(2))
    worst_ratio = _grid_contraction(d, k, np.geomspace(1e-3, 1, 30))
    w = dynamics.find_contraction_witness(d, k, budget=50)
    # the search must do at least as well as the grid (up to the grid's resolution)
    assert 1 - w.value >= worst_ratio - 1e-3


def test_orderings_on_random_systems():
    rng = np.random.default_rng(4)
    for _ in range(4):
        n = int(rng.integers(2, 4))
        d = random_gibbs(rng, n, 2, 0.4)
        a = BlockWeights.random(n, rng)
        k = dynamics.block_kernel(d, a)
        C = exact.estimate_best_constant(d, a, budget=30)
        w = dynamics.find_contraction_witness(d, k, budget=30)
        # the contraction witness f also bounds the factorization constant from below
        C_all = max(C, exact.shearer_ratio(d, a, w.f))
        assert w.value >= exact.min_cover(a) / C_all - 1e-9
        assert w.value <= dynamics.variance_contraction(k) + 0.02
        assert dynamics.variance_contraction(k) >= dynamics.spectral_gap(k) - 1e-12


def test_spectral_gap_rejects_irreversible():
    d = exact.uniform_distribution(Space.uniform(1, 3))
    P = np.array([[0, 1, 0], [0, 0, 1], [1, 0, 0]], dtype=float)
    with pytest.raises(ValueError, match="reversible"):
        dynamics.spectral_gap(dynamics.Kernel(P, d))


def test_mixing_time_and_tv_curve():
    d = exact.product_distribution([[0.5, 0.5], [0.5, 0.5]])
    k = dynamics.block_kernel(d, BlockWeights.glauber(2))
    curve = dynamics.tv_curve(k, [1, 1], 20)
    assert np.all(np.diff(curve) <= 1e-15)
    np.testing.assert_allclose(curve[:4], [0.75, 0.25, 0.125, 0.0625], atol=1e-14)
    t = dynamics.mixing_time_tv(k, 0.01)
    # eigen-oracle: from a corner, d_TV(t) = 2^{-t} for t >= 1 (the slow modes decay like (1/2)^t)
    oracle = next(s for s in range(1, 100) if 0.5 ** s <= 0.01)
    assert abs(t - oracle) <= 1
    assert dynamics.mixing_time_tv(k, 0.01, start=[1, 2]) <= t


def test_mixing_time_cap():
    d = exact.uniform_distribution(Space.uniform(2, 2))
    lazy = dynamics.Kernel(0.999 * np.eye(4) + 0.001 * np.full((4, 4), 0.25), d)
    assert dynamics.mixing_time_tv(lazy, 1e-6, max_steps=10) is None


def test_absorbing_outside_support():
    d = Distribution.from_probs(Space.uniform(2, 2), [0.5, 0, 0.25, 0.25])
    k = dynamics.block_kernel(d, BlockWeights.glauber(2))
    assert k.matrix[1, 1] == 1.0
    assert k.row_error() <= 1e-12
