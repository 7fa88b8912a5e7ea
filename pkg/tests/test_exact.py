import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from entrofact import exact, model
from entrofact.exact import BlockWeights, Distribution, Space

import oracles


def random_product(rng, n, q):
    return exact.product_distribution([rng.dirichlet(np.ones(q)) for _ in range(n)])


def random_system(rng, n, q, scale=0.5):
    G = rng.standard_normal((n * q, n * q)) * scale
    return model.SpinSystem(n, q, G + G.T, rng.standard_normal(n * q))


def as_dict(d):
    return {tuple(s): p for s, p in zip(d.space.configs.tolist(), d.probs)}


def fdict(d, f):
    return {tuple(s): v for s, v in zip(d.space.configs.tolist(), f)}


# --- distributions ---------------------------------------------------------

def test_uniform_and_single_edge():
    zero = model.SpinSystem(2, 2, np.zeros((4, 4)), np.zeros(4))
    np.testing.assert_allclose(exact.gibbs_distribution(zero).probs, 0.25, atol=1e-15)
    beta = 0.3
    d = exact.gibbs_distribution(model.build_potts(model.complete_graph(2), beta, 2))
    same = d.probs[d.space.configs[:, 0] == d.space.configs[:, 1]].sum()
    assert same == pytest.approx(math.exp(2 * beta) / (math.exp(2 * beta) + 1), abs=1e-14)


def test_gibbs_matches_spin_form():
    rng = np.random.default_rng(0)
    for _ in range(5):
        n, q = int(rng.integers(1, 4)), int(rng.integers(2, 4))
        sys = random_system(rng, n, q)
        ref = oracles.gibbs(n, q, sys.gamma.tolist(), sys.fields.tolist())
        d = exact.gibbs_distribution(sys)
        for s, p in as_dict(d).items():
            assert p == pytest.approx(ref[s], abs=1e-12)
        assert d.probs.sum() == pytest.approx(1, abs=1e-12)


def test_cap():
    sys = model.build_curie_weiss(12, 0.5, 2)
    with pytest.raises(exact.CapExceededError, match="4096"):
        exact.gibbs_distribution(sys, cap=1000)


def test_space_layout():
    space = Space((2, 3))
    assert space.configs.tolist()[:4] == [[1, 1], [1, 2], [1, 3], [2, 1]]
    for k, s in enumerate(space.configs):
        assert space.index(s) == k
        assert space.binary[k].tolist() == oracles.one_hot(tuple(s), (2, 3))
    assert exact.sites_of(exact.mask_of([0, 2])) == [0, 2]


def test_distribution_validation():
    space = Space.uniform(1, 2)
    with pytest.raises(ValueError):
        Distribution(space, [0.0])
    with pytest.raises(ValueError):
        Distribution(space, [-np.inf, -np.inf])
    with pytest.raises(ValueError):
        Distribution.from_probs(space, [-0.1, 1.1])


# --- conditionals ----------------------------------------------------------

def test_conditional_edge_cases():
    rng = np.random.default_rng(1)
    d = exact.gibbs_distribution(random_system(rng, 3, 2))
    tau = [2, 1, 2]
    np.testing.assert_allclose(exact.conditional(d, d.space.full_mask, tau).probs, d.probs, atol=1e-15)
    dirac = exact.conditional(d, 0, tau).probs
    assert dirac[d.space.index(tau)] == pytest.approx(1.0)
    assert dirac.sum() == pytest.approx(1.0)


def test_conditional_support_and_product_marginal():
    rng = np.random.default_rng(2)
    d = random_product(rng, 3, 3)
    tau = [1, 3, 2]
    c = exact.conditional(d, exact.mask_of([1]), tau)
    support = np.flatnonzero(c.probs > 0)
    for k in support:
        s = d.space.configs[k]
        assert s[0] == 1 and s[2] == 2
    marg = np.array([c.probs[d.space.configs[:, 1] == a].sum() for a in (1, 2, 3)])
    ref = np.array([d.probs[d.space.configs[:, 1] == a].sum() for a in (1, 2, 3)])
    np.testing.assert_allclose(marg, ref, atol=1e-12)


def test_conditional_zero_event():
    d = Distribution.from_probs(Space.uniform(2, 2), [0.5, 0.5, 0, 0])
    with pytest.raises(ValueError):
        exact.conditional(d, exact.mask_of([1]), [2, 1])


# --- entropy ---------------------------------------------------------------

def test_entropy_examples():
    d = exact.uniform_distribution(Space.uniform(1, 2))
    assert exact.entropy(d, [3.0, 3.0]) == pytest.approx(0, abs=1e-15)
    assert exact.entropy(d, [2.0, 0.0]) == pytest.approx(math.log(2), abs=1e-15)
    with pytest.raises(ValueError):
        exact.entropy(d, [1.0, -1.0])


@given(st.integers(0, 2 ** 20), st.floats(0.01, 100))
def test_entropy_homogeneous_nonnegative(seed, c):
    rng = np.random.default_rng(seed)
    d = exact.gibbs_distribution(random_system(rng, 2, 3))
    f = rng.exponential(size=d.space.size) * (rng.random(d.space.size) < 0.8)
    if not f.any():
        return
    e = exact.entropy(d, f)
    assert e >= 0
    assert exact.entropy(d, c * f) == pytest.approx(c * e, rel=1e-10, abs=1e-13)
    assert e == pytest.approx(oracles.entropy(as_dict(d), fdict(d, f)), abs=1e-12)


def test_avg_conditional_entropy_edges_and_oracle():
    rng = np.random.default_rng(3)
    d = exact.gibbs_distribution(random_system(rng, 3, 2))
    f = rng.exponential(size=8)
    assert exact.avg_conditional_entropy(d, d.space.full_mask, f) == pytest.approx(exact.entropy(d, f), abs=1e-14)
    assert exact.avg_conditional_entropy(d, 0, f) == pytest.approx(0, abs=1e-15)
    for block in ([0], [1, 2], [0, 2]):
        got = exact.avg_conditional_entropy(d, exact.mask_of(block), f)
        assert got == pytest.approx(oracles.avg_conditional_entropy(as_dict(d), fdict(d, f), set(block)), abs=1e-12)


def test_entropy_decomposition():
    rng = np.random.default_rng(4)
    for sys in (random_system(rng, 3, 2), random_system(rng, 2, 3), model.build_curie_weiss(4, 0.8)):
        d = exact.gibbs_distribution(sys)
        for _ in range(200):
            f = rng.exponential(size=d.space.size) ** 2
            A = int(rng.integers(0, d.space.full_mask + 1))
            lhs = exact.entropy(d, f)
            rhs = exact.avg_conditional_entropy(d, A, f) + exact.entropy(d, exact.conditional_expectation(d, A, f))
            assert abs(lhs - rhs) <= 1e-10


# --- covariance, tilts, influence ------------------------------------------

def test_covariance_examples():
    dirac = Distribution.from_probs(Space.uniform(2, 2), [0, 0, 1, 0])
    np.testing.assert_allclose(exact.covariance(dirac), 0, atol=1e-15)
    u = exact.uniform_distribution(Space.uniform(1, 2))
    np.testing.assert_allclose(exact.covariance(u), [[0.25, -0.25], [-0.25, 0.25]], atol=1e-15)
    assert model.max_eigenvalue(exact.covariance(u)) == pytest.approx(0.5, abs=1e-12)
    rng = np.random.default_rng(5)
    d = exact.gibbs_distribution(random_system(rng, 2, 3))
    np.testing.assert_allclose(exact.covariance(d), oracles.covariance(as_dict(d), (3, 3)), atol=1e-12)


def test_single_site_covariance_bound():
    rng = np.random.default_rng(6)
    for _ in range(1000):
        q = int(rng.integers(2, 9))
        m = rng.dirichlet(np.ones(q) * rng.choice([0.1, 1.0, 10.0]))
        C = np.diag(m) - np.outer(m, m)
        assert model.max_eigenvalue(C) <= 0.5 + 1e-12


def test_tilt():
    rng = np.random.default_rng(7)
    d = exact.gibbs_distribution(random_system(rng, 2, 3))
    np.testing.assert_allclose(exact.tilt(d, np.zeros(6)).probs, d.probs, atol=1e-15)
    u, v = rng.standard_normal(6), rng.standard_normal(6)
    np.testing.assert_allclose(exact.tilt(exact.tilt(d, u), v).probs, exact.tilt(d, u + v).probs, atol=1e-12)
    p = exact.tilt(random_product(rng, 3, 2), rng.standard_normal(6) * 3)
    C = exact.covariance(p)
    site = p.space.site_of_coordinate()
    assert np.abs(C[site[:, None] != site[None, :]]).max() < 1e-12
    with pytest.raises(ValueError):
        exact.tilt(d, np.full(6, np.inf))


def test_mean_vector():
    np.testing.assert_allclose(exact.mean_vector(exact.uniform_distribution(Space.uniform(1, 2))), [0.5, 0.5])
    dirac = Distribution.from_probs(Space.uniform(2, 3), np.eye(9)[5])
    np.testing.assert_array_equal(exact.mean_vector(dirac), model.to_binary(dirac.space.configs[5], 3))


def test_influence_matrix():
    rng = np.random.default_rng(8)
    assert np.abs(exact.influence_matrix(random_product(rng, 3, 2))).max() < 1e-14
    d = exact.gibbs_distribution(model.build_potts(model.complete_graph(2), 0.5, 2))
    J = exact.influence_matrix(d)
    # J(0,1; 1,1) = P(sigma_2 = 1 | sigma_1 = 1) - P(sigma_2 = 1)
    p_same = math.exp(1.0) / (math.exp(1.0) + 1)
    assert J[0, 2] == pytest.approx(p_same - 0.5, abs=1e-12)
    assert not J[:2, :2].any()
    with pytest.raises(ValueError):
        exact.influence_matrix(Distribution.from_probs(Space.uniform(2, 2), [1, 0, 0, 0]))


def test_covariance_influence_chain():
    rng = np.random.default_rng(9)
    for _ in range(100):
        n, q = int(rng.integers(2, 4)), int(rng.integers(2, 4))
        d = exact.tilt(exact.gibbs_distribution(random_system(rng, n, q, 0.7)), rng.standard_normal(n * q))
        eig = exact.influence_eigenvalues(d)
        assert np.abs(eig.imag).max() <= 1e-9
        lam_j = eig.real.max()
        assert lam_j == pytest.approx(exact.spectral_independence(d), abs=1e-9)
        assert model.max_eigenvalue(exact.covariance(d)) <= lam_j + 0.5 + 1e-9


# --- block weights and Shearer ratio --------------------------------------

def test_min_cover():
    assert exact.min_cover(BlockWeights.glauber(4)) == pytest.approx(0.25)
    assert exact.min_cover(BlockWeights.full(5)) == 1.0
    assert exact.min_cover(BlockWeights.even_odd(6)) == pytest.approx(0.5)
    a = BlockWeights.from_blocks(3, [([0, 1], 0.5), ([1, 2], 0.3), ([0], 0.2)])
    assert exact.min_cover(a) == pytest.approx(0.3)


def test_block_weights_validation_and_json():
    with pytest.raises(ValueError, match="sum to 1"):
        BlockWeights(2, {1: 0.5})
    with pytest.raises(ValueError):
        BlockWeights(2, {8: 1.0})
    rng = np.random.default_rng(10)
    for _ in range(20):
        a = BlockWeights.random(4, rng)
        assert exact.min_cover(a) > 0
        b = BlockWeights.from_json(a.to_json())
        assert b.entries.keys() == a.entries.keys()
        np.testing.assert_allclose(b.weights, a.weights, atol=1e-15)


def test_shearer_ratio_examples():
    d = exact.product_distribution([[0.5, 0.5], [0.5, 0.5]])
    f = (d.space.configs[:, 0] == 1).astype(float)
    assert exact.shearer_ratio(d, BlockWeights.glauber(2), f) == pytest.approx(1.0, abs=1e-14)
    with pytest.raises(ValueError):
        exact.shearer_ratio(d, BlockWeights.glauber(2), np.ones(4))
    # alpha supported on site 0 only: site-1 functions are invisible to the denominator
    a = BlockWeights(2, {1: 1.0})
    g = (d.space.configs[:, 1] == 1).astype(float) + 0.5
    r = exact.shearer_ratio(d, BlockWeights(2, {1: 0.5, 3: 0.5}), g)
    assert r == pytest.approx(oracles.shearer_ratio(as_dict(d), fdict(d, g), [({0}, 0.5), ({0, 1}, 0.5)]))
    with pytest.raises(ValueError):
        exact.shearer_ratio(d, a, g)  # gamma(alpha) = 0 and the denominator vanishes
    h = exact.UnboundedWitness()
    assert math.isinf(h)


def test_shearer_ratio_unbounded():
    # a measure on the anti-diagonal cannot move under single-site updates
    d = Distribution.from_probs(Space.uniform(2, 2), [0, 0.5, 0.5, 0])
    f = np.array([1.0, 2.0, 0.5, 1.0])
    assert isinstance(exact.shearer_ratio(d, BlockWeights.glauber(2), f), exact.UnboundedWitness)


@given(st.integers(0, 2 ** 20))
def test_product_ratio_at_most_one(seed):
    rng = np.random.default_rng(seed)
    n, q = int(rng.integers(1, 4)), int(rng.integers(2, 4))
    d = random_product(rng, n, q)
    a = BlockWeights.random(n, rng)
    f = rng.exponential(size=d.space.size) ** 3
    assert exact.shearer_ratio(d, a, f) <= 1 + 1e-9


def test_ratio_matches_oracle():
    rng = np.random.default_rng(11)
    d = exact.gibbs_distribution(random_system(rng, 3, 2))
    a = BlockWeights.random(3, rng)
    blocks = [(set(exact.sites_of(m)), w) for m, w in a.entries.items()]
    for _ in range(10):
        f = rng.exponential(size=8)
        assert exact.shearer_ratio(d, a, f) == pytest.approx(oracles.shearer_ratio(as_dict(d), fdict(d, f), blocks),
                                                             rel=1e-10)


# --- best-constant estimation ---------------------------------------------

def test_product_constant_is_one():
    rng = np.random.default_rng(12)
    for _ in range(3):
        d = random_product(rng, 3, 2)
        for _ in range(3):
            c = exact.estimate_best_constant(d, BlockWeights.random(3, rng), budget=20)
            assert abs(c - 1) <= 1e-6


def test_products_never_exceed_one_large_space():
    rng = np.random.default_rng(13)
    d = random_product(rng, 6, 4)  # 4096 states
    for _ in range(3):
        assert exact.estimate_best_constant(d, BlockWeights.random(6, rng), budget=10) <= 1 + 1e-6


def test_zero_interaction_constant():
    sys = model.SpinSystem(3, 2, np.zeros((6, 6)), np.array([0.3, -0.2, 1.0, 0.0, -0.5, 0.5]))
    assert exact.estimate_best_constant(exact.gibbs_distribution(sys), BlockWeights.even_odd(3), budget=30) <= 1 + 1e-6


def _grid_best_ratio(probs, groups, weights, gamma, levels):
    """Max Shearer ratio over f in a product grid on a 4-point space."""
    grid = np.array(np.meshgrid(*[levels] * 4, indexing="ij")).reshape(4, -1).T
    def ent(P, F):
        m = F @ P
        return (F * np.log(F)) @ P - m * np.log(m)
    num = gamma * ent(probs, grid)
    den = 0.0
    for members, w in zip(groups, weights):
        for g in members:
            mass = probs[g].sum()
            den = den + w * mass * ent(probs[g] / mass, grid[:, g])
    ok = den > 1e-12
    return float(np.max(num[ok] / den[ok]))


def test_single_edge_constant_against_grid_and_bound():
    beta = 0.3
    sys = model.psd_shift(model.build_potts(model.complete_graph(2), beta, 2))
    delta = 1 - model.max_eigenvalue(sys.gamma)
    d = exact.gibbs_distribution(sys)
    est = exact.estimate_best_constant(d, BlockWeights.glauber(2), budget=100)
    # configs (1,1),(1,2),(2,1),(2,2); resampling site 0 groups by site 1 and vice versa
    groups = [[np.array([0, 2]), np.array([1, 3])], [np.array([0, 1]), np.array([2, 3])]]
    grid = _grid_best_ratio(d.probs, groups, [0.5, 0.5], 0.5, np.geomspace(1e-4, 1, 40))
    assert est >= grid - 1e-3
    assert est <= 1 / delta + 1e-9
    assert grid <= 1 / delta + 1e-9


def test_search_deterministic_and_monotone():
    d = exact.gibbs_distribution(model.build_curie_weiss(4, 0.7))
    a = BlockWeights.glauber(4)
    w1 = exact.find_shearer_witness(d, a, budget=10, seed=3)
    w2 = exact.find_shearer_witness(d, a, budget=10, seed=3)
    assert w1.value == w2.value and np.array_equal(w1.f, w2.f)
    vals = [exact.estimate_best_constant(d, a, budget=b, seed=3) for b in (0, 10, 40)]
    assert vals[0] <= vals[1] <= vals[2]
    # the returned witness reproduces its value
    assert exact.shearer_ratio(d, a, w1.f) == pytest.approx(w1.value, rel=1e-9)
    assert w1.trajectory_max >= w1.value - 1e-12


def test_search_requires_cover():
    d = exact.uniform_distribution(Space.uniform(2, 2))
    with pytest.raises(ValueError):
        exact.find_shearer_witness(d, BlockWeights(2, {1: 1.0}))


def test_guaranteed_bound_random_psd():
    rng = np.random.default_rng(14)
    for delta in (0.2, 0.5, 0.8):
        for _ in range(3):
            n, q = int(rng.integers(2, 4)), int(rng.integers(2, 4))
            G = exact.random_psd(n * q, 1 - delta, rng)
            assert model.max_eigenvalue(G) == pytest.approx(1 - delta, abs=1e-12)
            d = exact.gibbs_distribution(model.SpinSystem(n, q, G, rng.standard_normal(n * q)))
            bound = 1 / delta if delta >= 1 / n else n * math.exp(1 - delta * n)
            w = exact.find_shearer_witness(d, BlockWeights.random(n, rng), budget=30)
            assert w.trajectory_max <= bound + 1e-9


def test_strong_probe():
    sys = model.build_curie_weiss(3, 0.5)
    w = exact.strong_constant_probe(sys, BlockWeights.glauber(3), budget=10, n_fields=4)
    assert 1.0 <= w.value <= 2.0 + 1e-9
