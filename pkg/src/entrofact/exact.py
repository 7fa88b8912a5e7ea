"""Exact enumeration over small configuration spaces.

Everything here works on dense vectors indexed by configurations of a
:class:`Space`, a product of sites where site ``s`` takes ``colors[s]``
values.  Configurations are enumerated lexicographically with the last site
varying fastest.  Blocks of sites (vertex subsets) are Python int bitmasks.

Entropy conventions: ``Ent f = mu(f log f) - mu(f) log mu(f)`` with
``0 log 0 = 0``.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
from scipy.optimize import minimize
from scipy.special import logsumexp

from .model import SpinSystem, max_eigenvalue

DEFAULT_CAP = 2 ** 20
F_FLOOR = 1e-300
LOG_F_FLOOR = math.log(F_FLOOR)
# witnesses with Ent f below this (at mu(f) = 1) are numerically meaningless
MIN_WITNESS_ENTROPY = 1e-8
N_RESTARTS = 16


class CapExceededError(ValueError):
    pass


class UnboundedWitness(float):
    """Sentinel ratio returned when the factorization side vanishes but Ent f does not."""

    def __new__(cls):
        return super().__new__(cls, math.inf)

    def __repr__(self):
        return "UnboundedWitness()"


@dataclass(frozen=True)
class Space:
    colors: tuple

    def __post_init__(self):
        colors = tuple(int(c) for c in self.colors)
        if not colors or min(colors) < 1:
            raise ValueError(f"invalid site color counts {colors}")
        if len(colors) > 64:
            raise ValueError("at most 64 sites are supported")
        object.__setattr__(self, "colors", colors)

    @classmethod
    def uniform(cls, n: int, q: int) -> "Space":
        return cls((q,) * n)

    @property
    def n(self) -> int:
        return len(self.colors)

    @property
    def dim(self) -> int:
        return sum(self.colors)

    @property
    def size(self) -> int:
        return math.prod(self.colors)

    @property
    def full_mask(self) -> int:
        return (1 << self.n) - 1

    @cached_property
    def offsets(self) -> np.ndarray:
        return np.concatenate([[0], np.cumsum(self.colors)]).astype(int)

    @cached_property
    def strides(self) -> np.ndarray:
        strides = np.ones(self.n, dtype=np.int64)
        for s in range(self.n - 2, -1, -1):
            strides[s] = strides[s + 1] * self.colors[s + 1]
        return strides

    def check_cap(self, cap: int = DEFAULT_CAP):
        if self.size > cap:
            raise CapExceededError(
                f"state space has {self.size} configurations; requires cap >= {self.size} (current cap {cap})")

    @cached_property
    def configs(self) -> np.ndarray:
        """(size, n) array of 1-based spins."""
        self.check_cap()
        grids = itertools.product(*(range(1, c + 1) for c in self.colors))
        return np.array(list(grids), dtype=np.int64).reshape(self.size, self.n)

    @cached_property
    def binary(self) -> np.ndarray:
        """(size, dim) 0/1 indicator encoding of every configuration."""
        B = np.zeros((self.size, self.dim))
        rows = np.arange(self.size)
        for s in range(self.n):
            B[rows, self.offsets[s] + self.configs[:, s] - 1] = 1.0
        return B

    def index(self, spins) -> int:
        spins = np.asarray(spins, dtype=np.int64)
        if spins.shape != (self.n,) or np.any(spins < 1) or np.any(spins > np.array(self.colors)):
            raise ValueError(f"invalid configuration {spins.tolist()} for colors {self.colors}")
        return int(np.dot(spins - 1, self.strides))

    def site_of_coordinate(self) -> np.ndarray:
        return np.repeat(np.arange(self.n), self.colors)

    @cached_property
    def _label_cache(self) -> dict:
        return {}

    def labels(self, mask: int) -> np.ndarray:
        """Group label of every configuration: equal labels <=> agree outside ``mask``."""
        mask = int(mask)
        if mask < 0 or mask > self.full_mask:
            raise ValueError(f"block mask {mask:#x} is not a subset of {self.n} sites")
        cache = self._label_cache
        if mask not in cache:
            outside = [s for s in range(self.n) if not (mask >> s) & 1]
            lab = np.zeros(self.size, dtype=np.int64)
            for s in outside:
                lab += (self.configs[:, s] - 1) * self.strides[s]
            # compress to 0..k-1 so bincount stays small
            _, lab = np.unique(lab, return_inverse=True)
            cache[mask] = lab.ravel()
        return cache[mask]


def mask_of(sites) -> int:
    m = 0
    for s in sites:
        m |= 1 << int(s)
    return m


def sites_of(mask: int) -> list:
    return [s for s in range(int(mask).bit_length()) if (mask >> s) & 1]


@dataclass(frozen=True, eq=False)
class Distribution:
    space: Space
    logw: np.ndarray

    def __post_init__(self):
        logw = np.array(self.logw, dtype=float)
        if logw.shape != (self.space.size,):
            raise ValueError(f"logw must have length {self.space.size}, got {logw.shape}")
        if np.any(np.isnan(logw)) or np.any(logw == np.inf):
            raise ValueError("log-weights must be finite or -inf")
        if not np.any(np.isfinite(logw)):
            raise ValueError("distribution has no support")
        logw.flags.writeable = False
        object.__setattr__(self, "logw", logw)

    @cached_property
    def log_normalizer(self) -> float:
        return float(logsumexp(self.logw))

    @cached_property
    def probs(self) -> np.ndarray:
        p = np.exp(self.logw - self.log_normalizer)
        p /= p.sum()
        p.flags.writeable = False
        return p

    @classmethod
    def from_probs(cls, space: Space, probs) -> "Distribution":
        probs = np.asarray(probs, dtype=float)
        if np.any(probs < 0):
            raise ValueError("probabilities must be nonnegative")
        with np.errstate(divide="ignore"):
            return cls(space, np.log(probs))

    def expect(self, f) -> float:
        return float(np.dot(self.probs, f))


def gibbs_distribution(sys: SpinSystem, cap: int = DEFAULT_CAP) -> Distribution:
    """Exact Gibbs measure, log-weight <eta, Gamma eta> + <h, eta>."""
    space = Space.uniform(sys.n, sys.q)
    space.check_cap(cap)
    B = space.binary
    logw = np.einsum("si,ij,sj->s", B, sys.gamma, B) + B @ sys.fields
    return Distribution(space, logw)


def uniform_distribution(space: Space) -> Distribution:
    return Distribution(space, np.zeros(space.size))


def product_distribution(marginals) -> Distribution:
    """Product of per-site probability vectors."""
    marginals = [np.asarray(m, dtype=float) for m in marginals]
    space = Space(tuple(m.size for m in marginals))
    with np.errstate(divide="ignore"):
        logw = sum(np.log(m / m.sum())[space.configs[:, s] - 1] for s, m in enumerate(marginals))
    return Distribution(space, logw)


def as_test_function(d: Distribution, f) -> np.ndarray:
    f = np.asarray(f, dtype=float)
    if f.shape != (d.space.size,):
        raise ValueError(f"test function must have length {d.space.size}, got {f.shape}")
    if np.any(f < 0) or np.any(np.isnan(f)):
        raise ValueError("test function must be nonnegative")
    return f


def _xlogx(x):
    x = np.asarray(x, dtype=float)
    out = np.zeros_like(x)
    pos = x > 0
    out[pos] = x[pos] * np.log(x[pos])
    return out


def conditional(d: Distribution, block: int, tau) -> Distribution:
    """mu_A^tau: resample ``block`` given tau outside it."""
    space = d.space
    idx = space.index(tau)
    lab = space.labels(block)
    keep = lab == lab[idx]
    if not np.any(d.probs[keep] > 0):
        raise ValueError("conditioning event has zero probability")
    return Distribution(space, np.where(keep, d.logw, -np.inf))


def block_masses(d: Distribution, block: int) -> tuple:
    lab = d.space.labels(block)
    return lab, np.bincount(lab, weights=d.probs)


def conditional_expectation(d: Distribution, block: int, f) -> np.ndarray:
    """The function tau -> mu_A^tau(f), as a vector over configurations."""
    lab, mass = block_masses(d, block)
    num = np.bincount(lab, weights=d.probs * f, minlength=mass.size)
    with np.errstate(invalid="ignore", divide="ignore"):
        ratio = np.where(mass > 0, num / np.where(mass > 0, mass, 1.0), 0.0)
    return ratio[lab]


def entropy(d: Distribution, f) -> float:
    f = as_test_function(d, f)
    m = d.expect(f)
    return max(0.0, float(np.dot(d.probs, _xlogx(f)) - _xlogx(m)))


def avg_conditional_entropy(d: Distribution, block: int, f, check: bool = True) -> float:
    """mu(Ent_A f), computed blockwise and cross-checked against mu(f log(f / mu_A f))."""
    f = as_test_function(d, f)
    lab, mass = block_masses(d, block)
    p = d.probs
    mf = np.bincount(lab, weights=p * f, minlength=mass.size)
    mflogf = np.bincount(lab, weights=p * _xlogx(f), minlength=mass.size)
    safe = np.where(mass > 0, mass, 1.0)
    # mass(tau) * Ent_{mu_A^tau} f summed over groups
    grouped = float(np.sum(mflogf - mass * _xlogx(mf / safe)))
    grouped = max(0.0, grouped)
    if check:
        cond = (mf / safe)[lab]
        pos = (f > 0) & (p > 0)
        direct = float(np.sum(p[pos] * f[pos] * np.log(f[pos] / cond[pos])))
        scale = max(1.0, abs(float(np.dot(p, _xlogx(f)))), d.expect(f))
        if abs(direct - grouped) > 1e-9 * scale:
            raise ArithmeticError(f"conditional entropy formulas disagree: {grouped!r} vs {direct!r}")
    return grouped


def mean_vector(d: Distribution) -> np.ndarray:
    """m(i,a) = d(eta^i_a = 1)."""
    return d.probs @ d.space.binary


def covariance(d: Distribution) -> np.ndarray:
    B = d.space.binary
    p = d.probs
    m = p @ B
    C = B.T @ (p[:, None] * B) - np.outer(m, m)
    return (C + C.T) / 2


def tilt(d: Distribution, v) -> Distribution:
    """T_v d(eta) proportional to d(eta) exp(<v, eta>)."""
    v = np.asarray(v, dtype=float)
    if v.shape != (d.space.dim,) or not np.all(np.isfinite(v)):
        raise ValueError(f"tilt must be a finite vector of length {d.space.dim}")
    return Distribution(d.space, d.logw + d.space.binary @ v)


def influence_matrix(d: Distribution) -> np.ndarray:
    """J(i,a;j,b) = d(eta^j_b=1 | eta^i_a=1) - d(eta^j_b=1) off the diagonal blocks."""
    p = mean_vector(d)
    if np.any(p <= 0):
        raise ValueError("influence matrix needs every single-coordinate event to have positive probability")
    J = covariance(d) / p[:, None]
    site = d.space.site_of_coordinate()
    J[site[:, None] == site[None, :]] = 0.0
    return J


def symmetrized_influence(d: Distribution) -> np.ndarray:
    """D^{1/2} J D^{-1/2}; symmetric and isospectral to the influence matrix."""
    p = mean_vector(d)
    if np.any(p <= 0):
        raise ValueError("influence matrix needs every single-coordinate event to have positive probability")
    s = np.sqrt(p)
    J = covariance(d) / np.outer(s, s)
    site = d.space.site_of_coordinate()
    J[site[:, None] == site[None, :]] = 0.0
    return (J + J.T) / 2


def influence_eigenvalues(d: Distribution) -> np.ndarray:
    """Full (possibly complex-typed) spectrum of the non-symmetric influence matrix."""
    return np.linalg.eigvals(influence_matrix(d))


def spectral_independence(d: Distribution) -> float:
    return max_eigenvalue(symmetrized_influence(d))


# --------------------------------------------------------------------------
# block weights

@dataclass(frozen=True, eq=False)
class BlockWeights:
    n: int
    entries: dict = field(default_factory=dict)

    def __post_init__(self):
        clean = {}
        full = (1 << self.n) - 1
        for mask, w in self.entries.items():
            mask, w = int(mask), float(w)
            if mask < 0 or mask > full:
                raise ValueError(f"block {mask:#x} is not a subset of {self.n} vertices")
            if w < 0 or w > 1 + 1e-12:
                raise ValueError(f"weight {w} outside [0, 1]")
            if w > 0:
                clean[mask] = clean.get(mask, 0.0) + w
        total = sum(clean.values())
        if abs(total - 1) > 1e-12:
            raise ValueError(f"block weights must sum to 1, got {total!r}")
        object.__setattr__(self, "entries", dict(sorted(clean.items())))

    @property
    def masks(self) -> list:
        return list(self.entries)

    @property
    def weights(self) -> np.ndarray:
        return np.array(list(self.entries.values()))

    @classmethod
    def glauber(cls, n: int) -> "BlockWeights":
        return cls(n, {1 << i: 1.0 / n for i in range(n)})

    @classmethod
    def full(cls, n: int) -> "BlockWeights":
        return cls(n, {(1 << n) - 1: 1.0})

    @classmethod
    def even_odd(cls, n: int, even=None) -> "BlockWeights":
        """Half weight on the even sites and half on the odd ones (or on ``even`` and its complement)."""
        even = range(0, n, 2) if even is None else even
        e = mask_of(even)
        o = ((1 << n) - 1) & ~e
        if n == 1:
            return cls.full(1)
        return cls(n, {e: 0.5, o: 0.5})

    @classmethod
    def from_blocks(cls, n: int, blocks) -> "BlockWeights":
        """``blocks`` is an iterable of (vertex iterable, weight) pairs."""
        entries = {}
        for sites, w in blocks:
            m = mask_of(sites)
            entries[m] = entries.get(m, 0.0) + w
        return cls(n, entries)

    @classmethod
    def random(cls, n: int, rng: np.random.Generator, max_blocks: int | None = None) -> "BlockWeights":
        """Random weights on random nonempty blocks, covering every vertex."""
        k = int(rng.integers(1, (max_blocks or 2 * n) + 1))
        masks = set(int(m) for m in rng.integers(1, 1 << n, size=k))
        covered = 0
        for m in masks:
            covered |= m
        if covered != (1 << n) - 1:
            masks.add(((1 << n) - 1) & ~covered)
        masks = sorted(masks)
        w = rng.dirichlet(np.ones(len(masks)))
        w[-1] = 1.0 - w[:-1].sum()
        return cls(n, dict(zip(masks, w)))

    def to_json(self) -> dict:
        return {"n": self.n, "blocks": [[sites_of(m), w] for m, w in self.entries.items()]}

    @classmethod
    def from_json(cls, doc) -> "BlockWeights":
        return cls.from_blocks(int(doc["n"]), doc["blocks"])


def min_cover(alpha: BlockWeights, n: int | None = None) -> float:
    """gamma(alpha) = min_i sum_{A containing i} alpha_A."""
    n = alpha.n if n is None else n
    cover = np.zeros(n)
    for mask, w in alpha.entries.items():
        for s in sites_of(mask):
            if s < n:
                cover[s] += w
    return float(cover.min())


def factorization_sum(d: Distribution, alpha: BlockWeights, f) -> float:
    return float(sum(w * avg_conditional_entropy(d, m, f) for m, w in alpha.entries.items()))


def shearer_ratio(d: Distribution, alpha: BlockWeights, f) -> float:
    """gamma(alpha) Ent f / sum_A alpha_A mu(Ent_A f).

    Returns :class:`UnboundedWitness` when the denominator vanishes and the
    numerator does not; raises ValueError on 0/0.
    """
    f = as_test_function(d, f)
    m = d.expect(f)
    if m <= 0:
        raise ValueError("test function has zero mean")
    f = f / m
    num = min_cover(alpha, d.space.n) * entropy(d, f)
    den = factorization_sum(d, alpha, f)
    tiny = 1e-15
    if den <= tiny:
        if num <= tiny:
            raise ValueError("0/0 ratio: test function carries no entropy")
        return UnboundedWitness()
    return num / den


# --------------------------------------------------------------------------
# witness search

@dataclass
class Witness:
    """Best test function found by a witness search and the value it certifies."""
    value: float
    f: np.ndarray
    source: str
    evaluations: int = 0
    trajectory_max: float = -math.inf


class _LogObjective:
    """Smooth objective log(numerator(f) / denominator(f)) in the variable g = log f."""

    def __init__(self, d: Distribution, terms):
        self.d = d
        self.p = d.probs
        self.terms = terms
        self.best = -math.inf
        self.best_g = None
        self.evaluations = 0

    def normalized(self, g):
        g = np.clip(g, LOG_F_FLOOR, None)
        g = g - g.max()
        f = np.exp(g)
        f[self.p == 0] = 0.0
        m = float(np.dot(self.p, f))
        return g - math.log(m), f / m

    def value_and_grad(self, g):
        g, f = self.normalized(g)
        num, dnum, den, dden, ent = self.terms(g, f)
        self.evaluations += 1
        if ent < MIN_WITNESS_ENTROPY or num <= 0 or den <= 0:
            return 0.0, np.zeros_like(g)
        ratio = num / den
        if ratio > self.best:
            self.best, self.best_g = ratio, g.copy()
        grad = dnum / num - dden / den
        return -math.log(ratio), -grad


def _shearer_terms(d: Distribution, alpha: BlockWeights):
    p = d.probs
    gamma = min_cover(alpha, d.space.n)
    groups = [(w, d.space.labels(m)) for m, w in alpha.entries.items()]
    masses = [np.bincount(lab, weights=p) for _, lab in groups]

    def terms(g, f):
        # mu(f) = 1 here
        pf = p * f
        ent = float(np.dot(pf, g))
        dent = pf * g
        den = 0.0
        dden = np.zeros_like(g)
        for (w, lab), mass in zip(groups, masses):
            mf = np.bincount(lab, weights=pf, minlength=mass.size)
            safe = np.where(mass > 0, mass, 1.0)
            cond = mf / safe
            logc = np.log(np.where(cond > 0, cond, 1.0))
            den += w * (ent - float(np.dot(mf, logc)))
            dden += w * pf * (g - logc[lab])
        return gamma * ent, gamma * dent, den, dden, ent

    return terms


def _site_functions(space: Space, rng: np.random.Generator, per_site: int = 3):
    """Test functions depending on a single site: color indicators plus random ones."""
    out = []
    for s in range(space.n):
        col = space.configs[:, s] - 1
        for a in range(space.colors[s]):
            out.append(("site-indicator", (col == a).astype(float)))
        for _ in range(per_site):
            out.append(("site-random", np.exp(2.0 * rng.standard_normal(space.colors[s]))[col]))
    return out


def _tilt_functions(space: Space, rng: np.random.Generator, budget: int):
    B = space.binary
    scales = np.array([0.3, 1.0, 3.0])
    for _ in range(budget):
        v = rng.choice(scales) * rng.standard_normal(space.dim)
        yield ("tilt", np.exp(B @ v - (B @ v).max()))


def _indicator_shearer_ratios(d: Distribution, alpha: BlockWeights) -> np.ndarray:
    """Shearer ratio of every single-configuration indicator, in closed form."""
    p = d.probs
    support = p > 0
    logp = np.log(np.where(support, p, 1.0))
    gamma = min_cover(alpha, d.space.n)
    den = np.zeros_like(p)
    for m, w in alpha.entries.items():
        lab, mass = block_masses(d, m)
        den += w * (np.log(np.where(mass > 0, mass, 1.0))[lab] - logp)
    num = -gamma * logp
    ok = support & (-logp >= MIN_WITNESS_ENTROPY)
    ratios = np.full_like(p, -np.inf)
    pos = ok & (den > 1e-15)
    ratios[pos] = num[pos] / den[pos]
    ratios[ok & (den <= 1e-15)] = np.inf
    return ratios


def _ascent(obj: _LogObjective, starts, maxiter: int):
    bounds = [(LOG_F_FLOOR, 0.0)] * obj.p.size
    for g0 in starts:
        g0 = np.clip(g0 - g0.max(), LOG_F_FLOOR, 0.0)
        minimize(obj.value_and_grad, g0, jac=True, method="L-BFGS-B", bounds=bounds,
                 options={"maxiter": maxiter})


def _search(d, terms, score, indicator_scores, budget, seed, maxiter, source_tag, extra=()):
    """Generic witness maximizer shared by Shearer-constant and contraction searches."""
    best = Witness(-math.inf, np.ones(d.space.size), "none")
    evaluations = 0

    def offer(value, f, source):
        nonlocal best
        if value > best.value:
            best = Witness(value, f.copy(), source)

    if indicator_scores is not None:
        scores = indicator_scores
        evaluations += scores.size
        if np.any(np.isfinite(scores) | (scores == np.inf)):
            k = int(np.argmax(scores))
            if scores[k] > -np.inf:
                e = np.zeros(d.space.size)
                e[k] = 1.0
                offer(float(scores[k]), e, "indicator")

    site_rng = np.random.default_rng([seed, 0])
    tilt_rng = np.random.default_rng([seed, 1])
    start_rng = np.random.default_rng([seed, 2])
    pool = []
    families = itertools.chain(extra, _site_functions(d.space, site_rng), _tilt_functions(d.space, tilt_rng, budget))
    for source, f in families:
        evaluations += 1
        val = score(f)
        if val is None:
            continue
        offer(val, f, source)
        if source != "tilt":
            pool.append((val, source, f))

    # restarts: the best budget-independent witnesses, then random log-functions.
    # Tilts never seed the ascent, so a larger budget only adds candidates.
    pool.sort(key=lambda t: -t[0])
    starts = []
    for _, _, f in pool[: N_RESTARTS // 2]:
        starts.append(np.log(np.maximum(f, F_FLOOR)))
    while len(starts) < N_RESTARTS:
        starts.append(start_rng.choice([0.5, 2.0, 5.0]) * start_rng.standard_normal(d.space.size))
    obj = _LogObjective(d, terms)
    _ascent(obj, starts, maxiter)
    evaluations += obj.evaluations
    if obj.best_g is not None:
        f = np.exp(obj.best_g)
        f[d.probs == 0] = 0.0
        val = score(f)
        if val is not None:
            offer(val, f, source_tag)
    best.evaluations = evaluations
    best.trajectory_max = obj.best
    return best


def find_shearer_witness(d: Distribution, alpha: BlockWeights, budget: int = 200, seed: int = 0,
                         maxiter: int = 200) -> Witness:
    """Search for a test function with large Shearer ratio; see :func:`estimate_best_constant`."""
    if min_cover(alpha, d.space.n) <= 0:
        raise ValueError("alpha must cover every vertex (gamma(alpha) > 0)")

    def score(f):
        f = f / d.expect(f)
        if entropy(d, f) < MIN_WITNESS_ENTROPY:
            return None
        return shearer_ratio(d, alpha, f)

    return _search(d, _shearer_terms(d, alpha), score, _indicator_shearer_ratios(d, alpha),
                   budget, seed, maxiter, "ascent")


def estimate_best_constant(d: Distribution, alpha: BlockWeights, budget: int = 200, seed: int = 0) -> float:
    """Certified lower bound on the best alpha-entropy factorization constant.

    The value is the largest Shearer ratio among single-configuration
    indicators, single-site functions, ``budget`` random exponential tilts and
    the whole trajectories of 16 projected-gradient ascents on log f.
    """
    return find_shearer_witness(d, alpha, budget, seed).value


def random_psd(dim: int, top: float, rng: np.random.Generator, rank: int | None = None) -> np.ndarray:
    """Random PSD matrix with largest eigenvalue exactly ``top``."""
    W = rng.standard_normal((dim, rank or dim))
    G = W @ W.T
    G = (G + G.T) / 2
    lam = np.linalg.eigvalsh(G)[-1]
    G = G * (top / lam)
    return (G + G.T) / 2


def strong_constant_probe(sys: SpinSystem, alpha: BlockWeights, budget: int = 50, seed: int = 0,
                          n_fields: int = 32, field_scale: float = 1.0) -> Witness:
    """Largest witnessed constant over ``n_fields`` random self-potential vectors (plus h = sys.fields)."""
    rng = np.random.default_rng([seed, 7])
    best = None
    for k in range(n_fields + 1):
        h = sys.fields if k == 0 else sys.fields + field_scale * rng.standard_normal(sys.dim)
        w = find_shearer_witness(gibbs_distribution(sys.with_fields(h)), alpha, budget, seed + k)
        if best is None or w.value > best.value:
            best = w
    return best
