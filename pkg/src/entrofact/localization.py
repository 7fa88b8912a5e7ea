"""Stochastic localization for binary-encoded spin systems.

The process is integrated on the tilt y_t only:

    dy_t = (2 Gamma)^{1/2} dB_t + 2 Gamma m(rho_t) dt,

and the random measure is rebuilt exactly from (t, y_t):

    rho_t(eta) ~ exp((1 - t) <eta, Gamma eta> + <y_t + h, eta>) * base(eta).

For a :class:`~entrofact.model.SpinSystem` the base weight is the indicator
of valid one-hot blocks; for a component system it is the product of the
component laws.  At t = 1 the quadratic term vanishes and rho_1 is a product
over blocks.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, replace

import numpy as np

from . import exact
from .exact import BlockWeights, Distribution, Space
from .model import SpinSystem, from_binary, max_eigenvalue
from .reports import PASS, CheckReport, margin_verdict, sigma_verdict, worst

PSD_TOL = 1e-10
DEFAULT_DT = 1e-3
DEFAULT_PATHS = 10_000
DEFAULT_ALLOWANCE = 10.0
_CHUNK_ELEMENTS = 4_000_000


def psd_sqrt(m) -> np.ndarray:
    """Symmetric square root of a PSD matrix; eigenvalues in [-1e-10, 0) are clipped."""
    m = np.asarray(m, dtype=float)
    ev, vecs = np.linalg.eigh((m + m.T) / 2)
    if ev.size and ev[0] < -PSD_TOL:
        raise ValueError(f"matrix is not positive semidefinite (eigenvalue {ev[0]:.3e})")
    root = (vecs * np.sqrt(np.clip(ev, 0, None))) @ vecs.T
    return (root + root.T) / 2


class Target:
    """Precomputed pieces of rho_t for a spin or component system."""

    def __init__(self, base):
        self.base = base
        if isinstance(base, SpinSystem):
            self.space = Space.uniform(base.n, base.q)
            self.base_logw = np.zeros(self.space.size)
        else:
            self.space = base.space
            self.base_logw = np.asarray(base.base_logw, dtype=float)
        self.gamma = np.asarray(base.gamma, dtype=float)
        self.fields = np.asarray(base.fields, dtype=float)
        B = self.space.binary
        self.B = B
        self.quad = np.einsum("si,ij,sj->s", B, self.gamma, B)
        self.static = self.base_logw + B @ self.fields

    @property
    def dim(self) -> int:
        return self.space.dim

    def logits(self, t: float, Y) -> np.ndarray:
        """Unnormalized log rho_t for tilts Y of shape (dim,) or (paths, dim)."""
        return self.static + (1.0 - t) * self.quad + np.asarray(Y) @ self.B.T

    def probs(self, t: float, Y) -> np.ndarray:
        L = self.logits(t, Y)
        L = L - L.max(axis=-1, keepdims=True)
        P = np.exp(L)
        return P / P.sum(axis=-1, keepdims=True)

    def distribution(self, t: float, y) -> Distribution:
        return Distribution(self.space, self.logits(t, y))


@dataclass(frozen=True, eq=False)
class LocalizationState:
    t: float
    y: np.ndarray
    base: object
    sqrt2gamma: np.ndarray
    rng: np.random.Generator
    target: Target

    @classmethod
    def start(cls, base, seed: int, path: int = 0) -> "LocalizationState":
        """Initial state with the per-path Gaussian stream derived from (seed, path)."""
        target = Target(base)
        return cls(0.0, np.zeros(target.dim), base, psd_sqrt(2 * target.gamma),
                   np.random.default_rng([seed, path]), target)


def rho_t(state: LocalizationState) -> Distribution:
    if not -1e-12 <= state.t <= 1 + 1e-12:
        raise ValueError(f"t must lie in [0, 1], got {state.t}")
    return state.target.distribution(min(max(state.t, 0.0), 1.0), state.y)


mean_vector = exact.mean_vector


def step(state: LocalizationState, dt: float) -> LocalizationState:
    """One Euler-Maruyama step of the tilt process."""
    if dt <= 0:
        raise ValueError(f"dt must be positive, got {dt}")
    if state.t + dt > 1 + 1e-12:
        raise ValueError(f"step would move past t = 1 (t={state.t}, dt={dt})")
    g = state.rng.standard_normal(state.target.dim)
    m = state.target.probs(state.t, state.y) @ state.target.B
    two_gamma = 2 * state.target.gamma
    y = state.y + math.sqrt(dt) * (state.sqrt2gamma @ g) + dt * (two_gamma @ m)
    return replace(state, t=state.t + dt, y=y)


@dataclass
class Paths:
    """Tilts y_t recorded at ``times`` for many independent paths."""
    target: Target
    times: np.ndarray
    ys: np.ndarray  # (len(times), paths, dim)
    dt: float
    seed: int

    @property
    def n_paths(self) -> int:
        return self.ys.shape[1]

    def index_of(self, t: float) -> int:
        k = int(np.argmin(np.abs(self.times - t)))
        if abs(self.times[k] - t) > 1e-9:
            raise ValueError(f"time {t} was not recorded (have {self.times.tolist()})")
        return k

    def probs(self, t: float) -> np.ndarray:
        """(paths, size) array of rho_t for every path."""
        k = self.index_of(t)
        return self.target.probs(float(self.times[k]), self.ys[k])

    def rho(self, t: float, path: int) -> Distribution:
        k = self.index_of(t)
        return self.target.distribution(float(self.times[k]), self.ys[k, path])


def _grid(T: float, dt: float):
    steps = max(1, int(round(T / dt)))
    if abs(steps * dt - T) > 1e-9 * max(1.0, T):
        raise ValueError(f"T={T} is not a multiple of dt={dt}")
    return steps, T / steps


def simulate(base, T: float = 1.0, dt: float = DEFAULT_DT, paths: int = DEFAULT_PATHS, seed: int = 0,
             record=None) -> Paths:
    """Run ``paths`` independent localization paths up to time T.

    Path p draws its Gaussian increments from ``default_rng([seed, p])``, so
    every path is reproducible on its own and independent of batching.
    ``record`` lists the times to keep (default: 0 and T); they must lie on
    the dt grid.
    """
    if paths < 1:
        raise ValueError("need at least one path")
    if not 0 < T <= 1 + 1e-12:
        raise ValueError(f"T must lie in (0, 1], got {T}")
    target = base if isinstance(base, Target) else Target(base)
    steps, h = _grid(T, dt)
    times = np.array(sorted({0.0, T} if record is None else set(float(t) for t in record)))
    rec_steps = np.rint(times / h).astype(int)
    if np.any(np.abs(rec_steps * h - times) > 1e-9) or rec_steps.max() > steps or rec_steps.min() < 0:
        raise ValueError(f"record times {times.tolist()} are not on the dt grid up to T={T}")
    times = rec_steps * h
    if rec_steps.max() == steps:
        times[rec_steps == steps] = T
    dim = target.dim
    root = psd_sqrt(2 * target.gamma)
    drift = 2 * target.gamma
    out = np.zeros((len(times), paths, dim))
    chunk = max(1, _CHUNK_ELEMENTS // (steps * dim))
    sq = math.sqrt(h)
    for p0 in range(0, paths, chunk):
        p1 = min(paths, p0 + chunk)
        noise = np.stack([np.random.default_rng([seed, p]).standard_normal((steps, dim)) for p in range(p0, p1)])
        Y = np.zeros((p1 - p0, dim))
        for k in range(steps + 1):
            hits = np.flatnonzero(rec_steps == k)
            if hits.size:
                out[hits, p0:p1] = Y
            if k == steps:
                break
            m = target.probs(k * h, Y) @ target.B
            Y = Y + sq * noise[:, k] @ root.T + h * m @ drift.T
    return Paths(target, times, out, h, seed)


def kappa_bound(delta: float, t: float, n: int, c1: float | None = None) -> float:
    """min{1 / (2(1 - (1 - delta)(1 - t))), n/2}, optionally also capped at c1*sqrt(n)."""
    if not 0 <= delta < 1 + 1e-15:
        raise ValueError(f"delta must lie in [0, 1), got {delta}")
    if not 0 <= t <= 1:
        raise ValueError(f"t must lie in [0, 1], got {t}")
    denom = 1 - (1 - delta) * (1 - t)
    first = math.inf if denom <= 0 else 1 / (2 * denom)
    cap = n / 2 if c1 is None else min(n / 2, c1 * math.sqrt(n))
    return min(first, cap)


def c_delta(delta: float, n: int) -> float:
    """Entropy-stability constant: delta if delta >= 1/n, else 1 / (n e^{1 - delta n})."""
    if delta >= 1 / n:
        return delta
    return 1 / (n * math.exp(1 - delta * n))


def shearer_constant(delta: float, n: int) -> float:
    """Shearer constant 1/c_delta: 1/delta for delta >= 1/n, n e^{1 - delta n} otherwise."""
    return 1 / c_delta(delta, n)


def _check_hypothesis(base, delta: float) -> float:
    lam = max_eigenvalue(base.gamma)
    lo = float(np.linalg.eigvalsh(np.asarray(base.gamma))[0])
    if lo < -PSD_TOL:
        raise ValueError(f"Gamma is not positive semidefinite (min eigenvalue {lo:.3e})")
    if lam > 1 - delta + 1e-12:
        raise ValueError(f"eigenvalue hypothesis violated: lambda(Gamma) = {lam:.6g} > 1 - delta = {1 - delta:.6g}")
    return lam


def system_delta(base) -> float:
    """delta = 1 - lambda(Gamma), clipped to [0, 1]."""
    return float(min(1.0, max(0.0, 1.0 - max_eigenvalue(base.gamma))))


@dataclass
class PathEstimate:
    """Per-path terminal summaries with their Monte Carlo mean and standard error."""
    paths: int
    dt: float
    values: np.ndarray
    mean: float
    stderr: float

    def __post_init__(self):
        if self.paths < 1 or self.dt <= 0:
            raise ValueError("need paths >= 1 and dt > 0")

    @classmethod
    def of(cls, values, dt: float) -> "PathEstimate":
        values = np.asarray(values, dtype=float)
        mean, se = _mc(values)
        return cls(values.size, dt, values, mean, se)


def terminal_estimate(sim: Paths, summary, t: float | None = None) -> PathEstimate:
    """PathEstimate of ``summary(probs_row)`` over paths at time t (default: last recorded)."""
    t = float(sim.times[-1]) if t is None else t
    P = sim.probs(t)
    return PathEstimate.of([summary(row) for row in P], sim.dt)


def _mc(values):
    values = np.asarray(values, dtype=float)
    se = float(values.std(ddof=1) / math.sqrt(values.size)) if values.size > 1 else 0.0
    return float(values.mean()), se


@dataclass
class MartingaleResult:
    bias: float
    stderr: float
    allowance: float
    allowance_constant: float
    verdict: str
    normalization_error: float

    def __iter__(self):
        return iter((self.bias, self.stderr))


def _config_index(space: Space, eta, q: int) -> int:
    eta = np.asarray(eta)
    if eta.size == space.dim:
        return space.index(from_binary(eta, q))
    return space.index(eta)


def martingale_check(sys, eta, T: float = 1.0, dt: float = DEFAULT_DT, paths: int = DEFAULT_PATHS,
                     seed: int = 0, allowance_constant: float = DEFAULT_ALLOWANCE,
                     sim: Paths | None = None) -> MartingaleResult:
    """E[rho_T(eta)] - rho_0(eta) with a three-sigma plus c*dt verdict."""
    sim = sim or simulate(sys, T, dt, paths, seed)
    x = _config_index(sim.target.space, eta, getattr(sys, "q", 2))
    PT = sim.probs(T)
    p0 = sim.probs(0.0)[0, x]
    mean, se = _mc(PT[:, x])
    bias = float(mean - p0)
    allowance = allowance_constant * sim.dt
    norm_err = float(np.max(np.abs(PT.sum(axis=1) - 1)))
    return MartingaleResult(bias, se, allowance, allowance_constant,
                            sigma_verdict(abs(bias) - allowance, se), norm_err)


def off_block_covariance(d: Distribution) -> float:
    """Largest |Cov(i,a; j,b)| over coordinates in different blocks."""
    C = exact.covariance(d)
    site = d.space.site_of_coordinate()
    C[site[:, None] == site[None, :]] = 0.0
    return float(np.max(np.abs(C))) if C.size else 0.0


def batch_off_block_covariance(target: Target, P) -> np.ndarray:
    """off_block_covariance for every row of a (paths, size) probability array."""
    B = target.B
    site = target.space.site_of_coordinate()
    off = site[:, None] != site[None, :]
    M = P @ B
    out = np.empty(P.shape[0])
    for r in range(P.shape[0]):
        C = B.T @ (P[r][:, None] * B) - np.outer(M[r], M[r])
        out[r] = np.max(np.abs(C[off])) if off.any() else 0.0
    return out


def covariance_bound_check(sys, delta: float, t_grid=(0.0, 0.25, 0.5, 0.75, 1.0), v_samples: int = 50,
                           seed: int = 0, y_paths: int = 4, dt: float = 0.05, c1: float | None = None,
                           tol: float = 1e-9) -> CheckReport:
    """lambda(Cov[T_v rho_t]) <= kappa(t) over t_grid, random v and simulated y_t."""
    lam = _check_hypothesis(sys, delta)
    target = Target(sys)
    n = target.space.n
    grid = sorted(float(t) for t in t_grid)
    sim_times = [t for t in grid if t > 0]
    ys = {0.0: np.zeros((1, target.dim))}
    if sim_times and y_paths > 0:
        sim = simulate(target, max(sim_times), dt, y_paths, seed, record=[0.0] + sim_times)
        for t in sim_times:
            ys[t] = sim.ys[sim.index_of(t)]
    rng = np.random.default_rng([seed, 11])
    scales = np.array([0.1, 1.0, 3.0, 10.0])
    records = []
    worst_margin = math.inf
    for t in grid:
        bound = kappa_bound(delta, t, n, c1)
        Y = ys.get(t, np.zeros((1, target.dim)))
        lam_max = -math.inf
        for j in range(v_samples):
            v = rng.choice(scales) * rng.standard_normal(target.dim) if j else np.zeros(target.dim)
            for y in Y:
                d = target.distribution(t, y + v)
                lam_max = max(lam_max, max_eigenvalue(exact.covariance(d)))
        margin = bound - lam_max
        worst_margin = min(worst_margin, margin)
        records.append({"t": t, "kappa": bound, "max_lambda_cov": lam_max, "margin": margin})
    return CheckReport("covariance-bound", margin_verdict(worst_margin, tol), worst_margin, records,
                       {"lambda_gamma": lam, "delta": delta, "n": n})


def max_tilted_covariance(sys, v_samples: int = 50, seed: int = 0, t: float = 0.0) -> float:
    """max over v (including v = 0) of lambda(Cov[T_v rho_t]) at y = 0."""
    target = Target(sys)
    rng = np.random.default_rng([seed, 12])
    best = max_eigenvalue(exact.covariance(target.distribution(t, np.zeros(target.dim))))
    for _ in range(v_samples):
        v = rng.choice([0.05, 0.2, 1.0]) * rng.standard_normal(target.dim)
        best = max(best, max_eigenvalue(exact.covariance(target.distribution(t, v))))
    return best


def fit_sqrt_constant(ns, lambdas) -> dict:
    """Fit lambda ~ c1 sqrt(n); also report the free log-log slope."""
    ns = np.asarray(ns, dtype=float)
    lambdas = np.asarray(lambdas, dtype=float)
    c1 = float(np.max(lambdas / np.sqrt(ns)))
    slope, intercept = np.polyfit(np.log(ns), np.log(lambdas), 1)
    return {"c1": c1, "slope": float(slope), "intercept": float(intercept)}


@dataclass
class StabilityResult:
    lhs: float
    rhs: float
    stderr: float
    allowance: float
    verdict: str

    def __iter__(self):
        return iter((self.lhs, self.rhs))


def _batch_entropy(P, f) -> np.ndarray:
    """Ent_{rho} f for every row rho of P."""
    m = P @ f
    return np.maximum(0.0, P @ exact._xlogx(f) - exact._xlogx(m))


def entropic_stability_check(sys, delta: float, f, dt: float = DEFAULT_DT, paths: int = DEFAULT_PATHS,
                             seed: int = 0, allowance_constant: float = DEFAULT_ALLOWANCE,
                             sim: Paths | None = None):
    """E[Ent_{rho_1} f] >= c_delta Ent_rho f.  ``f`` may be one function or a stack of them."""
    _check_hypothesis(sys, delta)
    sim = sim or simulate(sys, 1.0, dt, paths, seed)
    F = np.atleast_2d(np.asarray(f, dtype=float))
    if np.any(F < 0):
        raise ValueError("test functions must be nonnegative")
    n = sim.target.space.n
    c = c_delta(delta, n)
    P1 = sim.probs(1.0)
    p0 = sim.probs(0.0)[0]
    allowance = allowance_constant * sim.dt
    out = []
    for row in F:
        lhs, se = _mc(_batch_entropy(P1, row))
        rhs = c * float(_batch_entropy(p0[None, :], row)[0])
        out.append(StabilityResult(lhs, rhs, se, allowance, sigma_verdict(rhs - lhs - allowance, se)))
    return out[0] if np.ndim(f) == 1 else out


def _group_matrix(space: Space, block: int) -> np.ndarray:
    lab = space.labels(block)
    G = np.zeros((space.size, lab.max() + 1))
    G[np.arange(space.size), lab] = 1.0
    return G


def conditional_entropy_functional(P, f, G) -> np.ndarray:
    """sum_eta rho(eta) Q_A f(eta) log Q_A f(eta) for every row rho of P."""
    mf = (P * f) @ G
    mass = P @ G
    with np.errstate(divide="ignore", invalid="ignore"):
        terms = np.where(mf > 0, mf * np.log(np.where(mf > 0, mf, 1.0) / np.where(mass > 0, mass, 1.0)), 0.0)
    return terms.sum(axis=1)


def submartingale_check(sys, alpha: BlockWeights | None, f, block: int | None = None,
                        t_grid=(0.25, 0.5, 1.0), dt: float = DEFAULT_DT, paths: int = DEFAULT_PATHS,
                        seed: int = 0, allowance_constant: float = DEFAULT_ALLOWANCE,
                        sim: Paths | None = None) -> CheckReport:
    """E[sum rho_t Q_{t,A} f log Q_{t,A} f] >= its t = 0 value.

    Checks ``block`` if given, every block of ``alpha`` otherwise, plus the
    alpha-weighted sum when ``alpha`` is given.
    """
    if alpha is None and block is None:
        raise ValueError("give alpha, block, or both")
    grid = sorted(set(float(t) for t in t_grid) | {0.0})
    sim = sim or simulate(sys, max(grid), dt, paths, seed, record=grid)
    f = np.asarray(f, dtype=float)
    space = sim.target.space
    blocks = [block] if block is not None else list(alpha.entries)
    weights = alpha.entries if alpha is not None else {}
    allowance = allowance_constant * sim.dt
    records, verdicts = [], []
    worst_margin = math.inf
    groups = {b: _group_matrix(space, b) for b in set(blocks) | set(weights)}
    for t in grid:
        P = sim.probs(t)
        p0 = sim.probs(0.0)[:1]
        per_block = {b: conditional_entropy_functional(P, f, groups[b]) for b in groups}
        base = {b: float(conditional_entropy_functional(p0, f, groups[b])[0]) for b in groups}
        targets = [(f"block {exact.sites_of(b)}", per_block[b], base[b]) for b in blocks]
        if weights:
            targets.append(("alpha-weighted", sum(w * per_block[b] for b, w in weights.items()),
                            sum(w * base[b] for b, w in weights.items())))
        for label, vals, ref in targets:
            mean, se = _mc(vals)
            margin = mean - ref
            v = PASS if t == 0 else sigma_verdict(-margin - allowance, se)
            verdicts.append(v)
            worst_margin = min(worst_margin, margin + 3 * se + allowance)
            records.append({"t": t, "target": label, "mean": mean, "t0_value": ref, "stderr": se,
                            "margin": margin, "verdict": v})
    return CheckReport("submartingale", worst(verdicts), worst_margin, records,
                       {"dt": sim.dt, "paths": sim.n_paths, "allowance": allowance})


def write_trajectories(sim: Paths, path, summaries=None) -> None:
    """CSV dump: one row per (path, recorded time) with the tilt vector and optional summaries.

    ``summaries`` maps a column name to a function (t, probs_row) -> float.
    """
    summaries = summaries or {}
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["path", "t"] + [f"y{k}" for k in range(sim.target.dim)] + list(summaries))
        for k, t in enumerate(sim.times):
            P = sim.target.probs(float(t), sim.ys[k])
            for p in range(sim.n_paths):
                extra = [format(fn(float(t), P[p]), ".17g") for fn in summaries.values()]
                w.writerow([p, format(float(t), ".17g")] + [format(v, ".17g") for v in sim.ys[k, p]] + extra)
