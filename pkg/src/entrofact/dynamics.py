"""Block dynamics (alpha-Gibbs samplers) on small state spaces.

Kernels are dense ``size x size`` matrices.  P_alpha = sum_A alpha_A mu_A is a
mixture of conditional-resampling projections and is reversible with respect
to mu.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from . import exact
from .exact import BlockWeights, Distribution, MIN_WITNESS_ENTROPY, Witness

ROW_TOL = 1e-12
BALANCE_TOL = 1e-10


@dataclass(frozen=True, eq=False)
class Kernel:
    matrix: np.ndarray
    stationary: Distribution

    def __post_init__(self):
        P = np.array(self.matrix, dtype=float)
        n = self.stationary.space.size
        if P.shape != (n, n):
            raise ValueError(f"kernel must be {n}x{n}, got {P.shape}")
        P.flags.writeable = False
        object.__setattr__(self, "matrix", P)

    def apply(self, f) -> np.ndarray:
        """(P f)(x) = sum_y P(x, y) f(y)."""
        return self.matrix @ f

    def step_distribution(self, nu) -> np.ndarray:
        return nu @ self.matrix

    def row_error(self) -> float:
        return float(np.max(np.abs(self.matrix.sum(axis=1) - 1)))

    def balance_error(self) -> float:
        flow = self.stationary.probs[:, None] * self.matrix
        return float(np.max(np.abs(flow - flow.T)))

    def is_reversible(self, tol: float = BALANCE_TOL) -> bool:
        return self.balance_error() <= tol


def projection_matrix(d: Distribution, block: int) -> np.ndarray:
    """mu_A as a matrix: row sigma is the conditional law mu_A^sigma."""
    lab, mass = exact.block_masses(d, block)
    same = lab[:, None] == lab[None, :]
    safe = np.where(mass > 0, mass, 1.0)
    return same * (d.probs / safe[lab])[None, :]


def block_kernel(d: Distribution, alpha: BlockWeights) -> Kernel:
    if abs(sum(alpha.entries.values()) - 1) > 1e-12:
        raise ValueError("alpha is not normalized")
    if alpha.n != d.space.n:
        raise ValueError(f"alpha is over {alpha.n} vertices, distribution over {d.space.n}")
    if exact.min_cover(alpha) <= 0:
        warnings.warn("gamma(alpha) = 0: the block dynamics is not irreducible", RuntimeWarning, stacklevel=2)
    size = d.space.size
    P = np.zeros((size, size))
    for mask, w in alpha.entries.items():
        P += w * projection_matrix(d, mask)
    # rows of states outside the support: stay put
    dead = d.probs == 0
    if np.any(dead):
        P[dead] = 0.0
        P[dead, dead] = 1.0
    return Kernel(P, d)


def half_step_check(d: Distribution, alpha: BlockWeights, f) -> tuple:
    """Both sides of H(nu K_alpha | mu K_alpha) = sum_A alpha_A Ent(mu_A f) for nu = f mu.

    The left side pushes nu through each conditional-resampling kernel and
    compares with the closed form mu K_alpha(A, eta) = alpha_A mu(eta).  Both
    sides are scaled by mu(f) so they are homogeneous of degree one in f.
    """
    f = exact.as_test_function(d, f)
    m = d.expect(f)
    if m <= 0:
        raise ValueError("test function has zero mean")
    p = d.probs
    nu = p * f / m
    lhs = 0.0
    rhs = 0.0
    for mask, w in alpha.entries.items():
        lab, mass = exact.block_masses(d, mask)
        nu_mass = np.bincount(lab, weights=nu, minlength=mass.size)
        safe = np.where(mass > 0, mass, 1.0)
        pushed = w * p * (nu_mass / safe)[lab]
        ref = w * p
        pos = pushed > 0
        lhs += float(np.sum(pushed[pos] * np.log(pushed[pos] / ref[pos])))
        rhs += w * exact.entropy(d, exact.conditional_expectation(d, mask, f))
    return m * lhs, rhs


def _contraction_terms(k: Kernel):
    P = k.matrix
    p = k.stationary.probs

    def terms(g, f):
        # mu(f) = 1, so mu(P f) = 1 too
        pf = p * f
        ent = float(np.dot(pf, g))
        Pf = P @ f
        logPf = np.log(np.where(Pf > 0, Pf, 1.0))
        entP = float(np.dot(p * Pf, logPf))
        dentP = p * (P @ logPf) * f
        return entP, dentP, ent, pf * g, ent

    return terms


def _indicator_contraction_ratios(k: Kernel) -> np.ndarray:
    """Ent(P 1_x) / Ent(1_x) for every state x at once."""
    p = k.stationary.probs
    P = k.matrix
    ratios = np.full(p.size, -np.inf)
    for x in np.flatnonzero(p > 0):
        col = P[:, x] / p[x]
        ent = -math.log(p[x])
        if ent < MIN_WITNESS_ENTROPY:
            continue
        ratios[x] = float(np.dot(p, exact._xlogx(col))) / ent
    return ratios


def _linearized_functions(k: Kernel, count: int = 4, eps: float = 0.05):
    """f = 1 + eps * phi for the slowest nontrivial eigenfunctions phi of the kernel."""
    p = k.stationary.probs
    keep = p > 0
    ev, vecs = np.linalg.eigh(_symmetrized(k))
    out = []
    for j in range(len(ev) - 2, max(-1, len(ev) - 2 - count), -1):
        phi = np.zeros(p.size)
        phi[keep] = vecs[:, j] / np.sqrt(p[keep])
        scale = np.max(np.abs(phi))
        if scale > 0:
            out.append(("eigenfunction", 1.0 + eps * phi / scale))
    return out


def find_contraction_witness(d: Distribution, k: Kernel, budget: int = 200, seed: int = 0,
                             maxiter: int = 200) -> Witness:
    """Witness f maximizing Ent(P f) / Ent(f); the returned value is 1 - that ratio."""
    def score(f):
        f = f / d.expect(f)
        ent = exact.entropy(d, f)
        if ent < MIN_WITNESS_ENTROPY:
            return None
        return exact.entropy(d, k.apply(f)) / ent

    w = exact._search(d, _contraction_terms(k), score, _indicator_contraction_ratios(k),
                      budget, seed, maxiter, "ascent", extra=_linearized_functions(k))
    if w.value == -math.inf:
        w.value = 0.0
    w.value = 1.0 - w.value
    return w


def contraction_rate(d: Distribution, k: Kernel, budget: int = 200, seed: int = 0) -> float:
    """Certified upper bound on the entropy contraction rate delta_alpha.

    min over witnesses f of 1 - Ent(P f) / Ent(f), using the same witness
    families as the Shearer-constant search.
    """
    return find_contraction_witness(d, k, budget, seed).value


def _symmetrized(k: Kernel) -> np.ndarray:
    p = k.stationary.probs
    keep = p > 0
    s = np.sqrt(p[keep])
    S = s[:, None] * k.matrix[np.ix_(keep, keep)] / s[None, :]
    return (S + S.T) / 2


def spectral_gap(k: Kernel) -> float:
    """1 - lambda_2 of the kernel viewed as a self-adjoint operator on L2(mu)."""
    err = k.balance_error()
    if err > BALANCE_TOL:
        raise ValueError(f"kernel is not reversible (detailed-balance error {err:.3e})")
    ev = np.linalg.eigvalsh(_symmetrized(k))
    if ev.size < 2:
        return 1.0
    return float(1.0 - ev[-2])


def variance_contraction(k: Kernel) -> float:
    """1 - lambda_2^2: the best constant in Var(P f) <= (1 - delta) Var(f).

    Linearizing Ent(P f) <= (1 - delta) Ent(f) around f = 1 shows the entropy
    contraction rate never exceeds this value.
    """
    ev = np.linalg.eigvalsh(_symmetrized(k))
    if ev.size < 2:
        return 1.0
    slow = max(abs(ev[-2]), abs(ev[0]))
    return float(1.0 - slow ** 2)


def tv_distance(a, b) -> float:
    return 0.5 * float(np.abs(np.asarray(a) - np.asarray(b)).sum())


def tv_curve(k: Kernel, start, steps: int) -> np.ndarray:
    """d_TV(delta_start P^t, mu) for t = 0..steps; ``start`` is a config or state index."""
    space = k.stationary.space
    x = start if isinstance(start, (int, np.integer)) else space.index(start)
    nu = np.zeros(space.size)
    nu[x] = 1.0
    mu = k.stationary.probs
    out = np.empty(steps + 1)
    out[0] = tv_distance(nu, mu)
    for t in range(1, steps + 1):
        nu = k.step_distribution(nu)
        out[t] = tv_distance(nu, mu)
    return out


def mixing_time_tv(k: Kernel, eps: float = 0.25, start=None, max_steps: int = 100_000):
    """Smallest t with d_TV(start P^t, mu) <= eps; ``None`` if not reached within ``max_steps``.

    With ``start=None`` the worst Dirac start is used.
    """
    space = k.stationary.space
    mu = k.stationary.probs
    if start is None:
        nu = np.eye(space.size)
    else:
        x = start if isinstance(start, (int, np.integer)) else space.index(start)
        nu = np.zeros((1, space.size))
        nu[0, x] = 1.0
    for t in range(max_steps + 1):
        worst = 0.5 * np.abs(nu - mu[None, :]).sum(axis=1).max()
        if worst <= eps:
            return t
        nu = nu @ k.matrix
    return None
