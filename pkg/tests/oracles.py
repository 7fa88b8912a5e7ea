"""Slow, loop-based reference implementations used to cross-check the library.

Nothing here imports entrofact; configurations are tuples of 1-based spins
and distributions are plain dicts.
"""
import itertools
import math

import numpy as np


def configs(colors):
    return list(itertools.product(*(range(1, c + 1) for c in colors)))


def one_hot(sigma, colors):
    eta = []
    for s, c in zip(sigma, colors):
        eta += [1.0 if a == s else 0.0 for a in range(1, c + 1)]
    return eta


def gibbs(n, q, gamma, fields):
    colors = [q] * n
    w = {}
    for sigma in configs(colors):
        eta = one_hot(sigma, colors)
        e = 0.0
        for i in range(len(eta)):
            e += fields[i] * eta[i]
            for j in range(len(eta)):
                e += eta[i] * gamma[i][j] * eta[j]
        w[sigma] = math.exp(e)
    z = sum(w.values())
    return {s: v / z for s, v in w.items()}


def xlogx(x):
    return 0.0 if x == 0 else x * math.log(x)


def entropy(mu, f):
    m = sum(mu[s] * f[s] for s in mu)
    return sum(mu[s] * xlogx(f[s]) for s in mu) - xlogx(m)


def avg_conditional_entropy(mu, f, block):
    """mu(Ent_A f) by explicit grouping on the spins outside ``block``."""
    groups = {}
    for s in mu:
        key = tuple(x for i, x in enumerate(s) if i not in block)
        groups.setdefault(key, []).append(s)
    total = 0.0
    for members in groups.values():
        mass = sum(mu[s] for s in members)
        if mass == 0:
            continue
        cond = {s: mu[s] / mass for s in members}
        total += mass * entropy(cond, f)
    return total


def shearer_ratio(mu, f, alpha):
    """alpha: list of (block set, weight)."""
    n = len(next(iter(mu)))
    gamma = min(sum(w for b, w in alpha if i in b) for i in range(n))
    den = sum(w * avg_conditional_entropy(mu, f, b) for b, w in alpha)
    return gamma * entropy(mu, f) / den


def covariance(mu, colors):
    keys = list(mu)
    E = np.array([one_hot(s, colors) for s in keys])
    p = np.array([mu[s] for s in keys])
    m = p @ E
    C = np.zeros((E.shape[1], E.shape[1]))
    for k in range(len(keys)):
        C += p[k] * np.outer(E[k] - m, E[k] - m)
    return C


def power_top_eigenvalue(M, iters=20000, seed=0):
    """Largest eigenvalue of a symmetric matrix by shifted power iteration."""
    M = np.asarray(M, dtype=float)
    shift = np.abs(M).sum(axis=1).max() + 1.0
    A = M + shift * np.eye(len(M))
    v = np.random.default_rng(seed).standard_normal(len(M))
    for _ in range(iters):
        w = A @ v
        v = w / np.linalg.norm(w)
    return float(v @ A @ v) - shift


def block_kernel(mu, alpha):
    """P[x][y] = sum_A alpha_A mu(y | agrees with x off A)."""
    keys = list(mu)
    P = np.zeros((len(keys), len(keys)))
    for b, w in alpha:
        for ix, x in enumerate(keys):
            outside = [i for i in range(len(x)) if i not in b]
            same = [iy for iy, y in enumerate(keys) if all(y[i] == x[i] for i in outside)]
            mass = sum(mu[keys[iy]] for iy in same)
            for iy in same:
                P[ix, iy] += w * mu[keys[iy]] / mass
    return P
