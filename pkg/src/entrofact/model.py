"""Spin systems in binary-encoded quadratic form.

A configuration sigma in [q]^n is encoded as eta in {0,1}^{qn} with
eta[i*q + a - 1] = 1 iff sigma_i = a (vertex-major, color-minor).  The Gibbs
weight of sigma is exp(<eta, gamma eta> + <h, eta>).

Vertices are 0-based indices into the configuration vector; spin values are
1-based, matching [q] = {1, ..., q}.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

SYMMETRY_TOL = 1e-10


@dataclass(frozen=True, eq=False)
class SpinSystem:
    n: int
    q: int
    gamma: np.ndarray
    fields: np.ndarray

    def __post_init__(self):
        if self.n < 1 or self.q < 2:
            raise ValueError(f"need n >= 1 and q >= 2, got n={self.n}, q={self.q}")
        dim = self.n * self.q
        gamma = np.array(self.gamma, dtype=float)
        fields = np.array(self.fields, dtype=float)
        if gamma.shape != (dim, dim):
            raise ValueError(f"gamma must be {dim}x{dim}, got {gamma.shape}")
        if fields.shape != (dim,):
            raise ValueError(f"fields must have length {dim}, got {fields.shape}")
        if not np.array_equal(gamma, gamma.T):
            raise ValueError("gamma is not exactly symmetric")
        gamma.flags.writeable = False
        fields.flags.writeable = False
        object.__setattr__(self, "gamma", gamma)
        object.__setattr__(self, "fields", fields)

    @property
    def dim(self) -> int:
        return self.n * self.q

    def with_fields(self, fields) -> "SpinSystem":
        return SpinSystem(self.n, self.q, self.gamma, fields)

    def to_json(self) -> str:
        return json.dumps({
            "n": self.n,
            "q": self.q,
            "gamma": self.gamma.ravel().tolist(),
            "fields": self.fields.tolist(),
        })

    @classmethod
    def from_json(cls, text: str) -> "SpinSystem":
        doc = json.loads(text)
        n, q = int(doc["n"]), int(doc["q"])
        gamma = np.asarray(doc["gamma"], dtype=float).reshape(n * q, n * q)
        return cls(n, q, gamma, np.asarray(doc["fields"], dtype=float))


def _fields_or_zero(fields, dim):
    if fields is None:
        return np.zeros(dim)
    return np.asarray(fields, dtype=float)


def _color_diagonal(coupling: np.ndarray, q: int) -> np.ndarray:
    # Gamma(i,a;j,b) = coupling[i,j] * 1{a=b}
    out = np.kron(coupling, np.eye(q))
    return (out + out.T) / 2


def build_potts(adjacency, beta: float, q: int, fields=None) -> SpinSystem:
    """Graphical Potts model: Gamma(i,a;j,b) = beta * A_ij * 1{a=b}.

    No diagonal shift is applied, so Gamma is generally indefinite.
    """
    A = np.asarray(adjacency, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ValueError(f"adjacency must be square, got shape {A.shape}")
    if not np.array_equal(A, A.T):
        bad = np.argwhere(A != A.T)[0]
        raise ValueError(f"adjacency is not symmetric: A[{bad[0]},{bad[1]}] != A[{bad[1]},{bad[0]}]")
    if np.any(np.diag(A) != 0):
        raise ValueError("adjacency must have zero diagonal")
    n = A.shape[0]
    return SpinSystem(n, q, _color_diagonal(beta * A, q), _fields_or_zero(fields, n * q))


def build_curie_weiss(n: int, beta: float, q: int = 2, fields=None, shifted: bool = True) -> SpinSystem:
    """Mean-field ferromagnetic Potts model with coupling beta/n between all pairs.

    With ``shifted=True`` the diagonal blocks also carry beta/n, which makes
    Gamma = (beta/n) * ones(n,n) (x) I_q positive semidefinite with top
    eigenvalue beta.  ``shifted=False`` leaves the i=j blocks at zero.
    """
    if beta < 0:
        raise ValueError(f"Curie-Weiss builder is ferromagnetic only, got beta={beta}")
    coupling = np.full((n, n), beta / n)
    if not shifted:
        np.fill_diagonal(coupling, 0.0)
    return SpinSystem(n, q, _color_diagonal(coupling, q), _fields_or_zero(fields, n * q))


def spin_glass_couplings(n: int, seed: int) -> np.ndarray:
    """Symmetric matrix of i.i.d. standard normals J_ij = J_ji (diagonal zeroed)."""
    rng = np.random.default_rng(seed)
    upper = np.triu(rng.standard_normal((n, n)), k=1)
    return upper + upper.T


def build_spin_glass(n: int, beta: float, q: int = 2, seed: int = 0, eps: float = 0.1,
                     fields=None) -> SpinSystem:
    """Potts spin glass with the PSD-making diagonal shift beta*(2+eps)."""
    if beta < 0:
        raise ValueError(f"beta must be nonnegative, got {beta}")
    if eps < 0:
        raise ValueError(f"eps must be nonnegative, got {eps}")
    coupling = beta / math.sqrt(n) * spin_glass_couplings(n, seed)
    coupling = coupling + beta * (2 + eps) * np.eye(n)
    return SpinSystem(n, q, _color_diagonal(coupling, q), _fields_or_zero(fields, n * q))


def shift_diagonal(sys: SpinSystem, c: float) -> SpinSystem:
    """Add c on the (i,a;i,a) entries; leaves the Gibbs measure unchanged."""
    if c == 0:
        return sys
    return SpinSystem(sys.n, sys.q, sys.gamma + c * np.eye(sys.dim), sys.fields)


def psd_shift(sys: SpinSystem, margin: float = 0.0) -> SpinSystem:
    """Smallest diagonal shift (plus ``margin``) making gamma positive semidefinite."""
    lo = float(np.linalg.eigvalsh(sys.gamma)[0])
    # round-off negatives are not worth a shift
    if lo >= -1e-12 and margin == 0:
        return sys
    return shift_diagonal(sys, max(0.0, -lo) + margin)


def to_binary(spins, q: int) -> np.ndarray:
    spins = np.asarray(spins, dtype=int)
    if np.any(spins < 1) or np.any(spins > q):
        raise ValueError(f"spins must lie in 1..{q}, got {spins.tolist()}")
    bits = np.zeros((spins.size, q), dtype=np.int8)
    bits[np.arange(spins.size), spins - 1] = 1
    return bits.ravel()


def from_binary(bits, q: int) -> np.ndarray:
    bits = np.asarray(bits, dtype=int)
    if bits.size % q:
        raise ValueError(f"length {bits.size} is not a multiple of q={q}")
    blocks = bits.reshape(-1, q)
    if np.any((blocks != 0) & (blocks != 1)) or np.any(blocks.sum(axis=1) != 1):
        raise ValueError(f"every block of {q} bits must contain exactly one 1, got {bits.tolist()}")
    return blocks.argmax(axis=1) + 1


def symmetrize_checked(m, tol: float = SYMMETRY_TOL) -> np.ndarray:
    m = np.asarray(m, dtype=float)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {m.shape}")
    asym = np.max(np.abs(m - m.T)) if m.size else 0.0
    if asym > tol:
        raise ValueError(f"matrix is not symmetric (max asymmetry {asym:.3e} > {tol:.0e})")
    return (m + m.T) / 2


def max_eigenvalue(m) -> float:
    """Largest eigenvalue of a symmetric matrix."""
    return float(np.linalg.eigvalsh(symmetrize_checked(m))[-1])


def min_eigenvalue(m) -> float:
    return float(np.linalg.eigvalsh(symmetrize_checked(m))[0])


def dobrushin_sum(sys: SpinSystem) -> float:
    return float(np.abs(sys.gamma).sum(axis=1).max())


def check_dobrushin(sys: SpinSystem, delta: float) -> bool:
    """Row-sum condition max_{i,a} sum_{j,b} |Gamma(i,a;j,b)| <= 1 - delta."""
    return dobrushin_sum(sys) <= 1 - delta


def critical_beta(max_degree: int) -> float:
    """Tree-uniqueness threshold 0.5 * ln(D / (D - 2)) for the Ising model."""
    if max_degree < 3:
        raise ValueError(f"max_degree must be >= 3, got {max_degree}")
    return 0.5 * math.log(max_degree / (max_degree - 2))


def check_tree_uniqueness(beta: float, max_degree: int, delta: float) -> bool:
    """True iff tanh|beta| <= (1 - delta) / (max_degree - 1)."""
    if max_degree < 3:
        raise ValueError(f"max_degree must be >= 3, got {max_degree}")
    if not 0 < delta < 1:
        raise ValueError(f"delta must lie in (0, 1), got {delta}")
    return math.tanh(abs(beta)) <= (1 - delta) / (max_degree - 1)


def cycle_graph(n: int) -> np.ndarray:
    A = np.zeros((n, n), dtype=int)
    for i in range(n):
        A[i, (i + 1) % n] = A[(i + 1) % n, i] = 1
    return A


def complete_graph(n: int) -> np.ndarray:
    return np.ones((n, n), dtype=int) - np.eye(n, dtype=int)


def random_regular_graph(n: int, degree: int, seed: int) -> np.ndarray:
    """Random simple d-regular graph by rejection sampling of pairings."""
    if (n * degree) % 2 or degree >= n:
        raise ValueError(f"no simple {degree}-regular graph on {n} vertices")
    rng = np.random.default_rng(seed)
    for _ in range(10_000):
        stubs = rng.permutation(np.repeat(np.arange(n), degree)).reshape(-1, 2)
        if np.any(stubs[:, 0] == stubs[:, 1]):
            continue
        A = np.zeros((n, n), dtype=int)
        np.add.at(A, (stubs[:, 0], stubs[:, 1]), 1)
        A = A + A.T
        if A.max() == 1:
            return A
    raise RuntimeError("failed to sample a simple regular graph")
