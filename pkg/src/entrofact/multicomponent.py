"""Weakly interacting components.

Each component i is an arbitrary law mu_i on [q_i]^{L_i} (hard constraints
allowed).  The joint measure is

    mu(sigma) ~ exp(<eta, Gamma eta> + <h, eta>) * prod_i mu_i(sigma_i)

where eta concatenates the one-hot encodings of all components, so Gamma and
h live in dimension M = sum_i q_i L_i.  Sites are numbered globally: the
sites of component 0 first, then component 1, and so on.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np
from scipy.optimize import minimize

from . import exact
from .exact import DEFAULT_CAP, BlockWeights, Distribution, Space
from .model import build_curie_weiss, max_eigenvalue, symmetrize_checked
from .reports import FAIL, PASS, CheckReport, margin_verdict, worst

PSI_CLAMP = 20.0
PSI_SCALES = (0.3, 1.0, 3.0, 10.0)
SLACK = 1e-9


@dataclass(frozen=True, eq=False)
class ComponentSystem:
    components: tuple
    gamma: np.ndarray
    fields: np.ndarray

    def __post_init__(self):
        comps = tuple(self.components)
        if not comps:
            raise ValueError("need at least one component")
        object.__setattr__(self, "components", comps)
        M = sum(c.space.dim for c in comps)
        gamma = np.array(self.gamma, dtype=float)
        fields = np.zeros(M) if self.fields is None else np.array(self.fields, dtype=float)
        if gamma.shape != (M, M):
            raise ValueError(f"gamma must be {M}x{M}, got {gamma.shape}")
        if fields.shape != (M,):
            raise ValueError(f"fields must have length {M}, got {fields.shape}")
        gamma = symmetrize_checked(gamma)
        gamma.flags.writeable = False
        fields.flags.writeable = False
        object.__setattr__(self, "gamma", gamma)
        object.__setattr__(self, "fields", fields)

    @property
    def M(self) -> int:
        return self.gamma.shape[0]

    @property
    def n_components(self) -> int:
        return len(self.components)

    @cached_property
    def space(self) -> Space:
        return Space(sum((c.space.colors for c in self.components), ()))

    @cached_property
    def component_sites(self) -> list:
        out, start = [], 0
        for c in self.components:
            out.append(list(range(start, start + c.space.n)))
            start += c.space.n
        return out

    @cached_property
    def coordinate_slices(self) -> list:
        out, start = [], 0
        for c in self.components:
            out.append(slice(start, start + c.space.dim))
            start += c.space.dim
        return out

    @cached_property
    def base_logw(self) -> np.ndarray:
        """sum_i log mu_i(sigma_i) for every joint configuration."""
        self.space.check_cap()
        configs = self.space.configs
        logw = np.zeros(self.space.size)
        for c, sites in zip(self.components, self.component_sites):
            idx = (configs[:, sites] - 1) @ c.space.strides
            logw = logw + c.logw[idx]
        return logw

    def with_fields(self, fields) -> "ComponentSystem":
        return ComponentSystem(self.components, self.gamma, fields)

    def component_weights_to_sites(self, alpha: "ComponentWeights") -> BlockWeights:
        if alpha.n != self.n_components:
            raise ValueError(f"weights are over {alpha.n} components, system has {self.n_components}")
        entries = {}
        for mask, w in alpha.entries.items():
            sites = [s for i in exact.sites_of(mask) for s in self.component_sites[i]]
            entries[exact.mask_of(sites)] = w
        return BlockWeights(self.space.n, entries)


class ComponentWeights(BlockWeights):
    """Weights over subsets of components (not of sites)."""


def joint_distribution(cs: ComponentSystem, cap: int = DEFAULT_CAP) -> Distribution:
    cs.space.check_cap(cap)
    B = cs.space.binary
    logw = cs.base_logw + np.einsum("si,ij,sj->s", B, cs.gamma, B) + B @ cs.fields
    return Distribution(cs.space, logw)


def sigma_psi(mu: Distribution, psi=None) -> np.ndarray:
    """Indicator covariance of mu tilted by the self-potentials psi."""
    d = mu if psi is None else exact.tilt(mu, psi)
    return exact.covariance(d)


def _top_eigen(mu: Distribution, psi):
    d = exact.tilt(mu, psi)
    B = d.space.binary
    p = d.probs
    m = p @ B
    C = B.T @ (p[:, None] * B) - np.outer(m, m)
    ev, vecs = np.linalg.eigh((C + C.T) / 2)
    v = vecs[:, -1]
    # d lambda / d psi_k = Cov(u^2, eta_k) with u = <v, eta - m>
    u2 = (B @ v - m @ v) ** 2
    grad = B.T @ (p * u2) - (p @ u2) * m
    return float(ev[-1]), grad


@dataclass
class SigmaSup:
    value: float
    psi: np.ndarray
    boundary_hit: bool
    evaluations: int


def sup_sigma_psi(mu: Distribution, budget: int = 64, seed: int = 0, maxiter: int = 200,
                  restarts: int = 4) -> SigmaSup:
    """Witnessed lower bound on sup_psi lambda(Sigma^psi) over ||psi||_inf <= 20."""
    dim = mu.space.dim
    rng = np.random.default_rng([seed, 21])
    zero = np.zeros(dim)
    cands = [(_top_eigen(mu, zero)[0], zero)]
    for k in range(budget):
        psi = np.clip(PSI_SCALES[k % len(PSI_SCALES)] * rng.standard_normal(dim), -PSI_CLAMP, PSI_CLAMP)
        cands.append((_top_eigen(mu, psi)[0], psi))
    evals = len(cands)
    cands.sort(key=lambda c: -c[0])
    best_val, best_psi = cands[0]
    for _, start in cands[:restarts]:
        trail = []

        def fun(psi):
            val, grad = _top_eigen(mu, psi)
            trail.append((val, psi.copy()))
            return -val, -grad

        minimize(fun, start, jac=True, method="L-BFGS-B", bounds=[(-PSI_CLAMP, PSI_CLAMP)] * dim,
                 options={"maxiter": maxiter})
        evals += len(trail)
        val, psi = max(trail, key=lambda c: c[0])
        if val > best_val:
            best_val, best_psi = val, psi
    hit = bool(np.any(np.abs(best_psi) >= PSI_CLAMP - 1e-6))
    return SigmaSup(best_val, best_psi, hit, evals)


def estimate_R(cs: ComponentSystem, budget: int = 64, seed: int = 0) -> float:
    """Lower bound on R = 2 max_i sup_psi lambda(Sigma_i^psi)."""
    return 2 * max(sup_sigma_psi(c, budget, seed + i).value for i, c in enumerate(cs.components))


def estimate_R_detailed(cs: ComponentSystem, budget: int = 64, seed: int = 0) -> list:
    return [sup_sigma_psi(c, budget, seed + i) for i, c in enumerate(cs.components)]


def conditioned_bernoulli(L: int, probs, k: int) -> Distribution:
    """Product of Bernoulli(probs) on L sites conditioned on exactly k successes.

    Color 1 is success, color 2 failure.
    """
    probs = np.asarray(probs, dtype=float)
    if probs.shape != (L,) or np.any(probs < 0) or np.any(probs > 1):
        raise ValueError(f"need {L} success probabilities in [0, 1]")
    if not 0 <= k <= L:
        raise ValueError(f"k must lie in 0..{L}, got {k}")
    space = Space.uniform(L, 2)
    on = space.configs == 1
    with np.errstate(divide="ignore"):
        logw = np.where(on, np.log(probs), np.log1p(-probs)).sum(axis=1)
    logw[on.sum(axis=1) != k] = -np.inf
    if not np.any(np.isfinite(logw)):
        raise ValueError(f"conditioning on {k} successes has probability zero")
    return Distribution(space, logw)


def bernoulli_covariance(d: Distribution) -> np.ndarray:
    """L x L covariance of the success indicators X_l = 1{sigma_l = 1}."""
    X = (d.space.configs == 1).astype(float)
    p = d.probs
    m = p @ X
    C = X.T @ (p[:, None] * X) - np.outer(m, m)
    return (C + C.T) / 2


def _require_psd(gamma):
    lo = float(np.linalg.eigvalsh(gamma)[0])
    if lo < -1e-10:
        raise ValueError(f"Gamma is not positive semidefinite (min eigenvalue {lo:.3e})")


def _joint_witnesses(cs: ComponentSystem, alpha: BlockWeights, constant: float, budget: int, seed: int,
                     n_fields: int, field_scale: float):
    rng = np.random.default_rng([seed, 31])
    records = []
    for k in range(n_fields + 1):
        h = cs.fields if k == 0 else cs.fields + field_scale * rng.standard_normal(cs.M)
        w = exact.find_shearer_witness(joint_distribution(cs.with_fields(h)), alpha, budget, seed + k)
        records.append({"field_draw": k, "ratio": w.value, "source": w.source, "bound": constant,
                        "slack": constant - w.value})
    return records


def component_factorization_check(cs: ComponentSystem, alpha: ComponentWeights, budget: int = 200,
                                  seed: int = 0, R: float | None = None, n_fields: int = 0,
                                  field_scale: float = 1.0, R_budget: int = 64) -> CheckReport:
    """gamma(alpha) Ent f <= (1 - R lambda(Gamma))^{-1} sum_A alpha_A mu(Ent_A f) over blocks of components.

    ``R`` may be a known upper bound (e.g. 2 for sum-conditioned Bernoulli
    components); otherwise the witnessed lower bound from :func:`estimate_R`
    is used and the report says so.
    """
    if not isinstance(alpha, ComponentWeights):
        raise TypeError("component factorization takes ComponentWeights (blocks of components)")
    _require_psd(cs.gamma)
    lam = max_eigenvalue(cs.gamma)
    R_est = estimate_R(cs, R_budget, seed)
    R_used = R if R is not None else R_est
    if R_used * lam >= 1:
        raise ValueError(f"hypothesis fails: R * lambda(Gamma) = {R_used * lam:.6g} >= 1")
    constant = 1 / (1 - R_used * lam)
    site_alpha = cs.component_weights_to_sites(alpha)
    records = _joint_witnesses(cs, site_alpha, constant, budget, seed, n_fields, field_scale)
    worst_slack = min(r["slack"] for r in records)
    tight = max(records, key=lambda r: r["ratio"])
    return CheckReport("component-factorization", margin_verdict(worst_slack, SLACK), worst_slack, records,
                       {"lambda_gamma": lam, "R_used": R_used, "R_source": "given" if R is not None else "estimate",
                        "R_estimate": R_est, "constant": constant, "tightest_ratio": tight["ratio"]})


def certify_component_constant(mu: Distribution, C: float, budget: int = 50, seed: int = 0,
                               n_fields: int = 4, n_alpha: int = 4, field_scale: float = 1.0) -> float:
    """Largest witnessed strong-Shearer ratio of mu over random psi and alpha; raises if it exceeds C."""
    rng = np.random.default_rng([seed, 41])
    n = mu.space.n
    alphas = [BlockWeights.glauber(n), BlockWeights.even_odd(n)]
    alphas += [BlockWeights.random(n, rng) for _ in range(n_alpha)]
    best = 0.0
    for k in range(n_fields + 1):
        d = mu if k == 0 else exact.tilt(mu, field_scale * rng.standard_normal(mu.space.dim))
        for j, a in enumerate(alphas):
            try:
                v = exact.find_shearer_witness(d, a, budget, seed + 7 * k + j).value
            except ValueError:
                continue
            best = max(best, v)
    if best > C + SLACK:
        raise ValueError(f"component witness ratio {best:.9g} exceeds the claimed constant {C}")
    return best


def tensorization_check(cs: ComponentSystem, constants, alpha: BlockWeights, budget: int = 200, seed: int = 0,
                        R: float | None = None, n_fields: int = 2, field_scale: float = 1.0,
                        certify_budget: int = 30, R_budget: int = 64) -> CheckReport:
    """Strong Shearer inequality on the joint system with constant max C_i / (1 - min(R, max C_i) lambda(Gamma)).

    R is only known through upper bounds: the caller-supplied ``R`` or, by the
    component-constant bound on R, max C_i itself.  The witnessed R estimate
    is checked against max C_i and reported.
    """
    if isinstance(alpha, ComponentWeights):
        raise TypeError("tensorization takes BlockWeights over sites, not ComponentWeights")
    constants = [float(c) for c in constants]
    if len(constants) != cs.n_components:
        raise ValueError(f"need {cs.n_components} component constants, got {len(constants)}")
    _require_psd(cs.gamma)
    lam = max_eigenvalue(cs.gamma)
    witnessed = [certify_component_constant(c, C, certify_budget, seed + i)
                 for i, (c, C) in enumerate(zip(cs.components, constants))]
    cmax = max(constants)
    R_est = estimate_R(cs, R_budget, seed)
    r_margin = cmax - R_est
    r_verdict = PASS if r_margin >= -1e-6 else FAIL
    R_cert = cmax if R is None else min(R, cmax)
    if R_cert * lam >= 1:
        raise ValueError(f"hypothesis fails: min(R, max C_i) * lambda(Gamma) = {R_cert * lam:.6g} >= 1")
    constant = cmax / (1 - R_cert * lam)
    records = _joint_witnesses(cs, alpha, constant, budget, seed, n_fields, field_scale)
    worst_slack = min(r["slack"] for r in records)
    verdict = worst([margin_verdict(worst_slack, SLACK), r_verdict])
    return CheckReport("tensorization", verdict, worst_slack, records,
                       {"lambda_gamma": lam, "constants": constants, "component_witnessed": witnessed,
                        "R_estimate": R_est, "R_bound_margin": r_margin, "R_certified": R_cert,
                        "constant": constant,
                        "constant_with_R_estimate": cmax / (1 - min(R_est, cmax) * lam)})


def variance_ratio(d: Distribution, g) -> float:
    """Var g / sum_l mu[Var_l g] (single-site Efron-Stein ratio)."""
    g = np.asarray(g, dtype=float)
    var = d.expect(g * g) - d.expect(g) ** 2
    den = 0.0
    for s in range(d.space.n):
        cond = exact.conditional_expectation(d, 1 << s, g)
        den += d.expect(g * g) - d.expect(cond * cond)
    if den <= 1e-300:
        return math.inf if var > 1e-300 else math.nan
    return var / den


def efron_stein_check(mu: Distribution, C: float, n_psi: int = 8, n_funcs: int = 8, seed: int = 0,
                      eps: float = 1e-4, field_scale: float = 1.0) -> CheckReport:
    """C sum_l mu^psi[Var_l g] >= Var g and lambda(Sigma^psi) <= C/2, plus agreement with f = 1 + eps g."""
    rng = np.random.default_rng([seed, 51])
    n = mu.space.n
    glauber = BlockWeights.glauber(n)
    records = []
    verdicts = []
    worst_margin = math.inf
    for k in range(n_psi + 1):
        d = mu if k == 0 else exact.tilt(mu, field_scale * rng.standard_normal(mu.space.dim))
        lam = max_eigenvalue(exact.covariance(d))
        cov_margin = C / 2 - lam
        for _ in range(n_funcs):
            g = rng.standard_normal(mu.space.size)
            g = g / np.max(np.abs(g))
            vr = variance_ratio(d, g)
            lin = exact.shearer_ratio(d, glauber, 1.0 + eps * g)
            margin = min(C - vr, cov_margin)
            agree = abs(lin - vr) <= 1e-3 * max(1.0, vr)
            v = margin_verdict(margin, SLACK) if agree else FAIL
            verdicts.append(v)
            worst_margin = min(worst_margin, margin)
            records.append({"psi_draw": k, "variance_ratio": vr, "linearized_ratio": float(lin),
                            "lambda_sigma": lam, "margin": margin, "verdict": v})
    return CheckReport("efron-stein", worst(verdicts), worst_margin, records, {"C": C, "eps": eps})


def _component_from_json(doc) -> Distribution:
    kind = doc.get("builder", "table")
    if kind == "table":
        colors = tuple(doc["colors"])
        return Distribution.from_probs(Space(colors), np.asarray(doc["probs"], dtype=float))
    if kind == "product":
        return exact.product_distribution(doc["marginals"])
    if kind == "conditioned-bernoulli":
        return conditioned_bernoulli(int(doc["L"]), doc["probs"], int(doc["k"]))
    if kind == "curie-weiss":
        return exact.gibbs_distribution(build_curie_weiss(int(doc["n"]), float(doc["beta"]), int(doc.get("q", 2))))
    raise ValueError(f"unknown component builder {kind!r}")


def from_manifest(doc) -> ComponentSystem:
    """Build a system from a JSON manifest (dict or JSON text).

    Components are explicit tables ``{"colors": [...], "probs": [...]}`` or
    named builders (``product``, ``conditioned-bernoulli``, ``curie-weiss``).
    ``gamma`` is a flattened M x M matrix or ``{"random_psd": {"top": x, "seed": s}}``;
    ``fields`` is optional.
    """
    if isinstance(doc, str):
        doc = json.loads(doc)
    comps = [_component_from_json(c) for c in doc["components"]]
    M = sum(c.space.dim for c in comps)
    g = doc.get("gamma", 0.0)
    if isinstance(g, dict):
        spec = g["random_psd"]
        gamma = exact.random_psd(M, float(spec["top"]), np.random.default_rng(int(spec.get("seed", 0))))
    elif np.isscalar(g) and float(g) == 0.0:
        gamma = np.zeros((M, M))
    else:
        gamma = np.asarray(g, dtype=float).reshape(M, M)
    return ComponentSystem(comps, gamma, doc.get("fields"))
