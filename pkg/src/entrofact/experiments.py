"""Named, seeded experiments and their reports.

A config is a JSON object::

    {"experiment": "curie-weiss-scan", "seed": 0, "params": {...},
     "alpha": "glauber", "budgets": {"witness_budget": 100}, "out": "runs/cw"}

Every run is a pure function of (config, seed): the report payload (all
fields except ``wall_clock_seconds``) is byte-identical across reruns and
worker counts.
"""
from __future__ import annotations

import math
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import dynamics, exact, io, localization, model, multicomponent
from .exact import BlockWeights
from .reports import FAIL, PASS, WARN, CheckReport, margin_verdict, worst

SLACK = 1e-9
DEFAULT_BUDGETS = {"witness_budget": 100, "maxiter": 200, "dt": 1e-3, "paths": 2000, "r_budget": 64}


class ConfigError(ValueError):
    """The config does not match the schema."""


class UnknownExperimentError(KeyError):
    pass


@dataclass
class ExperimentConfig:
    experiment: str
    seed: int = 0
    params: dict = field(default_factory=dict)
    alpha: object = "glauber"
    budgets: dict = field(default_factory=dict)
    out: str | None = None
    workers: int | None = None

    @classmethod
    def from_dict(cls, doc) -> "ExperimentConfig":
        if not isinstance(doc, dict):
            raise ConfigError("config must be a JSON object")
        known = {"experiment", "seed", "params", "alpha", "budgets", "out", "workers"}
        extra = set(doc) - known
        if extra:
            raise ConfigError(f"unknown config fields: {sorted(extra)}")
        if "experiment" not in doc or not isinstance(doc["experiment"], str):
            raise ConfigError("config needs a string 'experiment' field")
        seed = doc.get("seed", 0)
        if not isinstance(seed, int) or isinstance(seed, bool) or seed < 0:
            raise ConfigError(f"seed must be a nonnegative integer, got {seed!r}")
        params = doc.get("params", {})
        budgets = doc.get("budgets", {})
        if not isinstance(params, dict) or not isinstance(budgets, dict):
            raise ConfigError("'params' and 'budgets' must be objects")
        bad = set(budgets) - set(DEFAULT_BUDGETS)
        if bad:
            raise ConfigError(f"unknown budget fields: {sorted(bad)}")
        workers = doc.get("workers")
        if workers is not None and (not isinstance(workers, int) or workers < 1):
            raise ConfigError(f"workers must be a positive integer, got {workers!r}")
        return cls(doc["experiment"], seed, params, doc.get("alpha", "glauber"), budgets, doc.get("out"), workers)

    def budget(self, key: str):
        return self.budgets.get(key, DEFAULT_BUDGETS[key])

    def payload(self) -> dict:
        return {"experiment": self.experiment, "seed": self.seed, "params": self.params,
                "alpha": self.alpha, "budgets": {**DEFAULT_BUDGETS, **self.budgets}}


@dataclass
class Report:
    experiment: str
    seed: int
    config: dict
    checks: list
    fitted: dict = field(default_factory=dict)
    series: dict = field(default_factory=dict)
    wall_clock_seconds: float = 0.0

    @property
    def verdict(self) -> str:
        return worst(c.verdict for c in self.checks)

    def payload(self) -> dict:
        """Everything except wall-clock time."""
        return {
            "experiment": self.experiment,
            "replay_seed": self.seed,
            "config": self.config,
            "verdict": self.verdict,
            "checks": [c.to_dict() for c in self.checks],
            "fitted": self.fitted,
        }

    def payload_json(self) -> str:
        return io.dumps(self.payload())

    def to_dict(self) -> dict:
        return {**self.payload(), "wall_clock_seconds": self.wall_clock_seconds}

    def write(self, out_dir) -> Path:
        out = Path(out_dir)
        io.write_json(out / "report.json", self.to_dict())
        for name, (header, rows) in self.series.items():
            io.write_csv(out / f"{name}.csv", header, rows)
        return out / "report.json"


# --------------------------------------------------------------------------
# config helpers

def parse_alpha(spec, n: int) -> BlockWeights:
    if isinstance(spec, str):
        key = spec.lower().replace("_", "-")
        if key == "glauber":
            return BlockWeights.glauber(n)
        if key in ("even-odd", "evenodd"):
            return BlockWeights.even_odd(n)
        if key == "full":
            return BlockWeights.full(n)
        raise ConfigError(f"unknown alpha scheme {spec!r} (glauber | even-odd | full | explicit list)")
    try:
        blocks = spec["blocks"] if isinstance(spec, dict) else spec
        return BlockWeights.from_blocks(n, [(sites, float(w)) for sites, w in blocks])
    except (TypeError, KeyError, ValueError) as e:
        raise ConfigError(f"invalid alpha specification: {e}") from None


def _alphas(cfg: ExperimentConfig, n: int) -> list:
    spec = cfg.params.get("alphas", cfg.alpha)
    specs = spec if isinstance(spec, list) and spec and isinstance(spec[0], str) else [spec]
    return [(s if isinstance(s, str) else "explicit", parse_alpha(s, n)) for s in specs]


def _graph(p: dict, n: int):
    g = p.get("graph", "cycle")
    if isinstance(g, list):
        return np.asarray(g)
    if g == "cycle":
        return model.cycle_graph(n)
    if g == "complete":
        return model.complete_graph(n)
    if g == "random-regular":
        return model.random_regular_graph(n, int(p.get("degree", 3)), int(p.get("graph_seed", 0)))
    raise ConfigError(f"unknown graph {g!r}")


def build_model(p: dict):
    """A SpinSystem, or a Distribution for ``type = product``."""
    kind = p.get("type", "curie-weiss")
    try:
        if kind == "product":
            return exact.product_distribution(p["marginals"])
        if kind == "curie-weiss":
            return model.build_curie_weiss(int(p["n"]), float(p["beta"]), int(p.get("q", 2)))
        if kind == "potts":
            n = int(p["n"])
            return model.build_potts(_graph(p, n), float(p["beta"]), int(p.get("q", 2)))
        if kind == "spin-glass":
            return model.build_spin_glass(int(p["n"]), float(p["beta"]), int(p.get("q", 2)),
                                          int(p.get("coupling_seed", 0)), float(p.get("eps", 0.1)))
        if kind == "system":
            return model.SpinSystem(int(p["n"]), int(p["q"]),
                                    np.asarray(p["gamma"], dtype=float).reshape(p["n"] * p["q"], -1),
                                    np.asarray(p.get("fields", np.zeros(p["n"] * p["q"])), dtype=float))
    except KeyError as e:
        raise ConfigError(f"model of type {kind!r} is missing parameter {e}") from None
    raise ConfigError(f"unknown model type {kind!r}")


def _distribution(m):
    return m if isinstance(m, exact.Distribution) else exact.gibbs_distribution(m)


def _pmap(fn, items, workers):
    items = list(items)
    if not workers or workers <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=workers) as ex:
        return list(ex.map(fn, items))


def _fit_loglog(xs, ys):
    x = np.log(np.asarray(xs, dtype=float))
    y = np.log(np.asarray(ys, dtype=float))
    coef, cov = np.polyfit(x, y, 1, cov=True) if len(xs) > 3 else (np.polyfit(x, y, 1), np.zeros((2, 2)))
    return float(coef[0]), float(math.sqrt(max(cov[0, 0], 0.0)))


# --------------------------------------------------------------------------
# experiments

def _guaranteed_bound(m) -> float | None:
    """Shearer constant guaranteed for m: 1 for products, 1/delta under the eigenvalue hypothesis."""
    if isinstance(m, exact.Distribution):
        return 1.0
    lo = model.min_eigenvalue(m.gamma)
    if lo < -1e-10:
        m = model.psd_shift(m)
    lam = model.max_eigenvalue(m.gamma)
    return 1 / (1 - lam) if lam < 1 else None


def exp_verify_shearer(cfg, workers):
    m = build_model(cfg.params)
    d = _distribution(m)
    bound = cfg.params.get("bound", _guaranteed_bound(m))
    budget, maxiter = cfg.budget("witness_budget"), cfg.budget("maxiter")
    alphas = _alphas(cfg, d.space.n)

    def one(item):
        name, a = item
        return name, exact.find_shearer_witness(d, a, budget, cfg.seed, maxiter)

    checks, rows = [], []
    for name, w in _pmap(one, alphas, workers):
        margin = math.inf if bound is None else bound - w.value
        v = PASS if bound is None else margin_verdict(margin, SLACK)
        checks.append(CheckReport(f"shearer[{name}]", v, margin,
                                  [{"witnessed": w.value, "bound": bound, "source": w.source}]))
        rows.append([name, w.value, bound if bound is not None else math.nan])
    return checks, {}, {"witnesses": (["alpha", "witnessed_constant", "bound"], rows)}


def exp_curie_weiss_scan(cfg, workers):
    p = cfg.params
    n, q = int(p.get("n", 6)), int(p.get("q", 2))
    betas = p.get("betas", [0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9])
    alphas = _alphas(cfg, n) if "alphas" in p or cfg.alpha != "glauber" else \
        [("glauber", BlockWeights.glauber(n)), ("even-odd", BlockWeights.even_odd(n))]
    budget, maxiter = cfg.budget("witness_budget"), cfg.budget("maxiter")
    tasks = [(b, name, a) for b in betas for name, a in alphas]

    def one(t):
        b, name, a = t
        d = exact.gibbs_distribution(model.build_curie_weiss(n, float(b), q))
        return exact.find_shearer_witness(d, a, budget, cfg.seed, maxiter).value

    vals = _pmap(one, tasks, workers)
    records, rows = [], []
    for (b, name, _), v in zip(tasks, vals):
        bound = 1 / (1 - b)
        records.append({"beta": b, "alpha": name, "witnessed": v, "bound": bound, "margin": bound - v})
        rows.append([b, name, v, bound])
    wm = min(r["margin"] for r in records)
    return ([CheckReport("curie-weiss-bound", margin_verdict(wm, SLACK), wm, records)], {},
            {"scan": (["beta", "alpha", "witnessed_constant", "bound"], rows)})


def _growth_check(name, ns, vals, limit, alpha_name):
    slope, err = _fit_loglog(ns, vals)
    grows = all(b >= a - 1e-9 for a, b in zip(vals, vals[1:]))
    margin = limit + err - slope
    v = PASS if margin >= 0 and grows else FAIL
    rec = [{"n": n, "witnessed": c} for n, c in zip(ns, vals)]
    return CheckReport(f"{name}[{alpha_name}]", v, margin, rec,
                       {"slope": slope, "slope_stderr": err, "limit": limit, "monotone": grows}), slope, err


def exp_critical_cw_scan(cfg, workers):
    p = cfg.params
    ns = p.get("ns", list(range(4, 13)))
    beta = float(p.get("beta", 1.0))
    schemes = p.get("alphas", ["glauber"])
    budget, maxiter = cfg.budget("witness_budget"), cfg.budget("maxiter")
    tasks = [(s, n) for s in schemes for n in ns]

    def one(t):
        s, n = t
        d = exact.gibbs_distribution(model.build_curie_weiss(n, beta))
        return exact.find_shearer_witness(d, parse_alpha(s, n), budget, cfg.seed, maxiter).value

    vals = dict(zip(tasks, _pmap(one, tasks, workers)))
    checks, fitted, rows = [], {}, []
    for s in schemes:
        series = [vals[(s, n)] for n in ns]
        c, slope, err = _growth_check("critical-growth", ns, series, 0.5, s)
        checks.append(c)
        fitted[f"slope[{s}]"] = slope
        fitted[f"slope_stderr[{s}]"] = err
        rows += [[s, n, v] for n, v in zip(ns, series)]
    return checks, fitted, {"scan": (["alpha", "n", "witnessed_constant"], rows)}


def exp_sk_spectrum(cfg, workers):
    p = cfg.params
    ns = p.get("ns", [4, 6, 8])
    beta = float(p.get("beta", 0.1))
    eps = float(p.get("eps", 0.1))
    q = int(p.get("q", 2))
    draws = int(p.get("draws", 4))
    budget, maxiter = cfg.budget("witness_budget"), cfg.budget("maxiter")
    tasks = [(n, k) for n in ns for k in range(draws)]

    def one(t):
        n, k = t
        sys = model.build_spin_glass(n, beta, q, seed=cfg.seed * 1000 + k, eps=eps)
        ev = np.linalg.eigvalsh(sys.gamma)
        lam = float(ev[-1])
        w = None
        if lam < 1 and q ** n <= 4096:
            w = exact.find_shearer_witness(exact.gibbs_distribution(sys), BlockWeights.glauber(n),
                                           budget, cfg.seed, maxiter).value
        return float(ev[0]), lam, w

    out = _pmap(one, tasks, workers)
    records, rows = [], []
    inside = 0
    for (n, k), (lo, lam, w) in zip(tasks, out):
        ok = lo >= -1e-12 and lam <= beta * (4 + 2 * eps)
        inside += ok
        bound = 1 / (1 - lam) if lam < 1 else math.inf
        records.append({"n": n, "draw": k, "min_eig": lo, "lambda": lam, "in_window": ok,
                        "witnessed": w, "bound": bound, "margin": math.inf if w is None else bound - w})
        rows.append([n, k, lo, lam, w if w is not None else math.nan])
    wm = min(r["margin"] for r in records)
    frac = inside / len(tasks)
    checks = [CheckReport("sk-shearer-bound", margin_verdict(wm, SLACK), wm, records),
              # the spectral window holds only with high probability, so missing it is a warning
              CheckReport("sk-spectral-window", PASS if frac == 1 else WARN, frac, [],
                          {"window": [0.0, beta * (4 + 2 * eps)]})]
    return checks, {"fraction_in_window": frac}, {"spectrum": (["n", "draw", "min_eig", "lambda", "witnessed"], rows)}


def _ising_graph_system(n, degree, beta, graph_seed):
    A = model.random_regular_graph(n, degree, graph_seed) if degree < n - 1 else model.complete_graph(n)
    return model.build_potts(A, beta, 2)


def _covariance_influence_records(d, rng, tilts, scale=1.0):
    recs = []
    for k in range(tilts + 1):
        dt = d if k == 0 else exact.tilt(d, scale * rng.standard_normal(d.space.dim))
        lam_cov = model.max_eigenvalue(exact.covariance(dt))
        eig = exact.influence_eigenvalues(dt)
        lam_j = float(np.max(eig.real))
        recs.append({"tilt": k, "lambda_cov": lam_cov, "lambda_J": lam_j,
                     "max_imag": float(np.max(np.abs(eig.imag))), "margin": lam_j + 0.5 - lam_cov})
    return recs


def exp_ising_uniqueness_scan(cfg, workers):
    p = cfg.params
    n, degree = int(p.get("n", 8)), int(p.get("degree", 3))
    deltas = p.get("deltas", [0.2, 0.5, 0.8])
    tilts = int(p.get("tilts", 8))
    budget, maxiter = cfg.budget("witness_budget"), cfg.budget("maxiter")

    def one(delta):
        beta = math.atanh((1 - delta) / (degree - 1))
        sys = _ising_graph_system(n, degree, beta, int(p.get("graph_seed", cfg.seed)))
        if not model.check_tree_uniqueness(beta, degree, delta):
            raise ConfigError(f"beta={beta} is outside tree uniqueness for degree {degree}, delta {delta}")
        d = exact.gibbs_distribution(sys)
        rng = np.random.default_rng([cfg.seed, int(round(delta * 1000))])
        recs = _covariance_influence_records(d, rng, tilts)
        w = exact.find_shearer_witness(d, BlockWeights.glauber(n), budget, cfg.seed, maxiter).value
        return beta, recs, w, exact.spectral_independence(d)

    out = _pmap(one, deltas, workers)
    checks, rows = [], []
    for delta, (beta, recs, w, si) in zip(deltas, out):
        wm = min(min(r["margin"], 1e-9 - r["max_imag"]) for r in recs)
        checks.append(CheckReport(f"covariance-influence[delta={delta}]", margin_verdict(wm, SLACK), wm, recs,
                                  {"beta": beta, "spectral_independence": si, "witnessed_constant": w}))
        rows.append([delta, beta, si, w])
    return checks, {}, {"scan": (["delta", "beta", "spectral_independence", "witnessed_constant"], rows)}


def exp_critical_ising_check(cfg, workers):
    p = cfg.params
    degree = int(p.get("degree", 3))
    ns = p.get("ns", [4, 6, 8, 10])
    beta = model.critical_beta(degree)
    budget, maxiter = cfg.budget("witness_budget"), cfg.budget("maxiter")

    def one(n):
        sys = _ising_graph_system(n, degree, beta, int(p.get("graph_seed", cfg.seed)))
        return exact.find_shearer_witness(exact.gibbs_distribution(sys), BlockWeights.glauber(n),
                                          budget, cfg.seed, maxiter).value

    vals = _pmap(one, ns, workers)
    limit = 1 + 2 / (degree - 2)
    slope, err = _fit_loglog(ns, vals)
    margin = limit + err - slope
    rec = [{"n": n, "witnessed": v} for n, v in zip(ns, vals)]
    c = CheckReport("critical-ising-growth", margin_verdict(margin), margin, rec,
                    {"beta": beta, "slope": slope, "slope_stderr": err, "limit": limit})
    return [c], {"slope": slope, "slope_stderr": err}, {"scan": (["n", "witnessed_constant"], [[n, v] for n, v in zip(ns, vals)])}


def _psd_system(cfg):
    m = build_model(cfg.params)
    if isinstance(m, exact.Distribution):
        raise ConfigError("localization experiments need a spin system, not a product table")
    return model.psd_shift(m)


def exp_localization_martingale(cfg, workers):
    sys = _psd_system(cfg)
    T = float(cfg.params.get("T", 1.0))
    dt, paths = cfg.budget("dt"), cfg.budget("paths")
    space = exact.Space.uniform(sys.n, sys.q)
    probes = cfg.params.get("probes")
    if probes is None:
        rng = np.random.default_rng([cfg.seed, 3])
        probes = [space.configs[i].tolist() for i in sorted(rng.choice(space.size, min(4, space.size), replace=False))]
    times = sorted(set(cfg.params.get("times", [T])))
    sim = localization.simulate(sys, max(times), dt, paths, cfg.seed, record=[0.0] + times)
    checks = []
    for t in times:
        recs = []
        for eta in probes:
            r = localization.martingale_check(sys, eta, t, sim=_at(sim, t))
            recs.append({"eta": list(eta), "T": t, "bias": r.bias, "stderr": r.stderr, "allowance": r.allowance,
                         "normalization_error": r.normalization_error, "verdict": r.verdict})
        wm = min(r["allowance"] + 3 * r["stderr"] - abs(r["bias"]) for r in recs)
        checks.append(CheckReport(f"martingale[T={t}]", worst(r["verdict"] for r in recs), wm, recs,
                                  {"allowance_constant": localization.DEFAULT_ALLOWANCE}))
    P1 = sim.probs(max(times))
    if max(times) == 1.0:
        off = localization.batch_off_block_covariance(sim.target, P1)
        checks.append(CheckReport("t1-product", PASS if off.max() < 1e-12 else FAIL, 1e-12 - float(off.max()), [],
                                  {"max_off_block_covariance": float(off.max())}))
    return checks, {}, {}


def _at(sim, t):
    """View of a simulation whose last recorded time is t."""
    k = sim.index_of(t)
    keep = [i for i in range(k + 1)]
    return localization.Paths(sim.target, sim.times[keep], sim.ys[keep], sim.dt, sim.seed)


def exp_localization_covariance(cfg, workers):
    sys = _psd_system(cfg)
    delta = float(cfg.params.get("delta", max(0.0, 1 - model.max_eigenvalue(sys.gamma))))
    t_grid = cfg.params.get("t_grid", [0.0, 0.25, 0.5, 0.75, 1.0])
    rep = localization.covariance_bound_check(sys, delta, t_grid, int(cfg.params.get("v_samples", 50)), cfg.seed,
                                              y_paths=int(cfg.params.get("y_paths", 4)))
    return [rep], {}, {}


def exp_localization_stability(cfg, workers):
    sys = _psd_system(cfg)
    delta = float(cfg.params.get("delta", max(0.0, 1 - model.max_eigenvalue(sys.gamma))))
    n_funcs = int(cfg.params.get("functions", 20))
    rng = np.random.default_rng([cfg.seed, 5])
    F = rng.exponential(size=(n_funcs, sys.q ** sys.n))
    dt, paths = cfg.budget("dt"), cfg.budget("paths")
    sim = localization.simulate(sys, 1.0, dt, paths, cfg.seed)
    res = localization.entropic_stability_check(sys, delta, F, sim=sim)
    recs = [{"f": k, "lhs": r.lhs, "rhs": r.rhs, "stderr": r.stderr, "allowance": r.allowance, "verdict": r.verdict}
            for k, r in enumerate(res)]
    wm = min(r.lhs - r.rhs + 3 * r.stderr + r.allowance for r in res)
    checks = [CheckReport("entropic-stability", worst(r.verdict for r in res), wm, recs,
                          {"c_delta": localization.c_delta(delta, sys.n), "delta": delta})]
    if cfg.params.get("submartingale", True):
        sub_sim = localization.simulate(sys, 1.0, dt, paths, cfg.seed, record=[0.0, 0.25, 0.5, 1.0])
        checks.append(localization.submartingale_check(sys, parse_alpha(cfg.alpha, sys.n), F[0], sim=sub_sim))
    return checks, {}, {}


def exp_multicomponent_R(cfg, workers):
    p = cfg.params
    if "manifest" in p:
        cs = multicomponent.from_manifest(p["manifest"])
        comps = list(cs.components)
    else:
        comps = [multicomponent.conditioned_bernoulli(int(c.get("L", 3)), c.get("probs", [0.5] * int(c.get("L", 3))),
                                                      int(c.get("k", 1))) for c in p.get("components", [{}])]
    budget = cfg.budget("r_budget")
    sups = _pmap(lambda ic: multicomponent.sup_sigma_psi(ic[1], budget, cfg.seed + ic[0]), enumerate(comps), workers)
    R = 2 * max(s.value for s in sups)
    limit = float(p.get("R_bound", 2.0))
    margin = limit + 1e-6 - R
    recs = [{"component": i, "sup_lambda": s.value, "boundary_hit": s.boundary_hit, "evaluations": s.evaluations}
            for i, s in enumerate(sups)]
    return [CheckReport("R-bound", margin_verdict(margin), margin, recs, {"R_estimate": R, "R_bound": limit})], \
        {"R_estimate": R}, {}


def exp_multicomponent_tensorization(cfg, workers):
    p = cfg.params
    lam = float(p.get("lambda_gamma", 0.1))
    n_each, beta = int(p.get("n", 3)), float(p.get("beta", 0.5))
    k = int(p.get("components", 2))
    C = float(p.get("C", 1 / (1 - beta)))
    rng = np.random.default_rng([cfg.seed, 9])
    cw = exact.gibbs_distribution(model.build_curie_weiss(n_each, beta))
    M = k * cw.space.dim
    cs = multicomponent.ComponentSystem([cw] * k, exact.random_psd(M, lam, rng), None)
    alpha = parse_alpha(cfg.alpha, cs.space.n)
    rep = multicomponent.tensorization_check(cs, [C] * k, alpha, cfg.budget("witness_budget"), cfg.seed,
                                             n_fields=int(p.get("field_draws", 2)), R_budget=cfg.budget("r_budget"))
    return [rep], {"constant": rep.details["constant"], "R_estimate": rep.details["R_estimate"]}, {}


REGISTRY = {
    "verify-shearer": (exp_verify_shearer, "witnessed Shearer constant of one model against its guaranteed bound"),
    "curie-weiss-scan": (exp_curie_weiss_scan, "Curie-Weiss constants over beta against (1 - beta)^-1"),
    "critical-cw-scan": (exp_critical_cw_scan, "critical Curie-Weiss: growth exponent of the constant in n"),
    "sk-spectrum": (exp_sk_spectrum, "spin-glass coupling spectrum and Shearer bound at small n"),
    "ising-uniqueness-scan": (exp_ising_uniqueness_scan, "tree-uniqueness Ising: influence matrix and covariance"),
    "critical-ising-check": (exp_critical_ising_check, "critical Ising on regular graphs: polynomial growth"),
    "localization-martingale": (exp_localization_martingale, "stochastic localization martingale and t=1 product"),
    "localization-covariance": (exp_localization_covariance, "stochastic localization covariance bound over t and tilts"),
    "localization-stability": (exp_localization_stability, "stochastic localization entropic stability and submartingale"),
    "multicomponent-R": (exp_multicomponent_R, "witnessed R for sum-conditioned Bernoulli components"),
    "multicomponent-tensorization": (exp_multicomponent_tensorization, "Shearer tensorization for coupled Curie-Weiss components"),
}


def list_experiments(pattern: str = "") -> list:
    return [(name, desc) for name, (_, desc) in REGISTRY.items() if pattern in name]


def run(config, seed: int | None = None, workers: int | None = None, out=None) -> Report:
    """Run a config (dict or ExperimentConfig); keyword arguments override config fields."""
    cfg = config if isinstance(config, ExperimentConfig) else ExperimentConfig.from_dict(config)
    if seed is not None:
        cfg.seed = seed
    if workers is not None:
        cfg.workers = workers
    if out is not None:
        cfg.out = str(out)
    if cfg.experiment not in REGISTRY:
        raise UnknownExperimentError(cfg.experiment)
    fn = REGISTRY[cfg.experiment][0]
    start = time.perf_counter()
    checks, fitted, series = fn(cfg, cfg.workers or os.cpu_count() or 1)
    report = Report(cfg.experiment, cfg.seed, cfg.payload(), checks, fitted, series,
                    time.perf_counter() - start)
    if cfg.out:
        report.write(cfg.out)
    return report
