"""Stochastic localization on a two-spin Ising model."""
import numpy as np

from entrofact import localization as loc, model

sys = model.psd_shift(model.build_potts(model.complete_graph(2), 0.3, 2))
sim = loc.simulate(sys, 1.0, 1e-3, paths=4000, seed=0, record=[0.0, 0.25, 0.5, 1.0])
print("E[rho_t(eta)] stays at rho(eta):")
for eta in ([1, 1], [1, 2]):
    i = sim.target.space.index(eta)
    row = "  ".join(f"t={t:.2f} {sim.probs(t)[:, i].mean():.4f}" for t in sim.times)
    print(f"  eta={eta}  {row}")

off = loc.batch_off_block_covariance(sim.target, sim.probs(1.0))
print(f"max off-block covariance of rho_1 over {off.size} paths: {off.max():.2e}")

delta = loc.system_delta(sys)
f = np.random.default_rng(1).exponential(size=4)
r = loc.entropic_stability_check(sys, delta, f, sim=sim)
print(f"E[Ent_rho1 f] = {r.lhs:.4f} +- {r.stderr:.4f}  vs  c_delta Ent f = {r.rhs:.4f}  ({r.verdict})")
