"""Witnessed Shearer constants and block dynamics on small Curie-Weiss models."""
from entrofact import dynamics, exact, model
from entrofact.exact import BlockWeights

n = 6
print(f"Curie-Weiss n={n}: witnessed constant vs (1 - beta)^-1")
for beta in (0.2, 0.5, 0.8, 1.0):
    d = exact.gibbs_distribution(model.build_curie_weiss(n, beta))
    c = exact.estimate_best_constant(d, BlockWeights.glauber(n), budget=50)
    bound = 1 / (1 - beta) if beta < 1 else float("inf")
    print(f"  beta={beta:.1f}  witnessed {c:.4f}  bound {bound:.4f}")

d = exact.gibbs_distribution(model.build_curie_weiss(4, 0.5))
k = dynamics.block_kernel(d, BlockWeights.glauber(4))
gamma = exact.min_cover(BlockWeights.glauber(4))
C = exact.estimate_best_constant(d, BlockWeights.glauber(4), budget=50)
print("\nGlauber dynamics, Curie-Weiss n=4 beta=0.5")
print(f"  entropy contraction (upper)  {dynamics.contraction_rate(d, k, budget=50):.4f}")
print(f"  gamma / C (lower)            {gamma / C:.4f}")
print(f"  variance contraction         {dynamics.variance_contraction(k):.4f}")
print(f"  spectral gap                 {dynamics.spectral_gap(k):.4f}")
print(f"  TV mixing time (eps=1/4)     {dynamics.mixing_time_tv(k, 0.25)}")
