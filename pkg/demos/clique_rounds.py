"""
Counting rounds in the congested clique
=======================================

Same hopset, built level by level with every exploration charged in rounds.
"""

from hopsets.graph import gen_graph
from hopsets.hopset import HopsetParams
from hopsets.congest import run_clique_hopset, run_congest_hopset, sample_vprime
from hopsets.verify import verify_hopset

g = gen_graph("gnp", 200, seed=4, p=0.05)
params = HopsetParams(2, "efficient", rho=0.5, eps=0.4, strict_rho=False)

h, trace = run_clique_hopset(g, params, seed=4)
print("beta:", h.beta, " |H|:", h.size)
print("rounds:", trace.rounds, " budget:", trace.budget["formula"], "=", round(trace.budget["value"]))
print("rounds / budget:", round(trace.budget["measured_constant"], 3))

for lvl in trace.per_level[:4]:
    print(lvl)

rep = verify_hopset(g, h, 0.4, h.beta, "sample", seed=4, count=50)
print("violations at the recorded beta:", len(rep.violations))

# the same thing on a sampled virtual graph: V' talks over B-hop host paths
vp = sample_vprime(g.n, g.n ** -0.5, seed=4)
hv, tv = run_congest_hopset(g, params, vprime=vp, hop_bound=12, seed=4)
print("|V'| =", len(vp), " |H| =", hv.size, " rounds =", tv.rounds)
