"""
Hop reduction on a random graph
===============================

Build a hopset, then watch how few hops a shortest path needs afterwards.
"""

import numpy as np
from hopsets.graph import gen_graph, bounded_bf, distance_matrix
from hopsets.hopset import HopsetParams, build_hopset
from hopsets.verify import verify_hopset

g = gen_graph("gnp", 400, seed=1, p=0.015, wmin=1, wmax=100, largest_cc=True)
print(g.n, "vertices,", g.m, "edges")

# exact distances from vertex 0, and what a few hops of Bellman-Ford reach
exact = distance_matrix(g, [0])[0]
for beta in (2, 4, 8, 16):
    reached = np.isfinite(bounded_bf(g, [0], beta).dist).sum()
    print(f"beta={beta:2d}: {reached} vertices reached without shortcuts")

params = HopsetParams(2, "improved", eps=0.5)
h = build_hopset(g, params, seed=1)
print("hopset edges:", h.size, " probabilities:", np.round(params.probabilities(g.n), 4))

# with the shortcuts, how many hops does each pair need for a 1.5 approximation?
rep = verify_hopset(g, h, 0.5, params.sequential_beta(), "sample", seed=1, count=100)
print("violations:", len(rep.violations))
print("hops needed:", rep.histogram())

# compare against no hopset at all
bare = verify_hopset(g, None, 0.5, 3, "sample", seed=1, count=100)
print("without hopset, pairs failing at 3 hops:", len(bare.violations), "of", bare.pairs)
