"""
Compact routing with small tables
=================================

Every vertex keeps a few cluster trees; a packet climbs levels until it
finds a tree holding both ends.
"""

import numpy as np
from hopsets.graph import gen_graph, distance_matrix
from hopsets.routing import build_routing_scheme, route

g = gen_graph("gnp", 300, seed=2, p=4 / 300, largest_cc=True)
d = distance_matrix(g, range(g.n))

for k in (2, 4):
    scheme, trace = build_routing_scheme(g, k, seed=2)
    rep = scheme.size_report()
    print(f"k={k}: tables {rep['max_table_words']} words, labels {rep['max_label_words']} words,"
          f" clusters/vertex {rep['max_clusters_per_vertex']} (bound {rep['cluster_bound']:.0f})")

    stretch = np.array([route(scheme, s, t, exact=d[s, t]).stretch
                        for s in range(0, g.n, 3) for t in range(g.n) if s != t])
    print("   stretch mean %.3f  p99 %.3f  max %.3f  (limit %d)"
          % (stretch.mean(), np.quantile(stretch, 0.99), stretch.max(), 4 * k - 5))

r = route(scheme, 0, g.n - 1, exact=d[0, g.n - 1])
print(r.line())
