"""
Routing inside one tree
=======================

Labels list the light edges on the root path; at most log2 n of them.
"""

import math
import numpy as np
from hopsets.graph import gen_graph
from hopsets.treeroute import Tree, build_tree_routing, route_in_tree

g = gen_graph("tree", 500, seed=3)
tree = Tree.from_graph(g)
ts = build_tree_routing(tree, "root", host=g, simulate=True, seed=3)
ex = build_tree_routing(tree, "exact", host=g)

lens = np.array([len(lab.edges) for lab in ts.labels.values()])
print("label lengths:", np.bincount(lens), " log2 n =", math.ceil(math.log2(g.n)))
print("peak simulated memory:", ts.sim["peak_memory_words"], "words")

x, y = 17, 321
p = route_in_tree(ts, x, ts.labels[y])
q = route_in_tree(ex, x, ex.labels[y])
print("through the root:", len(p) - 1, "hops, length", ts.path_length(p))
print("direct:          ", len(q) - 1, "hops, length", ex.path_length(q))
