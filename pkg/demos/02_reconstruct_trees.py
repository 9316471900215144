"""From character data to distance trees.

Hamming distances under the three missing-data policies, then neighbor
joining and UPGMA on the same matrix.
"""

from synphylo import Policy, distance_matrix, format_distance_matrix, neighbor_joining, sswl_latin, upgma
from synphylo.tree import emit_newick, rf_distance

data = sswl_latin()

for policy in Policy:
    d = distance_matrix(data, policy)
    print(f"policy {policy.value}:")
    print(format_distance_matrix(d, lower=True, precision=4))

d = distance_matrix(data)
nj = neighbor_joining(d)
avg = upgma(d)
print("neighbor joining:", emit_newick(nj))
print("UPGMA:           ", emit_newick(avg))
# UPGMA is rooted; compare unrooted topologies.
print("RF distance between them:", rf_distance(nj, avg))
