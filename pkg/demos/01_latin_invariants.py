"""Testing candidate trees for the Latin subfamily with 3x3 minors.

Restrict the bundled character data to five Romance languages, keep only
the parameters mapped for all of them, and measure how far the empirical
distribution is from the phylogenetic variety of each candidate tree.
"""

from synphylo import (
    LATIN_FIVE,
    empirical_distribution,
    epsilon_test,
    format_report,
    fully_mapped,
    latin_tree,
    rank_topology_scan,
    restrict,
    sswl_latin,
)
from synphylo.tree import emit_newick

data = sswl_latin()
print(f"fixture: {len(data.languages)} languages x {len(data.parameters)} parameters")

five = fully_mapped(restrict(data, LATIN_FIVE))
print(f"fully mapped on {', '.join(LATIN_FIVE)}: {len(five.parameters)} parameters")

P = empirical_distribution(five, LATIN_FIVE)
print("\nnonzero outcome frequencies:")
for bits, p in P.nonzero().items():
    print(f"  {bits}  {p}")

# The candidate tree, tested at the default threshold of 1/100.
report = epsilon_test(P, latin_tree())
print()
print(format_report(report), end="")

# Ranking every unrooted topology on five leaves.
print("\nall 15 topologies, best first:")
for tree, score in rank_topology_scan(P):
    print(f"  {float(score):.7f}  {emit_newick(tree)}")
