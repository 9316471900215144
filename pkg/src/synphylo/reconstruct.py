"""Distance-based tree building: neighbor joining and UPGMA.

Both algorithms work in exact rational arithmetic. Ties in the selection
criterion go to the smallest ``(i, j)`` index pair of the current working
matrix, where a merged cluster takes the slot of its lower index.
"""

from fractions import Fraction

from .distance import DistanceMatrix
from .tree import PhyloTree, TreeError

__all__ = ["neighbor_joining", "upgma"]


def _prepare(d: DistanceMatrix, minimum):
    if not isinstance(d, DistanceMatrix):
        d = DistanceMatrix(*d)
    n = len(d.labels)
    if n < minimum:
        raise TreeError(f"need at least {minimum} taxa, got {n}")
    # DistanceMatrix already rejects NaN, negative and asymmetric input.
    return [list(row) for row in d.entries], list(d.labels)


def neighbor_joining(d: DistanceMatrix):
    """Unrooted binary tree by neighbor joining.

    A negative branch length produced by a join is set to zero and the
    deficit is moved onto the sibling branch, so the pair's path length
    still equals their input distance.
    """
    dist, labels = _prepare(d, 3)
    n = len(labels)
    edges = []
    leaf_labels = dict(enumerate(labels))
    active = list(range(n))
    next_node = n

    while len(active) > 2:
        r = len(active)
        totals = [sum(row) for row in dist]
        best = None
        for i in range(r):
            for j in range(i + 1, r):
                q = (r - 2) * dist[i][j] - totals[i] - totals[j]
                if best is None or q < best[0]:
                    best = (q, i, j)
        _, i, j = best
        dij = dist[i][j]
        li = dij / 2 + (totals[i] - totals[j]) / (2 * (r - 2))
        lj = dij - li
        if li < 0:
            li, lj = Fraction(0), dij
        elif lj < 0:
            li, lj = dij, Fraction(0)

        u = next_node
        next_node += 1
        edges.append((u, active[i], li))
        edges.append((u, active[j], lj))

        new_row = [(dist[i][k] + dist[j][k] - dij) / 2 for k in range(r)]
        new_row[i] = Fraction(0)
        for k in range(r):
            dist[i][k] = dist[k][i] = new_row[k]
        del dist[j]
        for row in dist:
            del row[j]
        active[i] = u
        del active[j]

    a, b = active
    edges.append((a, b, max(dist[0][1], Fraction(0))))
    return PhyloTree(edges, leaf_labels)


def upgma(d: DistanceMatrix):
    """Rooted ultrametric tree by average-linkage clustering.

    Each merge of clusters at distance ``x`` creates a node at height
    ``x / 2``; branch lengths are height differences.
    """
    dist, labels = _prepare(d, 2)
    n = len(labels)
    edges = []
    leaf_labels = dict(enumerate(labels))
    active = list(range(n))
    sizes = [1] * n
    heights = {v: Fraction(0) for v in range(n)}
    next_node = n

    while len(active) > 1:
        r = len(active)
        best = None
        for i in range(r):
            for j in range(i + 1, r):
                if best is None or dist[i][j] < best[0]:
                    best = (dist[i][j], i, j)
        dij, i, j = best
        u = next_node
        next_node += 1
        heights[u] = dij / 2
        for k in (i, j):
            child = active[k]
            edges.append((u, child, heights[u] - heights[child]))

        si, sj = sizes[i], sizes[j]
        new_row = [(si * dist[i][k] + sj * dist[j][k]) / (si + sj) for k in range(r)]
        new_row[i] = Fraction(0)
        for k in range(r):
            dist[i][k] = dist[k][i] = new_row[k]
        del dist[j]
        for row in dist:
            del row[j]
        active[i] = u
        sizes[i] = si + sj
        del active[j]
        del sizes[j]

    return PhyloTree(edges, leaf_labels, root=active[0])
