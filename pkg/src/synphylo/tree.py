"""Leaf-labelled binary trees, Newick I/O, splits and topology enumeration.

A :class:`PhyloTree` is stored as an undirected graph on integer node ids.
Rooted trees carry a distinguished root of degree two; every other internal
node has degree three. Branch lengths are optional.
"""

import math
import random
from collections import deque
from dataclasses import dataclass
from fractions import Fraction

__all__ = [
    "PhyloTree",
    "Split",
    "TreeError",
    "NewickError",
    "parse_newick",
    "emit_newick",
    "splits",
    "split_lengths",
    "internal_splits",
    "topology_count",
    "enumerate_topologies",
    "random_binary_tree",
    "rf_distance",
]


class TreeError(ValueError):
    pass


class NewickError(TreeError):
    def __init__(self, message, position=None):
        self.position = position
        if position is not None:
            message = f"{message} (at position {position})"
        super().__init__(message)


@dataclass(frozen=True)
class Split:
    """Unordered bipartition of a leaf set.

    Sides are normalized so that ``side_a`` holds the smallest label; two
    splits compare equal whichever order their sides were given in.
    """

    side_a: frozenset
    side_b: frozenset

    def __post_init__(self):
        a, b = frozenset(self.side_a), frozenset(self.side_b)
        if not a or not b:
            raise TreeError("both sides of a split must be nonempty")
        if a & b:
            raise TreeError(f"split sides overlap on {sorted(a & b)}")
        if min(b) < min(a):
            a, b = b, a
        object.__setattr__(self, "side_a", a)
        object.__setattr__(self, "side_b", b)

    @property
    def leaves(self):
        return self.side_a | self.side_b

    @property
    def is_trivial(self):
        return min(len(self.side_a), len(self.side_b)) < 2

    def side_of(self, label):
        return self.side_a if label in self.side_a else self.side_b

    def __str__(self):
        return "{%s}|{%s}" % (",".join(sorted(self.side_a)), ",".join(sorted(self.side_b)))


def _check_length(length):
    if length is None:
        return None
    if isinstance(length, float) and (math.isnan(length) or math.isinf(length)):
        raise TreeError(f"branch length must be finite, got {length}")
    if length < 0:
        raise TreeError(f"branch length must be nonnegative, got {length}")
    return length


class PhyloTree:
    """Binary tree with labelled leaves.

    Parameters
    ----------
    edges : iterable of ``(u, v)`` or ``(u, v, length)``
        Node ids are integers. Orientation is irrelevant: for rooted trees
        parent/child relations are derived from ``root``.
    leaf_labels : mapping node -> str
        Labels for exactly the degree-one nodes.
    root : int, optional
        A degree-two node; omit for an unrooted tree.
    names : mapping node -> str, optional
        Names of internal nodes (kept for Newick output, ignored otherwise).
    """

    def __init__(self, edges, leaf_labels, root=None, names=None):
        adj = {}
        lengths = {}
        for edge in edges:
            u, v = edge[0], edge[1]
            length = _check_length(edge[2] if len(edge) > 2 else None)
            if u == v:
                raise TreeError(f"self-loop at node {u}")
            key = frozenset((u, v))
            if key in lengths:
                raise TreeError(f"duplicate edge {u}-{v}")
            lengths[key] = length
            adj.setdefault(u, []).append(v)
            adj.setdefault(v, []).append(u)
        labels = dict(leaf_labels)
        for node in labels:
            adj.setdefault(node, [])

        self._adj = {v: tuple(nbrs) for v, nbrs in adj.items()}
        self._lengths = lengths
        self._labels = labels
        self._names = dict(names or {})
        self._root = root
        self._by_label = {label: node for node, label in labels.items()}
        self._validate()
        self._parent = self._orient() if root is not None else None

    def _validate(self):
        nodes = self._adj
        labels = self._labels
        if len(labels) < 2:
            raise TreeError("a tree needs at least two leaves")
        if len(self._by_label) != len(labels):
            seen, dupes = set(), set()
            for label in labels.values():
                (dupes if label in seen else seen).add(label)
            raise TreeError(f"duplicate leaf labels: {sorted(dupes)}")
        for node, label in labels.items():
            if not isinstance(label, str) or not label:
                raise TreeError(f"leaf {node} has an empty label")
        if len(self._lengths) != len(nodes) - 1:
            raise TreeError("graph is not a tree (edge count != node count - 1)")
        start = next(iter(nodes))
        seen = {start}
        queue = deque([start])
        while queue:
            for w in nodes[queue.popleft()]:
                if w not in seen:
                    seen.add(w)
                    queue.append(w)
        if len(seen) != len(nodes):
            raise TreeError("graph is not connected")
        if self._root is not None and self._root not in nodes:
            raise TreeError(f"root {self._root} is not a node")
        for node, nbrs in nodes.items():
            deg = len(nbrs)
            if node == self._root:
                if deg != 2:
                    raise TreeError(f"root must have degree 2, has {deg}")
            elif deg == 1:
                if node not in labels:
                    raise TreeError(f"leaf node {node} has no label")
            elif deg != 3:
                raise TreeError(f"internal node {node} has degree {deg}; tree is not binary")
            if deg != 1 and node in labels:
                raise TreeError(f"labelled node {node} is not a leaf")

    def _orient(self):
        parent = {self._root: None}
        queue = deque([self._root])
        while queue:
            v = queue.popleft()
            for w in self._adj[v]:
                if w not in parent:
                    parent[w] = v
                    queue.append(w)
        return parent

    # -- basic accessors -------------------------------------------------

    @property
    def root(self):
        return self._root

    @property
    def is_rooted(self):
        return self._root is not None

    @property
    def nodes(self):
        return tuple(sorted(self._adj))

    @property
    def leaf_labels(self):
        return dict(self._labels)

    @property
    def names(self):
        return dict(self._names)

    @property
    def leaves(self):
        """Leaf labels ordered by node id (Newick appearance order after parsing)."""
        return tuple(self._labels[v] for v in sorted(self._labels))

    @property
    def n_leaves(self):
        return len(self._labels)

    @property
    def edges(self):
        """``(u, v, length)`` triples; oriented parent -> child on rooted trees."""
        out = []
        if self.is_rooted:
            for v in self.nodes:
                p = self._parent[v]
                if p is not None:
                    out.append((p, v, self._lengths[frozenset((p, v))]))
        else:
            for key, length in self._lengths.items():
                u, v = sorted(key)
                out.append((u, v, length))
            out.sort(key=lambda e: (e[0], e[1]))
        return tuple(out)

    def neighbors(self, v):
        return self._adj[v]

    def is_leaf(self, v):
        return v in self._labels

    def label(self, v):
        return self._labels.get(v)

    def node_of(self, label):
        try:
            return self._by_label[label]
        except KeyError:
            raise TreeError(f"no leaf labelled {label!r}") from None

    def length(self, u, v):
        return self._lengths[frozenset((u, v))]

    def parent(self, v):
        self._require_rooted()
        return self._parent[v]

    def children(self, v):
        self._require_rooted()
        return tuple(w for w in self._adj[v] if self._parent.get(w) == v)

    def _require_rooted(self):
        if not self.is_rooted:
            raise TreeError("operation requires a rooted tree; root it explicitly first")

    def postorder(self):
        """Nodes of a rooted tree, children before parents."""
        self._require_rooted()
        order = []
        stack = [self._root]
        while stack:
            v = stack.pop()
            order.append(v)
            stack.extend(self.children(v))
        return order[::-1]

    def preorder(self):
        return self.postorder()[::-1]

    # -- derived trees ---------------------------------------------------

    def unrooted(self):
        """Same topology with the degree-two root suppressed."""
        if not self.is_rooted:
            return self
        a, b = self._adj[self._root]
        la, lb = self.length(self._root, a), self.length(self._root, b)
        if la is None and lb is None:
            merged = None
        else:
            merged = (la or 0) + (lb or 0)
        edges = [(u, v, l) for u, v, l in self.edges if self._root not in (u, v)]
        edges.append((a, b, merged))
        names = {k: v for k, v in self._names.items() if k != self._root}
        return PhyloTree(edges, self._labels, names=names)

    def root_on_edge(self, u, v, position=Fraction(1, 2)):
        """Insert a root on edge ``u``-``v``.

        ``position`` is the fraction of the edge length placed between ``u``
        and the new root. The tree must be unrooted.
        """
        if self.is_rooted:
            raise TreeError("tree is already rooted; call unrooted() first")
        key = frozenset((u, v))
        if key not in self._lengths:
            raise TreeError(f"no edge {u}-{v}")
        length = self._lengths[key]
        r = max(self._adj) + 1
        edges = [(a, b, l) for a, b, l in self.edges if frozenset((a, b)) != key]
        if length is None:
            edges += [(r, u, None), (r, v, None)]
        else:
            edges += [(r, u, length * position), (r, v, length - length * position)]
        return PhyloTree(edges, self._labels, root=r, names=self._names)

    def rooted_at_leaf(self, label, position=Fraction(1, 2)):
        """Root on the pendant edge of ``label``."""
        t = self.unrooted()
        leaf = t.node_of(label)
        return t.root_on_edge(leaf, t.neighbors(leaf)[0], position)

    def relabel(self, mapping):
        labels = {v: mapping.get(label, label) for v, label in self._labels.items()}
        return PhyloTree(self.edges, labels, root=self._root, names=self._names)

    # -- topology --------------------------------------------------------

    def splits(self):
        return splits(self)

    def internal_splits(self):
        return internal_splits(self)

    def path_distances(self):
        """Leaf-to-leaf path lengths as a dict keyed by label pairs.

        Computed on the unrooted tree, so a single unlabelled root edge
        counts as length zero.
        """
        if self.is_rooted:
            return self.unrooted().path_distances()
        out = {}
        for label, start in self._by_label.items():
            dist = {start: 0}
            queue = deque([start])
            while queue:
                v = queue.popleft()
                for w in self._adj[v]:
                    if w not in dist:
                        length = self.length(v, w)
                        if length is None:
                            raise TreeError("path distances need branch lengths on every edge")
                        dist[w] = dist[v] + length
                        queue.append(w)
            for other, node in self._by_label.items():
                out[label, other] = dist[node]
        return out

    def __eq__(self, other):
        if not isinstance(other, PhyloTree):
            return NotImplemented
        return emit_newick(self) == emit_newick(other)

    def __hash__(self):
        return hash(emit_newick(self))

    def __repr__(self):
        return f"PhyloTree({emit_newick(self)!r})"


def splits(t: PhyloTree):
    """One :class:`Split` per edge of the unrooted tree."""
    return list(split_lengths(t))


def split_lengths(t: PhyloTree):
    """Map each split of the unrooted tree to its edge length (or None)."""
    u = t.unrooted()
    all_leaves = frozenset(u._labels.values())
    start = min(u._adj)
    parent = {start: None}
    order = [start]
    for v in order:
        for w in u._adj[v]:
            if w not in parent:
                parent[w] = v
                order.append(w)
    below = {}
    for v in reversed(order):
        acc = {u._labels[v]} if v in u._labels else set()
        for w in u._adj[v]:
            if parent.get(w) == v:
                acc |= below[w]
        below[v] = frozenset(acc)
    return {Split(below[v], all_leaves - below[v]): u.length(parent[v], v) for v in order[1:]}


def internal_splits(t: PhyloTree):
    """Splits with at least two leaves on each side."""
    return [s for s in splits(t) if not s.is_trivial]


# -- Newick ---------------------------------------------------------------

_SPECIAL = set("(),:;[]'")


class _NewickReader:
    def __init__(self, text):
        self.text = text
        self.pos = 0

    def skip(self):
        text = self.text
        while self.pos < len(text):
            ch = text[self.pos]
            if ch.isspace():
                self.pos += 1
            elif ch == "[":
                end = text.find("]", self.pos)
                if end < 0:
                    raise NewickError("unterminated comment", self.pos)
                self.pos = end + 1
            else:
                break

    def peek(self):
        self.skip()
        return self.text[self.pos] if self.pos < len(self.text) else ""

    def expect(self, ch):
        if self.peek() != ch:
            found = self.peek() or "end of input"
            raise NewickError(f"expected {ch!r}, found {found!r}", self.pos)
        self.pos += 1

    def name(self):
        self.skip()
        text = self.text
        if self.pos < len(text) and text[self.pos] == "'":
            chars = []
            i = self.pos + 1
            while True:
                if i >= len(text):
                    raise NewickError("unterminated quoted name", self.pos)
                if text[i] == "'":
                    if i + 1 < len(text) and text[i + 1] == "'":
                        chars.append("'")
                        i += 2
                        continue
                    break
                chars.append(text[i])
                i += 1
            self.pos = i + 1
            return "".join(chars)
        start = self.pos
        while self.pos < len(text) and text[self.pos] not in _SPECIAL and not text[self.pos].isspace():
            self.pos += 1
        return text[start : self.pos]

    def length(self):
        if self.peek() != ":":
            return None
        self.pos += 1
        self.skip()
        start = self.pos
        token = self.name()
        try:
            value = Fraction(token)
        except ValueError:
            raise NewickError(f"invalid branch length {token!r}", start) from None
        if value < 0:
            raise NewickError(f"negative branch length {token!r}", start)
        return value

    def subtree(self):
        """Return ``(name, length, children)``; ``children`` is None for leaves."""
        if self.peek() == "(":
            self.pos += 1
            children = [self.subtree()]
            while self.peek() == ",":
                self.pos += 1
                children.append(self.subtree())
            self.expect(")")
            name = self.name() or None
            return name, self.length(), children
        start = self.pos
        name = self.name()
        if not name:
            raise NewickError("empty leaf name", start)
        return name, self.length(), None


def parse_newick(text):
    """Parse a Newick string.

    A top-level node with two children becomes the root of a rooted tree;
    with three children the tree is unrooted. Node ids follow preorder.

    >>> t = parse_newick("((A,B),(C,D));")
    >>> [str(s) for s in t.internal_splits()]
    ['{A,B}|{C,D}']
    """
    reader = _NewickReader(text.strip())
    top = reader.subtree()
    reader.expect(";")
    if reader.peek():
        raise NewickError("unexpected text after ';'", reader.pos)

    edges, labels, names = [], {}, {}
    counter = 0
    stack = [(top, None)]
    while stack:
        (name, length, children), parent = stack.pop()
        node = counter
        counter += 1
        if parent is not None:
            edges.append((parent, node, length))
        if children is None:
            if name in labels.values():
                raise NewickError(f"duplicate leaf name {name!r}")
            labels[node] = name
        else:
            if len(children) == 1:
                raise NewickError("internal node with a single child")
            if name:
                names[node] = name
            stack.extend((child, node) for child in reversed(children))

    top_children = top[2]
    if top_children is None:
        raise NewickError("a tree needs at least two leaves")
    root = 0 if len(top_children) == 2 else None
    try:
        return PhyloTree(edges, labels, root=root, names=names)
    except NewickError:
        raise
    except TreeError as exc:
        raise NewickError(str(exc)) from None


def format_length(x):
    """Shortest exact decimal for terminating fractions, else float repr."""
    if isinstance(x, Fraction):
        den = x.denominator
        twos = fives = 0
        while den % 2 == 0:
            den //= 2
            twos += 1
        while den % 5 == 0:
            den //= 5
            fives += 1
        if den == 1:
            places = max(twos, fives)
            digits = abs(x.numerator) * 10**places // x.denominator
            sign = "-" if x < 0 else ""
            whole, frac = divmod(digits, 10**places)
            if places == 0:
                return f"{sign}{whole}"
            frac_str = f"{frac:0{places}d}".rstrip("0")
            return f"{sign}{whole}.{frac_str}" if frac_str else f"{sign}{whole}"
        return repr(float(x))
    if isinstance(x, int):
        return str(x)
    return repr(float(x))


def _quote(name):
    if any(ch in _SPECIAL or ch.isspace() for ch in name):
        return "'" + name.replace("'", "''") + "'"
    return name


def emit_newick(t: PhyloTree):
    """Canonical Newick text.

    Children are ordered by their smallest leaf label. Unrooted trees are
    written from the internal node next to the smallest leaf label.
    """
    adj = t._adj
    if t.is_rooted:
        top = t.root
    elif len(adj) == 2:
        a, b = sorted(t._labels, key=t._labels.get)
        length = t.length(a, b)
        tail = "" if length is None else ":" + format_length(length)
        return f"({_quote(t._labels[a])}{tail},{_quote(t._labels[b])});"
    else:
        first = min(t._labels, key=t._labels.get)
        top = adj[first][0]

    min_label = {}
    parent = {top: None}
    order = [top]
    for v in order:
        for w in adj[v]:
            if w not in parent:
                parent[w] = v
                order.append(w)
    kids = {v: [] for v in order}
    for v in order[1:]:
        kids[parent[v]].append(v)
    for v in reversed(order):
        if v in t._labels:
            min_label[v] = t._labels[v]
        else:
            kids[v].sort(key=min_label.get)
            min_label[v] = min_label[kids[v][0]]

    def render(v):
        if v in t._labels:
            out = _quote(t._labels[v])
        else:
            out = "(" + ",".join(render(w) for w in kids[v]) + ")"
            if v in t._names:
                out += _quote(t._names[v])
        if parent[v] is not None:
            length = t.length(parent[v], v)
            if length is not None:
                out += ":" + format_length(length)
        return out

    return render(top) + ";"


# -- counting and enumeration --------------------------------------------


def topology_count(n):
    """Number of leaf-labelled unrooted binary topologies on ``n`` leaves."""
    if not isinstance(n, int) or n < 3:
        raise TreeError(f"topology count is defined for n >= 3, got {n!r}")
    return math.factorial(2 * n - 4) // (math.factorial(n - 2) * 2 ** (n - 2))


MAX_ENUMERATION_LEAVES = 8


def _grow(edges, k, n, next_node):
    if k == n:
        yield edges
        return
    for i, (u, v) in enumerate(edges):
        w = next_node
        grown = edges[:i] + [(u, w), (w, v), (k, w)] + edges[i + 1 :]
        yield from _grow(grown, k + 1, n, next_node + 1)


def enumerate_topologies(taxa):
    """All unrooted binary topologies on ``taxa`` (3 to 8 leaves).

    Built by stepwise addition: each new taxon is attached to every edge of
    every tree on the previous taxa.
    """
    taxa = tuple(taxa)
    n = len(taxa)
    if not 3 <= n <= MAX_ENUMERATION_LEAVES:
        raise TreeError(f"enumeration supports 3..{MAX_ENUMERATION_LEAVES} taxa, got {n}")
    if len(set(taxa)) != n:
        raise TreeError("taxa must be distinct")
    labels = dict(enumerate(taxa))
    start = [(0, n), (1, n), (2, n)]
    return [PhyloTree(edges, labels) for edges in _grow(start, 3, n, n + 1)]


def random_binary_tree(taxa, rng=None, length=None, rooted=False):
    """Random unrooted binary tree by uniform stepwise addition.

    ``length`` is an optional callable ``rng -> branch length``. With
    ``rooted=True`` a root is placed at the midpoint of a uniformly chosen
    edge.
    """
    rng = rng if rng is not None else random.Random()
    taxa = list(taxa)
    n = len(taxa)
    if n < 2:
        raise TreeError("need at least two taxa")
    if n == 2:
        edges = [(0, 1)]
        next_node = 2
    else:
        edges = [(0, n), (1, n), (2, n)]
        next_node = n + 1
        for k in range(3, n):
            i = rng.randrange(len(edges))
            u, v = edges[i]
            w = next_node
            next_node += 1
            edges[i : i + 1] = [(u, w), (w, v), (k, w)]
    if length is not None:
        edges = [(u, v, length(rng)) for u, v in edges]
    t = PhyloTree(edges, dict(enumerate(taxa)))
    if rooted:
        u, v, _ = t.edges[rng.randrange(len(t.edges))]
        t = t.root_on_edge(u, v)
    return t


def rf_distance(t1: PhyloTree, t2: PhyloTree):
    """Robinson-Foulds distance: size of the symmetric difference of internal splits."""
    if set(t1.leaves) != set(t2.leaves):
        raise TreeError("trees have different leaf sets")
    return len(set(internal_splits(t1)) ^ set(internal_splits(t2)))
