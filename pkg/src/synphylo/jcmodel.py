"""Two-state Jukes-Cantor model on a rooted binary tree.

The root takes state 0 with probability ``pi``. Along an edge into node
``v`` the state flips with probability ``p_v`` (a symmetric bistochastic
channel). Leaf distributions are computed exactly with fractions, either by
summing over every assignment of internal states or by bottom-up pruning.
"""

from collections.abc import Mapping
from dataclasses import dataclass
from fractions import Fraction
from itertools import product

import numpy as np

from .charmatrix import CharacterMatrix
from .tree import PhyloTree, TreeError

__all__ = [
    "ModelError",
    "JCParams",
    "LeafDistribution",
    "param_count",
    "expected_distribution_histories",
    "expected_distribution_pruning",
    "expected_distribution",
    "sample",
    "parse_params",
    "format_params",
    "parse_distribution",
    "format_distribution",
    "parse_rational",
    "format_fraction",
]

HISTORIES_MAX_LEAVES = 20


class ModelError(ValueError):
    pass


def parse_rational(text):
    """``"3/7"`` or ``"0.25"`` to an exact :class:`Fraction`."""
    try:
        return Fraction(text.strip())
    except (ValueError, ZeroDivisionError):
        raise ModelError(f"not a rational number: {text!r}") from None


def format_fraction(x, decimal=False, places=7):
    x = Fraction(x)
    if decimal:
        return f"{float(x):.{places}f}"
    return str(x)


@dataclass(frozen=True)
class JCParams:
    """Root distribution and per-edge flip probabilities.

    ``edge_flip`` maps a child node id to the flip probability of the edge
    above it.
    """

    pi: Fraction
    edge_flip: Mapping

    def __post_init__(self):
        pi = Fraction(self.pi)
        flips = {node: Fraction(p) for node, p in dict(self.edge_flip).items()}
        if not 0 <= pi <= 1:
            raise ModelError(f"root probability must lie in [0, 1], got {pi}")
        for node, p in flips.items():
            if not 0 <= p <= 1:
                raise ModelError(f"flip probability for edge above {node} must lie in [0, 1], got {p}")
        object.__setattr__(self, "pi", pi)
        object.__setattr__(self, "edge_flip", flips)

    @classmethod
    def for_tree(cls, tree: PhyloTree, pi, flips):
        """Build parameters keyed by leaf labels, internal names or node ids."""
        return cls(pi, {_resolve_node(tree, key): p for key, p in flips.items()})

    def check(self, tree: PhyloTree):
        if not tree.is_rooted:
            raise TreeError("the model needs a rooted tree; root it explicitly")
        expected = {v for v in tree.nodes if v != tree.root}
        missing = expected - self.edge_flip.keys()
        extra = self.edge_flip.keys() - expected
        if missing:
            raise ModelError(f"no flip probability for edges above nodes {sorted(missing)}")
        if extra:
            raise ModelError(f"flip probabilities given for unknown edges {sorted(extra)}")


def _resolve_node(tree, key):
    if isinstance(key, int):
        if key not in tree.nodes:
            raise ModelError(f"no node with id {key}")
        return key
    for node, label in tree.leaf_labels.items():
        if label == key:
            return node
    for node, name in tree.names.items():
        if name == key:
            return node
    try:
        node = int(key)
    except ValueError:
        raise ModelError(f"no node labelled {key!r}") from None
    return _resolve_node(tree, node)


@dataclass(frozen=True)
class LeafDistribution:
    """Exact joint distribution of leaf states.

    ``probs[k]`` is the probability of the outcome whose bits, read with the
    first leaf of ``leaf_order`` as the most significant bit, spell ``k``.
    """

    leaf_order: tuple
    probs: tuple

    def __post_init__(self):
        order = tuple(self.leaf_order)
        probs = tuple(Fraction(p) for p in self.probs)
        if len(set(order)) != len(order):
            raise ModelError("leaf order has duplicates")
        if len(probs) != 2 ** len(order):
            raise ModelError(f"expected {2 ** len(order)} probabilities, got {len(probs)}")
        if any(p < 0 for p in probs):
            raise ModelError("probabilities must be nonnegative")
        if sum(probs) != 1:
            raise ModelError(f"probabilities sum to {sum(probs)}, not 1")
        object.__setattr__(self, "leaf_order", order)
        object.__setattr__(self, "probs", probs)

    @property
    def n(self):
        return len(self.leaf_order)

    def index(self, outcome):
        if isinstance(outcome, str):
            bits = [int(ch) for ch in outcome]
        else:
            bits = list(outcome)
        if len(bits) != self.n or any(b not in (0, 1) for b in bits):
            raise ModelError(f"outcome must be {self.n} binary digits, got {outcome!r}")
        k = 0
        for b in bits:
            k = 2 * k + b
        return k

    def __getitem__(self, outcome):
        return self.probs[self.index(outcome)]

    def bitstring(self, k):
        return format(k, f"0{self.n}b")

    def items(self):
        for k, p in enumerate(self.probs):
            yield self.bitstring(k), p

    def nonzero(self):
        return {bits: p for bits, p in self.items() if p}

    def reorder(self, leaf_order):
        """Same distribution with the bit positions permuted to ``leaf_order``."""
        leaf_order = tuple(leaf_order)
        if sorted(leaf_order) != sorted(self.leaf_order):
            raise ModelError("new leaf order must use the same leaves")
        pos = [self.leaf_order.index(label) for label in leaf_order]
        n = self.n
        out = [Fraction(0)] * len(self.probs)
        for k, p in enumerate(self.probs):
            bits = [(k >> (n - 1 - i)) & 1 for i in range(n)]
            j = 0
            for i in pos:
                j = 2 * j + bits[i]
            out[j] = p
        return LeafDistribution(leaf_order, out)


def param_count(n, k=2):
    """Number of stochastic parameters of the model with ``k`` states on ``n`` leaves."""
    if not isinstance(n, int) or not isinstance(k, int) or n < 2 or k < 2:
        raise ModelError(f"need n >= 2 leaves and k >= 2 states, got n={n!r}, k={k!r}")
    return (2 * n - 3) * k * (k - 1) + k - 1


def _leaf_order(tree, leaf_order):
    if leaf_order is None:
        return tree.leaves
    leaf_order = tuple(leaf_order)
    if sorted(leaf_order) != sorted(tree.leaves):
        raise ModelError("leaf order must list exactly the tree's leaves")
    return leaf_order


def _channel(p, a, b):
    return p if a != b else 1 - p


def expected_distribution_histories(tree: PhyloTree, params: JCParams, leaf_order=None):
    """Leaf distribution as a literal sum over all internal-state histories."""
    params.check(tree)
    order = _leaf_order(tree, leaf_order)
    if len(order) > HISTORIES_MAX_LEAVES:
        raise ModelError(f"history summation is limited to {HISTORIES_MAX_LEAVES} leaves")
    root = tree.root
    leaf_nodes = [tree.node_of(label) for label in order]
    internal = [v for v in tree.nodes if not tree.is_leaf(v)]
    edges = [(u, v, params.edge_flip[v]) for u, v, _ in tree.edges]
    root_prob = (params.pi, 1 - params.pi)

    probs = []
    for outcome in product((0, 1), repeat=len(order)):
        state = dict(zip(leaf_nodes, outcome))
        total = Fraction(0)
        for history in product((0, 1), repeat=len(internal)):
            state.update(zip(internal, history))
            term = root_prob[state[root]]
            for u, v, p in edges:
                term *= _channel(p, state[u], state[v])
                if not term:
                    break
            total += term
        probs.append(total)
    return LeafDistribution(order, probs)


def expected_distribution_pruning(tree: PhyloTree, params: JCParams, leaf_order=None):
    """Leaf distribution by bottom-up conditional tables.

    For each node the table holds, per node state, the probability of every
    joint outcome on the leaves below it. Tables of siblings combine by
    outer product, so the cost is linear in ``2**n`` per node.
    """
    params.check(tree)
    order = _leaf_order(tree, leaf_order)
    below = {}
    tables = {}
    for v in tree.postorder():
        if tree.is_leaf(v):
            below[v] = (tree.label(v),)
            one = Fraction(1)
            zero = Fraction(0)
            tables[v] = ([one, zero], [zero, one])
            continue
        cols = []
        leaves = ()
        for c in tree.children(v):
            p = params.edge_flip[c]
            t0, t1 = tables.pop(c)
            # condition on the parent's state: stay with 1 - p, flip with p
            cols.append(
                (
                    [(1 - p) * a + p * b for a, b in zip(t0, t1)],
                    [p * a + (1 - p) * b for a, b in zip(t0, t1)],
                )
            )
            leaves += below.pop(c)
        combined = []
        for s in (0, 1):
            acc = [Fraction(1)]
            for col in cols:
                acc = [x * y for x in acc for y in col[s]]
            combined.append(acc)
        below[v] = leaves
        tables[v] = tuple(combined)

    root = tree.root
    t0, t1 = tables[root]
    joint = [params.pi * a + (1 - params.pi) * b for a, b in zip(t0, t1)]
    return LeafDistribution(below[root], joint).reorder(order)


def expected_distribution(tree, params, leaf_order=None):
    return expected_distribution_pruning(tree, params, leaf_order)


def sample(tree: PhyloTree, params: JCParams, m, seed, leaf_order=None):
    """Simulate ``m`` independent sites.

    Every node owns a Philox stream derived from ``(seed, node position)``;
    site ``j`` uses the ``j``-th draw of each stream, so a site's states do
    not depend on how many other sites are simulated alongside it.
    """
    params.check(tree)
    order = _leaf_order(tree, leaf_order)
    if m < 1:
        raise ModelError("need at least one site")
    nodes = tree.preorder()
    position = {v: i for i, v in enumerate(sorted(tree.nodes))}

    def uniforms(v):
        seq = np.random.SeedSequence([seed, position[v]])
        return np.random.Generator(np.random.Philox(seq)).random(m)

    states = {}
    root = tree.root
    states[root] = (uniforms(root) >= float(params.pi)).astype(np.int8)
    for v in nodes:
        if v == root:
            continue
        flip = uniforms(v) < float(params.edge_flip[v])
        states[v] = states[tree.parent(v)] ^ flip.astype(np.int8)

    rows = [tuple(int(x) for x in states[tree.node_of(label)]) for label in order]
    width = len(str(m))
    names = tuple(f"site{j + 1:0{width}d}" for j in range(m))
    return CharacterMatrix(order, names, rows)


# -- file formats -----------------------------------------------------------


def parse_params(text, tree: PhyloTree):
    """Read ``root <pi>`` and ``edge <child> <p>`` lines.

    ``<child>`` is a leaf label, an internal node name or a node id. Blank
    lines and ``#`` comments are ignored.
    """
    pi = None
    flips = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        tokens = line.split()
        try:
            if tokens[0] == "root" and len(tokens) == 2:
                pi = parse_rational(tokens[1])
            elif tokens[0] == "edge" and len(tokens) == 3:
                node = _resolve_node(tree, tokens[1])
                if node in flips:
                    raise ModelError(f"edge above {tokens[1]!r} given twice")
                flips[node] = parse_rational(tokens[2])
            else:
                raise ModelError(f"unrecognized line {raw.strip()!r}")
        except ModelError as exc:
            raise ModelError(f"line {lineno}: {exc}") from None
    if pi is None:
        raise ModelError("missing 'root <pi>' line")
    params = JCParams(pi, flips)
    params.check(tree)
    return params


def format_params(params: JCParams, tree: PhyloTree):
    lines = [f"root {params.pi}"]
    for _, v, _ in tree.edges:
        key = tree.label(v) or tree.names.get(v) or str(v)
        lines.append(f"edge {key} {params.edge_flip[v]}")
    return "\n".join(lines) + "\n"


def format_distribution(dist: LeafDistribution, decimal=False, zeros=False):
    """Header ``leaves<TAB>l1<TAB>...`` then one ``bitstring value`` line per outcome."""
    lines = ["leaves\t" + "\t".join(dist.leaf_order)]
    for bits, p in dist.items():
        if p or zeros:
            lines.append(f"{bits} {format_fraction(p, decimal)}")
    return "\n".join(lines) + "\n"


def parse_distribution(text):
    lines = [line for line in text.splitlines() if line.strip()]
    if not lines or not lines[0].startswith("leaves"):
        raise ModelError("distribution file must start with a 'leaves' header")
    order = tuple(field for field in lines[0].split("\t")[1:] if field)
    n = len(order)
    probs = [Fraction(0)] * 2**n
    seen = set()
    for lineno, line in enumerate(lines[1:], start=2):
        try:
            bits, value = line.split()
        except ValueError:
            raise ModelError(f"line {lineno}: expected 'bitstring value'") from None
        if len(bits) != n or set(bits) - {"0", "1"}:
            raise ModelError(f"line {lineno}: outcome {bits!r} is not {n} binary digits")
        if bits in seen:
            raise ModelError(f"line {lineno}: outcome {bits} repeated")
        seen.add(bits)
        probs[int(bits, 2)] = parse_rational(value)
    return LeafDistribution(order, probs)
