"""Edge flattenings and 3x3-minor invariants of binary leaf distributions.

Under the two-state model every flattening of the expected leaf
distribution along an edge of the generating tree has rank at most two, so
all of its 3x3 minors vanish. Evaluating those minors on an observed
distribution measures how far it is from being explained by a candidate
tree.
"""

from dataclasses import dataclass, field
from fractions import Fraction
from itertools import combinations
from functools import lru_cache
from math import isqrt, lcm

import numpy as np

from .charmatrix import UNMAPPED, CharacterMatrix
from .jcmodel import LeafDistribution, format_fraction
from .tree import PhyloTree, Split, TreeError, emit_newick, enumerate_topologies, internal_splits

__all__ = [
    "InvariantError",
    "FlatteningMatrix",
    "InvariantReport",
    "empirical_distribution",
    "weighted_empirical_distribution",
    "flatten",
    "minors3",
    "max_abs_minor",
    "epsilon_test",
    "rank_topology_scan",
    "format_report",
    "format_scan",
    "parse_weights",
]

DEFAULT_EPSILON = Fraction(1, 100)


class InvariantError(ValueError):
    pass


def _leaf_columns(m: CharacterMatrix, leaf_order):
    leaf_order = tuple(leaf_order)
    missing = [lang for lang in leaf_order if lang not in m.languages]
    if missing:
        raise InvariantError(f"languages not in matrix: {', '.join(missing)}")
    rows = [m.row(lang) for lang in leaf_order]
    if not m.parameters:
        raise InvariantError("matrix has no parameters")
    for lang, row in zip(leaf_order, rows):
        if UNMAPPED in row:
            j = row.index(UNMAPPED)
            raise InvariantError(
                f"{lang}/{m.parameters[j]} is unmapped; restrict to the fully mapped parameters first"
            )
    for j, param in enumerate(m.parameters):
        k = 0
        for row in rows:
            k = 2 * k + row[j]
        yield param, k


def empirical_distribution(m: CharacterMatrix, leaf_order=None):
    """Frequencies of the binary column vectors restricted to ``leaf_order``."""
    leaf_order = tuple(leaf_order if leaf_order is not None else m.languages)
    counts = [0] * 2 ** len(leaf_order)
    total = 0
    for _, k in _leaf_columns(m, leaf_order):
        counts[k] += 1
        total += 1
    return LeafDistribution(leaf_order, [Fraction(c, total) for c in counts])


def weighted_empirical_distribution(m: CharacterMatrix, leaf_order, weights):
    """Column frequencies with each parameter counted by its weight."""
    leaf_order = tuple(leaf_order if leaf_order is not None else m.languages)
    mass = [Fraction(0)] * 2 ** len(leaf_order)
    for param, k in _leaf_columns(m, leaf_order):
        if param not in weights:
            raise InvariantError(f"no weight for parameter {param!r}")
        w = Fraction(weights[param])
        if w < 0:
            raise InvariantError(f"weight for {param!r} is negative")
        mass[k] += w
    total = sum(mass)
    if total == 0:
        raise InvariantError("weights sum to zero")
    return LeafDistribution(leaf_order, [x / total for x in mass])


def parse_weights(text):
    """``parameter|weight`` lines (``#`` comments allowed) to a dict of fractions."""
    weights = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        parts = [p.strip() for p in line.split("|")]
        if len(parts) != 2 or not parts[0]:
            raise InvariantError(f"line {lineno}: expected 'parameter|weight'")
        try:
            weights[parts[0]] = Fraction(parts[1])
        except ValueError:
            raise InvariantError(f"line {lineno}: invalid weight {parts[1]!r}") from None
    return weights


@dataclass(frozen=True)
class FlatteningMatrix:
    """Leaf distribution rearranged along a split.

    Rows are indexed by binary words on ``row_side`` and columns by words on
    ``col_side``, both in lexicographic order with the first listed leaf as
    the most significant bit.
    """

    split: Split
    row_side: tuple
    col_side: tuple
    entries: tuple

    @property
    def shape(self):
        return len(self.entries), len(self.entries[0]) if self.entries else 0

    def row_word(self, i):
        return format(i, f"0{len(self.row_side)}b")

    def col_word(self, j):
        return format(j, f"0{len(self.col_side)}b")

    def transpose(self):
        cols = tuple(zip(*self.entries))
        return FlatteningMatrix(self.split, self.col_side, self.row_side, cols)


def flatten(P: LeafDistribution, split: Split, rows=None):
    """Flattening of ``P`` along ``split``.

    ``rows`` names the side that indexes rows; by default it is the side
    holding ``P``'s first leaf. Leaves on each side keep ``P``'s order.
    """
    if split.leaves != set(P.leaf_order):
        raise InvariantError(f"split {split} does not partition the leaves {list(P.leaf_order)}")
    if rows is None:
        row_set = split.side_of(P.leaf_order[0])
    else:
        row_set = frozenset(rows)
        if row_set not in (split.side_a, split.side_b):
            raise InvariantError(f"{sorted(row_set)} is not a side of {split}")
    row_side = tuple(x for x in P.leaf_order if x in row_set)
    col_side = tuple(x for x in P.leaf_order if x not in row_set)
    n = P.n
    pos = {label: n - 1 - i for i, label in enumerate(P.leaf_order)}

    def spread(side):
        # map each word on `side` to its bit contribution in the full index
        out = []
        for k in range(2 ** len(side)):
            idx = 0
            for b, label in enumerate(side):
                if (k >> (len(side) - 1 - b)) & 1:
                    idx |= 1 << pos[label]
            out.append(idx)
        return out

    row_idx, col_idx = spread(row_side), spread(col_side)
    entries = tuple(tuple(P.probs[r | c] for c in col_idx) for r in row_idx)
    return FlatteningMatrix(split, row_side, col_side, entries)


def _det3(a, b, c):
    return (
        a[0] * (b[1] * c[2] - b[2] * c[1])
        - a[1] * (b[0] * c[2] - b[2] * c[0])
        + a[2] * (b[0] * c[1] - b[1] * c[0])
    )


def minors3(F: FlatteningMatrix):
    """Yield ``(row_triple, col_triple, minor)`` in lexicographic order."""
    rows, cols = F.shape
    if rows < 3 or cols < 3:
        return
    E = F.entries
    col_triples = list(combinations(range(cols), 3))
    for rt in combinations(range(rows), 3):
        r0, r1, r2 = (E[i] for i in rt)
        for ct in col_triples:
            value = _det3([r0[j] for j in ct], [r1[j] for j in ct], [r2[j] for j in ct])
            yield rt, ct, value


@lru_cache(maxsize=64)
def _triple_index(rows, cols):
    return _TripleIndex(rows, cols)


class _TripleIndex:
    """Index arrays expanding every 3x3 minor along its first row.

    ``det[r, c] = sum_k sign_k * A[r0, c_k] * m2[(r1, r2), pair_k]`` where
    ``m2`` holds the 2x2 minors and ``pair_k`` drops column ``c_k``.
    """

    def __init__(self, rows, cols):
        self.rt = np.array(list(combinations(range(rows), 3)), dtype=np.intp)
        self.ct = np.array(list(combinations(range(cols), 3)), dtype=np.intp)
        self.rpairs = np.array(list(combinations(range(rows), 2)), dtype=np.intp)
        self.cpairs = np.array(list(combinations(range(cols), 2)), dtype=np.intp)
        rpos = {tuple(p): k for k, p in enumerate(self.rpairs.tolist())}
        cpos = {tuple(p): k for k, p in enumerate(self.cpairs.tolist())}
        self.r0 = self.rt[:, 0]
        self.rp = np.array([rpos[(b, c)] for _, b, c in self.rt.tolist()], dtype=np.intp)
        self.cp = [
            np.array([cpos[(b, c)] for _, b, c in self.ct.tolist()], dtype=np.intp),
            np.array([cpos[(a, c)] for a, _, c in self.ct.tolist()], dtype=np.intp),
            np.array([cpos[(a, b)] for a, b, _ in self.ct.tolist()], dtype=np.intp),
        ]

    def minors2(self, A, mod=None, absolute=False):
        r1, r2 = self.rpairs[:, 0], self.rpairs[:, 1]
        c1, c2 = self.cpairs[:, 0], self.cpairs[:, 1]
        x = A[np.ix_(r1, c1)] * A[np.ix_(r2, c2)]
        y = A[np.ix_(r1, c2)] * A[np.ix_(r2, c1)]
        if absolute:
            return np.abs(x) + np.abs(y)
        out = x - y
        return out % mod if mod is not None else out

    def minors3(self, A, mod=None):
        m2 = self.minors2(A, mod)
        total = None
        for k, sign in enumerate((1, -1, 1)):
            term = A[np.ix_(self.r0, self.ct[:, k])] * m2[np.ix_(self.rp, self.cp[k])]
            if mod is not None:
                term %= mod
            term = term if sign > 0 else -term
            total = term if total is None else total + term
        return total % mod if mod is not None else total

    def minors3_at(self, A, flat, mod):
        """Minors at flattened ``(row_triple, col_triple)`` positions, modulo ``mod``."""
        r, c = np.divmod(flat, len(self.ct))
        r0, rp = self.r0[r], self.rp[r]
        r1, r2 = self.rpairs[rp, 0], self.rpairs[rp, 1]
        total = np.zeros(len(flat), dtype=np.int64)
        for k, sign in enumerate((1, -1, 1)):
            cp = self.cpairs[self.cp[k][c]]
            m2 = (A[r1, cp[:, 0]] * A[r2, cp[:, 1]] - A[r1, cp[:, 1]] * A[r2, cp[:, 0]]) % mod
            term = A[r0, self.ct[c, k]] * m2 % mod
            total = (total + sign * term) % mod
        return total

    def magnitude_bound(self, A):
        """Sum of absolute values of the six permutation products of each minor."""
        m2 = self.minors2(A, absolute=True)
        absA = np.abs(A)
        return sum(absA[np.ix_(self.r0, self.ct[:, k])] * m2[np.ix_(self.rp, self.cp[k])] for k in range(3))


@lru_cache(maxsize=None)
def _primes_below_2_31(count):
    primes = []
    candidate = 2**31 - 1
    while len(primes) < count:
        if all(candidate % d for d in range(3, isqrt(candidate) + 1, 2)):
            primes.append(candidate)
        candidate -= 2
    return tuple(primes)


def _split_max(F: FlatteningMatrix):
    """``(max |minor|, row_triple, col_triple)`` for the first maximizer in stream order.

    Entries are scaled to integers by their common denominator ``D``, so each
    minor is an integer over ``D**3``. Small integers are handled directly
    in int64. Otherwise exact zeros are detected modulo enough 31-bit primes
    to exceed the Hadamard-style bound ``6 * peak**3``, a float evaluation
    with a rigorous error bound discards minors that cannot be maximal, and
    only the survivors are evaluated with Python integers.
    """
    rows, cols = F.shape
    if rows < 3 or cols < 3:
        return Fraction(0), None, None
    denom = 1
    for row in F.entries:
        for x in row:
            denom = lcm(denom, x.denominator)
    ints = [[x.numerator * (denom // x.denominator) for x in row] for row in F.entries]
    peak = max(abs(v) for row in ints for v in row)
    index = _triple_index(rows, cols)
    rt, ct = index.rt, index.ct
    scale = denom**3

    if peak == 0:
        return Fraction(0), tuple(int(x) for x in rt[0]), tuple(int(x) for x in ct[0])

    if 6 * peak**3 < 2**62:
        mags = np.abs(index.minors3(np.array(ints, dtype=np.int64)))
        r, c = divmod(int(np.argmax(mags)), len(ct))
        return Fraction(int(mags[r, c]), scale), tuple(int(x) for x in rt[r]), tuple(int(x) for x in ct[c])

    # Float pass first: anything clearly away from zero is certainly nonzero.
    Af = np.array([[v / peak for v in row] for row in ints], dtype=np.float64)
    approx = np.abs(index.minors3(Af))
    err = 1e-12 * index.magnitude_bound(Af) + 1e-300
    nonzero = approx > err
    unsure = np.flatnonzero(~nonzero)
    if unsure.size:
        bound = 6 * peak**3
        modulus = 1
        still = np.zeros(unsure.size, dtype=bool)
        for p in _primes_below_2_31(64):
            Ap = np.array([[v % p for v in row] for row in ints], dtype=np.int64)
            still |= index.minors3_at(Ap, unsure, p) != 0
            modulus *= p
            if modulus > bound:
                break
        else:
            still[:] = True  # cannot certify zeros; treat them as candidates
        nonzero.flat[unsure] = still
    if not nonzero.any():
        return Fraction(0), tuple(int(x) for x in rt[0]), tuple(int(x) for x in ct[0])

    lower = np.where(nonzero, approx - err, -np.inf).max()
    candidates = np.flatnonzero(nonzero & (approx + err >= lower))

    best = (-1, 0)
    for flat in candidates:
        r, cc = divmod(int(flat), len(ct))
        i0, i1, i2 = rt[r]
        j0, j1, j2 = ct[cc]
        value = abs(
            _det3(
                (ints[i0][j0], ints[i0][j1], ints[i0][j2]),
                (ints[i1][j0], ints[i1][j1], ints[i1][j2]),
                (ints[i2][j0], ints[i2][j1], ints[i2][j2]),
            )
        )
        if value > best[0]:
            best = (value, int(flat))
    r, cc = divmod(best[1], len(ct))
    return Fraction(best[0], scale), tuple(int(x) for x in rt[r]), tuple(int(x) for x in ct[cc])


@dataclass(frozen=True)
class InvariantReport:
    """Outcome of evaluating the minor invariants of a tree on a distribution.

    ``per_split`` pairs every internal split with its largest absolute minor.
    ``witness`` is ``(split, row_words, col_words)`` for the minor attaining
    ``global_max``. ``complete`` is False when evaluation stopped at the
    first minor exceeding ``epsilon``.
    """

    tree: PhyloTree
    leaf_order: tuple
    per_split: tuple
    global_max: Fraction
    witness: tuple
    epsilon: Fraction = None
    accepted: bool = None
    complete: bool = True
    flattenings: tuple = field(default=(), repr=False, compare=False)


def _check_tree(P: LeafDistribution, tree: PhyloTree):
    if set(tree.leaves) != set(P.leaf_order):
        raise InvariantError(
            f"tree leaves {sorted(tree.leaves)} do not match distribution leaves {sorted(P.leaf_order)}"
        )
    if P.n < 4:
        raise InvariantError(
            "trees with fewer than 4 leaves have no internal edge; every topology satisfies the invariants"
        )


def _witness(F, rt, ct):
    if rt is None:
        return None
    return F.split, tuple(F.row_word(i) for i in rt), tuple(F.col_word(j) for j in ct)


def max_abs_minor(P: LeafDistribution, tree: PhyloTree, _cache=None):
    """Largest absolute 3x3 minor over the flattenings of every internal split."""
    _check_tree(P, tree)
    per_split = []
    flats = []
    best = (Fraction(-1), None)
    for split in sorted(internal_splits(tree), key=str):
        if _cache is not None and split in _cache:
            F, (value, rt, ct) = _cache[split]
        else:
            F = flatten(P, split)
            value, rt, ct = _split_max(F)
            if _cache is not None:
                _cache[split] = F, (value, rt, ct)
        per_split.append((split, value))
        flats.append(F)
        if value > best[0]:
            best = (value, _witness(F, rt, ct))
    return InvariantReport(
        tree=tree,
        leaf_order=P.leaf_order,
        per_split=tuple(per_split),
        global_max=best[0],
        witness=best[1],
        flattenings=tuple(flats),
    )


def epsilon_test(P: LeafDistribution, tree: PhyloTree, epsilon=DEFAULT_EPSILON, short_circuit=False):
    """Accept ``tree`` iff every minor is smaller than ``epsilon`` in absolute value.

    With ``short_circuit=True`` the minors are streamed and evaluation stops
    at the first one reaching ``epsilon``; the report then covers only the
    minors seen so far.
    """
    epsilon = Fraction(epsilon)
    if epsilon <= 0:
        raise InvariantError("epsilon must be positive")
    if not short_circuit:
        report = max_abs_minor(P, tree)
        return _with_verdict(report, epsilon, report.global_max < epsilon, True)

    _check_tree(P, tree)
    per_split = []
    best = (Fraction(-1), None)
    for split in sorted(internal_splits(tree), key=str):
        F = flatten(P, split)
        split_best = Fraction(0)
        for rt, ct, value in minors3(F):
            value = abs(value)
            if value > split_best:
                split_best = value
            if value > best[0]:
                best = (value, _witness(F, rt, ct))
            if value >= epsilon:
                per_split.append((split, split_best))
                report = InvariantReport(tree, P.leaf_order, tuple(per_split), best[0], best[1])
                return _with_verdict(report, epsilon, False, False)
        per_split.append((split, split_best))
    if best[1] is None:
        best = (Fraction(0), None)
    report = InvariantReport(tree, P.leaf_order, tuple(per_split), best[0], best[1])
    return _with_verdict(report, epsilon, True, True)


def _with_verdict(report, epsilon, accepted, complete):
    return InvariantReport(
        tree=report.tree,
        leaf_order=report.leaf_order,
        per_split=report.per_split,
        global_max=report.global_max,
        witness=report.witness,
        epsilon=epsilon,
        accepted=accepted,
        complete=complete,
        flattenings=report.flattenings,
    )


def rank_topology_scan(P: LeafDistribution, taxa=None):
    """Score every unrooted topology on the leaves by its largest minor.

    Returns ``(tree, score)`` pairs sorted by score, ties by canonical
    Newick. Splits shared between topologies are evaluated once.
    """
    taxa = tuple(taxa) if taxa is not None else P.leaf_order
    if sorted(taxa) != sorted(P.leaf_order):
        raise InvariantError("taxa must be the distribution's leaves")
    try:
        trees = enumerate_topologies(taxa)
    except TreeError as exc:
        raise InvariantError(str(exc)) from None
    cache = {}
    scored = [(t, max_abs_minor(P, t, _cache=cache).global_max) for t in trees]
    scored.sort(key=lambda pair: (pair[1], emit_newick(pair[0])))
    return scored


# -- reporting --------------------------------------------------------------


def format_report(report: InvariantReport, places=7):
    """Tab-separated key/value lines; every number as ``a/b`` and as a decimal."""

    def num(x):
        return f"{format_fraction(x)}\t{format_fraction(x, decimal=True, places=places)}"

    lines = [f"tree\t{emit_newick(report.tree)}", "leaves\t" + ",".join(report.leaf_order)]
    for split, value in report.per_split:
        lines.append(f"split\t{split}\t{num(value)}")
    lines.append(f"max\t{num(report.global_max)}")
    if report.witness is not None:
        split, rows, cols = report.witness
        lines.append(f"witness\t{split}\trows={','.join(rows)}\tcols={','.join(cols)}")
    if report.epsilon is not None:
        lines.append(f"epsilon\t{num(report.epsilon)}")
        lines.append(f"complete\t{'yes' if report.complete else 'no'}")
        lines.append(f"result\t{'accepted' if report.accepted else 'rejected'}")
    return "\n".join(lines) + "\n"


def format_scan(scored, decimal=False, places=7):
    lines = []
    for rank, (tree, score) in enumerate(scored, start=1):
        lines.append(f"{rank}\t{format_fraction(score, decimal, places)}\t{emit_newick(tree)}")
    return "\n".join(lines) + "\n"
