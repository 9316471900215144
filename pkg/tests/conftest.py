import random
from fractions import Fraction

import pytest

from synphylo.charmatrix import fully_mapped, restrict
from synphylo.datasets import LATIN_FIVE, latin_tree, sswl_latin
from synphylo.invariants import empirical_distribution
from synphylo.jcmodel import JCParams
from synphylo.tree import PhyloTree

ACCEPTANCE_RESULTS = []


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for line in ACCEPTANCE_RESULTS:
        terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def sswl():
    return sswl_latin()


@pytest.fixture(scope="session")
def latin_matrix(sswl):
    return fully_mapped(restrict(sswl, LATIN_FIVE))


@pytest.fixture(scope="session")
def latin_P(latin_matrix):
    return empirical_distribution(latin_matrix, LATIN_FIVE)


@pytest.fixture(scope="session")
def candidate_tree():
    return latin_tree()


# Reference frequency table for (French, Italian, Latin, Spanish, Portuguese),
# numerators over 106.
LATIN_COUNTS = {
    "00000": 31, "00001": 1, "00010": 1, "00100": 23,
    "00101": 3, "00111": 2, "01000": 1, "01011": 1,
    "01101": 1, "01111": 3, "10000": 5, "10010": 2,
    "11010": 1, "11000": 2, "11011": 8, "11111": 21,
}


def random_rational(rng, max_den=30):
    """Uniform-ish rational in [0, 1], endpoints included."""
    den = rng.randint(1, max_den)
    return Fraction(rng.randint(0, den), den)


def generic_flip(rng, max_den=30):
    """Flip probability avoiding 0, 1/2 and 1."""
    while True:
        den = rng.randint(3, max_den)
        p = Fraction(rng.randint(1, den - 1), den)
        if p != Fraction(1, 2):
            return p


def random_params(tree, rng, generic=False):
    flip = generic_flip if generic else (lambda r: random_rational(r))
    pi = generic_flip(rng) if generic else random_rational(rng)
    return JCParams(pi, {v: flip(rng) for v in tree.nodes if v != tree.root})


def rooted_shapes(n):
    """All unlabelled rooted binary shapes with n leaves, as nested tuples."""
    if n == 1:
        return ["L"]
    out = []
    for k in range(1, n // 2 + 1):
        left, right = rooted_shapes(k), rooted_shapes(n - k)
        for i, a in enumerate(left):
            for j, b in enumerate(right):
                if k == n - k and j < i:
                    continue
                out.append((a, b))
    return out


def shape_to_tree(shape, labels=None):
    edges, leaf_labels = [], {}
    counter = iter(range(10**6))
    names = iter(labels) if labels is not None else (f"t{i}" for i in range(1, 10**6))

    def build(node):
        me = next(counter)
        if node == "L":
            leaf_labels[me] = next(names)
        else:
            for child in node:
                edges.append((me, build(child)))
        return me

    root = build(shape)
    return PhyloTree(edges, leaf_labels, root=root)


@pytest.fixture
def rng():
    return random.Random(12345)
