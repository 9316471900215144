import random
from fractions import Fraction
from itertools import combinations

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import LATIN_COUNTS, random_params, rooted_shapes, shape_to_tree
from synphylo.charmatrix import UNMAPPED, CharacterMatrix
from synphylo.invariants import (
    InvariantError,
    _split_max,
    empirical_distribution,
    epsilon_test,
    flatten,
    format_report,
    max_abs_minor,
    minors3,
    parse_weights,
    rank_topology_scan,
    weighted_empirical_distribution,
)
from synphylo.jcmodel import LeafDistribution, expected_distribution_pruning
from synphylo.tree import Split, emit_newick, enumerate_topologies, internal_splits, parse_newick

F = Fraction


def det_gauss(M):
    """Oracle: determinant by fraction-exact Gaussian elimination."""
    A = [[F(x) for x in row] for row in M]
    n = len(A)
    sign = 1
    result = F(1)
    for c in range(n):
        pivot = next((r for r in range(c, n) if A[r][c] != 0), None)
        if pivot is None:
            return F(0)
        if pivot != c:
            A[c], A[pivot] = A[pivot], A[c]
            sign = -sign
        result *= A[c][c]
        for r in range(c + 1, n):
            factor = A[r][c] / A[c][c]
            A[r] = [a - factor * b for a, b in zip(A[r], A[c])]
    return sign * result


def rank_gauss(M):
    A = [[F(x) for x in row] for row in M]
    rank = 0
    cols = len(A[0]) if A else 0
    for c in range(cols):
        pivot = next((r for r in range(rank, len(A)) if A[r][c] != 0), None)
        if pivot is None:
            continue
        A[rank], A[pivot] = A[pivot], A[rank]
        for r in range(len(A)):
            if r != rank and A[r][c] != 0:
                factor = A[r][c] / A[rank][c]
                A[r] = [a - factor * b for a, b in zip(A[r], A[rank])]
        rank += 1
    return rank


def oracle_max_minor(P, tree):
    best = F(0)
    for s in internal_splits(tree):
        E = flatten(P, s).entries
        for rt in combinations(range(len(E)), 3):
            for ct in combinations(range(len(E[0])), 3):
                best = max(best, abs(det_gauss([[E[i][j] for j in ct] for i in rt])))
    return best


# Flattenings printed for the Latin subfamily, in units of 1/106.
FLAT_E1 = [
    [31, 1, 1, 0, 23, 3, 0, 2],
    [1, 0, 0, 1, 0, 1, 0, 3],
    [5, 0, 2, 0, 0, 0, 0, 0],
    [2, 0, 1, 8, 0, 0, 0, 21],
]
FLAT_E2 = [
    [31, 1, 1, 0],
    [23, 3, 0, 2],
    [1, 0, 0, 1],
    [0, 1, 0, 3],
    [5, 0, 2, 0],
    [0, 0, 0, 0],
    [2, 0, 1, 8],
    [0, 0, 0, 21],
]

# Exhaustive scan of the 15 topologies on the Latin fixture (regression values,
# reproduced by ``oracle_max_minor`` in ``test_latin_scan_matches_oracle``).
LATIN_SCAN = [
    ("(French,((Italian,Portuguese),Spanish),Latin);", F(735, 595508)),
    ("(French,((Italian,Spanish),Portuguese),Latin);", F(735, 595508)),
    ("(French,(Italian,(Portuguese,Spanish)),Latin);", F(735, 595508)),
    ("(French,((Italian,Latin),Portuguese),Spanish);", F(2415, 1191016)),
    ("(French,((Italian,Latin),Spanish),Portuguese);", F(2415, 1191016)),
    ("(French,((Italian,Portuguese),Latin),Spanish);", F(2415, 1191016)),
    ("(French,((Italian,Spanish),Latin),Portuguese);", F(2415, 1191016)),
    ("(French,(Italian,(Latin,Portuguese)),Spanish);", F(2415, 1191016)),
    ("(French,(Italian,(Latin,Spanish)),Portuguese);", F(2415, 1191016)),
    ("(French,(Italian,Latin),(Portuguese,Spanish));", F(2415, 1191016)),
    ("(French,(Italian,Portuguese),(Latin,Spanish));", F(2415, 1191016)),
    ("(French,(Italian,Spanish),(Latin,Portuguese));", F(2415, 1191016)),
    ("(French,Italian,((Latin,Portuguese),Spanish));", F(2415, 1191016)),
    ("(French,Italian,((Latin,Spanish),Portuguese));", F(2415, 1191016)),
    ("(French,Italian,(Latin,(Portuguese,Spanish)));", F(2415, 1191016)),
]


def latin_split(side):
    rest = {"French", "Italian", "Latin", "Spanish", "Portuguese"} - set(side)
    return Split(set(side), rest)


# -- empirical distributions ----------------------------------------------------


def test_latin_frequency_table(latin_P):
    assert latin_P.leaf_order == ("French", "Italian", "Latin", "Spanish", "Portuguese")
    assert latin_P.nonzero() == {bits: F(c, 106) for bits, c in LATIN_COUNTS.items()}
    assert latin_P["00000"] == F(31, 106)
    assert latin_P["11111"] == F(21, 106)
    assert latin_P["00100"] == F(23, 106)
    assert sum(latin_P.probs) == 1


def test_point_mass_and_two_columns():
    m = CharacterMatrix(("a", "b", "c"), ("p",), [[0], [1], [0]])
    assert empirical_distribution(m).nonzero() == {"010": 1}
    m = CharacterMatrix(("a", "b", "c"), ("p", "q"), [[0, 1], [0, 1], [0, 1]])
    assert empirical_distribution(m).nonzero() == {"000": F(1, 2), "111": F(1, 2)}


def test_empirical_errors():
    m = CharacterMatrix(("a", "b"), ("p",), [[0], [UNMAPPED]])
    with pytest.raises(InvariantError, match="fully mapped"):
        empirical_distribution(m)
    with pytest.raises(InvariantError):
        empirical_distribution(CharacterMatrix(("a",), (), [[]]))
    with pytest.raises(InvariantError, match="zz"):
        empirical_distribution(CharacterMatrix(("a",), ("p",), [[1]]), ["zz"])


def test_weighted_distribution():
    m = CharacterMatrix(("a", "b"), ("p", "q", "r"), [[0, 1, 1], [0, 1, 0]])
    uniform = {"p": 2, "q": 2, "r": 2}
    assert weighted_empirical_distribution(m, None, uniform) == empirical_distribution(m)
    dropped = weighted_empirical_distribution(m, None, {"p": 1, "q": 1, "r": 0})
    assert dropped == empirical_distribution(CharacterMatrix(("a", "b"), ("p", "q"), [[0, 1], [0, 1]]))
    two = CharacterMatrix(("a", "b"), ("p", "q"), [[0, 1], [0, 0]])
    w = weighted_empirical_distribution(two, None, {"p": 3, "q": 1})
    assert w.nonzero() == {"00": F(3, 4), "10": F(1, 4)}
    with pytest.raises(InvariantError, match="'r'"):
        weighted_empirical_distribution(m, None, {"p": 1, "q": 1})
    with pytest.raises(InvariantError):
        weighted_empirical_distribution(m, None, {"p": 0, "q": 0, "r": 0})


def test_parse_weights():
    assert parse_weights("# w\np|1/2\nq | 0.25\n") == {"p": F(1, 2), "q": F(1, 4)}
    with pytest.raises(InvariantError):
        parse_weights("p 1\n")


# -- flattenings ------------------------------------------------------------


def test_flat_e1(latin_P):
    Fl = flatten(latin_P, latin_split({"French", "Italian"}))
    assert Fl.row_side == ("French", "Italian")
    assert Fl.col_side == ("Latin", "Spanish", "Portuguese")
    assert Fl.entries == tuple(tuple(F(x, 106) for x in row) for row in FLAT_E1)
    assert Fl.entries[0][7] == F(1, 53)


def test_flat_e2(latin_P):
    Fl = flatten(latin_P, latin_split({"French", "Italian", "Latin"}))
    assert Fl.shape == (8, 4)
    assert Fl.entries == tuple(tuple(F(x, 106) for x in row) for row in FLAT_E2)


def test_flatten_row_choice_and_transpose(latin_P):
    s = latin_split({"French", "Italian"})
    a = flatten(latin_P, s)
    b = flatten(latin_P, s, rows={"Latin", "Spanish", "Portuguese"})
    assert b.entries == a.transpose().entries
    with pytest.raises(InvariantError):
        flatten(latin_P, s, rows={"Latin"})
    with pytest.raises(InvariantError):
        flatten(latin_P, Split({"French"}, {"Italian"}))


def test_product_distribution_flattens_to_rank_one():
    q = [F(1, 6), F(1, 3), F(1, 4), F(1, 4)]
    r = [F(1, 2), F(1, 8), F(3, 8), F(0), F(0), F(0), F(0), F(0)]
    P = LeafDistribution(("a", "b", "c", "d", "e"), [x * y for x in q for y in r])
    Fl = flatten(P, Split({"a", "b"}, {"c", "d", "e"}))
    assert rank_gauss(Fl.entries) == 1


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 10**6))
def test_flatten_is_rearrangement(seed):
    rng = random.Random(seed)
    n = rng.randint(4, 6)
    labels = tuple(f"x{i}" for i in range(n))
    raw = [rng.randint(0, 5) for _ in range(2**n)]
    raw[0] += 1
    P = LeafDistribution(labels, [F(x, sum(raw)) for x in raw])
    side = set(rng.sample(labels, rng.randint(1, n - 1)))
    Fl = flatten(P, Split(side, set(labels) - side))
    flat = [x for row in Fl.entries for x in row]
    assert sorted(flat) == sorted(P.probs)
    assert sum(flat) == 1
    # index semantics: Flat(u, v) = P(u, v) with leaves rearranged
    for i, row in enumerate(Fl.entries):
        for j, x in enumerate(row):
            word = dict(zip(Fl.row_side, Fl.row_word(i))) | dict(zip(Fl.col_side, Fl.col_word(j)))
            assert P["".join(word[label] for label in labels)] == x


# -- minors -----------------------------------------------------------------


def test_minor_counts(latin_P):
    Fl = flatten(latin_P, latin_split({"French", "Italian"}))
    assert sum(1 for _ in minors3(Fl)) == 4 * 56
    Fl2 = flatten(latin_P, latin_split({"French", "Italian", "Latin"}))
    assert sum(1 for _ in minors3(Fl2)) == 56 * 4
    P3 = LeafDistribution(("a", "b", "c", "d"), [F(1, 16)] * 16)
    from synphylo.invariants import FlatteningMatrix

    thin = FlatteningMatrix(Split({"a"}, {"b", "c", "d"}), ("a",), ("b", "c", "d"), P3.probs[:8] and (P3.probs[:8], P3.probs[8:]))
    assert list(minors3(thin)) == []


def test_minors_match_gauss_oracle(latin_P):
    Fl = flatten(latin_P, latin_split({"French", "Italian"}))
    E = Fl.entries
    stream = list(minors3(Fl))
    order = [(rt, ct) for rt, ct, _ in stream]
    assert order == sorted(order)
    for rt, ct, value in stream:
        assert value == det_gauss([[E[i][j] for j in ct] for i in rt])


def test_rank_two_matrix_minors_vanish():
    from synphylo.invariants import FlatteningMatrix

    u = [F(1), F(2), F(-1), F(3)]
    v = [F(0), F(1), F(5), F(2)]
    x = [F(2), F(1), F(1), F(7), F(0)]
    y = [F(1), F(-3), F(2), F(1), F(4)]
    E = tuple(tuple(u[i] * x[j] + v[i] * y[j] for j in range(5)) for i in range(4))
    Fl = FlatteningMatrix(None, (), (), E)
    assert all(value == 0 for _, _, value in minors3(Fl))
    assert _split_max(Fl)[0] == 0


def test_fast_path_agrees_with_stream(rng):
    for _ in range(60):
        n = rng.randint(4, 6)
        labels = tuple(f"x{i}" for i in range(n))
        if rng.random() < 0.5:
            raw = [rng.randint(0, 10 ** rng.randint(1, 8)) for _ in range(2**n)]
            raw[0] += 1
            P = LeafDistribution(labels, [F(x, sum(raw)) for x in raw])
        else:
            t = shape_to_tree(rng.choice(rooted_shapes(n)), labels)
            P = expected_distribution_pruning(t, random_params(t, rng))
            if rng.random() < 0.5:
                # huge denominators, near the variety: exercises the modular path
                noise = [F(rng.randint(0, 3), 10**40) for _ in P.probs]
                P = LeafDistribution(labels, [(x + e) / (1 + sum(noise)) for x, e in zip(P.probs, noise)])
        t = rng.choice(enumerate_topologies(labels))
        for s in internal_splits(t):
            Fl = flatten(P, s)
            stream = list(minors3(Fl))
            best = max(abs(v) for _, _, v in stream)
            first = next((rt, ct) for rt, ct, v in stream if abs(v) == best)
            assert _split_max(Fl) == (best, *first)


# -- reports ----------------------------------------------------------------


def test_latin_max_minor(latin_P, candidate_tree):
    report = max_abs_minor(latin_P, candidate_tree)
    assert report.global_max == F(2415, 1191016)
    assert report.global_max == max(v for _, v in report.per_split)
    per = dict(report.per_split)
    assert per[latin_split({"French", "Italian"})] == F(2415, 1191016)
    assert per[latin_split({"French", "Italian", "Latin"})] == F(735, 595508)
    split, rows, cols = report.witness
    assert split == latin_split({"French", "Italian"})
    Fl = flatten(latin_P, split)
    ri = [int(w, 2) for w in rows]
    ci = [int(w, 2) for w in cols]
    assert abs(det_gauss([[Fl.entries[i][j] for j in ci] for i in ri])) == F(2415, 1191016)
    assert oracle_max_minor(latin_P, candidate_tree) == F(2415, 1191016)


def test_epsilon_verdicts(latin_P, candidate_tree):
    ok = epsilon_test(latin_P, candidate_tree, F(1, 100))
    assert ok.accepted and ok.complete
    bad = epsilon_test(latin_P, candidate_tree, F(1, 1000))
    assert not bad.accepted and bad.witness is not None
    quick = epsilon_test(latin_P, candidate_tree, F(1, 1000), short_circuit=True)
    assert not quick.accepted and not quick.complete
    assert quick.global_max >= F(1, 1000)
    full = epsilon_test(latin_P, candidate_tree, F(1, 100), short_circuit=True)
    assert full.accepted and full.complete and full.global_max == F(2415, 1191016)
    with pytest.raises(InvariantError):
        epsilon_test(latin_P, candidate_tree, 0)


def test_report_rendering(latin_P, candidate_tree):
    text = format_report(epsilon_test(latin_P, candidate_tree, F(1, 100)))
    lines = dict(line.split("\t", 1) for line in text.splitlines())
    assert lines["max"] == "2415/1191016\t0.0020277"
    assert lines["result"] == "accepted"
    assert lines["tree"] == emit_newick(candidate_tree)


def test_tree_errors(latin_P):
    with pytest.raises(InvariantError, match="do not match"):
        max_abs_minor(latin_P, parse_newick("((A,B),(C,D));"))
    P3 = LeafDistribution(("a", "b", "c"), [F(1, 8)] * 8)
    with pytest.raises(InvariantError, match="fewer than 4"):
        max_abs_minor(P3, parse_newick("(a,b,c);"))


def test_model_distribution_scores_zero_on_true_tree(rng):
    for n in (4, 5, 6):
        for shape in rooted_shapes(n):
            t = shape_to_tree(shape)
            P = expected_distribution_pruning(t, random_params(t, rng))
            assert max_abs_minor(P, t).global_max == 0
            assert epsilon_test(P, t, F(1, 10**30)).accepted
            for s in internal_splits(t):
                assert rank_gauss(flatten(P, s).entries) <= 2


def test_uniform_scores_zero_everywhere():
    labels = ("a", "b", "c", "d", "e")
    P = LeafDistribution(labels, [F(1, 32)] * 32)
    scan = rank_topology_scan(P)
    assert len(scan) == 15
    assert all(score == 0 for _, score in scan)


def test_relabelling_invariance(rng):
    t = shape_to_tree(rooted_shapes(5)[1])
    P = expected_distribution_pruning(t, random_params(t, rng))
    P = LeafDistribution(P.leaf_order, [(x + F(1, 32)) / 2 for x in P.probs])  # move off the variety
    u = enumerate_topologies(P.leaf_order)[4]
    mapping = dict(zip(P.leaf_order, ["q", "r", "s", "t", "u"]))
    P2 = LeafDistribution(tuple(mapping[x] for x in P.leaf_order), P.probs)
    assert max_abs_minor(P2, u.relabel(mapping)).global_max == max_abs_minor(P, u).global_max


def test_transpose_keeps_max(latin_P):
    for side in ({"French", "Italian"}, {"French", "Italian", "Latin"}):
        s = latin_split(side)
        a = flatten(latin_P, s)
        b = a.transpose()
        assert sorted(abs(v) for *_, v in minors3(a)) == sorted(abs(v) for *_, v in minors3(b))
        assert _split_max(a)[0] == _split_max(b)[0]


# -- topology scans ---------------------------------------------------------


def test_latin_scan_regression(latin_P):
    scan = rank_topology_scan(latin_P)
    assert [(emit_newick(t), score) for t, score in scan] == LATIN_SCAN


def test_latin_scan_matches_oracle(latin_P):
    for text, score in LATIN_SCAN:
        assert oracle_max_minor(latin_P, parse_newick(text)) == score


def test_scan_finds_generating_topology(rng):
    t = shape_to_tree(rooted_shapes(5)[0])
    P = expected_distribution_pruning(t, random_params(t, rng, generic=True))
    scan = rank_topology_scan(P)
    assert scan[0][1] == 0
    assert set(internal_splits(scan[0][0])) == set(internal_splits(t))


def test_scan_range_errors():
    P = LeafDistribution(tuple("abcdefghi"), [F(1, 512)] * 512)
    with pytest.raises(InvariantError):
        rank_topology_scan(P)
    P2 = LeafDistribution(tuple("abcd"), [F(1, 16)] * 16)
    with pytest.raises(InvariantError):
        rank_topology_scan(P2, "abce")


def test_scan_eight_leaves_runs():
    rng = random.Random(1)
    t = shape_to_tree(rooted_shapes(8)[5])
    P = expected_distribution_pruning(t, random_params(t, rng, generic=True))
    scan = rank_topology_scan(P)
    assert len(scan) == 10395
    assert scan[0][1] == 0
    assert set(internal_splits(scan[0][0])) == set(internal_splits(t))
