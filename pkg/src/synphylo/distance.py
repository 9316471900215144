"""Hamming distances between character rows and the distance-matrix text format."""

import enum
import math
from dataclasses import dataclass
from fractions import Fraction
from itertools import combinations

from .charmatrix import UNMAPPED, CharacterMatrix

__all__ = [
    "Policy",
    "DistanceMatrix",
    "DistanceError",
    "hamming",
    "distance_matrix",
    "format_distance_matrix",
    "parse_distance_matrix",
]


class DistanceError(ValueError):
    pass


class Policy(enum.Enum):
    """How unmapped cells enter a pairwise distance.

    ``SHARED_ONLY`` compares only the columns mapped in both rows and
    normalizes by their number. The two padding policies count an unmapped
    cell as a mismatch or as a match and normalize by the total column count.
    """

    SHARED_ONLY = "shared"
    PAD_AS_MISMATCH = "pad-mismatch"
    PAD_AS_MATCH = "pad-match"


@dataclass(frozen=True)
class DistanceMatrix:
    labels: tuple
    entries: tuple

    def __post_init__(self):
        labels = tuple(self.labels)
        entries = tuple(tuple(_as_number(x) for x in row) for row in self.entries)
        object.__setattr__(self, "labels", labels)
        object.__setattr__(self, "entries", entries)
        n = len(labels)
        if len(set(labels)) != n:
            raise DistanceError("duplicate taxon labels")
        if len(entries) != n or any(len(row) != n for row in entries):
            raise DistanceError(f"distance matrix must be {n}x{n}")
        for i in range(n):
            if entries[i][i] != 0:
                raise DistanceError(f"nonzero diagonal entry for {labels[i]!r}")
            for j in range(i + 1, n):
                if entries[i][j] != entries[j][i]:
                    raise DistanceError(f"asymmetric entries for {labels[i]!r}, {labels[j]!r}")
                if entries[i][j] < 0:
                    raise DistanceError(f"negative distance between {labels[i]!r} and {labels[j]!r}")

    def __len__(self):
        return len(self.labels)

    def __getitem__(self, pair):
        a, b = pair
        return self.entries[self.labels.index(a)][self.labels.index(b)]

    @classmethod
    def from_function(cls, labels, dist):
        labels = tuple(labels)
        return cls(labels, [[0 if a == b else dist(a, b) for b in labels] for a in labels])


def _as_number(x):
    if isinstance(x, float):
        if math.isnan(x) or math.isinf(x):
            raise DistanceError(f"distance entries must be finite, got {x}")
        return Fraction(x)
    if isinstance(x, str):
        return Fraction(x)
    if isinstance(x, (int, Fraction)):
        return Fraction(x)
    raise DistanceError(f"unsupported distance entry {x!r}")


def hamming(u, v):
    """Number of positions where two equal-length binary vectors differ."""
    u, v = tuple(u), tuple(v)
    if len(u) != len(v):
        raise DistanceError(f"vectors have different lengths ({len(u)} and {len(v)})")
    if UNMAPPED in u or UNMAPPED in v:
        raise DistanceError("hamming distance is undefined on unmapped cells")
    return sum(a != b for a, b in zip(u, v))


def _pair_distance(u, v, policy, min_overlap, names):
    total = len(u)
    if policy is Policy.SHARED_ONLY:
        shared = [(a, b) for a, b in zip(u, v) if a is not UNMAPPED and b is not UNMAPPED]
        if len(shared) < max(min_overlap, 1):
            raise DistanceError(
                f"{names[0]!r} and {names[1]!r} share {len(shared)} mapped parameters, need at least {max(min_overlap, 1)}"
            )
        return Fraction(sum(a != b for a, b in shared), len(shared))
    pad_mismatch = policy is Policy.PAD_AS_MISMATCH
    diff = 0
    for a, b in zip(u, v):
        if a is UNMAPPED or b is UNMAPPED:
            diff += pad_mismatch
        else:
            diff += a != b
    return Fraction(diff, total)


def distance_matrix(m: CharacterMatrix, policy=Policy.SHARED_ONLY, min_overlap=20):
    """Normalized Hamming distance between every pair of languages.

    Entries are exact fractions in ``[0, 1]``.
    """
    policy = Policy(policy)
    n = len(m.languages)
    if n < 2:
        raise DistanceError("need at least two languages")
    if not m.parameters:
        raise DistanceError("matrix has no parameters")
    entries = [[Fraction(0)] * n for _ in range(n)]
    for i, j in combinations(range(n), 2):
        d = _pair_distance(m.values[i], m.values[j], policy, min_overlap, (m.languages[i], m.languages[j]))
        entries[i][j] = entries[j][i] = d
    return DistanceMatrix(m.languages, entries)


def _phylip_name(label):
    name = "_".join(label.split())
    return f"{name:<10}"


def format_distance_matrix(d: DistanceMatrix, lower=False, precision=6):
    """Render in the classic whitespace format read by distance-tree programs.

    The first line is the taxon count; every following line is a name padded
    to ten characters and the row's distances. With ``lower=True`` only the
    strict lower triangle is written. Whitespace inside names becomes ``_``.
    """
    lines = [f"{len(d.labels):>5}"]
    for i, (label, row) in enumerate(zip(d.labels, d.entries)):
        cells = row[:i] if lower else row
        values = " ".join(f"{float(x):.{precision}f}" for x in cells)
        lines.append(f"{_phylip_name(label)} {values}".rstrip())
    return "\n".join(lines) + "\n"


def parse_distance_matrix(text):
    """Read a square or lower-triangular matrix in the classic format.

    Numbers are read exactly (``"0.25"`` becomes ``Fraction(1, 4)``).
    """
    if isinstance(text, bytes):
        text = text.decode("utf-8")
    lines = [line for line in text.splitlines() if line.strip()]
    if not lines:
        raise DistanceError("empty distance matrix")
    try:
        n = int(lines[0].split()[0])
    except ValueError:
        raise DistanceError("first line must hold the taxon count") from None
    rows = lines[1:]
    if len(rows) != n:
        raise DistanceError(f"expected {n} rows, got {len(rows)}")
    labels, values = [], []
    for lineno, line in enumerate(rows, start=2):
        tokens = line.split()
        labels.append(tokens[0])
        try:
            values.append([Fraction(tok) for tok in tokens[1:]])
        except ValueError:
            raise DistanceError(f"line {lineno}: non-numeric distance") from None

    if all(len(row) == n for row in values):
        return DistanceMatrix(labels, values)
    if all(len(row) == i for i, row in enumerate(values)):
        entries = [[Fraction(0)] * n for _ in range(n)]
        for i, row in enumerate(values):
            for j, x in enumerate(row):
                entries[i][j] = entries[j][i] = x
        return DistanceMatrix(labels, entries)
    raise DistanceError("rows are neither square nor lower-triangular")
