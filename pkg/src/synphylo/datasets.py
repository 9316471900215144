"""Bundled character data.

``sswl_latin.csv`` holds seven languages over 115 parameters. Restricted to
the five Latin-family languages and filtered to fully mapped parameters it
leaves 106 columns whose outcome frequencies match the reference Latin
subfamily table. Parameter values themselves are synthetic; only the
frequencies are meaningful.
"""

from importlib import resources

from .charmatrix import parse_csv
from .tree import parse_newick

LATIN_FIVE = ("French", "Italian", "Latin", "Spanish", "Portuguese")
LATIN_TREE = "((French,Italian),Latin,(Spanish,Portuguese));"


def sswl_latin_text():
    return resources.files(__package__).joinpath("data", "sswl_latin.csv").read_text(encoding="utf-8")


def sswl_latin():
    """The bundled seven-language matrix (with unmapped cells)."""
    return parse_csv(sswl_latin_text())


def latin_tree():
    """Accepted topology of the five Latin-family languages, unrooted."""
    return parse_newick(LATIN_TREE)
