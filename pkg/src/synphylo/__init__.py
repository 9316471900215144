"""Phylogenetic reconstruction and invariant-based validation for binary syntactic data."""

from .charmatrix import (
    UNMAPPED,
    CharacterMatrix,
    coverage,
    fully_mapped,
    load_matrix,
    parse_csv,
    parse_json,
    restrict,
    to_csv,
    to_json,
)
from .datasets import LATIN_FIVE, LATIN_TREE, latin_tree, sswl_latin
from .distance import DistanceMatrix, Policy, distance_matrix, format_distance_matrix, hamming, parse_distance_matrix
from .invariants import (
    FlatteningMatrix,
    InvariantReport,
    empirical_distribution,
    epsilon_test,
    flatten,
    format_report,
    max_abs_minor,
    minors3,
    rank_topology_scan,
    weighted_empirical_distribution,
)
from .jcmodel import (
    JCParams,
    LeafDistribution,
    expected_distribution,
    expected_distribution_histories,
    expected_distribution_pruning,
    param_count,
    sample,
)
from .reconstruct import neighbor_joining, upgma
from .tree import (
    PhyloTree,
    Split,
    emit_newick,
    enumerate_topologies,
    internal_splits,
    parse_newick,
    rf_distance,
    splits,
    topology_count,
)

__version__ = "0.1.0"
