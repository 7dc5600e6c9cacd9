"""Deterministic structure-derived labels."""

from .dssp import assign_ss3
from .interactions import (chain_pair_graph, rank_interface_residues, salt_bridge_bin,
                           salt_bridge_pairs, top_chain_pair)
from .labelset import LabelRules, LabelSet, chain_summary, compute_labels
from .pairs import PairGeometry, pair_geometry
from .sasa import compute_rsa, compute_sasa

__all__ = [
    "LabelRules", "LabelSet", "PairGeometry", "assign_ss3", "chain_pair_graph", "chain_summary",
    "compute_labels", "compute_rsa", "compute_sasa", "pair_geometry", "rank_interface_residues",
    "salt_bridge_bin", "salt_bridge_pairs", "top_chain_pair",
]
