"""Conference key rate bounds and protocol simulation for pair-entangled quantum networks."""

from penbounds.bb84 import CorrelatorSet, bb84_ceiling_search, bb84_rate, pen3_feasible
from penbounds.bounds import (
    BoundReport,
    Cut,
    Partition,
    devetak_winter_bound,
    enumerate_proper_partitions,
    partition_bound,
    tree_exact_rate,
    weakest_cut_bound,
)
from penbounds.errors import ConnectivityError, InputError, LimitError, PenError, UnsupportedError
from penbounds.gme import build_sigma_star, directional_derivative_check, total_correlation_check, verify_gme_identity
from penbounds.network import (
    EdgeSpec,
    EdgeWeighting,
    PenNetwork,
    bell_network,
    custom_weights,
    derive_weights,
    load_network,
    read_network,
)
from penbounds.packing import (
    TreePacking,
    audit_secrecy,
    pack_trees_fractional,
    pack_trees_integer,
    simulate_conference_key,
)

__version__ = "0.1.0"

__all__ = [
    "BoundReport",
    "ConnectivityError",
    "CorrelatorSet",
    "Cut",
    "EdgeSpec",
    "EdgeWeighting",
    "InputError",
    "LimitError",
    "Partition",
    "PenError",
    "PenNetwork",
    "TreePacking",
    "UnsupportedError",
    "audit_secrecy",
    "bb84_ceiling_search",
    "bb84_rate",
    "bell_network",
    "build_sigma_star",
    "custom_weights",
    "derive_weights",
    "devetak_winter_bound",
    "directional_derivative_check",
    "enumerate_proper_partitions",
    "load_network",
    "pack_trees_fractional",
    "pack_trees_integer",
    "partition_bound",
    "pen3_feasible",
    "read_network",
    "simulate_conference_key",
    "total_correlation_check",
    "tree_exact_rate",
    "verify_gme_identity",
    "weakest_cut_bound",
]
