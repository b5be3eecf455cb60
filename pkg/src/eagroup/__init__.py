"""Evolutionary algorithms on the genome ring Z_d^l: group actions, the
infinite-population mixing model, its dynamics, gradient flows and spectra."""

from .errors import (
    ConfigurationError,
    EAGroupError,
    NumericError,
    ResourceError,
    SearchFailure,
    UsageError,
    ValidationError,
)
from .ring import Genome, GenomeSpace
from .groups import Permutation, PermutationGroup, OrbitPartition, close_group, orbit_partition
from .mixing import CrossoverSpec, FitnessPipeline, MixingHeuristic, MutationSpec, Scaling
from .dynamics import find_fixed_point, iterate
from .spectral import ea_map_spectrum, group_dft, jsr_bounds

__version__ = "0.1.0"

__all__ = [
    "ConfigurationError", "EAGroupError", "NumericError", "ResourceError", "SearchFailure",
    "UsageError", "ValidationError", "Genome", "GenomeSpace", "Permutation", "PermutationGroup",
    "OrbitPartition", "close_group", "orbit_partition", "CrossoverSpec", "FitnessPipeline",
    "MixingHeuristic", "MutationSpec", "Scaling", "find_fixed_point", "iterate",
    "ea_map_spectrum", "group_dft", "jsr_bounds",
]
