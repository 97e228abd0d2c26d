"""Synergy backbone decomposition.

Splits an entropy, a divergence or a structural quantity such as graph
communicability into partial atoms, one per failure scale: the atom at scale
``alpha`` is the extra loss that first appears when ``alpha`` components fail
together. The atoms always sum to the decomposed quantity.
"""
__version__ = "0.1.0"

from .distribution import (
    GaussianModel,
    JointDistribution,
    expected_entropy,
    gaussian_local_entropy,
    local_conditional_entropy,
    local_entropy,
    marginalize,
)
from .engine import (
    EXACT_LIMIT,
    Annealed,
    DesiderataReport,
    Exact,
    Mode,
    Sampled,
    SearchStrategy,
    SetFunction,
    alpha_synergy,
    backbone,
    robustness,
    verify_desiderata,
)
from .errors import BackboneError, DomainError, InfeasibleStrategyError, InputError
from .graph import (
    WeightedGraph,
    communicability,
    edge_failure_setfunction,
    erdos_renyi_graph,
    matrix_exponential,
    structural_synergy_backbone,
)
from .measures import (
    DivergenceSpectrum,
    MiFormulation,
    entropy_backbone_expected,
    entropy_backbone_local,
    gaussian_entropy_backbone,
    kl_backbone,
    kl_divergence,
    mi_backbone,
    mutual_information,
    negentropy_backbone,
    total_correlation_backbone,
)
from .search import (
    AnnealSchedule,
    anneal_min_bipartition,
    enforce_monotone,
    monotonicity_check,
    sample_min_bipartition,
)
from .spectrum import Aggregator, BackboneSpectrum, partial_atoms
from .subsets import SubsetMask

__all__ = [
    "__version__",
    "Aggregator", "BackboneSpectrum", "partial_atoms", "SubsetMask",
    "JointDistribution", "GaussianModel", "marginalize", "local_entropy",
    "local_conditional_entropy", "expected_entropy", "gaussian_local_entropy",
    "SetFunction", "Mode", "Exact", "Sampled", "Annealed", "SearchStrategy", "EXACT_LIMIT",
    "alpha_synergy", "backbone", "robustness", "verify_desiderata", "DesiderataReport",
    "AnnealSchedule", "sample_min_bipartition", "anneal_min_bipartition",
    "monotonicity_check", "enforce_monotone",
    "MiFormulation", "DivergenceSpectrum", "entropy_backbone_local", "entropy_backbone_expected",
    "kl_backbone", "negentropy_backbone", "total_correlation_backbone", "mi_backbone",
    "gaussian_entropy_backbone", "kl_divergence", "mutual_information",
    "WeightedGraph", "matrix_exponential", "communicability", "edge_failure_setfunction",
    "structural_synergy_backbone", "erdos_renyi_graph",
    "BackboneError", "DomainError", "InfeasibleStrategyError", "InputError",
]
