"""Low-density Construction-A lattices over prime fields."""

from .construction import (ConstructionALattice, build_lattice, exact_dual_basis, fullrank_monte_carlo,
                           integer_lattice, load_bundle, nested_pair, randomize_skeleton, save_bundle,
                           scaled_dual_lattice, scaled_integer_lattice, syndrome_distribution_test)
from .decoding import bp_decode, lattice_decode_bp, ml_decode
from .estimator import LDALattice
from .exceptions import BudgetExceededError, InvalidConfigError, ResampleBudgetError
from .expander import (EXAMPLE_SKELETON, ExpansionParams, SkeletonGraph, sample_standard_ensemble,
                       verify_expansion)
from .experiments import awgn_error_experiment, goodness_report, semi_norm_ergodic_check
from .geometry import closest_point, closest_points, nsm_estimate, packing_radius

__version__ = "0.1.0"

__all__ = [
    "BudgetExceededError", "ConstructionALattice", "EXAMPLE_SKELETON", "ExpansionParams",
    "InvalidConfigError", "LDALattice", "ResampleBudgetError", "SkeletonGraph",
    "awgn_error_experiment", "bp_decode", "build_lattice", "closest_point", "closest_points",
    "exact_dual_basis", "fullrank_monte_carlo", "goodness_report", "integer_lattice",
    "lattice_decode_bp", "load_bundle", "ml_decode", "nested_pair", "nsm_estimate",
    "packing_radius", "randomize_skeleton", "sample_standard_ensemble", "save_bundle",
    "scaled_dual_lattice", "scaled_integer_lattice", "semi_norm_ergodic_check",
    "syndrome_distribution_test", "verify_expansion",
]
