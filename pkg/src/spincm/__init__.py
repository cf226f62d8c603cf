"""Confining spin Calogero-Moser models as Hamiltonian reductions of matrix
harmonic oscillators: strong isochronicity, conservation laws, and maximal
superintegrability, verified by cross-checking direct reduced-dynamics
integration against the exact unreduced flow projected through gauge fixing.
"""

from .params import Family, ModelParams, ValidationReport, validate
from .oscillator import (BnState, GHState, LieState, build_slice_Y,
                         build_slice_lie, build_slice_y_bn, energy, exact_flow,
                         moment_map_bn, moment_map_gh, moment_map_lie,
                         osc_coordinate, randomize_gauge, state_from_dict,
                         state_to_dict, xy_from_osc)
from .gauge import (ReducedBn, ReducedGH, ReducedLie, embed, project,
                    project_bn, project_gh, project_lie, reduced_distance,
                    reduced_from_dict, reduced_to_dict)
from .rootdata import (H_red_lie, RootSystemA, parametrize_Y_lie,
                       r_matrix_apply, reduced_bracket_lie)
from .dynamics import (H_bn, H_spin_gh, Trajectory, compare_trajectories, eom,
                       integrate, project_flow, random_reduced_state,
                       reduced_hamiltonian)
from .superint import (InvariantWord, Letter, RankReport, alphabet,
                       conservation_check, generate_pool, generate_pool_for,
                       invariant_value, rank_of_invariants, saturate_rank)
from . import errors

__all__ = [
    "Family", "ModelParams", "ValidationReport", "validate",
    "GHState", "BnState", "LieState", "exact_flow", "energy",
    "osc_coordinate", "xy_from_osc", "moment_map_gh", "moment_map_bn",
    "moment_map_lie", "build_slice_Y", "build_slice_y_bn", "build_slice_lie",
    "randomize_gauge", "state_to_dict", "state_from_dict",
    "ReducedGH", "ReducedBn", "ReducedLie", "project", "project_gh",
    "project_bn", "project_lie", "embed", "reduced_distance",
    "reduced_to_dict", "reduced_from_dict",
    "RootSystemA", "r_matrix_apply", "parametrize_Y_lie", "H_red_lie",
    "reduced_bracket_lie",
    "Trajectory", "H_spin_gh", "H_bn", "reduced_hamiltonian", "eom",
    "integrate", "project_flow", "compare_trajectories",
    "random_reduced_state",
    "Letter", "InvariantWord", "alphabet", "invariant_value",
    "conservation_check", "generate_pool", "generate_pool_for",
    "rank_of_invariants", "saturate_rank", "RankReport",
    "errors",
]

__version__ = "0.1.0"
