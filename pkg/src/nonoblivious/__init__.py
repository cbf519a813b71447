"""Non-oblivious local search for monotone submodular maximization over a
matroid, with curvature-dependent guarantees."""
from .errors import DomainError, InstanceError, MatroidAxiomError, PreconditionError, ScaleError
from .matroids import (
    ContractedMatroid,
    ExplicitMatroid,
    GroundSet,
    Matroid,
    PartitionMatroid,
    UniformMatroid,
    brualdi_bijection,
    contract,
    extend_to_base,
    swap_neighborhood,
    verify_matroid_axioms,
)
from .objectives import (
    ContractedOracle,
    CoverageInstance,
    CoverageOracle,
    ExplicitOracle,
    ValueOracle,
    contract_function,
    exact_curvature,
    marginal,
    random_monotone_submodular,
    verify_monotone_submodular,
)
from .potential import coefficient_table, g_coverage, g_exact, g_sampled, kappa, sample_count
from .solvers import (
    SolveConfig,
    SolveReport,
    brute_force_opt,
    check_fg_inequality,
    greedy,
    nonoblivious_exact,
    nonoblivious_sampled,
    oblivious_local_search,
    partial_enumeration,
    rho,
    solve,
    unknown_curvature,
)

__version__ = "0.1.0"
