"""Walrasian equilibrium problems as variational inequalities over convex regions."""

from .economy import (
    ExcessDemandModel,
    Fixture,
    MortgageTerms,
    affine_rate_cap_region,
    default_catalog,
    is_positive,
    linear_economy,
    mortgage_payment,
    mortgage_region,
    scalar_catalog,
    scalar_economy,
)
from .harness import (
    HarnessConfig,
    TheoremCheckResult,
    check_lemma_2_1,
    check_lemma_2_2,
    check_theorem_4_1,
    check_theorem_4_2,
    check_theorem_4_3,
    failure_events,
    run_catalog,
    summary_table,
)
from .monotonicity import (
    CLASS_NAMES,
    MonotonicityReport,
    SamplePlan,
    build_plan,
    check_class,
    check_properly_quasimonotone,
    check_properly_quasimonotone_dual,
    check_pseudomonotone,
    check_strict_properly_quasimonotone,
    check_strictly_pseudomonotone,
    replay_witness,
)
from .regions import (
    Box,
    ConvexCombination,
    ConvexRegion,
    Polyhedron,
    Simplex,
    combine,
    project_onto_simplex,
)
from .vi_core import (
    SolutionSetEstimate,
    VIProblem,
    VISolveResult,
    enumerate_solutions,
    minty_gap,
    residual,
    solve_extragradient,
    uniqueness_probe,
    verify_minty,
    verify_stampacchia,
)

__version__ = "0.1.0"
