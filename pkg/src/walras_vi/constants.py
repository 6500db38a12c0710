"""Default tolerances and scan parameters.

All of these are configuration values: every public entry point that uses
one accepts an override.
"""

# Feasibility tolerance: membership tests and weight-sum checks.
TAU_FEAS = 1e-10

# Projection accuracy target for iterative (polyhedral) projections.
TAU_PROJ = 1e-8

# Solver stopping tolerance on the natural-map residual.
TAU_SOLVE = 1e-8

# Margin that turns strict inequalities (">") into machine-checkable tests.
EPS_STRICT = 1e-9

# Points closer than this are treated as equal in distinctness filters.
DISTINCT_DIST = 10 * TAU_FEAS

# Extragradient defaults.
DEFAULT_STEP = 0.1
DEFAULT_BUDGET = 100_000

# Quantifier discretization defaults: tuples up to size 3, 11 grid steps
# per weight axis.
DEFAULT_M_MAX = 3
DEFAULT_WEIGHT_RESOLUTION = 11
DEFAULT_SAMPLE_COUNT = 24

# Iteration caps for cyclic projection schemes.
FEASIBILITY_SWEEP_BUDGET = 50_000
DYKSTRA_SWEEP_BUDGET = 50_000
