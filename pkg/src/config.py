"""Numerical constants for oscsym."""

# Fixed-point solvers
TOL = 1e-10
INNER_TOL = 1e-13
MAX_ITER = 30
LAMBDA_MIN = 16.0
CONTRACTION_STALL_STEPS = 3
EPS_LAMBDA_THRESHOLD = 1.0

# Quadrature and finite differences
GAUSS_POINTS = 16
FD_STEP = 1e-3
NEWTON_STEPS = 50

# Identities and degeneracy thresholds
DIAGONAL_PHASE_TOLERANCE = 1e-10
IDENTITY_TOLERANCE = 1e-9
SINGULAR_DET_TOLERANCE = 1e-8
DEGENERACY_DET = 1e-8
NOISE_FLOOR = 1e-8

# Weyl sequences
BISECTION_STEPS = 60
PHASE_MATCH_TOL = 1e-8
ADMISSIBILITY_C0 = 1e-3
U_RADIUS = 0.25
BUMP_WIDTH = 1.0
COVERAGE_TARGETS = 8
LADDER_POINTS = 8

# Circle coverage archetype: Φ = A·v(x)|ξ|^r χ(|ξ|), v flat about x₀, b ≡ 1
COVERAGE_LAMBDA_MIN = 8.0
COVERAGE_LAMBDA_MAX = 512.0
COVERAGE_ROWS = 6
COVERAGE_BUMP_WIDTH = 7.5
COVERAGE_AMPLITUDE = 8.0
COVERAGE_PLATEAU_WIDTH = 7.5
COVERAGE_PLATEAU_FLAT = 0.8
COVERAGE_GRID_POINTS = 4096
COVERAGE_GRID_HALF_WIDTH = 8.0

# Direct-integral kernels
CHI_WIDTH = 0.5
ETA_D_POINTS = 257
SUPPORT_TOLERANCE = 1e-12
SLICE_PROBE_FREQUENCIES = (4.0, 16.0, 64.0)
SPHERE_CHART_MARGIN = 1e-3
MOLLIFIER_WIDTHS = (0.2, 0.1, 0.075, 0.05)
MOLLIFIER_SPREAD = 3.0
MIN_MOLLIFIER_CELLS = 4
SHELL_CUTOFF = 1e-12
MASK_EPS = 0.3
KERNEL_GRID_POINTS = 128
KERNEL_BOX_HALF_WIDTH = 0.75

# Slope regression
SLOPE_TOLERANCE = 0.3

# Default ladders and grids
LADDER_MIN = 16.0
LADDER_MAX = 1024.0
DEFAULT_GRID_LOWER = -2.0
DEFAULT_GRID_UPPER = 2.0
DEFAULT_GRID_POINTS = 1024
MAX_DIMENSION = 16

# Experiment pipelines
EXPANSION_ORDER = 3
REMAINDER_ORDER = 2
X_PROBES = 9
SINGULAR_TAIL_INDEX = 10
B_RESPONSE_FLOOR = 0.5

# Output
OUTPUT_DIR = "output"
CSV_FLOAT_FORMAT = "%.12e"
LOG_NAME = "oscsym"
