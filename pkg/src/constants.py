# Adaptive quadrature (Gauss-Kronrod via QUADPACK)
QUAD_EPSREL = 1e-10
QUAD_MAX_SUBDIVISIONS = 2**20
QUAD_LIMIT_PER_PIECE = 200
QUAD_MAX_SHELLS = 1100  # dyadic shells toward 0 or infinity before declaring divergence

# Measures
CARLESON_EXPONENTS = range(-20, 21)  # a = 2**j
CARLESON_TREND_SAMPLES = 6  # samples at each end of the grid inspected for growth
CARLESON_STALL_RATIO = 0.5  # last rise over first rise at or above this keeps climbing
CARLESON_RISE_RTOL = 1e-8
KOLMOGOROV_GRID_POINTS = 1000

# Discretization
DEFAULT_TRUNCATION_EPS = 1e-8
EXP_SCALE_TRUNCATION_FACTOR = 40.0  # t_hi = 40 / beta
DEFAULT_NODES_PER_PANEL = 10
MIN_ATOM_WEIGHT = 1e-300

# Model operator / eigensolve
COINCIDENT_NODE_RTOL = 1e-14
PIVOT_UNDERFLOW = 1e-300
JACOBI_COSINE_TOL = 1e-15
JACOBI_MAX_SWEEPS = 60
JACOBI_CYCLIC_MAX_N = 64  # above this the one-sided sweep uses the round-robin ordering
BASELINE_JACOBI_MAX_N = 64  # above this baseline_eig hands the matrix to LAPACK
TIE_RTOL = 4.0 * 2.220446049250313e-16

# Spectral map checks
DEFAULT_INVOLUTION_TOL = 1e-6
DEFAULT_MASS_TOL = 1e-12
DEFAULT_TRACE_TOL = 1e-11
DEFAULT_SCALING_TOL = 1e-10
DEFAULT_HANKEL_TOL = 1e-6
HANKEL_RESIDUAL_TOL = 1e-8
DEFAULT_HANKEL_NT = 800
DEFAULT_HANKEL_TMAX = 60.0

# Reference spectra
REFERENCE_GRID_POINTS = 1000
DEFAULT_REFERENCE_TOL = 0.02
REFERENCE_LOG_SPAN_PER_NODE = 0.15  # log(t_hi / t_lo) per node in the reference pipelines
REFERENCE_T_LO_FLOOR = 1e-250
SPECTRUM_UPPER_SLACK = 1e-6

# Lyapunov harness
GRAMIAN_TAIL_TOL = 1e-10

# CLI
THREADS_ENV = "HANKEL_SPECTRA_THREADS"
EXIT_OK = 0
EXIT_TOLERANCE = 1
EXIT_PARSE = 2
EXIT_NUMERICAL = 3
