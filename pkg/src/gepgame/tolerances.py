"""Repo-wide numerical tolerances.

Library checks and tests both read from here so they cannot drift apart.
"""

# Construction-time checks.
SYMMETRY_ATOL = 1e-12
UNIT_NORM_ATOL = 1e-10
SPD_CHECK_MAX_DIM = 512

# Cyclic Jacobi stops once the off-diagonal Frobenius norm falls below this
# fraction of the input's Frobenius norm.
JACOBI_REL_TOL = 1e-12
JACOBI_MAX_SWEEPS = 100

# Oracle output guarantees (relative).
ORACLE_RESIDUAL_RTOL = 1e-8
ORACLE_B_ORTHO_RTOL = 1e-8

# Numerical rank cut-off used by subspace_error.
RANK_RTOL = 1e-10

# Per-vector angular errors are only meaningful above this eigengap.
MIN_EIGENGAP = 1e-6

# Column means below this multiple of the column std count as centered.
CENTERING_RTOL = 1e-8
