"""Numerical laboratory for a dissipative semilinear heat equation.

The model problem is

    u_t + lambda*u - Laplace(u) + f(u) = g,   u|_boundary = 0,

on a box in 1 or 2 space dimensions, with a polynomial nonlinearity f of odd
degree whose leading coefficient is positive.  The package certifies the
structural inequalities satisfied by f, integrates single trajectories and
trajectory differences with IMEX spectral schemes, measures the smoothing
and absorbing estimates the dynamics are expected to obey, and probes the
global attractor with covering nets and correlation-dimension fits.
"""

from rdlab.domain import (
    DomainSpec,
    Field,
    SpectralField,
    laplacian_eigenvalues,
    lebesgue_norm,
    h1_seminorm,
    transform_forward,
    transform_inverse,
)
from rdlab.nonlinearity import (
    NonlinearitySpec,
    DissipativityConstants,
    ScanSpec,
    Decomposition,
    LipschitzGrowthConstants,
    certify_conditions,
    certify_decomposition,
    certify_f_add,
    check_corollary,
    decompose,
    monotonicity_constant_oracle,
)
from rdlab.solver import (
    ProblemSpec,
    SolverConfig,
    Trajectory,
    PairTrajectory,
    BlowUpError,
    step,
    solve,
    solve_pair,
    energy_monitor,
)
from rdlab.estimates import (
    ExponentTable,
    exponent_table,
    verify_lemma23,
    verify_ak_bk,
    smoothing_constant,
    h1_smoothing_fit,
)
from rdlab.attractor import (
    PointCloud,
    EpsilonNet,
    DimensionEstimate,
    Norm,
    sample_attractor,
    attraction_distance,
    greedy_epsilon_net,
    transport_net,
    correlation_dimension,
    dimension_bound_check,
    find_equilibrium,
)

__version__ = "0.1.0"
