"""Newton-Raphson map dynamics and finite-dimensional quantum operator checks."""

__version__ = "0.1.0"

from .newton import (
    DerivativeZero,
    IterationPolicy,
    Orbit,
    OrbitStatus,
    PolynomialProblem,
    iterate_orbit,
    multi_start_solve,
    newton_step,
    overlap_converged,
)
from .measure import (
    Cycle,
    CycleScan,
    EmpiricalDensity,
    InterferenceConfig,
    InvalidRange,
    accumulate_density,
    cauchy_density,
    cauchy_quantile,
    density_distance,
    find_cycles,
    half_width_at_half_max,
    interference_experiment,
    interference_polynomial,
    peak_detect,
    pushforward_residual,
    response_curve,
    smoothed_densities,
)
from .parsing import (
    DegreeZeroError,
    PolynomialSyntaxError,
    parse_polynomial,
    pretty_polynomial,
)
from .qops import (
    BadRepresentation,
    DimensionMismatch,
    DiracReport,
    Grid,
    HoppingRangeTooLarge,
    LinearOp,
    NaturalUnits,
    NonHermitianInput,
    StateVector,
    born_probability,
    commutator,
    dirac_alpha_beta,
    dirac_check,
    evolve,
    expectation,
    fourier_eigenstate,
    frequency_operator,
    frequency_values,
    gaussian_packet,
    klein_gordon_dispersion,
    klein_gordon_plane_wave_residual,
    ops_check,
    position_operator,
    projector,
    shift_operator,
    tight_binding_hamiltonian,
    uncertainty_product,
    wavevector_operator,
    wavevector_values,
)
