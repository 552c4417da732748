"""tcforge: mean-field, fluctuation, and thermodynamic simulations of two
coupled driven-dissipative collective-spin ensembles, with a finite-N exact
oracle for verification."""

__version__ = "0.1.0"

from .model import (
    BLOCH_RADIUS,
    ConfigError,
    CovarianceState,
    MeanFieldState,
    ModelParams,
    SimGrid,
    coupling_matrix,
    dissipation_matrices,
    field_vector,
    spin_symplectic,
    symplectic_of_state,
)
from .meanfield import (
    IntegrationError,
    ManifoldError,
    SingularInputError,
    StationaryPoint,
    Trajectory,
    conserved_gamma,
    critical_coupling_setup2,
    gamma_series,
    integrate,
    integrate_setup1,
    integrate_setup2,
    rhs_full,
    rhs_setup1,
    rhs_setup2,
    stationary_setup1,
    stationary_setup2,
)
from .fluctuations import (
    DriftMatrices,
    JointTrajectory,
    bosonic_covariance,
    bosonic_series,
    drift,
    effective_bosonic_generator,
    effective_fluctuation_hamiltonian,
    initial_covariance_ground,
    initial_gauge,
    integrate_joint,
    lyapunov_rhs,
    rotation_numeric,
    rotation_setup1_analytic,
    rotation_setup2_analytic,
)
from .gaussian import (
    CorrelationReport,
    PhysicalityError,
    correlation_report,
    discord_and_classical,
    entropies,
    entropy_f,
    log_negativity,
    symplectic_eigenvalues,
    symplectic_invariants,
)
from .thermo import (
    ThermoSeries,
    entropy_flux,
    heat_rate_mf,
    heat_rate_sub,
    internal_energy,
    laser_work_rate,
    stored_energy,
    thermo_series,
    time_average,
    work_rate_first_law,
)
from .phasescan import (
    PhaseLabel,
    SweepResult,
    SweepSpec,
    adiabatic_follow,
    classify,
    fourier_spectrum,
    multistability_scan,
    sweep,
)
from .oracle import (
    CollectiveOps,
    ConvergenceReport,
    ResourceCapError,
    build_liouvillian,
    convergence_report,
    evolve,
    ground_state,
    observables,
)
