"""Qubit-cavity simulation and parameter recovery from qubit tomography.

The package simulates a qubit coupled to one (or several) truncated cavity
modes, generates the nine process-tomography time series of the qubit, and
inverts finite-difference derivatives of those series at t=0 to recover
the Hamiltonian parameters, the cavity quadrature means and variance
matrix, and (in the dispersive regime) the photon-number statistics.
"""

from .errors import (
    CapacityError,
    ConfigError,
    CouplingTooSmallError,
    DetuningZeroError,
    EstimationError,
    GridIncompatibleError,
    InvalidDimensionError,
    InvalidHamiltonianError,
    InvalidNoiseSpecError,
    InvalidParameterError,
    InvalidPreparationError,
    InvalidStateError,
    InvalidStepError,
    JcprobeError,
    NegativeRadicandError,
    OmegaUnidentifiableError,
    PhysicsError,
    RecordFormatError,
    ShapeError,
    TruncationInsufficientError,
)
from .operators import (
    OperatorSet,
    build_operators,
    expectation,
    ladder,
    partial_trace_cavity,
    tensor,
)
from .states import CavityStateSpec, prepare_cavity_product, prepare_cavity_state, prepare_qubit_state
from .dynamics import (
    DispersiveParams,
    HamiltonianParams,
    ModeSpec,
    MultimodeParams,
    Propagator,
    build_dispersive_hamiltonian,
    build_jc_hamiltonian,
    build_multimode_jc,
    evolve,
)
from .tomography import (
    NoiseSpec,
    TomographyRecord,
    add_noise,
    generate_time_series,
    read_record,
    symmetric_grid,
    uniform_grid,
    write_record,
)
from .estimator import (
    DerivativeSet,
    EstimateReport,
    Residual,
    VarianceMatrix,
    consistency_check,
    estimate_a,
    estimate_g,
    estimate_omega,
    estimate_photon_statistics,
    estimate_quadrature_means,
    estimate_report,
    estimate_variance_matrix,
    finite_difference_derivatives,
)
from .oracle import (
    CavityMoments,
    OracleReport,
    analytic_derivatives,
    cavity_moments,
    derivatives_from_moments,
)
from .pipeline import (
    EstimateOptions,
    OracleCheckResult,
    SimulationConfig,
    SweepResult,
    SweepRow,
    TruthValues,
    run_estimate,
    run_oracle_check,
    run_simulate,
    run_sweep,
    truth_values,
)

__version__ = "0.1.0"
