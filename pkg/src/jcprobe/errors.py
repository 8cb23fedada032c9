"""Typed errors shared across the package.

Each error category maps to a process exit code used by the CLI and to an
HTTP status used by the service: 2 for configuration and file-format
problems, 3 for violated physics preconditions, 4 for estimation failures
that the data itself can trigger, 5 for I/O.
"""

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_PHYSICS = 3
EXIT_ESTIMATION = 4
EXIT_IO = 5


class JcprobeError(Exception):
    """Base class for all typed package errors."""

    exit_code = 1


class ConfigError(JcprobeError):
    """Invalid configuration, flag value, or request payload."""

    exit_code = EXIT_CONFIG


class RecordFormatError(ConfigError):
    """A record file failed to parse or violates the record schema."""


class PhysicsError(JcprobeError):
    """A physics precondition was violated before any estimation ran."""

    exit_code = EXIT_PHYSICS


class InvalidDimensionError(PhysicsError):
    """Cavity truncation dimension is too small."""


class InvalidParameterError(PhysicsError):
    """Hamiltonian parameter outside its allowed range (non-finite, g < 0, ...)."""


class InvalidPreparationError(PhysicsError):
    """Qubit preparation index outside {1, 2, 3}."""


class TruncationInsufficientError(PhysicsError):
    """Requested cavity state does not fit in the truncated Fock space."""


class InvalidStateError(PhysicsError):
    """A matrix that must be a density matrix is not one."""


class ShapeError(PhysicsError):
    """Operator or state dimensions are inconsistent."""


class InvalidHamiltonianError(PhysicsError):
    """Propagation was asked for with a non-Hermitian generator."""


class DetuningZeroError(PhysicsError):
    """Dispersive expressions require a nonzero qubit-cavity detuning."""


class CapacityError(PhysicsError):
    """Joint Hilbert-space dimension exceeds the configured memory cap."""


class GridIncompatibleError(PhysicsError):
    """The record's time grid lacks the nodes the requested stencil needs."""


class InvalidStepError(PhysicsError):
    """Derivative step size must be positive."""


class InvalidNoiseSpecError(PhysicsError):
    """Noise specification is malformed (negative sigma, unknown kind)."""


class EstimationError(JcprobeError):
    """The inversion itself failed on the given derivative data."""

    exit_code = EXIT_ESTIMATION


class NegativeRadicandError(EstimationError):
    """Coupling radicand below tolerance: noise or step size too large."""


class CouplingTooSmallError(EstimationError):
    """Estimated coupling too small to divide by; cavity moments unidentifiable."""


class OmegaUnidentifiableError(EstimationError):
    """Both quadrature means vanish, so the cavity frequency cannot be recovered."""
