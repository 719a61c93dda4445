"""Exception types shared across the package.

Every error raised on a documented failure path derives from NVODMRError so
callers (and the CLI) can map failures to exit codes without matching on
message strings.
"""


class NVODMRError(Exception):
    """Base class for all package errors."""


class ParameterError(NVODMRError, ValueError):
    """A physical parameter or configuration value violates an invariant."""


class WeakDriveViolation(NVODMRError):
    """Steady-state populations left [0, 1]: the linearized weak-drive model
    does not apply at these drive strengths."""

    def __init__(self, message, mw_frequency=None):
        super().__init__(message)
        self.mw_frequency = mw_frequency


class ControlOffResonance(NVODMRError):
    """The control RF frequency is not resonant with the bright/dark
    transition within tolerance."""


class NegativeFrequency(NVODMRError):
    """A derived drive frequency came out non-positive (control amplitude too
    large for the available strain splitting)."""


class FitDiverged(NVODMRError):
    """A least-squares fit produced non-finite parameters or an residual above
    the acceptance threshold."""


class InsufficientResolution(NVODMRError):
    """The frequency grid cannot resolve the requested number of dips."""


class DegenerateSweep(NVODMRError):
    """A slope regression was requested on fewer than three distinct
    amplitudes."""


class SingularSystem(NVODMRError):
    """The steady-state linear system is numerically singular."""


class StepTooLarge(NVODMRError):
    """The integrator time step undersamples the fastest drive tone."""


class TraceDrift(NVODMRError):
    """The integrated density matrix lost normalization beyond tolerance."""


class NoOptimum(NVODMRError):
    """No finite sensitivity optimum exists on the requested grid."""


class ZeroSlope(NVODMRError):
    """The response slope vanishes; sensitivity is undefined."""


class ConfigError(NVODMRError, ValueError):
    """A run configuration file failed validation."""

    def __init__(self, message, line=None, key=None):
        super().__init__(message)
        self.line = line
        self.key = key
