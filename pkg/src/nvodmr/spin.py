"""Spin-1 operators and Hamiltonians of a strained NV center under a
perpendicular DC bias field.

Conventions used throughout the package:

* basis order is (|+1>, |0>, |-1>);
* every frequency, decay rate and amplitude-times-gyromagnetic-ratio product
  is a linear frequency in Hz.  Time-domain code multiplies by 2*pi at its own
  boundary, nothing else does;
* the perpendicular Zeeman term is folded into the effective zero-field
  splitting and strain (second order in gamma_e*Bx), so the working bare
  Hamiltonian never carries an explicit Sx field term.
"""

from dataclasses import dataclass

import numpy as np

from .errors import ParameterError

SQRT2 = np.sqrt(2.0)

# Bright/dark superpositions of the |+1>, |-1> levels in the basis above.
BRIGHT_STATE = np.array([1.0, 0.0, 1.0]) / SQRT2
DARK_STATE = np.array([1.0, 0.0, -1.0]) / SQRT2


@dataclass(frozen=True)
class NVParameters:
    """Static sensor physics.

    Attributes
    ----------
    d : float
        Zero-field splitting in Hz (the D/2pi ~ 2.87 GHz scale).
    ex : float
        Strain splitting along x, Hz.
    gamma_e : float
        Gyromagnetic ratio, Hz/T (~28e9).
    bx : float
        Perpendicular DC bias field, T.
    gamma_bright, gamma_dark : float
        Effective decay rates (Hz) of the bright and dark transitions, used by
        the steady-state response model.
    """

    d: float
    ex: float
    gamma_e: float
    bx: float
    gamma_bright: float
    gamma_dark: float

    def __post_init__(self):
        if not self.d > 0:
            raise ParameterError(f"zero-field splitting must be positive, got {self.d}")
        if self.ex < 0:
            raise ParameterError(f"strain must be non-negative, got {self.ex}")
        if not self.gamma_e > 0:
            raise ParameterError(f"gyromagnetic ratio must be positive, got {self.gamma_e}")
        if self.bx < 0:
            raise ParameterError(f"bias field must be non-negative, got {self.bx}")
        if not (self.gamma_bright > 0 and self.gamma_dark > 0):
            raise ParameterError("decay rates must be positive")
        # Validity of the second-order fold-in of the Sx Zeeman term.
        if self.gamma_e * self.bx >= self.d / 10.0:
            raise ParameterError(
                "gamma_e*Bx = %.3e Hz is too large for the second-order "
                "treatment (must stay below D/10 = %.3e Hz)"
                % (self.gamma_e * self.bx, self.d / 10.0)
            )


@dataclass(frozen=True)
class EffectiveZFS:
    """Zero-field splitting and strain with the perpendicular Zeeman term
    absorbed (both in Hz)."""

    d_prime: float
    ex_prime: float

    @property
    def level_bright(self):
        """Lab-frame |0> -> bright transition frequency, Hz."""
        return self.d_prime + self.ex_prime

    @property
    def level_dark(self):
        """Lab-frame |0> -> dark transition frequency, Hz."""
        return self.d_prime - self.ex_prime

    @property
    def control_resonance(self):
        """Bright/dark splitting 2*Ex', the resonant control RF frequency."""
        return 2.0 * self.ex_prime


@dataclass(frozen=True)
class DriveConfig:
    """Amplitudes (T) and frequencies (Hz) of the three drive tones.

    The control RF dresses the bright/dark pair, the target RF is the AC
    field under measurement, and the microwave probes the |0> transition
    along ``mw_axis`` ('x' couples |0>-bright, 'y' couples |0>-dark).
    """

    b_rfc: float = 0.0
    freq_rfc: float = 0.0
    b_rft: float = 0.0
    freq_rft: float = 0.0
    b_mw: float = 0.0
    freq_mw: float = 0.0
    mw_axis: str = "x"

    def __post_init__(self):
        for name in ("b_rfc", "b_rft", "b_mw"):
            if getattr(self, name) < 0:
                raise ParameterError(f"{name} must be non-negative")
        for amp, freq in (("b_rfc", "freq_rfc"), ("b_rft", "freq_rft"), ("b_mw", "freq_mw")):
            if getattr(self, amp) > 0 and not getattr(self, freq) > 0:
                raise ParameterError(f"{freq} must be positive when {amp} > 0")
        if self.mw_axis not in ("x", "y"):
            raise ParameterError(f"mw_axis must be 'x' or 'y', got {self.mw_axis!r}")


def spin_operators():
    """Return the spin-1 operators (Sx, Sy, Sz) in the (|+1>, |0>, |-1>)
    basis, with Sz = diag(+1, 0, -1)."""
    sx = np.array([[0, 1, 0], [1, 0, 1], [0, 1, 0]], dtype=complex) / SQRT2
    sy = np.array([[0, -1j, 0], [1j, 0, -1j], [0, 1j, 0]], dtype=complex) / SQRT2
    sz = np.diag([1.0, 0.0, -1.0]).astype(complex)
    return sx, sy, sz


def effective_zfs(params):
    """Fold the perpendicular Zeeman term into effective D' and Ex'.

    D'  = D  + (3/2) (gamma_e Bx)^2 / (D + Ex)
    Ex' = Ex + (1/2) (gamma_e Bx)^2 / (D + Ex)
    """
    shift = (params.gamma_e * params.bx) ** 2 / (params.d + params.ex)
    return EffectiveZFS(d_prime=params.d + 1.5 * shift, ex_prime=params.ex + 0.5 * shift)


def build_bare_hamiltonian(zfs):
    """Undriven Hamiltonian D' Sz^2 + Ex' (Sx^2 - Sy^2), in Hz.

    Eigenpairs: 0 <-> |0>, D'-Ex' <-> dark, D'+Ex' <-> bright.
    """
    sx, sy, sz = spin_operators()
    return zfs.d_prime * (sz @ sz) + zfs.ex_prime * (sx @ sx - sy @ sy)


def build_lab_hamiltonian(params, drive, t):
    """Full lab-frame Hamiltonian at time ``t`` (seconds), in Hz, with every
    drive tone kept (no rotating-wave approximation).

    H(t) = H_bare + gamma_e (B_c cos(2 pi f_c t) + B_t cos(2 pi f_t t)) Sz
                  + gamma_e B_mw cos(2 pi f_mw t) S_axis

    This is the reference Hamiltonian the time-domain oracle integrates; the
    Sx Zeeman bias is already absorbed into H_bare via D', Ex'.
    """
    sx, sy, sz = spin_operators()
    zfs = effective_zfs(params)
    h = build_bare_hamiltonian(zfs)
    two_pi = 2.0 * np.pi
    rf = params.gamma_e * (
        drive.b_rfc * np.cos(two_pi * drive.freq_rfc * t)
        + drive.b_rft * np.cos(two_pi * drive.freq_rft * t)
    )
    h = h + rf * sz
    s_mw = sx if drive.mw_axis == "x" else sy
    h = h + params.gamma_e * drive.b_mw * np.cos(two_pi * drive.freq_mw * t) * s_mw
    return h
