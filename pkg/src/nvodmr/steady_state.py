"""Steady-state response of the driven three-level system.

Each rotating-frame reduction of the driven spin is a pair of coupled modes:
a microwave-driven mode detuned by ``omega_b`` and a coupled mode detuned by
``omega_d``, with drive strength ``drive`` and mode-mode coupling
``coupling`` (all Hz).  The closed-form steady-state occupation of the two
modes gives the CW-ODMR depletion at one microwave frequency; summing the
per-branch depletions over a frequency grid synthesizes a spectrum.

Contrast sign convention: spectra are stored as photoluminescence change, so
the baseline is 0 and resonances are *negative-going local minima* (a dip of
1% contrast reaches -0.01).  This keeps response curves S(B) positive when a
dip splits away from a fixed probe frequency.
"""

from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .errors import ControlOffResonance, ParameterError, WeakDriveViolation
from .spin import SQRT2, effective_zfs

#: |freq_rfc - 2 Ex'| tolerance (Hz) for the resonant-control requirement.
DEFAULT_CONTROL_TOLERANCE = 1e3

#: Overall contrast scale of a fully saturated dip (typical CW-ODMR value).
DEFAULT_CONTRAST_SCALE = 0.02

#: Default synthesis grid: 2001 points spanning d_prime +- 3 ex_prime.
DEFAULT_GRID_POINTS = 2001
DEFAULT_GRID_HALFSPAN_IN_EX = 3.0


class Branch(Enum):
    """The four second-rotating-frame choices of the doubly driven system.

    PLUS/MINUS selects which magnetic sublevel carries the co-rotating target
    coupling; LOW/HIGH marks which resonant-target condition
    (2Ex' -+ gamma_e*B_c) makes that frame's mode pair degenerate.
    """

    PLUS_LOW = "plus_low"
    MINUS_LOW = "minus_low"
    PLUS_HIGH = "plus_high"
    MINUS_HIGH = "minus_high"


class Scheme(Enum):
    BARE = "bare"
    DRESSED = "dressed"
    DOUBLE_DRESSED = "double_dressed"
    PREVIOUS_SINGLE_RF = "previous_single_rf"


@dataclass(frozen=True)
class OscillatorModel:
    """Two coupled modes reduced from one rotating frame (all entries Hz)."""

    omega_b: float
    omega_d: float
    drive: float
    coupling: float
    gamma_b: float
    gamma_d: float

    def __post_init__(self):
        if not (self.gamma_b > 0 and self.gamma_d > 0):
            raise ParameterError("mode decay rates must be positive")
        if self.drive < 0:
            raise ParameterError("drive strength must be non-negative")

    @property
    def strong_drive(self):
        """True when the drive leaves the guaranteed weak-drive regime."""
        return self.drive > min(self.gamma_b, self.gamma_d) / 2.0


@dataclass(frozen=True)
class ModeFamily:
    """One branch expressed through lab-frame transition levels, so the same
    family can be evaluated across a microwave grid.

    ``level_b``/``level_d`` are the microwave frequencies (Hz) at which the
    driven and coupled mode detunings cross zero.
    """

    label: str
    weight: float
    level_b: float
    level_d: float
    drive: float
    coupling: float
    gamma_b: float
    gamma_d: float

    def model_at(self, mw_frequency):
        return OscillatorModel(
            omega_b=self.level_b - mw_frequency,
            omega_d=self.level_d - mw_frequency,
            drive=self.drive,
            coupling=self.coupling,
            gamma_b=self.gamma_b,
            gamma_d=self.gamma_d,
        )

    def depletion(self, mw_frequencies):
        """Vectorized 1 - p0 over an array of microwave frequencies."""
        mw = np.asarray(mw_frequencies, dtype=float)
        num_b = -self.drive * ((self.level_d - mw) - 1j * self.gamma_d)
        num_d = self.drive * self.coupling
        den = ((self.level_b - mw) - 1j * self.gamma_b) * (
            (self.level_d - mw) - 1j * self.gamma_d
        ) - self.coupling**2
        pb = np.abs(num_b / den) ** 2
        pd = np.abs(num_d / den) ** 2
        excited = pb + pd
        if np.any(excited > 1.0):
            offending = mw[np.argmax(excited)] if mw.ndim else float(mw)
            raise WeakDriveViolation(
                "steady-state excitation exceeded unity (drive too strong "
                "for the linearized model)",
                mw_frequency=offending,
            )
        return excited


@dataclass(frozen=True)
class Spectrum:
    """Sampled contrast versus microwave frequency plus provenance."""

    mw_frequencies: np.ndarray
    contrast: np.ndarray
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        freqs = np.asarray(self.mw_frequencies, dtype=float)
        contrast = np.asarray(self.contrast, dtype=float)
        object.__setattr__(self, "mw_frequencies", freqs)
        object.__setattr__(self, "contrast", contrast)
        if freqs.shape != contrast.shape or freqs.ndim != 1:
            raise ParameterError("frequencies and contrast must be 1-D and equal length")
        if not np.all(np.isfinite(freqs)) or not np.all(np.isfinite(contrast)):
            raise ParameterError("spectrum values must be finite")
        if freqs.size > 1 and not np.all(np.diff(freqs) > 0):
            raise ParameterError("frequencies must be strictly increasing")


def population_p0(model):
    """Closed-form steady-state populations (p0, pb, pd) of one branch.

    pb = |-drive (omega_d - i gamma_d) / det|^2, pd = |drive*coupling / det|^2
    with det = (omega_b - i gamma_b)(omega_d - i gamma_d) - coupling^2, and
    p0 = 1 - pb - pd.  Raises WeakDriveViolation instead of clamping when the
    linearized populations leave [0, 1].
    """
    den = (model.omega_b - 1j * model.gamma_b) * (model.omega_d - 1j * model.gamma_d) - (
        model.coupling**2
    )
    pb = abs(-model.drive * (model.omega_d - 1j * model.gamma_d) / den) ** 2
    pd = abs(model.drive * model.coupling / den) ** 2
    p0 = 1.0 - pb - pd
    if p0 < 0.0:
        raise WeakDriveViolation(
            f"p0 = {p0:.3e} < 0: drive {model.drive:.3e} Hz too strong for "
            "the weak-drive steady state"
        )
    return p0, pb, pd


def _require_resonant_control(zfs, drive, tol):
    detuning = drive.freq_rfc - zfs.control_resonance
    if abs(detuning) > tol:
        raise ControlOffResonance(
            "control RF is %.3e Hz away from the bright/dark splitting "
            "2 Ex' = %.6e Hz (tolerance %.1e Hz)" % (detuning, zfs.control_resonance, tol)
        )


def _branch_levels(params, zfs, drive, branch):
    """Lab-frame (level_b, level_d) of a double-dressed branch.

    With gc = gamma_e*B_c, the driven level sits at D'+Ex' +- gc/2 and the
    coupled level is the opposite dressed level folded by the target detuning
    phi = 2Ex' - freq_rft, the fold sign distinguishing LOW from HIGH frames.
    """
    gc = params.gamma_e * drive.b_rfc
    phi = zfs.control_resonance - drive.freq_rft
    upper = zfs.level_bright + gc / 2.0
    lower = zfs.level_bright - gc / 2.0
    if branch is Branch.PLUS_LOW:
        return upper, lower + phi
    if branch is Branch.MINUS_LOW:
        return lower, upper - phi
    if branch is Branch.PLUS_HIGH:
        return upper, lower - phi
    return lower, upper + phi


def branch_model(params, zfs, drive, branch, tol_res=DEFAULT_CONTROL_TOLERANCE):
    """Reduce the doubly driven spin to one branch's two-mode model at the
    microwave frequency stored in ``drive``.

    Requires the control RF resonant with the bright/dark splitting within
    ``tol_res`` (raises ControlOffResonance otherwise).
    """
    _require_resonant_control(zfs, drive, tol_res)
    level_b, level_d = _branch_levels(params, zfs, drive, branch)
    return OscillatorModel(
        omega_b=level_b - drive.freq_mw,
        omega_d=level_d - drive.freq_mw,
        drive=params.gamma_e * drive.b_mw / (2.0 * SQRT2),
        coupling=params.gamma_e * drive.b_rft / 4.0,
        gamma_b=params.gamma_bright,
        gamma_d=params.gamma_dark,
    )


def _dressed_gammas(params, drive, linewidth):
    """Decay-rate pair for schemes operating on the dressed manifold."""
    if linewidth is None:
        return params.gamma_bright, params.gamma_dark
    gamma = float(linewidth(drive.b_rfc))
    if not gamma > 0:
        raise ParameterError(f"linewidth model returned non-positive rate {gamma}")
    return gamma, gamma


def scheme_families(params, drive, scheme, linewidth=None, tol_res=DEFAULT_CONTROL_TOLERANCE):
    """Assemble the weighted mode families whose summed depletion is the
    CW-ODMR spectrum of ``scheme``.

    * BARE: two uncoupled modes at the bright and dark transitions.
    * DRESSED / PREVIOUS_SINGLE_RF: two coupled families (microwave probing
      the bright- and the dark-side transition) sharing the single RF tone;
      DRESSED additionally requires that tone resonant and substitutes the
      dressed linewidth when a model is supplied.
    * DOUBLE_DRESSED: the four second-frame branches, equal weights.
    """
    zfs = effective_zfs(params)
    lam_single = params.gamma_e * drive.b_mw / 2.0

    if scheme is Scheme.BARE:
        gb, gd = params.gamma_bright, params.gamma_dark
        return [
            ModeFamily("bright", 0.5, zfs.level_bright, zfs.level_bright, lam_single, 0.0, gb, gb),
            ModeFamily("dark", 0.5, zfs.level_dark, zfs.level_dark, lam_single, 0.0, gd, gd),
        ]

    if scheme in (Scheme.DRESSED, Scheme.PREVIOUS_SINGLE_RF):
        if scheme is Scheme.DRESSED:
            if drive.b_rfc <= 0:
                raise ParameterError("DRESSED scheme requires a control RF amplitude > 0")
            _require_resonant_control(zfs, drive, tol_res)
            gb, gd = _dressed_gammas(params, drive, linewidth)
        else:
            gb, gd = params.gamma_bright, params.gamma_dark
        coupling = params.gamma_e * drive.b_rfc / 2.0
        freq_rf = drive.freq_rfc
        return [
            ModeFamily(
                "rf_bright",
                0.5,
                zfs.level_bright,
                zfs.level_dark + freq_rf,
                lam_single,
                coupling,
                gb,
                gd,
            ),
            ModeFamily(
                "rf_dark",
                0.5,
                zfs.level_dark,
                zfs.level_bright - freq_rf,
                lam_single,
                coupling,
                gb,
                gd,
            ),
        ]

    if scheme is Scheme.DOUBLE_DRESSED:
        if drive.b_rfc <= 0:
            raise ParameterError("DOUBLE_DRESSED scheme requires a control RF amplitude > 0")
        if drive.b_rft > 0 and not drive.freq_rft > 0:
            raise ParameterError("target RF frequency must be positive")
        _require_resonant_control(zfs, drive, tol_res)
        gb, gd = _dressed_gammas(params, drive, linewidth)
        lam = params.gamma_e * drive.b_mw / (2.0 * SQRT2)
        coupling = params.gamma_e * drive.b_rft / 4.0
        families = []
        for branch in Branch:
            level_b, level_d = _branch_levels(params, zfs, drive, branch)
            families.append(
                ModeFamily(branch.value, 0.25, level_b, level_d, lam, coupling, gb, gd)
            )
        return families

    raise ParameterError(f"unknown scheme {scheme!r}")


def contrast_at(
    params,
    drive,
    mw_frequencies,
    scheme,
    linewidth=None,
    contrast_scale=DEFAULT_CONTRAST_SCALE,
    tol_res=DEFAULT_CONTROL_TOLERANCE,
):
    """Contrast (negative-going, baseline 0) at the given microwave
    frequencies for one scheme."""
    families = scheme_families(params, drive, scheme, linewidth=linewidth, tol_res=tol_res)
    mw = np.asarray(mw_frequencies, dtype=float)
    total = np.zeros_like(mw)
    for fam in families:
        total += fam.weight * fam.depletion(mw)
    return -contrast_scale * total


def default_mw_grid(zfs, points=DEFAULT_GRID_POINTS, halfspan_in_ex=DEFAULT_GRID_HALFSPAN_IN_EX):
    """Synthesis grid centered on D' spanning +- halfspan_in_ex * Ex'."""
    half = halfspan_in_ex * zfs.ex_prime
    return np.linspace(zfs.d_prime - half, zfs.d_prime + half, points)


def simulate_spectrum(
    params,
    drive,
    mw_grid,
    scheme,
    linewidth=None,
    contrast_scale=DEFAULT_CONTRAST_SCALE,
    tol_res=DEFAULT_CONTROL_TOLERANCE,
):
    """Synthesize a CW-ODMR spectrum on ``mw_grid`` for ``scheme``.

    ``linewidth`` is an optional callable mapping the control amplitude (T)
    to the dressed-state decay rate (Hz); it replaces the bare rates for the
    DRESSED and DOUBLE_DRESSED schemes.
    """
    grid = np.asarray(mw_grid, dtype=float)
    if grid.size == 0:
        raise ParameterError("microwave grid must be non-empty")
    contrast = contrast_at(
        params,
        drive,
        grid,
        scheme,
        linewidth=linewidth,
        contrast_scale=contrast_scale,
        tol_res=tol_res,
    )
    meta = {
        "scheme": scheme.value,
        "params": params,
        "drive": drive,
        "contrast_scale": contrast_scale,
        "grid": (float(grid[0]), float(grid[-1]), int(grid.size)),
    }
    return Spectrum(mw_frequencies=grid, contrast=contrast, meta=meta)
