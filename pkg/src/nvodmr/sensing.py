"""Measurement pipeline: contrast response curves, quadratic fits,
sensitivity, bandwidth and hybrid scheme selection.

The sensed quantity is the contrast change S(B) at a fixed microwave
operating frequency as the target amplitude grows.  S is quadratic at small
amplitude (the induced splitting is buried in the linewidth), so the
pipeline fits S = a B^2 + S0, evaluates the slope |dS/dB| = 2 a B at a bias
amplitude, and converts a contrast noise floor delta_S (contrast / sqrt(Hz))
into a field sensitivity delta_S / slope (T / sqrt(Hz)).
"""

import math
from dataclasses import dataclass, replace
from enum import Enum

import numpy as np

from .errors import NoOptimum, ParameterError, ZeroSlope
from .spin import effective_zfs
from .steady_state import DEFAULT_CONTRAST_SCALE, Scheme, contrast_at

#: Target frequencies closer to 2Ex' than this are unusable for the
#: double-dressed scheme (electric-field noise region).
DEFAULT_DEAD_ZONE_HALFWIDTH = 0.71e6

#: Quadratic-fit amplitude grids stop where the induced splitting reaches
#: this fraction of the local decay rate (keeps the fit in the quadratic
#: regime).
QUADRATIC_FIT_SPLITTING_FRACTION = 0.25
QUADRATIC_FIT_POINTS = 9


class Side(Enum):
    """Which of the two dressed operating points the probe sits on."""

    LOW = "low"
    HIGH = "high"


class SchemeChoice(Enum):
    DOUBLE_DRESSED = "double_dressed"
    PREVIOUS_SINGLE_RF = "previous_single_rf"
    UNSUPPORTED = "unsupported"


@dataclass(frozen=True)
class LinewidthModel:
    """Phenomenological dressed-state decay rate versus control amplitude:

        rate(B) = residual + electric / (1 + (B / suppression_scale)^2)
                  + fluctuation_coeff * gamma_e * B

    The electric term is suppressed as the control dressing grows, while
    control-amplitude fluctuations broaden the line linearly, so the rate has
    a unique interior minimum.  The shipped demo profile is a calibration, not
    a first-principles result.
    """

    gamma_residual: float
    gamma_electric: float
    suppression_scale: float
    fluctuation_coeff: float
    gamma_e: float = 28e9

    def __post_init__(self):
        for name in (
            "gamma_residual",
            "gamma_electric",
            "suppression_scale",
            "fluctuation_coeff",
            "gamma_e",
        ):
            if getattr(self, name) < 0:
                raise ParameterError(f"{name} must be non-negative")

    def __call__(self, b_control):
        if b_control < 0:
            raise ParameterError("control amplitude must be non-negative")
        suppressed = self.gamma_electric / (1.0 + (b_control / self.suppression_scale) ** 2)
        return (
            self.gamma_residual
            + suppressed
            + self.fluctuation_coeff * self.gamma_e * b_control
        )

    def minimum(self, b_max=5e-4, samples=20001):
        """(B, rate) at the interior minimum, located numerically."""
        grid = np.linspace(0.0, b_max, samples)
        rates = np.array([self(b) for b in grid])
        i = int(np.argmin(rates))
        if 0 < i < samples - 1:
            # parabolic refinement on the three bracketing samples
            y0, y1, y2 = rates[i - 1 : i + 2]
            denom = y0 - 2 * y1 + y2
            shift = 0.5 * (y0 - y2) / denom if denom != 0 else 0.0
            step = grid[1] - grid[0]
            b = grid[i] + shift * step
            return float(b), float(self(b))
        return float(grid[i]), float(rates[i])


def demo_linewidth_model(gamma_e=28e9):
    """Demo calibration: minimum near 34 uT of control amplitude and a
    dressed rate well below the bare one at the reference operating point."""
    return LinewidthModel(
        gamma_residual=3.6e4,
        gamma_electric=1.2e4,
        suppression_scale=26.5e-6,
        fluctuation_coeff=0.006,
        gamma_e=gamma_e,
    )


@dataclass(frozen=True)
class ResponseCurve:
    amplitudes: np.ndarray
    response: np.ndarray
    fixed_mw: float
    scheme: Scheme


@dataclass(frozen=True)
class QuadraticFit:
    a: float
    s0: float
    rms_residual: float


@dataclass(frozen=True)
class SensitivityReport:
    target_frequency: float
    delta_s: float
    slope: float
    sensitivity: float
    bias_amplitude: float
    scheme: Scheme
    valid: bool


def mw_operating_point(zfs, b_rfc, side, gamma_e):
    """Fixed probe frequency for the double-dressed measurement:
    D' + Ex' -+ gamma_e*B_control/2."""
    if b_rfc < 0:
        raise ParameterError("control amplitude must be non-negative")
    half = gamma_e * b_rfc / 2.0
    if side is Side.LOW:
        return zfs.level_bright - half
    return zfs.level_bright + half


def _operating_point(zfs, drive, scheme, side, gamma_e):
    if scheme is Scheme.DOUBLE_DRESSED:
        return mw_operating_point(zfs, drive.b_rfc, side, gamma_e)
    if scheme is Scheme.PREVIOUS_SINGLE_RF:
        half = drive.freq_rfc / 2.0
        return zfs.d_prime + (half if side is Side.HIGH else -half)
    raise ParameterError(f"no sensing operating point for scheme {scheme!r}")


def scheme_splitting_slope(scheme, gamma_e):
    """d(splitting)/d(amplitude) of the sensed pair: gamma_e for the single-RF
    scheme, gamma_e/2 for the double-dressed one."""
    if scheme is Scheme.PREVIOUS_SINGLE_RF:
        return gamma_e
    if scheme is Scheme.DOUBLE_DRESSED:
        return gamma_e / 2.0
    raise ParameterError(f"scheme {scheme!r} does not sense an amplitude")


def default_bias_amplitude(scheme, local_gamma, gamma_e):
    """Bias where the induced splitting equals half the local decay rate."""
    return 0.5 * local_gamma / scheme_splitting_slope(scheme, gamma_e)


def quadratic_fit_grid(scheme, local_gamma, gamma_e, points=QUADRATIC_FIT_POINTS):
    """Amplitude grid for the quadratic fit, capped so the splitting stays at
    a small fraction of the local decay rate."""
    b_max = QUADRATIC_FIT_SPLITTING_FRACTION * local_gamma / scheme_splitting_slope(
        scheme, gamma_e
    )
    return np.linspace(0.0, b_max, points)


def contrast_response(
    params,
    drive_template,
    side,
    amplitude_grid,
    scheme=Scheme.DOUBLE_DRESSED,
    linewidth=None,
    contrast_scale=DEFAULT_CONTRAST_SCALE,
):
    """Contrast change versus sensed amplitude at the fixed operating point,
    with its quadratic fit.

    For DOUBLE_DRESSED the target tone is swept with its frequency pinned to
    the resonant condition matching ``side``; for PREVIOUS_SINGLE_RF the
    single RF tone is swept at the template's frequency (which may be
    detuned).  The amplitude grid must include 0, which defines the
    reference; S(0) = 0 by construction.
    """
    grid = np.asarray(amplitude_grid, dtype=float)
    if grid.size == 0 or not np.any(grid == 0.0):
        raise ParameterError("amplitude grid must include 0")
    zfs = effective_zfs(params)

    if scheme is Scheme.DOUBLE_DRESSED:
        from .resonance import resonant_target_condition

        low, high = resonant_target_condition(zfs, drive_template.b_rfc, params.gamma_e)
        freq_rft = low if side is Side.LOW else high
        base = replace(drive_template, freq_rft=freq_rft)

        def at(amp):
            return replace(base, b_rft=float(amp))

    elif scheme is Scheme.PREVIOUS_SINGLE_RF:
        base = drive_template

        def at(amp):
            return replace(base, b_rfc=float(amp))

    else:
        raise ParameterError(f"scheme {scheme!r} does not define a response curve")

    fixed_mw = _operating_point(zfs, base, scheme, side, params.gamma_e)
    contrasts = np.array(
        [
            float(
                contrast_at(
                    params,
                    at(amp),
                    fixed_mw,
                    scheme,
                    linewidth=linewidth,
                    contrast_scale=contrast_scale,
                )
            )
            for amp in grid
        ]
    )
    reference = contrasts[np.flatnonzero(grid == 0.0)[0]]
    response = contrasts - reference

    design = np.column_stack([grid**2, np.ones_like(grid)])
    coef, _, _, _ = np.linalg.lstsq(design, response, rcond=None)
    resid = response - design @ coef
    fit = QuadraticFit(
        a=float(coef[0]), s0=float(coef[1]), rms_residual=float(np.sqrt(np.mean(resid**2)))
    )
    curve = ResponseCurve(amplitudes=grid, response=response, fixed_mw=fixed_mw, scheme=scheme)
    return curve, fit


def sensitivity(
    fit,
    delta_s,
    bias_amplitude,
    target_frequency=float("nan"),
    scheme=Scheme.DOUBLE_DRESSED,
    valid=True,
):
    """Field sensitivity delta_S / |dS/dB| with dS/dB = 2 a B at the bias."""
    if not bias_amplitude > 0:
        raise ParameterError("bias amplitude must be positive")
    slope = abs(2.0 * fit.a * bias_amplitude)
    if slope == 0.0:
        raise ZeroSlope("response slope vanished; sensitivity undefined")
    return SensitivityReport(
        target_frequency=target_frequency,
        delta_s=delta_s,
        slope=slope,
        sensitivity=delta_s / slope,
        bias_amplitude=bias_amplitude,
        scheme=scheme,
        valid=valid,
    )


def rwa_valid_range(zfs):
    """Target-frequency window (Ex', 3Ex') where the control amplitude stays
    below half its own frequency, keeping the rotating-wave closed forms
    trustworthy."""
    if not zfs.ex_prime > 0:
        raise ParameterError("strain splitting must be positive")
    center = zfs.control_resonance
    return center / 2.0, 1.5 * center


def choose_scheme(omega_target, zfs, dead_zone_halfwidth=DEFAULT_DEAD_ZONE_HALFWIDTH):
    """Hybrid selection: the single-RF scheme inside the electric-noise dead
    zone, the double-dressed scheme elsewhere within its tunable range."""
    if not omega_target > 0:
        raise ParameterError("target frequency must be positive")
    if abs(omega_target - zfs.control_resonance) < dead_zone_halfwidth:
        return SchemeChoice.PREVIOUS_SINGLE_RF
    low, high = rwa_valid_range(zfs)
    if low <= omega_target <= high:
        return SchemeChoice.DOUBLE_DRESSED
    return SchemeChoice.UNSUPPORTED


def _report_for_frequency(
    params,
    drive_template,
    freq,
    scheme,
    delta_s,
    linewidth,
    dead_zone_halfwidth,
    bias_amplitude,
    contrast_scale,
):
    zfs = effective_zfs(params)
    gamma_e = params.gamma_e

    if scheme is Scheme.DOUBLE_DRESSED:
        offset = freq - zfs.control_resonance
        b_rfc = abs(offset) / gamma_e
        in_dead_zone = abs(offset) < dead_zone_halfwidth
        low, high = rwa_valid_range(zfs)
        valid = (low <= freq <= high) and not in_dead_zone
        if b_rfc == 0.0:
            # Degenerate with the single-RF scheme; evaluated as such but
            # reported under the requested scheme and flagged invalid.
            template = replace(drive_template, b_rfc=0.0, freq_rfc=freq, b_rft=0.0)
            return _report_for_frequency(
                params,
                template,
                freq,
                Scheme.PREVIOUS_SINGLE_RF,
                delta_s,
                linewidth,
                dead_zone_halfwidth,
                bias_amplitude,
                contrast_scale,
            )
        template = replace(
            drive_template, b_rfc=b_rfc, freq_rfc=zfs.control_resonance, b_rft=0.0
        )
        local_gamma = linewidth(b_rfc) if linewidth is not None else params.gamma_bright
        side_preference = (Side.LOW, Side.HIGH) if offset < 0 else (Side.HIGH, Side.LOW)
    elif scheme is Scheme.PREVIOUS_SINGLE_RF:
        template = replace(drive_template, b_rfc=0.0, freq_rfc=freq, b_rft=0.0)
        local_gamma = params.gamma_bright
        valid = True
        side_preference = (Side.HIGH, Side.LOW)
    else:
        raise ParameterError(f"scheme {scheme!r} is not a sensing scheme")

    bias = bias_amplitude or default_bias_amplitude(scheme, local_gamma, gamma_e)
    grid = quadratic_fit_grid(scheme, local_gamma, gamma_e)

    best = None
    for side in side_preference:
        _, fit = contrast_response(
            params,
            template,
            side,
            grid,
            scheme=scheme,
            linewidth=linewidth,
            contrast_scale=contrast_scale,
        )
        report = sensitivity(
            fit, delta_s, bias, target_frequency=freq, scheme=scheme, valid=valid
        )
        if best is None or report.sensitivity < best.sensitivity:
            best = report
    return best


def sensitivity_vs_frequency(
    params,
    drive_template,
    frequency_grid,
    scheme,
    delta_s,
    linewidth=None,
    dead_zone_halfwidth=DEFAULT_DEAD_ZONE_HALFWIDTH,
    bias_amplitude=None,
    contrast_scale=DEFAULT_CONTRAST_SCALE,
    threads=1,
):
    """Sensitivity reports across target frequencies, sorted by frequency.

    For the double-dressed scheme each frequency fixes the control amplitude
    through the resonant condition (both operating sides are evaluated and
    the better kept) and the dressed decay rate follows the linewidth model;
    dead-zone and out-of-range points are flagged invalid.  For the single-RF
    scheme the tone is applied directly at the target frequency.

    Grid points are independent; ``threads`` > 1 (or 0 for auto) evaluates
    them concurrently with the output still emitted in frequency order.
    """
    freqs = np.sort(np.asarray(frequency_grid, dtype=float))

    def one(f):
        return _report_for_frequency(
            params,
            drive_template,
            float(f),
            scheme,
            delta_s,
            linewidth,
            dead_zone_halfwidth,
            bias_amplitude,
            contrast_scale,
        )

    if threads == 1 or freqs.size <= 1:
        return [one(f) for f in freqs]
    from concurrent.futures import ThreadPoolExecutor
    import os

    workers = threads if threads > 0 else (os.cpu_count() or 1)
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(one, freqs))


def bandwidth(reports):
    """Contiguous frequency band around the sensitivity optimum where the
    sensitivity value stays within twice the optimum, linearly interpolating
    the crossings; returns (band_low, band_high, width).

    The optimum is taken over *valid* reports only (the dead zone cannot host
    an operating point), but the contiguous region may span invalid points:
    validity marks operational coverage, which the hybrid map handles.
    """
    reports = sorted(reports, key=lambda r: r.target_frequency)
    if sum(1 for r in reports if r.valid) < 3:
        raise NoOptimum("need at least 3 valid reports to define a bandwidth")
    freqs = np.array([r.target_frequency for r in reports])
    values = np.array([r.sensitivity for r in reports])
    usable = np.array([r.valid and math.isfinite(r.sensitivity) for r in reports])
    if not np.any(usable):
        raise NoOptimum("no finite sensitivity values among valid reports")
    i_opt = int(np.flatnonzero(usable)[np.argmin(values[usable])])
    threshold = 2.0 * values[i_opt]

    def cross(i_in, i_out):
        # linear interpolation of the threshold crossing between grid points
        f_in, f_out = freqs[i_in], freqs[i_out]
        v_in, v_out = values[i_in], values[i_out]
        if not math.isfinite(v_out):
            return f_in
        if v_out == v_in:
            return f_out
        return f_in + (threshold - v_in) * (f_out - f_in) / (v_out - v_in)

    lo = i_opt
    while lo > 0 and np.isfinite(values[lo - 1]) and values[lo - 1] <= threshold:
        lo -= 1
    band_low = freqs[0] if lo == 0 else cross(lo, lo - 1)

    hi = i_opt
    while hi < len(values) - 1 and np.isfinite(values[hi + 1]) and values[hi + 1] <= threshold:
        hi += 1
    band_high = freqs[-1] if hi == len(values) - 1 else cross(hi, hi + 1)

    return float(band_low), float(band_high), float(band_high - band_low)
