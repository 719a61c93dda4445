"""Closed-form resonance frequencies, Lorentzian dip fitting and splitting
slope regression.

The double-dressed microwave resonances come in four +- pairs.  Writing
gc = gamma_e*B_control, gt = gamma_e*B_target and f_t for the target RF
frequency:

    pair 1+-: D' + 2Ex' - f_t/2 +- (1/4) sqrt(4(f_t + gc - 2Ex')^2 + gt^2)
    pair 2+-: D' + f_t/2        +- same radical
    pair 3+-: D' + f_t/2        +- (1/4) sqrt(4(2Ex' - f_t + gc)^2 + gt^2)
    pair 4+-: D' + 2Ex' - f_t/2 +- same radical as pair 3

Pairs 1 and 4 have centers that move at first order with the strain Ex' and
are therefore flagged electric-noise sensitive; pairs 2 and 3 are pinned to
the externally supplied f_t.

The single-RF scheme resonances use the coupled-oscillator half radical

    D' +- f/2 +- (1/2) sqrt((2Ex' - f)^2 + (gamma_e B)^2)

whose on-resonance splitting slope is gamma_e, consistent with the linear
splitting observed on control-amplitude sweeps.
"""

from dataclasses import dataclass

import numpy as np
from scipy import signal
from scipy.optimize import least_squares

from .errors import (
    ControlOffResonance,
    DegenerateSweep,
    FitDiverged,
    InsufficientResolution,
    NegativeFrequency,
    ParameterError,
)
from .steady_state import DEFAULT_CONTROL_TOLERANCE, Scheme

#: Relative rms residual (vs peak-to-peak signal) above which a fit is
#: reported as diverged.
FIT_RESIDUAL_LIMIT = 0.2


@dataclass(frozen=True)
class ResonanceEntry:
    label: str
    branch: str
    frequency: float
    electric_noise_sensitive: bool = False


@dataclass(frozen=True)
class ResonanceSet:
    scheme: Scheme
    entries: tuple

    @property
    def frequencies(self):
        return np.array([e.frequency for e in self.entries])

    def pair(self, branch):
        """(minus, plus) frequencies of one +- pair."""
        hits = sorted(e.frequency for e in self.entries if e.branch == branch)
        if len(hits) != 2:
            raise ParameterError(f"branch {branch!r} does not form a pair")
        return tuple(hits)

    def splitting(self, branch):
        low, high = self.pair(branch)
        return high - low


@dataclass(frozen=True)
class DipFit:
    """One fitted Lorentzian dip; ``residual`` is the rms of the whole fit."""

    center: float
    fwhm: float
    depth: float
    residual: float


def resonances_double_dressed(zfs, drive, gamma_e, tol_res=DEFAULT_CONTROL_TOLERANCE):
    """All eight double-dressed microwave resonances for the given drive."""
    if abs(drive.freq_rfc - zfs.control_resonance) > tol_res:
        raise ControlOffResonance(
            "control RF %.6e Hz is not resonant with 2 Ex' = %.6e Hz"
            % (drive.freq_rfc, zfs.control_resonance)
        )
    gc = gamma_e * drive.b_rfc
    gt = gamma_e * drive.b_rft
    ft = drive.freq_rft
    two_ex = zfs.control_resonance
    center_outer = zfs.d_prime + two_ex - ft / 2.0
    center_inner = zfs.d_prime + ft / 2.0
    rad_low = 0.25 * np.sqrt(4.0 * (ft + gc - two_ex) ** 2 + gt**2)
    rad_high = 0.25 * np.sqrt(4.0 * (two_ex - ft + gc) ** 2 + gt**2)
    entries = []
    for branch, center, rad, noisy in (
        ("res1", center_outer, rad_low, True),
        ("res2", center_inner, rad_low, False),
        ("res3", center_inner, rad_high, False),
        ("res4", center_outer, rad_high, True),
    ):
        entries.append(ResonanceEntry(branch + "-", branch, center - rad, noisy))
        entries.append(ResonanceEntry(branch + "+", branch, center + rad, noisy))
    return ResonanceSet(Scheme.DOUBLE_DRESSED, tuple(entries))


def resonances_previous(zfs, drive, gamma_e):
    """The four single-RF-scheme resonances (control tone doubles as the
    sensed field; the target tone is unused)."""
    g = gamma_e * drive.b_rfc
    f = drive.freq_rfc
    rad = 0.5 * np.sqrt((zfs.control_resonance - f) ** 2 + g**2)
    entries = []
    for branch, center in (("prev1", zfs.d_prime + f / 2.0), ("prev2", zfs.d_prime - f / 2.0)):
        entries.append(ResonanceEntry(branch + "-", branch, center - rad))
        entries.append(ResonanceEntry(branch + "+", branch, center + rad))
    return ResonanceSet(Scheme.PREVIOUS_SINGLE_RF, tuple(entries))


def resonances_bare(zfs):
    entries = (
        ResonanceEntry("dark", "dark", zfs.level_dark),
        ResonanceEntry("bright", "bright", zfs.level_bright),
    )
    return ResonanceSet(Scheme.BARE, entries)


def resonances_for_scheme(zfs, drive, gamma_e, scheme, tol_res=DEFAULT_CONTROL_TOLERANCE):
    if scheme is Scheme.BARE:
        return resonances_bare(zfs)
    if scheme in (Scheme.DRESSED, Scheme.PREVIOUS_SINGLE_RF):
        return resonances_previous(zfs, drive, gamma_e)
    if scheme is Scheme.DOUBLE_DRESSED:
        return resonances_double_dressed(zfs, drive, gamma_e, tol_res=tol_res)
    raise ParameterError(f"unknown scheme {scheme!r}")


def resonant_target_condition(zfs, b_rfc, gamma_e):
    """Target RF frequencies (low, high) resonant with the dressed states:
    2Ex' -+ gamma_e*B_control."""
    if b_rfc < 0:
        raise ParameterError("control amplitude must be non-negative")
    low = zfs.control_resonance - gamma_e * b_rfc
    high = zfs.control_resonance + gamma_e * b_rfc
    if low <= 0:
        raise NegativeFrequency(
            "low resonant target frequency %.3e Hz is non-positive: control "
            "amplitude too large for strain 2 Ex' = %.3e Hz" % (low, zfs.control_resonance)
        )
    return low, high


def _noise_scale(y):
    """Robust per-sample noise estimate from second differences (smooth
    structure contributes little to the median)."""
    if y.size < 5:
        return 0.0
    d2 = np.abs(np.diff(y, 2))
    return float(np.median(d2)) / (0.6745 * np.sqrt(6.0))


def _find_dip_candidates(y):
    """Detected dips (indices, prominences, half-prominence widths in
    samples), noise-filtered, deepest-prominence first.

    The half-prominence width seeds the fit; for overlapping dips it
    underestimates the true linewidth because the prominence is clipped by
    the inter-dip hump, which resolvability checks must account for."""
    noise = _noise_scale(y)
    threshold = max(6.0 * noise, 1e-12 * max(np.ptp(y), 1e-300))
    peaks, props = signal.find_peaks(-y, prominence=threshold)
    if peaks.size == 0:
        return peaks, np.array([]), np.array([])
    widths_half = signal.peak_widths(-y, peaks, rel_height=0.5)[0]
    order = np.argsort(props["prominences"])[::-1]
    return peaks[order], props["prominences"][order], widths_half[order]


def _dip_model(x, baseline, centers, fwhms, depths):
    y = np.full_like(x, baseline)
    for c, w, d in zip(centers, fwhms, depths):
        hw2 = (w / 2.0) ** 2
        y = y - d * hw2 / ((x - c) ** 2 + hw2)
    return y


def _polish_components(x, y, baseline, centers, fwhms, depths, step):
    """Per-component local refinement of the global fit.

    Each Lorentzian is re-fit (with a free local offset) on a window around
    its center after subtracting the other components, so shallow dips are
    not biased by far-wing model mismatch of much deeper ones.  Components
    whose local fit fails keep their global parameters.
    """
    centers = centers.copy()
    fwhms = fwhms.copy()
    depths = depths.copy()
    width_scale = float(np.median(fwhms))
    for k in range(len(centers)):
        others = [j for j in range(len(centers)) if j != k]
        background = _dip_model(
            x, baseline, centers[others], fwhms[others], depths[others]
        )
        local = y - (background - baseline)
        w_est = float(np.clip(fwhms[k], 5 * step, 3.0 * width_scale))
        mask = np.abs(x - centers[k]) < 2.0 * w_est
        if np.count_nonzero(mask) < 8:
            continue
        xs, ys = x[mask], local[mask]

        def local_residuals(q):
            off, c, w, d = q
            hw2 = (w / 2.0) ** 2
            return off - d * hw2 / ((xs - c) ** 2 + hw2) - ys

        sol = least_squares(
            local_residuals,
            [baseline, centers[k], w_est, max(depths[k], 1e-30)],
            xtol=1e-15,
            ftol=1e-15,
            gtol=1e-15,
            max_nfev=400,
        )
        _, c_new, w_new, d_new = sol.x
        if np.all(np.isfinite(sol.x)) and w_new > 0 and d_new >= 0 and xs[0] < c_new < xs[-1]:
            centers[k], fwhms[k], depths[k] = c_new, w_new, d_new
    return centers, fwhms, depths


def fit_dips(spectrum, n_dips, init=None, residual_limit=FIT_RESIDUAL_LIMIT):
    """Least-squares fit of ``n_dips`` Lorentzian dips plus a constant
    baseline to a spectrum; returns the fits sorted by center.

    Initial centers default to the ``n_dips`` deepest local minima; when two
    candidate centers coincide the later one is pushed one grid step outward
    so the optimizer starts from distinct dips.  Raises
    InsufficientResolution when the grid does not expose ``n_dips`` minima
    (or resolves a dip with fewer than ~5 points per width) and FitDiverged
    when the optimizer returns non-finite values or a residual above
    ``residual_limit`` times the signal range.
    """
    if n_dips < 1:
        raise ParameterError("n_dips must be at least 1")
    x = np.asarray(spectrum.mw_frequencies, dtype=float)
    y = np.asarray(spectrum.contrast, dtype=float)
    if x.size < 4 * n_dips:
        raise InsufficientResolution(
            f"{x.size} samples cannot constrain {n_dips} dips"
        )
    step = np.median(np.diff(x))
    baseline0 = float(np.percentile(y, 95.0))
    peaks, prominences, widths_half = _find_dip_candidates(y)
    # A dip is under-resolved when its half-prominence width spans fewer
    # than ~5 samples; overlap-limited dips (prominence clipped well below
    # the depth from baseline by an inter-dip hump) are exempt because their
    # true linewidth exceeds the clipped estimate.
    isolated = np.ones(peaks.size, dtype=bool)
    if peaks.size:
        depth_from_baseline = np.maximum(baseline0 - y[peaks], 1e-300)
        isolated = prominences >= 0.6 * depth_from_baseline
    unresolved = isolated & (widths_half < 5.0)

    if init is None:
        if peaks.size < n_dips:
            raise InsufficientResolution(
                f"found {peaks.size} resolvable dips, need {n_dips}"
            )
        keep = np.argsort(peaks[:n_dips])
        chosen = peaks[:n_dips][keep]
        centers0 = x[chosen].astype(float)
        # Deterministic tie-break: coincident centers step outward.
        for k in range(1, len(centers0)):
            if centers0[k] <= centers0[k - 1]:
                centers0[k] = centers0[k - 1] + step
        widths0 = np.maximum(widths_half[:n_dips][keep] * step, step)
        depths0 = np.maximum(prominences[:n_dips][keep], 1e-30)
        bad = unresolved[:n_dips]
    else:
        centers0 = np.sort(np.asarray(init, dtype=float))
        if centers0.size != n_dips:
            raise ParameterError("init must supply one center per requested dip")
        widths0 = np.empty(n_dips)
        depths0 = np.empty(n_dips)
        bad = np.zeros(n_dips, dtype=bool)
        for k, c in enumerate(centers0):
            i_near = int(np.argmin(np.abs(x - c)))
            if peaks.size:
                j = int(np.argmin(np.abs(peaks - i_near)))
                widths0[k] = max(widths_half[j] * step, step)
                bad[k] = unresolved[j]
            else:
                widths0[k] = 10 * step
            depths0[k] = max(baseline0 - y[i_near], 1e-30)

    if np.any(bad) and x.size < 50 * n_dips:
        raise InsufficientResolution(
            "grid spacing %.3e Hz leaves fewer than 5 points per dip width" % step
        )

    scale = max(np.ptp(y), 1e-30)

    def pack(baseline, centers, fwhms, depths):
        return np.concatenate(([baseline], centers, fwhms, depths))

    def unpack(p):
        return p[0], p[1 : 1 + n_dips], p[1 + n_dips : 1 + 2 * n_dips], p[1 + 2 * n_dips :]

    def residuals(p):
        b, c, w, d = unpack(p)
        return _dip_model(x, b, c, w, d) - y

    # Components are anchored near their initial dips (and their widths
    # capped) so shallow dips cannot be abandoned in favor of polishing the
    # wings of deep ones.
    anchor = np.maximum(3.0 * widths0, 3.0 * step)
    p0 = pack(baseline0, centers0, widths0, depths0)
    lower = pack(baseline0 - scale, centers0 - anchor, np.full(n_dips, step / 2.0), np.zeros(n_dips))
    upper = pack(baseline0 + scale, centers0 + anchor, 25.0 * widths0, np.full(n_dips, 10 * scale))
    p0 = np.clip(p0, lower, upper)
    x_scale = pack(scale, widths0 / 10.0, widths0, np.maximum(depths0, scale / 10))

    result = least_squares(
        residuals,
        p0,
        bounds=(lower, upper),
        x_scale=x_scale,
        method="trf",
        xtol=1e-15,
        ftol=1e-15,
        gtol=1e-15,
        max_nfev=2000,
    )
    if not np.all(np.isfinite(result.x)):
        raise FitDiverged("optimizer returned non-finite parameters")
    baseline, centers, fwhms, depths = unpack(result.x)
    centers, fwhms, depths = _polish_components(x, y, baseline, centers, fwhms, depths, step)
    # constant baseline refit for the final parameter set
    baseline = float(baseline + np.mean(y - _dip_model(x, baseline, centers, fwhms, depths)))
    rms = float(np.sqrt(np.mean((_dip_model(x, baseline, centers, fwhms, depths) - y) ** 2)))
    if rms > residual_limit * scale:
        raise FitDiverged(
            "fit rms residual %.3e exceeds %.2f of the signal range %.3e"
            % (rms, residual_limit, scale)
        )
    fits = [
        DipFit(center=float(c), fwhm=float(w), depth=float(d), residual=rms)
        for c, w, d in zip(centers, fwhms, depths)
    ]
    fits.sort(key=lambda f: f.center)
    for f in fits:
        if not (f.fwhm > 0 and f.depth >= 0):
            raise FitDiverged("fit produced a non-physical width or depth")
    return fits


def splitting_slope(sweep):
    """Ordinary least-squares slope (with intercept) of splitting vs
    amplitude; returns (slope, standard_error), both Hz/T."""
    pts = [(float(a), float(s)) for a, s in sweep]
    amplitudes = np.array([p[0] for p in pts])
    splittings = np.array([p[1] for p in pts])
    if np.unique(amplitudes).size < 3:
        raise DegenerateSweep(
            f"need at least 3 distinct amplitudes, got {np.unique(amplitudes).size}"
        )
    n = amplitudes.size
    design = np.column_stack([amplitudes, np.ones(n)])
    coef, _, _, _ = np.linalg.lstsq(design, splittings, rcond=None)
    slope = coef[0]
    resid = splittings - design @ coef
    dof = n - 2
    s2 = float(resid @ resid) / dof if dof > 0 else 0.0
    sxx = float(np.sum((amplitudes - amplitudes.mean()) ** 2))
    stderr = np.sqrt(s2 / sxx) if sxx > 0 else float("inf")
    return float(slope), float(stderr)
