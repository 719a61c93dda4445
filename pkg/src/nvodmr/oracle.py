"""Independent numerical validators for the closed-form model.

Two routes:

* ``steady_state_linear_solve`` solves the two-mode steady state as an
  explicit 2x2 complex linear system, certifying the closed-form
  populations.
* ``integrate_lab_frame`` evolves the full 3x3 density matrix under the
  pre-RWA lab-frame Hamiltonian (every drive tone kept) with a simple
  dissipator: uniform repolarization toward |0> plus pure dephasing.  The
  coherence decay it produces maps onto the closed-form rates as
  Gamma ~ dephase_rate + relax_to_zero_rate/2 (all rates linear Hz; the
  integrator multiplies by 2*pi internally).

The integrator is a fixed-step RK4 with hand-unrolled 3x3 complex algebra,
JIT-compiled and batched over microwave frequencies so a whole spectral scan
shares one trajectory loop.  Spectra generated this way expose the dressed
and double-dressed dips with no rotating-wave approximation, which is what
``rwa_error_scan`` uses to bound the closed forms' validity in the drive
amplitude.
"""

from dataclasses import dataclass, replace

import numba as nb
import numpy as np

from .errors import ParameterError, SingularSystem, StepTooLarge, TraceDrift
from .resonance import fit_dips, resonances_previous
from .spin import effective_zfs, spin_operators
from .steady_state import Spectrum

TWO_PI = 2.0 * np.pi

#: Default dissipator rates (Hz): Gamma_eff = dephase + relax/2 = 5e5, i.e. a
#: bare dip fwhm of ~1 MHz.  Calibration knobs, not derived constants.
DEFAULT_RELAX_RATE = 1e5
DEFAULT_DEPHASE_RATE = 4.5e5

TRACE_BUDGET = 1e-6
MAX_SNAPSHOTS = 64


@dataclass(frozen=True)
class IntegrationConfig:
    """Fixed-step integration settings (seconds and Hz)."""

    t_end: float
    dt: float
    relax_to_zero_rate: float = DEFAULT_RELAX_RATE
    dephase_rate: float = DEFAULT_DEPHASE_RATE
    average_window: float = 0.0

    def __post_init__(self):
        if not self.dt > 0:
            raise ParameterError("dt must be positive")
        if not self.average_window > 0:
            raise ParameterError("average_window must be positive")
        if self.t_end < 10.0 * self.average_window * (1.0 - 1e-12):
            raise ParameterError("t_end must cover at least 10 averaging windows")
        if self.relax_to_zero_rate < 0 or self.dephase_rate < 0:
            raise ParameterError("dissipation rates must be non-negative")

    @property
    def gamma_effective(self):
        """Coherence decay rate (Hz) the dissipator imprints on the |0>-|+-1>
        transitions."""
        return self.dephase_rate + self.relax_to_zero_rate / 2.0


@dataclass(frozen=True)
class IntegrationResult:
    """Tail-averaged populations plus trajectory diagnostics."""

    p0: float
    p_plus: float
    p_minus: float
    max_trace_drift: float
    min_eigenvalue: float
    hermiticity_defect: float
    steps: int


def default_integration_config(
    drive_frequency,
    relax_to_zero_rate=DEFAULT_RELAX_RATE,
    dephase_rate=DEFAULT_DEPHASE_RATE,
):
    """Defaults per the sampling rules: dt = 1/(100 f_mw), t_end = 20/Gamma,
    average_window = t_end/10 (the window still spans thousands of microwave
    periods at any realistic linewidth)."""
    gamma = dephase_rate + relax_to_zero_rate / 2.0
    if not gamma > 0:
        raise ParameterError("dissipation rates must give a positive effective linewidth")
    t_end = 20.0 / gamma
    return IntegrationConfig(
        t_end=t_end,
        dt=1.0 / (100.0 * drive_frequency),
        relax_to_zero_rate=relax_to_zero_rate,
        dephase_rate=dephase_rate,
        average_window=t_end / 10.0,
    )


def steady_state_linear_solve(model):
    """Steady-state populations from the explicit 2x2 complex linear system

        (omega_b - i gamma_b) b + J d = -drive
        J b + (omega_d - i gamma_d) d = 0

    Returns (1 - |b|^2 - |d|^2, |b|^2, |d|^2).  This is the independent
    oracle for ``population_p0``.
    """
    a = np.array(
        [
            [model.omega_b - 1j * model.gamma_b, model.coupling],
            [model.coupling, model.omega_d - 1j * model.gamma_d],
        ],
        dtype=complex,
    )
    if abs(np.linalg.det(a)) < 1e-300:
        raise SingularSystem("steady-state system is singular")
    b, d = np.linalg.solve(a, np.array([-model.drive, 0.0], dtype=complex))
    pb = abs(b) ** 2
    pd = abs(d) ** 2
    return 1.0 - pb - pd, pb, pd


@nb.njit(cache=True)
def _rhs_into(out, r, h, decay, krepol):
    """out = -i 2pi [h, r] - decay*r + repolarization into |0> (index 1)."""
    for i in range(3):
        for j in range(3):
            acc = 0.0 + 0.0j
            for k in range(3):
                acc += h[i, k] * r[k, j] - r[i, k] * h[k, j]
            out[i, j] = -1j * TWO_PI * acc - decay[i, j] * r[i, j]
    gain = krepol * (r[0, 0].real + r[2, 2].real)
    out[1, 1] += gain


@nb.njit(cache=True)
def _evolve_batch(
    rho,
    h_static,
    sz,
    s_mw,
    mw_freqs,
    mw_amp,
    rf_amp_c,
    rf_freq_c,
    rf_amp_t,
    rf_freq_t,
    decay,
    krepol,
    dt,
    n_steps,
    avg_start,
    snap_stride,
    snaps,
    trace_budget,
):
    n = rho.shape[0]
    acc = np.zeros((n, 3))
    navg = 0
    max_drift = 0.0
    bad_step = -1
    snap_idx = 0
    h = np.empty((3, 3), np.complex128)
    k1 = np.empty((3, 3), np.complex128)
    k2 = np.empty((3, 3), np.complex128)
    k3 = np.empty((3, 3), np.complex128)
    k4 = np.empty((3, 3), np.complex128)
    tmp = np.empty((3, 3), np.complex128)
    for s in range(n_steps):
        t = s * dt
        rf0 = rf_amp_c * np.cos(TWO_PI * rf_freq_c * t) + rf_amp_t * np.cos(TWO_PI * rf_freq_t * t)
        rf1 = rf_amp_c * np.cos(TWO_PI * rf_freq_c * (t + 0.5 * dt)) + rf_amp_t * np.cos(
            TWO_PI * rf_freq_t * (t + 0.5 * dt)
        )
        rf2 = rf_amp_c * np.cos(TWO_PI * rf_freq_c * (t + dt)) + rf_amp_t * np.cos(
            TWO_PI * rf_freq_t * (t + dt)
        )
        for m in range(n):
            r = rho[m]
            w = mw_freqs[m]
            c0 = mw_amp * np.cos(TWO_PI * w * t)
            c1 = mw_amp * np.cos(TWO_PI * w * (t + 0.5 * dt))
            c2 = mw_amp * np.cos(TWO_PI * w * (t + dt))
            for i in range(3):
                for j in range(3):
                    h[i, j] = h_static[i, j] + rf0 * sz[i, j] + c0 * s_mw[i, j]
            _rhs_into(k1, r, h, decay, krepol)
            for i in range(3):
                for j in range(3):
                    h[i, j] = h_static[i, j] + rf1 * sz[i, j] + c1 * s_mw[i, j]
                    tmp[i, j] = r[i, j] + 0.5 * dt * k1[i, j]
            _rhs_into(k2, tmp, h, decay, krepol)
            for i in range(3):
                for j in range(3):
                    tmp[i, j] = r[i, j] + 0.5 * dt * k2[i, j]
            _rhs_into(k3, tmp, h, decay, krepol)
            for i in range(3):
                for j in range(3):
                    h[i, j] = h_static[i, j] + rf2 * sz[i, j] + c2 * s_mw[i, j]
                    tmp[i, j] = r[i, j] + dt * k3[i, j]
            _rhs_into(k4, tmp, h, decay, krepol)
            for i in range(3):
                for j in range(3):
                    r[i, j] += (dt / 6.0) * (
                        k1[i, j] + 2.0 * k2[i, j] + 2.0 * k3[i, j] + k4[i, j]
                    )
            drift = abs(r[0, 0].real + r[1, 1].real + r[2, 2].real - 1.0)
            if drift > max_drift:
                max_drift = drift
            if drift > trace_budget:
                bad_step = s
        if bad_step >= 0:
            break
        if snap_stride > 0 and s % snap_stride == 0 and snap_idx < snaps.shape[0]:
            for m in range(n):
                for i in range(3):
                    for j in range(3):
                        snaps[snap_idx, m, i, j] = rho[m, i, j]
            snap_idx += 1
        if s >= avg_start:
            for m in range(n):
                for i in range(3):
                    acc[m, i] += rho[m, i, i].real
            navg += 1
    return acc, navg, max_drift, bad_step, snap_idx


def _max_drive_frequency(params, drive, mw_freqs):
    zfs = effective_zfs(params)
    freqs = [zfs.level_bright]
    if drive.b_rfc > 0:
        freqs.append(drive.freq_rfc)
    if drive.b_rft > 0:
        freqs.append(drive.freq_rft)
    if drive.b_mw > 0:
        freqs.append(float(np.max(mw_freqs)))
    return max(freqs)


def scan_mw_frequencies(params, drive, mw_frequencies, config):
    """Integrate one trajectory per microwave frequency and return the
    tail-averaged populations as an (n, 3) array ordered (p0, p+1, p-1),
    plus the shared diagnostics."""
    mw = np.atleast_1d(np.asarray(mw_frequencies, dtype=float))
    f_max = _max_drive_frequency(params, drive, mw)
    if config.dt > 1.0 / (50.0 * f_max):
        raise StepTooLarge(
            "dt = %.3e s undersamples the fastest tone %.3e Hz "
            "(need dt <= %.3e s)" % (config.dt, f_max, 1.0 / (50.0 * f_max))
        )
    sx, sy, sz = spin_operators()
    zfs = effective_zfs(params)
    h_static = (
        zfs.d_prime * (sz @ sz) + zfs.ex_prime * (sx @ sx - sy @ sy)
    ).astype(np.complex128)
    s_mw = (sx if drive.mw_axis == "x" else sy).astype(np.complex128)

    k_phi = TWO_PI * config.dephase_rate
    k_r = TWO_PI * config.relax_to_zero_rate
    decay = np.zeros((3, 3))
    for i in range(3):
        for j in range(3):
            if i != j:
                decay[i, j] = k_phi
    # repolarization: |+-1> populations decay at k_r, coherences with |0> at
    # k_r/2 and the |+1><-1| coherence at k_r.
    decay[0, 0] += k_r
    decay[2, 2] += k_r
    decay[0, 1] += k_r / 2.0
    decay[1, 0] += k_r / 2.0
    decay[1, 2] += k_r / 2.0
    decay[2, 1] += k_r / 2.0
    decay[0, 2] += k_r
    decay[2, 0] += k_r

    n_steps = int(np.ceil(config.t_end / config.dt))
    avg_start = max(0, n_steps - int(np.round(config.average_window / config.dt)))
    snap_stride = max(1, n_steps // MAX_SNAPSHOTS)

    rho = np.zeros((mw.size, 3, 3), dtype=np.complex128)
    rho[:, 1, 1] = 1.0
    snaps = np.zeros((MAX_SNAPSHOTS, mw.size, 3, 3), dtype=np.complex128)

    acc, navg, max_drift, bad_step, snap_count = _evolve_batch(
        rho,
        np.ascontiguousarray(h_static),
        np.ascontiguousarray(sz.astype(np.complex128)),
        np.ascontiguousarray(s_mw),
        np.ascontiguousarray(mw),
        params.gamma_e * drive.b_mw,
        params.gamma_e * drive.b_rfc,
        drive.freq_rfc,
        params.gamma_e * drive.b_rft,
        drive.freq_rft,
        np.ascontiguousarray(decay),
        k_r,
        config.dt,
        n_steps,
        avg_start,
        snap_stride,
        snaps,
        TRACE_BUDGET,
    )
    if bad_step >= 0:
        raise TraceDrift(
            "trace drifted by %.3e (> %.0e) at step %d" % (max_drift, TRACE_BUDGET, bad_step)
        )
    populations = acc / max(navg, 1)

    used = snaps[:snap_count]
    herm = 0.0
    min_eig = 1.0
    if snap_count:
        defect = np.abs(used - np.conj(np.swapaxes(used, -1, -2)))
        herm = float(np.max(defect))
        sym = 0.5 * (used + np.conj(np.swapaxes(used, -1, -2)))
        min_eig = float(np.min(np.linalg.eigvalsh(sym)))
    final_defect = np.abs(rho - np.conj(np.swapaxes(rho, -1, -2)))
    herm = max(herm, float(np.max(final_defect)))
    min_eig = min(min_eig, float(np.min(np.linalg.eigvalsh(0.5 * (rho + np.conj(np.swapaxes(rho, -1, -2)))))))

    diagnostics = IntegrationResult(
        p0=float("nan"),
        p_plus=float("nan"),
        p_minus=float("nan"),
        max_trace_drift=float(max_drift),
        min_eigenvalue=min_eig,
        hermiticity_defect=herm,
        steps=n_steps,
    )
    # populations columns arrive in basis order (+1, 0, -1); reorder.
    ordered = np.column_stack([populations[:, 1], populations[:, 0], populations[:, 2]])
    return ordered, diagnostics


def integrate_lab_frame(params, drive, config):
    """Evolve from |0> under the full lab-frame Hamiltonian and return the
    tail-averaged populations with trajectory diagnostics.

    Precondition: the microwave stays weak, gamma_e*B_mw <= the effective
    linewidth, so the weak-drive closed forms are comparable.
    """
    if params.gamma_e * drive.b_mw > config.gamma_effective:
        raise ParameterError(
            "microwave drive gamma_e*B_mw = %.3e Hz exceeds the effective "
            "linewidth %.3e Hz; the weak-drive comparison is meaningless"
            % (params.gamma_e * drive.b_mw, config.gamma_effective)
        )
    pops, diag = scan_mw_frequencies(params, drive, [drive.freq_mw], config)
    return IntegrationResult(
        p0=float(pops[0, 0]),
        p_plus=float(pops[0, 1]),
        p_minus=float(pops[0, 2]),
        max_trace_drift=diag.max_trace_drift,
        min_eigenvalue=diag.min_eigenvalue,
        hermiticity_defect=diag.hermiticity_defect,
        steps=diag.steps,
    )


@dataclass(frozen=True)
class RwaScanPoint:
    control_amplitude: float
    deviation: float
    splitting: float
    fitted_centers: tuple
    closed_form_centers: tuple


def _dip_windows(centers, halfwidth, points_per_dip):
    grids = [np.linspace(c - halfwidth, c + halfwidth, points_per_dip) for c in centers]
    merged = np.unique(np.concatenate(grids))
    return merged


def rwa_error_scan(
    params,
    drive_template,
    amplitude_grid,
    config=None,
    points_per_dip=24,
    window_in_fwhm=1.8,
):
    """Deviation of time-domain dip centers from the closed forms across a
    control-amplitude sweep (target RF off, resonant control).

    For each amplitude the pre-RWA integration is scanned around the
    predicted dressed pair, the dips are fitted and the worst center
    deviation recorded.  The deviation grows with amplitude and reaches the
    linewidth scale once gamma_e*B approaches half the control frequency,
    which is where the rotating-wave closed forms stop being trustworthy.
    """
    amps = np.asarray(amplitude_grid, dtype=float)
    if amps.size and np.any(np.diff(amps) <= 0):
        raise ParameterError("amplitude grid must be increasing")
    zfs = effective_zfs(params)
    points = []
    for amp in amps:
        drive = replace(drive_template, b_rfc=float(amp), b_rft=0.0)
        cfg = config or default_integration_config(zfs.level_bright)
        fwhm = 2.0 * cfg.gamma_effective
        if amp == 0.0:
            closed = (zfs.level_bright,)
        else:
            res = resonances_previous(zfs, drive, params.gamma_e)
            closed = res.pair("prev1")
        grid = _dip_windows(closed, window_in_fwhm * fwhm, points_per_dip)
        pops, _ = scan_mw_frequencies(params, drive, grid, cfg)
        spectrum = Spectrum(mw_frequencies=grid, contrast=pops[:, 0], meta={})
        fits = fit_dips(spectrum, n_dips=len(closed))
        fitted = tuple(f.center for f in fits)
        deviation = max(abs(f - c) for f, c in zip(fitted, sorted(closed)))
        splitting = closed[-1] - closed[0] if len(closed) > 1 else 0.0
        points.append(
            RwaScanPoint(
                control_amplitude=float(amp),
                deviation=float(deviation),
                splitting=float(splitting),
                fitted_centers=fitted,
                closed_form_centers=tuple(sorted(closed)),
            )
        )
    return points
