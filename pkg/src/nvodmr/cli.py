"""Command-line front end.

Subcommands: spectrum | sweep | sense | validate | calibrate.  Exit codes:
0 success, 2 configuration/input error, 3 computation error, 4 validation
tolerance failure.  All numeric output is written with round-trip float
formatting, so identical configurations and seeds produce byte-identical
files regardless of --threads.
"""

import argparse
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import replace

import numpy as np

from . import io
from .config import parse_config, RunConfig
from .errors import ConfigError, NVODMRError, ParameterError
from .oracle import (
    default_integration_config,
    rwa_error_scan,
    steady_state_linear_solve,
)
from .resonance import fit_dips, resonances_for_scheme, splitting_slope
from .sensing import (
    SchemeChoice,
    bandwidth,
    choose_scheme,
    sensitivity_vs_frequency,
)
from .spin import effective_zfs
from .steady_state import OscillatorModel, Scheme, Spectrum, population_p0, simulate_spectrum

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_COMPUTE = 3
EXIT_TOLERANCE = 4


def _build_parser():
    parser = argparse.ArgumentParser(
        prog="nvodmr",
        description="CW-ODMR simulation and sensitivity analysis for doubly "
        "RF-driven NV centers",
    )
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="run configuration file")
    common.add_argument("--out", help="output CSV path")
    common.add_argument("--svg", help="optional SVG figure path")
    common.add_argument("--threads", type=int, default=0, help="worker threads (0 = auto)")
    common.add_argument("--seed", type=int, default=None, help="override the config seed")

    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("spectrum", parents=[common], help="synthesize a CW-ODMR spectrum")
    sub.add_parser("sweep", parents=[common], help="amplitude sweep with dip fits and slope")
    sub.add_parser("sense", parents=[common], help="sensitivity vs target frequency")
    sub.add_parser("validate", parents=[common], help="closed form vs oracle checks")
    cal = sub.add_parser("calibrate", parents=[common], help="fit a measured bare spectrum")
    cal.add_argument("csv", help="measured spectrum CSV (mw_frequency_hz,contrast)")
    return parser


def _load_config(args):
    if args.config:
        cfg = parse_config(args.config)
    else:
        cfg = RunConfig()
    if args.seed is not None:
        cfg = cfg.with_values(seed=int(args.seed))
    return cfg


def _pool_size(threads):
    if threads and threads > 0:
        return threads
    import os

    return os.cpu_count() or 1


def _ordered_map(fn, items, threads):
    if threads == 1 or len(items) <= 1:
        return [fn(item) for item in items]
    with ThreadPoolExecutor(max_workers=_pool_size(threads)) as pool:
        return list(pool.map(fn, items))


def _scheme_linewidth(cfg, scheme):
    if scheme in (Scheme.DRESSED, Scheme.DOUBLE_DRESSED):
        return cfg.linewidth_model()
    return None


def cmd_spectrum(cfg, out, svg):
    sensor = cfg.sensor()
    drive = cfg.drive()
    scheme = cfg.scheme
    grid = cfg.mw_grid()
    spectrum = simulate_spectrum(
        sensor,
        drive,
        grid,
        scheme,
        linewidth=_scheme_linewidth(cfg, scheme),
        contrast_scale=cfg["contrast.scale"],
        tol_res=cfg["tolerances.control_resonance_hz"],
    )
    sigma = cfg["noise.sigma"]
    if sigma > 0:
        rng = np.random.default_rng(cfg.seed)
        spectrum = Spectrum(
            mw_frequencies=spectrum.mw_frequencies,
            contrast=spectrum.contrast + rng.normal(0.0, sigma, spectrum.contrast.size),
            meta=spectrum.meta,
        )
    if out:
        io.write_spectrum_csv(out, spectrum)
    else:
        print(f"spectrum: {spectrum.mw_frequencies.size} points, "
              f"deepest contrast {float(np.min(spectrum.contrast))!r}")
    if svg:
        from . import plotting

        zfs = effective_zfs(sensor)
        markers = resonances_for_scheme(
            zfs, drive, sensor.gamma_e, scheme, tol_res=cfg["tolerances.control_resonance_hz"]
        ).frequencies
        plotting.plot_spectrum(spectrum, svg, markers=markers, title=scheme.value)
    return EXIT_OK


def _sweep_settings(cfg):
    """(scheme, n_dips, swept field name, sensed pair branch) per sweep axis."""
    if cfg["sweep.axis"] == "control":
        return Scheme.DRESSED, 4, "b_rfc", "prev1"
    return Scheme.DOUBLE_DRESSED, 8, "b_rft", "res2"


def cmd_sweep(cfg, out, svg, threads):
    sensor = cfg.sensor()
    zfs = effective_zfs(sensor)
    base = cfg.drive()
    scheme, n_dips, field_name, pair_branch = _sweep_settings(cfg)
    amplitudes = cfg.sweep_amplitudes()
    grid = cfg.mw_grid()
    linewidth = _scheme_linewidth(cfg, scheme)
    tol = cfg["tolerances.control_resonance_hz"]

    def run_one(amplitude):
        drive = replace(base, **{field_name: float(amplitude)})
        try:
            spectrum = simulate_spectrum(
                sensor,
                drive,
                grid,
                scheme,
                linewidth=linewidth,
                contrast_scale=cfg["contrast.scale"],
                tol_res=tol,
            )
            fits = fit_dips(spectrum, n_dips)
        except NVODMRError as exc:
            raise type(exc)(f"at amplitude {amplitude:.6e} T: {exc}") from exc
        res = resonances_for_scheme(zfs, drive, sensor.gamma_e, scheme, tol_res=tol)
        centers = np.array([f.center for f in fits])
        labeled = {}
        for entry in res.entries:
            labeled[entry.label] = float(centers[np.argmin(np.abs(centers - entry.frequency))])
        return labeled

    per_amp = _ordered_map(run_one, list(amplitudes), threads)

    rows = []
    pair_points = []
    for amplitude, labeled in zip(amplitudes, per_amp):
        for label in sorted(labeled):
            rows.append((float(amplitude), label, labeled[label]))
        pair_points.append(
            (float(amplitude), labeled[pair_branch + "+"] - labeled[pair_branch + "-"])
        )
    slope, stderr = splitting_slope(pair_points)

    footer = [
        f"splitting_slope_hz_per_t={io.format_number(slope)}",
        f"splitting_slope_stderr_hz_per_t={io.format_number(stderr)}",
        f"sensed_pair={pair_branch}",
    ]
    if out:
        io.write_csv(out, ("amplitude_tesla", "label", "center_hz"), rows, footer)
    print(f"splitting_slope_hz_per_t={io.format_number(slope)}")
    print(f"splitting_slope_stderr_hz_per_t={io.format_number(stderr)}")
    if svg:
        from . import plotting

        by_label = {}
        for amplitude, labeled in zip(amplitudes, per_amp):
            for label, center in labeled.items():
                by_label.setdefault(label, []).append((float(amplitude), center))
        plotting.plot_sweep(amplitudes, by_label, svg, slope=slope, title=cfg["sweep.axis"])
    return EXIT_OK


def cmd_sense(cfg, out, svg, threads):
    sensor = cfg.sensor()
    zfs = effective_zfs(sensor)
    base = cfg.drive()
    freqs = cfg.sense_frequencies()
    delta_s = cfg["sense.delta_s"]
    linewidth = cfg.linewidth_model()
    dead_zone_hw = cfg["sense.dead_zone_halfwidth_hz"]
    bias = cfg["sense.bias_amplitude_tesla"] or None

    def curve(scheme):
        return sensitivity_vs_frequency(
            sensor,
            base,
            freqs,
            scheme,
            delta_s,
            linewidth=linewidth,
            dead_zone_halfwidth=dead_zone_hw,
            bias_amplitude=bias,
            contrast_scale=cfg["contrast.scale"],
            threads=threads,
        )

    dd_reports = curve(Scheme.DOUBLE_DRESSED)
    pv_reports = curve(Scheme.PREVIOUS_SINGLE_RF)

    rows = []
    for dd, pv in zip(dd_reports, pv_reports):
        freq = dd.target_frequency
        choice = choose_scheme(freq, zfs, dead_zone_halfwidth=dead_zone_hw)
        if choice is SchemeChoice.DOUBLE_DRESSED:
            chosen, valid = dd, dd.valid
        elif choice is SchemeChoice.PREVIOUS_SINGLE_RF:
            chosen, valid = pv, pv.valid
        else:
            chosen, valid = (dd if dd.sensitivity <= pv.sensitivity else pv), False
        rows.append((freq, choice.value, chosen.sensitivity, valid))

    dd_band = bandwidth(dd_reports)
    pv_band = bandwidth(pv_reports)
    # The hybrid figure is the union of the two schemes' bands: inside the
    # dead zone the single-RF scheme takes over, elsewhere the double-dressed
    # scheme holds its own band.
    union_low = min(dd_band[0], pv_band[0])
    union_high = max(dd_band[1], pv_band[1])
    overlap = max(0.0, min(dd_band[1], pv_band[1]) - max(dd_band[0], pv_band[0]))
    hybrid_width = dd_band[2] + pv_band[2] - overlap
    footer = [
        f"bandwidth_double_dressed_hz={io.format_number(dd_band[2])}",
        f"band_double_dressed_low_hz={io.format_number(dd_band[0])}",
        f"band_double_dressed_high_hz={io.format_number(dd_band[1])}",
        f"bandwidth_previous_hz={io.format_number(pv_band[2])}",
        f"band_previous_low_hz={io.format_number(pv_band[0])}",
        f"band_previous_high_hz={io.format_number(pv_band[1])}",
        f"bandwidth_hybrid_hz={io.format_number(hybrid_width)}",
        f"band_hybrid_low_hz={io.format_number(union_low)}",
        f"band_hybrid_high_hz={io.format_number(union_high)}",
        f"dead_zone_low_hz={io.format_number(zfs.control_resonance - dead_zone_hw)}",
        f"dead_zone_high_hz={io.format_number(zfs.control_resonance + dead_zone_hw)}",
    ]
    if out:
        io.write_csv(
            out,
            ("frequency_hz", "scheme", "sensitivity_t_per_sqrthz", "valid"),
            rows,
            footer,
        )
    for line in footer:
        print(line)
    if svg:
        from . import plotting

        plotting.plot_sensitivity(
            rows,
            svg,
            dead_zone=(zfs.control_resonance - dead_zone_hw, zfs.control_resonance + dead_zone_hw),
            title="hybrid sensitivity map",
        )
    return EXIT_OK


def _random_oscillator(rng):
    def log_uniform(lo, hi):
        return 10.0 ** rng.uniform(np.log10(lo), np.log10(hi))

    gamma_b = log_uniform(1e3, 1e6)
    gamma_d = log_uniform(1e3, 1e6)
    return OscillatorModel(
        omega_b=rng.choice([-1.0, 1.0]) * log_uniform(1e2, 1e7),
        omega_d=rng.choice([-1.0, 1.0]) * log_uniform(1e2, 1e7),
        drive=0.4 * min(gamma_b, gamma_d) * rng.random(),
        coupling=log_uniform(1e2, 1e6),
        gamma_b=gamma_b,
        gamma_d=gamma_d,
    )


def cmd_validate(cfg, out):
    rng = np.random.default_rng(cfg.seed)
    samples = cfg["validate.samples"]
    tolerance = cfg["validate.tolerance"]
    worst = 0.0
    worst_model = None
    accepted = 0
    while accepted < samples:
        model = _random_oscillator(rng)
        try:
            closed = population_p0(model)
        except NVODMRError:
            continue
        accepted += 1
        solved = steady_state_linear_solve(model)
        dev = max(
            abs(a - b) / max(abs(b), 1e-300) for a, b in zip(closed, solved)
        )
        if dev > worst:
            worst, worst_model = dev, model
    print(f"steady_state_max_relative_deviation={io.format_number(worst)}")
    print(f"steady_state_samples={samples}")
    lines = [
        ("steady_state_max_relative_deviation", worst),
        ("steady_state_samples", float(samples)),
    ]
    code = EXIT_OK
    if worst > tolerance:
        print(
            "TOLERANCE FAILED: deviation %s > %s at model %r"
            % (io.format_number(worst), io.format_number(tolerance), worst_model),
            file=sys.stderr,
        )
        code = EXIT_TOLERANCE

    if cfg["validate.time_domain"]:
        sensor = cfg.sensor()
        zfs = effective_zfs(sensor)
        template = cfg.drive()
        oracle_cfg = default_integration_config(zfs.level_bright * 1.2)
        points = rwa_error_scan(
            sensor, template, [cfg["drive.b_rfc_tesla"]], config=oracle_cfg
        )
        point = points[0]
        rel = point.deviation / max(point.splitting, 1e-300)
        print(f"time_domain_center_deviation_hz={io.format_number(point.deviation)}")
        print(f"time_domain_relative_deviation={io.format_number(rel)}")
        lines.append(("time_domain_center_deviation_hz", point.deviation))
        lines.append(("time_domain_relative_deviation", rel))
        if rel > cfg["validate.td_tolerance_rel"]:
            print(
                "TOLERANCE FAILED: time-domain relative deviation %s > %s at "
                "control amplitude %s T"
                % (
                    io.format_number(rel),
                    io.format_number(cfg["validate.td_tolerance_rel"]),
                    io.format_number(point.control_amplitude),
                ),
                file=sys.stderr,
            )
            code = EXIT_TOLERANCE
    if out:
        io.write_csv(out, ("quantity", "value"), lines)
    return code


def cmd_calibrate(csv_path, out):
    freqs, contrast = io.read_spectrum_records(csv_path)
    if freqs.size < 50:
        raise ConfigError(
            f"{csv_path}: need at least 50 records for calibration, got {freqs.size}"
        )
    spectrum = Spectrum(mw_frequencies=freqs, contrast=contrast, meta={})
    fits = fit_dips(spectrum, 2)
    lo, hi = fits
    mean_fwhm = 0.5 * (lo.fwhm + hi.fwhm)
    if hi.center - lo.center < mean_fwhm:
        raise NVODMRError(
            "fitted dips overlap within one linewidth; the spectrum does not "
            "resolve two transitions"
        )
    d_prime = 0.5 * (lo.center + hi.center)
    ex_prime = 0.5 * (hi.center - lo.center)
    report = [
        ("d_prime_hz", d_prime),
        ("ex_prime_hz", ex_prime),
        ("fwhm_dark_hz", lo.fwhm),
        ("fwhm_bright_hz", hi.fwhm),
        ("fit_rms_residual", lo.residual),
    ]
    for key, value in report:
        print(f"{key}={io.format_number(value)}")
    if out:
        io.write_csv(out, ("quantity", "value"), report)
    return EXIT_OK


#: Per-command eager input builders; failures here are configuration errors
#: (exit 2), distinct from downstream computation errors (exit 3).
_INPUT_CHECKS = {
    "spectrum": ("sensor", "drive", "mw_grid"),
    "sweep": ("sensor", "drive", "sweep_amplitudes", "mw_grid"),
    "sense": ("sensor", "drive", "sense_frequencies"),
    "validate": ("sensor", "drive"),
    "calibrate": (),
}


def main(argv=None):
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = _load_config(args)
        for builder in _INPUT_CHECKS[args.command]:
            getattr(cfg, builder)()
    except (ConfigError, ParameterError, OSError) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    try:
        if args.command == "spectrum":
            return cmd_spectrum(cfg, args.out, args.svg)
        if args.command == "sweep":
            return cmd_sweep(cfg, args.out, args.svg, args.threads)
        if args.command == "sense":
            return cmd_sense(cfg, args.out, args.svg, args.threads)
        if args.command == "validate":
            return cmd_validate(cfg, args.out)
        if args.command == "calibrate":
            return cmd_calibrate(args.csv, args.out)
    except ConfigError as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NVODMRError as exc:
        print(f"computation error: {exc}", file=sys.stderr)
        return EXIT_COMPUTE
    raise AssertionError("unreachable")


def entry_point():
    raise SystemExit(main())


if __name__ == "__main__":
    entry_point()
