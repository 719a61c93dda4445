from dataclasses import replace

import numpy as np
import pytest

import nvodmr as nv
from nvodmr.errors import NoOptimum, ParameterError, ZeroSlope
from nvodmr.sensing import (
    QuadraticFit,
    SchemeChoice,
    Side,
    default_bias_amplitude,
    quadratic_fit_grid,
)
from nvodmr.steady_state import Scheme

from conftest import GAMMA_E


class TestLinewidthModel:
    def test_non_negative_fields(self):
        with pytest.raises(ParameterError):
            nv.LinewidthModel(gamma_residual=-1.0, gamma_electric=0.0,
                              suppression_scale=1e-5, fluctuation_coeff=0.0)

    def test_demo_minimum_near_reference_amplitude(self, linewidth):
        b_min, rate_min = linewidth.minimum()
        assert b_min == pytest.approx(33.7e-6, abs=2e-6)
        # unique interior minimum: strictly below both flanks
        assert rate_min < linewidth(b_min / 3.0)
        assert rate_min < linewidth(3.0 * b_min)

    def test_dressed_narrower_than_bare(self, sensor, linewidth):
        assert linewidth(101e-6) < sensor.gamma_bright

    def test_grows_beyond_minimum(self, linewidth):
        b_min, _ = linewidth.minimum()
        rates = [linewidth(b) for b in np.linspace(b_min, 3e-4, 40)]
        assert all(a <= b + 1e-9 for a, b in zip(rates, rates[1:]))


class TestOperatingPoint:
    def test_zero_amplitude_is_bright_line(self, zfs):
        assert nv.mw_operating_point(zfs, 0.0, Side.LOW, GAMMA_E) == zfs.level_bright

    def test_reference_value(self, zfs):
        low = nv.mw_operating_point(zfs, 101e-6, Side.LOW, GAMMA_E)
        assert low == pytest.approx(2884821000.0, abs=1e-3)

    def test_sides_average_to_bright_line(self, zfs):
        for b in (0.0, 40e-6, 150e-6):
            low = nv.mw_operating_point(zfs, b, Side.LOW, GAMMA_E)
            high = nv.mw_operating_point(zfs, b, Side.HIGH, GAMMA_E)
            assert 0.5 * (low + high) == pytest.approx(zfs.level_bright, rel=1e-12)

    def test_low_point_is_target_merge_limit(self, zfs, dd_drive):
        # B_rft -> 0 limit of the strain-immune pair at the low condition
        drive = replace(dd_drive, b_rft=0.0)
        res = nv.resonances_double_dressed(zfs, drive, GAMMA_E)
        lo, hi = res.pair("res2")
        assert lo == hi == pytest.approx(
            nv.mw_operating_point(zfs, dd_drive.b_rfc, Side.LOW, GAMMA_E), rel=1e-12
        )


class TestContrastResponse:
    def test_zero_grid_gives_zero_response(self, sensor, dd_drive, linewidth):
        curve, fit = nv.contrast_response(
            sensor, dd_drive, Side.LOW, np.array([0.0, 0.0, 0.0]),
            scheme=Scheme.DOUBLE_DRESSED, linewidth=linewidth,
        )
        assert np.all(curve.response == 0.0)
        assert fit.a == pytest.approx(0.0, abs=1e-30)

    def test_quadratic_with_positive_curvature(self, sensor, dd_drive, linewidth):
        grid = quadratic_fit_grid(Scheme.DOUBLE_DRESSED, linewidth(dd_drive.b_rfc),
                                  GAMMA_E)
        curve, fit = nv.contrast_response(sensor, dd_drive, Side.LOW, grid,
                                          scheme=Scheme.DOUBLE_DRESSED, linewidth=linewidth)
        assert fit.a > 0
        assert np.all(curve.response >= -1e-15)
        # strict intercept bound holds deep in the quadratic regime
        gamma = linewidth(dd_drive.b_rfc)
        tight = np.linspace(0.0, 2.0 * 0.06 * gamma / GAMMA_E, 21)
        _, tight_fit = nv.contrast_response(sensor, dd_drive, Side.LOW, tight,
                                            scheme=Scheme.DOUBLE_DRESSED, linewidth=linewidth)
        assert abs(tight_fit.s0) < 1e-9

    def test_symmetric_in_amplitude_sign(self, sensor, zfs, dd_drive, linewidth):
        # S(B) = S(-B): a sign flip of the sensed amplitude only flips the
        # sign of every mode coupling, which the response sees squared
        from nvodmr.steady_state import scheme_families

        fixed = np.array([nv.mw_operating_point(zfs, dd_drive.b_rfc, Side.LOW, GAMMA_E)])
        for b in (5e-6, 12e-6):
            families = scheme_families(sensor, replace(dd_drive, b_rft=b),
                                       Scheme.DOUBLE_DRESSED, linewidth=linewidth)
            flipped = [
                nv.ModeFamily(
                    label=f.label, weight=f.weight, level_b=f.level_b, level_d=f.level_d,
                    drive=f.drive, coupling=-f.coupling, gamma_b=f.gamma_b, gamma_d=f.gamma_d,
                )
                for f in families
            ]
            plus = sum(f.weight * f.depletion(fixed)[0] for f in families)
            minus = sum(f.weight * f.depletion(fixed)[0] for f in flipped)
            assert abs(plus - minus) <= 1e-9 * max(abs(plus), 1e-300)

    def test_grid_must_include_zero(self, sensor, dd_drive, linewidth):
        with pytest.raises(ParameterError):
            nv.contrast_response(sensor, dd_drive, Side.LOW, np.array([1e-6, 2e-6]),
                                 scheme=Scheme.DOUBLE_DRESSED, linewidth=linewidth)

    def test_fit_coefficient_stable_under_grid_refinement(self, sensor, dd_drive, linewidth):
        gamma = linewidth(dd_drive.b_rfc)
        b_max = quadratic_fit_grid(Scheme.DOUBLE_DRESSED, gamma, GAMMA_E)[-1]
        coarse = np.linspace(0, b_max, 9)
        fine = np.linspace(0, b_max, 33)
        _, fit_c = nv.contrast_response(sensor, dd_drive, Side.LOW, coarse,
                                        scheme=Scheme.DOUBLE_DRESSED, linewidth=linewidth)
        _, fit_f = nv.contrast_response(sensor, dd_drive, Side.LOW, fine,
                                        scheme=Scheme.DOUBLE_DRESSED, linewidth=linewidth)
        assert fit_c.a == pytest.approx(fit_f.a, rel=0.01)

    def test_tuned_beats_detuned_previous(self, sensor, zfs, linewidth):
        # target at 7.14 MHz: the double-dressed scheme tunes its control to
        # be resonant, the single-RF scheme runs 1.33 MHz detuned
        target = 7.14e6
        b_rfc = (zfs.control_resonance - target) / GAMMA_E
        dd_template = nv.DriveConfig(b_rfc=b_rfc, freq_rfc=zfs.control_resonance,
                                     b_mw=1.01e-6, freq_mw=2.882e9)
        prev_template = nv.DriveConfig(b_rfc=1e-9, freq_rfc=target,
                                       b_mw=1.01e-6, freq_mw=2.882e9)
        grid = np.linspace(0, 25e-6, 11)
        dd_curve, _ = nv.contrast_response(sensor, dd_template, Side.LOW, grid,
                                           scheme=Scheme.DOUBLE_DRESSED, linewidth=linewidth)
        pv_curve, _ = nv.contrast_response(sensor, prev_template, Side.HIGH, grid,
                                           scheme=Scheme.PREVIOUS_SINGLE_RF)
        dd_abs = np.abs(dd_curve.response[1:])
        pv_abs = np.abs(pv_curve.response[1:])
        assert np.all(dd_abs > pv_abs)


class TestSensitivity:
    def test_definition_arithmetic(self):
        fit = QuadraticFit(a=2.0, s0=0.0, rms_residual=0.0)
        report = nv.sensitivity(fit, delta_s=1e-6, bias_amplitude=1e-6)
        assert report.slope == pytest.approx(4e-6, rel=1e-12)
        assert report.sensitivity == pytest.approx(0.25, rel=1e-12)

    def test_doubling_noise_doubles_sensitivity(self):
        fit = QuadraticFit(a=3.0, s0=0.0, rms_residual=0.0)
        r1 = nv.sensitivity(fit, delta_s=1e-6, bias_amplitude=2e-6)
        r2 = nv.sensitivity(fit, delta_s=2e-6, bias_amplitude=2e-6)
        assert r2.sensitivity == pytest.approx(2 * r1.sensitivity, rel=1e-12)

    def test_zero_slope_raises(self):
        with pytest.raises(ZeroSlope):
            nv.sensitivity(QuadraticFit(a=0.0, s0=0.0, rms_residual=0.0),
                           delta_s=1e-6, bias_amplitude=1e-6)


class TestRwaRange:
    def test_reference_values(self, zfs):
        lo, hi = nv.rwa_valid_range(zfs)
        assert lo == pytest.approx(4.235e6, rel=1e-12)
        assert hi == pytest.approx(12.705e6, rel=1e-12)

    def test_midpoint_and_scaling(self):
        z = nv.EffectiveZFS(d_prime=2.88e9, ex_prime=5e6)
        lo, hi = nv.rwa_valid_range(z)
        assert 0.5 * (lo + hi) == pytest.approx(z.control_resonance, rel=1e-12)
        z2 = nv.EffectiveZFS(d_prime=2.88e9, ex_prime=1e7)
        lo2, hi2 = nv.rwa_valid_range(z2)
        assert lo2 == pytest.approx(2 * lo, rel=1e-12)
        assert hi2 == pytest.approx(2 * hi, rel=1e-12)


class TestChooseScheme:
    def test_dead_zone_uses_previous(self, zfs):
        assert nv.choose_scheme(8.47e6, zfs) is SchemeChoice.PREVIOUS_SINGLE_RF

    def test_tunable_band_uses_double_dressed(self, zfs):
        assert nv.choose_scheme(5.0e6, zfs) is SchemeChoice.DOUBLE_DRESSED

    def test_out_of_range_unsupported(self, zfs):
        assert nv.choose_scheme(20e6, zfs) is SchemeChoice.UNSUPPORTED


@pytest.fixture(scope="module")
def reports(sensor, linewidth):
    template = nv.DriveConfig(b_mw=1.01e-6, freq_mw=2.882e9)
    freqs = np.linspace(4.4e6, 12.5e6, 42)
    dd = nv.sensitivity_vs_frequency(sensor, template, freqs, Scheme.DOUBLE_DRESSED,
                                     delta_s=7.6e-5, linewidth=linewidth)
    pv = nv.sensitivity_vs_frequency(sensor, template, freqs, Scheme.PREVIOUS_SINGLE_RF,
                                     delta_s=7.6e-5, linewidth=linewidth)
    return dd, pv


class TestSensitivityVsFrequency:

    def test_dead_zone_flagged_invalid(self, reports, zfs):
        dd, _ = reports
        for r in dd:
            in_zone = abs(r.target_frequency - zfs.control_resonance) < 0.71e6
            if in_zone:
                assert not r.valid

    def test_monotone_degradation_beyond_linewidth_minimum(self, reports, zfs, linewidth):
        dd, _ = reports
        b_min, _ = linewidth.minimum()
        edge = GAMMA_E * b_min
        above = [r.sensitivity for r in dd if r.target_frequency > zfs.control_resonance + edge]
        below = [r.sensitivity for r in dd if r.target_frequency < zfs.control_resonance - edge]
        assert all(a < b for a, b in zip(above, above[1:]))
        assert all(a > b for a, b in zip(below, below[1:]))

    def test_previous_optimum_at_control_resonance(self, reports, zfs):
        _, pv = reports
        best = min(pv, key=lambda r: r.sensitivity)
        grid_step = pv[1].target_frequency - pv[0].target_frequency
        assert abs(best.target_frequency - zfs.control_resonance) <= grid_step

    def test_threaded_evaluation_identical(self, sensor, linewidth):
        template = nv.DriveConfig(b_mw=1.01e-6, freq_mw=2.882e9)
        freqs = np.linspace(5e6, 11e6, 13)
        serial = nv.sensitivity_vs_frequency(sensor, template, freqs, Scheme.DOUBLE_DRESSED,
                                             delta_s=7.6e-5, linewidth=linewidth, threads=1)
        threaded = nv.sensitivity_vs_frequency(sensor, template, freqs, Scheme.DOUBLE_DRESSED,
                                               delta_s=7.6e-5, linewidth=linewidth, threads=4)
        assert [r.sensitivity for r in serial] == [r.sensitivity for r in threaded]


class TestBandwidth:
    @staticmethod
    def v_curve_reports(w, optimum=1e-6, center=8e6, span=6e6, points=241):
        freqs = np.linspace(center - span, center + span, points)
        return [
            nv.SensitivityReport(
                target_frequency=float(f), delta_s=1e-6, slope=1.0,
                sensitivity=optimum * (1 + abs(f - center) / w),
                bias_amplitude=1e-6, scheme=Scheme.DOUBLE_DRESSED, valid=True,
            )
            for f in freqs
        ]

    def test_v_curve_width_analytic(self):
        w = 1.7e6
        lo, hi, width = nv.bandwidth(self.v_curve_reports(w))
        assert width == pytest.approx(2 * w, rel=1e-3)

    def test_flat_curve_spans_grid(self):
        reports = [
            nv.SensitivityReport(target_frequency=f, delta_s=0.0, slope=1.0,
                                 sensitivity=0.0, bias_amplitude=1e-6,
                                 scheme=Scheme.DOUBLE_DRESSED, valid=True)
            for f in np.linspace(5e6, 9e6, 21)
        ]
        lo, hi, width = nv.bandwidth(reports)
        assert lo == pytest.approx(5e6) and hi == pytest.approx(9e6)
        assert width == pytest.approx(4e6)

    def test_threshold_is_relative(self):
        w = 2.2e6
        base = self.v_curve_reports(w, optimum=1e-6)
        scaled = self.v_curve_reports(w, optimum=5e-6)
        assert nv.bandwidth(base)[2] == pytest.approx(nv.bandwidth(scaled)[2], rel=1e-12)

    def test_requires_valid_reports(self):
        reports = self.v_curve_reports(1e6)[:30]
        invalid = [
            nv.SensitivityReport(
                target_frequency=r.target_frequency, delta_s=r.delta_s, slope=r.slope,
                sensitivity=r.sensitivity, bias_amplitude=r.bias_amplitude,
                scheme=r.scheme, valid=False,
            )
            for r in reports
        ]
        with pytest.raises(NoOptimum):
            nv.bandwidth(invalid)

    def test_optimum_taken_over_valid_points_only(self):
        # an artificially perfect but invalid point away from the optimum
        # must not move the threshold (its value stays inside the band)
        reports = self.v_curve_reports(1.5e6)
        spiked = list(reports)
        idx = len(spiked) // 4
        r = spiked[idx]
        spiked[idx] = nv.SensitivityReport(
            target_frequency=r.target_frequency, delta_s=r.delta_s, slope=r.slope,
            sensitivity=r.sensitivity / 100.0, bias_amplitude=r.bias_amplitude,
            scheme=r.scheme, valid=False,
        )
        assert nv.bandwidth(spiked)[2] == pytest.approx(nv.bandwidth(reports)[2], rel=1e-6)

    def test_default_bias_rule(self):
        # splitting at the bias equals half the local rate
        gamma = 6e4
        b_dd = default_bias_amplitude(Scheme.DOUBLE_DRESSED, gamma, GAMMA_E)
        assert (GAMMA_E / 2.0) * b_dd == pytest.approx(gamma / 2.0, rel=1e-12)
        b_pv = default_bias_amplitude(Scheme.PREVIOUS_SINGLE_RF, gamma, GAMMA_E)
        assert GAMMA_E * b_pv == pytest.approx(gamma / 2.0, rel=1e-12)
