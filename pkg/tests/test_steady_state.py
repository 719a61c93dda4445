import numpy as np
import pytest

import nvodmr as nv
from nvodmr.errors import ControlOffResonance, ParameterError, WeakDriveViolation
from nvodmr.steady_state import Branch, Scheme, scheme_families

from conftest import count_local_minima


def random_valid_model(rng):
    def log_uniform(lo, hi):
        return 10.0 ** rng.uniform(np.log10(lo), np.log10(hi))

    gamma_b = log_uniform(1e3, 1e6)
    gamma_d = log_uniform(1e3, 1e6)
    return nv.OscillatorModel(
        omega_b=rng.choice([-1.0, 1.0]) * log_uniform(1e2, 1e7),
        omega_d=rng.choice([-1.0, 1.0]) * log_uniform(1e2, 1e7),
        drive=0.4 * min(gamma_b, gamma_d) * rng.random(),
        coupling=log_uniform(1e2, 1e6),
        gamma_b=gamma_b,
        gamma_d=gamma_d,
    )


class TestPopulations:
    def test_no_drive(self):
        m = nv.OscillatorModel(omega_b=1e4, omega_d=-3e4, drive=0.0, coupling=2e4,
                               gamma_b=1e5, gamma_d=1e5)
        assert nv.population_p0(m) == (1.0, 0.0, 0.0)

    def test_resonant_uncoupled_mode(self):
        m = nv.OscillatorModel(omega_b=0.0, omega_d=5e5, drive=1e4, coupling=0.0,
                               gamma_b=1e5, gamma_d=2e5)
        p0, pb, pd = nv.population_p0(m)
        assert pb == pytest.approx((m.drive / m.gamma_b) ** 2, rel=1e-12)
        assert pd == 0.0

    def test_matches_linear_solve_oracle_fixed_point(self):
        # expected values frozen from the 2x2 linear-solve oracle
        m = nv.OscillatorModel(omega_b=1e5, omega_d=-2e5, drive=1e4, coupling=5e4,
                               gamma_b=3e5, gamma_d=2e5)
        p0, pb, pd = nv.population_p0(m)
        assert p0 == pytest.approx(0.9990185873605948, rel=1e-12)
        assert pb == pytest.approx(0.0009516728624535312, rel=1e-12)
        assert pd == pytest.approx(2.9739776951672857e-05, rel=1e-12)

    def test_matches_linear_solve_oracle_randomized(self):
        rng = np.random.default_rng(42)
        worst = 0.0
        for _ in range(2000):
            m = random_valid_model(rng)
            closed = nv.population_p0(m)
            solved = nv.steady_state_linear_solve(m)
            worst = max(
                worst,
                max(abs(a - b) / max(abs(b), 1e-300) for a, b in zip(closed, solved)),
            )
        assert worst < 1e-12

    def test_weak_drive_violation_raises(self):
        m = nv.OscillatorModel(omega_b=0.0, omega_d=0.0, drive=5e5, coupling=0.0,
                               gamma_b=1e5, gamma_d=1e5)
        with pytest.raises(WeakDriveViolation):
            nv.population_p0(m)

    def test_p0_limit_at_large_detuning(self):
        base = dict(omega_d=1e4, drive=5e3, coupling=2e4, gamma_b=1e5, gamma_d=1e5)
        p_far, _, _ = nv.population_p0(nv.OscillatorModel(omega_b=1e12, **base))
        assert p_far == pytest.approx(1.0, abs=1e-12)

    def test_coupling_sign_irrelevant(self):
        rng = np.random.default_rng(5)
        for _ in range(200):
            m = random_valid_model(rng)
            flipped = nv.OscillatorModel(
                omega_b=m.omega_b, omega_d=m.omega_d, drive=m.drive,
                coupling=-m.coupling, gamma_b=m.gamma_b, gamma_d=m.gamma_d,
            )
            assert nv.population_p0(m) == nv.population_p0(flipped)

    def test_strong_drive_flag(self):
        m = nv.OscillatorModel(omega_b=0.0, omega_d=0.0, drive=6e4, coupling=0.0,
                               gamma_b=1e5, gamma_d=1e5)
        assert m.strong_drive
        weak = nv.OscillatorModel(omega_b=0.0, omega_d=0.0, drive=4e4, coupling=0.0,
                                  gamma_b=1e5, gamma_d=1e5)
        assert not weak.strong_drive


class TestBranchModel:
    def test_no_target_means_no_coupling(self, sensor, zfs, dressed_drive):
        for branch in Branch:
            m = nv.branch_model(sensor, zfs, dressed_drive, branch)
            assert m.coupling == 0.0

    def test_control_off_resonance_rejected(self, sensor, zfs, dd_drive):
        from dataclasses import replace

        detuned = replace(dd_drive, freq_rfc=zfs.control_resonance + 5e3)
        with pytest.raises(ControlOffResonance):
            nv.branch_model(sensor, zfs, detuned, Branch.PLUS_LOW)

    def test_branch_dips_at_normal_mode_zeros(self, sensor, zfs, dd_drive, linewidth):
        # the dips of each branch must sit at
        # mean(levels) +- sqrt(((level_b - level_d)/2)^2 + coupling^2)
        families = scheme_families(sensor, dd_drive, Scheme.DOUBLE_DRESSED, linewidth=linewidth)
        for fam in families:
            mean = 0.5 * (fam.level_b + fam.level_d)
            rad = np.sqrt(((fam.level_b - fam.level_d) / 2.0) ** 2 + fam.coupling**2)
            grid = np.linspace(mean - 2.5 * rad, mean + 2.5 * rad, 4001)
            depletion = fam.depletion(grid)
            minima = np.sort(
                grid[1:-1][(depletion[1:-1] > depletion[:-2]) & (depletion[1:-1] > depletion[2:])]
            )
            step = grid[1] - grid[0]
            assert len(minima) == 2
            assert abs(minima[0] - (mean - rad)) <= step
            assert abs(minima[1] - (mean + rad)) <= step

    def test_branch_symmetry_about_dressed_center(self, sensor, zfs, dd_drive):
        plus = nv.branch_model(sensor, zfs, dd_drive, Branch.PLUS_LOW)
        minus = nv.branch_model(sensor, zfs, dd_drive, Branch.MINUS_LOW)
        center = zfs.level_bright - dd_drive.freq_mw
        # driven-mode detunings mirror about the undressed bright line
        assert plus.omega_b - center == pytest.approx(center - minus.omega_b, rel=1e-9)
        assert plus.drive == minus.drive
        assert plus.coupling == minus.coupling


class TestSpectra:
    def test_bare_two_dips_at_calibration(self, sensor, default_grid):
        drive = nv.DriveConfig(b_mw=5e-5, freq_mw=2.882e9)
        spec = nv.simulate_spectrum(sensor, drive, default_grid, Scheme.BARE)
        assert count_local_minima(spec.contrast) == 2
        step = default_grid[1] - default_grid[0]
        minima = np.sort(default_grid[np.argsort(spec.contrast)[:2]])
        assert abs(minima[0] - 2.877765e9) <= step
        assert abs(minima[1] - 2.886235e9) <= step

    def test_dressed_four_dips(self, sensor, dressed_drive, default_grid, linewidth):
        spec = nv.simulate_spectrum(sensor, dressed_drive, default_grid, Scheme.DRESSED,
                                    linewidth=linewidth)
        assert count_local_minima(spec.contrast) == 4

    def test_double_dressed_eight_dips(self, sensor, dd_drive, default_grid, linewidth):
        spec = nv.simulate_spectrum(sensor, dd_drive, default_grid, Scheme.DOUBLE_DRESSED,
                                    linewidth=linewidth)
        assert count_local_minima(spec.contrast) == 8

    def test_previous_four_dips(self, sensor, dressed_drive, default_grid):
        spec = nv.simulate_spectrum(sensor, dressed_drive, default_grid,
                                    Scheme.PREVIOUS_SINGLE_RF)
        assert count_local_minima(spec.contrast) == 4

    def test_spectrum_invariant_under_target_sign(self, sensor, zfs, dd_drive, linewidth):
        # amplitude enters only through the squared coupling; compare the
        # branch families directly with the coupling sign flipped
        families = scheme_families(sensor, dd_drive, Scheme.DOUBLE_DRESSED, linewidth=linewidth)
        grid = np.linspace(zfs.d_prime - 1e7, zfs.d_prime + 1e7, 501)
        for fam in families:
            flipped = nv.ModeFamily(
                label=fam.label, weight=fam.weight, level_b=fam.level_b,
                level_d=fam.level_d, drive=fam.drive, coupling=-fam.coupling,
                gamma_b=fam.gamma_b, gamma_d=fam.gamma_d,
            )
            assert np.array_equal(fam.depletion(grid), flipped.depletion(grid))

    def test_dips_match_closed_forms_within_grid_step(
        self, sensor, zfs, dd_drive, default_grid, linewidth
    ):
        spec = nv.simulate_spectrum(sensor, dd_drive, default_grid, Scheme.DOUBLE_DRESSED,
                                    linewidth=linewidth)
        y = spec.contrast
        minima = default_grid[1:-1][(y[1:-1] < y[:-2]) & (y[1:-1] < y[2:])]
        predicted = np.sort(
            nv.resonances_double_dressed(zfs, dd_drive, sensor.gamma_e).frequencies
        )
        step = default_grid[1] - default_grid[0]
        assert len(minima) == len(predicted)
        assert np.max(np.abs(np.sort(minima) - predicted)) <= step

    def test_weak_drive_violation_reports_grid_point(self, sensor, default_grid):
        drive = nv.DriveConfig(b_mw=2e-3, freq_mw=2.882e9)
        with pytest.raises(WeakDriveViolation) as err:
            nv.simulate_spectrum(sensor, drive, default_grid, Scheme.BARE)
        assert err.value.mw_frequency is not None

    def test_empty_grid_rejected(self, sensor, dressed_drive):
        with pytest.raises(ParameterError):
            nv.simulate_spectrum(sensor, dressed_drive, np.array([]), Scheme.BARE)

    def test_spectrum_requires_increasing_grid(self):
        with pytest.raises(ParameterError):
            nv.Spectrum(np.array([2.0, 1.0]), np.array([0.0, 0.0]))

    def test_previous_on_resonance_splitting_linear(self, sensor, zfs):
        # splitting of either family is exactly gamma_e*B at the resonant RF
        for b in (20e-6, 50e-6, 90e-6):
            drive = nv.DriveConfig(b_rfc=b, freq_rfc=zfs.control_resonance,
                                   b_mw=1e-6, freq_mw=2.882e9)
            res = nv.resonances_previous(zfs, drive, sensor.gamma_e)
            assert res.splitting("prev1") == pytest.approx(sensor.gamma_e * b, rel=1e-12)
            assert res.splitting("prev2") == pytest.approx(sensor.gamma_e * b, rel=1e-12)
