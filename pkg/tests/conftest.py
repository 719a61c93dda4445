import numpy as np
import pytest

import nvodmr as nv


def pytest_runtest_logreport(report):
    """Emit one verdict line per acceptance criterion; the reporting phase
    runs outside output capture, so the lines reach the terminal/log in any
    capture mode."""
    if report.when != "call":
        return
    name = report.nodeid.rsplit("::", 1)[-1]
    if not name.startswith("test_criterion_"):
        return
    number, _, slug = name[len("test_criterion_"):].partition("_")
    verdict = "PASS" if report.passed else "FAIL"
    print(f"\n[acceptance] criterion {int(number):2d} ({slug.replace('_', ' ')}): {verdict}")

#: Sensor calibrated to the bare dip pair at 2.877765 / 2.886235 GHz
#: (D' = 2.882 GHz, Ex' = 4.235 MHz); bare linewidth entries give a few-MHz
#: fwhm like the undressed lines.
GAMMA_E = 28e9
CONTROL_AMPLITUDE = 101e-6
TARGET_AMPLITUDE = 29.5e-6
CONTROL_FREQ = 8.47e6
LOW_CONDITION = CONTROL_FREQ - GAMMA_E * CONTROL_AMPLITUDE  # 5.642 MHz
MW_AMPLITUDE = 1.01e-6  # drive strength ~1e4 Hz on the double-dressed branches


@pytest.fixture(scope="session")
def sensor():
    return nv.NVParameters(
        d=2.882e9,
        ex=4.235e6,
        gamma_e=GAMMA_E,
        bx=0.0,
        gamma_bright=1.4e6,
        gamma_dark=1.4e6,
    )


@pytest.fixture(scope="session")
def zfs(sensor):
    return nv.effective_zfs(sensor)


@pytest.fixture(scope="session")
def linewidth():
    return nv.demo_linewidth_model(gamma_e=GAMMA_E)


@pytest.fixture(scope="session")
def default_grid(zfs):
    return nv.default_mw_grid(zfs)


@pytest.fixture(scope="session")
def dd_drive():
    return nv.DriveConfig(
        b_rfc=CONTROL_AMPLITUDE,
        freq_rfc=CONTROL_FREQ,
        b_rft=TARGET_AMPLITUDE,
        freq_rft=LOW_CONDITION,
        b_mw=MW_AMPLITUDE,
        freq_mw=2.882e9,
    )


@pytest.fixture(scope="session")
def dressed_drive():
    return nv.DriveConfig(
        b_rfc=CONTROL_AMPLITUDE,
        freq_rfc=CONTROL_FREQ,
        b_mw=MW_AMPLITUDE,
        freq_mw=2.882e9,
    )


@pytest.fixture(scope="session")
def td_sensor():
    """Scaled sensor for time-domain integrations: smaller transition
    frequencies keep the fixed-step pre-RWA integration affordable while all
    amplitude/frequency ratios stay representative."""
    return nv.NVParameters(
        d=6e7,
        ex=2e7,
        gamma_e=GAMMA_E,
        bx=0.0,
        gamma_bright=5e5,
        gamma_dark=5e5,
    )


def count_local_minima(values):
    y = np.asarray(values)
    return int(np.sum((y[1:-1] < y[:-2]) & (y[1:-1] < y[2:])))
