"""Run configuration: a flat key = value text format with dotted section
prefixes, strict parsing (unknown keys are errors) and typed defaults.

Example::

    # sensor calibrated from the bare CW-ODMR pair
    nv.d_hz = 2.882e9
    nv.ex_hz = 4.235e6
    drive.b_rfc_tesla = 101e-6
    scheme = double_dressed

All behavior flows from the file plus command-line flags; no environment
variables are consulted.
"""

from dataclasses import dataclass, field, replace

import numpy as np

from .errors import ConfigError
from .sensing import DEFAULT_DEAD_ZONE_HALFWIDTH, LinewidthModel
from .spin import DriveConfig, NVParameters, effective_zfs
from .steady_state import (
    DEFAULT_CONTRAST_SCALE,
    DEFAULT_CONTROL_TOLERANCE,
    DEFAULT_GRID_POINTS,
    Scheme,
)

_SCHEMES = {s.value: s for s in Scheme}
_SWEEP_AXES = ("control", "target")

#: key -> (type tag, default).  Types: f float, i int, b bool, s string.
KEY_SCHEMA = {
    "nv.d_hz": ("f", 2.882e9),
    "nv.ex_hz": ("f", 4.235e6),
    "nv.gamma_e_hz_per_tesla": ("f", 28e9),
    "nv.bx_tesla": ("f", 0.0),
    "nv.gamma_bright_hz": ("f", 1.4e6),
    "nv.gamma_dark_hz": ("f", 1.4e6),
    "drive.b_rfc_tesla": ("f", 101e-6),
    "drive.freq_rfc_hz": ("f", 8.47e6),
    "drive.b_rft_tesla": ("f", 0.0),
    "drive.freq_rft_hz": ("f", 0.0),
    "drive.b_mw_tesla": ("f", 1.01e-6),
    "drive.freq_mw_hz": ("f", 2.882e9),
    "drive.mw_axis": ("s", "x"),
    "scheme": ("s", "bare"),
    "grid.start_hz": ("f", 0.0),
    "grid.stop_hz": ("f", 0.0),
    "grid.points": ("i", DEFAULT_GRID_POINTS),
    "contrast.scale": ("f", DEFAULT_CONTRAST_SCALE),
    "noise.sigma": ("f", 0.0),
    "seed": ("i", 0),
    "linewidth.enabled": ("b", True),
    "linewidth.residual_hz": ("f", 3.6e4),
    "linewidth.electric_hz": ("f", 1.2e4),
    "linewidth.suppression_tesla": ("f", 26.5e-6),
    "linewidth.fluctuation_coeff": ("f", 0.006),
    "sweep.axis": ("s", "control"),
    "sweep.start_tesla": ("f", 60e-6),
    "sweep.stop_tesla": ("f", 140e-6),
    "sweep.points": ("i", 10),
    "sense.delta_s": ("f", 7.6e-5),
    "sense.start_hz": ("f", 4.3e6),
    "sense.stop_hz": ("f", 12.6e6),
    "sense.points": ("i", 84),
    "sense.dead_zone_halfwidth_hz": ("f", DEFAULT_DEAD_ZONE_HALFWIDTH),
    "sense.bias_amplitude_tesla": ("f", 0.0),
    "validate.samples": ("i", 10000),
    "validate.tolerance": ("f", 1e-12),
    "validate.time_domain": ("b", False),
    "validate.td_tolerance_rel": ("f", 0.01),
    "tolerances.control_resonance_hz": ("f", DEFAULT_CONTROL_TOLERANCE),
}


def _parse_value(key, raw, line_no):
    kind = KEY_SCHEMA[key][0]
    if kind == "f":
        try:
            value = float(raw)
        except ValueError:
            raise ConfigError(f"line {line_no}: {key}: not a number: {raw!r}", line=line_no, key=key)
        if not np.isfinite(value):
            raise ConfigError(f"line {line_no}: {key}: non-finite value", line=line_no, key=key)
        return value
    if kind == "i":
        try:
            return int(raw)
        except ValueError:
            raise ConfigError(
                f"line {line_no}: {key}: not an integer: {raw!r}", line=line_no, key=key
            )
    if kind == "b":
        low = raw.lower()
        if low in ("true", "yes", "1"):
            return True
        if low in ("false", "no", "0"):
            return False
        raise ConfigError(f"line {line_no}: {key}: not a boolean: {raw!r}", line=line_no, key=key)
    return raw


@dataclass(frozen=True)
class RunConfig:
    """Validated, fully defaulted run settings."""

    values: dict = field(default_factory=dict)

    def __post_init__(self):
        merged = {k: v for k, (_, v) in KEY_SCHEMA.items()}
        merged.update(self.values)
        object.__setattr__(self, "values", merged)
        if merged["scheme"] not in _SCHEMES:
            raise ConfigError(
                "scheme must be one of %s, got %r" % ("|".join(sorted(_SCHEMES)), merged["scheme"]),
                key="scheme",
            )
        if merged["sweep.axis"] not in _SWEEP_AXES:
            raise ConfigError(
                "sweep.axis must be control or target, got %r" % merged["sweep.axis"],
                key="sweep.axis",
            )
        if merged["drive.mw_axis"] not in ("x", "y"):
            raise ConfigError("drive.mw_axis must be x or y", key="drive.mw_axis")
        for key in ("grid.points", "sweep.points", "sense.points", "validate.samples"):
            if merged[key] <= 0:
                raise ConfigError(f"{key} must be positive, got {merged[key]}", key=key)
        if merged["noise.sigma"] < 0:
            raise ConfigError("noise.sigma must be non-negative", key="noise.sigma")

    def __getitem__(self, key):
        return self.values[key]

    @property
    def scheme(self):
        return _SCHEMES[self.values["scheme"]]

    @property
    def seed(self):
        return int(self.values["seed"])

    def sensor(self):
        return NVParameters(
            d=self["nv.d_hz"],
            ex=self["nv.ex_hz"],
            gamma_e=self["nv.gamma_e_hz_per_tesla"],
            bx=self["nv.bx_tesla"],
            gamma_bright=self["nv.gamma_bright_hz"],
            gamma_dark=self["nv.gamma_dark_hz"],
        )

    def drive(self):
        return DriveConfig(
            b_rfc=self["drive.b_rfc_tesla"],
            freq_rfc=self["drive.freq_rfc_hz"],
            b_rft=self["drive.b_rft_tesla"],
            freq_rft=self["drive.freq_rft_hz"],
            b_mw=self["drive.b_mw_tesla"],
            freq_mw=self["drive.freq_mw_hz"],
            mw_axis=self["drive.mw_axis"],
        )

    def linewidth_model(self):
        if not self["linewidth.enabled"]:
            return None
        return LinewidthModel(
            gamma_residual=self["linewidth.residual_hz"],
            gamma_electric=self["linewidth.electric_hz"],
            suppression_scale=self["linewidth.suppression_tesla"],
            fluctuation_coeff=self["linewidth.fluctuation_coeff"],
            gamma_e=self["nv.gamma_e_hz_per_tesla"],
        )

    def mw_grid(self):
        start, stop = self["grid.start_hz"], self["grid.stop_hz"]
        points = self["grid.points"]
        if start == 0.0 and stop == 0.0:
            zfs = effective_zfs(self.sensor())
            half = 3.0 * zfs.ex_prime
            start, stop = zfs.d_prime - half, zfs.d_prime + half
        if not stop > start:
            raise ConfigError("grid.stop_hz must exceed grid.start_hz", key="grid.stop_hz")
        if points < 2:
            raise ConfigError("grid.points must be at least 2", key="grid.points")
        return np.linspace(start, stop, points)

    def sweep_amplitudes(self):
        start, stop = self["sweep.start_tesla"], self["sweep.stop_tesla"]
        if not stop > start >= 0:
            raise ConfigError("sweep amplitude range must be increasing and non-negative")
        return np.linspace(start, stop, self["sweep.points"])

    def sense_frequencies(self):
        start, stop = self["sense.start_hz"], self["sense.stop_hz"]
        if not stop > start > 0:
            raise ConfigError("sense frequency range must be increasing and positive")
        return np.linspace(start, stop, self["sense.points"])

    def with_values(self, **updates):
        return replace(self, values={**self.values, **updates})


def parse_config(path):
    """Parse a configuration file; unknown keys, bad values and duplicates
    are reported with their line number."""
    with open(path, "r", encoding="utf-8") as fh:
        lines = fh.read().splitlines()
    values = {}
    seen = {}
    for i, raw in enumerate(lines, start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ConfigError(f"line {i}: expected 'key = value', got {raw!r}", line=i)
        key, _, value = line.partition("=")
        key = key.strip()
        value = value.split("#", 1)[0].strip()
        if key not in KEY_SCHEMA:
            raise ConfigError(f"line {i}: unknown key {key!r}", line=i, key=key)
        if key in seen:
            raise ConfigError(
                f"line {i}: duplicate key {key!r} (first on line {seen[key]})", line=i, key=key
            )
        seen[key] = i
        values[key] = _parse_value(key, value, i)
    return RunConfig(values=values)
