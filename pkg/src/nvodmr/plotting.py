"""Matplotlib figure rendering for the report paths.

Figures are decorative companions to the CSV outputs: the CLI writes them
next to the delimited data when asked.  Nothing here is on a computation
path.
"""

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np


def _finish(fig, path):
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)


def plot_spectrum(spectrum, path, markers=None, title=None):
    """Contrast vs microwave frequency, with optional vertical resonance
    markers (Hz)."""
    fig, ax = plt.subplots(figsize=(7.0, 4.0))
    ax.plot(spectrum.mw_frequencies / 1e9, spectrum.contrast, lw=1.0, color="tab:blue")
    if markers is not None:
        for m in markers:
            ax.axvline(m / 1e9, color="tab:red", lw=0.6, ls="--", alpha=0.7)
    ax.set_xlabel("microwave frequency (GHz)")
    ax.set_ylabel("contrast")
    if title:
        ax.set_title(title)
    _finish(fig, path)


def plot_sweep(amplitudes, centers_by_label, path, slope=None, title=None):
    """Fitted dip centers vs drive amplitude, one series per dip label."""
    fig, ax = plt.subplots(figsize=(7.0, 4.0))
    for label, centers in sorted(centers_by_label.items()):
        amps = np.array([a for a, _ in centers]) * 1e6
        vals = np.array([c for _, c in centers]) / 1e9
        ax.plot(amps, vals, "o-", ms=3, lw=0.8, label=label)
    ax.set_xlabel("drive amplitude (uT)")
    ax.set_ylabel("dip center (GHz)")
    ax.legend(fontsize=8)
    if slope is not None:
        ax.set_title((title + "  " if title else "") + f"splitting slope {slope/1e9:.2f} GHz/T")
    elif title:
        ax.set_title(title)
    _finish(fig, path)


def plot_sensitivity(rows, path, dead_zone=None, title=None):
    """Sensitivity vs target frequency; rows are (frequency, scheme label,
    sensitivity, valid)."""
    fig, ax = plt.subplots(figsize=(7.0, 4.0))
    by_scheme = {}
    for freq, scheme, value, valid in rows:
        by_scheme.setdefault(scheme, []).append((freq, value, valid))
    for scheme, pts in sorted(by_scheme.items()):
        freqs = np.array([p[0] for p in pts]) / 1e6
        vals = np.array([p[1] for p in pts]) * 1e6
        ax.plot(freqs, vals, "o", ms=3, label=scheme)
    if dead_zone is not None:
        ax.axvspan(dead_zone[0] / 1e6, dead_zone[1] / 1e6, color="gray", alpha=0.2,
                   label="dead zone")
    ax.set_yscale("log")
    ax.set_xlabel("target frequency (MHz)")
    ax.set_ylabel("sensitivity (uT/sqrt(Hz))")
    ax.legend(fontsize=8)
    if title:
        ax.set_title(title)
    _finish(fig, path)
