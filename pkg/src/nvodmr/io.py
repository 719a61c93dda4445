"""CSV input/output with reproducible formatting.

Numbers are written with Python's shortest round-trip representation of the
double value, so identical runs produce byte-identical files.  Files are
UTF-8 with LF line endings, a mandatory header row, and optional trailing
comment lines starting with '#' (used for report footers); the readers here
accept exactly that dialect.
"""

import numpy as np

from .errors import ConfigError


def format_number(value):
    """Shortest decimal string that round-trips the double exactly."""
    return repr(float(value))


def write_csv(path, header, rows, footer_comments=()):
    """Write rows (iterables of cells) under a header; numeric cells are
    formatted for exact round-trip, other cells with str()."""
    lines = [",".join(header)]
    for row in rows:
        cells = []
        for cell in row:
            if isinstance(cell, bool):
                cells.append("true" if cell else "false")
            elif isinstance(cell, (int, np.integer)):
                cells.append(str(int(cell)))
            elif isinstance(cell, (float, np.floating)):
                cells.append(format_number(cell))
            else:
                cells.append(str(cell))
        lines.append(",".join(cells))
    for comment in footer_comments:
        lines.append("# " + comment)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


def read_csv(path, expected_header):
    """Parse a CSV written by this package (or hand-made to the same
    dialect); returns a list of row-lists of strings.  Raises ConfigError
    with the offending line number on malformed input."""
    with open(path, "r", encoding="utf-8") as fh:
        lines = fh.read().splitlines()
    if not lines:
        raise ConfigError(f"{path}: empty file", line=1)
    header = [h.strip() for h in lines[0].split(",")]
    if header != list(expected_header):
        raise ConfigError(
            f"{path}: expected header {','.join(expected_header)!r}, got {lines[0]!r}",
            line=1,
        )
    rows = []
    for i, line in enumerate(lines[1:], start=2):
        if not line.strip() or line.lstrip().startswith("#"):
            continue
        cells = [c.strip() for c in line.split(",")]
        if len(cells) != len(header):
            raise ConfigError(
                f"{path}: line {i} has {len(cells)} fields, expected {len(header)}",
                line=i,
            )
        rows.append(cells)
    return rows


def write_spectrum_csv(path, spectrum, footer_comments=()):
    write_csv(
        path,
        ("mw_frequency_hz", "contrast"),
        zip(spectrum.mw_frequencies, spectrum.contrast),
        footer_comments=footer_comments,
    )


def read_spectrum_records(path):
    """Read measured spectrum records (mw_frequency_hz, contrast); validated,
    sorted by frequency.  Raises ConfigError naming the offending row."""
    rows = read_csv(path, ("mw_frequency_hz", "contrast"))
    freqs = []
    contrast = []
    for i, cells in enumerate(rows, start=2):
        try:
            f = float(cells[0])
            c = float(cells[1])
        except ValueError as exc:
            raise ConfigError(f"{path}: line {i}: non-numeric value", line=i) from exc
        if not (np.isfinite(f) and np.isfinite(c)):
            raise ConfigError(f"{path}: line {i}: non-finite value", line=i)
        freqs.append(f)
        contrast.append(c)
    order = np.argsort(np.array(freqs), kind="stable")
    freqs = np.array(freqs)[order]
    contrast = np.array(contrast)[order]
    if freqs.size > 1 and not np.all(np.diff(freqs) > 0):
        raise ConfigError(f"{path}: duplicate frequencies after sorting")
    return freqs, contrast
