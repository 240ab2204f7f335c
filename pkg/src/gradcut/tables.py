"""Deterministic CSV writing.

All tables the package emits go through here so float formatting is uniform
and byte-reproducible: shortest round-trip decimal via repr, '\n' line ends,
no locale involvement.
"""

import numpy as np

__all__ = ["format_cell", "rows_to_csv", "write_csv"]


def format_cell(v):
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def rows_to_csv(header, rows):
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(format_cell(v) for v in row))
    return "\n".join(lines) + "\n"


def write_csv(path, header, rows):
    text = rows_to_csv(header, rows)
    with open(path, "w", newline="") as fh:
        fh.write(text)
    return text
