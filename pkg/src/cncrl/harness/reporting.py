"""CSV and manifest output.

Floats are written with shortest round-trip repr, so identical runs
produce byte-identical files.  The manifest records what produced a run
(config hash, seed, versions, kernel backend) and nothing time-varying.
"""

from __future__ import annotations

import csv
import platform
from pathlib import Path

import numpy as np

from .. import __version__, _kernels
from .config import config_hash


def fmt(value):
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    if isinstance(value, (np.integer,)):
        return int(value)
    return value


def write_csv(path: Path, header, rows) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for row in rows:
            w.writerow([fmt(v) for v in row])


def write_manifest(path: Path, cfg: dict) -> None:
    lines = [
        f"experiment={cfg.get('experiment')}",
        f"config_hash={config_hash(cfg)}",
        f"seed={cfg.get('seed')}",
        f"trials={cfg.get('trials')}",
        f"package_version={__version__}",
        f"python_version={platform.python_version()}",
        f"numpy_version={np.__version__}",
        f"kernel_backend={_kernels.backend_name()}",
    ]
    path.write_text("\n".join(lines) + "\n")


def mean_se_median(values) -> tuple[float, float, float]:
    arr = np.asarray(values, dtype=float)
    se = float(arr.std(ddof=1) / np.sqrt(len(arr))) if len(arr) > 1 else 0.0
    return float(arr.mean()), se, float(np.median(arr))
