"""CSV and JSON writers (locale-free, 17 significant digits)."""
import csv
import json
from dataclasses import asdict, is_dataclass
from pathlib import Path

import numpy as np


def fmt(x):
    if isinstance(x, (bool, np.bool_)):
        return "1" if x else "0"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return format(float(x), ".17g")


def _plain(obj):
    if is_dataclass(obj):
        return _plain(asdict(obj))
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _plain(obj.tolist())
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.floating):
        return float(obj)
    return obj


def to_json(obj):
    # non-finite values are written as Infinity/NaN, which Python's json reads back
    return json.dumps(_plain(obj), indent=2, sort_keys=True)


def write_json(path, obj):
    Path(path).write_text(to_json(obj) + "\n")


def write_rows(path, header, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for row in rows:
            w.writerow([fmt(v) for v in row])


def trajectory_columns(traj, layout):
    """Header and column arrays of a trajectory recorded in original coordinates."""
    names = ["time", "e_norm"]
    cols = [traj.times, traj.e_norm]
    blocks = [("x", layout.x), ("z", layout.z), ("theta", layout.theta), ("z_bar", layout.z_bar),
              ("q", layout.q), ("p", layout.p), ("chi_n", layout.chi_n)]
    for name, sl in blocks:
        for k in range(sl.stop - sl.start):
            names.append(f"{name}{k + 1}")
            cols.append(traj.states[:, sl.start + k])
    names += ["dhat", "w_minus_yp", "sat_active"]
    cols += [traj.dhat, traj.w_minus_yp, traj.sat_active]
    return names, cols


def write_trajectory(path, traj, layout):
    names, cols = trajectory_columns(traj, layout)
    write_rows(path, names, zip(*cols))


def write_sweep(path, reports):
    header = ["tau", "sup_e", "tail_sup_e", "saturation_fraction", "diverged"]
    write_rows(path, header, ([r.tau, r.sup_e, r.tail_sup_e, r.saturation_fraction, r.diverged] for r in reports))
