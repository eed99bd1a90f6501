"""CSV and JSON emission.

All floats are serialized with 17 significant digits so that every
numeric output parses back to the exact double that produced it.
"""

from __future__ import annotations

import json
import math
from typing import IO, Iterable

import numpy as np

from .walk import LocalTimeField, TrajectoryLog, WalkParameters


def fmt(value) -> str:
    """Lossless scalar formatting for CSV cells."""
    if value is None:
        return ""
    if isinstance(value, (bool, np.bool_)):
        return "1" if value else "0"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    v = float(value)
    if math.isnan(v):
        return "nan"
    if math.isinf(v):
        return "inf" if v > 0 else "-inf"
    return f"{v:.17g}"


def write_trajectory_csv(log: TrajectoryLog, f: IO[str]) -> None:
    """Full recording: one `n,position,delta,dir` row per step."""
    if not log.full:
        raise ValueError("trajectory CSV requires full recording")
    f.write("n,position,delta,dir\n")
    for i in range(log.n_steps):
        f.write(
            f"{i},{int(log.positions[i])},{fmt(log.deltas[i])},{int(log.dirs[i])}\n"
        )


def read_trajectory_csv(f: IO[str], params: WalkParameters) -> TrajectoryLog:
    """Rebuild a full log from its CSV; the final local-time field is
    replayed from the recorded directions."""
    from . import fastsim

    header = f.readline().strip()
    if header != "n,position,delta,dir":
        raise ValueError(f"unexpected trajectory header: {header!r}")
    positions, deltas, dirs = [], [], []
    for line in f:
        line = line.strip()
        if not line:
            continue
        _, pos, delta, d = line.split(",")
        positions.append(int(pos))
        deltas.append(float(delta))
        dirs.append(int(d))
    n = len(positions)
    positions = np.asarray(positions, dtype=np.int64)
    deltas = np.asarray(deltas, dtype=np.float64)
    dirs = np.asarray(dirs, dtype=np.int8)
    if n and not np.all(np.abs(dirs) == 1):
        raise ValueError("dir column must be +1 or -1")
    start = int(positions[0]) if n else 0
    final_pos = int(positions[-1] + dirs[-1]) if n else start
    if n:
        _, counts, base = fastsim.replay_deltas(
            params.kernel.as_array(), start, dirs.astype(np.int64)
        )
        field = LocalTimeField.from_window(-base, counts)
    else:
        field = LocalTimeField()
    return TrajectoryLog(
        params=params,
        n_steps=n,
        full=True,
        start_position=start,
        positions=positions,
        deltas=deltas,
        dirs=dirs,
        final_position=final_pos,
        final_local_times=field,
        snapshots=[],
    )


def write_snapshot_csv(field: LocalTimeField, f: IO[str]) -> None:
    """Local-time snapshot: `j,ell` rows over the traversed support."""
    f.write("j,ell\n")
    edges, counts = field.to_arrays()
    for j, c in zip(edges, counts):
        f.write(f"{int(j)},{int(c)}\n")


def write_profile_csv(u, raw, f: IO[str]) -> None:
    """Profile table `j,u,ell_style`: u is normalized to sum 1 and
    ell_style is the unnormalized solution (u scaled by Z)."""
    f.write("j,u,ell_style\n")
    for j, (uj, rj) in enumerate(zip(u, raw), start=1):
        f.write(f"{j},{fmt(uj)},{fmt(rj)}\n")


TRIAL_COLUMNS = (
    "trial", "seed", "trapped", "x", "interior_length", "site_count",
    "profile_err", "range_early", "range_final",
)


def write_trial_csv(rows: Iterable[dict], f: IO[str]) -> None:
    """Per-trial table of a free-walk experiment, in trial order."""
    f.write(",".join(TRIAL_COLUMNS) + "\n")
    for row in rows:
        cells = []
        for col in TRIAL_COLUMNS:
            v = row.get(col)
            if col == "profile_err" and v is not None and math.isnan(v):
                v = None
            cells.append(fmt(v))
        f.write(",".join(cells) + "\n")


def write_checkpoint_csv(rows: Iterable[dict], columns: tuple[str, ...], f: IO[str]) -> None:
    f.write(",".join(columns) + "\n")
    for row in rows:
        f.write(",".join(fmt(row.get(c)) for c in columns) + "\n")


def _jsonable(value):
    if isinstance(value, dict):
        return {str(k): _jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    if isinstance(value, np.ndarray):
        return [_jsonable(v) for v in value.tolist()]
    if isinstance(value, (bool, np.bool_)):
        return bool(value)
    if isinstance(value, (int, np.integer)):
        return int(value)
    if isinstance(value, (float, np.floating)):
        v = float(value)
        if math.isnan(v):
            return "nan"
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        return v
    return value


def summary_json(summary, include_rows: bool = False) -> str:
    """Experiment summary as JSON; echoes the fully resolved parameters."""
    doc = {
        "experiment": summary.name,
        "params": summary.params,
        "master_seed": summary.master_seed,
        "trials": summary.trials,
        "horizon": summary.horizon,
        "trial_seeds": summary.trial_seeds,
        "aggregates": summary.aggregates,
        "wall_clock_s": summary.wall_clock_s,
    }
    if include_rows:
        doc["rows"] = summary.rows
        doc["checkpoint_rows"] = summary.checkpoint_rows
    return json.dumps(_jsonable(doc), indent=2)
