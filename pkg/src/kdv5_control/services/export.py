"""
Artifact writers: CSV time series, JSON reports and the run manifest.

Floats are written with 17 significant digits (CSV) or their exact repr
(JSON), keys are sorted and nothing time-dependent is recorded, so identical
runs produce byte-identical files.
"""

import csv
import hashlib
import json
import logging
import math
import platform
from pathlib import Path
from typing import Any, Dict, Iterable, List, Sequence, Union

import numpy as np
import scipy

from kdv5_control import __version__
from kdv5_control.errors import ArtifactError
from kdv5_control.hum.signal import ControlSignal
from kdv5_control.spectral.grid import PeriodicGrid, spectrum_to_samples
from kdv5_control.spectral.trajectory import Trajectory

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]


def fmt(value: float) -> str:
    return format(float(value), ".17g")


def jsonable(value: Any) -> Any:
    """Convert numpy scalars/arrays, complex numbers and non-finite floats for JSON."""
    if isinstance(value, dict):
        return {str(key): jsonable(item) for key, item in value.items()}
    if isinstance(value, (list, tuple)):
        return [jsonable(item) for item in value]
    if isinstance(value, np.ndarray):
        return jsonable(value.tolist())
    if isinstance(value, np.generic):
        value = value.item()
    if isinstance(value, bool) or value is None or isinstance(value, (int, str)):
        return value
    if isinstance(value, complex):
        return [jsonable(value.real), jsonable(value.imag)]
    if isinstance(value, float):
        if math.isfinite(value):
            return value
        return "nan" if math.isnan(value) else ("inf" if value > 0 else "-inf")
    return str(value)


def _open(path: Path, mode: str = "w"):
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        return path.open(mode, encoding="utf-8", newline="")
    except OSError as e:
        raise ArtifactError(f"cannot write {path}: {e.strerror or e}", path)


def write_json(path: PathLike, payload: Any) -> Path:
    path = Path(path)
    with _open(path) as handle:
        handle.write(json.dumps(jsonable(payload), sort_keys=True, indent=2, allow_nan=False))
        handle.write("\n")
    return path


def _write_rows(path: Path, header: Sequence[str], rows: Iterable[Sequence[str]]) -> Path:
    with _open(path) as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(header)
        writer.writerows(rows)
    return path


def write_trajectory_csv(
    path: PathLike,
    traj: Trajectory,
    norm_orders: Sequence[float] = (0.0,),
    physical_samples: bool = False,
    stride: int = 1,
) -> Path:
    """t, then u(x_j, t) or |u_hat(k, t)| for k = 0..K, then ||u||_s for each s."""
    grid = traj.grid
    nodes = np.arange(0, len(traj), stride)
    if physical_samples:
        header = ["t"] + [f"u_x{j}" for j in range(grid.n_points)]
        values = spectrum_to_samples(traj.coeffs[nodes], grid.n_points).real
    else:
        header = ["t"] + [f"abs_k{k}" for k in range(grid.n_modes + 1)]
        values = np.abs(traj.coeffs[nodes][:, grid.zero_index :])
    header += [f"norm_s{fmt(s)}" for s in norm_orders]
    norms = np.stack([traj.norms(s)[nodes] for s in norm_orders], axis=1) if norm_orders else None
    rows = []
    for i, n in enumerate(nodes):
        row = [fmt(traj.times[n])] + [fmt(v) for v in values[i]]
        if norms is not None:
            row += [fmt(v) for v in norms[i]]
        rows.append(row)
    return _write_rows(Path(path), header, rows)


def write_norms_csv(path: PathLike, traj: Trajectory, norm_orders: Sequence[float], stride: int = 1) -> Path:
    """t, mean, then ||u(t) - [u0]||_s for each s."""
    nodes = np.arange(0, len(traj), stride)
    mean_free = traj.mean_zero()
    columns = [mean_free.norms(s) for s in norm_orders]
    header = ["t", "mean"] + [f"norm_s{fmt(s)}" for s in norm_orders]
    rows = [
        [fmt(traj.times[n]), fmt(traj.means[n])] + [fmt(column[n]) for column in columns]
        for n in nodes
    ]
    return _write_rows(Path(path), header, rows)


def write_signal_csv(path: PathLike, signal: ControlSignal) -> Path:
    """t, then re/im of k_hat(k, t) for every k != 0; re-imported exactly by load_signal."""
    k = signal.grid.mean_zero_wavenumbers
    header = ["t"]
    for mode in k:
        header += [f"re_k{mode}", f"im_k{mode}"]
    vectors = signal.mean_zero_vectors
    rows = []
    for n in range(len(signal)):
        row = [fmt(signal.times[n])]
        for value in vectors[n]:
            row += [fmt(value.real), fmt(value.imag)]
        rows.append(row)
    return _write_rows(Path(path), header, rows)


def load_signal(path: PathLike, grid: PeriodicGrid) -> ControlSignal:
    """Read a signal written by write_signal_csv."""
    path = Path(path)
    try:
        with path.open("r", encoding="utf-8", newline="") as handle:
            rows = list(csv.reader(handle))
    except OSError as e:
        raise ArtifactError(f"cannot read {path}: {e.strerror or e}", path)
    expected = 1 + 4 * grid.n_modes
    if not rows or len(rows[0]) != expected:
        raise ArtifactError(
            f"{path} does not hold a signal for K={grid.n_modes}", path, {"columns": expected}
        )
    data = np.array([[float(v) for v in row] for row in rows[1:]])
    if data.shape[0] < 2:
        raise ArtifactError(f"{path} holds fewer than two time nodes", path)
    # t_1 = 1*dt is written exactly
    dt = float(data[1, 0])
    vectors = data[:, 1::2] + 1j * data[:, 2::2]
    return ControlSignal.from_mean_zero_vectors(grid, dt, vectors)


def sha256_file(path: PathLike) -> str:
    digest = hashlib.sha256()
    with Path(path).open("rb") as handle:
        for chunk in iter(lambda: handle.read(1 << 16), b""):
            digest.update(chunk)
    return digest.hexdigest()


def write_manifest(
    directory: PathLike,
    command: str,
    config_hash: str,
    seed: int,
    threads: int,
    files: List[Path],
    exit_code: int = 0,
) -> Path:
    """manifest.json: versions, config hash, seed, threads and the files written with their hashes."""
    directory = Path(directory)
    entries = sorted(
        ({"name": path.name, "sha256": sha256_file(path)} for path in files),
        key=lambda entry: entry["name"],
    )
    manifest: Dict[str, Any] = {
        "package": "kdv5-control",
        "version": __version__,
        "python": platform.python_version(),
        "numpy": np.__version__,
        "scipy": scipy.__version__,
        "command": command,
        "config_sha256": config_hash,
        "seed": seed,
        "threads": threads,
        "exit_code": exit_code,
        "files": entries,
    }
    path = write_json(directory / "manifest.json", manifest)
    logger.info(f"Wrote manifest with {len(entries)} files to {path}")
    return path
