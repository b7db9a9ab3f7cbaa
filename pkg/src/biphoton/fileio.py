"""File formats: PGM images (format of record), CSV exports, metrics and
YAML manifests.

PGM images are binary P5. Counts are written as 16-bit big-endian with
row 0 at the top of the image (y decreasing), clamped at 65535. CSVs are
comma-separated, '.' decimal, LF line endings, UTF-8, with a mandatory
header row; image CSVs carry the grid geometry on a leading comment line.
"""

from __future__ import annotations

import io
import math
import re
from pathlib import Path

import numpy as np
import yaml

from .errors import ConfigError
from .geometry import Grid

__version__ = "0.1.0"


# ---------------------------------------------------------------------------
# PGM
# ---------------------------------------------------------------------------


def write_pgm(path, values: np.ndarray, maxval: int = 65535, flip: bool = True) -> None:
    """Write a 2-D non-negative integer array as binary PGM (P5).

    ``flip`` converts from math orientation (row 0 = bottom) to image
    orientation (row 0 = top).
    """
    arr = np.asarray(values)
    if arr.ndim != 2:
        raise ConfigError("PGM output requires a 2-D array")
    arr = np.clip(arr, 0, maxval)
    if flip:
        arr = arr[::-1, :]
    dtype = ">u2" if maxval > 255 else "u1"
    with open(path, "wb") as fh:
        fh.write(f"P5\n{arr.shape[1]} {arr.shape[0]}\n{maxval}\n".encode("ascii"))
        fh.write(arr.astype(dtype).tobytes())


def read_pgm(path) -> tuple[np.ndarray, int]:
    """Read a binary PGM (P5); returns (array row 0 = bottom, maxval)."""
    data = Path(path).read_bytes()
    m = re.match(rb"P5\s+(?:#[^\n]*\n\s*)*(\d+)\s+(\d+)\s+(\d+)\s", data)
    if not m:
        raise ConfigError(f"{path}: not a binary PGM (P5) file")
    width, height, maxval = (int(g) for g in m.groups())
    raw = data[m.end():]
    dtype = ">u2" if maxval > 255 else "u1"
    count = width * height
    if len(raw) < count * (2 if maxval > 255 else 1):
        raise ConfigError(f"{path}: truncated PGM payload")
    arr = np.frombuffer(raw, dtype=dtype, count=count)
    arr = arr.reshape(height, width).astype(np.int64)
    return arr[::-1, :], maxval


def load_bitmap_raster(path) -> np.ndarray:
    """Load a grayscale PGM as a [0, 1] raster in image orientation (row 0 top)."""
    arr, maxval = read_pgm(path)
    return arr[::-1, :].astype(float) / float(maxval)


def write_phase_pgm(path, phase: np.ndarray) -> dict:
    """Write a phase raster as 16-bit PGM; returns the gray-level mapping."""
    ph = np.asarray(phase, dtype=float)
    lo = float(ph.min())
    hi = float(ph.max())
    span = hi - lo
    if span <= 0:
        gray = np.zeros(ph.shape, dtype=np.int64)
    else:
        gray = np.round((ph - lo) / span * 65535).astype(np.int64)
    write_pgm(path, gray, maxval=65535, flip=False)
    return {"phase_min": lo, "phase_max": hi, "maxval": 65535}


# ---------------------------------------------------------------------------
# CSV
# ---------------------------------------------------------------------------


def _fmt(x: float) -> str:
    return format(float(x), ".12g")


def write_image_csv(path, counts: np.ndarray, grid: Grid) -> None:
    """Sparse (row, col, count) CSV of the nonzero pixels, row-major order."""
    ny, nx = counts.shape
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(f"# ny={ny},nx={nx},extent={_fmt(grid.extent)}\n")
        fh.write("row,col,count\n")
        rows, cols = np.nonzero(counts)
        for r, c in zip(rows.tolist(), cols.tolist()):
            fh.write(f"{r},{c},{int(counts[r, c])}\n")


def read_image_csv(path) -> tuple[np.ndarray, Grid]:
    """Read an image CSV written by write_image_csv."""
    with open(path, "r", encoding="utf-8") as fh:
        lines = fh.read().splitlines()
    if not lines or not lines[0].startswith("#"):
        raise ConfigError(f"{path}: line 1: missing geometry comment line")
    meta = {}
    for item in lines[0][1:].strip().split(","):
        k, _, v = item.partition("=")
        meta[k.strip()] = v.strip()
    try:
        ny = int(meta["ny"])
        nx = int(meta["nx"])
        extent = float(meta["extent"])
    except (KeyError, ValueError) as exc:
        raise ConfigError(f"{path}: line 1: bad geometry metadata ({exc})") from exc
    if len(lines) < 2 or lines[1].strip() != "row,col,count":
        raise ConfigError(f"{path}: line 2: expected header 'row,col,count'")
    counts = np.zeros((ny, nx), dtype=np.int64)
    for ln, line in enumerate(lines[2:], start=3):
        if not line.strip():
            continue
        parts = line.split(",")
        if len(parts) != 3:
            raise ConfigError(f"{path}: line {ln}: expected 3 columns, got {len(parts)}")
        try:
            r, c, v = int(parts[0]), int(parts[1]), int(parts[2])
        except ValueError as exc:
            raise ConfigError(f"{path}: line {ln}: {exc}") from exc
        if not (0 <= r < ny and 0 <= c < nx):
            raise ConfigError(f"{path}: line {ln}: pixel ({r}, {c}) outside {ny}x{nx}")
        counts[r, c] = v
    return counts, Grid(n_x=nx, n_y=ny, extent=extent)


def write_field_csv(path, values: np.ndarray, grid: Grid) -> None:
    """Dense (row, col, value) CSV of a real-valued field (NaN allowed)."""
    ny, nx = values.shape
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(f"# ny={ny},nx={nx},extent={_fmt(grid.extent)}\n")
        fh.write("row,col,value\n")
        for r in range(ny):
            row = values[r]
            for c in range(nx):
                v = row[c]
                fh.write(f"{r},{c},{_fmt(v) if math.isfinite(v) else 'nan'}\n")


def write_map_csv(path, cmap) -> None:
    """Coherence map CSV: header row of idler angles, header column of phi bins."""
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("phi\\phi_p," + ",".join(_fmt(a) for a in cmap.phi_p_angles) + "\n")
        for i, phi in enumerate(cmap.phi_centers):
            row = ",".join(
                _fmt(v) if math.isfinite(v) else "nan" for v in cmap.values[i]
            )
            fh.write(f"{_fmt(phi)},{row}\n")


def read_map_csv(path):
    """Read a coherence map CSV; returns (phi_centers, phi_p_angles, values)."""
    with open(path, "r", encoding="utf-8") as fh:
        lines = fh.read().splitlines()
    if not lines:
        raise ConfigError(f"{path}: empty file")
    header = lines[0].split(",")
    if not header or not header[0].startswith("phi"):
        raise ConfigError(f"{path}: line 1: missing header row")
    try:
        angles = np.array([float(v) for v in header[1:]])
    except ValueError as exc:
        raise ConfigError(f"{path}: line 1: {exc}") from exc
    phis = []
    rows = []
    for ln, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        parts = line.split(",")
        if len(parts) != angles.size + 1:
            raise ConfigError(
                f"{path}: line {ln}: expected {angles.size + 1} columns, got {len(parts)}"
            )
        try:
            phis.append(float(parts[0]))
            rows.append([float(v) for v in parts[1:]])
        except ValueError as exc:
            raise ConfigError(f"{path}: line {ln}: {exc}") from exc
    return np.array(phis), angles, np.array(rows)


def write_profile_csv(path, centers: np.ndarray, values: np.ndarray,
                      value_name: str = "value") -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(f"phi,{value_name}\n")
        for c, v in zip(centers, values):
            fh.write(f"{_fmt(c)},{_fmt(v)}\n")


# ---------------------------------------------------------------------------
# metrics and manifests
# ---------------------------------------------------------------------------


def write_metrics(path, metrics: dict) -> None:
    """key = value lines, one metric per line."""
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for key, val in metrics.items():
            if isinstance(val, float):
                val = _fmt(val)
            fh.write(f"{key} = {val}\n")


def read_metrics(path) -> dict:
    out = {}
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        if not line.strip():
            continue
        key, _, val = line.partition("=")
        out[key.strip()] = val.strip()
    return out


def write_manifest(path, config: dict, seed: int, backend: str, command: str) -> None:
    doc = {
        "tool": {"name": "biphoton", "version": __version__, "backend": backend},
        "command": command,
        "seed": int(seed),
        "config": config,
    }
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        yaml.safe_dump(doc, fh, sort_keys=True)


def read_yaml(path) -> dict:
    with open(path, "r", encoding="utf-8") as fh:
        doc = yaml.safe_load(fh)
    if not isinstance(doc, dict):
        raise ConfigError(f"{path}: expected a mapping at the top level")
    return doc


def write_yaml(path, doc: dict) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        yaml.safe_dump(doc, fh, sort_keys=True)


def write_png_preview(path, values: np.ndarray) -> bool:
    """8-bit PNG preview when a codec is importable; returns success."""
    try:
        from PIL import Image
    except ImportError:
        return False
    arr = np.asarray(values, dtype=float)[::-1, :]
    peak = arr.max()
    scaled = np.zeros(arr.shape, dtype=np.uint8) if peak <= 0 else np.round(
        arr / peak * 255
    ).astype(np.uint8)
    Image.fromarray(scaled, mode="L").save(path)
    return True
