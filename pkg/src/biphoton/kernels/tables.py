"""Flat, array-only description of a state for the sampling kernels.

Both kernel backends (compiled and numpy) consume the same tables:
inverse-CDF radius tables for the two envelopes plus a uniform encoding
of each phase mask (helical charge / sector edges / bitmap raster).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..geometry import (
    KIND_BITMAP,
    KIND_HELICAL,
    KIND_SECTOR,
    BitmapPhase,
    HelicalPhase,
    SectorPhase,
    TWO_PI,
)

N_RADIAL_NODES = 8193
N_QUANTILES = 65537

_DUMMY_EDGES = np.array([0.0, TWO_PI])
_DUMMY_VALUES = np.array([0.0])
_DUMMY_RASTER = np.zeros((1, 1))


@dataclass(frozen=True)
class MaskParams:
    kind: int
    m: float
    edges: np.ndarray
    values: np.ndarray
    raster: np.ndarray  # phase values (threshold already applied)
    half_width: float
    phase_lo: float


def mask_params(mask) -> MaskParams:
    if isinstance(mask, HelicalPhase):
        return MaskParams(
            kind=KIND_HELICAL,
            m=float(mask.m),
            edges=_DUMMY_EDGES,
            values=_DUMMY_VALUES,
            raster=_DUMMY_RASTER,
            half_width=1.0,
            phase_lo=0.0,
        )
    if isinstance(mask, SectorPhase):
        return MaskParams(
            kind=KIND_SECTOR,
            m=0.0,
            edges=np.ascontiguousarray(mask.edges, dtype=np.float64),
            values=np.ascontiguousarray(mask.values, dtype=np.float64),
            raster=_DUMMY_RASTER,
            half_width=1.0,
            phase_lo=0.0,
        )
    if isinstance(mask, BitmapPhase):
        return MaskParams(
            kind=KIND_BITMAP,
            m=0.0,
            edges=_DUMMY_EDGES,
            values=_DUMMY_VALUES,
            raster=np.ascontiguousarray(mask._phases, dtype=np.float64),
            half_width=float(mask.half_width),
            phase_lo=float(mask.phase_lo),
        )
    raise TypeError(f"unsupported mask type for sampling: {type(mask).__name__}")


def phase_lookup(params: MaskParams, r, phi):
    """Vectorized phase evaluation on polar points, mirroring the kernel.

    Returns the raw (unwrapped) phase; callers feed it into cos of a
    difference, so wrapping is unnecessary.
    """
    phi = np.asarray(phi, dtype=float)
    if params.kind == KIND_HELICAL:
        return params.m * phi
    if params.kind == KIND_SECTOR:
        idx = np.searchsorted(params.edges, phi, side="right") - 1
        idx = np.clip(idx, 0, params.values.size - 1)
        return params.values[idx]
    # bitmap
    r = np.asarray(r, dtype=float)
    x = r * np.cos(phi)
    y = r * np.sin(phi)
    n_rows, n_cols = params.raster.shape
    h = params.half_width
    col = np.floor((x + h) / (2.0 * h) * n_cols).astype(np.int64)
    row = np.floor((h - y) / (2.0 * h) * n_rows).astype(np.int64)
    inside = (col >= 0) & (col < n_cols) & (row >= 0) & (row < n_rows)
    out = np.full(phi.shape, params.phase_lo, dtype=float)
    out[inside] = params.raster[row[inside], col[inside]]
    return out


def radius_quantile_table(env, r_max: float, n_nodes: int = N_RADIAL_NODES,
                          n_quantiles: int = N_QUANTILES) -> np.ndarray:
    """Inverse CDF of the radius under |eta|^2, tabulated on uniform quantiles."""
    s = np.linspace(0.0, r_max, n_nodes)
    pdf = env.radial_mass_density(s)
    steps = 0.5 * (pdf[1:] + pdf[:-1]) * np.diff(s)
    cdf = np.concatenate([[0.0], np.cumsum(steps)])
    if not cdf[-1] > 0:
        raise ValueError("envelope has no mass inside the sampling radius")
    cdf /= cdf[-1]
    levels = np.linspace(0.0, 1.0, n_quantiles)
    return np.ascontiguousarray(np.interp(levels, cdf, s))


@dataclass(frozen=True)
class SamplerTables:
    q_a: np.ndarray
    q_b: np.ndarray
    mask_a: MaskParams
    mask_b: MaskParams
    sign_v: float
    mean_acceptance: float


def sampler_tables(state) -> SamplerTables:
    return SamplerTables(
        q_a=radius_quantile_table(state.env_a, state.grid_a.extent),
        q_b=radius_quantile_table(state.env_b, state.grid_b.extent),
        mask_a=mask_params(state.mask_a),
        mask_b=mask_params(state.mask_b),
        sign_v=float(state.sign * state.visibility),
        mean_acceptance=float(state.mean_acceptance),
    )
