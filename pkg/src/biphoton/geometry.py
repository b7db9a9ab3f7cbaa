"""Transverse-plane geometry: grids, phase masks and amplitude envelopes.

All lengths are dimensionless, with the beam waist w = 1 as the default
unit; only ratios of lengths enter the coherence function. Phases are
stored and compared modulo 2*pi with canonical range (-pi, pi].
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError

TWO_PI = 2.0 * math.pi


def wrap_phase(p):
    """Reduce a phase (array or scalar) to the canonical range (-pi, pi]."""
    w = np.mod(p, TWO_PI)  # [0, 2pi)
    w = np.where(w > math.pi, w - TWO_PI, w)
    return float(w) if w.ndim == 0 else w


def wrap_angle_0_2pi(p):
    """Reduce an angle to [0, 2pi)."""
    return np.mod(p, TWO_PI)


@dataclass(frozen=True)
class Grid:
    """Uniform square-pixel grid over [-extent, extent]^2 around ``center``.

    Pixel centers sit at center + (i + 0.5) * pitch - extent; the y index
    increases with y (row 0 is the bottom row; image writers flip).
    """

    n_x: int = 256
    n_y: int = 256
    extent: float = 4.0
    center: tuple[float, float] = (0.0, 0.0)

    def __post_init__(self):
        if self.n_x < 8 or self.n_y < 8:
            raise ConfigError(f"grid: pixel counts must be >= 8, got {self.n_x}x{self.n_y}")
        if not self.extent > 0:
            raise ConfigError(f"grid: extent must be > 0, got {self.extent}")

    @property
    def pitch_x(self) -> float:
        return 2.0 * self.extent / self.n_x

    @property
    def pitch_y(self) -> float:
        return 2.0 * self.extent / self.n_y

    @property
    def pixel_area(self) -> float:
        return self.pitch_x * self.pitch_y

    def x_centers(self) -> np.ndarray:
        return self.center[0] - self.extent + (np.arange(self.n_x) + 0.5) * self.pitch_x

    def y_centers(self) -> np.ndarray:
        return self.center[1] - self.extent + (np.arange(self.n_y) + 0.5) * self.pitch_y

    def meshgrid(self) -> tuple[np.ndarray, np.ndarray]:
        """(X, Y) pixel-center coordinates, shape (n_y, n_x)."""
        return np.meshgrid(self.x_centers(), self.y_centers())

    def polar(self) -> tuple[np.ndarray, np.ndarray]:
        """(R, PHI) of pixel centers relative to ``center``; PHI in [0, 2pi)."""
        xx, yy = self.meshgrid()
        xx = xx - self.center[0]
        yy = yy - self.center[1]
        r = np.hypot(xx, yy)
        phi = np.arctan2(yy, xx)
        phi = np.where(phi < 0.0, phi + TWO_PI, phi)
        return r, phi


# ---------------------------------------------------------------------------
# Phase masks
# ---------------------------------------------------------------------------

# kind codes shared with the sampling kernels
KIND_HELICAL = 0
KIND_SECTOR = 1
KIND_BITMAP = 2


class PhaseMask:
    """Scalar phase field over the transverse plane.

    Subclasses implement ``phase(x, y)`` (vectorized, canonical range) and
    ``conjugate()`` (pointwise negation).
    """

    kind_code: int

    def phase(self, x, y):
        raise NotImplementedError

    def phase_polar(self, r, phi):
        """Phase at polar coordinates; default converts to Cartesian."""
        return self.phase(r * np.cos(phi), r * np.sin(phi))

    def conjugate(self) -> "PhaseMask":
        raise NotImplementedError


@dataclass(frozen=True)
class HelicalPhase(PhaseMask):
    """Azimuthal phase ramp m * phi (topological charge m, any integer)."""

    m: int
    kind_code: int = field(default=KIND_HELICAL, init=False, repr=False)

    def phase(self, x, y):
        phi = np.arctan2(y, x)
        phi = np.where(phi < 0.0, phi + TWO_PI, phi)
        return wrap_phase(self.m * phi)

    def phase_polar(self, r, phi):
        return wrap_phase(self.m * np.asarray(phi, dtype=float))

    def conjugate(self) -> "HelicalPhase":
        return HelicalPhase(-self.m)


@dataclass(frozen=True)
class SectorPhase(PhaseMask):
    """Piecewise-constant phase over angular sectors partitioning [0, 2pi).

    ``edges`` has length k+1 with edges[0] = 0 and edges[k] = 2pi; sector i
    covers [edges[i], edges[i+1]) and carries ``values[i]``. Boundary angles
    belong to the sector whose closed lower edge they touch.
    """

    edges: tuple
    values: tuple
    kind_code: int = field(default=KIND_SECTOR, init=False, repr=False)

    @staticmethod
    def from_levels(levels) -> "SectorPhase":
        """Build from [(lo, hi, phase), ...] intervals that tile [0, 2pi)."""
        if not levels:
            raise ConfigError("sector mask: empty level list")
        ivs = sorted((float(lo), float(hi), float(val)) for lo, hi, val in levels)
        tol = 1e-12
        if abs(ivs[0][0]) > tol or abs(ivs[-1][1] - TWO_PI) > tol:
            raise ConfigError("sector mask: intervals must cover [0, 2pi)")
        edges = [0.0]
        values = []
        for i, (lo, hi, val) in enumerate(ivs):
            if hi <= lo:
                raise ConfigError(f"sector mask: empty interval [{lo}, {hi})")
            if i > 0 and abs(lo - ivs[i - 1][1]) > tol:
                kind = "overlap" if lo < ivs[i - 1][1] else "gap"
                raise ConfigError(f"sector mask: {kind} at angle {lo}")
            edges.append(hi)
            values.append(wrap_phase(val))
        edges[-1] = TWO_PI
        return SectorPhase(edges=tuple(edges), values=tuple(values))

    def phase(self, x, y):
        phi = np.arctan2(y, x)
        phi = np.where(phi < 0.0, phi + TWO_PI, phi)
        return self.phase_polar(None, phi)

    def phase_polar(self, r, phi):
        phi = wrap_angle_0_2pi(np.asarray(phi, dtype=float))
        idx = np.searchsorted(np.asarray(self.edges), phi, side="right") - 1
        idx = np.clip(idx, 0, len(self.values) - 1)
        out = np.asarray(self.values, dtype=float)[idx]
        return out if out.ndim else float(out)

    def conjugate(self) -> "SectorPhase":
        return SectorPhase(self.edges, tuple(wrap_phase(-v) for v in self.values))

    def sector_intervals(self):
        """[(lo, hi, value), ...] in angle order."""
        return [
            (self.edges[i], self.edges[i + 1], self.values[i])
            for i in range(len(self.values))
        ]


@dataclass(frozen=True)
class BitmapPhase(PhaseMask):
    """Binary phase from a raster: value >= 0.5 maps to phase_hi, else phase_lo.

    The raster occupies a centered square footprint of half-width
    ``half_width``; row 0 is the top of the raster (image convention).
    Query points outside the footprint map to phase_lo.
    """

    raster: np.ndarray  # float in [0, 1], shape (n_rows, n_cols)
    phase_hi: float = math.pi / 2
    phase_lo: float = 0.0
    half_width: float = 1.2
    kind_code: int = field(default=KIND_BITMAP, init=False, repr=False)
    # phase raster with the threshold applied, kept alongside for fast lookup
    _phases: np.ndarray = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        r = np.asarray(self.raster, dtype=float)
        if r.ndim != 2 or r.size == 0:
            raise ConfigError("bitmap mask: raster must be a non-empty 2-D array")
        if np.nanmin(r) < 0.0 or np.nanmax(r) > 1.0:
            raise ConfigError("bitmap mask: raster values must lie in [0, 1]")
        object.__setattr__(self, "raster", r)
        hi = wrap_phase(float(self.phase_hi))
        lo = wrap_phase(float(self.phase_lo))
        object.__setattr__(self, "phase_hi", hi)
        object.__setattr__(self, "phase_lo", lo)
        object.__setattr__(self, "_phases", np.where(r >= 0.5, hi, lo))

    def phase(self, x, y):
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        n_rows, n_cols = self.raster.shape
        h = self.half_width
        col = np.floor((x + h) / (2.0 * h) * n_cols).astype(np.int64)
        row = np.floor((h - y) / (2.0 * h) * n_rows).astype(np.int64)
        inside = (col >= 0) & (col < n_cols) & (row >= 0) & (row < n_rows)
        out = np.full(np.broadcast(x, y).shape, self.phase_lo, dtype=float)
        out[inside] = self._phases[row[inside], col[inside]]
        return out if out.ndim else float(out)

    def conjugate(self) -> "BitmapPhase":
        # negate by swapping the two binary levels to their negatives
        return BitmapPhase(
            raster=self.raster,
            phase_hi=wrap_phase(-self.phase_hi),
            phase_lo=wrap_phase(-self.phase_lo),
            half_width=self.half_width,
        )

    def __eq__(self, other):
        return (
            isinstance(other, BitmapPhase)
            and np.array_equal(self.raster, other.raster)
            and self.phase_hi == other.phase_hi
            and self.phase_lo == other.phase_lo
            and self.half_width == other.half_width
        )

    def __hash__(self):
        return hash((self.raster.tobytes(), self.phase_hi, self.phase_lo, self.half_width))


def helical_phase(m: int) -> HelicalPhase:
    """Helical mask with integer topological charge m (m = 0 is flat)."""
    if m != int(m):
        raise ConfigError(f"helical mask: charge must be an integer, got {m}")
    return HelicalPhase(int(m))


def sector_phase(levels) -> SectorPhase:
    """Piecewise-constant mask from [(lo, hi, phase), ...] tiling [0, 2pi)."""
    return SectorPhase.from_levels(levels)


def bitmap_phase(raster, phase_hi, phase_lo, half_width=1.2) -> BitmapPhase:
    """Binary mask from a [0, 1] raster; >= 0.5 maps to phase_hi."""
    return BitmapPhase(np.asarray(raster, dtype=float), phase_hi, phase_lo, half_width)


def conjugate(mask: PhaseMask) -> PhaseMask:
    """Pointwise negation; conjugate(conjugate(m)) == m."""
    return mask.conjugate()


# ---------------------------------------------------------------------------
# Amplitude envelopes
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class AmplitudeEnvelope:
    """Radially symmetric amplitude magnitude |eta(r)|.

    index = 0 is a plain Gaussian; index = m > 0 is a ring (doughnut)
    profile |eta|^2 ~ (r/w)^(2m) exp(-2 r^2 / w^2) vanishing at r = 0.
    Normalized so the full-plane integral of |eta|^2 is 1.
    """

    waist: float = 1.0
    index: int = 0

    def __post_init__(self):
        if not self.waist > 0:
            raise ConfigError(f"envelope: waist must be > 0, got {self.waist}")
        if self.index != int(self.index) or self.index < 0:
            raise ConfigError(f"envelope: ring index must be a non-negative integer, got {self.index}")
        object.__setattr__(self, "index", int(self.index))

    @property
    def norm_sq(self) -> float:
        # integral of (r/w)^(2m) exp(-2 r^2/w^2) over the plane is
        # pi w^2 m! / 2^(m+1)
        m = self.index
        return 2.0 ** (m + 1) / (math.pi * self.waist**2 * math.factorial(m))

    def density(self, r):
        """Probability density |eta(r)|^2 (per unit area)."""
        r = np.asarray(r, dtype=float)
        m = self.index
        u = r / self.waist
        return self.norm_sq * u ** (2 * m) * np.exp(-2.0 * u**2)

    def radial_mass_density(self, r):
        """2 pi r |eta(r)|^2, the density of radius draws."""
        return TWO_PI * np.asarray(r, dtype=float) * self.density(r)

    @property
    def peak_radius(self) -> float:
        """Radius maximizing the radial mass density (analytic)."""
        # d/dr [r^(2m+1) exp(-2 r^2/w^2)] = 0  ->  r = w sqrt((2m+1)/4)
        return self.waist * math.sqrt((2 * self.index + 1) / 4.0)

    @property
    def density_peak_radius(self) -> float:
        """Radius maximizing |eta|^2 itself (0 for a plain Gaussian)."""
        return self.waist * math.sqrt(self.index / 2.0)


def gaussian_envelope(waist: float = 1.0) -> AmplitudeEnvelope:
    return AmplitudeEnvelope(waist=waist, index=0)


def ring_envelope(waist: float = 1.0, index: int = 1) -> AmplitudeEnvelope:
    return AmplitudeEnvelope(waist=waist, index=abs(int(index)))


def envelope_density(env: AmplitudeEnvelope, grid: Grid) -> np.ndarray:
    """Rasterized |eta|^2 on the grid, renormalized so sum * pixel_area = 1."""
    r, _ = grid.polar()
    vals = env.density(r)
    total = vals.sum() * grid.pixel_area
    if not total > 0:
        raise ConfigError("envelope density vanishes on the grid (extent too small?)")
    return vals / total


# ---------------------------------------------------------------------------
# Raster helpers
# ---------------------------------------------------------------------------


def letter_n_raster(n: int = 96, stroke: float = 0.18) -> np.ndarray:
    """A block-letter "N" on an n x n raster, values in {0, 1}.

    Drawn in [0, 1]^2 raster coordinates: two vertical strokes plus the
    diagonal. ``stroke`` is the stroke width as a fraction of the cell.
    """
    u = (np.arange(n) + 0.5) / n
    xx, yy = np.meshgrid(u, u)  # yy: row coordinate, 0 at top
    body = (xx > 0.12) & (xx < 0.88) & (yy > 0.08) & (yy < 0.92)
    left = xx < 0.12 + stroke
    right = xx > 0.88 - stroke
    # diagonal from top-left to bottom-right
    diag = np.abs(xx - (0.12 + (0.76 * yy))) < stroke * 0.75
    return (body & (left | right | diag)).astype(float)
