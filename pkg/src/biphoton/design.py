"""Compile target pair-correlation patterns into conjugate mask pairs and
idler scanning schedules.

A binary signal mask with levels {0, pi/2} gives, against a constant idler
phase Phi_B, correlation levels 1 + sign*V*cos(2 Phi_A - 2 Phi_B): the
pattern can be made fully destructive (0), uniform (1) or constructive (2)
by scanning Phi_B over {0, pi/4, pi/2}.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError
from .geometry import (
    BitmapPhase,
    SectorPhase,
    TWO_PI,
    bitmap_phase,
    conjugate,
    wrap_phase,
)


def design_binary_mask(target: np.ndarray, phase_hi: float = math.pi / 2,
                       phase_lo: float = 0.0, half_width: float = 1.2):
    """Binary mask pair from a [0, 1] raster: (mask, pointwise-negated mask).

    The companion mask is what the orthogonal polarization arm carries;
    emitting both keeps the pair exactly conjugate by construction.
    """
    mask = bitmap_phase(np.asarray(target, dtype=float), phase_hi, phase_lo, half_width)
    return mask, conjugate(mask)


def predict_levels(phase_a_values, phase_b: float, sign: int = +1,
                   visibility: float = 1.0) -> dict:
    """Map each signal phase level to its correlation value
    1 + sign * V * cos(2 Phi_A - 2 Phi_B)."""
    if sign not in (+1, -1):
        raise ConfigError(f"sign must be +1 or -1, got {sign!r}")
    return {
        float(pa): 1.0 + sign * visibility * math.cos(2.0 * pa - 2.0 * phase_b)
        for pa in phase_a_values
    }


@dataclass(frozen=True)
class ScanEntry:
    label: str
    phase_b: float
    mask_center: float  # idler sector-mask orientation selecting this phase
    sector_width: float
    mixing_fraction: float  # fraction of the heralding window inside the sector
    narrow_sector: bool  # True when the sector is narrower than the mask
    levels: dict = field(default_factory=dict)


@dataclass(frozen=True)
class ScanSchedule:
    entries: tuple
    mask_width: float

    def __iter__(self):
        return iter(self.entries)

    def __len__(self):
        return len(self.entries)


def _window_overlap(center: float, width: float, lo: float, hi: float) -> float:
    """Length of [center - width/2, center + width/2] inside [lo, hi) on the circle."""
    start = (center - width / 2.0) % TWO_PI
    # split the window at the 0/2pi seam into plain intervals
    if start + width <= TWO_PI:
        pieces = [(start, start + width)]
    else:
        pieces = [(start, TWO_PI), (0.0, start + width - TWO_PI)]
    return sum(max(0.0, min(e, hi) - max(s, lo)) for s, e in pieces)


def scanning_schedule(levels_b: SectorPhase, mask_width: float,
                      phase_a_values=(0.0, math.pi / 2), sign: int = +1,
                      visibility: float = 1.0) -> ScanSchedule:
    """One entry per distinct idler phase level, heralded at the sector midpoint.

    Entries carry the predicted correlation level per signal phase value and,
    when the heralding window straddles sector edges, the mixing fraction of
    the window that actually lies inside the selecting sector.
    """
    if not 0.0 < mask_width <= TWO_PI:
        raise ConfigError(f"mask width must lie in (0, 2pi], got {mask_width}")
    by_phase: dict = {}
    for lo, hi, val in levels_b.sector_intervals():
        key = wrap_phase(val)
        # keep the widest sector carrying each level
        if key not in by_phase or (hi - lo) > (by_phase[key][1] - by_phase[key][0]):
            by_phase[key] = (lo, hi)
    entries = []
    for val in sorted(by_phase):
        lo, hi = by_phase[val]
        center = 0.5 * (lo + hi)
        width = hi - lo
        frac = _window_overlap(center, mask_width, lo, hi) / mask_width
        entries.append(
            ScanEntry(
                label=f"phase_{val:+.6f}",
                phase_b=float(val),
                mask_center=float(center),
                sector_width=float(width),
                mixing_fraction=float(frac),
                narrow_sector=bool(width < mask_width),
                levels=predict_levels(phase_a_values, val, sign, visibility),
            )
        )
    return ScanSchedule(entries=tuple(entries), mask_width=float(mask_width))
