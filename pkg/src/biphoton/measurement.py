"""Heralded coincidence imaging from pair states.

Event generation is split into fixed-size blocks; block i draws from
SeedSequence(seed, spawn_key=(stream, i)), so the accumulated image is a
block-wise sum that does not depend on how blocks are distributed over
worker threads. Identical (seed, config) reruns are bit-identical.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .errors import ConfigError, DegenerateConfigError
from .geometry import Grid, TWO_PI, wrap_phase
from .states import BiphotonState

CHUNK_EVENTS = 1 << 19

# random-stream tags; runs of different kinds never share substreams
STREAM_HERALDED = 0
STREAM_BACKGROUND = 1
STREAM_SINGLES = 2
STREAM_PAIRS = 3

_TABLE_CACHE: dict = {}


def get_tables(state: BiphotonState) -> kernels.SamplerTables:
    tab = _TABLE_CACHE.get(state)
    if tab is None:
        tab = kernels.sampler_tables(state)
        if len(_TABLE_CACHE) > 16:
            _TABLE_CACHE.clear()
        _TABLE_CACHE[state] = tab
    return tab


@dataclass(frozen=True)
class SectorMask:
    """Angular-passband heralding filter on the idler arm.

    Passes (r', phi') iff |wrap(phi' - center_angle)| <= width / 2 and
    r_min <= r' <= r_max.
    """

    center_angle: float
    width: float
    r_min: float = 0.0
    r_max: float = math.inf

    def __post_init__(self):
        if not 0.0 < self.width <= TWO_PI:
            raise ConfigError(f"sector mask width must lie in (0, 2pi], got {self.width}")
        if not 0.0 <= self.r_min < self.r_max:
            raise ConfigError(
                f"sector mask radial passband invalid: [{self.r_min}, {self.r_max}]"
            )

    def passes(self, r, phi):
        d = np.abs(wrap_phase(np.asarray(phi, dtype=float) - self.center_angle))
        return (d <= self.width / 2.0) & (r >= self.r_min) & (r <= self.r_max)

    @property
    def herald_tuple(self):
        return (float(self.center_angle), float(self.width) / 2.0,
                float(self.r_min), float(self.r_max))

    def rotated(self, angle: float) -> "SectorMask":
        return SectorMask(self.center_angle + angle, self.width, self.r_min, self.r_max)


@dataclass(frozen=True)
class DetectorConfig:
    """Camera grid plus the detection-chain parameters."""

    grid: Grid = Grid()
    efficiency: float = 1.0
    background_rate: float = 0.0
    rng_seed: int = 0

    def __post_init__(self):
        if not 0.0 < self.efficiency <= 1.0:
            raise ConfigError(f"efficiency must lie in (0, 1], got {self.efficiency}")
        if self.background_rate < 0.0:
            raise ConfigError(f"background_rate must be >= 0, got {self.background_rate}")


@dataclass
class CoincidenceImage:
    """Accumulated camera counts for one run."""

    grid: Grid
    counts: np.ndarray  # int64, shape (n_y, n_x), row 0 at the bottom
    n_events: int
    n_heralds: int
    n_recorded: int
    n_background: int = 0
    mask: SectorMask | None = None
    label: str = ""
    seed: int = 0

    def merged_with(self, other: "CoincidenceImage") -> "CoincidenceImage":
        if other.grid != self.grid:
            raise ValueError("cannot merge images on different grids")
        return CoincidenceImage(
            grid=self.grid,
            counts=self.counts + other.counts,
            n_events=self.n_events + other.n_events,
            n_heralds=self.n_heralds + other.n_heralds,
            n_recorded=self.n_recorded + other.n_recorded,
            n_background=self.n_background + other.n_background,
            mask=self.mask,
            label=self.label,
            seed=self.seed,
        )


def merge_images(images) -> CoincidenceImage:
    images = list(images)
    out = images[0]
    for img in images[1:]:
        out = out.merged_with(img)
    return out


# ---------------------------------------------------------------------------
# substreams and worker plumbing
# ---------------------------------------------------------------------------


def substream(seed: int, stream: int, index: int) -> np.random.Generator:
    ss = np.random.SeedSequence(entropy=int(seed), spawn_key=(int(stream), int(index)))
    return np.random.Generator(np.random.PCG64(ss))


def _chunk_quotas(n_events: int):
    full, rest = divmod(int(n_events), CHUNK_EVENTS)
    quotas = [CHUNK_EVENTS] * full
    if rest:
        quotas.append(rest)
    return quotas


def n_workers(workers: int | None = None) -> int:
    if workers is not None:
        return max(1, int(workers))
    env = os.environ.get("BIPHOTON_WORKERS", "")
    if env:
        return max(1, int(env))
    return max(1, min(os.cpu_count() or 1, 4))


def _run_chunks(tasks, workers: int):
    """Run chunk tasks (callables) and return results in task order."""
    if workers <= 1 or len(tasks) <= 1:
        return [t() for t in tasks]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        futures = [pool.submit(t) for t in tasks]
        return [f.result() for f in futures]


# ---------------------------------------------------------------------------
# quadrature helpers
# ---------------------------------------------------------------------------


def herald_fraction(state: BiphotonState, mask: SectorMask) -> float:
    """Probability that a pair's idler passes the mask (grid quadrature)."""
    marg = state.marginal_density("B")
    r, phi = state.grid_b.polar()
    sel = mask.passes(r, phi)
    return float(marg.values[sel].sum() * state.grid_b.pixel_area)


def events_for_heralds(state: BiphotonState, mask: SectorMask, n_heralds: int) -> int:
    """Pair budget whose expected herald yield is n_heralds."""
    q = herald_fraction(state, mask)
    if q <= 0.0:
        raise DegenerateConfigError("heralding mask passes zero probability mass")
    return int(math.ceil(n_heralds / q))


def mask_average_contrast(m_b: int, width: float) -> float:
    """Fringe-contrast factor from integrating the idler over a finite sector.

    Window average of cos(2 m_b phi') over a sector of width ``width``:
    sin(m_b * width) / (m_b * width); 1 for m_b = 0.
    """
    if not 0.0 < width <= TWO_PI:
        raise ConfigError(f"sector width must lie in (0, 2pi], got {width}")
    if m_b == 0:
        return 1.0
    x = m_b * width
    return math.sin(x) / x


# ---------------------------------------------------------------------------
# runs
# ---------------------------------------------------------------------------


def _add_background(counts: np.ndarray, rate: float, seed: int) -> int:
    if rate <= 0.0:
        return 0
    rng = substream(seed, STREAM_BACKGROUND, 0)
    n_bg = int(rng.poisson(rate))
    if n_bg:
        ny, nx = counts.shape
        u = rng.random((2, n_bg))
        ix = np.floor(u[0] * nx).astype(np.int64)
        iy = np.floor(u[1] * ny).astype(np.int64)
        np.add.at(counts, (iy, ix), 1)
    return n_bg


def run_heralded_imaging(
    state: BiphotonState,
    mask: SectorMask,
    n_events: int,
    det: DetectorConfig,
    workers: int | None = None,
    label: str = "",
) -> CoincidenceImage:
    """Sample n_events pairs; record mask-passing idlers' signal partners."""
    if n_events < 1:
        raise ConfigError(f"n_events must be >= 1, got {n_events}")
    r, phi = state.grid_b.polar()
    if not mask.passes(r, phi).any():
        raise DegenerateConfigError("heralding mask passes zero grid area")
    tab = get_tables(state)
    grid = det.grid
    herald = mask.herald_tuple

    def make_task(idx, quota):
        def task():
            counts = np.zeros((grid.n_y, grid.n_x), dtype=np.int64)
            rng = substream(det.rng_seed, STREAM_HERALDED, idx)
            n_her, n_rec = kernels.heralded_image(
                tab, quota, herald, grid.extent, det.efficiency, rng, counts
            )
            return counts, n_her, n_rec

        return task

    tasks = [make_task(i, q) for i, q in enumerate(_chunk_quotas(n_events))]
    results = _run_chunks(tasks, n_workers(workers))
    counts = np.zeros((grid.n_y, grid.n_x), dtype=np.int64)
    n_heralds = n_recorded = 0
    for c, h, rec in results:
        counts += c
        n_heralds += h
        n_recorded += rec
    n_bg = _add_background(counts, det.background_rate, det.rng_seed)
    return CoincidenceImage(
        grid=grid,
        counts=counts,
        n_events=int(n_events),
        n_heralds=n_heralds,
        n_recorded=n_recorded,
        n_background=n_bg,
        mask=mask,
        label=label,
        seed=det.rng_seed,
    )


def run_singles_imaging(
    state: BiphotonState,
    n_events: int,
    det: DetectorConfig,
    workers: int | None = None,
    label: str = "",
) -> CoincidenceImage:
    """Record signal photons of n_events pairs with no heralding condition."""
    if n_events < 1:
        raise ConfigError(f"n_events must be >= 1, got {n_events}")
    tab = get_tables(state)
    grid = det.grid

    def make_task(idx, quota):
        def task():
            counts = np.zeros((grid.n_y, grid.n_x), dtype=np.int64)
            rng = substream(det.rng_seed, STREAM_SINGLES, idx)
            n_rec = kernels.singles_image(
                tab, quota, grid.extent, det.efficiency, rng, counts
            )
            return counts, n_rec

        return task

    tasks = [make_task(i, q) for i, q in enumerate(_chunk_quotas(n_events))]
    results = _run_chunks(tasks, n_workers(workers))
    counts = np.zeros((grid.n_y, grid.n_x), dtype=np.int64)
    n_recorded = 0
    for c, rec in results:
        counts += c
        n_recorded += rec
    n_bg = _add_background(counts, det.background_rate, det.rng_seed)
    return CoincidenceImage(
        grid=grid,
        counts=counts,
        n_events=int(n_events),
        n_heralds=int(n_events),
        n_recorded=n_recorded,
        n_background=n_bg,
        mask=None,
        label=label,
        seed=det.rng_seed,
    )


def sample_pairs(
    state: BiphotonState,
    n: int,
    seed: int = 0,
    workers: int | None = None,
):
    """n joint samples as polar arrays (r, phi, r', phi')."""
    if n < 1:
        raise ConfigError(f"n must be >= 1, got {n}")
    tab = get_tables(state)

    def make_task(idx, quota):
        def task():
            rng = substream(seed, STREAM_PAIRS, idx)
            return kernels.sample_pairs(tab, quota, rng)

        return task

    tasks = [make_task(i, q) for i, q in enumerate(_chunk_quotas(n))]
    results = _run_chunks(tasks, n_workers(workers))
    return tuple(np.concatenate([res[i] for res in results]) for i in range(4))


def sample_pair(state: BiphotonState, rng: np.random.Generator):
    """One joint sample drawn from a caller-provided generator.

    Returns Cartesian points ((x, y), (x', y')).
    """
    tab = get_tables(state)
    r, phi, rp, phip = kernels.sample_pairs(tab, 1, rng)
    return (
        (float(r[0] * np.cos(phi[0])), float(r[0] * np.sin(phi[0]))),
        (float(rp[0] * np.cos(phip[0])), float(rp[0] * np.sin(phip[0]))),
    )
