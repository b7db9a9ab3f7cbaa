"""Experiment configuration: one YAML document fully determines a run.

Validation reports the offending field by dotted path so CLI errors are
actionable (e.g. "state.visibility: must lie in [0, 1]").
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .design import scanning_schedule
from .errors import ConfigError
from .fileio import load_bitmap_raster
from .geometry import (
    AmplitudeEnvelope,
    Grid,
    bitmap_phase,
    helical_phase,
    letter_n_raster,
    sector_phase,
)
from .measurement import DetectorConfig
from .states import BiphotonState, make_state

DEFAULT_SEED = 20260810


def _require(cond: bool, path: str, msg: str):
    if not cond:
        raise ConfigError(f"{path}: {msg}")


def _get(doc: dict, path: str, key: str, default=None, required: bool = False):
    if key not in doc:
        if required:
            raise ConfigError(f"{path}.{key}: missing required field")
        return default
    return doc[key]


def parse_envelope(doc: dict, path: str) -> AmplitudeEnvelope:
    _require(isinstance(doc, dict), path, "must be a mapping")
    kind = _get(doc, path, "kind", "gaussian")
    waist = float(_get(doc, path, "waist", 1.0))
    _require(waist > 0, f"{path}.waist", "must be > 0")
    if kind == "gaussian":
        return AmplitudeEnvelope(waist=waist, index=0)
    if kind in ("ring", "ring_gaussian"):
        index = int(_get(doc, path, "index", 1))
        _require(index >= 0, f"{path}.index", "must be >= 0")
        return AmplitudeEnvelope(waist=waist, index=index)
    raise ConfigError(f"{path}.kind: unknown envelope kind {kind!r}")


def parse_mask(doc: dict, path: str, base_dir=None):
    _require(isinstance(doc, dict), path, "must be a mapping")
    kind = _get(doc, path, "kind", required=True)
    if kind == "helical":
        charge = _get(doc, path, "charge", required=True)
        _require(float(charge) == int(charge), f"{path}.charge", "must be an integer")
        return helical_phase(int(charge))
    if kind == "sector":
        levels = _get(doc, path, "levels", required=True)
        _require(isinstance(levels, (list, tuple)) and levels, f"{path}.levels",
                 "must be a non-empty list of [lo, hi, phase]")
        try:
            return sector_phase([(float(a), float(b), float(c)) for a, b, c in levels])
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"{path}.levels: {exc}") from exc
    if kind == "bitmap":
        phase_hi = float(_get(doc, path, "phase_hi", math.pi / 2))
        phase_lo = float(_get(doc, path, "phase_lo", 0.0))
        half_width = float(_get(doc, path, "half_width", 1.2))
        raster_name = _get(doc, path, "raster", None)
        pgm = _get(doc, path, "path", None)
        if raster_name is not None:
            _require(raster_name == "letter-n", f"{path}.raster",
                     f"unknown builtin raster {raster_name!r} (available: letter-n)")
            raster = letter_n_raster()
        elif pgm is not None:
            full = pgm if base_dir is None else str(base_dir / pgm)
            raster = load_bitmap_raster(full)
        else:
            raise ConfigError(f"{path}: bitmap mask needs 'path' or 'raster'")
        return bitmap_phase(raster, phase_hi, phase_lo, half_width)
    raise ConfigError(f"{path}.kind: unknown mask kind {kind!r}")


def parse_sign(value, path: str) -> int:
    if value in (+1, -1):
        return int(value)
    if isinstance(value, str) and value in ("+", "-"):
        return +1 if value == "+" else -1
    raise ConfigError(f"{path}: must be +1, -1, '+' or '-', got {value!r}")


@dataclass
class Experiment:
    """A validated, fully resolved experiment ready to run."""

    kind: str
    label: str
    state: BiphotonState
    detector: DetectorConfig
    config: dict  # the normalized source document
    seed: int
    workers: int | None


def _parse_grid(doc: dict, path: str) -> Grid:
    _require(isinstance(doc, dict), path, "must be a mapping")
    n = int(_get(doc, path, "n", 256))
    extent = float(_get(doc, path, "extent", 4.0))
    _require(n >= 8, f"{path}.n", "must be >= 8")
    _require(extent > 0, f"{path}.extent", "must be > 0")
    return Grid(n_x=n, n_y=n, extent=extent)


def parse_state(doc: dict, path: str, grid: Grid, base_dir=None) -> BiphotonState:
    _require(isinstance(doc, dict), path, "must be a mapping")
    env_a = parse_envelope(_get(doc, path, "envelope_a", {"kind": "gaussian"}), f"{path}.envelope_a")
    env_b = parse_envelope(_get(doc, path, "envelope_b", {"kind": "gaussian"}), f"{path}.envelope_b")
    mask_a = parse_mask(_get(doc, path, "mask_a", required=True), f"{path}.mask_a", base_dir)
    mask_b = parse_mask(_get(doc, path, "mask_b", required=True), f"{path}.mask_b", base_dir)
    sign = parse_sign(_get(doc, path, "sign", +1), f"{path}.sign")
    visibility = float(_get(doc, path, "visibility", 1.0))
    _require(0.0 <= visibility <= 1.0, f"{path}.visibility", "must lie in [0, 1]")
    try:
        return make_state(env_a, env_b, mask_a, mask_b, sign, visibility,
                          grid_a=grid, grid_b=grid)
    except ConfigError as exc:
        raise ConfigError(f"{path}: {exc}") from exc


def load_experiment(doc: dict, base_dir=None, seed_override: int | None = None,
                    out_override=None) -> Experiment:
    """Validate a config document (or a manifest wrapping one)."""
    _require(isinstance(doc, dict), "config", "must be a mapping")
    if "config" in doc and "tool" in doc:  # a manifest: re-run its config
        doc = doc["config"]
    kind = _get(doc, "config", "kind", "scan")
    _require(kind in ("scan", "sweep", "patterned"), "kind",
             f"must be one of scan/sweep/patterned, got {kind!r}")
    label = str(_get(doc, "config", "label", kind))
    seed = int(_get(doc, "config", "seed", DEFAULT_SEED))
    if seed_override is not None:
        seed = int(seed_override)
    grid = _parse_grid(_get(doc, "config", "grid", {}), "grid")

    det_doc = _get(doc, "config", "detector", {})
    _require(isinstance(det_doc, dict), "detector", "must be a mapping")
    efficiency = float(_get(det_doc, "detector", "efficiency", 1.0))
    background = float(_get(det_doc, "detector", "background_rate", 0.0))
    _require(0.0 < efficiency <= 1.0, "detector.efficiency", "must lie in (0, 1]")
    _require(background >= 0.0, "detector.background_rate", "must be >= 0")
    detector = DetectorConfig(grid=grid, efficiency=efficiency,
                              background_rate=background, rng_seed=seed)

    workers = _get(doc, "config", "workers", None)
    if workers is not None and workers != "auto":
        workers = int(workers)
        _require(workers >= 1, "workers", "must be >= 1")
    else:
        workers = None

    state = None
    if kind in ("scan", "patterned"):
        state = parse_state(_get(doc, "config", "state", required=True), "state",
                            grid, base_dir)

    # normalize kind-specific sections so the manifest reproduces the run
    norm = dict(doc)
    norm["kind"] = kind
    norm["label"] = label
    norm["seed"] = seed
    if out_override is not None:
        norm["out"] = str(out_override)

    if kind == "scan":
        scan = _get(doc, "config", "scan", {})
        _require(isinstance(scan, dict), "scan", "must be a mapping")
        width = float(_get(scan, "scan", "mask_width", math.pi / 4))
        _require(0.0 < width <= 2 * math.pi, "scan.mask_width", "must lie in (0, 2pi]")
        angles = int(_get(scan, "scan", "angles", 24))
        _require(angles >= 4, "scan.angles", "must be >= 4")
        heralds = int(_get(scan, "scan", "heralds_per_angle", 20000))
        _require(heralds >= 1, "scan.heralds_per_angle", "must be >= 1")
        phi_bins = int(_get(scan, "scan", "phi_bins", 120))
        _require(phi_bins >= 16, "scan.phi_bins", "must be >= 16")
        singles = int(_get(doc, "config", "singles_events", 1_000_000))
        _require(singles >= 1, "singles_events", "must be >= 1")
        showcase = _get(scan, "scan", "showcase_angles", [0, 1, 2, 3])
        norm["scan"] = {
            "mask_width": width,
            "angles": angles,
            "heralds_per_angle": heralds,
            "phi_bins": phi_bins,
            "showcase_angles": [int(i) for i in showcase],
        }
        norm["singles_events"] = singles
    elif kind == "sweep":
        sweep = _get(doc, "config", "sweep", {})
        _require(isinstance(sweep, dict), "sweep", "must be a mapping")
        charges = _get(sweep, "sweep", "charges", [1, 2, 3])
        signs = [parse_sign(s, "sweep.signs") for s in _get(sweep, "sweep", "signs", [1, -1])]
        width = float(_get(sweep, "sweep", "mask_width", math.pi / 4))
        angles = int(_get(sweep, "sweep", "angles", 16))
        _require(angles >= 4, "sweep.angles", "must be >= 4")
        heralds = int(_get(sweep, "sweep", "heralds_per_angle", 50000))
        phi_bins = int(_get(sweep, "sweep", "phi_bins", 120))
        visibility = float(_get(sweep, "sweep", "visibility", 1.0))
        _require(0.0 <= visibility <= 1.0, "sweep.visibility", "must lie in [0, 1]")
        norm["sweep"] = {
            "charges": [int(c) for c in charges],
            "signs": signs,
            "mask_width": width,
            "angles": angles,
            "heralds_per_angle": heralds,
            "phi_bins": phi_bins,
            "visibility": visibility,
        }
    else:  # patterned
        pat = _get(doc, "config", "patterned", {})
        _require(isinstance(pat, dict), "patterned", "must be a mapping")
        width = float(_get(pat, "patterned", "mask_width", math.pi / 4))
        events = int(_get(pat, "patterned", "events_per_scan", 1_000_000))
        _require(events >= 1, "patterned.events_per_scan", "must be >= 1")
        singles = int(_get(doc, "config", "singles_events", 1_000_000))
        norm["patterned"] = {"mask_width": width, "events_per_scan": events}
        norm["singles_events"] = singles
        # the idler mask must be piecewise constant for a scanning schedule
        from .geometry import SectorPhase

        _require(isinstance(state.mask_b, SectorPhase), "state.mask_b",
                 "patterned runs need a sector idler mask (the scan selects its levels)")
        scanning_schedule(state.mask_b, width)  # validates early

    return Experiment(
        kind=kind,
        label=label,
        state=state,
        detector=detector,
        config=norm,
        seed=seed,
        workers=workers,
    )
