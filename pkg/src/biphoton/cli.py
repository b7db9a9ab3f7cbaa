"""Command-line entry point.

Subcommands: run (execute an experiment config or preset), verify (run
the acceptance suite), design-mask (compile a bitmap into a conjugate
mask pair plus predicted levels), analyze (re-analysis of existing
images or maps).
"""

from __future__ import annotations

import argparse
import math
import sys
from pathlib import Path

import numpy as np

from . import fileio
from .analysis import (
    Annulus,
    AzimuthalProfile,
    CoherenceMap,
    azimuthal_profile,
    extract_g2,
    fringe_count,
    fringe_slope_sign,
    map_fringe_count,
)
from .config import DEFAULT_SEED, load_experiment
from .design import design_binary_mask, predict_levels
from .errors import ConfigError
from .geometry import Grid, letter_n_raster
from .kernels import BACKEND
from .measurement import CoincidenceImage
from .presets import PRESETS, preset_config


def _add_run(sub):
    p = sub.add_parser("run", help="run an experiment config or preset")
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--config", type=Path, help="YAML config (or a manifest)")
    src.add_argument("--preset", choices=sorted(PRESETS),
                     help="built-in experiment preset")
    p.add_argument("--seed", type=int, default=None, help="override the config seed")
    p.add_argument("--out", type=Path, default=None, help="output directory")
    p.add_argument("--workers", type=int, default=None)


def _add_verify(sub):
    p = sub.add_parser("verify", help="run the acceptance suite")
    p.add_argument("--config", type=Path, default=None,
                   help="optional config providing seed/workers")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--workers", type=int, default=None)
    p.add_argument("--quick", action="store_true",
                   help="reduced budgets (smoke run, not the release gate)")
    p.add_argument("--criteria", type=str, default=None,
                   help="comma-separated criterion ids, e.g. 1,7,8")


def _add_design(sub):
    p = sub.add_parser("design-mask", help="compile a bitmap into a mask pair")
    p.add_argument("--bitmap", required=True,
                   help="PGM path, or 'letter-n' for the builtin raster")
    p.add_argument("--out", type=Path, required=True)
    p.add_argument("--phase-hi", type=float, default=math.pi / 2)
    p.add_argument("--phase-lo", type=float, default=0.0)
    p.add_argument("--half-width", type=float, default=1.2)


def _add_analyze(sub):
    p = sub.add_parser("analyze", help="re-analyze existing images or maps")
    p.add_argument("--image", type=Path, help="heralded image (PGM or CSV)")
    p.add_argument("--singles", type=Path, help="singles image (PGM or CSV)")
    p.add_argument("--map", type=Path, dest="map_csv",
                   help="coherence-map CSV to re-analyze instead of images")
    p.add_argument("--annulus", type=str, default=None, help="r_in,r_out")
    p.add_argument("--bins", type=int, default=360)
    p.add_argument("--extent", type=float, default=4.0,
                   help="grid half-width for PGM inputs")
    p.add_argument("--out", type=Path, default=Path("."))


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="biphoton",
        description="Spatial pair-correlation simulator for patterned-phase "
                    "entangled photon pairs",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    _add_run(sub)
    _add_verify(sub)
    _add_design(sub)
    _add_analyze(sub)
    args = parser.parse_args(argv)
    try:
        if args.command == "run":
            return _cmd_run(args)
        if args.command == "verify":
            return _cmd_verify(args)
        if args.command == "design-mask":
            return _cmd_design(args)
        return _cmd_analyze(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


def _cmd_run(args) -> int:
    from .runner import run_experiment

    if args.preset:
        doc = preset_config(args.preset)
        base_dir = Path.cwd()
        default_out = Path(f"results-{args.preset}")
    else:
        doc = fileio.read_yaml(args.config)
        base_dir = args.config.parent
        default_out = args.config.with_suffix("") .parent / "results"
    out = args.out
    if out is None:
        out = Path(doc.get("out", default_out))
    exp = load_experiment(doc, base_dir=base_dir, seed_override=args.seed,
                          out_override=out)
    if args.workers is not None:
        exp.workers = args.workers
    metrics = run_experiment(exp, out)
    print(f"backend: {BACKEND}")
    for key, val in metrics.items():
        print(f"{key} = {val}")
    print(f"artifacts written to {out}")
    return 0


def _cmd_verify(args) -> int:
    from .acceptance import run_criteria

    seed = DEFAULT_SEED
    workers = args.workers
    if args.config is not None:
        doc = fileio.read_yaml(args.config)
        if "config" in doc and "tool" in doc:
            doc = doc["config"]
        seed = int(doc.get("seed", seed))
        if workers is None and doc.get("workers") not in (None, "auto"):
            workers = int(doc["workers"])
    if args.seed is not None:
        seed = args.seed
    only = None
    if args.criteria:
        only = {int(c) for c in args.criteria.split(",")}
    print(f"backend: {BACKEND}; seed: {seed}; mode: {'quick' if args.quick else 'full'}")
    results = run_criteria(seed=seed, workers=workers, quick=args.quick, only=only)
    for res in results:
        print(res.line())
    n_pass = sum(r.passed for r in results)
    print(f"{n_pass}/{len(results)} criteria passed")
    return 0 if n_pass == len(results) else 1


def _cmd_design(args) -> int:
    if args.bitmap == "letter-n":
        raster = letter_n_raster()
    else:
        raster = fileio.load_bitmap_raster(args.bitmap)
    mask, companion = design_binary_mask(raster, args.phase_hi, args.phase_lo,
                                         args.half_width)
    out = args.out
    out.mkdir(parents=True, exist_ok=True)
    meta_a = fileio.write_phase_pgm(out / "mask_a.pgm", mask._phases)
    meta_c = fileio.write_phase_pgm(out / "mask_a_conjugate.pgm", companion._phases)
    scan_phases = [0.0, math.pi / 4, math.pi / 2]
    fileio.write_yaml(
        out / "design.yaml",
        {
            "phase_hi": float(mask.phase_hi),
            "phase_lo": float(mask.phase_lo),
            "half_width": float(mask.half_width),
            "raster_shape": list(mask.raster.shape),
            "mask_a": meta_a,
            "mask_a_conjugate": meta_c,
            "predicted_levels": {
                f"{pb:.6f}": {
                    f"{pa:.6f}": lvl
                    for pa, lvl in predict_levels(
                        [mask.phase_lo, mask.phase_hi], pb
                    ).items()
                }
                for pb in scan_phases
            },
        },
    )
    print(f"mask pair and design notes written to {out}")
    return 0


def _load_counts(path: Path, extent: float):
    if path.suffix.lower() == ".csv":
        counts, grid = fileio.read_image_csv(path)
        return counts, grid
    counts, _maxval = fileio.read_pgm(path)
    ny, nx = counts.shape
    return counts, Grid(n_x=nx, n_y=ny, extent=extent)


def _cmd_analyze(args) -> int:
    out = args.out
    out.mkdir(parents=True, exist_ok=True)
    if args.map_csv is not None:
        phis, angles, values = fileio.read_map_csv(args.map_csv)
        cmap = CoherenceMap(
            phi_centers=phis,
            phi_p_angles=angles,
            values=values,
            kind="g2",
            counts=np.zeros_like(values),
            valid=np.ones(angles.size, dtype=bool),
        )
        metrics = {
            "fringe_count": map_fringe_count(cmap),
            "slope_sign": fringe_slope_sign(cmap),
        }
        fileio.write_metrics(out / "map_metrics.txt", metrics)
        for key, val in metrics.items():
            print(f"{key} = {val}")
        return 0

    if args.image is None or args.singles is None:
        raise ConfigError("analyze: needs --image and --singles (or --map)")
    counts, grid = _load_counts(args.image, args.extent)
    s_counts, s_grid = _load_counts(args.singles, args.extent)
    if grid != s_grid:
        raise ConfigError("analyze: image and singles grids differ")
    if args.annulus:
        try:
            r_in, r_out = (float(v) for v in args.annulus.split(","))
        except ValueError as exc:
            raise ConfigError(f"--annulus: expected 'r_in,r_out' ({exc})") from exc
        annulus = Annulus(r_in, r_out)
    else:
        # centered on the brightest singles radius
        r, _ = s_grid.polar()
        peak_r = float(r.ravel()[np.argmax(s_counts.ravel())])
        peak_r = max(peak_r, 4 * s_grid.pitch_x)
        annulus = Annulus(peak_r / 2.0, min(2.0 * peak_r, s_grid.extent))

    img = CoincidenceImage(grid=grid, counts=counts, n_events=int(counts.sum()),
                           n_heralds=int(counts.sum()), n_recorded=int(counts.sum()))
    simg = CoincidenceImage(grid=s_grid, counts=s_counts, n_events=int(s_counts.sum()),
                            n_heralds=int(s_counts.sum()), n_recorded=int(s_counts.sum()))
    prof_ab = azimuthal_profile(img, annulus, args.bins)
    prof_a = azimuthal_profile(simg, annulus, args.bins)
    g2 = extract_g2(prof_ab, prof_a)
    fileio.write_profile_csv(out / "profile_heralded.csv", prof_ab.bin_centers(),
                             prof_ab.values, value_name="counts")
    fileio.write_profile_csv(out / "profile_singles.csv", prof_a.bin_centers(),
                             prof_a.values, value_name="counts")
    fileio.write_profile_csv(out / "g2_profile.csv", prof_ab.bin_centers(), g2,
                             value_name="g2")
    metrics = {
        "annulus_r_in": annulus.r_in,
        "annulus_r_out": annulus.r_out,
        "bins": args.bins,
        "fringe_count": fringe_count(g2),
    }
    fileio.write_metrics(out / "analyze_metrics.txt", metrics)
    for key, val in metrics.items():
        print(f"{key} = {val}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
