"""Acceptance suite: one callable check per release criterion.

Used by both the `verify` CLI subcommand and tests/test_acceptance.py.
Each criterion runs at its stated budget and tolerance and reports a
measured value; `quick=True` shrinks budgets for smoke runs (reported,
but not the release gate).
"""

from __future__ import annotations

import math
import shutil
import tempfile
import time
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import analysis
from .analysis import (
    Annulus,
    auto_annulus,
    azimuthal_profile,
    compare_to_analytic,
    derive_seed,
    field_profile,
    fringe_slope_sign,
    map_fringe_count,
    pattern_indicator_profile,
    pattern_regions,
    pearson_correlation,
    region_mean_g2,
    scan_g2_matrix,
    uniformity_chi2,
)
from .config import DEFAULT_SEED
from .design import scanning_schedule
from .errors import ConfigError
from .geometry import (
    Grid,
    PhaseMask,
    TWO_PI,
    conjugate,
    envelope_density,
    gaussian_envelope,
    helical_phase,
    letter_n_raster,
    bitmap_phase,
    sector_phase,
    wrap_phase,
)
from .measurement import (
    DetectorConfig,
    SectorMask,
    run_heralded_imaging,
    run_singles_imaging,
    sample_pairs,
)
from .presets import QUADRANT_SIGNAL_LEVELS, TERNARY_IDLER_LEVELS
from .states import make_state, oam_state


@dataclass
class CriterionResult:
    cid: int
    name: str
    passed: bool
    measured: str

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        return f"criterion {self.cid:02d} [{status}] {self.name}: {self.measured}"


class _OffsetMask(PhaseMask):
    """A mask plus a constant phase; analytic checks only (not samplable)."""

    kind_code = -1

    def __init__(self, base: PhaseMask, offset: float):
        self.base = base
        self.offset = float(offset)

    def phase(self, x, y):
        return wrap_phase(self.base.phase(x, y) + self.offset)

    def phase_polar(self, r, phi):
        return wrap_phase(self.base.phase_polar(r, phi) + self.offset)

    def conjugate(self):
        return _OffsetMask(self.base.conjugate(), -self.offset)

    def __eq__(self, other):
        return (
            isinstance(other, _OffsetMask)
            and self.base == other.base
            and self.offset == other.offset
        )

    def __hash__(self):
        return hash((self.base, self.offset))


def _det(seed: int, grid: Grid | None = None) -> DetectorConfig:
    return DetectorConfig(grid=grid or Grid(), rng_seed=seed)


# ---------------------------------------------------------------------------
# 1. narrow-mask reproduction of the ideal coherence map
# ---------------------------------------------------------------------------


def criterion_1(seed: int, workers=None, quick: bool = False) -> CriterionResult:
    k, heralds, singles = (8, 20_000, 500_000) if quick else (24, 100_000, 2_000_000)
    state = oam_state(2, 2, +1)
    t0 = time.perf_counter()
    res = scan_g2_matrix(
        state,
        mask_width=math.pi / 90,
        k_angles=k,
        heralds_per_angle=heralds,
        det=_det(derive_seed(seed, 1)),
        n_singles=singles,
        n_phi=120,
        workers=workers,
    )
    elapsed = time.perf_counter() - t0
    target = 1.0 + np.cos(
        4.0 * (res.g2.phi_centers[:, None] - res.g2.phi_p_angles[None, :])
    )
    sel = np.isfinite(res.g2.values) & res.g2.valid[None, :]
    rmse = float(np.sqrt(np.mean((res.g2.values[sel] - target[sel]) ** 2)))
    passed = rmse < 0.1 and elapsed < 60.0
    return CriterionResult(
        1,
        "narrow-mask g2 map matches 1+cos[4(phi-phi')]",
        passed,
        f"rmse={rmse:.4f} (<0.1), runtime={elapsed:.1f}s (<60s)",
    )


# ---------------------------------------------------------------------------
# 2. finite-mask contrast
# ---------------------------------------------------------------------------


def criterion_2(seed: int, workers=None, quick: bool = False) -> CriterionResult:
    k, heralds, singles = (8, 15_000, 400_000) if quick else (16, 40_000, 1_000_000)
    state = oam_state(2, 2, +1)
    res = scan_g2_matrix(
        state,
        mask_width=math.pi / 4,
        k_angles=k,
        heralds_per_angle=heralds,
        det=_det(derive_seed(seed, 2)),
        n_singles=singles,
        n_phi=120,
        workers=workers,
    )
    contrast = compare_to_analytic(res.g2, state, math.pi / 4).contrast
    target = 2.0 / math.pi
    passed = abs(contrast - target) <= 0.05
    return CriterionResult(
        2,
        "pi/4-mask fringe contrast equals 2/pi",
        passed,
        f"contrast={contrast:.4f}, target={target:.4f} (+-0.05)",
    )


# ---------------------------------------------------------------------------
# 3 + 4. fringe-count and slope-sign laws over the charge sweep
# ---------------------------------------------------------------------------


def _sweep_results(seed: int, workers, quick: bool):
    heralds = 15_000 if quick else 50_000
    singles = 100_000 if quick else 200_000
    rows = []
    for sign in (+1, -1):
        for m_a in (1, 2, 3):
            for m_b in (1, 2, 3):
                state = oam_state(m_a, m_b, sign)
                res = scan_g2_matrix(
                    state,
                    mask_width=math.pi / 4,
                    k_angles=16,
                    heralds_per_angle=heralds,
                    det=_det(derive_seed(seed, 34, sign + 2, m_a, m_b)),
                    n_singles=singles,
                    n_phi=120,
                    workers=workers,
                )
                rows.append(
                    (m_a, m_b, sign, map_fringe_count(res.g2), fringe_slope_sign(res.g2))
                )
    return rows


def criterion_3_and_4(seed: int, workers=None, quick: bool = False):
    rows = _sweep_results(seed, workers, quick)
    count_hits = sum(1 for m_a, _mb, _s, count, _sl in rows if count == 2 * m_a)
    slope_hits = sum(1 for _ma, _mb, sign, _c, slope in rows if slope == sign)
    c3 = CriterionResult(
        3,
        "fringe count is 2*m_a for all 18 charge/sign combinations",
        count_hits == len(rows),
        f"{count_hits}/{len(rows)} exact matches",
    )
    c4 = CriterionResult(
        4,
        "fringe slope sign follows the state sign for all 18 combinations",
        slope_hits == len(rows),
        f"{slope_hits}/{len(rows)} exact matches",
    )
    return c3, c4


# ---------------------------------------------------------------------------
# 5. patterned-phase correlation levels {2, 1, 0}
# ---------------------------------------------------------------------------


def _patterned_states(grid: Grid):
    env = gaussian_envelope(1.0)
    idler = sector_phase([tuple(iv) for iv in TERNARY_IDLER_LEVELS])
    sector_sig = sector_phase([tuple(iv) for iv in QUADRANT_SIGNAL_LEVELS])
    letter_sig = bitmap_phase(letter_n_raster(), math.pi / 2, 0.0, half_width=1.2)
    sector_state = make_state(env, env, sector_sig, idler, +1, 1.0, grid_a=grid, grid_b=grid)
    letter_state = make_state(env, env, letter_sig, idler, +1, 1.0, grid_a=grid, grid_b=grid)
    return {"sector": sector_state, "letter": letter_state}


def criterion_5(seed: int, workers=None, quick: bool = False) -> CriterionResult:
    events = 200_000 if quick else 1_000_000
    grid = Grid()
    width = math.pi / 4
    worst = 0.0
    checks = 0
    details = []
    for case_idx, (label, state) in enumerate(_patterned_states(grid).items()):
        schedule = scanning_schedule(
            state.mask_b, width, phase_a_values=analysis.signal_phase_levels(state)
        )
        det_seed = derive_seed(seed, 5, case_idx)
        singles = run_singles_imaging(
            state, events, _det(derive_seed(det_seed, 0)), workers=workers
        )
        pattern, background = pattern_regions(state, grid)
        levels = analysis.signal_phase_levels(state)
        hi = max(levels, key=abs)
        lo = min(levels, key=abs)
        for i, entry in enumerate(schedule):
            mask = SectorMask(entry.mask_center, width)
            img = run_heralded_imaging(
                state, mask, events, _det(derive_seed(det_seed, 1 + i)), workers=workers
            )
            for region, level in ((pattern, hi), (background, lo)):
                measured = region_mean_g2(img, singles, region, state, mask)
                expected = entry.levels[float(level)]
                err = abs(measured - expected)
                worst = max(worst, err)
                checks += 1
                if err > 0.1:
                    details.append(
                        f"{label}/{entry.label}: measured {measured:.3f} vs {expected:.3f}"
                    )
    passed = not details
    extra = "; ".join(details[:3]) if details else "all regions within tolerance"
    return CriterionResult(
        5,
        "patterned scans hit levels {2, 1, 0} within +-0.1",
        passed,
        f"{checks} region checks, worst |error|={worst:.4f}; {extra}",
    )


# ---------------------------------------------------------------------------
# 6. pattern invisibility in singles
# ---------------------------------------------------------------------------


def criterion_6(seed: int, workers=None, quick: bool = False) -> CriterionResult:
    n_singles = 200_000 if quick else 1_000_000
    grid = Grid()
    measured = []
    passed = True

    for i, (label, state) in enumerate(_patterned_states(grid).items()):
        singles = run_singles_imaging(
            state, n_singles, _det(derive_seed(seed, 6, i)), workers=workers
        )
        # the pattern indicator is radius-independent, so a wide annulus
        # (most of the envelope support) minimizes estimator noise
        annulus = Annulus(0.1, 2.0)
        n_bins = 3600
        prof = azimuthal_profile(singles, annulus, n_bins)
        expected = field_profile(
            state.marginal_density("A").values, grid, annulus, n_bins
        )
        indicator = pattern_indicator_profile(state, annulus, n_bins)
        ok = expected.values > 0
        rel = prof.values[ok] / expected.values[ok]
        corr = pearson_correlation(rel, indicator[ok])
        measured.append(f"{label} |corr|={abs(corr):.4f}")
        passed &= abs(corr) < 0.05

    helical = oam_state(2, 2, +1)
    singles = run_singles_imaging(
        helical, n_singles, _det(derive_seed(seed, 6, 99)), workers=workers
    )
    annulus = auto_annulus(helical.env_a, grid)
    prof = azimuthal_profile(singles, annulus, 360)
    weights = field_profile(
        helical.marginal_density("A").values, grid, annulus, 360
    ).values
    stat, dof, pval = uniformity_chi2(prof.values, weights)
    measured.append(f"helical chi2 p={pval:.4f}")
    passed &= pval > 0.01

    return CriterionResult(
        6,
        "singles show no pattern (|corr|<0.05; helical chi2 uniform at 1%)",
        passed,
        "; ".join(measured),
    )


# ---------------------------------------------------------------------------
# 7. sampler vs quadrature oracle (total-variation distance)
# ---------------------------------------------------------------------------


def _quadrature_joint_bins(state, n_sig: int, n_idler: int) -> np.ndarray:
    """Independent quadrature of the binned joint density (no sampling)."""
    grid_a, grid_b = state.grid_a, state.grid_b
    if grid_a.n_x % n_sig or grid_a.n_y % n_sig:
        raise ConfigError("signal grid size must be divisible by the bin count")
    pa = envelope_density(state.env_a, grid_a) * grid_a.pixel_area
    pb = envelope_density(state.env_b, grid_b) * grid_b.pixel_area
    xx, yy = grid_a.meshgrid()
    ph_a = 2.0 * state.mask_a.phase(xx, yy)
    xxb, yyb = grid_b.meshgrid()
    ph_b = 2.0 * state.mask_b.phase(xxb, yyb)
    _, phi_b = grid_b.polar()
    ib = np.clip((phi_b / TWO_PI * n_idler).astype(np.int64), 0, n_idler - 1).ravel()
    m_t = np.bincount(ib, weights=pb.ravel(), minlength=n_idler)
    m_c = np.bincount(ib, weights=(pb * np.cos(ph_b)).ravel(), minlength=n_idler)
    m_s = np.bincount(ib, weights=(pb * np.sin(ph_b)).ravel(), minlength=n_idler)

    f_y = grid_a.n_y // n_sig
    f_x = grid_a.n_x // n_sig

    def blocks(arr):
        return arr.reshape(n_sig, f_y, n_sig, f_x).sum(axis=(1, 3)).ravel()

    sp = blocks(pa)
    sc = blocks(pa * np.cos(ph_a))
    ss = blocks(pa * np.sin(ph_a))
    sv = state.sign * state.visibility
    joint = (
        sp[:, None] * m_t[None, :]
        + sv * (sc[:, None] * m_c[None, :] + ss[:, None] * m_s[None, :])
    )
    return joint / joint.sum()


def criterion_7(seed: int, workers=None, quick: bool = False) -> CriterionResult:
    n = 200_000 if quick else 1_000_000
    n_sig, n_idler = 64, 16
    state = oam_state(2, 2, +1)
    r, phi, _rp, phip = sample_pairs(state, n, seed=derive_seed(seed, 7), workers=workers)
    extent = state.grid_a.extent
    ix = np.clip(((r * np.cos(phi) + extent) / (2 * extent) * n_sig).astype(np.int64),
                 0, n_sig - 1)
    iy = np.clip(((r * np.sin(phi) + extent) / (2 * extent) * n_sig).astype(np.int64),
                 0, n_sig - 1)
    ib = np.clip((phip / TWO_PI * n_idler).astype(np.int64), 0, n_idler - 1)
    flat = (iy * n_sig + ix) * n_idler + ib
    hist = np.bincount(flat, minlength=n_sig * n_sig * n_idler).astype(float)
    hist /= hist.sum()
    oracle = _quadrature_joint_bins(state, n_sig, n_idler).reshape(n_sig * n_sig, n_idler)
    tv = 0.5 * float(np.abs(hist - oracle.ravel()).sum())
    passed = tv < 0.05
    return CriterionResult(
        7,
        "sampled joint histogram matches quadrature density (TV < 0.05)",
        passed,
        f"TV={tv:.4f} at n={n}",
    )


# ---------------------------------------------------------------------------
# 8. exact identities
# ---------------------------------------------------------------------------


def criterion_8(seed: int, workers=None, quick: bool = False) -> CriterionResult:
    del seed, workers, quick  # deterministic, no sampling
    tol = 1e-6
    grid = Grid(n_x=128, n_y=128, extent=4.0)
    worst = {}

    # global phase shift leaves the correlation untouched
    base_a = sector_phase([(0.0, math.pi, 0.0), (math.pi, TWO_PI, math.pi / 2)])
    base_b = helical_phase(2)
    env = gaussian_envelope()
    c = 0.7312
    s0 = make_state(env, env, base_a, base_b, +1, 1.0, grid_a=grid, grid_b=grid)
    s1 = make_state(env, env, _OffsetMask(base_a, c), _OffsetMask(base_b, c),
                    +1, 1.0, grid_a=grid, grid_b=grid)
    pts = np.linspace(0.0, TWO_PI, 37)
    pp, qq = np.meshgrid(pts, pts)
    d = np.abs(
        s0.analytic_g2_polar(1.0, pp, 1.0, qq) - s1.analytic_g2_polar(1.0, pp, 1.0, qq)
    )
    worst["global_phase"] = float(d.max())

    # sign flip: shift by pi/(2 m_a) along phi with the idler angle reflected
    for m_a in (1, 2, 3):
        plus = oam_state(m_a, 2, +1, grid=grid)
        minus = oam_state(m_a, 2, -1, grid=grid)
        d = np.abs(
            minus.analytic_g2_polar(1.0, pp, 1.0, qq)
            - plus.analytic_g2_polar(1.0, pp + math.pi / (2 * m_a), 1.0, -qq)
        )
        worst[f"sign_flip_m{m_a}"] = float(d.max())

    # exchange symmetry for the + state
    s23 = oam_state(2, 3, +1, grid=grid)
    s32 = oam_state(3, 2, +1, grid=grid)
    d = np.abs(
        s23.analytic_g2_polar(1.0, pp, 1.0, qq) - s32.analytic_g2_polar(1.0, qq, 1.0, pp)
    )
    worst["exchange"] = float(d.max())

    # conjugate masks negate pointwise (mod 2pi)
    xx, yy = grid.meshgrid()
    masks = [
        helical_phase(2),
        helical_phase(-3),
        base_a,
        bitmap_phase(letter_n_raster(48), math.pi / 2, 0.0),
    ]
    conj_worst = 0.0
    for mask in masks:
        # negation holds modulo 2pi: the wrapped sum must vanish
        total = wrap_phase(mask.phase(xx, yy) + conjugate(mask).phase(xx, yy))
        conj_worst = max(conj_worst, float(np.abs(total).max()))
    worst["conjugate"] = conj_worst

    # helical partner: marginal equals the bare envelope density
    state = oam_state(2, 2, +1, grid=grid)
    marg = state.marginal_density("A")
    dens = envelope_density(state.env_a, grid)
    worst["marginal"] = float(
        (np.abs(marg.values - dens) * grid.pixel_area).sum()
    )

    bad = {k: v for k, v in worst.items() if v > tol}
    passed = not bad
    summary = ", ".join(f"{k}={v:.2e}" for k, v in worst.items())
    return CriterionResult(
        8,
        "exact identities hold to 1e-6 on the grid",
        passed,
        summary,
    )


# ---------------------------------------------------------------------------
# 9. visibility linearity
# ---------------------------------------------------------------------------


def criterion_9(seed: int, workers=None, quick: bool = False) -> CriterionResult:
    k, heralds, singles = (8, 8_000, 300_000) if quick else (12, 20_000, 1_000_000)
    results = []
    passed = True
    for i, vis in enumerate((0.25, 0.5, 0.9)):
        state = oam_state(2, 2, +1, visibility=vis)
        res = scan_g2_matrix(
            state,
            mask_width=math.pi / 90,
            k_angles=k,
            heralds_per_angle=heralds,
            det=_det(derive_seed(seed, 9, i)),
            n_singles=singles,
            n_phi=120,
            workers=workers,
        )
        contrast = compare_to_analytic(res.g2, state, math.pi / 90).contrast
        results.append(f"V={vis}: {contrast:.4f}")
        passed &= abs(contrast - vis) <= 0.02
    return CriterionResult(
        9,
        "fitted narrow-mask contrast equals the visibility (+-0.02)",
        passed,
        "; ".join(results),
    )


# ---------------------------------------------------------------------------
# 10. bit-exact determinism of artifacts
# ---------------------------------------------------------------------------


def _criterion_10_config() -> dict:
    return {
        "kind": "scan",
        "label": "determinism-check",
        "state": {
            "envelope_a": {"kind": "ring", "waist": 1.0, "index": 2},
            "envelope_b": {"kind": "ring", "waist": 1.0, "index": 2},
            "mask_a": {"kind": "helical", "charge": 2},
            "mask_b": {"kind": "helical", "charge": 2},
            "sign": 1,
            "visibility": 1.0,
        },
        "grid": {"n": 128, "extent": 4.0},
        "detector": {"efficiency": 0.8, "background_rate": 25.0},
        "scan": {"mask_width": math.pi / 4, "angles": 4,
                 "heralds_per_angle": 3000, "phi_bins": 60,
                 "showcase_angles": [0, 1]},
        "singles_events": 50_000,
        "seed": 424242,
    }


def criterion_10(seed: int, workers=None, quick: bool = False) -> CriterionResult:
    del seed, quick
    from .config import load_experiment
    from .runner import run_experiment

    cfg = _criterion_10_config()
    tmp = Path(tempfile.mkdtemp(prefix="biphoton-det-"))
    try:
        out_a = tmp / "a"
        out_b = tmp / "b"
        # deliberately different worker counts: results must not depend on them
        run_experiment(load_experiment(cfg), out_a)
        exp_b = load_experiment(cfg)
        exp_b.workers = 1
        run_experiment(exp_b, out_b)
        mismatched = []
        names = sorted(
            p.name for p in out_a.iterdir() if p.suffix in (".pgm", ".csv")
        )
        for name in names:
            if (out_a / name).read_bytes() != (out_b / name).read_bytes():
                mismatched.append(name)
        passed = not mismatched and bool(names)
        detail = (
            f"{len(names)} artifacts bit-identical"
            if passed
            else f"mismatch: {', '.join(mismatched[:4])}"
        )
        return CriterionResult(10, "same seed reproduces artifacts bit-for-bit",
                               passed, detail)
    finally:
        shutil.rmtree(tmp, ignore_errors=True)


# ---------------------------------------------------------------------------
# runner
# ---------------------------------------------------------------------------


def run_criteria(seed: int = DEFAULT_SEED, workers=None, quick: bool = False,
                 only=None) -> list:
    """Run the acceptance criteria (all by default); returns CriterionResults."""
    results = []

    def want(cid):
        return only is None or cid in only

    if want(1):
        results.append(criterion_1(seed, workers, quick))
    if want(2):
        results.append(criterion_2(seed, workers, quick))
    if want(3) or want(4):
        c3, c4 = criterion_3_and_4(seed, workers, quick)
        if want(3):
            results.append(c3)
        if want(4):
            results.append(c4)
    if want(5):
        results.append(criterion_5(seed, workers, quick))
    if want(6):
        results.append(criterion_6(seed, workers, quick))
    if want(7):
        results.append(criterion_7(seed, workers, quick))
    if want(8):
        results.append(criterion_8(seed, workers, quick))
    if want(9):
        results.append(criterion_9(seed, workers, quick))
    if want(10):
        results.append(criterion_10(seed, workers, quick))
    return results
