"""From camera images to coherence observables.

Azimuthal profiles are taken over an annulus where the envelope has
support; the pair-correlation function is extracted as the ratio of the
normalized heralded profile to the normalized singles profile, rescaled
so its azimuthal mean matches the analytic mean (exactly 1 for helical
signal masks, where the rescale is a near-no-op).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import stats

from .errors import ConfigError, RangeError, UndefinedRatioError
from .geometry import Grid, HelicalPhase, TWO_PI, AmplitudeEnvelope
from .measurement import (
    CoincidenceImage,
    DetectorConfig,
    SectorMask,
    events_for_heralds,
    mask_average_contrast,
    run_heralded_imaging,
    run_singles_imaging,
)
from .states import BiphotonState


@dataclass(frozen=True)
class Annulus:
    r_in: float
    r_out: float

    def __post_init__(self):
        if not 0.0 <= self.r_in < self.r_out:
            raise ConfigError(f"annulus requires 0 <= r_in < r_out, got [{self.r_in}, {self.r_out}]")

    def contains(self, r):
        return (r >= self.r_in) & (r <= self.r_out)


def auto_annulus(env: AmplitudeEnvelope, grid: Grid | None = None) -> Annulus:
    """[r_peak/2, 2 r_peak] around the radial mass-density peak, clipped to the grid."""
    r_peak = env.peak_radius
    r_out = 2.0 * r_peak
    if grid is not None:
        r_out = min(r_out, grid.extent)
    return Annulus(r_peak / 2.0, r_out)


@dataclass
class AzimuthalProfile:
    n_bins: int
    values: np.ndarray
    normalized: bool = False

    def bin_centers(self) -> np.ndarray:
        return (np.arange(self.n_bins) + 0.5) * TWO_PI / self.n_bins

    def normalized_values(self) -> np.ndarray:
        total = self.values.sum()
        if not total > 0:
            raise RangeError("cannot normalize an all-zero profile")
        return self.values / total


def _annulus_selection(grid: Grid, annulus: Annulus):
    if annulus.r_out > grid.extent * math.sqrt(2.0):
        raise RangeError(
            f"annulus r_out={annulus.r_out} lies outside the grid (extent {grid.extent})"
        )
    r, phi = grid.polar()
    sel = annulus.contains(r)
    if not sel.any():
        raise RangeError("annulus contains no grid pixels")
    return sel, r, phi


def _bin_field(field: np.ndarray, grid: Grid, annulus: Annulus, n_bins: int) -> np.ndarray:
    sel, _r, phi = _annulus_selection(grid, annulus)
    idx = np.floor(phi[sel] / TWO_PI * n_bins).astype(np.int64)
    idx = np.clip(idx, 0, n_bins - 1)
    return np.bincount(idx, weights=field[sel], minlength=n_bins)


def azimuthal_profile(
    image: CoincidenceImage,
    annulus: Annulus,
    n_bins: int = 360,
    normalize: bool = False,
) -> AzimuthalProfile:
    """Per-angular-bin count totals within the annulus."""
    if n_bins < 8:
        raise ConfigError(f"n_bins must be >= 8, got {n_bins}")
    vals = _bin_field(image.counts.astype(float), image.grid, annulus, n_bins)
    if normalize:
        total = vals.sum()
        if not total > 0:
            raise RangeError("profile has zero counts; cannot normalize")
        vals = vals / total
    return AzimuthalProfile(n_bins=n_bins, values=vals, normalized=normalize)


def field_profile(field: np.ndarray, grid: Grid, annulus: Annulus, n_bins: int,
                  normalize: bool = False) -> AzimuthalProfile:
    """Azimuthal profile of an arbitrary per-pixel field (e.g. a quadrature density)."""
    vals = _bin_field(np.asarray(field, dtype=float), grid, annulus, n_bins)
    if normalize:
        vals = vals / vals.sum()
    return AzimuthalProfile(n_bins=n_bins, values=vals, normalized=normalize)


# ---------------------------------------------------------------------------
# polar unfolding
# ---------------------------------------------------------------------------


def _bilinear(image: np.ndarray, fx: np.ndarray, fy: np.ndarray) -> np.ndarray:
    """Sample image at fractional pixel indices (fx, fy), clamped at borders."""
    ny, nx = image.shape
    fx = np.clip(fx, 0.0, nx - 1.0)
    fy = np.clip(fy, 0.0, ny - 1.0)
    x0 = np.floor(fx).astype(np.int64)
    y0 = np.floor(fy).astype(np.int64)
    x1 = np.minimum(x0 + 1, nx - 1)
    y1 = np.minimum(y0 + 1, ny - 1)
    wx = fx - x0
    wy = fy - y0
    top = image[y0, x0] * (1 - wx) + image[y0, x1] * wx
    bot = image[y1, x0] * (1 - wx) + image[y1, x1] * wx
    return top * (1 - wy) + bot * wy


def unfold(image: CoincidenceImage, annulus: Annulus, n_phi: int = 360,
           n_r: int = 32) -> np.ndarray:
    """Polar-to-rectangular resampling: rows = radii, columns = angles."""
    grid = image.grid
    if annulus.r_out > grid.extent:
        raise RangeError(
            f"annulus r_out={annulus.r_out} exceeds the grid extent {grid.extent}"
        )
    radii = annulus.r_in + (np.arange(n_r) + 0.5) * (annulus.r_out - annulus.r_in) / n_r
    angles = (np.arange(n_phi) + 0.5) * TWO_PI / n_phi
    rr, aa = np.meshgrid(radii, angles, indexing="ij")
    x = rr * np.cos(aa)
    y = rr * np.sin(aa)
    fx = (x - grid.center[0] + grid.extent) / grid.pitch_x - 0.5
    fy = (y - grid.center[1] + grid.extent) / grid.pitch_y - 0.5
    return _bilinear(image.counts.astype(float), fx, fy)


def refold(unfolded: np.ndarray, annulus: Annulus, grid: Grid) -> np.ndarray:
    """Inverse of unfold: resample the (r, phi) field back onto the grid."""
    n_r, n_phi = unfolded.shape
    r, phi = grid.polar()
    sel = annulus.contains(r)
    out = np.zeros((grid.n_y, grid.n_x))
    fr = (r[sel] - annulus.r_in) / (annulus.r_out - annulus.r_in) * n_r - 0.5
    fp = phi[sel] / TWO_PI * n_phi - 0.5
    # circular interpolation in the angle direction
    fp = np.mod(fp, n_phi)
    p0 = np.floor(fp).astype(np.int64) % n_phi
    p1 = (p0 + 1) % n_phi
    wp = fp - np.floor(fp)
    fr = np.clip(fr, 0.0, n_r - 1.0)
    r0 = np.floor(fr).astype(np.int64)
    r1 = np.minimum(r0 + 1, n_r - 1)
    wr = fr - r0
    vals = (
        unfolded[r0, p0] * (1 - wr) * (1 - wp)
        + unfolded[r0, p1] * (1 - wr) * wp
        + unfolded[r1, p0] * wr * (1 - wp)
        + unfolded[r1, p1] * wr * wp
    )
    out[sel] = vals
    return out


# ---------------------------------------------------------------------------
# g2 extraction
# ---------------------------------------------------------------------------


def _as_unit_profile(p) -> np.ndarray:
    vals = p.values if isinstance(p, AzimuthalProfile) else np.asarray(p, dtype=float)
    total = vals.sum()
    if not total > 0:
        raise RangeError("profile has zero total")
    return vals / total


def extract_g2(p_ab, p_a, mean_target: float = 1.0) -> np.ndarray:
    """Bin-wise ratio of normalized profiles, rescaled to the analytic mean.

    Bins with zero reference probability yield NaN when the coincidence
    probability is also zero, and raise UndefinedRatioError otherwise.
    """
    ab = _as_unit_profile(p_ab)
    a = _as_unit_profile(p_a)
    if ab.shape != a.shape:
        raise ConfigError("profiles must share the same binning")
    bad = (a <= 0) & (ab > 0)
    if bad.any():
        raise UndefinedRatioError(
            f"{int(bad.sum())} bins have coincidence mass but zero singles mass"
        )
    ratio = np.full(a.shape, np.nan)
    ok = a > 0
    ratio[ok] = ab[ok] / a[ok]
    mean = np.nanmean(ratio)
    if mean > 0:
        ratio *= mean_target / mean
    return ratio


# ---------------------------------------------------------------------------
# coherence maps
# ---------------------------------------------------------------------------


@dataclass
class CoherenceMap:
    """g2 or G2 values over (phi, phi'); columns are idler mask orientations."""

    phi_centers: np.ndarray  # (n_phi,)
    phi_p_angles: np.ndarray  # (k,)
    values: np.ndarray  # (n_phi, k)
    kind: str  # "g2" | "G2"
    counts: np.ndarray  # (n_phi, k) raw coincidence counts per cell
    valid: np.ndarray  # (k,) bool

    @property
    def n_phi(self) -> int:
        return self.phi_centers.size

    @property
    def n_angles(self) -> int:
        return self.phi_p_angles.size


@dataclass
class ScanResult:
    g2: CoherenceMap
    big_g2: CoherenceMap
    singles: CoincidenceImage
    heralded: list
    annulus: Annulus
    singles_profile: AzimuthalProfile


def derive_seed(seed: int, *tags: int) -> int:
    """Stable 64-bit seed derived from a base seed and integer tags."""
    ss = np.random.SeedSequence(entropy=int(seed), spawn_key=tuple(int(t) for t in tags))
    w = ss.generate_state(2, np.uint32)
    return int(w[0]) << 32 | int(w[1])


def mask_window_moments(state: BiphotonState, mask: SectorMask):
    """(M_T, M_C, M_S): idler-envelope quadrature of 1, cos(2 Phi_B), sin(2 Phi_B)
    over the mask window."""
    from .geometry import envelope_density

    grid = state.grid_b
    dens = envelope_density(state.env_b, grid)
    r, phi = grid.polar()
    sel = mask.passes(r, phi)
    if not sel.any():
        return 0.0, 0.0, 0.0
    xx, yy = grid.meshgrid()
    ph = 2.0 * state.mask_b.phase(xx, yy)
    area = grid.pixel_area
    m_t = float(dens[sel].sum() * area)
    m_c = float((dens[sel] * np.cos(ph[sel])).sum() * area)
    m_s = float((dens[sel] * np.sin(ph[sel])).sum() * area)
    return m_t, m_c, m_s


def _signal_bin_moments(state: BiphotonState, annulus: Annulus, n_bins: int):
    """Per-angular-bin quadrature sums over the signal annulus:
    (marginal, p_A, p_A cos 2Phi_A, p_A sin 2Phi_A)."""
    from .geometry import envelope_density

    grid = state.grid_a
    dens = envelope_density(state.env_a, grid)
    marg = state.marginal_density("A").values
    xx, yy = grid.meshgrid()
    ph = 2.0 * state.mask_a.phase(xx, yy)
    w_marg = _bin_field(marg, grid, annulus, n_bins)
    w_p = _bin_field(dens, grid, annulus, n_bins)
    w_c = _bin_field(dens * np.cos(ph), grid, annulus, n_bins)
    w_s = _bin_field(dens * np.sin(ph), grid, annulus, n_bins)
    return w_marg, w_p, w_c, w_s


def analytic_bin_profiles(state: BiphotonState, mask: SectorMask, annulus: Annulus,
                          n_bins: int):
    """Quadrature prediction of the normalized heralded and singles profiles.

    Returns (p_ab, p_a, mean_ratio): unit-sum arrays and the mean of their
    bin-wise ratio (the analytic mean of g2 over the annulus bins).
    """
    w_marg, w_p, w_c, w_s = _signal_bin_moments(state, annulus, n_bins)
    m_t, m_c, m_s = mask_window_moments(state, mask)
    sv = state.sign * state.visibility
    q_ab = w_p * m_t + sv * (w_c * m_c + w_s * m_s)
    if not q_ab.sum() > 0:
        raise RangeError("analytic heralded profile has zero mass")
    p_ab = q_ab / q_ab.sum()
    p_a = w_marg / w_marg.sum()
    ok = p_a > 0
    mean_ratio = float(np.mean(p_ab[ok] / p_a[ok]))
    return p_ab, p_a, mean_ratio


def scan_g2_matrix(
    state: BiphotonState,
    mask_width: float,
    k_angles: int,
    heralds_per_angle: int,
    det: DetectorConfig,
    n_singles: int = 1_000_000,
    n_phi: int = 120,
    annulus: Annulus | None = None,
    workers: int | None = None,
) -> ScanResult:
    """Heralded scan over k equally spaced mask orientations.

    Each orientation runs with a seed derived from det.rng_seed, so the
    whole scan is reproducible from one seed.
    """
    if k_angles < 4:
        raise ConfigError(f"k_angles must be >= 4, got {k_angles}")
    if annulus is None:
        annulus = auto_annulus(state.env_a, state.grid_a)
    angles = np.arange(k_angles) * TWO_PI / k_angles

    singles_det = DetectorConfig(
        grid=det.grid,
        efficiency=det.efficiency,
        background_rate=det.background_rate,
        rng_seed=derive_seed(det.rng_seed, 0x51),
    )
    singles = run_singles_imaging(state, n_singles, singles_det, workers=workers,
                                  label="singles")
    p_a_prof = azimuthal_profile(singles, annulus, n_phi)
    phi_centers = p_a_prof.bin_centers()

    g2_vals = np.full((n_phi, k_angles), np.nan)
    counts = np.zeros((n_phi, k_angles))
    big_g2 = np.zeros((n_phi, k_angles))
    valid = np.zeros(k_angles, dtype=bool)
    heralded_images = []

    # angle-independent quadrature pieces, hoisted out of the scan loop
    w_marg, w_p, w_c, w_s = _signal_bin_moments(state, annulus, n_phi)
    marg_b = state.marginal_density("B")
    r_b, phi_b = state.grid_b.polar()
    sv = state.sign * state.visibility

    for j, ang in enumerate(angles):
        mask = SectorMask(center_angle=float(ang), width=mask_width)
        q = float(marg_b.values[mask.passes(r_b, phi_b)].sum() * state.grid_b.pixel_area)
        if q <= 0.0:
            raise RangeError(f"mask at angle {ang} passes zero probability mass")
        n_events = int(math.ceil(heralds_per_angle / q))
        det_j = DetectorConfig(
            grid=det.grid,
            efficiency=det.efficiency,
            background_rate=det.background_rate,
            rng_seed=derive_seed(det.rng_seed, 0xA0, j),
        )
        img = run_heralded_imaging(state, mask, n_events, det_j, workers=workers,
                                   label=f"heralded_{j:03d}")
        heralded_images.append(img)
        prof = azimuthal_profile(img, annulus, n_phi)
        counts[:, j] = prof.values
        total = prof.values.sum()
        if img.n_heralds <= 0 or not total > 0:
            continue  # flagged invalid, never fabricated
        valid[j] = True
        big_g2[:, j] = prof.values / img.n_heralds
        m_t, m_c, m_s = mask_window_moments(state, mask)
        q_ab = w_p * m_t + sv * (w_c * m_c + w_s * m_s)
        p_ab_quad = q_ab / q_ab.sum()
        p_a_quad = w_marg / w_marg.sum()
        ok = p_a_quad > 0
        mean_target = float(np.mean(p_ab_quad[ok] / p_a_quad[ok]))
        g2_vals[:, j] = extract_g2(prof, p_a_prof, mean_target=mean_target)

    peak = big_g2.max()
    if peak > 0:
        big_g2 = big_g2 / peak

    g2_map = CoherenceMap(phi_centers, angles, g2_vals, "g2", counts.copy(), valid)
    big_map = CoherenceMap(phi_centers, angles, big_g2, "G2", counts.copy(), valid.copy())
    return ScanResult(
        g2=g2_map,
        big_g2=big_map,
        singles=singles,
        heralded=heralded_images,
        annulus=annulus,
        singles_profile=p_a_prof,
    )


# ---------------------------------------------------------------------------
# fringe metrics
# ---------------------------------------------------------------------------


def fringe_count(values) -> int | None:
    """Dominant nonzero harmonic of a profile, or None below the noise floor."""
    v = np.asarray(values, dtype=float)
    v = v[np.isfinite(v)]
    if v.size < 16:
        raise ConfigError(f"fringe_count needs >= 16 bins, got {v.size}")
    mags = np.abs(np.fft.rfft(v - v.mean()))[1:]
    if mags.size == 0:
        return None
    k = int(np.argmax(mags)) + 1
    floor = 3.0 * np.median(mags)
    if mags[k - 1] <= 0 or mags[k - 1] < floor:
        return None
    return k


def map_fringe_count(cmap: CoherenceMap) -> int | None:
    """Dominant harmonic of the column spectra, magnitude-averaged over columns."""
    cols = [cmap.values[:, j] for j in range(cmap.n_angles) if cmap.valid[j]]
    if not cols:
        return None
    spec = None
    for c in cols:
        c = np.nan_to_num(c, nan=float(np.nanmean(c)))
        m = np.abs(np.fft.rfft(c - c.mean()))[1:]
        spec = m if spec is None else spec + m
    k = int(np.argmax(spec)) + 1
    floor = 3.0 * np.median(spec)
    if spec[k - 1] <= 0 or spec[k - 1] < floor:
        return None
    return k


def _circular_shift_bins(prev: np.ndarray, nxt: np.ndarray, max_lag: float) -> float:
    """Lag (in bins, signed) by which nxt is prev shifted forward, via
    circular cross-correlation, restricted to |lag| <= max_lag."""
    n = prev.size
    a = np.nan_to_num(nxt - np.nanmean(nxt))
    b = np.nan_to_num(prev - np.nanmean(prev))
    corr = np.fft.irfft(np.fft.rfft(a) * np.conj(np.fft.rfft(b)), n)
    lags = np.arange(n)
    signed = ((lags + n // 2) % n) - n // 2
    allowed = np.abs(signed) <= max_lag
    idx = int(np.argmax(np.where(allowed, corr, -np.inf)))
    return float(signed[idx])


def fringe_slope_sign(cmap: CoherenceMap) -> int:
    """Sign of d(phi_peak)/d(phi'): +1, -1, or 0 for a flat map."""
    if cmap.n_angles < 4:
        raise ConfigError("slope estimation needs >= 4 columns")
    f = map_fringe_count(cmap)
    if f is None:
        return 0
    period = cmap.n_phi / f
    pairs = []
    valid_idx = [j for j in range(cmap.n_angles) if cmap.valid[j]]
    for a, b in zip(valid_idx, valid_idx[1:] + valid_idx[:1]):
        pairs.append((cmap.values[:, a], cmap.values[:, b]))
    total = 0.0
    for prev, nxt in pairs:
        total += _circular_shift_bins(prev, nxt, max_lag=period / 2.0 - 1e-9)
    if total > 1.0:
        return +1
    if total < -1.0:
        return -1
    return 0


@dataclass
class ComparisonMetrics:
    rmse: float
    contrast: float
    n_cells: int


def _helical_charges(state: BiphotonState):
    if not isinstance(state.mask_a, HelicalPhase) or not isinstance(state.mask_b, HelicalPhase):
        raise ConfigError("analytic comparison requires helical masks on both arms")
    return state.mask_a.m, state.mask_b.m


def analytic_map_target(state: BiphotonState, cmap: CoherenceMap, mask_width: float) -> np.ndarray:
    """Analytic g2 over the map cells, with finite-mask contrast reduction."""
    m_a, m_b = _helical_charges(state)
    c_mask = mask_average_contrast(m_b, mask_width)
    arg = 2.0 * (m_a * cmap.phi_centers[:, None] - m_b * cmap.phi_p_angles[None, :])
    return 1.0 + state.sign * state.visibility * c_mask * np.cos(arg)


def compare_to_analytic(cmap: CoherenceMap, state: BiphotonState,
                        mask_width: float) -> ComparisonMetrics:
    """RMSE against the analytic prediction plus a fitted cosine contrast."""
    if cmap.kind != "g2":
        raise ConfigError("comparison is defined for g2 maps")
    m_a, m_b = _helical_charges(state)
    target = analytic_map_target(state, cmap, mask_width)
    arg = 2.0 * (m_a * cmap.phi_centers[:, None] - m_b * cmap.phi_p_angles[None, :])
    sel = np.isfinite(cmap.values) & cmap.valid[None, :]
    vals = cmap.values[sel]
    rmse = float(np.sqrt(np.mean((vals - target[sel]) ** 2)))
    design = np.column_stack([np.ones(vals.size), np.cos(arg[sel]), np.sin(arg[sel])])
    coef, *_ = np.linalg.lstsq(design, vals, rcond=None)
    contrast = float(np.hypot(coef[1], coef[2]))
    return ComparisonMetrics(rmse=rmse, contrast=contrast, n_cells=int(vals.size))


# ---------------------------------------------------------------------------
# image-domain g2 (patterned-phase workflows)
# ---------------------------------------------------------------------------


def analytic_g2_window(state: BiphotonState, mask: SectorMask, x, y) -> np.ndarray:
    """Analytic g2 at signal points with the idler averaged over the mask window."""
    m_t, m_c, m_s = mask_window_moments(state, mask)
    if not m_t > 0:
        raise RangeError("mask window carries no idler probability mass")
    ph = 2.0 * state.mask_a.phase(x, y)
    sv = state.sign * state.visibility
    return 1.0 + sv * (np.cos(ph) * m_c + np.sin(ph) * m_s) / m_t


def g2_image(
    heralded: CoincidenceImage,
    singles: CoincidenceImage,
    state: BiphotonState,
    mask: SectorMask,
    min_singles: int = 10,
) -> np.ndarray:
    """Per-pixel g2 map: ratio of normalized images, rescaled to the analytic
    density-weighted mean. Pixels with too few singles counts are NaN."""
    if heralded.grid != singles.grid:
        raise ConfigError("heralded and singles images must share a grid")
    grid = heralded.grid
    xx, yy = grid.meshgrid()
    target = analytic_g2_window(state, mask, xx, yy)
    marg = state.marginal_density("A").values
    w_mean = float((marg * target).sum() / marg.sum())

    h = heralded.counts.astype(float)
    s = singles.counts.astype(float)
    out = np.full(h.shape, np.nan)
    ok = s >= min_singles
    out[ok] = (h[ok] / h.sum()) / (s[ok] / s.sum()) * w_mean
    return out


def region_mean_g2(
    heralded: CoincidenceImage,
    singles: CoincidenceImage,
    region: np.ndarray,
    state: BiphotonState,
    mask: SectorMask,
) -> float:
    """Singles-weighted mean g2 over a pixel region (ratio of region sums)."""
    grid = heralded.grid
    xx, yy = grid.meshgrid()
    target = analytic_g2_window(state, mask, xx, yy)
    marg = state.marginal_density("A").values
    w_mean = float((marg * target).sum() / marg.sum())
    h = heralded.counts.astype(float)
    s = singles.counts.astype(float)
    s_reg = s[region].sum()
    if not s_reg > 0:
        raise RangeError("region has no singles counts")
    return float((h[region].sum() / h.sum()) / (s_reg / s.sum()) * w_mean)


def signal_phase_levels(state: BiphotonState) -> tuple:
    """Distinct phase levels of the signal mask (piecewise-constant kinds)."""
    from .geometry import BitmapPhase, SectorPhase

    mask = state.mask_a
    if isinstance(mask, SectorPhase):
        return tuple(sorted(set(mask.values)))
    if isinstance(mask, BitmapPhase):
        return tuple(sorted({mask.phase_lo, mask.phase_hi}))
    return (0.0,)


def pattern_regions(state: BiphotonState, grid: Grid, support_frac: float = 0.05):
    """(pattern, background) pixel masks: where the signal phase sits at its
    nonzero level vs the rest, both restricted to envelope support."""
    xx, yy = grid.meshgrid()
    ph = state.mask_a.phase(xx, yy)
    levels = signal_phase_levels(state)
    hi = max(levels, key=abs)
    pattern = np.isclose(ph, hi)
    marg = state.marginal_density("A").values
    support = marg > support_frac * marg.max()
    return pattern & support, (~pattern) & support


def pattern_indicator_profile(state: BiphotonState, annulus: Annulus,
                              n_bins: int) -> np.ndarray:
    """Fraction of annulus pixels per angular bin carrying the hi phase level."""
    grid = state.grid_a
    xx, yy = grid.meshgrid()
    ph = state.mask_a.phase(xx, yy)
    levels = signal_phase_levels(state)
    hi = max(levels, key=abs)
    indicator = np.isclose(ph, hi).astype(float)
    num = field_profile(indicator, grid, annulus, n_bins)
    den = field_profile(np.ones_like(indicator), grid, annulus, n_bins)
    ok = den.values > 0
    out = np.zeros(n_bins)
    out[ok] = num.values[ok] / den.values[ok]
    return out


# ---------------------------------------------------------------------------
# statistics helpers
# ---------------------------------------------------------------------------


def uniformity_chi2(counts: np.ndarray, expected_weights: np.ndarray):
    """Chi-square goodness of fit of counts against expected bin weights.

    Returns (statistic, dof, p_value). Weights need not be normalized;
    zero-weight bins are excluded.
    """
    counts = np.asarray(counts, dtype=float)
    w = np.asarray(expected_weights, dtype=float)
    ok = w > 0
    counts = counts[ok]
    w = w[ok]
    expected = w / w.sum() * counts.sum()
    stat = float(((counts - expected) ** 2 / expected).sum())
    dof = counts.size - 1
    return stat, dof, float(stats.chi2.sf(stat, dof))


def pearson_correlation(a: np.ndarray, b: np.ndarray) -> float:
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.std() == 0 or b.std() == 0:
        return 0.0
    return float(np.corrcoef(a, b)[0, 1])
