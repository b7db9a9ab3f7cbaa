"""Heralded/singles imaging runs: herald statistics, detector effects,
merging, determinism, and the finite-mask contrast factor."""

import math

import numpy as np
import pytest
from scipy import stats

from biphoton.analysis import auto_annulus, azimuthal_profile, fringe_count
from biphoton.errors import ConfigError, DegenerateConfigError
from biphoton.geometry import Grid, TWO_PI
from biphoton.measurement import (
    CoincidenceImage,
    DetectorConfig,
    SectorMask,
    events_for_heralds,
    herald_fraction,
    mask_average_contrast,
    merge_images,
    run_heralded_imaging,
    run_singles_imaging,
)
from biphoton.states import oam_state

PI = math.pi


@pytest.fixture(scope="module")
def oam22():
    return oam_state(2, 2, +1)


def det(seed, **kw):
    return DetectorConfig(rng_seed=seed, **kw)


class TestSectorMask:
    def test_pass_logic(self):
        m = SectorMask(center_angle=0.0, width=PI / 2, r_min=0.5, r_max=2.0)
        assert m.passes(1.0, 0.0)
        assert m.passes(1.0, PI / 4)  # boundary inclusive
        assert not m.passes(1.0, PI / 3)
        assert not m.passes(0.3, 0.0)
        assert not m.passes(2.5, 0.0)

    def test_wraps_across_zero(self):
        m = SectorMask(center_angle=0.1, width=PI / 2)
        assert m.passes(1.0, TWO_PI - 0.05)

    def test_full_circle(self):
        m = SectorMask(center_angle=1.0, width=TWO_PI)
        phis = np.linspace(0, TWO_PI, 17, endpoint=False)
        assert m.passes(np.ones_like(phis), phis).all()

    def test_invalid_width(self):
        with pytest.raises(ConfigError):
            SectorMask(0.0, 0.0)
        with pytest.raises(ConfigError):
            SectorMask(0.0, 7.0)


class TestHeraldFraction:
    def test_uniform_marginal_gives_width_fraction(self, oam22):
        mask = SectorMask(0.7, PI / 4)
        q = herald_fraction(oam22, mask)
        assert q == pytest.approx(1 / 8, abs=2e-3)

    def test_events_budget(self, oam22):
        mask = SectorMask(0.0, PI / 4)
        n = events_for_heralds(oam22, mask, 1000)
        assert 7000 < n < 9000

    def test_herald_rate_converges(self, oam22):
        mask = SectorMask(0.3, PI / 3)
        n_events = 1_000_000
        img = run_heralded_imaging(oam22, mask, n_events, det(101))
        q = PI / 3 / TWO_PI
        se = math.sqrt(q * (1 - q) * n_events)
        assert abs(img.n_heralds - q * n_events) < 3 * se


class TestHeraldedImaging:
    def test_c4_symmetry(self, oam22):
        mask = SectorMask(0.0, PI / 4)
        img = run_heralded_imaging(oam22, mask, 400_000, det(55))
        prof = azimuthal_profile(img, auto_annulus(oam22.env_a), n_bins=90)
        assert fringe_count(prof.values) == 4

    def test_pattern_rotates_with_mask(self, oam22):
        # rotating the heralding mask by delta rotates the image by
        # (m_b / m_a) * delta = delta for the charge-(2,2) state
        delta = PI / 6
        annulus = auto_annulus(oam22.env_a)
        img0 = run_heralded_imaging(oam22, SectorMask(0.0, PI / 4), 300_000, det(56))
        img1 = run_heralded_imaging(oam22, SectorMask(delta, PI / 4), 300_000, det(57))
        n_bins = 360
        p0 = azimuthal_profile(img0, annulus, n_bins).values
        p1 = azimuthal_profile(img1, annulus, n_bins).values
        corr = np.fft.irfft(np.fft.rfft(p1 - p1.mean())
                            * np.conj(np.fft.rfft(p0 - p0.mean())), n_bins)
        period = n_bins // 4  # C4 pattern
        lags = ((np.arange(n_bins) + n_bins // 2) % n_bins) - n_bins // 2
        window = np.abs(lags) <= period // 2
        best = lags[np.where(window, corr, -np.inf).argmax()]
        expected = delta / TWO_PI * n_bins
        assert abs(best - expected) <= 2

    def test_full_mask_dephased_state_is_flat(self):
        state = oam_state(2, 2, +1, visibility=0.0)
        mask = SectorMask(0.0, TWO_PI)
        img = run_heralded_imaging(state, mask, 300_000, det(58))
        assert img.n_heralds == 300_000
        prof = azimuthal_profile(img, auto_annulus(state.env_a), n_bins=60)
        expected = np.full(60, prof.values.mean())
        stat = ((prof.values - expected) ** 2 / expected).sum()
        assert stats.chi2.sf(stat, 59) > 1e-3

    def test_counts_invariants(self, oam22):
        img = run_heralded_imaging(oam22, SectorMask(0.0, PI / 2), 100_000, det(59))
        assert (img.counts >= 0).all()
        assert img.counts.sum() == img.n_recorded
        assert img.n_recorded <= img.n_heralds <= img.n_events

    def test_degenerate_mask_rejected(self, oam22):
        mask = SectorMask(0.0, PI / 4, r_min=100.0, r_max=200.0)
        with pytest.raises(DegenerateConfigError):
            run_heralded_imaging(oam22, mask, 1000, det(60))

    def test_efficiency_thins_recordings(self, oam22):
        mask = SectorMask(0.0, PI / 2)
        eff = 0.4
        img = run_heralded_imaging(oam22, mask, 200_000, det(61, efficiency=eff))
        expected = eff * img.n_heralds
        assert abs(img.n_recorded - expected) < 4 * math.sqrt(expected)

    def test_background_poisson(self, oam22):
        rate = 500.0
        img = run_heralded_imaging(oam22, SectorMask(0.0, PI / 2), 50_000,
                                   det(62, background_rate=rate))
        assert img.counts.sum() == img.n_recorded + img.n_background
        assert abs(img.n_background - rate) < 5 * math.sqrt(rate)

    def test_determinism_and_worker_independence(self, oam22):
        mask = SectorMask(0.2, PI / 3)
        a = run_heralded_imaging(oam22, mask, 1_200_000, det(63), workers=1)
        b = run_heralded_imaging(oam22, mask, 1_200_000, det(63), workers=4)
        assert np.array_equal(a.counts, b.counts)
        assert (a.n_heralds, a.n_recorded) == (b.n_heralds, b.n_recorded)

    def test_merging_matches_single_long_run(self, oam22):
        # k independent seeds summed vs one k-times-longer run:
        # chi-square homogeneity on coarse image bins
        mask = SectorMask(0.0, PI / 2)
        parts = [run_heralded_imaging(oam22, mask, 100_000, det(70 + i))
                 for i in range(3)]
        merged = merge_images(parts)
        single = run_heralded_imaging(oam22, mask, 300_000, det(80))
        assert merged.n_events == single.n_events

        def coarse(img):
            return img.counts.reshape(32, 8, 32, 8).sum(axis=(1, 3)).ravel()

        a, b = coarse(merged).astype(float), coarse(single).astype(float)
        tot = a + b
        ok = tot >= 10
        stat = (((a[ok] - b[ok]) ** 2) / tot[ok]).sum()
        pval = stats.chi2.sf(stat, int(ok.sum()) - 1)
        assert pval > 1e-4


class TestSinglesImaging:
    def test_doughnut_profile_uniform(self, oam22):
        img = run_singles_imaging(oam22, 400_000, det(90))
        prof = azimuthal_profile(img, auto_annulus(oam22.env_a), n_bins=45)
        expected = np.full(45, prof.values.mean())
        stat = ((prof.values - expected) ** 2 / expected).sum()
        assert stats.chi2.sf(stat, 44) > 1e-3
        assert fringe_count(prof.values) is None

    def test_visibility_invisible_in_singles(self):
        # identical seeds, V=0 vs V=1: azimuthal profiles statistically equal
        annulus = auto_annulus(oam_state(2, 2, +1).env_a)
        imgs = []
        for vis, seed in ((1.0, 91), (0.0, 92)):
            state = oam_state(2, 2, +1, visibility=vis)
            imgs.append(run_singles_imaging(state, 300_000, det(seed)))
        p1 = azimuthal_profile(imgs[0], annulus, 36).values
        p2 = azimuthal_profile(imgs[1], annulus, 36).values
        tot = p1 + p2
        stat = ((p1 - p2) ** 2 / tot).sum()
        assert stats.chi2.sf(stat, 35) > 1e-3

    def test_recorded_counts(self, oam22):
        img = run_singles_imaging(oam22, 50_000, det(93, efficiency=0.5))
        assert img.counts.sum() == img.n_recorded
        assert abs(img.n_recorded - 25_000) < 4 * math.sqrt(25_000)


class TestMaskAverageContrast:
    def _oracle(self, m_b, width, n=200_001):
        # window average of cos(2 m_b x) over [-width/2, width/2]
        x = np.linspace(-width / 2, width / 2, n)
        return np.trapezoid(np.cos(2 * m_b * x), x) / width

    @pytest.mark.parametrize("m_b", [1, 2, 3, 4])
    @pytest.mark.parametrize("width", [PI / 90, PI / 6, PI / 4, PI / 2, PI])
    def test_matches_quadrature_oracle(self, m_b, width):
        assert mask_average_contrast(m_b, width) == pytest.approx(
            self._oracle(m_b, width), abs=1e-8
        )

    def test_known_values(self):
        # paper's quarter-pi mask on a charge-2 idler
        assert mask_average_contrast(2, PI / 4) == pytest.approx(2 / PI, abs=1e-12)
        # oracle-resolved: at width pi/2 the charge-2 window average is 0
        assert mask_average_contrast(2, PI / 2) == pytest.approx(0.0, abs=1e-12)

    def test_narrow_limit(self):
        assert mask_average_contrast(3, 1e-9) == pytest.approx(1.0)
        assert mask_average_contrast(0, PI / 4) == 1.0

    def test_width_validated(self):
        with pytest.raises(ConfigError):
            mask_average_contrast(2, 0.0)
        with pytest.raises(ConfigError):
            mask_average_contrast(2, 7.0)


class TestMergeHelpers:
    def test_grid_mismatch_rejected(self, oam22):
        a = run_singles_imaging(oam22, 1000, det(94))
        b = CoincidenceImage(grid=Grid(n_x=64, n_y=64, extent=4.0),
                             counts=np.zeros((64, 64), dtype=np.int64),
                             n_events=0, n_heralds=0, n_recorded=0)
        with pytest.raises(ValueError):
            a.merged_with(b)
