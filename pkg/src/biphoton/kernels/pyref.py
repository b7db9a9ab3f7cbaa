"""Pure-numpy sampling backend.

Vectorized rejection sampling in rounds: propose a batch from the product
of the single-photon densities (inverse-CDF radius, uniform angle), accept
with probability (1 + sign*V*cos[2 Phi_A - 2 Phi_B]) / 2, keep accepted
proposals in order. Statistically identical to the compiled backend but
consumes the random stream in a different (batch) layout, so the two
backends are not bit-interchangeable.
"""

from __future__ import annotations

import numpy as np

from ..errors import SamplerStallError
from .tables import SamplerTables, phase_lookup

TWO_PI = 2.0 * np.pi
RETRY_CAP = 1_000_000  # proposals per requested event before declaring a stall
MAX_BATCH = 2_000_000

COMPILED = False


def _qlookup(q: np.ndarray, u: np.ndarray) -> np.ndarray:
    t = u * (q.size - 1)
    i = np.minimum(t.astype(np.int64), q.size - 2)
    f = t - i
    return q[i] + f * (q[i + 1] - q[i])


def _batch_size(remaining: int, mean_acceptance: float) -> int:
    est = int(remaining / max(mean_acceptance, 1e-6) * 1.15) + 64
    return min(MAX_BATCH, est)


def _propose(tab: SamplerTables, m: int, rng):
    """One proposal round: returns accepted (r, phi, rp, phip) in order."""
    u = rng.random((5, m))
    r = _qlookup(tab.q_a, u[0])
    phi = TWO_PI * u[1]
    rp = _qlookup(tab.q_b, u[2])
    phip = TWO_PI * u[3]
    pa = phase_lookup(tab.mask_a, r, phi)
    pb = phase_lookup(tab.mask_b, rp, phip)
    accept = u[4] < 0.5 * (1.0 + tab.sign_v * np.cos(2.0 * (pa - pb)))
    return r[accept], phi[accept], rp[accept], phip[accept]


def _event_rounds(tab: SamplerTables, n_events: int, rng):
    """Yield accepted-event batches until n_events have been produced."""
    produced = 0
    proposals = 0
    while produced < n_events:
        m = _batch_size(n_events - produced, tab.mean_acceptance)
        proposals += m
        r, phi, rp, phip = _propose(tab, m, rng)
        take = min(r.size, n_events - produced)
        if proposals > RETRY_CAP * (produced + take + 1):
            raise SamplerStallError(
                f"rejection sampler stalled: {proposals} proposals for "
                f"{produced + take} events"
            )
        if take == 0:
            continue
        produced += take
        yield r[:take], phi[:take], rp[:take], phip[:take]


def sample_pairs(tab: SamplerTables, n: int, rng):
    """n accepted pairs as polar arrays (r, phi, rp, phip)."""
    parts = list(_event_rounds(tab, n, rng))
    return tuple(np.concatenate([p[i] for p in parts]) for i in range(4))


def _bin_counts(counts: np.ndarray, x, y, extent: float):
    ny, nx = counts.shape
    ix = np.floor((x + extent) / (2.0 * extent) * nx).astype(np.int64)
    iy = np.floor((y + extent) / (2.0 * extent) * ny).astype(np.int64)
    ok = (ix >= 0) & (ix < nx) & (iy >= 0) & (iy < ny)
    flat = iy[ok] * nx + ix[ok]
    counts += np.bincount(flat, minlength=nx * ny).reshape(ny, nx).astype(counts.dtype)
    return int(ok.sum())


def heralded_image(tab: SamplerTables, n_events: int, herald, cam_extent: float,
                   efficiency: float, rng, counts: np.ndarray):
    """Accumulate heralded signal detections into counts; returns (heralds, recorded)."""
    center, half, r_min, r_max = herald
    n_heralds = 0
    n_recorded = 0
    for r, phi, rp, phip in _event_rounds(tab, n_events, rng):
        d = np.mod(phip - center, TWO_PI)
        d = np.where(d > np.pi, d - TWO_PI, d)
        passed = (np.abs(d) <= half) & (rp >= r_min) & (rp <= r_max)
        n_pass = int(passed.sum())
        n_heralds += n_pass
        if n_pass == 0:
            continue
        rs = r[passed]
        ps = phi[passed]
        if efficiency < 1.0:
            keep = rng.random(n_pass) < efficiency
            rs = rs[keep]
            ps = ps[keep]
        if rs.size:
            n_recorded += _bin_counts(counts, rs * np.cos(ps), rs * np.sin(ps), cam_extent)
    return n_heralds, n_recorded


def singles_image(tab: SamplerTables, n_events: int, cam_extent: float,
                  efficiency: float, rng, counts: np.ndarray):
    """Accumulate unheralded signal detections; returns recorded count."""
    n_recorded = 0
    for r, phi, _rp, _phip in _event_rounds(tab, n_events, rng):
        if efficiency < 1.0:
            keep = rng.random(r.size) < efficiency
            r = r[keep]
            phi = phi[keep]
        if r.size:
            n_recorded += _bin_counts(counts, r * np.cos(phi), r * np.sin(phi), cam_extent)
    return n_recorded
