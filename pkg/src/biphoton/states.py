"""Patterned-phase entangled pair states and their exact (quadrature) observables.

The two-photon probability density implemented here is

    |Psi(r, r')|^2 = |eta_A(r)|^2 |eta_B(r')|^2
                     * (1 + sign * V * cos[2 Phi_A(r) - 2 Phi_B(r')]) / Z

with Z the numeric normalization over the working grids. V = 1 is the
pure state; V < 1 scales the interference term (fringe contrast).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, MixedStateError
from .geometry import (
    AmplitudeEnvelope,
    Grid,
    PhaseMask,
    envelope_density,
    helical_phase,
    ring_envelope,
)

DEFAULT_GRID = Grid()


@dataclass(frozen=True)
class DensityMap:
    """A non-negative density rasterized on a grid; total = sum * pixel_area."""

    grid: Grid
    values: np.ndarray
    total: float


def _phase_moments(env: AmplitudeEnvelope, mask: PhaseMask, grid: Grid):
    """(T, C, S): grid quadrature of p, p cos(2 Phi), p sin(2 Phi) with p = |eta|^2."""
    dens = envelope_density(env, grid)
    xx, yy = grid.meshgrid()
    ph = 2.0 * mask.phase(xx, yy)
    area = grid.pixel_area
    t = dens.sum() * area
    c = (dens * np.cos(ph)).sum() * area
    s = (dens * np.sin(ph)).sum() * area
    return t, c, s


@dataclass(frozen=True)
class BiphotonState:
    """Immutable description of a patterned-phase entangled photon pair."""

    env_a: AmplitudeEnvelope
    env_b: AmplitudeEnvelope
    mask_a: PhaseMask
    mask_b: PhaseMask
    sign: int
    visibility: float
    grid_a: Grid = DEFAULT_GRID
    grid_b: Grid = DEFAULT_GRID

    # quadrature moments, filled in by make_state
    moments_a: tuple = None
    moments_b: tuple = None
    norm: float = None

    @property
    def mean_acceptance(self) -> float:
        """Mean accept probability of the rejection sampler, Z / 2."""
        return self.norm / 2.0

    # -- phase fields -------------------------------------------------------

    def phase_diff(self, x, y, xp, yp):
        """2 Phi_A(r) - 2 Phi_B(r'), the interference argument."""
        return 2.0 * (self.mask_a.phase(x, y) - self.mask_b.phase(xp, yp))

    def phase_diff_polar(self, r, phi, rp, phip):
        return 2.0 * (self.mask_a.phase_polar(r, phi) - self.mask_b.phase_polar(rp, phip))

    # -- exact observables ----------------------------------------------------

    def pair_amplitude(self, x, y, xp, yp):
        """Complex two-photon amplitude; defined for the pure state only."""
        if self.visibility < 1.0:
            raise MixedStateError(
                "pair amplitude is undefined for visibility < 1 (mixed state)"
            )
        eta_a = np.sqrt(self.env_a.density(np.hypot(x, y)))
        eta_b = np.sqrt(self.env_b.density(np.hypot(xp, yp)))
        half = 0.5 * self.phase_diff(x, y, xp, yp)  # Phi_A - Phi_B
        return (
            eta_a
            * eta_b
            / math.sqrt(2.0)
            * (np.exp(1j * half) + self.sign * np.exp(-1j * half))
        )

    def joint_density(self, x, y, xp, yp):
        """Pair probability density at (r, r'), normalized on the working grids."""
        pa = self.env_a.density(np.hypot(x, y))
        pb = self.env_b.density(np.hypot(xp, yp))
        mod = 1.0 + self.sign * self.visibility * np.cos(self.phase_diff(x, y, xp, yp))
        return pa * pb * mod / self.norm

    def analytic_g2(self, x, y, xp, yp):
        """1 + sign * V * cos[2 Phi_A(r) - 2 Phi_B(r')], range [1-V, 1+V]."""
        return 1.0 + self.sign * self.visibility * np.cos(self.phase_diff(x, y, xp, yp))

    def analytic_g2_polar(self, r, phi, rp, phip):
        return 1.0 + self.sign * self.visibility * np.cos(
            self.phase_diff_polar(r, phi, rp, phip)
        )

    def marginal_density(self, which: str) -> DensityMap:
        """Exact numeric marginal of |Psi|^2 over the partner plane."""
        if which not in ("A", "B", "a", "b"):
            raise ValueError(f"which must be 'A' or 'B', got {which!r}")
        mine = which.upper() == "A"
        env, mask, grid = (
            (self.env_a, self.mask_a, self.grid_a)
            if mine
            else (self.env_b, self.mask_b, self.grid_b)
        )
        t_o, c_o, s_o = self.moments_b if mine else self.moments_a
        dens = envelope_density(env, grid)
        xx, yy = grid.meshgrid()
        ph = 2.0 * mask.phase(xx, yy)
        sv = self.sign * self.visibility
        # the partner's cos term integrates against this photon's phase factors
        vals = dens * (t_o + sv * (np.cos(ph) * c_o + np.sin(ph) * s_o)) / self.norm
        return DensityMap(grid=grid, values=vals, total=vals.sum() * grid.pixel_area)


def make_state(
    env_a: AmplitudeEnvelope,
    env_b: AmplitudeEnvelope,
    mask_a: PhaseMask,
    mask_b: PhaseMask,
    sign: int = +1,
    visibility: float = 1.0,
    grid_a: Grid = DEFAULT_GRID,
    grid_b: Grid = None,
) -> BiphotonState:
    """Assemble a state and compute its grid normalization constant."""
    if sign not in (+1, -1):
        raise ConfigError(f"state sign must be +1 or -1, got {sign!r}")
    if not 0.0 <= visibility <= 1.0:
        raise ConfigError(f"visibility must lie in [0, 1], got {visibility}")
    if grid_b is None:
        grid_b = grid_a
    ta, ca, sa = _phase_moments(env_a, mask_a, grid_a)
    tb, cb, sb = _phase_moments(env_b, mask_b, grid_b)
    norm = ta * tb + sign * visibility * (ca * cb + sa * sb)
    if norm < 1e-9:
        raise ConfigError(
            "state is not normalizable: the interference term cancels the "
            "joint density everywhere (sign/mask combination is fully destructive)"
        )
    return BiphotonState(
        env_a=env_a,
        env_b=env_b,
        mask_a=mask_a,
        mask_b=mask_b,
        sign=sign,
        visibility=visibility,
        grid_a=grid_a,
        grid_b=grid_b,
        moments_a=(ta, ca, sa),
        moments_b=(tb, cb, sb),
        norm=norm,
    )


def oam_state(
    m_a: int,
    m_b: int,
    sign: int = +1,
    visibility: float = 1.0,
    waist: float = 1.0,
    grid: Grid = DEFAULT_GRID,
) -> BiphotonState:
    """Helical-phase pair with ring envelopes matched to the charges.

    sign=+1 pairs charge m_a with idler charge m_b (co-rotating coincidence
    pattern, fringe ridges with positive slope); sign=-1 flips the idler
    charge, giving counter-rotating ridges with negative slope. Both give
    2*m_a fringes per turn in the signal angle.
    """
    m_a = int(m_a)
    m_b = int(m_b)
    idler_charge = m_b if sign == +1 else -m_b
    return make_state(
        env_a=ring_envelope(waist, abs(m_a)),
        env_b=ring_envelope(waist, abs(m_b)),
        mask_a=helical_phase(m_a),
        mask_b=helical_phase(idler_charge),
        sign=sign,
        visibility=visibility,
        grid_a=grid,
        grid_b=grid,
    )


# module-level functional aliases matching the operation names
def wpf_amplitude(state: BiphotonState, x, y, xp, yp):
    return state.pair_amplitude(x, y, xp, yp)


def joint_density(state: BiphotonState, x, y, xp, yp):
    return state.joint_density(x, y, xp, yp)


def analytic_g2(state: BiphotonState, x, y, xp, yp):
    return state.analytic_g2(x, y, xp, yp)


def marginal_density(state: BiphotonState, which: str) -> DensityMap:
    return state.marginal_density(which)
