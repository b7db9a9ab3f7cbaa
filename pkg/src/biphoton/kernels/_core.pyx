# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled sampling core.

Scalar rejection loop drawing straight from a numpy BitGenerator
(PCG64) without Python-level overhead. Semantics mirror
``biphoton.kernels.pyref``; only the random-stream layout differs
(per-proposal here, per-batch there).
"""

from libc.math cimport cos, sin, floor, fmod, M_PI

from cpython.pycapsule cimport PyCapsule_GetPointer, PyCapsule_IsValid
from numpy.random cimport bitgen_t

import numpy as np

from ..errors import SamplerStallError

cdef double TWO_PI = 2.0 * M_PI
cdef long long RETRY_CAP = 1_000_000

COMPILED = True


cdef bitgen_t *_bitgen(object bit_generator) except NULL:
    capsule = bit_generator.capsule
    if not PyCapsule_IsValid(capsule, "BitGenerator"):
        raise ValueError("expected a numpy BitGenerator")
    return <bitgen_t *> PyCapsule_GetPointer(capsule, "BitGenerator")


cdef inline double _qlookup(const double[::1] q, double u) noexcept nogil:
    cdef Py_ssize_t n = q.shape[0]
    cdef double t = u * (n - 1)
    cdef Py_ssize_t i = <Py_ssize_t> t
    if i > n - 2:
        i = n - 2
    return q[i] + (t - i) * (q[i + 1] - q[i])


cdef inline double _phase(int kind, double m,
                          const double[::1] edges, const double[::1] values,
                          const double[:, ::1] raster, double half_w, double lo,
                          double r, double phi) noexcept nogil:
    cdef Py_ssize_t lo_i, hi_i, mid, n_rows, n_cols, row, col
    cdef double x, y
    if kind == 0:  # helical
        return m * phi
    if kind == 1:  # sector: searchsorted(edges, phi, side="right") - 1
        lo_i = 0
        hi_i = edges.shape[0]
        while lo_i < hi_i:
            mid = (lo_i + hi_i) // 2
            if edges[mid] <= phi:
                lo_i = mid + 1
            else:
                hi_i = mid
        mid = lo_i - 1
        if mid < 0:
            mid = 0
        elif mid > values.shape[0] - 1:
            mid = values.shape[0] - 1
        return values[mid]
    # bitmap: containing-pixel lookup, outside footprint -> lo
    n_rows = raster.shape[0]
    n_cols = raster.shape[1]
    x = r * cos(phi)
    y = r * sin(phi)
    col = <Py_ssize_t> floor((x + half_w) / (2.0 * half_w) * n_cols)
    row = <Py_ssize_t> floor((half_w - y) / (2.0 * half_w) * n_rows)
    if 0 <= col < n_cols and 0 <= row < n_rows:
        return raster[row, col]
    return lo


def sample_pairs(object tables, Py_ssize_t n, object rng):
    """n accepted pairs as polar arrays (r, phi, rp, phip)."""
    cdef const double[::1] q_a = tables.q_a
    cdef const double[::1] q_b = tables.q_b
    ma = tables.mask_a
    mb = tables.mask_b
    cdef int kind_a = ma.kind, kind_b = mb.kind
    cdef double hm_a = ma.m, hm_b = mb.m
    cdef const double[::1] edges_a = ma.edges, values_a = ma.values
    cdef const double[::1] edges_b = mb.edges, values_b = mb.values
    cdef const double[:, ::1] raster_a = ma.raster, raster_b = mb.raster
    cdef double bh_a = ma.half_width, lo_a = ma.phase_lo
    cdef double bh_b = mb.half_width, lo_b = mb.phase_lo
    cdef double sv = tables.sign_v

    out = np.empty((4, n), dtype=np.float64)
    cdef double[:, ::1] o = out
    bit_generator = rng.bit_generator
    cdef bitgen_t *bg = _bitgen(bit_generator)
    cdef Py_ssize_t ev
    cdef long long tries
    cdef double r, phi, rp, phip, pa, pb, u
    cdef int stalled = 0

    with bit_generator.lock, nogil:
        for ev in range(n):
            tries = 0
            while True:
                tries += 1
                if tries > RETRY_CAP:
                    stalled = 1
                    break
                r = _qlookup(q_a, bg.next_double(bg.state))
                phi = TWO_PI * bg.next_double(bg.state)
                rp = _qlookup(q_b, bg.next_double(bg.state))
                phip = TWO_PI * bg.next_double(bg.state)
                u = bg.next_double(bg.state)
                pa = _phase(kind_a, hm_a, edges_a, values_a, raster_a, bh_a, lo_a, r, phi)
                pb = _phase(kind_b, hm_b, edges_b, values_b, raster_b, bh_b, lo_b, rp, phip)
                if u < 0.5 * (1.0 + sv * cos(2.0 * (pa - pb))):
                    break
            if stalled:
                break
            o[0, ev] = r
            o[1, ev] = phi
            o[2, ev] = rp
            o[3, ev] = phip
    if stalled:
        raise SamplerStallError(
            f"rejection sampler stalled after {RETRY_CAP} proposals for one event"
        )
    return out[0], out[1], out[2], out[3]


def heralded_image(object tables, Py_ssize_t n_events, object herald, double cam_extent,
                   double efficiency, object rng, long long[:, ::1] counts):
    """Accumulate heralded signal detections into counts; returns (heralds, recorded)."""
    cdef const double[::1] q_a = tables.q_a
    cdef const double[::1] q_b = tables.q_b
    ma = tables.mask_a
    mb = tables.mask_b
    cdef int kind_a = ma.kind, kind_b = mb.kind
    cdef double hm_a = ma.m, hm_b = mb.m
    cdef const double[::1] edges_a = ma.edges, values_a = ma.values
    cdef const double[::1] edges_b = mb.edges, values_b = mb.values
    cdef const double[:, ::1] raster_a = ma.raster, raster_b = mb.raster
    cdef double bh_a = ma.half_width, lo_a = ma.phase_lo
    cdef double bh_b = mb.half_width, lo_b = mb.phase_lo
    cdef double sv = tables.sign_v
    cdef double center = herald[0], half = herald[1]
    cdef double r_min = herald[2], r_max = herald[3]

    bit_generator = rng.bit_generator
    cdef bitgen_t *bg = _bitgen(bit_generator)
    cdef Py_ssize_t ny = counts.shape[0], nx = counts.shape[1]
    cdef Py_ssize_t ev, ix, iy
    cdef long long n_heralds = 0, n_recorded = 0, tries
    cdef double r, phi, rp, phip, pa, pb, u, d, x, y
    cdef int stalled = 0

    with bit_generator.lock, nogil:
        for ev in range(n_events):
            tries = 0
            while True:
                tries += 1
                if tries > RETRY_CAP:
                    stalled = 1
                    break
                r = _qlookup(q_a, bg.next_double(bg.state))
                phi = TWO_PI * bg.next_double(bg.state)
                rp = _qlookup(q_b, bg.next_double(bg.state))
                phip = TWO_PI * bg.next_double(bg.state)
                u = bg.next_double(bg.state)
                pa = _phase(kind_a, hm_a, edges_a, values_a, raster_a, bh_a, lo_a, r, phi)
                pb = _phase(kind_b, hm_b, edges_b, values_b, raster_b, bh_b, lo_b, rp, phip)
                if u < 0.5 * (1.0 + sv * cos(2.0 * (pa - pb))):
                    break
            if stalled:
                break
            d = fmod(phip - center, TWO_PI)
            if d > M_PI:
                d -= TWO_PI
            elif d < -M_PI:
                d += TWO_PI
            if d < 0.0:
                d = -d
            if d <= half and rp >= r_min and rp <= r_max:
                n_heralds += 1
                if efficiency >= 1.0 or bg.next_double(bg.state) < efficiency:
                    x = r * cos(phi)
                    y = r * sin(phi)
                    ix = <Py_ssize_t> floor((x + cam_extent) / (2.0 * cam_extent) * nx)
                    iy = <Py_ssize_t> floor((y + cam_extent) / (2.0 * cam_extent) * ny)
                    if 0 <= ix < nx and 0 <= iy < ny:
                        counts[iy, ix] += 1
                        n_recorded += 1
    if stalled:
        raise SamplerStallError(
            f"rejection sampler stalled after {RETRY_CAP} proposals for one event"
        )
    return int(n_heralds), int(n_recorded)


def singles_image(object tables, Py_ssize_t n_events, double cam_extent,
                  double efficiency, object rng, long long[:, ::1] counts):
    """Accumulate unheralded signal detections; returns recorded count."""
    cdef const double[::1] q_a = tables.q_a
    cdef const double[::1] q_b = tables.q_b
    ma = tables.mask_a
    mb = tables.mask_b
    cdef int kind_a = ma.kind, kind_b = mb.kind
    cdef double hm_a = ma.m, hm_b = mb.m
    cdef const double[::1] edges_a = ma.edges, values_a = ma.values
    cdef const double[::1] edges_b = mb.edges, values_b = mb.values
    cdef const double[:, ::1] raster_a = ma.raster, raster_b = mb.raster
    cdef double bh_a = ma.half_width, lo_a = ma.phase_lo
    cdef double bh_b = mb.half_width, lo_b = mb.phase_lo
    cdef double sv = tables.sign_v

    bit_generator = rng.bit_generator
    cdef bitgen_t *bg = _bitgen(bit_generator)
    cdef Py_ssize_t ny = counts.shape[0], nx = counts.shape[1]
    cdef Py_ssize_t ev, ix, iy
    cdef long long n_recorded = 0, tries
    cdef double r, phi, rp, phip, pa, pb, u, x, y
    cdef int stalled = 0

    with bit_generator.lock, nogil:
        for ev in range(n_events):
            tries = 0
            while True:
                tries += 1
                if tries > RETRY_CAP:
                    stalled = 1
                    break
                r = _qlookup(q_a, bg.next_double(bg.state))
                phi = TWO_PI * bg.next_double(bg.state)
                rp = _qlookup(q_b, bg.next_double(bg.state))
                phip = TWO_PI * bg.next_double(bg.state)
                u = bg.next_double(bg.state)
                pa = _phase(kind_a, hm_a, edges_a, values_a, raster_a, bh_a, lo_a, r, phi)
                pb = _phase(kind_b, hm_b, edges_b, values_b, raster_b, bh_b, lo_b, rp, phip)
                if u < 0.5 * (1.0 + sv * cos(2.0 * (pa - pb))):
                    break
            if stalled:
                break
            if efficiency >= 1.0 or bg.next_double(bg.state) < efficiency:
                x = r * cos(phi)
                y = r * sin(phi)
                ix = <Py_ssize_t> floor((x + cam_extent) / (2.0 * cam_extent) * nx)
                iy = <Py_ssize_t> floor((y + cam_extent) / (2.0 * cam_extent) * ny)
                if 0 <= ix < nx and 0 <= iy < ny:
                    counts[iy, ix] += 1
                    n_recorded += 1
    if stalled:
        raise SamplerStallError(
            f"rejection sampler stalled after {RETRY_CAP} proposals for one event"
        )
    return int(n_recorded)
