"""Hot numeric kernels with two interchangeable backends.

Every kernel exists twice: a pure-numpy reference implementation
(``*_numpy``) and a numba ``@njit`` version compiled from the same scalar
recurrences. The active backend is chosen once at import time:

  CASTER_NUMBA=0   force the numpy fallback
  CASTER_NUMBA=1   require numba (ImportError if missing)
  unset / auto     use numba when importable, else fall back silently

``benchmarks/bench_kernels.py`` times both paths on realistic workloads.
"""

from __future__ import annotations

import math
import os

import numpy as np

TWO_PI = 2.0 * math.pi
FOUR_PI = 4.0 * math.pi
FOUR_PI_CUBED = FOUR_PI**3

_FLAG = os.environ.get("CASTER_NUMBA", "auto").strip().lower()


def _want_numba() -> bool:
    if _FLAG in ("0", "off", "false", "no"):
        return False
    if _FLAG in ("1", "on", "true", "yes", "require"):
        return True
    return True  # auto: try, fall back on ImportError


# ---------------------------------------------------------------------------
# pure-numpy reference implementations
# ---------------------------------------------------------------------------

def clip_rays_numpy(pos, edge_i, edge_j, tx, rx, wavelength, carrier_hz,
                    light_speed, radius_ratio, gain_t, gain_r):
    """Rays scattered off every primitive of every snapshot.

    pos        : (T, 21, 3) keypoint positions, meters
    edge_i/j   : (N,) keypoint indices forming each primitive
    gain_t/r   : (T, N) antenna gains toward each primitive center
    returns (amplitude (T, N) complex, delay (T, N) s, axis_len (T, N) m)

    axis_len is the full keypoint separation 2*l_n; callers reject
    snapshots where it collapses below the degeneracy threshold.
    """
    def dot3(a, b):
        return a[..., 0] * b[..., 0] + a[..., 1] * b[..., 1] + a[..., 2] * b[..., 2]

    pi = pos[:, edge_i, :]
    pj = pos[:, edge_j, :]
    d = pi - pj
    seg = np.sqrt(dot3(d, d))
    degenerate = seg <= 0.0
    seg_safe = np.where(degenerate, 1.0, seg)
    center = 0.5 * (pi + pj)
    half_long = 0.5 * seg_safe
    half_short = radius_ratio * half_long
    axis = d / seg_safe[..., None]

    dt = center - tx
    dr = center - rx
    r_t = np.sqrt(dot3(dt, dt))
    r_r = np.sqrt(dot3(dr, dr))

    ct = np.clip(dot3(dt, axis) / r_t, -1.0, 1.0)
    cr = np.clip(dot3(dr, axis) / r_r, -1.0, 1.0)
    st = np.sqrt(np.maximum(0.0, 1.0 - ct * ct))
    sr = np.sqrt(np.maximum(0.0, 1.0 - cr * cr))

    # transmitter/receiver projected on the plane through the center and
    # perpendicular to the long axis; degenerate on-axis geometry gets
    # cos(delta_phi) = 1 by continuity
    perp_t = dt - axis * (r_t * ct)[..., None]
    perp_r = dr - axis * (r_r * cr)[..., None]
    n_t = np.sqrt(dot3(perp_t, perp_t))
    n_r = np.sqrt(dot3(perp_r, perp_r))
    denom = n_t * n_r
    safe = denom > 1e-24
    cdp = np.where(safe, np.clip(dot3(perp_t, perp_r) / np.where(safe, denom, 1.0),
                                 -1.0, 1.0), 1.0)

    sigma = _rcs_from_angles_numpy(ct, st, cr, sr, cdp, half_long, half_short)

    mag = wavelength * np.sqrt(
        sigma * gain_t * gain_r / (FOUR_PI_CUBED * (r_t * r_r) ** 2)
    )
    delay = (r_t + r_r) / light_speed
    cycles = carrier_hz * delay
    phase = -TWO_PI * (cycles - np.floor(cycles))
    amp = mag * (np.cos(phase) + 1j * np.sin(phase))
    amp[degenerate] = 0.0
    delay[degenerate] = 0.0
    return amp, delay, seg


def _rcs_from_angles_numpy(ct, st, cr, sr, cdp, half_long, half_short):
    r2 = half_short * half_short
    l2 = half_long * half_long
    num = FOUR_PI * r2 * r2 * l2 * ((1.0 + ct * cr) * cdp + st * sr) ** 2
    den_in = r2 * (st * st + sr * sr + 2.0 * st * sr * cdp) + l2 * (ct + cr) ** 2
    den = den_in * den_in
    return np.where(den > 0.0, num / np.where(den > 0.0, den, 1.0), 0.0)


def one_euro_numpy(x, dt, min_cutoff, beta, gamma):
    """Adaptive low-pass filter over the leading (time) axis.

    x : (K, C) scalar channels sampled at interval dt.
    First sample passes through, velocity estimate starts at zero.
    """
    k_frames, _ = x.shape
    out = np.empty_like(x)
    out[0] = x[0]
    xh = x[0].copy()
    vh = np.zeros_like(xh)
    for k in range(1, k_frames):
        v = (x[k] - xh) / dt
        vh = gamma * v + (1.0 - gamma) * vh
        alpha = 1.0 / (1.0 + 1.0 / (TWO_PI * dt * (min_cutoff + beta * np.abs(vh))))
        xh = alpha * x[k] + (1.0 - alpha) * xh
        out[k] = xh
    return out


def spline_coeffs_numpy(t, y):
    """Second derivatives of the natural cubic spline through (t, y).

    t : (K,) strictly increasing knots; y : (K, C) channel values.
    Natural boundary: zero curvature at both ends.
    """
    k_knots, n_ch = y.shape
    m = np.zeros((k_knots, n_ch))
    if k_knots < 3:
        return m
    h = np.diff(t)
    # Thomas algorithm on the interior rows, vectorized across channels
    n = k_knots - 2
    diag = (h[:-1] + h[1:]) / 3.0
    lower = h[1:-1] / 6.0
    upper = h[1:-1] / 6.0
    rhs = (y[2:] - y[1:-1]) / h[1:, None] - (y[1:-1] - y[:-2]) / h[:-1, None]
    cp = np.empty(n)
    dp = np.empty((n, n_ch))
    cp[0] = upper[0] / diag[0] if n > 1 else 0.0
    dp[0] = rhs[0] / diag[0]
    for i in range(1, n):
        w = diag[i] - lower[i - 1] * cp[i - 1]
        cp[i] = upper[i] / w if i < n - 1 else 0.0
        dp[i] = (rhs[i] - lower[i - 1] * dp[i - 1]) / w
    m[n] = dp[n - 1]
    for i in range(n - 2, -1, -1):
        m[i + 1] = dp[i] - cp[i] * m[i + 2]
    return m


def spline_eval_numpy(t, y, m, idx, tq):
    """Evaluate the spline at query times tq; idx[i] is the knot interval."""
    h = t[idx + 1] - t[idx]
    s = tq - t[idx]
    y0 = y[idx]
    y1 = y[idx + 1]
    m0 = m[idx]
    m1 = m[idx + 1]
    hn = h[:, None]
    sn = s[:, None]
    b = (y1 - y0) / hn - hn / 6.0 * (2.0 * m0 + m1)
    return y0 + sn * (b + sn * (m0 / 2.0 + sn * (m1 - m0) / (6.0 * hn)))


# ---------------------------------------------------------------------------
# numba versions (same recurrences, scalar loops)
# ---------------------------------------------------------------------------

def _build_numba():
    from numba import njit

    @njit(cache=True)
    def clip_rays_nb(pos, edge_i, edge_j, tx, rx, wavelength, carrier_hz,
                     light_speed, radius_ratio, gain_t, gain_r):
        n_t_snap = pos.shape[0]
        n_prim = edge_i.shape[0]
        amp = np.empty((n_t_snap, n_prim), np.complex128)
        delay = np.empty((n_t_snap, n_prim), np.float64)
        seg_len = np.empty((n_t_snap, n_prim), np.float64)
        for t in range(n_t_snap):
            for n in range(n_prim):
                i = edge_i[n]
                j = edge_j[n]
                dx = pos[t, i, 0] - pos[t, j, 0]
                dy = pos[t, i, 1] - pos[t, j, 1]
                dz = pos[t, i, 2] - pos[t, j, 2]
                seg = math.sqrt(dx * dx + dy * dy + dz * dz)
                seg_len[t, n] = seg
                if seg <= 0.0:
                    amp[t, n] = 0.0
                    delay[t, n] = 0.0
                    continue
                cx = 0.5 * (pos[t, i, 0] + pos[t, j, 0])
                cy = 0.5 * (pos[t, i, 1] + pos[t, j, 1])
                cz = 0.5 * (pos[t, i, 2] + pos[t, j, 2])
                ax = dx / seg
                ay = dy / seg
                az = dz / seg
                half_long = 0.5 * seg
                half_short = radius_ratio * half_long

                dtx = cx - tx[0]
                dty = cy - tx[1]
                dtz = cz - tx[2]
                drx = cx - rx[0]
                dry = cy - rx[1]
                drz = cz - rx[2]
                r_t = math.sqrt(dtx * dtx + dty * dty + dtz * dtz)
                r_r = math.sqrt(drx * drx + dry * dry + drz * drz)

                ct = (dtx * ax + dty * ay + dtz * az) / r_t
                cr = (drx * ax + dry * ay + drz * az) / r_r
                ct = min(1.0, max(-1.0, ct))
                cr = min(1.0, max(-1.0, cr))
                st = math.sqrt(max(0.0, 1.0 - ct * ct))
                sr = math.sqrt(max(0.0, 1.0 - cr * cr))

                ptx = dtx - ax * (r_t * ct)
                pty = dty - ay * (r_t * ct)
                ptz = dtz - az * (r_t * ct)
                prx = drx - ax * (r_r * cr)
                pry = dry - ay * (r_r * cr)
                prz = drz - az * (r_r * cr)
                n_tp = math.sqrt(ptx * ptx + pty * pty + ptz * ptz)
                n_rp = math.sqrt(prx * prx + pry * pry + prz * prz)
                if n_tp * n_rp > 1e-24:
                    cdp = (ptx * prx + pty * pry + ptz * prz) / (n_tp * n_rp)
                    cdp = min(1.0, max(-1.0, cdp))
                else:
                    cdp = 1.0

                r2 = half_short * half_short
                l2 = half_long * half_long
                fac = (1.0 + ct * cr) * cdp + st * sr
                num = FOUR_PI * r2 * r2 * l2 * fac * fac
                den_in = r2 * (st * st + sr * sr + 2.0 * st * sr * cdp) \
                    + l2 * (ct + cr) ** 2
                den = den_in * den_in
                sigma = num / den if den > 0.0 else 0.0

                mag = wavelength * math.sqrt(
                    sigma * gain_t[t, n] * gain_r[t, n]
                    / (FOUR_PI_CUBED * (r_t * r_r) ** 2))
                tau = (r_t + r_r) / light_speed
                cycles = carrier_hz * tau
                phase = -TWO_PI * (cycles - math.floor(cycles))
                amp[t, n] = mag * complex(math.cos(phase), math.sin(phase))
                delay[t, n] = tau
        return amp, delay, seg_len

    @njit(cache=True)
    def one_euro_nb(x, dt, min_cutoff, beta, gamma):
        k_frames, n_ch = x.shape
        out = np.empty_like(x)
        for c in range(n_ch):
            xh = x[0, c]
            vh = 0.0
            out[0, c] = xh
            for k in range(1, k_frames):
                v = (x[k, c] - xh) / dt
                vh = gamma * v + (1.0 - gamma) * vh
                alpha = 1.0 / (1.0 + 1.0 / (TWO_PI * dt * (min_cutoff + beta * abs(vh))))
                xh = alpha * x[k, c] + (1.0 - alpha) * xh
                out[k, c] = xh
        return out

    @njit(cache=True)
    def spline_coeffs_nb(t, y):
        k_knots, n_ch = y.shape
        m = np.zeros((k_knots, n_ch))
        if k_knots < 3:
            return m
        n = k_knots - 2
        cp = np.empty(n)
        dp = np.empty((n, n_ch))
        for c in range(n_ch):
            for i in range(n):
                h0 = t[i + 1] - t[i]
                h1 = t[i + 2] - t[i + 1]
                diag = (h0 + h1) / 3.0
                rhs = (y[i + 2, c] - y[i + 1, c]) / h1 - (y[i + 1, c] - y[i, c]) / h0
                if i == 0:
                    cp[0] = (h1 / 6.0) / diag if n > 1 else 0.0
                    dp[0, c] = rhs / diag
                else:
                    lower = h0 / 6.0
                    w = diag - lower * cp[i - 1]
                    if i < n - 1:
                        cp[i] = (h1 / 6.0) / w
                    else:
                        cp[i] = 0.0
                    dp[i, c] = (rhs - lower * dp[i - 1, c]) / w
            m[n, c] = dp[n - 1, c]
            for i in range(n - 2, -1, -1):
                m[i + 1, c] = dp[i, c] - cp[i] * m[i + 2, c]
        return m

    @njit(cache=True)
    def spline_eval_nb(t, y, m, idx, tq):
        n_q = tq.shape[0]
        n_ch = y.shape[1]
        out = np.empty((n_q, n_ch))
        for q in range(n_q):
            k = idx[q]
            h = t[k + 1] - t[k]
            s = tq[q] - t[k]
            for c in range(n_ch):
                b = (y[k + 1, c] - y[k, c]) / h - h / 6.0 * (2.0 * m[k, c] + m[k + 1, c])
                out[q, c] = y[k, c] + s * (
                    b + s * (m[k, c] / 2.0 + s * (m[k + 1, c] - m[k, c]) / (6.0 * h)))
        return out

    return clip_rays_nb, one_euro_nb, spline_coeffs_nb, spline_eval_nb


USING_NUMBA = False
if _want_numba():
    try:
        clip_rays, one_euro, spline_coeffs, spline_eval = _build_numba()
        USING_NUMBA = True
    except ImportError:
        if _FLAG in ("1", "on", "true", "yes", "require"):
            raise
        clip_rays = clip_rays_numpy
        one_euro = one_euro_numpy
        spline_coeffs = spline_coeffs_numpy
        spline_eval = spline_eval_numpy
else:
    clip_rays = clip_rays_numpy
    one_euro = one_euro_numpy
    spline_coeffs = spline_coeffs_numpy
    spline_eval = spline_eval_numpy
