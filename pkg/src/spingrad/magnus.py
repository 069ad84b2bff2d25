"""Leading-order average-Hamiltonian effective fields h_k(t).

In the interaction picture of the nuclear Zeeman terms, the secular
hyperfine coupling becomes S^z sum_k A_k v_k(t).I_k with

    v_k(t) = [ nx nz (1 - cos w t),  nx sin w t,  nz^2 + nx^2 cos w t ],

where w_k = gamma_k sqrt(b^2 + bx_k^2) and (nx, nz) = gamma_k (bx_k, b)/w_k.
Time-averaging the generator gives, per site, a c-number field:

  free evolution (0..t):
    h = A [ nx nz (t - sin wt / w),  nx (1 - cos wt)/w,  nz^2 t + nx^2 sin wt / w ]

  echo (0..t minus t..2t, pi pulses at t and 2t):
    h = (A gamma bx / w^2) [ nz fz, -fy, -nx fz ],
    fy = 2 cos wt - cos 2wt - 1,   fz = sin 2wt - 2 sin wt.

Small w t uses series forms of the near-cancelling trig combinations; the
echo's t^4 short-time behavior lives in exactly those residues.
"""

from __future__ import annotations

import numpy as np

_X_SMALL = 1e-2  # series/trig switchover; series truncation error ~ x^8


def kinematics(gyro, bx, b):
    """Per-site precession frequency w and unit axis components (nx, nz).

    Degenerate sites (w = 0, i.e. b = bx = 0) get the conventional axis
    (0, 0, 1); every downstream expression is continuous in that limit.
    """
    gyro = np.asarray(gyro, dtype=float)
    bx = np.asarray(bx, dtype=float)
    omega = gyro * np.hypot(b, bx)
    safe = np.where(omega > 0, omega, 1.0)
    nx = np.where(omega > 0, gyro * bx / safe, 0.0)
    nz = np.where(omega > 0, gyro * b / safe, 1.0)
    return omega, nx, nz


def v_kinematic(nx, nz, omega, t):
    """Interaction-picture direction vector v(t); mainly a test/debug hook."""
    wt = omega * t
    vx = nx * nz * (1.0 - np.cos(wt))
    vy = nx * np.sin(wt)
    vz = nz**2 + nx**2 * np.cos(wt)
    return vx, vy, vz


def _t_minus_sin(omega, t, x, sin_x):
    """t - sin(wt)/w, stable for wt -> 0 (-> w^2 t^3/6)."""
    small = np.abs(x) < _X_SMALL
    x2 = x * x
    series = t * (x2 / 6.0) * (1.0 - x2 / 20.0 * (1.0 - x2 / 42.0))
    with np.errstate(divide="ignore", invalid="ignore"):
        direct = t - sin_x / np.where(omega == 0, 1.0, omega)
    return np.where(small, series, direct)


def _one_minus_cos_over_w(omega, t, x, cos_x):
    """(1 - cos(wt))/w, stable for wt -> 0 (-> w t^2/2)."""
    small = np.abs(x) < _X_SMALL
    x2 = x * x
    series = t * (x / 2.0) * (1.0 - x2 / 12.0 * (1.0 - x2 / 30.0))
    with np.errstate(divide="ignore", invalid="ignore"):
        direct = (1.0 - cos_x) / np.where(omega == 0, 1.0, omega)
    return np.where(small, series, direct)


def _sin_over_w(omega, t, x, sin_x):
    """sin(wt)/w, stable for wt -> 0 (-> t)."""
    small = np.abs(x) < _X_SMALL
    x2 = x * x
    series = t * (1.0 - x2 / 6.0 * (1.0 - x2 / 20.0))
    with np.errstate(divide="ignore", invalid="ignore"):
        direct = sin_x / np.where(omega == 0, 1.0, omega)
    return np.where(small, series, direct)


def _echo_fy(x, sin_x, cos_x):
    """fy(x) = 2 cos x - cos 2x - 1  (= x^2 - 7x^4/12 + 31x^6/360 - ...)."""
    small = np.abs(x) < _X_SMALL
    x2 = x * x
    series = x2 * (1.0 - (7.0 / 12.0) * x2 * (1.0 - (31.0 / 210.0) * x2))
    direct = 2.0 * cos_x - (2.0 * cos_x * cos_x - 1.0) - 1.0
    return np.where(small, series, direct)


def _echo_fz(x, sin_x, cos_x):
    """fz(x) = sin 2x - 2 sin x  (= -x^3 + x^5/4 - x^7/40 + ...)."""
    small = np.abs(x) < _X_SMALL
    x2 = x * x
    series = -x2 * x * (1.0 - (x2 / 4.0) * (1.0 - x2 / 10.0))
    direct = 2.0 * sin_x * cos_x - 2.0 * sin_x
    return np.where(small, series, direct)


def echo_fy(x):
    x = np.asarray(x, dtype=float)
    return _echo_fy(x, np.sin(x), np.cos(x))


def echo_fz(x):
    x = np.asarray(x, dtype=float)
    return _echo_fz(x, np.sin(x), np.cos(x))


def uniform_step(t) -> float | None:
    """Grid spacing if `t` is (close enough to) uniformly spaced, else None."""
    t = np.asarray(t, dtype=float)
    if t.ndim != 1 or t.size < 3:
        return None
    d = np.diff(t)
    if np.all(np.abs(d - d[0]) <= 1e-9 * abs(d[0])):
        return float(d[0])
    return None


def trig_outer(omega, t):
    """(sin, cos) of outer(omega, t), via phase recurrence on uniform grids.

    The recurrence replaces per-element sin/cos with one complex multiply;
    accumulated rounding is ~len(t) ulp, negligible at the grid sizes used.
    """
    omega = np.asarray(omega, dtype=float)
    t = np.asarray(t, dtype=float)
    dt = uniform_step(t)
    if dt is None:
        x = np.multiply.outer(omega, t)
        return np.sin(x), np.cos(x)
    z = np.empty((omega.size, t.size), dtype=complex)
    z[:, 0] = np.exp(1j * omega * t[0])
    step = np.exp(1j * omega * dt)
    for i in range(1, t.size):
        np.multiply(z[:, i - 1], step, out=z[:, i])
    return z.imag.copy(), z.real.copy()


def _fields_from_trig(protocol_hahn, coupling, gyro, bx, b, t, x, sin_x, cos_x):
    omega, nx, nz = kinematics(gyro, bx, b)
    if not protocol_hahn:
        hx = coupling * nx * nz * _t_minus_sin(omega, t, x, sin_x)
        hy = coupling * nx * _one_minus_cos_over_w(omega, t, x, cos_x)
        hz = coupling * (nz**2 * t + nx**2 * _sin_over_w(omega, t, x, sin_x))
        return hx, hy, hz
    with np.errstate(divide="ignore", invalid="ignore"):
        pref = np.where(omega > 0,
                        coupling * gyro * bx / np.where(omega == 0, 1.0, omega) ** 2,
                        0.0)
    fy = _echo_fy(x, sin_x, cos_x)
    fz = _echo_fz(x, sin_x, cos_x)
    return pref * nz * fz, -pref * fy, -pref * nx * fz


def fid_field(coupling, gyro, bx, b, t):
    """Free-evolution accumulated field 3-vector(s) h(t) in radians.

    All array arguments broadcast; returns (hx, hy, hz).
    """
    omega, _, _ = kinematics(gyro, bx, b)
    x = omega * t
    return _fields_from_trig(False, coupling, gyro, bx, b, t,
                             x, np.sin(x), np.cos(x))


def hahn_field(coupling, gyro, bx, b, t):
    """Echo accumulated field h(t) (pi pulses at t and 2t); returns (hx, hy, hz).

    The overall scale is A_k gamma_k bx_k / w_k^2, fixed against the direct
    time integral of A_k v_k; every component vanishes when bx = 0.
    """
    omega, _, _ = kinematics(gyro, bx, b)
    x = omega * t
    return _fields_from_trig(True, coupling, gyro, bx, b, t,
                             x, np.sin(x), np.cos(x))


def _small_entries(omega, t):
    """Indices (rows, cols, x_small, t_small) where |w t| < the series cutoff."""
    x = np.multiply.outer(omega, t)
    rows, cols = np.nonzero(np.abs(x) < _X_SMALL)
    return rows, cols, x[rows, cols], t[cols]


def fid_field_grid(coupling, gyro, bx, b, t):
    """fid_field on the outer grid (sites) x (times), recurrence-accelerated.

    Equivalent to the broadcast form; the near-cancelling trig combinations
    are patched with their series on the (few) entries with small w t.
    """
    t = np.asarray(t, dtype=float)
    omega, nx, nz = kinematics(gyro, bx, b)
    sin_x, cos_x = trig_outer(omega, t)
    inv_w = np.divide(1.0, omega, out=np.zeros_like(omega), where=omega > 0)
    g1 = t[None, :] - sin_x * inv_w[:, None]       # t - sin(wt)/w
    g2 = (1.0 - cos_x) * inv_w[:, None]            # (1 - cos(wt))/w
    g3 = sin_x * inv_w[:, None]                    # sin(wt)/w
    rows, cols, xs, ts = _small_entries(omega, t)
    if rows.size:
        x2 = xs * xs
        g1[rows, cols] = ts * (x2 / 6.0) * (1.0 - x2 / 20.0 * (1.0 - x2 / 42.0))
        g2[rows, cols] = ts * (xs / 2.0) * (1.0 - x2 / 12.0 * (1.0 - x2 / 30.0))
        g3[rows, cols] = ts * (1.0 - x2 / 6.0 * (1.0 - x2 / 20.0))
    hx = (coupling * nx * nz)[:, None] * g1
    hy = (coupling * nx)[:, None] * g2
    hz = (coupling * nz * nz)[:, None] * t[None, :] + (coupling * nx * nx)[:, None] * g3
    return hx, hy, hz


def hahn_field_grid(coupling, gyro, bx, b, t):
    """hahn_field on the outer grid (sites) x (times), recurrence-accelerated."""
    t = np.asarray(t, dtype=float)
    omega, nx, nz = kinematics(gyro, bx, b)
    sin_x, cos_x = trig_outer(omega, t)
    fy = 2.0 * cos_x - (2.0 * cos_x * cos_x - 1.0) - 1.0
    fz = 2.0 * sin_x * cos_x - 2.0 * sin_x
    rows, cols, xs, _ = _small_entries(omega, t)
    if rows.size:
        x2 = xs * xs
        fy[rows, cols] = x2 * (1.0 - (7.0 / 12.0) * x2
                               * (1.0 - (31.0 / 210.0) * x2))
        fz[rows, cols] = -x2 * xs * (1.0 - (x2 / 4.0) * (1.0 - x2 / 10.0))
    with np.errstate(divide="ignore", invalid="ignore"):
        pref = np.where(omega > 0, coupling * gyro * bx
                        / np.where(omega == 0, 1.0, omega) ** 2, 0.0)
    return (pref * nz)[:, None] * fz, -pref[:, None] * fy, -(pref * nx)[:, None] * fz


def hahn_envelope_bound(coupling, gyro, bx, b):
    """Uniform-in-time bound on |h_echo|: 8 |A gamma bx| / w^2 per component."""
    omega, _, _ = kinematics(gyro, bx, b)
    with np.errstate(divide="ignore", invalid="ignore"):
        return np.where(omega > 0,
                        8.0 * np.abs(coupling * gyro * bx) / np.where(omega == 0, 1.0, omega) ** 2,
                        0.0)
