"""Closed-form coherence factors from the averaged effective fields.

Second-cumulant (Gaussian) truncation of <exp(i X)> for a large
uncorrelated bath gives

    thermal:   C = e^{i phi} exp[-(1/6) sum_k I_k(I_k+1) |h_k|^2 ]
    narrowed:  C = e^{i phi_n} exp[-(1/6) sum_k I_k(I_k+1) |h_k_perp|^2 ],

with h_k the free-evolution or echo field and h_k_perp its transverse
projection; for a narrowed product state the longitudinal component enters
only the phase through its exact first moment phi_n = phi + sum_k h_k^z m_k.

The echo's short-time limit is a quartic envelope exp[-(t/T)^4] whose
coefficient is the leading Taylor coefficient of the thermal echo exponent,
(1/T)^4 = (1/6) sum_k I_k(I_k+1) (A_k gamma_k bx_k)^2.

For spin-1/2 baths the averaged-generator coherence is also evaluated
without Gaussian truncation as an exact per-site product of

    cos(|h_k|/2) + 2 i m_k (h_k^z/|h_k|) sin(|h_k|/2),

each factor being the 2x2 matrix element <m|exp(i h.I)|m>.
"""

from __future__ import annotations

import numpy as np

from . import magnus
from .bath import NarrowedState
from .curves import FID, HAHN, CoherenceCurve
from .geometry import SiteTable
from .materials import ConfigurationError


class UnsupportedSpinError(ConfigurationError):
    """Operation restricted to spin-1/2 baths."""


_CHUNK = 200_000


def field_provider(protocol: str, grid: bool = False):
    """Effective-field provider for a protocol: f(A, gyro, bx, b, t) -> (hx, hy, hz).

    With grid=True the provider takes 1-D site arrays and a 1-D time array
    and evaluates on their outer product (recurrence-accelerated).
    """
    if protocol == FID:
        return magnus.fid_field_grid if grid else magnus.fid_field
    if protocol == HAHN:
        return magnus.hahn_field_grid if grid else magnus.hahn_field
    raise ConfigurationError(f"unknown protocol {protocol!r}")


def _phase(protocol, b, tau, frame):
    if protocol == FID and frame == "lab":
        return b * tau
    return np.zeros_like(tau)


def _site_chunks(n):
    for lo in range(0, n, _CHUNK):
        yield lo, min(lo + _CHUNK, n)


def gaussian_exponent(sites: SiteTable, protocol: str, b: float, t,
                      transverse_only: bool, m_values=None):
    """Decay exponent Gamma(t) (and the narrowed first-moment phase if m given).

    Gamma(t) = (1/6) sum_k w_k I_k(I_k+1) * (|h_k|^2 or |h_k_perp|^2).
    Returns (gamma, hz_moment) with hz_moment = sum_k w_k h_k^z m_k or None.
    """
    provider = field_provider(protocol, grid=True)
    t = np.asarray(t, dtype=float)
    gam = np.zeros(t.size)
    hz_m = np.zeros(t.size) if m_values is not None else None
    for lo, hi in _site_chunks(len(sites)):
        pref = (sites.weight[lo:hi] * sites.spin[lo:hi]
                * (sites.spin[lo:hi] + 1.0) / 6.0)[:, None]
        hx, hy, hz = provider(sites.coupling[lo:hi], sites.gyro[lo:hi],
                              sites.bx[lo:hi], b, t)
        w2 = hx * hx + hy * hy
        if not transverse_only:
            w2 = w2 + hz * hz
        gam += (pref * w2).sum(axis=0)
        if hz_m is not None:
            hz_m += ((sites.weight[lo:hi] * m_values[lo:hi])[:, None] * hz).sum(axis=0)
    return gam, hz_m


def thermal_gaussian(sites: SiteTable, protocol: str, b: float, t_evolve,
                     frame: str = "rotating") -> CoherenceCurve:
    """Gaussian coherence for an infinite-temperature bath.

    `t_evolve` is the free-evolution time for FID and the pulse time for the
    echo (readout at 2t).
    """
    t = np.asarray(t_evolve, dtype=float)
    gam, _ = gaussian_exponent(sites, protocol, b, t, transverse_only=False)
    tau = t if protocol == FID else 2.0 * t
    vals = np.exp(-gam + 1j * _phase(protocol, b, tau, frame))
    return CoherenceCurve(protocol=protocol, tau=tau, values=vals,
                          t_pulse=None if protocol == FID else t,
                          frame=frame, method="gaussian", meta=dict(sites.meta))


def narrowed_gaussian(sites: SiteTable, state, protocol: str, b: float,
                      t_evolve, frame: str = "rotating") -> CoherenceCurve:
    """Gaussian coherence for a narrowed bath: transverse fluctuations only.

    `state` must be a NarrowedState on the same table (its m_k feed the
    first-moment phase); pass None on continuum tables to get the magnitude
    with the bath phase omitted.
    """
    t = np.asarray(t_evolve, dtype=float)
    m = None
    if state is not None:
        if not isinstance(state, NarrowedState):
            raise ConfigurationError("narrowed_gaussian needs a NarrowedState (or None)")
        if state.m.size != len(sites):
            raise ConfigurationError("state and site table lengths differ")
        m = state.m
    gam, hz_m = gaussian_exponent(sites, protocol, b, t,
                                  transverse_only=True, m_values=m)
    tau = t if protocol == FID else 2.0 * t
    phase = _phase(protocol, b, tau, frame)
    if hz_m is not None:
        phase = phase + hz_m
    meta = dict(sites.meta)
    if m is None:
        meta["phase"] = "bath phase omitted (no narrowed state attached)"
    vals = np.exp(-gam + 1j * phase)
    return CoherenceCurve(protocol=protocol, tau=tau, values=vals,
                          t_pulse=None if protocol == FID else t,
                          frame=frame, method="gaussian", meta=meta)


def quartic_rate(sites: SiteTable) -> float:
    """Site-resolved (1/T)^4 coefficient of the echo's short-time envelope."""
    w = (sites.weight * sites.spin * (sites.spin + 1.0)
         * (sites.coupling * sites.gyro * sites.bx) ** 2)
    return float(w.sum() / 6.0)


def hahn_short_time(sites: SiteTable, t_pulse, frame: str = "rotating") -> CoherenceCurve:
    """Short-time echo envelope C(2t) = exp[-(t/T)^4]."""
    t = np.asarray(t_pulse, dtype=float)
    c4 = quartic_rate(sites)
    vals = np.exp(-c4 * t ** 4).astype(complex)
    meta = dict(sites.meta)
    meta["t2e_s"] = c4 ** -0.25 if c4 > 0 else float("inf")
    return CoherenceCurve(protocol=HAHN, tau=2.0 * t, values=vals, t_pulse=t,
                          frame=frame, method="short_time", meta=meta)


def half_spin_site_factor(hx, hy, hz, m):
    """<m|exp(i h.I)|m> for I = 1/2: cos(|h|/2) + 2 i m (hz/|h|) sin(|h|/2)."""
    h = np.sqrt(hx * hx + hy * hy + hz * hz)
    half = 0.5 * h
    # sin(|h|/2)/|h| -> 1/2 as |h| -> 0
    small = h < 1e-12
    ratio = np.where(small, 0.5, np.sin(half) / np.where(small, 1.0, h))
    return np.cos(half) + 2j * m * hz * ratio


def nongaussian_half_spin(sites: SiteTable, state: NarrowedState, protocol: str,
                          b: float, t_evolve, frame: str = "rotating") -> CoherenceCurve:
    """Averaged-generator coherence without Gaussian truncation (I = 1/2 only).

    Exact per-site product over the effective fields; log-domain
    accumulation as in the exact engine.
    """
    if not np.all(sites.spin == 0.5):
        raise UnsupportedSpinError("non-Gaussian product requires all I = 1/2")
    if not isinstance(state, NarrowedState) or state.m.size != len(sites):
        raise ConfigurationError("need a NarrowedState matching the site table")
    provider = field_provider(protocol, grid=True)
    t = np.asarray(t_evolve, dtype=float)
    acc_log = np.zeros(t.size)
    acc_ph = np.zeros(t.size)
    for lo, hi in _site_chunks(len(sites)):
        hx, hy, hz = provider(sites.coupling[lo:hi], sites.gyro[lo:hi],
                              sites.bx[lo:hi], b, t)
        f = half_spin_site_factor(hx, hy, hz, state.m[lo:hi, None])
        w = sites.weight[lo:hi, None]
        with np.errstate(divide="ignore"):
            acc_log += (w * np.log(np.abs(f))).sum(axis=0)
        acc_ph += (w * np.angle(f)).sum(axis=0)
    tau = t if protocol == FID else 2.0 * t
    acc_ph += _phase(protocol, b, tau, frame)
    vals = np.where(acc_log < -200.0, 0.0, np.exp(acc_log + 1j * acc_ph))
    return CoherenceCurve(protocol=protocol, tau=tau, values=vals,
                          t_pulse=None if protocol == FID else t,
                          frame=frame, method="nongaussian", meta=dict(sites.meta))
