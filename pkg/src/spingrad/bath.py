"""Initial nuclear-spin states.

Narrowed states are single product states of I^z eigenstates with magnetic
quantum numbers m_k drawn i.i.d. uniformly from {-I_k ... I_k}; the
longitudinal nuclear field sum_k A_k m_k is then an exact eigenvalue.

Infinite-temperature thermal states are modeled as uniform mixtures of M
product spin-coherent states |I, I> rotated to directions drawn uniformly
on the unit sphere, independently for each site and realization.  M is
grown by doubling until the ensemble-averaged coherence stops moving.
"""

from __future__ import annotations

from dataclasses import dataclass, field as dc_field

import numpy as np

from . import rng
from .geometry import SiteTable


@dataclass
class NarrowedState:
    m: np.ndarray          # magnetic quantum numbers, one per site
    h_z: float             # sum_k A_k m_k (rad/s)
    seed: int = 0

    @property
    def n_realizations(self):
        return 1


@dataclass
class ThermalEnsemble:
    cos_theta: np.ndarray  # (M, K)
    phi: np.ndarray        # (M, K)
    seed: int = 0
    convergence_tol: float = 0.01

    @property
    def n_realizations(self):
        return self.cos_theta.shape[0]

    @property
    def weights(self):
        m = self.n_realizations
        return np.full(m, 1.0 / m)


class NonConvergenceError(RuntimeError):
    """Ensemble average failed to converge before the realization cap."""

    def __init__(self, message, m_last, curve_prev, curve_last):
        super().__init__(message)
        self.m_last = m_last
        self.curve_prev = curve_prev
        self.curve_last = curve_last


def sample_narrowed(sites: SiteTable, seed: int = 0) -> NarrowedState:
    """Draw m_k i.i.d. uniform over the 2I_k+1 levels of each site."""
    if len(sites) == 0:
        raise ValueError("site table is empty")
    levels = np.rint(2.0 * sites.spin + 1.0).astype(int)
    u = rng.uniform(seed, rng.STREAM_NARROWED, np.arange(len(sites), dtype=np.uint64))
    m = -sites.spin + np.minimum((u * levels).astype(int), levels - 1)
    h_z = float((sites.weight * sites.coupling * m).sum())
    return NarrowedState(m=m, h_z=h_z, seed=seed)


def sample_thermal(sites: SiteTable, m_realizations: int, seed: int = 0,
                   j_offset: int = 0) -> ThermalEnsemble:
    """Draw M product coherent-state direction sets, uniform on the sphere.

    Directions are keyed by (seed, realization index, site), so extending an
    ensemble reproduces the earlier realizations bit for bit.
    """
    if m_realizations < 1:
        raise ValueError("need at least one realization")
    K = len(sites)
    k = np.arange(K, dtype=np.uint64)
    ct = np.empty((m_realizations, K))
    ph = np.empty((m_realizations, K))
    for j in range(m_realizations):
        jj = j + j_offset
        ct[j] = rng.uniform_symmetric(seed, rng.STREAM_THERMAL_COS, k, extra=jj)
        ph[j] = rng.uniform_angle(seed, rng.STREAM_THERMAL_PHI, k, extra=jj)
    return ThermalEnsemble(cos_theta=ct, phi=ph, seed=seed)


def converge_ensemble(evaluate, sites: SiteTable, seed: int = 0,
                      tol: float = 0.01, m_start: int = 25,
                      m_cap: int = 6400):
    """Double M until sup_t |C_2M - C_M| < tol * sup_t |C_M|.

    `evaluate(ensemble) -> complex ndarray` computes the ensemble-averaged
    coherence on a fixed time grid.  Returns (terminal M, converged curve).
    """
    if tol < 0:
        raise ValueError("tol must be >= 0")
    m = m_start
    ens = sample_thermal(sites, m, seed)
    c_prev = np.asarray(evaluate(ens))
    c_next = c_prev
    while 2 * m <= m_cap:
        extra = sample_thermal(sites, m, seed, j_offset=m)
        c_extra = np.asarray(evaluate(extra))
        c_next = 0.5 * (c_prev + c_extra)   # mean over 2M reuses the first M
        err = np.abs(c_next - c_prev).max()
        ref = np.abs(c_prev).max()
        if err < tol * ref:
            return 2 * m, c_next
        m *= 2
        c_prev = c_next
    raise NonConvergenceError(
        f"no convergence at M = {m} (tol = {tol})", m, c_prev, c_next)


def coherent_state_vectors(two_i: int, cos_theta: np.ndarray, phi: np.ndarray) -> np.ndarray:
    """Spin coherent states |theta, phi> = Rz(phi) Ry(theta) |I, I> as vectors.

    Basis ordering m = I, I-1, ..., -I.  Closed form via the spin-J rotation
    of the maximal state: amplitudes are binomial in cos/sin of theta/2.

    Returns an array (..., 2I+1) broadcast over the direction arrays.
    """
    cos_theta = np.asarray(cos_theta, dtype=float)
    phi = np.asarray(phi, dtype=float)
    dim = two_i + 1
    i_spin = two_i / 2.0
    half = np.clip((1.0 + cos_theta) / 2.0, 0.0, 1.0)   # cos^2(theta/2)
    c = np.sqrt(half)
    s = np.sqrt(1.0 - half)
    # |theta,phi> = sum_m sqrt(C(2I, I-m)) c^(I+m) s^(I-m) e^{-i m phi} |m>
    from math import comb
    m_vals = i_spin - np.arange(dim)
    amps = np.empty(cos_theta.shape + (dim,), dtype=complex)
    for idx, m in enumerate(m_vals):
        n_down = int(round(i_spin - m))
        coeff = np.sqrt(comb(two_i, n_down))
        amps[..., idx] = (coeff * c ** (two_i - n_down) * s ** n_down
                          * np.exp(-1j * m * phi))
    return amps
