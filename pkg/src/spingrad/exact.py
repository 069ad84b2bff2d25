"""Exact coherence factor as a product of per-site matrix elements.

Conditioned on the electron spin, each nucleus sees a static field tilted by

    phi_up/dn = atan2(gamma bx, gamma b +/- A/2),
    h_up/dn   = sqrt[(gamma bx)^2 + (gamma b +/- A/2)^2],

so the joint evolution factorizes site by site.  With R(phi) the rotation
about y, Lambda_s(t) = diag(exp(-i m h_s t)) and Q_dn = R(phi_dn - phi_up),
Q_up = Q_dn^dag, the per-site factors are matrix elements between the
initial nuclear state of

    free evolution:  Lambda_up^dag Q_dn Lambda_dn            (rotated frame)
    echo:            Lambda_up^dag Q_dn Lambda_dn^dag Q_up Lambda_up Q_dn Lambda_dn

with all Lambda at the pulse time.  Products over >=1e6 sites are
accumulated in the log domain (sum of log magnitudes + sum of phases) to
avoid underflow; the accumulation order is fixed (ascending k) so results
are bitwise reproducible.

A dense full-Hilbert-space integrator over the complete Hamiltonian serves
as an independent oracle for small spin-1/2 baths.
"""

from __future__ import annotations

import numpy as np

from . import magnus
from .bath import NarrowedState, ThermalEnsemble, coherent_state_vectors
from .curves import FID, HAHN, CoherenceCurve
from .geometry import SiteTable
from .materials import ConfigurationError

LOG_FLOOR = -200.0          # accumulated log-magnitude below this snaps to C = 0
_TARGET_ELEMS = 24_000_000  # per-chunk workspace budget (complex elements)


def spin_matrices(spin: float):
    """Angular-momentum matrices (Ix, Iy, Iz) in the m = I..-I basis."""
    two_i = round(2 * spin)
    if abs(2 * spin - two_i) > 1e-12 or two_i <= 0:
        raise ConfigurationError(f"spin must be a positive half-integer, got {spin}")
    dim = two_i + 1
    m = spin - np.arange(dim)
    iz = np.diag(m).astype(complex)
    # <m+1| I+ |m> = sqrt(I(I+1) - m(m+1))
    lp = np.zeros((dim, dim), dtype=complex)
    for a in range(1, dim):
        mm = m[a]
        lp[a - 1, a] = np.sqrt(spin * (spin + 1) - mm * (mm + 1))
    ix = (lp + lp.conj().T) / 2.0
    iy = (lp - lp.conj().T) / 2.0j
    return ix, iy, iz


def _y_eigensystem(dim: int):
    _, iy, _ = spin_matrices((dim - 1) / 2.0)
    evals, vecs = np.linalg.eigh(iy)
    return evals, vecs


def rotation_y_batch(angles: np.ndarray, dim: int) -> np.ndarray:
    """exp(-i Iy * angle) for an array of angles; returns (n_angles, dim, dim)."""
    evals, v = _y_eigensystem(dim)
    phases = np.exp(-1j * np.multiply.outer(np.asarray(angles, float), evals))
    return np.einsum("ab,cb,db->cad", v, phases, v.conj())


def site_angles(sites: SiteTable, b: float):
    """Tilt angles and precession frequencies (phi_up, phi_dn, h_up, h_dn)."""
    gx = sites.gyro * sites.bx
    zu = sites.gyro * b + sites.coupling / 2.0
    zd = sites.gyro * b - sites.coupling / 2.0
    return (np.arctan2(gx, zu), np.arctan2(gx, zd),
            np.hypot(gx, zu), np.hypot(gx, zd))


_PROD_BLOCK = 512   # fixed reduction block: bitwise-stable, no intra-block underflow


def _accumulate_product(acc_log, acc_ph, factors, weights):
    """Fold per-site factors (sites, T) into running log-magnitude and phase."""
    if weights is not None:   # weighted (continuum) products go via logs directly
        with np.errstate(divide="ignore"):
            la = np.log(np.abs(factors)) * weights[:, None]
        acc_log += la.sum(axis=0)
        acc_ph += (np.angle(factors) * weights[:, None]).sum(axis=0)
        return
    for lo in range(0, factors.shape[0], _PROD_BLOCK):
        p = factors[lo:lo + _PROD_BLOCK].prod(axis=0)
        with np.errstate(divide="ignore"):
            acc_log += np.log(np.abs(p))
        acc_ph += np.angle(p)


def _phase_grid(h, mvec, t, step):
    """exp(-i * h_c * m_a * t_T) as (sites, dim, T); recurrence on uniform grids."""
    if step is None:
        return np.exp(-1j * h[:, None, None] * mvec[None, :, None]
                      * t[None, None, :])
    hm = np.multiply.outer(h, mvec)
    out = np.empty(hm.shape + (t.size,), dtype=complex)
    out[:, :, 0] = np.exp(-1j * hm * t[0])
    zstep = np.exp(-1j * hm * step)
    for i in range(1, t.size):
        np.multiply(out[:, :, i - 1], zstep, out=out[:, :, i])
    return out


def _realization_coherence(sites, state, j, b, t, protocol):
    """log-domain product over all sites for one realization; returns C_j(t)."""
    t = np.asarray(t, dtype=float)
    n_t = t.size
    acc_log = np.zeros(n_t)
    acc_ph = np.zeros(n_t)
    phi_up, phi_dn, h_up, h_dn = site_angles(sites, b)
    step = magnus.uniform_step(t)

    for s in np.unique(sites.spin):
        sel = np.nonzero(sites.spin == s)[0]     # ascending k: fixed order
        dim = round(2 * s) + 1
        mvec = s - np.arange(dim)
        chunk = max(256, _TARGET_ELEMS // (dim * n_t + 1))
        for lo in range(0, sel.size, chunk):
            ids = sel[lo:lo + chunk]
            r_up = rotation_y_batch(phi_up[ids], dim)
            r_dn = rotation_y_batch(phi_dn[ids], dim)
            q_dn = np.einsum("cba,cbd->cad", r_up.conj(), r_dn)  # R_up^dag R_dn
            psi = _psi_for_ids(sites, state, j, ids, dim)
            u = np.einsum("cba,cb->ca", r_up.conj(), psi)
            w_vec = np.einsum("cba,cb->ca", r_dn.conj(), psi)

            lam_up = _phase_grid(h_up[ids], mvec, t, step)
            lam_dn = _phase_grid(h_dn[ids], mvec, t, step)

            v = w_vec[:, :, None] * lam_dn
            v = np.einsum("cab,cbT->caT", q_dn, v)
            if protocol == FID:
                v *= lam_up.conj()
            else:
                q_up = q_dn.conj().transpose(0, 2, 1)
                v *= lam_up
                v = np.einsum("cab,cbT->caT", q_up, v)
                v *= lam_dn.conj()
                v = np.einsum("cab,cbT->caT", q_dn, v)
                v *= lam_up.conj()
            factors = np.einsum("ca,caT->cT", u.conj(), v)
            weights = sites.weight[ids]
            w_arg = None if np.all(weights == 1.0) else weights
            _accumulate_product(acc_log, acc_ph, factors, w_arg)

    return np.where(acc_log < LOG_FLOOR, 0.0, np.exp(acc_log + 1j * acc_ph))


def _psi_for_ids(sites, state, j, ids, dim):
    if isinstance(state, NarrowedState):
        idx = np.rint(sites.spin[ids] - state.m[ids]).astype(int)
        psi = np.zeros((ids.size, dim), dtype=complex)
        psi[np.arange(ids.size), idx] = 1.0
        return psi
    return coherent_state_vectors(dim - 1,
                                  state.cos_theta[j, ids], state.phi[j, ids])


def _ensemble_average(sites, state, b, t, protocol):
    if isinstance(state, NarrowedState):
        return _realization_coherence(sites, state, 0, b, t, protocol)
    acc = np.zeros(np.asarray(t).size, dtype=complex)
    for j in range(state.n_realizations):
        acc += _realization_coherence(sites, state, j, b, t, protocol)
    return acc / state.n_realizations


def fid_exact(sites: SiteTable, state, b: float, times,
              frame: str = "rotating") -> CoherenceCurve:
    """Exact free-induction coherence C(t) on the given time grid."""
    times = np.asarray(times, dtype=float)
    if times.size == 0:
        raise ConfigurationError("empty time grid")
    if len(sites) == 0:
        vals = np.ones(times.size, dtype=complex)
    else:
        vals = _ensemble_average(sites, state, b, times, FID)
    if frame == "lab":
        vals = vals * np.exp(1j * b * times)
    elif frame != "rotating":
        raise ConfigurationError(f"unknown frame {frame!r}")
    return CoherenceCurve(protocol=FID, tau=times, values=vals, frame=frame,
                          method="exact", meta=dict(sites.meta))


def hahn_exact(sites: SiteTable, state, b: float, pulse_times,
               frame: str = "rotating") -> CoherenceCurve:
    """Exact Hahn-echo coherence C(2t) for pulse times t (readout at 2t)."""
    tp = np.asarray(pulse_times, dtype=float)
    if tp.size == 0:
        raise ConfigurationError("empty time grid")
    if len(sites) == 0:
        vals = np.ones(tp.size, dtype=complex)
    else:
        vals = _ensemble_average(sites, state, b, tp, HAHN)
    return CoherenceCurve(protocol=HAHN, tau=2.0 * tp, values=vals,
                          t_pulse=tp, frame=frame, method="exact",
                          meta=dict(sites.meta))


# ---------------------------------------------------------------------------
# dense full-Hilbert-space oracle (independent validation path)
# ---------------------------------------------------------------------------

def _kron_chain(ops):
    out = np.array([[1.0 + 0j]])
    for op in ops:
        out = np.kron(out, op)
    return out


def brute_force_oracle(sites: SiteTable, state, b: float, protocol: str,
                       times, frame: str = "rotating") -> CoherenceCurve:
    """Dense evolution of the complete electron+bath Hamiltonian.

    Restricted to spin-1/2 baths with at most 8 sites (Hilbert dimension
    <= 512).  The echo inserts explicit sigma^x pulses.  Shares nothing with
    the product-formula path beyond the site table itself.
    """
    K = len(sites)
    if K > 8 or (K and not np.all(sites.spin == 0.5)):
        raise ConfigurationError("oracle handles at most 8 spin-1/2 sites")
    times = np.asarray(times, dtype=float)

    sx = np.array([[0, 1], [1, 0]], dtype=complex) / 2
    sz = np.diag([0.5, -0.5]).astype(complex)
    sp = np.array([[0, 1], [0, 0]], dtype=complex)
    id2 = np.eye(2, dtype=complex)

    dim = 2 * 2 ** K
    ham = np.zeros((dim, dim), dtype=complex)
    sz_full = _kron_chain([sz] + [id2] * K)
    ham += b * sz_full
    for k in range(K):
        iz = _kron_chain([id2] * (k + 1) + [sz] + [id2] * (K - k - 1))
        ix = _kron_chain([id2] * (k + 1) + [sx] + [id2] * (K - k - 1))
        ham += sites.coupling[k] * sz_full @ iz
        ham += sites.gyro[k] * (sites.bx[k] * ix + b * iz)

    if isinstance(state, NarrowedState):
        bath_states = [None]
        weights = [1.0]
    else:
        bath_states = list(range(state.n_realizations))
        weights = state.weights

    sp_full = _kron_chain([sp] + [id2] * K)
    pulse = _kron_chain([2 * sx] + [id2] * K)
    evals, vecs = np.linalg.eigh(ham)

    def evolve(psi, t):
        return vecs @ (np.exp(-1j * evals * t) * (vecs.conj().T @ psi))

    out = np.zeros(times.size, dtype=complex)
    for j, w in zip(bath_states, weights):
        psi_e = np.array([1.0, 1.0]) / np.sqrt(2.0)  # +x electron
        psi = psi_e
        for k in range(K):
            if isinstance(state, NarrowedState):
                vec = np.zeros(2, dtype=complex)
                vec[round(0.5 - state.m[k])] = 1.0
            else:
                vec = coherent_state_vectors(1, state.cos_theta[j, k],
                                             state.phi[j, k])
            psi = np.kron(psi, vec)
        denom = psi.conj() @ sp_full @ psi
        for i, t in enumerate(times):
            if protocol == FID:
                phi_t = evolve(psi, t)
                val = (phi_t.conj() @ sp_full @ phi_t) / denom
                if frame == "rotating":
                    val *= np.exp(-1j * b * t)
            else:
                phi_t = pulse @ evolve(psi, t)
                phi_t = pulse @ evolve(phi_t, t)   # second pulse at 2t
                val = (phi_t.conj() @ sp_full @ phi_t) / denom
            out[i] += w * val
    tau = times if protocol == FID else 2 * times
    return CoherenceCurve(protocol=protocol, tau=tau, values=out,
                          t_pulse=None if protocol == FID else times,
                          frame=frame, method="oracle", meta={"K": K})
