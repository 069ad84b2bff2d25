"""Analytic timescales, critical fields, and validity estimates.

Geometry sums.  All closed forms reduce to the angle-averaged sum
Sigma^2 = sum_k (A_k bx_k)^2, evaluated per species over the full lattice:

    single dot:          (1/d) (A dbx)^2 Gamma((2+d)/q) / (N (d/q) 2^((2+d)/q) Gamma(d/q)^2)
    delocalized double:  (A dbx / (e^eta2 +- 1))^2 [3 +- 4 e^(eta2/2)(1+eta2)
                             + e^(2 eta2)(1+4 eta2)] / (16 N)
    singlet-triplet:     (A dbx)^2 (1 + 4 eta2 - e^(-2 eta2)) / (4 N)

Dephasing times.  The narrowed free-evolution decay is Gaussian with

    1/T2_grad = (1/b) sqrt[(1/6) sum_s nu_s I_s(I_s+1) Sigma_s^2],

and the echo's short-time envelope is quartic with

    1/T2e_grad = [(1/6) sum_s nu_s I_s(I_s+1) gamma_s^2 Sigma_s^2]^(1/4).

(The two carry different powers of the dimensionless gamma_s: the quartic
coefficient keeps the nuclear-Zeeman scale from the echo field, while the
t^2 coefficient of the free-evolution exponent is gamma-free.  Both forms
are pinned against the site-resolved curves in the test suite.)

Motional averaging.  The echo exponent is bounded uniformly in time, so for
longitudinal splittings above

    b_c = [ kappa(kind) sum_s nu_s I_s(I_s+1) Sigma_s^2 / gamma_s^2 ]^(1/4)

coherence never decays appreciably.  kappa is an order-one calibration
constant fixed against the quoted thresholds for each geometry family
(16/3 for single dots, 1 for double dots).

Markovian limit (single dots, b -> 0).  Angle-averaging the echo exponent
gives asymptotically linear growth, i.e. exponential decay at rate

    1/T2M_grad = c_M(d, q) sum_s nu_s I_s(I_s+1) A_s^2 / (gamma_s dbx N),

    c_M = (4/3) kappa_d Gamma((d-1)/q) / ((d/q) Gamma(d/q)^2 2^((d-1)/q)),

with kappa_2 = 1/2 (in-plane angle) and kappa_3 = pi/4 (polar cosine);
c_M(2,2) = sqrt(2 pi)/3.  The crossover gradient equates this rate with the
quartic envelope's: delta_bx_M = [c_M (6/c_Sigma)^(1/4)]^(2/3)
sqrt(I(I+1)) A / (gamma sqrt(N)).

Magnus-expansion validity (order of magnitude).  Comparing subleading
average-Hamiltonian terms with the leading one gives three critical times
in each field limit; t_crit is their minimum, and the worst-case
narrowed-FID criterion b > A/(gamma N^(5/6)) defines B_min.  These outputs
are advisory and never gate a simulation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field as dc_field, asdict

import numpy as np
from scipy.special import gamma as gamma_fn

from .geometry import (DOUBLE_DOT_DELOCALIZED, DOUBLE_DOT_ST0, SINGLE_DOT,
                       DeviceGeometry, UnsupportedGeometryError)
from .materials import ConfigurationError, FieldConfig, MaterialPreset
from .units import MU_B_RAD_PER_ST


class UndefinedQuantityError(ConfigurationError):
    """Requested quantity is undefined for these inputs (e.g. 1/b at b=0)."""


class UnsupportedRegimeError(ConfigurationError):
    """Requested quantity exists only in a different geometry/regime."""


# --- geometry sums ---------------------------------------------------------

def sigma_coefficient(geom: DeviceGeometry) -> float:
    """c such that Sigma^2 = c * (A * delta_bx)^2 / N for this geometry."""
    if geom.kind == SINGLE_DOT:
        d, q = geom.d, geom.q
        return (1.0 / d) * gamma_fn((2 + d) / q) \
            / ((d / q) * 2.0 ** ((2 + d) / q) * gamma_fn(d / q) ** 2)
    eta2 = geom.eta ** 2
    if geom.kind == DOUBLE_DOT_DELOCALIZED:
        s = geom.sign
        num = 3.0 + s * 4.0 * math.exp(eta2 / 2.0) * (1.0 + eta2) \
            + math.exp(2.0 * eta2) * (1.0 + 4.0 * eta2)
        return num / (16.0 * (math.exp(eta2) + s) ** 2)
    if geom.kind == DOUBLE_DOT_ST0:
        return (1.0 + 4.0 * eta2 - math.exp(-2.0 * eta2)) / 4.0
    raise UnsupportedGeometryError(f"no Sigma^2 form for {geom.kind}")


def sigma_squared(geom: DeviceGeometry, a_total: float, delta_bx: float) -> float:
    """Angle-averaged Sigma^2 = sum_k (A_k bx_k)^2 over the full lattice (rad/s)^4."""
    return sigma_coefficient(geom) * (a_total * delta_bx) ** 2 / geom.N


def _species_terms(material: MaterialPreset, geom: DeviceGeometry,
                   delta_bx: float, effective: bool = True):
    """Yield (nu, I(I+1), gamma_dimless, Sigma^2) per species."""
    species = ((material.effective_single_species,) if effective
               else material.species)
    for s in species:
        yield (s.abundance, s.spin * (s.spin + 1.0), s.gyro(material.g_factor),
               sigma_squared(geom, s.hyperfine_total, delta_bx))


# --- dephasing times -------------------------------------------------------

def dephasing_times(material: MaterialPreset, geom: DeviceGeometry,
                    field: FieldConfig, effective: bool = True):
    """(T2_grad, T2e_grad) in seconds; T2_grad needs b > 0."""
    delta = field.delta_bx(material.g_factor, geom.r0_nm)
    s0 = sum(nu * ii1 * s2 for nu, ii1, g, s2 in
             _species_terms(material, geom, delta, effective))
    s2g = sum(nu * ii1 * g * g * s2 for nu, ii1, g, s2 in
              _species_terms(material, geom, delta, effective))
    b = field.b(material.g_factor)
    if s2g <= 0.0:   # zero gradient: no decay from this mechanism
        return float("inf"), float("inf")
    if b <= 0.0:
        raise UndefinedQuantityError("T2_grad scales as b and is undefined at B = 0")
    t2 = b / math.sqrt(s0 / 6.0)
    t2e = (s2g / 6.0) ** -0.25
    return t2, t2e


# --- motional averaging ----------------------------------------------------

_KAPPA_BC = {SINGLE_DOT: 16.0 / 3.0,
             DOUBLE_DOT_DELOCALIZED: 1.0,
             DOUBLE_DOT_ST0: 1.0}


def critical_field(material: MaterialPreset, geom: DeviceGeometry,
                   field: FieldConfig, effective: bool = True):
    """Motional-averaging threshold: (b_c in rad/s, B_c in Tesla)."""
    if field.grad_T_per_um <= 0:
        raise ConfigurationError("critical field needs a positive gradient")
    delta = field.delta_bx(material.g_factor, geom.r0_nm)
    sm2 = sum(nu * ii1 * s2 / (g * g) for nu, ii1, g, s2 in
              _species_terms(material, geom, delta, effective))
    b_c = (_KAPPA_BC[geom.kind] * sm2) ** 0.25
    return b_c, b_c / (abs(material.g_factor) * MU_B_RAD_PER_ST)


# --- Markovian single-dot limit --------------------------------------------

def markov_coefficient(d: int, q: float) -> float:
    """c_M(d, q): linear-growth coefficient of the angle-averaged echo exponent."""
    kappa = {2: 0.5, 3: math.pi / 4.0}.get(d)
    if kappa is None:
        raise UnsupportedRegimeError("Markovian limit derived for d = 2 or 3 only")
    return (4.0 / 3.0) * kappa * gamma_fn((d - 1) / q) \
        / ((d / q) * gamma_fn(d / q) ** 2 * 2.0 ** ((d - 1) / q))


def markovian_quantities(material: MaterialPreset, geom: DeviceGeometry,
                         field: FieldConfig):
    """(T2M_grad seconds, delta_bx_M rad/s, delta_Bx_M Tesla); single dots only.

    Double-dot geometries never reach this regime: all strongly coupled
    nuclei sit at a finite transverse field, so the echo exponent saturates
    to a plateau instead of growing linearly.
    """
    if geom.kind != SINGLE_DOT:
        raise UnsupportedRegimeError(
            "the Markovian (exponential-echo) regime exists only for single "
            "dots; double-dot geometries motionally average to a plateau instead")
    c_m = markov_coefficient(geom.d, geom.q)
    delta = field.delta_bx(material.g_factor, geom.r0_nm)
    if delta <= 0:
        raise ConfigurationError("Markovian quantities need a positive gradient")
    s = material.effective_single_species
    ii1 = s.spin * (s.spin + 1.0)
    gyro = s.gyro(material.g_factor)
    rate = c_m * ii1 * s.hyperfine_total ** 2 / (gyro * delta * geom.N)

    c_sig = sigma_coefficient(geom)
    dbx_m = (c_m * (6.0 / c_sig) ** 0.25) ** (2.0 / 3.0) * math.sqrt(ii1) \
        * s.hyperfine_total / (gyro * math.sqrt(geom.N))
    return 1.0 / rate, dbx_m, dbx_m / (abs(material.g_factor) * MU_B_RAD_PER_ST)


# --- averaged-Hamiltonian validity (order of magnitude, advisory) ----------

@dataclass
class MagnusValidity:
    limit: str              # "large-b" or "small-b"
    t1_s: float
    t2_s: float
    t3_s: float
    t_crit_s: float
    b_min_T: float          # worst-case narrowed-FID minimum field
    lambda_ratio: float     # (Delta bx / b)
    lambda_bound: float     # N^(5/6) gamma b / A
    lambda_ok: bool
    horizon_exceeds: bool = False
    advisory: bool = True


def magnus_validity(material: MaterialPreset, geom: DeviceGeometry,
                    field: FieldConfig, horizon_s: float | None = None) -> MagnusValidity:
    """Critical times below which the leading-order treatment is safe."""
    s = material.effective_single_species
    a = s.hyperfine_total
    gyro = s.gyro(material.g_factor)
    n = geom.N
    b = field.b(material.g_factor)
    scale_nm = geom.l_nm if geom.kind != SINGLE_DOT else geom.r0_nm
    dbx = field.big_delta_bx(material.g_factor, scale_nm) if scale_nm else 0.0

    inf = float("inf")
    if dbx <= 0:
        t1 = t2 = t3 = inf
        limit = "large-b"
    elif b > dbx:
        limit = "large-b"
        t1 = gyro ** 3 * n ** 3 * b ** 7 / (a * dbx) ** 4
        t2 = gyro * n ** 1.5 * b ** 3 / (a * dbx) ** 2
        t3 = gyro ** (1 / 3) * n * b ** (5 / 3) / (a * dbx) ** (4 / 3)
    else:
        limit = "small-b"
        t1 = (gyro * n * dbx) ** 3 / a ** 4
        t2 = gyro * n ** 1.5 * dbx / a ** 2
        t3 = n * (gyro * dbx) ** (1 / 3) / a ** (4 / 3)
    t_crit = min(t1, t2, t3)

    b_min_T = a / (s.gamma_I * n ** (5.0 / 6.0))
    lam = dbx / b if b > 0 else inf
    bound = n ** (5.0 / 6.0) * gyro * b / a
    return MagnusValidity(
        limit=limit, t1_s=t1, t2_s=t2, t3_s=t3, t_crit_s=t_crit,
        b_min_T=b_min_T, lambda_ratio=lam, lambda_bound=bound,
        lambda_ok=bool(lam < bound),
        horizon_exceeds=bool(horizon_s is not None and horizon_s > t_crit),
    )


@dataclass
class GaussianValidity:
    ratio_fid: float        # N^(1/4): suppression of quartic corrections (free evolution)
    ratio_he: float         # N^(1/8): same for the echo
    fid_marginal: bool      # small-bath warning
    motional_lambda: float
    motional_bound: float   # sqrt(N) gamma b / A
    motional_ok: bool
    advisory: bool = True


_MARGINAL_RATIO = 5.0


def gaussian_validity(material: MaterialPreset, geom: DeviceGeometry,
                      field: FieldConfig) -> GaussianValidity:
    s = material.effective_single_species
    gyro = s.gyro(material.g_factor)
    b = field.b(material.g_factor)
    n = geom.N
    scale_nm = geom.l_nm if geom.kind != SINGLE_DOT else geom.r0_nm
    dbx = field.big_delta_bx(material.g_factor, scale_nm) if scale_nm else 0.0
    lam = dbx / b if b > 0 else float("inf")
    bound = math.sqrt(n) * gyro * b / s.hyperfine_total
    r_fid = n ** 0.25
    return GaussianValidity(
        ratio_fid=r_fid, ratio_he=n ** 0.125,
        fid_marginal=bool(r_fid < _MARGINAL_RATIO),
        motional_lambda=lam, motional_bound=bound,
        motional_ok=bool(lam < bound),
    )


def st0_leakage_estimate(material: MaterialPreset, geom: DeviceGeometry,
                         field: FieldConfig, tau_c: float = 100e-6):
    """Order-of-magnitude singlet-triplet leakage scales.

    Returns (stationary plateau probability, onset time, trust horizon):
    plateau ~ (Delta bx / b)^2 after ~ sqrt(N)/A; with bath decorrelation at
    correlation time tau_c the mapping is trusted to ~ (b/Delta bx)^2 tau_c.
    """
    b = field.b(material.g_factor)
    if b <= 0:
        raise UndefinedQuantityError("leakage estimate needs b > 0")
    dbx = field.big_delta_bx(material.g_factor, geom.l_nm) if geom.l_nm else 0.0
    a = material.effective_single_species.hyperfine_total
    plateau = (dbx / b) ** 2
    onset = math.sqrt(geom.N) / a
    horizon = (b / dbx) ** 2 * tau_c if dbx > 0 else float("inf")
    return plateau, onset, horizon


# --- aggregated report -----------------------------------------------------

@dataclass
class TimescaleReport:
    material: str
    geometry: dict
    field: dict
    t2_grad_s: float | None
    t2e_grad_s: float | None
    t2m_grad_s: float | None
    b_c_rad_s: float | None
    B_c_T: float | None
    delta_bx_markov_rad_s: float | None
    delta_Bx_markov_T: float | None
    magnus: dict
    gaussian: dict
    leakage_plateau: float | None
    leakage_onset_s: float | None
    leakage_horizon_s: float | None
    notes: list = dc_field(default_factory=list)       # informational
    advisories: list = dc_field(default_factory=list)  # actionable warnings

    def to_dict(self):
        return asdict(self)


def build_report(material: MaterialPreset, geom: DeviceGeometry,
                 field: FieldConfig, tau_c: float = 100e-6,
                 horizon_s: float | None = None) -> TimescaleReport:
    """Assemble every defined analytic quantity; undefined entries are None."""
    notes = []
    t2 = t2e = None
    try:
        t2, t2e = dephasing_times(material, geom, field)
    except UndefinedQuantityError as err:
        notes.append(str(err))
        if field.grad_T_per_um > 0:
            s2g = sum(nu * ii1 * g * g * s2 for nu, ii1, g, s2 in _species_terms(
                material, geom, field.delta_bx(material.g_factor, geom.r0_nm)))
            t2e = (s2g / 6.0) ** -0.25 if s2g > 0 else float("inf")

    b_c = bc_T = None
    if field.grad_T_per_um > 0:
        b_c, bc_T = critical_field(material, geom, field)
    else:
        notes.append("no gradient: motional-averaging threshold not applicable")

    t2m = dbxm = dbxm_T = None
    try:
        t2m, dbxm, dbxm_T = markovian_quantities(material, geom, field)
    except (UnsupportedRegimeError, ConfigurationError) as err:
        notes.append(str(err))

    plateau = onset = horizon = None
    if geom.kind == DOUBLE_DOT_ST0:
        try:
            plateau, onset, horizon = st0_leakage_estimate(material, geom, field, tau_c)
        except UndefinedQuantityError as err:
            notes.append(str(err))

    mg = magnus_validity(material, geom, field, horizon_s)
    gs = gaussian_validity(material, geom, field)
    advisories = []
    if mg.horizon_exceeds:
        advisories.append(
            f"requested horizon exceeds t_crit = {mg.t_crit_s:.3g} s: the "
            "leading-order treatment is not guaranteed there (advisory)")
    if gs.fid_marginal and field.grad_T_per_um > 0:
        advisories.append(f"N^(1/4) = {gs.ratio_fid:.3g} is marginal: finite-size "
                          "(non-Gaussian) corrections may be visible")

    return TimescaleReport(
        material=material.name,
        geometry={"kind": geom.kind, "d": geom.d, "q": geom.q,
                  "r0_nm": geom.r0_nm, "l_nm": geom.l_nm, "N": geom.N},
        field={"B_T": field.B_T, "grad_T_per_um": field.grad_T_per_um},
        t2_grad_s=t2, t2e_grad_s=t2e, t2m_grad_s=t2m,
        b_c_rad_s=b_c, B_c_T=bc_T,
        delta_bx_markov_rad_s=dbxm, delta_Bx_markov_T=dbxm_T,
        magnus=asdict(mg), gaussian=asdict(gs),
        leakage_plateau=plateau, leakage_onset_s=onset,
        leakage_horizon_s=horizon, notes=notes, advisories=advisories,
    )
