"""Device geometries and per-nucleus coupling tables.

Sites are labeled k = 0, 1, ... in increasing distance from the device
center, with r_k/r0 = (k/N)^(1/d).  For an envelope |psi|^2 ~ exp[-(r/r0)^q]
the single-dot couplings are

    A_k = A / (N (d/q) Gamma(d/q)) * exp[-(k/N)^(q/d)],

normalized so that the continuum sum reproduces the total coupling A.  The
double-dot forms (delocalized bonding/antibonding orbital, and the
singlet-triplet difference coupling) are derived for d = q = 2 only.

The transverse gradient produces per-site fields

    bx_k = (k/N)^(1/d) * delta_bx * c_k,

with c_k = cos(theta_k) for d = 2, 3 and an alternating parity c_k = +/-1
for d = 1.  Convention: the gradient axis coincides with the polar axis for
d = 3 single dots, and with the inter-dot axis for double dots (recorded in
table metadata).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field as dc_field

import numpy as np
from scipy.special import gamma as gamma_fn

from . import rng
from .materials import ConfigurationError, FieldConfig, MaterialPreset
from .units import MU_B_RAD_PER_ST as _MU_B_OVER_HBAR

SINGLE_DOT = "single_dot"
DOUBLE_DOT_DELOCALIZED = "double_dot_delocalized"
DOUBLE_DOT_ST0 = "double_dot_st0"
KINDS = (SINGLE_DOT, DOUBLE_DOT_DELOCALIZED, DOUBLE_DOT_ST0)


class UnsupportedGeometryError(ConfigurationError):
    """Geometry (kind, d, q) combination outside the derived formulas."""


@dataclass(frozen=True)
class DeviceGeometry:
    kind: str
    d: int = 2
    q: float = 2.0
    r0_nm: float = 25.0
    N: float = 1e4            # nuclei within r0
    l_nm: float = 0.0         # inter-dot spacing, double-dot kinds only
    sign: int = +1            # delocalized orbital: +1 bonding, -1 antibonding
    a_cut: float = 1e-6       # tail cutoff relative to the peak coupling

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ConfigurationError(f"unknown geometry kind {self.kind!r}")
        if self.d not in (1, 2, 3):
            raise ConfigurationError("d must be 1, 2, or 3")
        if self.q <= 0 or self.r0_nm <= 0 or self.N < 1:
            raise ConfigurationError("q, r0, N must be positive (N >= 1)")
        if self.kind != SINGLE_DOT:
            if self.l_nm <= 0:
                raise ConfigurationError("double-dot kinds need l > 0")
            if self.d != 2 or self.q != 2:
                raise UnsupportedGeometryError(
                    f"{self.kind} couplings are derived for d = q = 2 only")
        if self.sign not in (+1, -1):
            raise ConfigurationError("sign must be +1 or -1")
        if not (0 < self.a_cut < 1):
            raise ConfigurationError("a_cut must be in (0, 1)")

    @property
    def eta(self) -> float:
        """Dimensionless dot separation l / (2 r0); 0 for single dots."""
        return self.l_nm / (2.0 * self.r0_nm) if self.kind != SINGLE_DOT else 0.0

    def site_count(self) -> int:
        """Tail-cutoff site count K: couplings beyond K are < a_cut * peak."""
        log_cut = math.log(1.0 / self.a_cut)
        if self.kind == SINGLE_DOT:
            xmax = log_cut ** (self.d / self.q)
        else:
            xmax = (self.eta + math.sqrt(log_cut)) ** 2
        return int(math.ceil(self.N * xmax))


@dataclass
class SiteTable:
    """Columnar per-site data; arrays share length K.

    `weight` is 1 for physical sites; quadrature/sampled tables carry the
    continuum measure there so that sum_k weight_k f_k approximates the full
    site sum.
    """

    x: np.ndarray            # k/N
    coupling: np.ndarray     # A_k, rad/s (signed for ST0 difference couplings)
    bx: np.ndarray           # transverse Zeeman field bx_k, rad/s
    theta: np.ndarray        # polar angle of site k
    species: np.ndarray      # index into species_table
    spin: np.ndarray         # I_k
    gamma_I: np.ndarray      # rad/(s T)
    gyro: np.ndarray         # dimensionless gamma_k
    weight: np.ndarray       # site multiplicity (1 for physical tables)
    species_table: tuple     # names, index-aligned
    meta: dict = dc_field(default_factory=dict)

    def __len__(self):
        return self.x.size

    def hyperfine_sum(self) -> float:
        return float((self.weight * self.coupling).sum())

    def to_csv(self, path):
        head = "k,A_k,b_k_x,theta_k,species,I,gamma"
        k = np.arange(len(self))
        cols = np.column_stack([k, self.coupling, self.bx, self.theta,
                                self.species, self.spin, self.gamma_I])
        np.savetxt(path, cols, delimiter=",", header=head, comments="",
                   fmt=["%d", "%.17g", "%.17g", "%.17g", "%d", "%.3g", "%.17g"])


def single_dot_couplings(geom: DeviceGeometry, a_total: float, x: np.ndarray) -> np.ndarray:
    """A_k for one electron in a single dot (any d, q)."""
    if geom.kind != SINGLE_DOT:
        raise UnsupportedGeometryError("single_dot_couplings needs kind=single_dot")
    dq = geom.d / geom.q
    norm = geom.N * dq * gamma_fn(dq)
    if not np.isfinite(norm) or norm <= 0:
        raise ConfigurationError(f"Gamma({dq}) overflows for this (d, q)")
    return (a_total / norm) * np.exp(-x ** (geom.q / geom.d))


def double_dot_couplings(geom: DeviceGeometry, a_total: float, x: np.ndarray,
                         cos_theta: np.ndarray) -> np.ndarray:
    """A_k^+- for one electron delocalized over a symmetric double dot (d=q=2)."""
    if geom.kind != DOUBLE_DOT_DELOCALIZED:
        raise UnsupportedGeometryError("double_dot_couplings needs kind=double_dot_delocalized")
    eta = geom.eta
    den = math.exp(eta * eta) + geom.sign
    return (a_total / geom.N) * (np.cosh(2.0 * eta * np.sqrt(x) * cos_theta)
                                 + geom.sign) / den * np.exp(-x)


def st0_couplings(geom: DeviceGeometry, a_total: float, x: np.ndarray,
                  cos_theta: np.ndarray) -> np.ndarray:
    """Difference couplings delta-A_k for a singlet-triplet double dot (d=q=2).

    These signed values substitute for A_k in every solver; the two-electron
    problem maps onto the single-spin model under that replacement.
    """
    if geom.kind != DOUBLE_DOT_ST0:
        raise UnsupportedGeometryError("st0_couplings needs kind=double_dot_st0")
    eta = geom.eta
    return (2.0 * a_total / geom.N) * np.exp(-(x + eta * eta)) \
        * np.sinh(2.0 * eta * np.sqrt(x) * cos_theta)


def gradient_fields(geom: DeviceGeometry, delta_bx: float, x: np.ndarray,
                    cos_theta: np.ndarray) -> np.ndarray:
    """Per-site transverse fields bx_k = (k/N)^(1/d) * delta_bx * c_k."""
    return x ** (1.0 / geom.d) * delta_bx * cos_theta


def _draw_angles(geom: DeviceGeometry, seed: int, k: np.ndarray) -> np.ndarray:
    """Polar angles theta_k in the measure appropriate to d (deterministic per seed)."""
    if geom.d == 1:
        # alternating parity: theta in {0, pi} so cos(theta) = +/-1
        return np.where(k % 2 == 0, 0.0, np.pi)
    if geom.d == 2:
        return rng.uniform_angle(seed, rng.STREAM_THETA, k)
    return np.arccos(rng.uniform_symmetric(seed, rng.STREAM_THETA, k))


def couplings_for(geom: DeviceGeometry, a_total: float, x: np.ndarray,
                  cos_theta: np.ndarray) -> np.ndarray:
    if geom.kind == SINGLE_DOT:
        return single_dot_couplings(geom, a_total, x)
    if geom.kind == DOUBLE_DOT_DELOCALIZED:
        return double_dot_couplings(geom, a_total, x, cos_theta)
    return st0_couplings(geom, a_total, x, cos_theta)


def build_site_table(geom: DeviceGeometry, material: MaterialPreset,
                     field: FieldConfig, seed: int = 0,
                     species_mode: str = "effective") -> SiteTable:
    """Generate the full site table for a geometry/material/field combination.

    species_mode="effective" assigns every site the material's aggregate
    species (the tabulated N then counts spin-carrying nuclei directly);
    "full" assigns species by abundance and drops spin-zero sites.
    """
    K = geom.site_count()
    k = np.arange(K, dtype=np.uint64)
    x = np.arange(K, dtype=np.float64) / geom.N
    theta = _draw_angles(geom, seed, k)
    c = np.cos(theta)

    if species_mode == "effective":
        spc_list = (material.effective_single_species,)
        idx = np.zeros(K, dtype=np.int32)
        keep = np.ones(K, dtype=bool)
    elif species_mode == "full":
        spc_list = material.species
        u = rng.uniform(seed, rng.STREAM_SPECIES, k)
        edges = np.cumsum([s.abundance for s in spc_list])
        if edges[-1] > 1.0 + 1e-12:
            raise ConfigurationError("species abundances sum above 1")
        idx = np.searchsorted(edges, u, side="right").astype(np.int32)
        keep = idx < len(spc_list)   # the remainder is spin-zero: dropped
    else:
        raise ConfigurationError(f"unknown species_mode {species_mode!r}")

    delta = field.delta_bx(material.g_factor, geom.r0_nm)
    bx = gradient_fields(geom, delta, x, c)

    # per-species coupling profiles (profile shape is species-independent;
    # the total strength is the species' full-lattice A)
    coupling = np.zeros(K)
    spin = np.zeros(K)
    gam = np.zeros(K)
    for i, s in enumerate(spc_list):
        m = keep & (idx == i)
        if not m.any():
            continue
        coupling[m] = couplings_for(geom, s.hyperfine_total, x[m], c[m])
        spin[m] = s.spin
        gam[m] = s.gamma_I

    g = abs(material.g_factor)
    meta = {
        "kind": geom.kind, "d": geom.d, "q": geom.q, "r0_nm": geom.r0_nm,
        "l_nm": geom.l_nm, "N": geom.N, "K": int(keep.sum()), "K_raw": K,
        "eta": geom.eta, "a_cut": geom.a_cut, "seed": seed,
        "species_mode": species_mode, "material": material.name,
        "g_factor": material.g_factor,
        "B_T": field.B_T, "grad_T_per_um": field.grad_T_per_um,
        "gradient_axis": ("inter-dot axis" if geom.kind != SINGLE_DOT
                          else "polar axis"),
        "site_model": "physical",
    }
    tbl = SiteTable(
        x=x[keep], coupling=coupling[keep], bx=bx[keep], theta=theta[keep],
        species=idx[keep], spin=spin[keep], gamma_I=gam[keep],
        gyro=gam[keep] / (g * _MU_B_OVER_HBAR), weight=np.ones(int(keep.sum())),
        species_table=tuple(s.name for s in spc_list), meta=meta,
    )
    return tbl


def assign_species(table: SiteTable, material: MaterialPreset, seed: int) -> SiteTable:
    """Re-assign species on an existing (effective) table by abundance.

    Each site independently becomes species s with probability nu_s; sites
    landing in the spin-zero remainder are dropped.  Couplings are rescaled
    to the assigned species' total strength.
    """
    edges = np.cumsum([s.abundance for s in material.species])
    if edges[-1] > 1.0 + 1e-12:
        raise ConfigurationError("species abundances sum above 1")
    K = len(table)
    u = rng.uniform(seed, rng.STREAM_SPECIES, np.arange(K, dtype=np.uint64))
    idx = np.searchsorted(edges, u, side="right").astype(np.int32)
    keep = idx < len(material.species)

    a_ref = table.meta.get("coupling_total", None)
    coupling = table.coupling.copy()
    spin = np.zeros(K)
    gam = np.zeros(K)
    for i, s in enumerate(material.species):
        m = keep & (idx == i)
        scale = (s.hyperfine_total / a_ref) if a_ref else 1.0
        coupling[m] *= scale
        spin[m] = s.spin
        gam[m] = s.gamma_I
    g = abs(material.g_factor)
    meta = dict(table.meta, species_mode="full", K=int(keep.sum()))
    return SiteTable(
        x=table.x[keep], coupling=coupling[keep], bx=table.bx[keep],
        theta=table.theta[keep], species=idx[keep], spin=spin[keep],
        gamma_I=gam[keep], gyro=gam[keep] / (g * _MU_B_OVER_HBAR),
        weight=table.weight[keep],
        species_table=tuple(s.name for s in material.species), meta=meta,
    )


def build_quadrature_table(geom: DeviceGeometry, material: MaterialPreset,
                           field: FieldConfig, n_radial: int = 400,
                           n_angular: int = 256) -> SiteTable:
    """Continuum (weighted pseudo-site) table for closed-form sums.

    Gauss-Legendre in the shell coordinate x = k/N and in the angular
    variable; weights carry the site density N so that weighted sums
    approximate sum_k.  Effective single species only.
    """
    s = material.effective_single_species
    log_cut = math.log(1.0 / geom.a_cut)
    if geom.kind == SINGLE_DOT:
        xmax = log_cut ** (geom.d / geom.q)
    else:
        xmax = (geom.eta + math.sqrt(log_cut)) ** 2

    xn, xw = np.polynomial.legendre.leggauss(n_radial)
    x = 0.5 * xmax * (xn + 1.0)
    xw = 0.5 * xmax * xw * geom.N      # dk = N dx

    if geom.d == 1:
        c = np.array([1.0, -1.0])
        cw = np.array([0.5, 0.5])
    elif geom.d == 2:
        th = (np.arange(n_angular) + 0.5) * (2.0 * np.pi / n_angular)
        c = np.cos(th)
        cw = np.full(n_angular, 1.0 / n_angular)
    else:
        cn, cww = np.polynomial.legendre.leggauss(n_angular)
        c = cn
        cw = 0.5 * cww

    X = np.repeat(x, c.size)
    W = np.repeat(xw, c.size) * np.tile(cw, x.size)
    C = np.tile(c, x.size)

    coupling = couplings_for(geom, s.hyperfine_total, X, C)
    delta = field.delta_bx(material.g_factor, geom.r0_nm)
    bx = gradient_fields(geom, delta, X, C)
    g = abs(material.g_factor)
    n_nodes = X.size
    meta = {
        "kind": geom.kind, "d": geom.d, "q": geom.q, "r0_nm": geom.r0_nm,
        "l_nm": geom.l_nm, "N": geom.N, "K": geom.site_count(),
        "eta": geom.eta, "material": material.name,
        "g_factor": material.g_factor,
        "B_T": field.B_T, "grad_T_per_um": field.grad_T_per_um,
        "site_model": f"quadrature({n_radial}x{c.size})",
        "gradient_axis": ("inter-dot axis" if geom.kind != SINGLE_DOT
                          else "polar axis"),
    }
    return SiteTable(
        x=X, coupling=coupling, bx=bx, theta=np.arccos(np.clip(C, -1, 1)),
        species=np.zeros(n_nodes, dtype=np.int32),
        spin=np.full(n_nodes, s.spin), gamma_I=np.full(n_nodes, s.gamma_I),
        gyro=np.full(n_nodes, s.gamma_I / (g * _MU_B_OVER_HBAR)),
        weight=W, species_table=(s.name,), meta=meta,
    )
