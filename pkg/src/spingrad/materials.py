"""Nuclear-species records, material presets, and field configuration.

Presets carry the tabulated aggregate constants verbatim (hyperfine total A
and nuclear gyromagnetic ratio gamma_I in angular Mrad/s units, reference
bath size N, and the tabulated minimum longitudinal field for the validity
estimates).  GaAs additionally carries the full isotope list populated from
standard literature constants.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

from .units import MU_B_RAD_PER_ST, zeeman_rad_s


class ConfigurationError(ValueError):
    """Invalid material / geometry / scenario configuration."""


@dataclass(frozen=True)
class NuclearSpecies:
    """One isotope: abundance, spin, gyromagnetic ratio, total hyperfine strength.

    gamma_I is the nuclear gyromagnetic ratio as an angular frequency per
    Tesla (rad/(s T)); hyperfine_total is the total coupling A (rad/s) the
    species would contribute if it occupied every lattice site.
    """

    name: str
    abundance: float            # fraction nu of lattice sites, 0 < nu <= 1
    spin: float                 # half-integer I
    gamma_I: float              # rad/(s T), magnitude
    hyperfine_total: float      # rad/s

    def __post_init__(self):
        if not (0.0 < self.abundance <= 1.0):
            raise ConfigurationError(f"{self.name}: abundance must be in (0, 1], got {self.abundance}")
        two_i = 2.0 * self.spin
        if two_i <= 0 or abs(two_i - round(two_i)) > 1e-12:
            raise ConfigurationError(f"{self.name}: 2*I must be a positive integer, got I={self.spin}")
        if self.hyperfine_total < 0:
            raise ConfigurationError(f"{self.name}: hyperfine_total must be >= 0")

    def gyro(self, g_factor: float) -> float:
        """Dimensionless gyromagnetic ratio gamma = gamma_I / (|g*| mu_B)."""
        return self.gamma_I / (abs(g_factor) * MU_B_RAD_PER_ST)


@dataclass(frozen=True)
class MaterialPreset:
    name: str
    g_factor: float
    species: tuple        # tuple[NuclearSpecies, ...], site-occupancy fractions
    effective_single_species: NuclearSpecies
    n_reference: float    # tabulated bath size (spins within r0)
    b_min_table_T: float  # tabulated minimum longitudinal field (Tesla)

    def __post_init__(self):
        total = sum(s.abundance for s in self.species)
        if total > 1.0 + 1e-12:
            raise ConfigurationError(f"{self.name}: species abundances sum to {total} > 1")


MRAD = 1e6  # tabulated columns are in angular Mrad/s (and Mrad/s/T)

# GaAs isotope constants from the standard hyperfine/gyromagnetic tables:
# total couplings 74 / 94 / 86 ueV and gamma_I/2pi = 10.25 / 13.02 / 7.32 MHz/T.
_UEV = 1e3 * 1.51926751e6  # 1 ueV in rad/s

_GAAS_SPECIES = (
    NuclearSpecies("69Ga", 0.30054, 1.5, 64.39e6, 74.0 * _UEV),
    NuclearSpecies("71Ga", 0.19946, 1.5, 81.81e6, 94.0 * _UEV),
    NuclearSpecies("75As", 0.50000, 1.5, 45.96e6, 86.0 * _UEV),
)

_PRESETS = {
    "GaAs": MaterialPreset(
        name="GaAs",
        g_factor=-0.44,
        species=_GAAS_SPECIES,
        effective_single_species=NuclearSpecies("GaAs-aggregate", 1.0, 1.5, 60.0 * MRAD, 1.3e5 * MRAD),
        n_reference=4.4e6,
        b_min_table_T=50e-3,
    ),
    "Si-natural": MaterialPreset(
        name="Si-natural",
        g_factor=2.0,
        species=(NuclearSpecies("29Si", 0.047, 0.5, 53.0 * MRAD, 320.0 * MRAD),),
        effective_single_species=NuclearSpecies("29Si-aggregate", 1.0, 0.5, 53.0 * MRAD, 320.0 * MRAD),
        n_reference=1e4,
        b_min_table_T=0.3e-3,
    ),
    "Si:P": MaterialPreset(
        name="Si:P",
        g_factor=2.0,
        species=(NuclearSpecies("29Si", 0.047, 0.5, 53.0 * MRAD, 320.0 * MRAD),),
        effective_single_species=NuclearSpecies("29Si-aggregate", 1.0, 0.5, 53.0 * MRAD, 320.0 * MRAD),
        n_reference=250.0,
        b_min_table_T=60e-3,
    ),
}


def preset(name: str) -> MaterialPreset:
    """Return the material preset for GaAs, Si-natural, or Si:P."""
    try:
        return _PRESETS[name]
    except KeyError:
        raise ConfigurationError(f"unknown material {name!r}; choose from {sorted(_PRESETS)}") from None


def preset_names():
    return sorted(_PRESETS)


def with_hyperfine_total(material: MaterialPreset, a_rad_s: float) -> MaterialPreset:
    """Copy of `material` with the aggregate (and single-species) coupling replaced.

    Scenario inputs may override the tabulated A (e.g. quoting it in neV);
    the species list is rescaled proportionally.
    """
    eff = replace(material.effective_single_species, hyperfine_total=a_rad_s)
    scale = a_rad_s / material.effective_single_species.hyperfine_total
    spc = tuple(replace(s, hyperfine_total=s.hyperfine_total * scale) for s in material.species)
    return replace(material, effective_single_species=eff, species=spc)


@dataclass(frozen=True)
class FieldConfig:
    """Longitudinal field B (Tesla) and transverse gradient dBx/dz at z=0 (T/um)."""

    B_T: float
    grad_T_per_um: float = 0.0

    def __post_init__(self):
        if self.B_T < 0 or self.grad_T_per_um < 0:
            raise ConfigurationError("field magnitudes must be non-negative")

    def b(self, g_factor: float) -> float:
        """Electron Zeeman splitting (rad/s)."""
        return zeeman_rad_s(g_factor, self.B_T)

    def grad_bx(self, g_factor: float) -> float:
        """d(bx)/dz at z=0 in rad/(s m)."""
        return zeeman_rad_s(g_factor, self.grad_T_per_um * 1e6)

    def delta_bx(self, g_factor: float, r0_nm: float) -> float:
        """Single-dot scale variation r0 * d(bx)/dz  (rad/s)."""
        return self.grad_bx(g_factor) * r0_nm * 1e-9

    def big_delta_bx(self, g_factor: float, l_nm: float) -> float:
        """Device-scale variation l * d(bx)/dz  (rad/s); double dots only."""
        return self.grad_bx(g_factor) * l_nm * 1e-9
