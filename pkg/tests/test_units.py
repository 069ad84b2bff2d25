import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from spingrad.materials import (ConfigurationError, FieldConfig, NuclearSpecies,
                                preset, preset_names, with_hyperfine_total)
from spingrad.units import (MU_B_RAD_PER_ST, UnitError, from_angular_frequency,
                            to_angular_frequency, zeeman_rad_s)

# independent conversion constants (CODATA), not imported from the package
_HBAR = 1.054571817e-34
_EV = 1.602176634e-19
_MU_B = 9.2740100783e-24


def test_zero_input_is_zero():
    assert to_angular_frequency(0.0, "neV") == 0.0


def test_mhz_is_ordinary_frequency():
    assert to_angular_frequency(1.0, "MHz") == pytest.approx(2e6 * math.pi, rel=1e-15)


def test_nev_conversion_against_codata():
    # 210 neV, the total-coupling scenario input for the Si systems
    expected = 210e-9 * _EV / _HBAR
    assert to_angular_frequency(210.0, "neV") == pytest.approx(expected, rel=1e-12)


def test_unknown_unit_raises():
    with pytest.raises(UnitError):
        to_angular_frequency(1.0, "furlongs")
    with pytest.raises(UnitError):
        from_angular_frequency(1.0, "furlongs")


@given(st.floats(min_value=1e-6, max_value=1e12),
       st.sampled_from(["neV", "MHz", "rad/s", "Mrad/s", "ueV", "T*MHz/T"]))
def test_round_trip(value, unit):
    out = from_angular_frequency(to_angular_frequency(value, unit), unit)
    assert out == pytest.approx(value, rel=1e-12)


def test_zeeman_scale():
    # g = 2 electron: ~28 GHz/T ordinary frequency
    f_ghz = zeeman_rad_s(2.0, 1.0) / (2e9 * math.pi)
    assert f_ghz == pytest.approx(_MU_B * 2 / (2 * math.pi * _HBAR) / 1e9, rel=1e-12)
    assert f_ghz == pytest.approx(27.99, abs=0.02)


class TestPresets:
    def test_names(self):
        assert preset_names() == ["GaAs", "Si-natural", "Si:P"]
        with pytest.raises(ConfigurationError):
            preset("InSb")

    def test_table_checksum(self):
        # tabulated aggregates, angular Mrad/s units, pinned verbatim
        rows = {
            "GaAs": (1.3e5, 60.0, 4.4e6, 50e-3, 1.5),
            "Si-natural": (320.0, 53.0, 1e4, 0.3e-3, 0.5),
            "Si:P": (320.0, 53.0, 250.0, 60e-3, 0.5),
        }
        for name, (a_mrad, gam_mrad, n_ref, bmin, spin) in rows.items():
            p = preset(name)
            eff = p.effective_single_species
            assert eff.hyperfine_total == pytest.approx(a_mrad * 1e6, rel=1e-12)
            assert eff.gamma_I == pytest.approx(gam_mrad * 1e6, rel=1e-12)
            assert eff.spin == spin
            assert p.n_reference == n_ref
            assert p.b_min_table_T == pytest.approx(bmin)

    def test_gaas_aggregate_matches_literature_scale(self):
        # the aggregate coupling is ~86 ueV and the species-weighted sum agrees
        p = preset("GaAs")
        agg_uev = p.effective_single_species.hyperfine_total * _HBAR / _EV * 1e6
        assert 80 < agg_uev < 92
        weighted = sum(2 * s.abundance * s.hyperfine_total for s in p.species)
        assert weighted == pytest.approx(p.effective_single_species.hyperfine_total,
                                         rel=0.05)

    def test_si_species_list(self):
        p = preset("Si-natural")
        assert len(p.species) == 1
        s = p.species[0]
        assert s.name == "29Si"
        assert s.abundance == pytest.approx(0.047)
        assert s.spin == 0.5

    def test_abundances_sum_below_one(self):
        for name in preset_names():
            assert sum(s.abundance for s in preset(name).species) <= 1.0 + 1e-12

    def test_presets_immutable(self):
        p = preset("Si:P")
        with pytest.raises(AttributeError):
            p.g_factor = 1.0
        with pytest.raises(AttributeError):
            p.effective_single_species.spin = 1.5

    def test_species_validation(self):
        with pytest.raises(ConfigurationError):
            NuclearSpecies("bad", 0.0, 0.5, 1e6, 1e8)
        with pytest.raises(ConfigurationError):
            NuclearSpecies("bad", 0.5, 0.7, 1e6, 1e8)
        with pytest.raises(ConfigurationError):
            NuclearSpecies("bad", 0.5, 0.5, 1e6, -1.0)

    def test_hyperfine_override_scales_species(self):
        p = preset("Si:P")
        q = with_hyperfine_total(p, 2.0 * p.effective_single_species.hyperfine_total)
        assert q.effective_single_species.hyperfine_total == pytest.approx(
            2.0 * p.effective_single_species.hyperfine_total)
        assert q.species[0].hyperfine_total == pytest.approx(
            2.0 * p.species[0].hyperfine_total)


class TestFieldConfig:
    def test_derived_quantities(self):
        f = FieldConfig(B_T=0.2, grad_T_per_um=1.0)
        g = 2.0
        assert f.b(g) == pytest.approx(2 * MU_B_RAD_PER_ST * 0.2, rel=1e-12)
        # 3 nm at 1 T/um is a 3 mT variation
        assert f.delta_bx(g, 3.0) == pytest.approx(zeeman_rad_s(g, 3e-3), rel=1e-12)
        assert f.big_delta_bx(g, 200.0) == pytest.approx(zeeman_rad_s(g, 0.2), rel=1e-12)

    def test_negative_rejected(self):
        with pytest.raises(ConfigurationError):
            FieldConfig(B_T=-1.0)
        with pytest.raises(ConfigurationError):
            FieldConfig(B_T=0.1, grad_T_per_um=-2.0)

    def test_gyro_is_dimensionless_ratio(self):
        s = preset("Si:P").effective_single_species
        assert s.gyro(2.0) == pytest.approx(53e6 / (2 * MU_B_RAD_PER_ST), rel=1e-12)
