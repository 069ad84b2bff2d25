"""Electron-spin coherence decay in a nuclear-spin bath under a transverse
magnetic-field gradient: exact per-site products, averaged-field closed
forms, and the associated analytic timescales."""

__version__ = "0.1.0"

from .materials import FieldConfig, MaterialPreset, NuclearSpecies, preset
from .geometry import DeviceGeometry, SiteTable, build_site_table
from .bath import NarrowedState, ThermalEnsemble, sample_narrowed, sample_thermal
from .curves import CoherenceCurve
from .scenario import Scenario, run_scenario

__all__ = [
    "FieldConfig", "MaterialPreset", "NuclearSpecies", "preset",
    "DeviceGeometry", "SiteTable", "build_site_table",
    "NarrowedState", "ThermalEnsemble", "sample_narrowed", "sample_thermal",
    "CoherenceCurve", "Scenario", "run_scenario", "__version__",
]
