"""Figure-reproduction recipes: named bundles of scenario runs.

Each recipe writes one CSV per series plus `figure_manifest.json` describing
panels, labels, and drawing roles; rendering is a separate component that
consumes only these files.
"""

from __future__ import annotations

import json
import shutil
from pathlib import Path

import numpy as np

from .analysis import dephasing_times
from .curves import _jsonable
from .geometry import DeviceGeometry
from .materials import ConfigurationError, FieldConfig, preset, with_hyperfine_total
from .scenario import DEFAULT_SEED, Scenario, run_scenario, write_result
from .units import to_angular_frequency

SI_A_NEV = 210.0  # scenario hyperfine input for the Si systems


def _cfg(material, geometry, field, protocol, state, method, t_max, points,
         seed, a_nev=None, spacing="linear"):
    doc = {
        "material": material, "geometry": geometry, "field": field,
        "protocol": protocol, "state": state, "method": method,
        "time_grid": {"t_max_s": t_max, "points": points, "spacing": spacing},
        "seed": seed,
    }
    if a_nev is not None:
        doc["hyperfine_total"] = {"value": a_nev, "unit": "neV"}
    return doc


def _rate_vs_b_series(material_name, geometry, grad, b_tesla, a_nev=None):
    mat = preset(material_name)
    if a_nev is not None:
        mat = with_hyperfine_total(mat, to_angular_frequency(a_nev, "neV"))
    geom = DeviceGeometry(**geometry)
    rows = []
    for bt in b_tesla:
        t2, _ = dephasing_times(mat, geom, FieldConfig(B_T=bt, grad_T_per_um=grad))
        rows.append((bt, 1.0 / t2))
    return np.array(rows)


def _write_rate_csv(path, rows):
    with open(path, "w") as fh:
        fh.write("B_T,inv_t2_grad_per_s\n")
        for bt, r in rows:
            fh.write("%.17g,%.17g\n" % (bt, r))


class FigureRecipe:
    def __init__(self, name, builder, description):
        self.name = name
        self.builder = builder
        self.description = description


def _series_entry(label, filename, role, method, panel="main", scale=None):
    e = {"label": label, "file": filename, "role": role, "method": method,
         "panel": panel}
    if scale:
        e["scale"] = scale
    return e


# --- recipe builders --------------------------------------------------------

def _fig2a(outdir, seed, allow_large, ref_data):
    geometry = {"kind": "single_dot", "d": 2, "q": 2.0, "r0_nm": 40.0, "N": 1e6}
    b_grid = np.geomspace(1.0, 10.0, 30)
    rows = _rate_vs_b_series("GaAs", geometry, 1.0, b_grid)
    _write_rate_csv(outdir / "gradient_rate_vs_B.csv", rows)
    series = [_series_entry("1/T2 (gradient)", "gradient_rate_vs_B.csv",
                            "line", "analytic", scale="loglog")]
    for i, ref in enumerate(ref_data or []):
        dest = outdir / f"reference_{i}_{Path(ref).name}"
        shutil.copy(ref, dest)
        series.append(_series_entry(f"reference {Path(ref).stem}", dest.name,
                                    "line", "external", scale="loglog"))
    return series


_GAAS_ST = {"kind": "double_dot_st0", "d": 2, "q": 2.0, "r0_nm": 25.0,
            "l_nm": 200.0, "N": 4.4e6}


def _fig2b(outdir, seed, allow_large, ref_data):
    series = []
    for method, label, role in (("magnus_gaussian", "averaged-field envelope", "line"),
                                ("short_time", "quartic short-time form", "line")):
        cfg = _cfg("GaAs", _GAAS_ST, {"B_mT": 45.0, "grad_T_per_um": 0.25},
                   "hahn", {"kind": "thermal"}, method, 5e-7, 250, seed)
        res = run_scenario(Scenario.from_dict(cfg), allow_large=allow_large)
        write_result(res, outdir, stem=method)
        series.append(_series_entry(label, f"{method}.csv", role, method))
    return series


def _fig2c(outdir, seed, allow_large, ref_data):
    series = []
    for b_mt in (45.0, 95.0, 195.0, 495.0):
        cfg = _cfg("GaAs", _GAAS_ST, {"B_mT": b_mt, "grad_T_per_um": 0.25},
                   "hahn", {"kind": "thermal"}, "magnus_gaussian", 2e-6, 300, seed)
        res = run_scenario(Scenario.from_dict(cfg), allow_large=allow_large)
        stem = f"B{int(b_mt)}mT"
        write_result(res, outdir, stem=stem)
        series.append(_series_entry(f"B = {b_mt:g} mT", f"{stem}.csv",
                                    "line", "magnus_gaussian"))
    return series


_SI_SINGLE = {"kind": "single_dot", "d": 2, "q": 2.0, "r0_nm": 15.0, "N": 1e4}
_SI_DOUBLE = {"kind": "double_dot_delocalized", "d": 2, "q": 2.0,
              "r0_nm": 15.0, "l_nm": 80.0, "N": 1e4}


def _fig3a(outdir, seed, allow_large, ref_data):
    b_grid = np.geomspace(0.03, 10.0, 40)
    series = []
    for label, geometry in (("single dot", _SI_SINGLE), ("double dot", _SI_DOUBLE)):
        rows = _rate_vs_b_series("Si-natural", geometry, 1.0, b_grid,
                                 a_nev=SI_A_NEV)
        fname = f"rate_{label.replace(' ', '_')}.csv"
        _write_rate_csv(outdir / fname, rows)
        series.append(_series_entry(label, fname, "line", "analytic",
                                    scale="loglog"))
    return series


def _fig3b(outdir, seed, allow_large, ref_data):
    series = []
    for b_mt, t_max in ((100.0, 3e-5), (30.0, 1.2e-5)):
        panel = f"B{int(b_mt)}mT"
        for method, role in (("exact", "line"), ("magnus_gaussian", "line")):
            cfg = _cfg("Si-natural", _SI_SINGLE,
                       {"B_mT": b_mt, "grad_T_per_um": 1.0},
                       "fid", {"kind": "narrowed"}, method, t_max, 400, seed,
                       a_nev=SI_A_NEV)
            res = run_scenario(Scenario.from_dict(cfg), allow_large=allow_large)
            stem = f"{panel}_{method}"
            write_result(res, outdir, stem=stem)
            series.append(_series_entry(f"{method}, B = {b_mt:g} mT",
                                        f"{stem}.csv", role, method, panel=panel))
    return series


def _fig3c(outdir, seed, allow_large, ref_data):
    # transverse-gradient-only echo: the quoted field variation is over r0
    # for the single dot and over l for the double dot
    series = []
    cases = {
        "single": (_SI_SINGLE, _SI_SINGLE["r0_nm"],
                   {20.0: 8e-5, 80.0: 2e-5, 400.0: 6e-6}),
        "double": (_SI_DOUBLE, _SI_DOUBLE["l_nm"],
                   {20.0: 8e-5, 80.0: 2e-5, 400.0: 6e-6}),
    }
    for panel, (geometry, scale_nm, tmaxes) in cases.items():
        for db_mt, t_max in tmaxes.items():
            grad = db_mt * 1e-3 / (scale_nm * 1e-3)  # T/um
            for method, role in (("magnus_gaussian", "line"), ("exact", "points")):
                cfg = _cfg("Si-natural", geometry,
                           {"B_mT": 0.0, "grad_T_per_um": grad},
                           "hahn", {"kind": "thermal"}, method, t_max,
                           120 if method == "exact" else 400, seed,
                           a_nev=SI_A_NEV)
                res = run_scenario(Scenario.from_dict(cfg), allow_large=allow_large)
                stem = f"{panel}_dBx{int(db_mt)}mT_{method}"
                write_result(res, outdir, stem=stem)
                series.append(_series_entry(
                    f"dBx = {db_mt:g} mT ({method})", f"{stem}.csv",
                    role, method, panel=panel))
    return series


_SIP = {"kind": "single_dot", "d": 3, "q": 1.0, "r0_nm": 3.0, "N": 250}


def _fig4a(outdir, seed, allow_large, ref_data):
    series = []
    base_field = {"B_mT": 200.0, "grad_T_per_um": 1.0}
    for method, role in (("magnus_gaussian", "line"),
                         ("exact", "line"),
                         ("magnus_nongaussian", "points")):
        cfg = _cfg("Si:P", _SIP, base_field, "fid", {"kind": "narrowed"},
                   method, 3e-4, 250, seed, a_nev=SI_A_NEV)
        res = run_scenario(Scenario.from_dict(cfg), allow_large=allow_large)
        write_result(res, outdir, stem=method)
        series.append(_series_entry(method, f"{method}.csv", role, method))
    # bath-size family: total coupling rescaled to hold N^(5/6) * (b gyro / A) fixed
    for n in (125, 500, 2000):
        a_nev = SI_A_NEV * (n / 250.0) ** (5.0 / 6.0)
        geometry = dict(_SIP, N=n)
        cfg = _cfg("Si:P", geometry, base_field, "fid", {"kind": "narrowed"},
                   "exact", 3e-4, 250, seed, a_nev=a_nev)
        res = run_scenario(Scenario.from_dict(cfg), allow_large=allow_large)
        stem = f"exact_N{n}"
        write_result(res, outdir, stem=stem)
        series.append(_series_entry(f"exact, N = {n}", f"{stem}.csv",
                                    "line", "exact", panel="n_sweep"))
    return series


def _fig4b(outdir, seed, allow_large, ref_data):
    series = []
    for b_mt in (0.0, 10.0, 20.0, 100.0):
        for method, role in (("magnus_gaussian", "line"), ("exact", "points")):
            cfg = _cfg("Si:P", _SIP, {"B_mT": b_mt, "grad_T_per_um": 1.0},
                       "hahn", {"kind": "thermal"}, method, 4e-5,
                       100 if method == "exact" else 300, seed, a_nev=SI_A_NEV)
            res = run_scenario(Scenario.from_dict(cfg), allow_large=allow_large)
            stem = f"B{int(b_mt)}mT_{method}"
            write_result(res, outdir, stem=stem)
            series.append(_series_entry(f"B = {b_mt:g} mT ({method})",
                                        f"{stem}.csv", role, method))
    return series


RECIPES = {
    "fig2a": FigureRecipe("fig2a", _fig2a,
                          "gradient dephasing rate vs B, large lateral dot"),
    "fig2b": FigureRecipe("fig2b", _fig2b,
                          "two-electron double-dot echo: envelope vs quartic form"),
    "fig2c": FigureRecipe("fig2c", _fig2c,
                          "two-electron double-dot echo at several B"),
    "fig3a": FigureRecipe("fig3a", _fig3a,
                          "narrowed free-evolution rates vs B, small dots"),
    "fig3b": FigureRecipe("fig3b", _fig3b,
                          "narrowed free-evolution decay: exact vs averaged field"),
    "fig3c": FigureRecipe("fig3c", _fig3c,
                          "gradient-only echo: exponential decay vs plateau"),
    "fig4a": FigureRecipe("fig4a", _fig4a,
                          "donor-bath free-evolution decay incl. bath-size family"),
    "fig4b": FigureRecipe("fig4b", _fig4b,
                          "donor-bath echo vs longitudinal field"),
}


def run_figure(name: str, outdir, seed: int = DEFAULT_SEED,
               allow_large: bool = False, ref_data=None) -> dict:
    """Run a named recipe; returns the figure manifest (also written to disk)."""
    if name not in RECIPES:
        raise ConfigurationError(f"unknown recipe {name!r}; known: {sorted(RECIPES)}")
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    series = RECIPES[name].builder(outdir, seed, allow_large, ref_data)
    manifest = {
        "recipe": name,
        "description": RECIPES[name].description,
        "seed": seed,
        "series": series,
        "panels": sorted({s["panel"] for s in series}),
    }
    (outdir / "figure_manifest.json").write_text(
        json.dumps(_jsonable(manifest), indent=2, sort_keys=True))
    return manifest
