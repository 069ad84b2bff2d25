"""Scenario configuration, validation, and the single-run driver."""

from __future__ import annotations

import time
from dataclasses import dataclass, field as dc_field, asdict

import numpy as np

from . import closed_forms, exact
from .analysis import build_report
from .bath import (NarrowedState, NonConvergenceError, converge_ensemble,
                   sample_narrowed, sample_thermal)
from .curves import FID, HAHN, CoherenceCurve, time_grid
from .geometry import (DeviceGeometry, SiteTable, build_quadrature_table,
                       build_site_table)
from .materials import (ConfigurationError, FieldConfig, MaterialPreset,
                        preset, preset_names, with_hyperfine_total)
from .units import to_angular_frequency

METHODS = ("exact", "magnus_gaussian", "magnus_nongaussian", "short_time")
PROTOCOLS = (FID, HAHN)
STATES = ("narrowed", "thermal")
FRAMES = ("rotating", "lab")

EXACT_N_CAP = 1e5            # override with allow_large
SITE_SUM_CAP = 2_000_000     # closed forms switch to quadrature above this

DEFAULT_SEED = 20200213      # fixed documented constant: recipe outputs are reproducible

CONFIG_SCHEMA = {
    "type": "object",
    "required": ["material", "geometry", "field", "protocol", "state",
                 "method", "time_grid"],
    "properties": {
        "material": {"type": "string", "enum": sorted(preset_names())},
        "hyperfine_total": {
            "type": "object",
            "properties": {"value": {"type": "number"},
                           "unit": {"type": "string"}},
        },
        "species_mode": {"enum": ["effective", "full"]},
        "geometry": {
            "type": "object",
            "required": ["kind", "N"],
            "properties": {
                "kind": {"enum": ["single_dot", "double_dot_delocalized",
                                  "double_dot_st0"]},
                "d": {"enum": [1, 2, 3]},
                "q": {"type": "number", "exclusiveMinimum": 0},
                "r0_nm": {"type": "number", "exclusiveMinimum": 0},
                "l_nm": {"type": "number", "minimum": 0},
                "N": {"type": "number", "minimum": 1},
                "sign": {"enum": [1, -1]},
                "a_cut": {"type": "number"},
            },
        },
        "field": {
            "type": "object",
            "required": ["B_mT"],
            "properties": {"B_mT": {"type": "number", "minimum": 0},
                           "grad_T_per_um": {"type": "number", "minimum": 0}},
        },
        "protocol": {"enum": list(PROTOCOLS)},
        "state": {
            "type": "object",
            "required": ["kind"],
            "properties": {"kind": {"enum": list(STATES)},
                           "M": {"type": ["integer", "null"], "minimum": 1},
                           "tol": {"type": "number", "exclusiveMinimum": 0}},
        },
        "method": {"enum": list(METHODS)},
        "time_grid": {
            "type": "object",
            "required": ["t_max_s", "points"],
            "properties": {"t_max_s": {"type": "number", "exclusiveMinimum": 0},
                           "points": {"type": "integer", "minimum": 2},
                           "spacing": {"enum": ["linear", "log"]}},
        },
        "seed": {"type": "integer"},
        "frame": {"enum": list(FRAMES)},
    },
}


@dataclass
class Scenario:
    material: str
    geometry: dict
    field: dict
    protocol: str
    state: dict
    method: str
    time_grid: dict
    seed: int = DEFAULT_SEED
    frame: str = "rotating"
    species_mode: str = "effective"
    hyperfine_total: dict | None = None   # {"value": ..., "unit": ...}

    @classmethod
    def from_dict(cls, doc: dict) -> "Scenario":
        known = {f for f in cls.__dataclass_fields__}
        unknown = set(doc) - known
        if unknown:
            raise ConfigurationError(f"unknown configuration keys: {sorted(unknown)}")
        return cls(**doc)

    def to_dict(self) -> dict:
        return asdict(self)

    # resolved pieces -------------------------------------------------------

    def resolved_material(self) -> MaterialPreset:
        mat = preset(self.material)
        if self.hyperfine_total:
            a = to_angular_frequency(self.hyperfine_total["value"],
                                     self.hyperfine_total.get("unit", "rad/s"))
            mat = with_hyperfine_total(mat, a)
        return mat

    def resolved_geometry(self) -> DeviceGeometry:
        g = dict(self.geometry)
        return DeviceGeometry(
            kind=g["kind"], d=int(g.get("d", 2)), q=float(g.get("q", 2.0)),
            r0_nm=float(g.get("r0_nm", 25.0)), N=float(g["N"]),
            l_nm=float(g.get("l_nm", 0.0)), sign=int(g.get("sign", 1)),
            a_cut=float(g.get("a_cut", 1e-6)))

    def resolved_field(self) -> FieldConfig:
        return FieldConfig(B_T=float(self.field["B_mT"]) * 1e-3,
                           grad_T_per_um=float(self.field.get("grad_T_per_um", 0.0)))

    def times(self) -> np.ndarray:
        tg = self.time_grid
        return time_grid(float(tg["t_max_s"]), int(tg["points"]),
                         tg.get("spacing", "linear"), tg.get("t_min_s"))


def validate(doc: dict, allow_large: bool = False) -> list:
    """Return every violated rule as a message (empty list = valid)."""
    problems = []
    if not isinstance(doc, dict):
        return ["configuration must be a JSON object"]
    for key in ("material", "geometry", "field", "protocol", "state",
                "method", "time_grid"):
        if key not in doc:
            problems.append(f"missing required key {key!r}")
    if problems:
        return problems

    try:
        sc = Scenario.from_dict(doc)
    except (ConfigurationError, TypeError) as err:
        return [str(err)]

    if sc.material not in preset_names():
        problems.append(f"unknown material {sc.material!r} (choose from {preset_names()})")
    if sc.method not in METHODS:
        problems.append(f"method must be one of {METHODS}")
    if sc.protocol not in PROTOCOLS:
        problems.append(f"protocol must be one of {PROTOCOLS}")
    if sc.frame not in FRAMES:
        problems.append(f"frame must be one of {FRAMES}")
    if sc.species_mode not in ("effective", "full"):
        problems.append("species_mode must be 'effective' or 'full'")

    state_kind = sc.state.get("kind")
    if state_kind not in STATES:
        problems.append(f"state.kind must be one of {STATES}")
    m_real = sc.state.get("M")
    if m_real is not None and (not isinstance(m_real, int) or m_real < 1):
        problems.append("state.M must be a positive integer or null")
    tol = sc.state.get("tol", 0.01)
    if not (isinstance(tol, (int, float)) and tol > 0):
        problems.append("state.tol must be > 0")

    geom = None
    try:
        geom = sc.resolved_geometry()
    except ConfigurationError as err:
        problems.append(f"geometry: {err}")
    try:
        sc.resolved_field()
    except ConfigurationError as err:
        problems.append(f"field: {err}")
    try:
        mat = sc.resolved_material()
    except (ConfigurationError, KeyError) as err:
        problems.append(f"material: {err}")
        mat = None

    tg = sc.time_grid
    if float(tg.get("t_max_s", 0)) <= 0:
        problems.append("time_grid.t_max_s must be > 0")
    if int(tg.get("points", 0)) < 2:
        problems.append("time_grid.points must be >= 2")
    if tg.get("spacing", "linear") not in ("linear", "log"):
        problems.append("time_grid.spacing must be 'linear' or 'log'")

    if sc.method == "magnus_nongaussian":
        if state_kind != "narrowed":
            problems.append("magnus_nongaussian requires a narrowed state")
        if mat is not None:
            spins = ([mat.effective_single_species.spin]
                     if sc.species_mode == "effective"
                     else [s.spin for s in mat.species])
            if any(s != 0.5 for s in spins):
                problems.append("magnus_nongaussian requires all spins I = 1/2")
    if sc.method == "short_time" and sc.protocol != HAHN:
        problems.append("short_time is an echo-envelope approximation: protocol must be 'hahn'")
    if sc.method == "exact" and geom is not None and geom.N > EXACT_N_CAP \
            and not allow_large:
        problems.append(f"exact method with N = {geom.N:g} exceeds the cap "
                        f"{EXACT_N_CAP:g}; pass allow_large to override")
    return problems


@dataclass
class ScenarioResult:
    curve: CoherenceCurve
    report: dict
    warnings: list
    wall_time_s: float
    m_used: int | None = None
    config: dict = dc_field(default_factory=dict)


def _pick_table(sc: Scenario, mat, geom, field) -> SiteTable:
    if sc.method in ("exact", "magnus_nongaussian"):
        return build_site_table(geom, mat, field, seed=sc.seed,
                                species_mode=sc.species_mode)
    if geom.site_count() > SITE_SUM_CAP:
        return build_quadrature_table(geom, mat, field)
    return build_site_table(geom, mat, field, seed=sc.seed,
                            species_mode=sc.species_mode)


def run_scenario(sc: Scenario, allow_large: bool = False) -> ScenarioResult:
    """Validate, build the bath, dispatch the solver, and assemble outputs."""
    problems = validate(sc.to_dict(), allow_large=allow_large)
    if problems:
        raise ConfigurationError("; ".join(problems))

    t0 = time.perf_counter()
    mat = sc.resolved_material()
    geom = sc.resolved_geometry()
    field = sc.resolved_field()
    sites = _pick_table(sc, mat, geom, field)
    b = field.b(mat.g_factor)
    tau = sc.times()
    t_evolve = tau if sc.protocol == FID else tau / 2.0

    m_used = None
    state_kind = sc.state.get("kind")
    if sc.method == "exact":
        if state_kind == "narrowed":
            state = sample_narrowed(sites, sc.seed)
            runner = exact.fid_exact if sc.protocol == FID else exact.hahn_exact
            curve = runner(sites, state, b, t_evolve, frame=sc.frame)
            m_used = 1
        else:
            proto = sc.protocol

            def evaluate(ens):
                runner = exact.fid_exact if proto == FID else exact.hahn_exact
                return runner(sites, ens, b, t_evolve).values

            if sc.state.get("M"):
                m_used = int(sc.state["M"])
                vals = evaluate(sample_thermal(sites, m_used, sc.seed))
            else:
                m_used, vals = converge_ensemble(
                    evaluate, sites, seed=sc.seed,
                    tol=float(sc.state.get("tol", 0.01)),
                    m_cap=int(sc.state.get("M_cap", 6400)))
            if sc.protocol == FID:
                if sc.frame == "lab":
                    vals = vals * np.exp(1j * b * t_evolve)
                curve = CoherenceCurve(protocol=FID, tau=tau, values=vals,
                                       frame=sc.frame, method="exact",
                                       meta=dict(sites.meta))
            else:
                curve = CoherenceCurve(protocol=HAHN, tau=tau, values=vals,
                                       t_pulse=t_evolve, frame=sc.frame,
                                       method="exact", meta=dict(sites.meta))
    elif sc.method == "magnus_gaussian":
        if state_kind == "narrowed":
            state = (sample_narrowed(sites, sc.seed)
                     if sites.meta.get("site_model") == "physical" else None)
            curve = closed_forms.narrowed_gaussian(sites, state, sc.protocol,
                                                   b, t_evolve, frame=sc.frame)
        else:
            curve = closed_forms.thermal_gaussian(sites, sc.protocol, b,
                                                  t_evolve, frame=sc.frame)
    elif sc.method == "magnus_nongaussian":
        state = sample_narrowed(sites, sc.seed)
        curve = closed_forms.nongaussian_half_spin(sites, state, sc.protocol,
                                                   b, t_evolve, frame=sc.frame)
    else:  # short_time
        curve = closed_forms.hahn_short_time(sites, t_evolve, frame=sc.frame)

    report = build_report(mat, geom, field, horizon_s=float(tau[-1]))
    warnings = list(report.advisories)
    curve.meta.update({"seed": sc.seed, "method": sc.method,
                       "M_used": m_used, "frame": sc.frame})
    return ScenarioResult(curve=curve, report=report.to_dict(),
                          warnings=warnings,
                          wall_time_s=time.perf_counter() - t0,
                          m_used=m_used, config=sc.to_dict())


def write_result(result: ScenarioResult, outdir, stem: str = "curve"):
    """Write curve CSV plus a manifest sufficient to reproduce it."""
    from pathlib import Path
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    csv_path = outdir / f"{stem}.csv"
    result.curve.write_csv(csv_path)
    manifest = {
        "config": result.config,
        "warnings": result.warnings,
        "report": result.report,
        "wall_time_s": result.wall_time_s,
        "M_used": result.m_used,
        "outputs": [csv_path.name],
    }
    import json
    from .curves import _jsonable
    (outdir / f"{stem}_manifest.json").write_text(
        json.dumps(_jsonable(manifest), indent=2, sort_keys=True))
    return csv_path
