"""Parameter sweeps over a base scenario, with per-value outputs and a summary."""

from __future__ import annotations

import copy
import json
import os
import traceback
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .curves import (fit_stretch_exponent, one_over_e_time, plateau_stats)
from .materials import ConfigurationError
from .scenario import Scenario, run_scenario, write_result

WORKERS_ENV = "SPINGRAD_WORKERS"


@dataclass
class SweepSpec:
    base: dict            # scenario configuration
    parameter: str        # dotted path, e.g. "field.B_mT"
    values: list
    outdir: str

    @classmethod
    def from_dict(cls, doc: dict) -> "SweepSpec":
        missing = [k for k in ("base", "parameter", "values", "outdir") if k not in doc]
        if missing:
            raise ConfigurationError(f"sweep config missing keys: {missing}")
        return cls(base=doc["base"], parameter=doc["parameter"],
                   values=list(doc["values"]), outdir=doc["outdir"])

    def validate(self) -> list:
        problems = []
        if not self.values:
            problems.append("sweep value list is empty")
        for v in self.values:
            if isinstance(v, (int, float)):
                if not np.isfinite(v):
                    problems.append(f"non-finite sweep value {v!r}")
            elif not isinstance(v, str):
                problems.append(f"unsupported sweep value type {type(v).__name__}")
        if not isinstance(self.parameter, str) or not self.parameter:
            problems.append("parameter must be a non-empty dotted path")
        return problems


def set_path(doc: dict, dotted: str, value):
    node = doc
    parts = dotted.split(".")
    for p in parts[:-1]:
        if p not in node or not isinstance(node[p], dict):
            node[p] = {}
        node = node[p]
    node[parts[-1]] = value


def _value_slug(value) -> str:
    return str(value).replace("/", "_").replace(" ", "")


def _run_one(spec: SweepSpec, value, allow_large: bool):
    cfg = copy.deepcopy(spec.base)
    set_path(cfg, spec.parameter, value)
    entry_dir = Path(spec.outdir) / f"{spec.parameter.replace('.', '_')}={_value_slug(value)}"
    try:
        result = run_scenario(Scenario.from_dict(cfg), allow_large=allow_large)
        write_result(result, entry_dir)
        tau, absc = result.curve.tau, result.curve.abs_values
        level, drift = plateau_stats(tau, absc)
        return {
            "value": value, "status": "ok", "dir": entry_dir.name,
            "tau_1e_s": one_over_e_time(tau, absc),
            "stretch_exponent": fit_stretch_exponent(tau, absc),
            "plateau_level": level, "plateau_drift": drift,
            "error": "",
        }
    except Exception as err:  # recorded per entry; sweep continues
        entry_dir.mkdir(parents=True, exist_ok=True)
        (entry_dir / "error.txt").write_text(
            f"{err}\n\n{traceback.format_exc()}")
        return {"value": value, "status": "failed", "dir": entry_dir.name,
                "tau_1e_s": float("nan"), "stretch_exponent": float("nan"),
                "plateau_level": float("nan"), "plateau_drift": float("nan"),
                "error": str(err)}


def run_sweep(spec: SweepSpec, allow_large: bool = False) -> dict:
    """Run every entry (concurrently up to $SPINGRAD_WORKERS), write summary.

    Returns {"rows": [...], "n_failed": int, "summary_path": str}.
    """
    problems = spec.validate()
    if problems:
        raise ConfigurationError("; ".join(problems))
    outdir = Path(spec.outdir)
    outdir.mkdir(parents=True, exist_ok=True)

    workers = int(os.environ.get(WORKERS_ENV, "1"))
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(lambda v: _run_one(spec, v, allow_large),
                                 spec.values))
    else:
        rows = [_run_one(spec, v, allow_large) for v in spec.values]

    summary = outdir / "summary.csv"
    cols = ["value", "status", "dir", "tau_1e_s", "stretch_exponent",
            "plateau_level", "plateau_drift", "error"]
    with summary.open("w") as fh:
        fh.write(",".join(cols) + "\n")
        for r in rows:
            fh.write(",".join(str(r[c]) for c in cols) + "\n")
    (outdir / "sweep_manifest.json").write_text(json.dumps(
        {"parameter": spec.parameter, "values": spec.values,
         "base": spec.base, "entries": [r["dir"] for r in rows]},
        indent=2, sort_keys=True, default=str))
    return {"rows": rows,
            "n_failed": sum(r["status"] != "ok" for r in rows),
            "summary_path": str(summary)}
