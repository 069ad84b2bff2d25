"""Coherence-curve container, CSV/JSON serialization, and curve fitting."""

from __future__ import annotations

import json
from dataclasses import dataclass, field as dc_field
from pathlib import Path

import numpy as np

FID = "fid"
HAHN = "hahn"

_FLOAT_FMT = "%.17g"


@dataclass
class CoherenceCurve:
    protocol: str            # "fid" | "hahn"
    tau: np.ndarray          # total evolution time (2t for echo), seconds
    values: np.ndarray       # complex C(tau)
    t_pulse: np.ndarray | None = None   # echo pulse time t (tau/2), else None
    frame: str = "rotating"  # FID electron-Zeeman phase included ("lab") or not
    method: str = "exact"
    meta: dict = dc_field(default_factory=dict)

    def __post_init__(self):
        self.tau = np.asarray(self.tau, dtype=float)
        self.values = np.asarray(self.values, dtype=complex)
        if self.protocol not in (FID, HAHN):
            raise ValueError(f"unknown protocol {self.protocol!r}")
        if self.tau.shape != self.values.shape:
            raise ValueError("time grid and values must have equal length")

    @property
    def abs_values(self):
        return np.abs(self.values)

    def write_csv(self, path):
        path = Path(path)
        cols = [self.tau]
        header = ["tau_s"]
        if self.protocol == HAHN:
            tp = self.t_pulse if self.t_pulse is not None else self.tau / 2.0
            cols.append(np.asarray(tp, dtype=float))
            header.append("t_pulse_s")
        cols += [self.values.real, self.values.imag, np.abs(self.values)]
        header += ["re_C", "im_C", "abs_C"]
        data = np.column_stack(cols)
        with path.open("w") as fh:
            fh.write(",".join(header) + ",method\n")
            for row in data:
                fh.write(",".join(_FLOAT_FMT % v for v in row) + f",{self.method}\n")

    def write_manifest(self, path, config_echo: dict | None = None):
        doc = {
            "protocol": self.protocol,
            "frame": self.frame,
            "method": self.method,
            "meta": _jsonable(self.meta),
        }
        if config_echo is not None:
            doc["config"] = _jsonable(config_echo)
        Path(path).write_text(json.dumps(doc, indent=2, sort_keys=True))


def read_curve_csv(path):
    """Read a curve CSV back into a CoherenceCurve."""
    path = Path(path)
    with path.open() as fh:
        header = fh.readline().strip().split(",")
        rows = [line.strip().split(",") for line in fh if line.strip()]
    cols = {name: idx for idx, name in enumerate(header)}
    tau = np.array([float(r[cols["tau_s"]]) for r in rows])
    re = np.array([float(r[cols["re_C"]]) for r in rows])
    im = np.array([float(r[cols["im_C"]]) for r in rows])
    method = rows[0][cols["method"]] if "method" in cols else "unknown"
    protocol = HAHN if "t_pulse_s" in cols else FID
    tp = (np.array([float(r[cols["t_pulse_s"]]) for r in rows])
          if protocol == HAHN else None)
    return CoherenceCurve(protocol=protocol, tau=tau, values=re + 1j * im,
                          t_pulse=tp, method=method)


def _jsonable(obj):
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating,)):
        return float(obj)
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    return obj


def time_grid(t_max: float, points: int, spacing: str = "linear",
              t_min: float | None = None) -> np.ndarray:
    """Caller-facing time grid: linear grids start at 0, log grids at t_min."""
    if t_max <= 0 or points < 2:
        raise ValueError("need t_max > 0 and at least two points")
    if spacing == "linear":
        return np.linspace(0.0, t_max, points)
    if spacing == "log":
        lo = t_min if t_min is not None else t_max * 1e-4
        return np.geomspace(lo, t_max, points)
    raise ValueError(f"unknown spacing {spacing!r}")


# ---------------------------------------------------------------------------
# fitting helpers (summary statistics for sweeps and acceptance checks)
# ---------------------------------------------------------------------------

def one_over_e_time(tau, abs_c):
    """First crossing of |C| below 1/e.

    Interpolates ln(-ln|C|) linearly in ln(tau), which is exact for any
    stretched exponential exp[-(t/T)^p].  Returns nan when |C| never drops
    below 1/e on the grid.
    """
    tau = np.asarray(tau, dtype=float)
    y = np.asarray(abs_c, dtype=float)
    target = np.exp(-1.0)
    below = np.nonzero(y < target)[0]
    if below.size == 0:
        return float("nan")
    i1 = below[0]
    if i1 == 0:
        return float(tau[0])
    i0 = i1 - 1
    if tau[i0] <= 0 or y[i0] >= 1.0:
        # can't take ln(-ln 1); fall back to linear interpolation in t
        f = (target - y[i0]) / (y[i1] - y[i0])
        return float(tau[i0] + f * (tau[i1] - tau[i0]))
    g0, g1 = np.log(-np.log(y[i0])), np.log(-np.log(y[i1]))
    lt0, lt1 = np.log(tau[i0]), np.log(tau[i1])
    f = (0.0 - g0) / (g1 - g0)   # ln(-ln(1/e)) = 0
    return float(np.exp(lt0 + f * (lt1 - lt0)))


def fit_stretch_exponent(tau, abs_c, window=None, floor=1e-300):
    """Least-squares slope of ln(-ln|C|) vs ln(tau): the decay exponent p."""
    tau = np.asarray(tau, dtype=float)
    y = np.asarray(abs_c, dtype=float)
    m = (tau > 0) & (y > floor) & (y < 1.0)
    if window is not None:
        m &= (tau >= window[0]) & (tau <= window[1])
    if m.sum() < 2:
        return float("nan")
    lx = np.log(tau[m])
    ly = np.log(-np.log(y[m]))
    return float(np.polyfit(lx, ly, 1)[0])


def fit_exponential_rate(tau, abs_c, window=None, floor=1e-300):
    """Least-squares rate r from ln|C| = const - r * tau."""
    tau = np.asarray(tau, dtype=float)
    y = np.asarray(abs_c, dtype=float)
    m = (y > floor) & np.isfinite(y)
    if window is not None:
        m &= (tau >= window[0]) & (tau <= window[1])
    if m.sum() < 2:
        return float("nan")
    return float(-np.polyfit(tau[m], np.log(y[m]), 1)[0])


def plateau_stats(tau, abs_c):
    """Mean level and relative drift of |C| over the final decade of time."""
    tau = np.asarray(tau, dtype=float)
    y = np.asarray(abs_c, dtype=float)
    m = tau >= tau[-1] / 10.0
    seg = y[m]
    level = float(seg.mean())
    drift = float((seg.max() - seg.min()) / max(level, 1e-300))
    return level, drift
