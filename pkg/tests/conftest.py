import numpy as np
import pytest

from spingrad.geometry import SiteTable
from spingrad.units import MU_B_RAD_PER_ST


def make_table(coupling, bx, spin=0.5, gamma_I=53e6, g_factor=2.0,
               theta=None, weight=None, meta=None):
    """Hand-built site table for targeted tests."""
    coupling = np.asarray(coupling, dtype=float)
    bx = np.asarray(bx, dtype=float)
    n = coupling.size
    spin = np.full(n, spin, dtype=float) if np.isscalar(spin) else np.asarray(spin, float)
    gam = np.full(n, gamma_I, dtype=float) if np.isscalar(gamma_I) else np.asarray(gamma_I, float)
    return SiteTable(
        x=np.arange(n, dtype=float),
        coupling=coupling,
        bx=bx,
        theta=np.zeros(n) if theta is None else np.asarray(theta, float),
        species=np.zeros(n, dtype=np.int32),
        spin=spin,
        gamma_I=gam,
        gyro=gam / (abs(g_factor) * MU_B_RAD_PER_ST),
        weight=np.ones(n) if weight is None else np.asarray(weight, float),
        species_table=("test",),
        meta=dict(meta or {}, site_model="physical"),
    )


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
