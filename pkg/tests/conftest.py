import numpy as np
import pytest

from pvtwin import (DEMO_PARAMS, DEMO_PLANT, DEMO_X2_BOUNDS, EnvInputs, Measurement,
                    mpp_point)


@pytest.fixture(scope="session")
def plant():
    return DEMO_PLANT


@pytest.fixture(scope="session")
def params():
    return DEMO_PARAMS


@pytest.fixture(scope="session")
def x2_bounds():
    return DEMO_X2_BOUNDS


def forward_measurement(g, t_c, params=DEMO_PARAMS, plant=DEMO_PLANT, ts=0.0):
    """Sample synthesized at the closed-form MPP of the given parameters."""
    pt = mpp_point(params, plant, EnvInputs(g=g, t_c=t_c))
    return Measurement(ts=ts, v_meas=pt.v, i_meas=pt.i, t_meas=t_c)


@pytest.fixture(scope="session")
def forward():
    return forward_measurement


def sample_params_box(rng, n):
    """Random module-scale parameter draws in a regime where the closed-form
    MPP tracks the true curve maximum (series drop well below the diode
    voltage scale)."""
    out = []
    while len(out) < n:
        rs = rng.uniform(0.05, 0.45)
        rsh = rng.uniform(80.0, 1200.0)
        kd = rng.uniform(0.9, 1.5)
        iph0 = rng.uniform(0.006, 0.016)
        is0 = 10.0 ** rng.uniform(-11.0, -9.0)
        if rs < rsh:
            out.append((rs, rsh, kd, iph0, is0))
    return out
