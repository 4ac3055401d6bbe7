import copy

import pytest

FAST = {
    "n": 3,
    "sigma": 0.0,
    "schedule": {
        "durations": {
            "Z_IJ": 4,
            "OMEGA_ZI": 4,
            "S_CONSENSUS": 1,
            "J_LLS": 4,
            "J_CONSENSUS": 1,
            "BRAKE": 3,
            "ZC_OBSERVER": 6,
            "VC_M": 5,
            "M_CONSENSUS": 1,
        }
    },
    "estimation": {"m_window": 1.0},
}


@pytest.fixture
def fast_raw():
    """A short noiseless scenario that exercises every phase in about 30 simulated seconds."""
    return copy.deepcopy(FAST)
