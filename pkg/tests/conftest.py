import os
import sys

import pytest

_ROOT = os.path.dirname(os.path.dirname(__file__))
_SRC = os.path.join(_ROOT, "src")
if _SRC not in sys.path:
    sys.path.insert(0, _SRC)


@pytest.fixture
def small_cfg():
    """N_T=16, N_RF=8, N_R=2, K=2, N_s=2, SNR 10 dB."""
    from mmwave_hbf.types import SystemConfig

    return SystemConfig(n_tx=16, n_rf=8, n_rx=2, n_users=2, n_streams=2, target_snr_db=10.0)


@pytest.fixture
def default_cfg():
    """N_T=64, N_RF=16, N_R=4, K=6, N_s=2, P=30 dBm, SNR 10 dB."""
    from mmwave_hbf.types import SystemConfig

    return SystemConfig(n_tx=64, n_rf=16, n_rx=4, n_users=6, n_streams=2, target_snr_db=10.0)
