import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from qsnet.netspace import JZ, NetworkLayout, SensorSpace  # noqa: E402


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture
def two_qubits():
    return NetworkLayout.uniform(SensorSpace.qubits(1, fixed=True), 2, JZ)

