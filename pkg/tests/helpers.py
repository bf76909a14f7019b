import numpy as np

from qsnet.netspace import JZ, NUMBER, NetworkLayout, NetworkState, SensorSpace


def modes(count, n_max, references=0):
    return NetworkLayout.uniform(SensorSpace.mode(n_max), count, NUMBER, n_ancilla=references)


def qubit_net(count, n_max, fixed=False):
    return NetworkLayout.uniform(SensorSpace.qubits(n_max, fixed), count, JZ)


def random_state(rng, layout):
    z = rng.standard_normal(layout.total_dim) + 1j * rng.standard_normal(layout.total_dim)
    return NetworkState.from_vector(z, layout)
