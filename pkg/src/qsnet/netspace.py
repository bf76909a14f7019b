"""Sensor Hilbert spaces, network layouts, local operators and phase encoding.

Basis convention: inside one sensor the sectors are stacked by ascending
particle number, and inside a sector states follow a fixed label order
(for qubit ensembles, spin-up before spin-down, first atom most significant).
The network index is row-major over sensors, so sensor 0 is the slowest axis.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from functools import cached_property
from typing import Sequence

import numpy as np

MAX_DIM = 2**16
HERMITIAN_TOL = 1e-12


class CapacityError(ValueError):
    """A requested state or space does not fit the declared capacity."""


class EstimationFailure(RuntimeError):
    """The probe carries no information about a weighted parameter."""


class NonCommutingError(ValueError):
    """Generators were assumed to commute but do not."""


@dataclass(frozen=True)
class SensorSpace:
    """One tensor factor of the network space.

    ``spins`` holds the spin-projection label ``l`` of every basis state, and
    ``labels`` a readable name for it. Both have length ``total_dim``.
    """

    sector_dims: tuple[int, ...]
    spins: tuple[float, ...]
    labels: tuple[str, ...]
    name: str = "generic"

    def __post_init__(self):
        dims = tuple(int(k) for k in self.sector_dims)
        object.__setattr__(self, "sector_dims", dims)
        if any(k < 0 for k in dims) or not dims:
            raise ValueError("sector dimensions must be nonnegative")
        if dims[0] > 1:
            raise ValueError("the zero-particle sector holds at most the vacuum")
        total = sum(dims)
        if total < 1:
            raise ValueError("sensor space is empty")
        if len(self.spins) != total or len(self.labels) != total:
            raise ValueError("need one spin label and one name per basis state")
        if len(set(self.labels)) != total:
            raise ValueError("basis labels must be unique")

    @classmethod
    def mode(cls, n_max: int) -> "SensorSpace":
        """Truncated bosonic mode holding up to ``n_max`` quanta."""
        n_max = int(n_max)
        if n_max < 0:
            raise ValueError("n_max must be nonnegative")
        return cls((1,) * (n_max + 1), (0.0,) * (n_max + 1),
                   tuple(str(n) for n in range(n_max + 1)), "mode")

    @classmethod
    def qubits(cls, n_max: int, fixed: bool = False) -> "SensorSpace":
        """Ensemble of distinguishable two-level atoms.

        With ``fixed`` the sensor always holds exactly ``n_max`` atoms, otherwise
        it is the direct sum of the vacuum and the 1..n_max atom sectors.
        """
        n_max = int(n_max)
        if n_max < 0 or (fixed and n_max == 0):
            raise ValueError("bad atom count")
        numbers = [n_max] if fixed else range(n_max + 1)
        dims = [0] * (n_max + 1)
        spins, labels = [], []
        for n in numbers:
            dims[n] = 2**n
            if n == 0:
                spins.append(0.0)
                labels.append("0")
                continue
            for bits in itertools.product("ud", repeat=n):
                spins.append(0.5 * (bits.count("u") - bits.count("d")))
                labels.append("".join(bits))
        return cls(tuple(dims), tuple(spins), tuple(labels), "qubits")

    @classmethod
    def generic(cls, sector_dims: Sequence[int], spins: Sequence[float] | None = None) -> "SensorSpace":
        total = int(sum(sector_dims))
        labels = []
        for n, k in enumerate(sector_dims):
            labels += [f"{n}.{j}" for j in range(k)]
        if spins is None:
            spins = [0.0] * total
        return cls(tuple(sector_dims), tuple(float(s) for s in spins), tuple(labels))

    @property
    def total_dim(self) -> int:
        return sum(self.sector_dims)

    @property
    def n_max(self) -> int:
        return len(self.sector_dims) - 1

    @cached_property
    def numbers(self) -> np.ndarray:
        """Particle number of every local basis state."""
        return np.repeat(np.arange(len(self.sector_dims)), self.sector_dims).astype(float)

    @property
    def has_vacuum(self) -> bool:
        return self.sector_dims[0] == 1

    def index(self, label: str) -> int:
        return self.labels.index(label)

    def sector_slice(self, n: int) -> slice:
        start = sum(self.sector_dims[:n])
        return slice(start, start + self.sector_dims[n])


@dataclass(frozen=True, eq=False)
class GeneratorSpec:
    """Local generator of one parameter.

    ``kind`` is "linear" for the diagonal operator with eigenvalue
    ``delta*n + l`` on a basis state with particle number n and spin label l,
    or "dense" for an explicit Hermitian matrix.
    """

    kind: str
    delta: float = 0.0
    two_s: int = 0
    matrix: np.ndarray | None = None
    name: str = ""

    def __post_init__(self):
        if self.kind == "linear":
            if self.delta == 0 and self.two_s == 0:
                raise ValueError("linear generator with delta = s = 0 is trivial")
            if self.two_s < 0:
                raise ValueError("spin must be nonnegative")
        elif self.kind == "dense":
            m = np.asarray(self.matrix, dtype=complex)
            if m.ndim != 2 or m.shape[0] != m.shape[1]:
                raise ValueError("dense generator must be square")
            if np.max(np.abs(m - m.conj().T), initial=0.0) > HERMITIAN_TOL:
                raise ValueError("dense generator is not Hermitian")
            object.__setattr__(self, "matrix", m)
        else:
            raise ValueError(f"unknown generator kind {self.kind!r}")

    @classmethod
    def linear(cls, delta: float, s: float, name: str = "") -> "GeneratorSpec":
        two_s = round(2 * s)
        if abs(two_s - 2 * s) > 1e-12:
            raise ValueError("s must be a half-integer")
        return cls("linear", float(delta), int(two_s), name=name)

    @classmethod
    def dense(cls, matrix, name: str = "") -> "GeneratorSpec":
        return cls("dense", matrix=np.asarray(matrix, dtype=complex), name=name)

    @property
    def s(self) -> float:
        return self.two_s / 2

    @property
    def is_diagonal(self) -> bool:
        return self.kind == "linear"

    @property
    def lam_min(self) -> float:
        if self.kind != "linear":
            raise ValueError("lam_min is defined for linear-spectrum generators only")
        return min(0.0, self.delta - self.s)

    @property
    def lam_max(self) -> float:
        if self.kind != "linear":
            raise ValueError("lam_max is defined for linear-spectrum generators only")
        return max(0.0, self.delta + self.s)

    def local_diagonal(self, sensor: SensorSpace) -> np.ndarray:
        if self.kind == "linear":
            spins = np.asarray(sensor.spins)
            if np.any(np.abs(spins) > self.s * sensor.numbers + 1e-12):
                raise ValueError("sensor spin labels exceed the generator's spin")
            return self.delta * sensor.numbers + spins
        d = np.diag(self.matrix)
        if np.max(np.abs(self.matrix - np.diag(d)), initial=0.0) > HERMITIAN_TOL:
            raise ValueError("generator is not diagonal")
        return d.real.copy()

    def local_matrix(self, sensor: SensorSpace) -> np.ndarray:
        if self.kind == "linear":
            return np.diag(self.local_diagonal(sensor)).astype(complex)
        if self.matrix.shape[0] != sensor.total_dim:
            raise ValueError(
                f"generator of size {self.matrix.shape[0]} does not fit sensor of size {sensor.total_dim}")
        return self.matrix


JZ = GeneratorSpec.linear(0.0, 0.5, "Jz")
NUMBER = GeneratorSpec.linear(1.0, 0.0, "n")


def collective_spin(sensor: SensorSpace) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Collective (Jx, Jy, Jz) of a qubit-ensemble sensor, block diagonal in sectors."""
    if sensor.name != "qubits":
        raise ValueError("collective spin needs a qubit-ensemble sensor")
    paulis = (np.array([[0, 1], [1, 0]], complex),
              np.array([[0, -1j], [1j, 0]], complex),
              np.array([[1, 0], [0, -1]], complex))
    out = [np.zeros((sensor.total_dim,) * 2, complex) for _ in range(3)]
    for n, k in enumerate(sensor.sector_dims):
        if k == 0 or n == 0:
            continue
        sl = sensor.sector_slice(n)
        for a, p in enumerate(paulis):
            block = np.zeros((k, k), complex)
            for j in range(n):
                ops = [np.eye(2)] * n
                ops[j] = p / 2
                term = ops[0]
                for o in ops[1:]:
                    term = np.kron(term, o)
                block += term
            out[a][sl, sl] = block
    return tuple(out)


@dataclass(frozen=True, eq=False)
class NetworkLayout:
    """Sensors plus one (sensor, generator) pair per parameter."""

    sensors: tuple[SensorSpace, ...]
    generators: tuple[tuple[int, GeneratorSpec], ...]
    ancillas: frozenset[int] | None = None
    labels: tuple[str, ...] | None = None

    def __post_init__(self):
        sensors = tuple(self.sensors)
        gens = tuple((int(i), g) for i, g in self.generators)
        object.__setattr__(self, "sensors", sensors)
        object.__setattr__(self, "generators", gens)
        if not sensors:
            raise ValueError("a network needs at least one sensor")
        used = {i for i, _ in gens}
        anc = frozenset(set(range(len(sensors))) - used) if self.ancillas is None else frozenset(self.ancillas)
        object.__setattr__(self, "ancillas", anc)
        for i, g in gens:
            if not 0 <= i < len(sensors):
                raise ValueError(f"generator sensor index {i} out of range")
            if i in anc:
                raise ValueError(f"sensor {i} is an ancilla and cannot carry a generator")
            g.local_matrix(sensors[i])
            if g.kind == "dense":
                _check_sector_diagonal(g.matrix, sensors[i])
        if self.labels is None:
            object.__setattr__(self, "labels", tuple(f"phi{k + 1}" for k in range(len(gens))))
        elif len(self.labels) != len(gens):
            raise ValueError("one label per parameter")
        if self.total_dim > MAX_DIM:
            raise CapacityError(f"network dimension {self.total_dim} exceeds {MAX_DIM}")

    @classmethod
    def uniform(cls, sensor: SensorSpace, count: int, generator: GeneratorSpec | None,
                n_ancilla: int = 0, ancilla: SensorSpace | None = None) -> "NetworkLayout":
        """``count`` identical sensors each with ``generator``, then ancillas."""
        sensors = [sensor] * count + [ancilla or sensor] * n_ancilla
        gens = [] if generator is None else [(k, generator) for k in range(count)]
        return cls(tuple(sensors), tuple(gens))

    @property
    def dims(self) -> tuple[int, ...]:
        return tuple(s.total_dim for s in self.sensors)

    @property
    def total_dim(self) -> int:
        return int(np.prod(self.dims, dtype=np.int64))

    @property
    def d(self) -> int:
        return len(self.generators)

    @property
    def all_diagonal(self) -> bool:
        return all(g.is_diagonal for _, g in self.generators)

    def params_on(self, sensor_index: int) -> list[int]:
        return [k for k, (i, _) in enumerate(self.generators) if i == sensor_index]

    def flat_index(self, local: Sequence[int | str]) -> int:
        idx = [s.index(x) if isinstance(x, str) else int(x) for s, x in zip(self.sensors, local)]
        return int(np.ravel_multi_index(idx, self.dims))

    def broadcast(self, sensor_index: int, local: np.ndarray) -> np.ndarray:
        """Lift a per-sensor diagonal to the full flattened network."""
        shape = [1] * len(self.sensors)
        shape[sensor_index] = self.dims[sensor_index]
        return np.broadcast_to(np.reshape(local, shape), self.dims).ravel()

    @cached_property
    def numbers(self) -> np.ndarray:
        """Per-sensor particle numbers of every network basis state, shape (D, sensors)."""
        return np.stack([self.broadcast(k, s.numbers) for k, s in enumerate(self.sensors)], axis=1)


def _check_sector_diagonal(m: np.ndarray, sensor: SensorSpace):
    n = sensor.numbers
    mixing = np.abs(m[n[:, None] != n[None, :]])
    if mixing.size and mixing.max() > HERMITIAN_TOL:
        raise ValueError("dense generator must not change the particle number")


@dataclass(frozen=True, eq=False)
class NetworkState:
    amplitudes: np.ndarray
    layout: NetworkLayout

    def __post_init__(self):
        a = np.asarray(self.amplitudes, dtype=complex).ravel()
        if a.size != self.layout.total_dim:
            raise ValueError(f"expected {self.layout.total_dim} amplitudes, got {a.size}")
        norm = np.linalg.norm(a)
        if abs(norm - 1) > 1e-10:
            raise ValueError(f"state norm {norm} differs from 1")
        a.setflags(write=False)
        object.__setattr__(self, "amplitudes", a)

    @classmethod
    def from_vector(cls, vec, layout: NetworkLayout, normalize: bool = True) -> "NetworkState":
        vec = np.asarray(vec, dtype=complex).ravel()
        if normalize:
            vec = vec / np.linalg.norm(vec)
        return cls(vec, layout)

    @classmethod
    def basis(cls, layout: NetworkLayout, local: Sequence[int | str]) -> "NetworkState":
        vec = np.zeros(layout.total_dim, complex)
        vec[layout.flat_index(local)] = 1
        return cls(vec, layout)

    @classmethod
    def product(cls, layout: NetworkLayout, locals_: Sequence[np.ndarray]) -> "NetworkState":
        vec = np.ones(1, complex)
        for v in locals_:
            vec = np.kron(vec, np.asarray(v, complex))
        return cls.from_vector(vec, layout)

    @property
    def probabilities(self) -> np.ndarray:
        return np.abs(self.amplitudes) ** 2

    def overlap(self, other: "NetworkState") -> complex:
        return complex(np.vdot(self.amplitudes, other.amplitudes))


@dataclass(frozen=True, eq=False)
class LocalOperator:
    """``1 x ... x op x ... x 1`` kept in factored form."""

    layout: NetworkLayout
    sensor: int
    matrix: np.ndarray
    diagonal: np.ndarray | None = field(default=None)

    def apply(self, vec: np.ndarray) -> np.ndarray:
        if self.diagonal is not None:
            return self.full_diagonal() * vec
        return apply_local(self.layout, self.sensor, self.matrix, vec)

    def full_diagonal(self) -> np.ndarray:
        if self.diagonal is None:
            raise ValueError("operator is not diagonal")
        return self.layout.broadcast(self.sensor, self.diagonal)

    def to_dense(self) -> np.ndarray:
        dims = self.layout.dims
        left = int(np.prod(dims[: self.sensor], dtype=np.int64))
        right = int(np.prod(dims[self.sensor + 1:], dtype=np.int64))
        return np.kron(np.kron(np.eye(left), self.matrix), np.eye(right))

    def expectation(self, state: NetworkState) -> float:
        return float(np.vdot(state.amplitudes, self.apply(state.amplitudes)).real)


def apply_local(layout: NetworkLayout, sensor: int, op: np.ndarray, vec: np.ndarray) -> np.ndarray:
    t = np.reshape(vec, layout.dims)
    t = np.tensordot(op, t, axes=([1], [sensor]))
    return np.moveaxis(t, 0, sensor).reshape(-1)


def embed_local(layout: NetworkLayout, sensor_index: int, op: GeneratorSpec | np.ndarray) -> LocalOperator:
    """Embed a single-sensor operator into the network."""
    if not 0 <= sensor_index < len(layout.sensors):
        raise ValueError(f"sensor index {sensor_index} out of range")
    sensor = layout.sensors[sensor_index]
    if not isinstance(op, GeneratorSpec):
        op = GeneratorSpec.dense(op)
    m = op.local_matrix(sensor)
    diag = op.local_diagonal(sensor) if op.is_diagonal else None
    return LocalOperator(layout, sensor_index, m, diag)


def _local_hamiltonian(layout: NetworkLayout, sensor: int, phi: np.ndarray):
    params = layout.params_on(sensor)
    s = layout.sensors[sensor]
    if all(layout.generators[k][1].is_diagonal for k in params):
        diag = sum((phi[k] * layout.generators[k][1].local_diagonal(s) for k in params), np.zeros(s.total_dim))
        return diag, None
    h = sum((phi[k] * layout.generators[k][1].local_matrix(s) for k in params),
            np.zeros((s.total_dim,) * 2, complex))
    return None, h


def apply_unitary(layout: NetworkLayout, vec: np.ndarray, phi) -> np.ndarray:
    """Apply U(phi) = prod_k exp(-i phi_k H_k) to a raw amplitude vector."""
    phi = np.asarray(phi, dtype=float)
    if phi.shape != (layout.d,):
        raise ValueError(f"expected {layout.d} phases, got shape {phi.shape}")
    out = np.asarray(vec, complex)
    phase = np.zeros(layout.total_dim)
    for sensor in sorted({i for i, _ in layout.generators}):
        diag, h = _local_hamiltonian(layout, sensor, phi)
        if h is None:
            phase = phase + layout.broadcast(sensor, diag)
        else:
            w, v = np.linalg.eigh(h)
            u = (v * np.exp(-1j * w)) @ v.conj().T
            out = apply_local(layout, sensor, u, out)
    return np.exp(-1j * phase) * out


def evolve(state: NetworkState, phi) -> NetworkState:
    vec = apply_unitary(state.layout, state.amplitudes, phi)
    return NetworkState.from_vector(vec, state.layout)


def _expm_derivative(h: np.ndarray, dh: np.ndarray) -> np.ndarray:
    """d/dt exp(-i (h + t dh)) at t = 0 via divided differences in the eigenbasis of h."""
    w, v = np.linalg.eigh(h)
    a, b = np.meshgrid(w, w, indexing="ij")
    # (e^{-ia} - e^{-ib})/(a - b) written so that a == b gives -i e^{-ia}
    dd = -1j * np.exp(-0.5j * (a + b)) * np.sinc((a - b) / (2 * np.pi))
    return v @ ((v.conj().T @ dh @ v) * dd) @ v.conj().T


def generator_at(layout: NetworkLayout, k: int, phi) -> LocalOperator:
    """G_k = -i (dU^dagger/dphi_k) U for the layout's encoding at ``phi``."""
    if not 0 <= k < layout.d:
        raise ValueError(f"parameter index {k} out of range")
    phi = np.asarray(phi, dtype=float)
    sensor, gen = layout.generators[k]
    diag, h = _local_hamiltonian(layout, sensor, phi)
    if h is None:
        return embed_local(layout, sensor, gen)
    s = layout.sensors[sensor]
    hk = gen.local_matrix(s)
    if np.max(np.abs(h @ hk - hk @ h), initial=0.0) < HERMITIAN_TOL:
        return LocalOperator(layout, sensor, hk)
    w, v = np.linalg.eigh(h)
    u = (v * np.exp(-1j * w)) @ v.conj().T
    du = _expm_derivative(h, hk)
    g = -1j * du.conj().T @ u
    g = 0.5 * (g + g.conj().T)
    return LocalOperator(layout, sensor, g)


def resource_expectation(state: NetworkState) -> float:
    """Mean total particle number over all sensors, ancillas included."""
    return float(state.probabilities @ state.layout.numbers.sum(axis=1))
