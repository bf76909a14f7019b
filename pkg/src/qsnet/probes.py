"""Catalog of probe states and the separable surrogate map."""

from __future__ import annotations

from typing import Sequence

import numpy as np

from .netspace import (
    CapacityError,
    GeneratorSpec,
    NetworkLayout,
    NetworkState,
    SensorSpace,
)

EIG_TOL = 1e-12


class DegenerateEigenvector(ValueError):
    """The requested extremal eigenstate is not unique; pass one explicitly."""


def _sensor_generator(layout: NetworkLayout, k: int) -> GeneratorSpec | None:
    params = layout.params_on(k)
    if not params:
        return None
    if len(params) > 1:
        raise ValueError(f"sensor {k} carries several parameters; catalog states need one")
    gen = layout.generators[params[0]][1]
    if not gen.is_diagonal:
        raise ValueError("catalog states need linear-spectrum generators")
    return gen


def vacuum(sensor: SensorSpace) -> np.ndarray:
    if not sensor.has_vacuum:
        raise CapacityError("sensor has no vacuum state")
    out = np.zeros(sensor.total_dim, complex)
    out[0] = 1
    return out


def extremal_state(sensor: SensorSpace, gen: GeneratorSpec, n: int, which: str) -> np.ndarray:
    """Local eigenvector with eigenvalue n*lam_max (``which="max"``) or n*lam_min.

    Searched among basis states holding at most n particles.
    """
    if n == 0:
        return vacuum(sensor)
    if n > sensor.n_max or sensor.sector_dims[n] == 0:
        raise CapacityError(f"sensor cannot hold {n} particles")
    lam = gen.lam_max if which == "max" else gen.lam_min
    diag = gen.local_diagonal(sensor)
    hits = np.flatnonzero((sensor.numbers <= n) & (np.abs(diag - n * lam) < EIG_TOL))
    if hits.size == 0:
        raise CapacityError(f"no eigenvalue {n * lam} within {n} particles")
    if hits.size > 1:
        raise DegenerateEigenvector(
            f"eigenvalue {n * lam} is degenerate in this sensor; supply the eigenvector explicitly")
    out = np.zeros(sensor.total_dim, complex)
    out[hits[0]] = 1
    return out


def full_state(sensor: SensorSpace, gen: GeneratorSpec | None, n: int) -> np.ndarray:
    """A local state with all n particles present and extremal |eigenvalue|."""
    if n > sensor.n_max or sensor.sector_dims[n] == 0:
        raise CapacityError(f"sensor cannot hold {n} particles")
    sl = sensor.sector_slice(n)
    if sensor.sector_dims[n] == 1:
        out = np.zeros(sensor.total_dim, complex)
        out[sl.start] = 1
        return out
    if gen is None:
        raise DegenerateEigenvector("ancilla sector is not one-dimensional; supply the state explicitly")
    which = "max" if abs(gen.lam_max) >= abs(gen.lam_min) else "min"
    out = extremal_state(sensor, gen, n, which)
    if sensor.numbers[np.argmax(np.abs(out))] != n:
        raise DegenerateEigenvector("extremal eigenvector does not carry all particles")
    return out


def _kron_all(vectors: Sequence[np.ndarray]) -> np.ndarray:
    out = np.ones(1, complex)
    for v in vectors:
        out = np.kron(out, v)
    return out


def _branch(layout: NetworkLayout, w: Sequence[int], which: str) -> np.ndarray:
    parts = []
    for k, sensor in enumerate(layout.sensors):
        gen = _sensor_generator(layout, k)
        n = int(w[k]) if k < len(w) else 0
        if gen is None or n == 0:
            if n:
                raise ValueError(f"ancilla sensor {k} cannot carry weight")
            parts.append(vacuum(sensor))
        else:
            parts.append(extremal_state(sensor, gen, n, which))
    return _kron_all(parts)


def _sensing(layout: NetworkLayout) -> list[int]:
    return [k for k in range(len(layout.sensors)) if k not in layout.ancillas]


def _spread(layout: NetworkLayout, values: dict[int, int]) -> list[int]:
    return [values.get(k, 0) for k in range(len(layout.sensors))]


def weighted_ghz(layout: NetworkLayout, w: Sequence[int]) -> NetworkState:
    """(prod |lam_max(w_k)> + prod |lam_min(w_k)>)/sqrt 2 over the sensing sensors."""
    sensing = _sensing(layout)
    w = [int(x) for x in w]
    if len(w) != len(sensing) or any(x < 0 for x in w) or not any(w):
        raise ValueError("need one nonnegative integer weight per sensing sensor, not all zero")
    full = _spread(layout, dict(zip(sensing, w)))
    vec = _branch(layout, full, "max") + _branch(layout, full, "min")
    return NetworkState.from_vector(vec, layout)


def ghz(layout: NetworkLayout, n_per_sensor: int) -> NetworkState:
    gens = {_sensor_generator(layout, k) for k in _sensing(layout)}
    specs = {(g.delta, g.two_s) for g in gens}
    if len(specs) != 1:
        raise ValueError("GHZ needs every sensor to share one generator")
    return weighted_ghz(layout, [n_per_sensor] * len(_sensing(layout)))


def proportional_ghz(layout: NetworkLayout, v: Sequence[float], n_max: int) -> NetworkState:
    """Weighted GHZ with w = N_max v/||v||_1; the weights must come out integral."""
    w = proportional_weights(v, n_max)
    return weighted_ghz(layout, w)


def proportional_weights(v: Sequence[float], n_max: int) -> list[int]:
    v = np.abs(np.asarray(v, float))
    w = n_max * v / v.sum()
    r = np.rint(w)
    if np.max(np.abs(w - r)) > 1e-9:
        raise ValueError(f"N_max*v/||v||_1 = {w} is not integral")
    return [int(x) for x in r]


def local_superposition(layout: NetworkLayout, w: Sequence[int]) -> NetworkState:
    """Product of per-sensor (|lam_min(w_k)> + |lam_max(w_k)>)/sqrt 2."""
    sensing = _sensing(layout)
    if len(w) != len(sensing):
        raise ValueError("one weight per sensing sensor")
    parts = []
    weights = dict(zip(sensing, (int(x) for x in w)))
    for k, sensor in enumerate(layout.sensors):
        n = weights.get(k, 0)
        if n == 0:
            parts.append(vacuum(sensor))
            continue
        gen = _sensor_generator(layout, k)
        a = extremal_state(sensor, gen, n, "min")
        b = extremal_state(sensor, gen, n, "max")
        parts.append((a + b) / np.sqrt(2))
    return NetworkState.from_vector(_kron_all(parts), layout)


def gns(layout: NetworkLayout, N: int, gamma: float = 1.0) -> NetworkState:
    """Superposition of "all N particles in sensor k" over every sensor.

    The last sensor's term is weighted by ``gamma``; for the imaging form that
    sensor is the reference, otherwise it is the last sensing sensor.
    """
    if gamma < 0:
        raise ValueError("gamma must be nonnegative")
    m = len(layout.sensors)
    vec = np.zeros(layout.total_dim, complex)
    for k in range(m):
        parts = [vacuum(s) for s in layout.sensors]
        parts[k] = full_state(layout.sensors[k], _sensor_generator(layout, k), N)
        vec += (gamma if k == m - 1 else 1.0) * _kron_all(parts)
    return NetworkState(vec / np.sqrt(m - 1 + gamma**2), layout)


def noon(layout: NetworkLayout, N: int) -> NetworkState:
    if len(layout.sensors) != 2:
        raise ValueError("NOON state needs exactly two sensors")
    return gns(layout, N, 1.0)


def uns(layout: NetworkLayout, N: int) -> NetworkState:
    """Product of (|N> + sqrt(m-1)|0>)/sqrt m over all m sensors."""
    m = len(layout.sensors)
    parts = []
    for k, s in enumerate(layout.sensors):
        if s.name != "mode":
            raise ValueError("UNS is defined on optical modes")
        parts.append((full_state(s, None, N) + np.sqrt(m - 1) * vacuum(s)) / np.sqrt(m))
    return NetworkState.from_vector(_kron_all(parts), layout)


def reduced_diagonal(state: NetworkState, sensor: int) -> np.ndarray:
    """Diagonal of the sensor's reduced density matrix in its local basis."""
    p = state.probabilities.reshape(state.layout.dims)
    axes = tuple(i for i in range(p.ndim) if i != sensor)
    return p.sum(axis=axes)


def separable_surrogate(state: NetworkState) -> NetworkState:
    """Product state with the same single-sensor generator statistics.

    Basis states of a sensor are grouped by (particle number, generator
    eigenvalues); each group's total probability goes to its lowest-index
    member with a positive real amplitude.
    """
    layout = state.layout
    parts = []
    for k, sensor in enumerate(layout.sensors):
        params = layout.params_on(k)
        keys = [sensor.numbers]
        for j in params:
            gen = layout.generators[j][1]
            if not gen.is_diagonal:
                raise ValueError("surrogate needs diagonal generators")
            keys.append(gen.local_diagonal(sensor))
        keys = np.round(np.stack(keys, axis=1), 12)
        p = reduced_diagonal(state, k)
        local = np.zeros(sensor.total_dim)
        _, first, inverse = np.unique(keys, axis=0, return_index=True, return_inverse=True)
        inverse = np.asarray(inverse).ravel()
        for g, rep in enumerate(first):
            local[rep] = p[inverse == g].sum()
        parts.append(np.sqrt(local))
    return NetworkState.from_vector(_kron_all(parts), layout)
