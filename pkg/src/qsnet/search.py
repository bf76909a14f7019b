"""Exhaustive and sampled searches over small probe subspaces.

Results are reproducible for a fixed seed: candidates are generated in
fixed-size chunks, chunk ``c`` draws from ``Philox(seed).jumped(c)``, and the
winner is the lowest-index candidate attaining the minimum. The number of
worker threads therefore never changes the answer.
"""

from __future__ import annotations

import itertools
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import bounds
from .fisher import (
    INVERTIBLE_RTOL,
    LinearReparam,
    Qfim,
    Weighting,
    qfim_pure_commuting,
    reduce,
    reparam,
    weighted_crb,
)
from .netspace import CapacityError, EstimationFailure, NetworkLayout, NetworkState, embed_local

MAX_SUBSPACE = 4096
MAX_GRID = 2_000_000
CHUNK = 1024
BEAT_TOL = 1e-6


@dataclass(frozen=True, eq=False)
class SubspaceSpec:
    """Particle-number constrained span of network basis states.

    ``kind`` is "total_at_most" (``value`` = N_max), "per_sensor_at_most"
    (``value`` = n_max) or "fixed_per_sensor" (``value`` = per-sensor counts).
    """

    layout: NetworkLayout
    kind: str
    value: int | tuple[int, ...]

    @classmethod
    def total_at_most(cls, layout, n_max):
        return cls(layout, "total_at_most", int(n_max))

    @classmethod
    def per_sensor_at_most(cls, layout, n_max):
        return cls(layout, "per_sensor_at_most", int(n_max))

    @classmethod
    def fixed_per_sensor(cls, layout, counts):
        return cls(layout, "fixed_per_sensor", tuple(int(c) for c in counts))

    @property
    def indices(self) -> np.ndarray:
        n = self.layout.numbers
        if self.kind == "total_at_most":
            mask = n.sum(axis=1) <= self.value
        elif self.kind == "per_sensor_at_most":
            mask = np.all(n <= self.value, axis=1)
        elif self.kind == "fixed_per_sensor":
            if len(self.value) != n.shape[1]:
                raise ValueError("one count per sensor")
            mask = np.all(n == np.asarray(self.value), axis=1)
        else:
            raise ValueError(f"unknown subspace kind {self.kind!r}")
        return np.flatnonzero(mask)

    @property
    def particle_cap(self) -> int:
        if self.kind == "total_at_most":
            return self.value
        if self.kind == "per_sensor_at_most":
            return self.value * len(self.layout.sensors)
        return sum(self.value)

    def embed(self, coeffs: np.ndarray) -> NetworkState:
        vec = np.zeros(self.layout.total_dim, complex)
        vec[self.indices] = coeffs
        return NetworkState.from_vector(vec, self.layout)


@dataclass(frozen=True)
class EstimatePhi:
    weights: tuple[float, ...]


@dataclass(frozen=True)
class SingleFunction:
    v: tuple[float, ...]


@dataclass(frozen=True)
class RandomHaar:
    count: int
    seed: int = 0


@dataclass(frozen=True)
class RandomProduct:
    """Random product states: each sensor's restriction is an independent Gaussian vector.

    Only per-sensor subspaces keep these states separable, so a total-number
    subspace is rejected.
    """

    count: int
    seed: int = 0


@dataclass(frozen=True)
class ExhaustiveRealGrid:
    """Nonnegative real amplitudes whose squares lie on a simplex grid of spacing ``step``."""

    step: float


@dataclass(frozen=True, eq=False)
class SearchResult:
    best_value: float
    best_state: NetworkState
    evaluations: int
    seed: int | None = None
    reference: float | None = None
    status: str = ""
    extra: dict = field(default_factory=dict)

    @property
    def beats_reference(self) -> bool:
        return self.reference is not None and self.best_value < self.reference - BEAT_TOL


def _diag_generators(layout: NetworkLayout, idx: np.ndarray) -> np.ndarray:
    if not layout.all_diagonal:
        raise ValueError("search needs diagonal generators")
    return np.stack([embed_local(layout, i, g).full_diagonal()[idx] for i, g in layout.generators])


def certificate(subspace: SubspaceSpec, v: Sequence[float]) -> float:
    """Upper bound on Var(H_v) for states with at most ``particle_cap`` particles.

    With v >= 0 and identical sensors this is v_max^2 N_max^2 dlam^2/4.
    """
    hi, lo = 0.0, 0.0
    for vk, (_, g) in zip(v, subspace.layout.generators):
        hi = max(hi, vk * g.lam_max, vk * g.lam_min)
        lo = min(lo, vk * g.lam_max, vk * g.lam_min)
    return float((subspace.particle_cap * (hi - lo)) ** 2 / 4)


def max_variance(subspace: SubspaceSpec, v: Sequence[float]) -> SearchResult:
    """Largest variance of H_v = sum_k v_k H_k over the subspace, by eigenvalue scan."""
    idx = subspace.indices
    h = np.asarray(v, float) @ _diag_generators(subspace.layout, idx)
    top, bottom = int(np.argmax(h)), int(np.argmin(h))
    coeffs = np.zeros(idx.size, complex)
    coeffs[top] += 1
    coeffs[bottom] += 1
    value = (h[top] - h[bottom]) ** 2 / 4
    return SearchResult(float(value), subspace.embed(coeffs), idx.size,
                        extra={"certificate": certificate(subspace, v)})


def _batch_qfim(probs: np.ndarray, h: np.ndarray) -> np.ndarray:
    mean = probs @ h.T
    second = np.einsum("ni,ki,li->nkl", probs, h, h)
    return 4 * (second - mean[:, :, None] * mean[:, None, :])


def _objective_setup(objective, d: int):
    if isinstance(objective, SingleFunction):
        m = LinearReparam.completing(objective.v).M
        return np.linalg.inv(m), Weighting.unit(d)
    if isinstance(objective, EstimatePhi):
        return None, Weighting(objective.weights)
    raise TypeError(f"unknown objective {objective!r}")


def _batch_values(f: np.ndarray, b: np.ndarray | None, w: Weighting) -> np.ndarray:
    if b is not None:
        f = np.einsum("ji,njk,kl->nil", b, f, b)
    eig = np.linalg.eigvalsh(f)
    ok = (eig[:, -1] > 0) & (eig[:, 0] > INVERTIBLE_RTOL * eig[:, -1])
    out = np.full(len(f), np.inf)
    if ok.any():
        inv = np.linalg.inv(f[ok])
        out[ok] = np.einsum("k,nkk->n", w.diag, inv)
    for n in np.flatnonzero(~ok):
        try:
            out[n] = weighted_crb(reduce(Qfim(f[n]), w))
        except EstimationFailure:
            pass
    return out


def evaluate(state: NetworkState, objective, mu: int = 1) -> float:
    """Objective value of one state; +inf when estimation fails."""
    b, w = _objective_setup(objective, state.layout.d)
    f = qfim_pure_commuting(state)
    if b is not None:
        f = reparam(f, np.linalg.inv(b))
    red = reduce(f, w)
    return math.inf if red.failed else weighted_crb(red, mu)


def _haar_chunk(seed: int, chunk: int, size: int, dim: int) -> np.ndarray:
    rng = np.random.Generator(np.random.Philox(seed).jumped(chunk))
    z = rng.standard_normal((size, dim)) + 1j * rng.standard_normal((size, dim))
    return z / np.linalg.norm(z, axis=1, keepdims=True)


def _product_chunk(seed, chunk, size, layout: NetworkLayout, idx: np.ndarray) -> np.ndarray:
    rng = np.random.Generator(np.random.Philox(seed).jumped(chunk))
    vec = np.ones((size, 1), complex)
    for s in layout.sensors:
        z = rng.standard_normal((size, s.total_dim)) + 1j * rng.standard_normal((size, s.total_dim))
        vec = np.einsum("na,nb->nab", vec, z).reshape(size, -1)
    vec = vec[:, idx]
    norms = np.linalg.norm(vec, axis=1, keepdims=True)
    return vec / np.where(norms == 0, 1, norms)


def _simplex_points(m: int, step: float) -> np.ndarray:
    k = round(1 / step)
    if abs(k * step - 1) > 1e-9:
        raise ValueError("1/step must be an integer")
    count = math.comb(k + m - 1, m - 1)
    if count > MAX_GRID:
        raise CapacityError(f"grid of {count} points is too large")
    pts = []
    for bars in itertools.combinations(range(k + m - 1), m - 1):
        edges = (-1,) + bars + (k + m - 1,)
        pts.append([edges[i + 1] - edges[i] - 1 for i in range(m)])
    return np.array(pts, float) / k


def min_crb_search(subspace: SubspaceSpec, objective, sampler, reference: float | None = None,
                   mu: int = 1, workers: int = 1) -> SearchResult:
    """Smallest reduced weighted CRB over sampled states of the subspace."""
    layout = subspace.layout
    idx = subspace.indices
    if idx.size > MAX_SUBSPACE:
        raise CapacityError(f"subspace dimension {idx.size} exceeds {MAX_SUBSPACE}")
    h = _diag_generators(layout, idx)
    b, w = _objective_setup(objective, layout.d)
    seed = getattr(sampler, "seed", None)

    if isinstance(sampler, ExhaustiveRealGrid):
        amps = np.sqrt(_simplex_points(idx.size, sampler.step)).astype(complex)
        total = len(amps)

        def chunk_amps(c):
            return amps[c * CHUNK:(c + 1) * CHUNK]
    elif isinstance(sampler, (RandomHaar, RandomProduct)):
        if isinstance(sampler, RandomProduct) and subspace.kind == "total_at_most":
            raise ValueError("product sampling needs a per-sensor subspace")
        total = int(sampler.count)

        def chunk_amps(c):
            size = min(CHUNK, total - c * CHUNK)
            if isinstance(sampler, RandomHaar):
                return _haar_chunk(sampler.seed, c, size, idx.size)
            return _product_chunk(sampler.seed, c, size, layout, idx)
    else:
        raise TypeError(f"unknown sampler {sampler!r}")

    def run(c):
        a = chunk_amps(c)
        vals = _batch_values(_batch_qfim(np.abs(a) ** 2, h), b, w)
        j = int(np.argmin(vals))
        return vals[j], c * CHUNK + j, a[j]

    chunks = range(math.ceil(total / CHUNK))
    if workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            results = list(pool.map(run, chunks))
    else:
        results = [run(c) for c in chunks]
    value, _, amp = min(results, key=lambda r: (r[0], r[1]))
    state = subspace.embed(amp)
    result = SearchResult(float(value) / mu, state, total, seed, reference)
    if reference is not None:
        status = "falsified" if result.beats_reference else "consistent"
        result = SearchResult(result.best_value, state, total, seed, reference, status)
    return result


def allocation_search(v: Sequence[float], N_max: int, step: float = 1e-3) -> np.ndarray:
    """Grid minimizer of the separable-allocation bound over the simplex."""
    if step > 1e-2:
        raise ValueError("step must be at most 1e-2")
    v = np.abs(np.asarray(v, float))
    support = np.flatnonzero(v)
    x = np.zeros_like(v)
    if support.size == 1:
        x[support] = 1
        return x
    pts = _simplex_points(support.size, step)
    pts = pts[np.all(pts > 0, axis=1)]
    vals = np.sum((v[support] / pts) ** 2, axis=1)
    x[support] = pts[int(np.argmin(vals))]
    target = bounds.optimal_allocation(v)
    if np.max(np.abs(x - target)) > step * (1 + 1e-9):
        raise AssertionError(f"grid minimizer {x} is not within one step of {target}")
    return x


def appendix_e_scan(alpha: float, beta: float, step: float = 1e-4) -> tuple[float, float]:
    """Grid minimum of the two-qubit non-orthogonal bound over x."""
    count = round(2 / step) - 1
    xs = np.linspace(-1 + step, 1 - step, count)
    g = np.sin(2 * alpha) + np.sin(2 * beta)
    if abs(np.cos(alpha + beta)) < 1e-12:
        raise ValueError("cos(alpha + beta) vanishes")
    vals = (2 - g * xs) / (1 - xs**2)
    j = int(np.argmin(vals))
    return float(xs[j]), float(vals[j])
