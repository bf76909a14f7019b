"""Randomized and exhaustive verification suites behind ``qsnet verify``."""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field

import numpy as np

from . import bounds, fisher, probes, search
from .netspace import JZ, NUMBER, NetworkLayout, NetworkState, SensorSpace, resource_expectation


@dataclass
class SuiteResult:
    name: str
    passed: int = 0
    failed: int = 0
    worst_slack: float = math.inf
    notes: list[str] = field(default_factory=list)

    def check(self, slack: float, label: str = "") -> bool:
        """Record one check; ``slack`` >= 0 means pass."""
        self.worst_slack = min(self.worst_slack, float(slack))
        if slack >= 0:
            self.passed += 1
            return True
        self.failed += 1
        if label and len(self.notes) < 20:
            self.notes.append(f"{label}: slack {slack:.3e}")
        return False

    @property
    def ok(self) -> bool:
        return self.failed == 0 and self.passed > 0

    def summary(self) -> str:
        return (f"{self.name}: {'PASS' if self.ok else 'FAIL'} "
                f"passed={self.passed} failed={self.failed} worst_slack={self.worst_slack:.3e}")


def random_pd(rng: np.random.Generator, d: int) -> np.ndarray:
    x = rng.standard_normal((d, d))
    return x @ x.T / d + 0.1 * np.eye(d)


def random_partition(rng: np.random.Generator, d: int) -> list[int]:
    cuts = sorted(rng.choice(np.arange(1, d), size=rng.integers(0, d), replace=False).tolist()) if d > 1 else []
    edges = [0] + cuts + [d]
    return [b - a for a, b in zip(edges, edges[1:])]


def matrix_inequalities(trials: int = 1000, seed: int = 7) -> SuiteResult:
    res = SuiteResult("matrix-inequalities")
    rng = np.random.default_rng(seed)
    for t in range(trials):
        d = int(rng.integers(1, 9))
        a = random_pd(rng, d)
        inv = np.linalg.inv(a)
        res.check(np.min(np.diag(inv) - fisher.inv_diag_lower_bound(a)) + 1e-9, f"diag trial {t}")
        part = random_partition(rng, d)
        start = 0
        for size, low in zip(part, fisher.block_inv_lower_bound(a, part)):
            gap = inv[start:start + size, start:start + size] - low
            res.check(np.linalg.eigvalsh(0.5 * (gap + gap.T))[0] + 1e-9, f"block trial {t}")
            start += size
        # equality cases
        diag = np.diag(rng.uniform(0.1, 5, d))
        res.check(1e-12 - np.max(np.abs(np.diag(np.linalg.inv(diag)) - fisher.inv_diag_lower_bound(diag))),
                  f"diag equality {t}")
        bd = np.zeros((d, d))
        start = 0
        for size in part:
            bd[start:start + size, start:start + size] = random_pd(rng, size)
            start += size
        binv = np.linalg.inv(bd)
        start = 0
        for size, low in zip(part, fisher.block_inv_lower_bound(bd, part)):
            err = np.max(np.abs(binv[start:start + size, start:start + size] - low))
            res.check(1e-12 - err, f"block equality {t}")
            start += size
    return res


def random_small_layout(rng: np.random.Generator) -> NetworkLayout:
    sensors = []
    for _ in range(int(rng.integers(2, 4))):
        kind = rng.integers(0, 3)
        if kind == 0:
            sensors.append(SensorSpace.mode(int(rng.integers(1, 4))))
        elif kind == 1:
            sensors.append(SensorSpace.qubits(1))
        else:
            sensors.append(SensorSpace.qubits(1, fixed=True))
    gens = [(k, NUMBER if s.name == "mode" else JZ) for k, s in enumerate(sensors)]
    return NetworkLayout(tuple(sensors), tuple(gens))


def random_state(rng: np.random.Generator, layout: NetworkLayout) -> NetworkState:
    z = rng.standard_normal(layout.total_dim) + 1j * rng.standard_normal(layout.total_dim)
    return NetworkState.from_vector(z, layout)


def surrogate(trials: int = 500, seed: int = 11, weightings: int = 20) -> SuiteResult:
    res = SuiteResult("surrogate")
    rng = np.random.default_rng(seed)
    for t in range(trials):
        layout = random_small_layout(rng)
        state = random_state(rng, layout)
        sur = probes.separable_surrogate(state)
        f = fisher.qfim_pure_commuting(state).matrix
        fs = fisher.qfim_pure_commuting(sur).matrix
        res.check(1e-10 - np.max(np.abs(np.diag(f) - np.diag(fs))), f"variance trial {t}")
        res.check(1e-10 - np.max(np.abs(fs - np.diag(np.diag(fs)))), f"covariance trial {t}")
        res.check(1e-10 - abs(resource_expectation(state) - resource_expectation(sur)), f"resource trial {t}")
        if not (fisher.Qfim(f).invertible and fisher.Qfim(fs).invertible):
            continue
        for _ in range(weightings):
            w = rng.dirichlet(np.ones(layout.d))
            w = w / w.sum()
            a = fisher.crb(fisher.Qfim(f), w)
            b = fisher.crb(fisher.Qfim(fs), w)
            res.check(a - b + 1e-8, f"dominance trial {t}")
    return res


def pipeline_cases():
    """(label, pipeline value, closed-form value) triples."""
    out = []
    kinds = {"qubit": (lambda n: SensorSpace.qubits(n), JZ), "optical": (lambda n: SensorSpace.mode(n), NUMBER)}
    for kind, (make, gen) in kinds.items():
        for d in (2, 3, 4):
            for n in (1, 2):
                layout = NetworkLayout.uniform(make(n), d, gen)
                v = np.ones(d) / np.sqrt(d)
                g = fisher.function_crb(fisher.qfim_pure_commuting(probes.ghz(layout, n)), v)
                loc = fisher.function_crb(fisher.qfim_pure_commuting(probes.local_superposition(layout, [n] * d)), v)
                out.append((f"ghz {kind} d={d} n={n}", g, bounds.ghz_sum(d, n, gen.lam_max, gen.lam_min)))
                out.append((f"local {kind} d={d} n={n}", loc, bounds.local_sum(d, n * d, gen.lam_max, gen.lam_min)))
                out.append((f"local/ghz ratio {kind} d={d} n={n}", loc / g, float(d)))
    for kind, (make, gen) in kinds.items():
        for v, n_max in (((2, 1), 3), ((3, 1), 4), ((1, 1, 2), 4)):
            v = np.array(v, float) / np.linalg.norm(v)
            w = probes.proportional_weights(v, n_max)
            layout = NetworkLayout.uniform(make(max(w)), len(v), gen)
            val = fisher.function_crb(fisher.qfim_pure_commuting(probes.weighted_ghz(layout, w)), v)
            out.append((f"weighted ghz {kind} w={w}", val,
                        bounds.weighted_ghz_bound(v, n_max, gen.lam_max, gen.lam_min)))
            x = np.array(w, float)
            loc = fisher.function_crb(fisher.qfim_pure_commuting(probes.local_superposition(layout, w)), v)
            out.append((f"local weighted {kind} w={w}", loc,
                        bounds.local_weighted(v, x, n_max, gen.lam_max, gen.lam_min)))
    for dp in (1, 2, 3):
        for N in (1, 2, 3):
            layout = NetworkLayout.uniform(SensorSpace.mode(N), dp, NUMBER, n_ancilla=1)
            u = fisher.crb(fisher.qfim_pure_commuting(probes.uns(layout, N)), fisher.Weighting.uniform(dp))
            out.append((f"uns d'={dp} N={N}", u, (dp + 1) ** 2 / (4 * dp * N * N)))
            vu = dp * N * N / (dp + 1) ** 2
            out.append((f"uns imaging d'={dp} N={N}", u, bounds.imaging_symmetric(vu, 0.0, dp)))
            gq = fisher.qfim_pure_commuting(probes.gns(layout, N))
            gv = fisher.crb(gq, fisher.Weighting.uniform(dp))
            v = gq.matrix[0, 0] / 4
            J = gq.matrix[0, 1] / gq.matrix[0, 0] if dp > 1 else 0.0
            out.append((f"gns imaging d'={dp} N={N}", gv, bounds.imaging_symmetric(v, J, dp)))
            out.append((f"gns single parameter d'={dp} N={N}", gv, 0.5 * bounds.gns_bound(dp, N, 1.0, 0.0)))
            if N % dp == 0:
                pair = NetworkLayout.uniform(SensorSpace.mode(N // dp), 1, NUMBER, n_ancilla=1)
                nv = fisher.crb(fisher.qfim_pure_commuting(probes.noon(pair, N // dp)), [1.0])
                out.append((f"noon individual d'={dp} N={N}", nv, bounds.noon_individual(dp, N)))
    for dp in (1, 2, 3):
        for N in (1, 2):
            layout = NetworkLayout.uniform(SensorSpace.mode(N), dp + 1, NUMBER)
            q = fisher.qfim_pure_commuting(probes.uns(layout, N))
            m = bounds.unknown_reference_jacobian(dp)
            w = np.r_[np.full(dp, 1 / dp), 0.0]
            val = fisher.crb(q, w, m)
            vu = dp * N * N / (dp + 1) ** 2
            # the closed form is written for the bare covariance block (no factor 4)
            out.append((f"unknown reference separable d'={dp} N={N}", 4 * val,
                        bounds.imaging_unknown_reference(vu, vu, 0.0, 0.0, dp)))
    for x in (-0.5, 0.0, 0.3):
        for a, b in ((np.pi / 8, 0.0), (0.3, -0.1), (np.pi / 6, np.pi / 6)):
            val = two_qubit_pipeline(a, b, x)
            out.append((f"two-qubit a={a:.3f} b={b:.3f} x={x}", val, bounds.two_qubit_nonorthogonal(a, b, x)))
    return out


def two_qubit_state(x: float) -> NetworkState:
    """N(|dd> + c(|du> + |ud>) + |uu>) with c = sqrt((1-x)/(1+x)); its QFIM is [[1,x],[x,1]]."""
    layout = NetworkLayout.uniform(SensorSpace.qubits(1, fixed=True), 2, JZ)
    c = np.sqrt((1 - x) / (1 + x))
    vec = np.zeros(4, complex)
    vec[layout.flat_index(["d", "d"])] = 1
    vec[layout.flat_index(["u", "u"])] = 1
    vec[layout.flat_index(["d", "u"])] = c
    vec[layout.flat_index(["u", "d"])] = c
    return NetworkState.from_vector(vec, layout)


def two_qubit_pipeline(alpha: float, beta: float, x: float, mu: int = 1) -> float:
    """Summed variance of the two functions: twice the CRB with W = 1/2."""
    q = fisher.qfim_pure_commuting(two_qubit_state(x))
    m = np.array([[np.cos(alpha), np.sin(alpha)], [np.sin(beta), np.cos(beta)]])
    return 2 * fisher.crb(q, [0.5, 0.5], m, mu)


def bounds_crosscheck(tol: float = 1e-9) -> SuiteResult:
    res = SuiteResult("bounds-crosscheck")
    for label, got, want in pipeline_cases():
        res.check(tol - abs(got - want), label)
    return res


def appendix_e(step: float = 1e-4, lattice: int = 11, tol_pipeline: float = 1e-9) -> SuiteResult:
    res = SuiteResult("appendix-e")
    angles = np.linspace(-0.7, 0.7, lattice)
    for a in angles:
        for b in angles:
            xs, _ = search.appendix_e_scan(a, b, step)
            res.check(2 * step - abs(xs - bounds.x_min(a, b)), f"lattice a={a:.2f} b={b:.2f}")
    for a in angles:
        xm = bounds.x_min(a, -a)
        res.check(0.0 if xm == 0.0 else -abs(xm), f"g=0 at a={a:.2f}")
    for x in (-0.5, 0.0, 0.3):
        for a, b in ((np.pi / 8, 0.0), (0.4, 0.2)):
            got = two_qubit_pipeline(a, b, x)
            res.check(tol_pipeline - abs(got - bounds.two_qubit_nonorthogonal(a, b, x)), f"pipeline x={x}")
    return res


CONJECTURE_CASES = (
    ("optical", (2, 1), 3),
    ("optical", (1, 1), 2),
    ("optical", (1, 2), 3),
    ("qubit-fixed", (1, 1), 2),
)


def conjecture_scan(trials: int = 20000, seed: int = 2024, workers: int = 1) -> SuiteResult:
    res = SuiteResult("conjecture-scan")
    start = time.perf_counter()
    for kind, v, n_max in CONJECTURE_CASES:
        v = np.array(v, float) / np.linalg.norm(v)
        if kind == "optical":
            layout = NetworkLayout.uniform(SensorSpace.mode(n_max), 2, NUMBER)
            sub = search.SubspaceSpec.total_at_most(layout, n_max)
            ref = bounds.weighted_ghz_bound(v, n_max, 1.0, 0.0)
        else:
            layout = NetworkLayout.uniform(SensorSpace.qubits(1, fixed=True), 2, JZ)
            sub = search.SubspaceSpec.fixed_per_sensor(layout, (1, 1))
            ref = bounds.weighted_ghz_bound(v, n_max, 0.5, -0.5)
        r = search.min_crb_search(sub, search.SingleFunction(tuple(v)), search.RandomHaar(trials, seed),
                                  reference=ref, workers=workers)
        res.check(r.best_value - ref + search.BEAT_TOL, f"{kind} v={v.round(3)}")
        res.notes.append(f"{kind} v={np.round(v, 4).tolist()} N_max={n_max}: best={r.best_value:.6f} "
                         f"reference={ref:.6f} -> {r.status}")
    res.notes.append(f"runtime {time.perf_counter() - start:.1f}s")
    return res


SUITES = {
    "matrix-inequalities": lambda trials, seed, step: matrix_inequalities(trials or 1000, seed),
    "surrogate": lambda trials, seed, step: surrogate(trials or 500, seed),
    "bounds-crosscheck": lambda trials, seed, step: bounds_crosscheck(),
    "appendix-e": lambda trials, seed, step: appendix_e(step or 1e-4),
    "conjecture-scan": lambda trials, seed, step: conjecture_scan(trials or 20000, seed),
}
