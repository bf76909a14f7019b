"""Closed-form variance bounds for the probe catalog.

Every bound is per unit repetition count ``mu`` and assumes unit-norm
function vectors; use :func:`rescale` for unnormalized functions.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .fisher import g_value


@dataclass(frozen=True)
class BoundReport:
    name: str
    value: float
    inputs: dict = field(default_factory=dict)
    formula: str = ""


FORMULAS = {
    "ghz_sum": "d/(mu*N_max^2*dlam^2), N_max = n*d",
    "local_sum": "d^2/(mu*N_max^2*dlam^2)",
    "weighted_ghz": "||v||_1^2/(mu*N_max^2*dlam^2)",
    "local_weighted": "||x||_1^2*sum_k (v_k/x_k)^2/(mu*N_max^2*dlam^2)",
    "local_optimal": "(sum_k v_k^(2/3))^3/(mu*N_max^2*dlam^2)",
    "gns": "(d+1)/(mu*N_max^2*max(lam_max^2, lam_min^2))",
    "noon_individual": "d'^2/(mu*N^2)",
    "imaging_symmetric": "g(J, d')/(4*mu*v)",
    "imaging_unknown_reference": "(beta/(2v) + J'/sqrt(v v') + gamma/(2v'))/(mu*alpha)",
    "two_qubit_nonorthogonal": "(2 - g*x)/(mu*(1 - x^2)), g = sin 2a + sin 2b",
    "propagate_variance": "sum_k c_k^2 Var_k",
}


def _dlam(lam_max: float, lam_min: float) -> float:
    d = lam_max - lam_min
    if d == 0:
        raise ValueError("lam_max equals lam_min")
    return d


def _unit(v) -> np.ndarray:
    v = np.asarray(v, float)
    if abs(np.linalg.norm(v) - 1) > 1e-10:
        raise ValueError("function vector must have unit 2-norm")
    return v


def rescale(value: float, c: float) -> float:
    """Var(c theta) = c^2 Var(theta)."""
    return c * c * value


def ghz_sum(d: int, n: int, lam_max: float, lam_min: float, mu: int = 1) -> float:
    if n < 1 or d < 1:
        raise ValueError("need n, d >= 1")
    n_max = n * d
    return d / (mu * n_max**2 * _dlam(lam_max, lam_min) ** 2)


def local_sum(d: int, N_max: int, lam_max: float, lam_min: float, mu: int = 1) -> float:
    return d * d / (mu * N_max**2 * _dlam(lam_max, lam_min) ** 2)


def weighted_ghz_bound(v, N_max: int, lam_max: float, lam_min: float, mu: int = 1) -> float:
    v = _unit(v)
    l1 = np.abs(v).sum()
    w = N_max * np.abs(v) / l1
    if np.max(np.abs(w - np.rint(w))) > 1e-9:
        raise ValueError(f"N_max*v/||v||_1 = {w} is not integral")
    return l1**2 / (mu * N_max**2 * _dlam(lam_max, lam_min) ** 2)


def local_weighted(v, x, N_max: int, lam_max: float, lam_min: float, mu: int = 1) -> float:
    v, x = np.asarray(v, float), np.asarray(x, float)
    support = v != 0
    if np.any(x[support] == 0):
        raise ZeroDivisionError("allocation is zero on a sensor with nonzero weight")
    s = np.sum((v[support] / x[support]) ** 2)
    return np.abs(x).sum() ** 2 * s / (mu * N_max**2 * _dlam(lam_max, lam_min) ** 2)


def optimal_allocation(v) -> np.ndarray:
    """x_k proportional to |v_k|^(2/3), scaled to sum to 1."""
    x = np.abs(np.asarray(v, float)) ** (2 / 3)
    return x / x.sum()


def local_optimal(v, N_max: int, lam_max: float, lam_min: float, mu: int = 1) -> float:
    v = _unit(v)
    return np.sum(np.abs(v) ** (2 / 3)) ** 3 / (mu * N_max**2 * _dlam(lam_max, lam_min) ** 2)


def gns_bound(d: int, N_max: int, lam_max: float, lam_min: float, mu: int = 1) -> float:
    m = max(lam_max**2, lam_min**2)
    if m == 0:
        raise ValueError("both extremal eigenvalues vanish")
    if d < 1:
        raise ValueError("d must be positive")
    return (d + 1) / (mu * N_max**2 * m)


def noon_individual(d_prime: int, N_total: int, mu: int = 1) -> float:
    if N_total % d_prime:
        raise ValueError("N must be divisible by d'")
    return d_prime**2 / (mu * N_total**2)


def imaging_symmetric(v: float, J: float, d_prime: int, mu: int = 1) -> float:
    if v <= 0:
        raise ValueError("variance must be positive")
    return g_value(J, d_prime) / (4 * mu * v)


def imaging_unknown_reference(v: float, v_ref: float, J: float, J_ref: float, d_prime: int, mu: int = 1) -> float:
    if v <= 0 or v_ref <= 0:
        raise ValueError("variances must be positive")

    def delta(a, b):
        return 1 + J * (b - 1) - a * a * b

    alpha = delta(J_ref, d_prime)
    if abs(alpha) < 1e-14:
        raise ValueError("alpha vanishes; the block QFIM is singular")
    beta = delta(J_ref, d_prime - 1) / (1 - J)
    gamma = delta(0.0, d_prime)
    return (beta / (2 * v) + J_ref / np.sqrt(v * v_ref) + gamma / (2 * v_ref)) / (mu * alpha)


def unknown_reference_qfim(v: float, v_ref: float, J: float, J_ref: float, d_prime: int) -> np.ndarray:
    """Exchange-symmetric covariance block matrix used by the unknown-reference bound."""
    c, c_ref = J * v, J_ref * np.sqrt(v * v_ref)
    f = np.full((d_prime + 1, d_prime + 1), c)
    np.fill_diagonal(f, v)
    f[-1, :] = f[:, -1] = c_ref
    f[-1, -1] = v_ref
    return f


def unknown_reference_jacobian(d_prime: int) -> np.ndarray:
    m = np.zeros((d_prime + 1, d_prime + 1))
    m[:d_prime, :d_prime] = np.eye(d_prime)
    m[:d_prime, -1] = -1
    m[-1] = 1
    return m / np.sqrt(2)


def _g(alpha: float, beta: float) -> float:
    if abs(np.cos(alpha + beta)) < 1e-12:
        raise ValueError("cos(alpha + beta) vanishes; the functions are dependent")
    return np.sin(2 * alpha) + np.sin(2 * beta)


def two_qubit_nonorthogonal(alpha: float, beta: float, x: float, mu: int = 1) -> float:
    """Summed variance (weights 1, 1) of two non-orthogonal functions of two qubit phases."""
    if abs(x) >= 1:
        raise ValueError("|x| must be below 1")
    return (2 - _g(alpha, beta) * x) / (mu * (1 - x * x))


def x_min(alpha: float, beta: float) -> float:
    g = _g(alpha, beta)
    # (2 - sqrt(4 - g^2))/g rewritten without the 0/0 at g = 0
    return g / (2 + np.sqrt(4 - g * g))


def propagate_variance(coeffs: Sequence[float], variances: Sequence[float]) -> float:
    c, v = np.asarray(coeffs, float), np.asarray(variances, float)
    if c.shape != v.shape:
        raise ValueError("lengths differ")
    return float(np.sum(c * c * v))


def report(name: str, value: float, **inputs) -> BoundReport:
    return BoundReport(name, float(value), inputs, FORMULAS[name])
