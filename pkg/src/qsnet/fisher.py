"""Fisher information matrices, reparameterization, reduction and CRB scalars."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .netspace import (
    EstimationFailure,
    NetworkState,
    NonCommutingError,
    apply_unitary,
    embed_local,
    generator_at,
)

COMMUTE_TOL = 1e-9
SUPPORT_TOL = 1e-9
INVERTIBLE_RTOL = 1e-10
FD_STEP = 1e-5
P_FLOOR = 1e-12


def _is_invertible(m: np.ndarray) -> bool:
    if m.size == 0:
        return False
    w = np.linalg.eigvalsh(m)
    return w[-1] > 0 and w[0] > INVERTIBLE_RTOL * w[-1]


@dataclass(frozen=True, eq=False)
class Qfim:
    matrix: np.ndarray
    labels: tuple[str, ...] = ()

    def __post_init__(self):
        m = np.array(self.matrix, dtype=float)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise ValueError("QFIM must be square")
        if np.max(np.abs(m - m.T), initial=0.0) > 1e-10 * max(1.0, np.abs(m).max(initial=0.0)):
            raise ValueError("QFIM must be symmetric")
        m = 0.5 * (m + m.T)
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)
        if not self.labels:
            object.__setattr__(self, "labels", tuple(f"p{k + 1}" for k in range(m.shape[0])))

    @property
    def d(self) -> int:
        return self.matrix.shape[0]

    @property
    def eigen_floor(self) -> float:
        return float(np.linalg.eigvalsh(self.matrix)[0]) if self.d else 0.0

    @property
    def invertible(self) -> bool:
        return _is_invertible(self.matrix)


@dataclass(frozen=True, eq=False)
class LinearReparam:
    """theta = M phi."""

    M: np.ndarray
    row_normalized: bool = True

    def __post_init__(self):
        m = np.array(self.M, dtype=float)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise ValueError("M must be square")
        if abs(np.linalg.det(m)) <= 1e-12:
            raise ValueError("M is singular")
        if self.row_normalized and np.max(np.abs(np.linalg.norm(m, axis=1) - 1)) > 1e-10:
            raise ValueError("rows of M must have unit 2-norm")
        m.setflags(write=False)
        object.__setattr__(self, "M", m)

    @classmethod
    def completing(cls, v: Sequence[float]) -> "LinearReparam":
        """Orthogonal M whose first row is the unit vector v."""
        v = np.asarray(v, float)
        if abs(np.linalg.norm(v) - 1) > 1e-10:
            raise ValueError("v must have unit 2-norm")
        q, _ = np.linalg.qr(np.column_stack([v, np.eye(len(v))]))
        m = q.T.copy()
        m[0] = v
        return cls(m)


@dataclass(frozen=True, eq=False)
class Weighting:
    diag: np.ndarray

    def __post_init__(self):
        w = np.array(self.diag, dtype=float).ravel()
        if np.any(w < 0):
            raise ValueError("weights must be nonnegative")
        if abs(w.sum() - 1) > 1e-12:
            raise ValueError(f"weights must sum to 1, got {w.sum()!r}")
        w.setflags(write=False)
        object.__setattr__(self, "diag", w)

    @classmethod
    def uniform(cls, d: int) -> "Weighting":
        return cls(np.full(d, 1.0 / d))

    @classmethod
    def unit(cls, d: int, k: int = 0) -> "Weighting":
        w = np.zeros(d)
        w[k] = 1
        return cls(w)

    @classmethod
    def over(cls, d: int, indices: Sequence[int]) -> "Weighting":
        w = np.zeros(d)
        w[list(indices)] = 1.0 / len(indices)
        return cls(w)

    @property
    def matrix(self) -> np.ndarray:
        return np.diag(self.diag)


@dataclass(frozen=True, eq=False)
class ReducedProblem:
    kept_indices: tuple[int, ...]
    discarded_indices: tuple[int, ...]
    reduced_qfim: Qfim
    reduced_weighting: np.ndarray
    failed: bool

    @property
    def diagnosis(self) -> str:
        if not self.failed:
            return "reduced QFIM invertible"
        w = np.linalg.eigvalsh(self.reduced_qfim.matrix)
        return (f"reduced QFIM over {list(self.kept_indices)} is singular "
                f"(eigenvalues {np.array2string(w, precision=3)})")


def _diagonal_generators(state: NetworkState) -> np.ndarray | None:
    layout = state.layout
    if not layout.all_diagonal:
        return None
    return np.stack([embed_local(layout, i, g).full_diagonal() for i, g in layout.generators])


def _check_commuting(state: NetworkState):
    layout = state.layout
    for a in range(layout.d):
        for b in range(a + 1, layout.d):
            (i, ga), (j, gb) = layout.generators[a], layout.generators[b]
            if i != j or (ga.is_diagonal and gb.is_diagonal):
                continue
            s = layout.sensors[i]
            ma, mb = ga.local_matrix(s), gb.local_matrix(s)
            if np.linalg.norm(ma @ mb - mb @ ma) > COMMUTE_TOL:
                raise NonCommutingError(
                    f"generators {a} and {b} do not commute; use qfim_pure_general")


def _covariance_qfim(psi: np.ndarray, gpsi: np.ndarray) -> np.ndarray:
    means = (psi.conj() @ gpsi.T).real
    second = (gpsi.conj() @ gpsi.T).real
    return 4 * (second - np.outer(means, means))


def qfim_pure_commuting(state: NetworkState) -> Qfim:
    """4 x covariance matrix of the generators."""
    _check_commuting(state)
    layout = state.layout
    h = _diagonal_generators(state)
    if h is not None:
        p = state.probabilities
        mean = h @ p
        f = 4 * ((h * p) @ h.T - np.outer(mean, mean))
    else:
        psi = state.amplitudes
        gpsi = np.stack([embed_local(layout, i, g).apply(psi) for i, g in layout.generators])
        f = _covariance_qfim(psi, gpsi)
    return Qfim(0.5 * (f + f.T), layout.labels)


def qfim_pure_general(state: NetworkState, phi) -> Qfim:
    layout = state.layout
    psi = state.amplitudes
    gpsi = np.stack([generator_at(layout, k, phi).apply(psi) for k in range(layout.d)])
    f = _covariance_qfim(psi, gpsi)
    return Qfim(0.5 * (f + f.T), layout.labels)


def _evolved_derivatives(state: NetworkState, phi):
    """|psi_phi> and the rows d_k|psi_phi> = -i U G_k |psi>."""
    layout = state.layout
    phi = np.asarray(phi, float)
    psi = state.amplitudes
    out = apply_unitary(layout, psi, phi)
    ders = np.stack([-1j * apply_unitary(layout, generator_at(layout, k, phi).apply(psi), phi)
                     for k in range(layout.d)])
    return out, ders


def sld_pure(state: NetworkState, phi, k: int) -> np.ndarray:
    """Dense SLD 2(|d psi><psi| + |psi><d psi|) at ``phi``."""
    psi, ders = _evolved_derivatives(state, phi)
    dpsi = ders[k]
    drho = np.outer(dpsi, psi.conj()) + np.outer(psi, dpsi.conj())
    sld = 2 * drho
    rho = np.outer(psi, psi.conj())
    err = np.abs(0.5 * (rho @ sld + sld @ rho) - drho).max()
    if err > 1e-8:
        raise ArithmeticError(f"SLD defining relation violated by {err}")
    return sld


def _sld_vectors(state: NetworkState, phi):
    psi, ders = _evolved_derivatives(state, phi)
    # L_k|psi> = 2(|d_k psi> + <d_k psi|psi>|psi>)
    return psi, 2 * (ders + np.outer(ders.conj() @ psi, psi))


def saturation_check(state: NetworkState, phi) -> np.ndarray:
    """|Tr(rho [L_l, L_m])|; all entries below 1e-8 means jointly saturable."""
    _, lpsi = _sld_vectors(state, phi)
    gram = lpsi.conj() @ lpsi.T
    return np.abs(2 * gram.imag)


def is_saturable(s: np.ndarray, tol: float = 1e-8) -> bool:
    return bool(np.max(s, initial=0.0) <= tol)


def projective_povm(basis: np.ndarray) -> list[np.ndarray]:
    """Rank-one projectors onto the columns of a unitary matrix."""
    return [np.outer(basis[:, j], basis[:, j].conj()) for j in range(basis.shape[1])]


def classical_fim(state: NetworkState, phi, povm: Sequence[np.ndarray], step: float = FD_STEP) -> np.ndarray:
    """Fisher information of the outcome distribution by central differences."""
    layout = state.layout
    effects = np.asarray(povm, dtype=complex)
    if effects.ndim != 3 or effects.shape[1:] != (layout.total_dim,) * 2:
        raise ValueError("POVM effects must be square matrices on the network space")
    if np.abs(effects.sum(axis=0) - np.eye(layout.total_dim)).max() > 1e-9:
        raise ValueError("POVM effects do not sum to the identity")
    phi = np.asarray(phi, float)

    def probs(x):
        v = apply_unitary(layout, state.amplitudes, x)
        return np.einsum("i,mij,j->m", v.conj(), effects, v).real

    p0 = probs(phi)
    grads = []
    for k in range(layout.d):
        e = np.zeros(layout.d)
        e[k] = step
        grads.append((probs(phi + e) - probs(phi - e)) / (2 * step))
    grads = np.array(grads)
    keep = p0 >= P_FLOOR
    g = grads[:, keep]
    return (g / p0[keep]) @ g.T


def reparam(qfim: Qfim, M: LinearReparam | np.ndarray) -> Qfim:
    """QFIM for theta = M phi: B^T F B with B = M^-1."""
    if not isinstance(M, LinearReparam):
        M = LinearReparam(M, row_normalized=False)
    if M.M.shape[0] != qfim.d:
        raise ValueError("M does not match the QFIM dimension")
    b = np.linalg.inv(M.M)
    f = b.T @ qfim.matrix @ b
    return Qfim(0.5 * (f + f.T), tuple(f"theta{k + 1}" for k in range(qfim.d)))


def reduce(qfim: Qfim, weighting: Weighting | Sequence[float]) -> ReducedProblem:
    """Drop zero-weight parameters that are decoupled from every weighted one."""
    w = weighting.diag if isinstance(weighting, Weighting) else Weighting(weighting).diag
    if w.size != qfim.d:
        raise ValueError("weighting does not match the QFIM dimension")
    adj = np.abs(qfim.matrix) > SUPPORT_TOL
    kept = set(np.flatnonzero(w > 0).tolist())
    frontier = list(kept)
    while frontier:
        i = frontier.pop()
        for j in np.flatnonzero(adj[i]).tolist():
            if j not in kept:
                kept.add(j)
                frontier.append(j)
    kept_idx = tuple(sorted(kept))
    dropped = tuple(k for k in range(qfim.d) if k not in kept)
    sub = qfim.matrix[np.ix_(kept_idx, kept_idx)]
    red = Qfim(sub, tuple(qfim.labels[k] for k in kept_idx))
    return ReducedProblem(kept_idx, dropped, red, w[list(kept_idx)].copy(), not _is_invertible(sub))


def weighted_crb(reduced: ReducedProblem, mu: int = 1) -> float:
    """Tr(W F^-1)/mu on the reduced problem."""
    if mu <= 0:
        raise ValueError("mu must be positive")
    if reduced.failed:
        raise EstimationFailure(reduced.diagnosis)
    inv = np.linalg.inv(reduced.reduced_qfim.matrix)
    return float(reduced.reduced_weighting @ np.diag(inv)) / mu


def crb(qfim: Qfim, weighting, M=None, mu: int = 1) -> float:
    """reparam (optional) -> reduce -> weighted_crb."""
    if M is not None:
        qfim = reparam(qfim, M)
    return weighted_crb(reduce(qfim, weighting), mu)


def function_crb(qfim: Qfim, v: Sequence[float], mu: int = 1) -> float:
    """Bound on the variance of the single function v . phi (unit v)."""
    return crb(qfim, Weighting.unit(len(v)), LinearReparam.completing(v), mu)


def _check_pd(a: np.ndarray) -> np.ndarray:
    a = np.asarray(a, float)
    if a.ndim != 2 or a.shape[0] != a.shape[1] or np.abs(a - a.T).max(initial=0.0) > 1e-10 * max(1.0, np.abs(a).max()):
        raise ValueError("matrix must be symmetric")
    try:
        np.linalg.cholesky(a)
    except np.linalg.LinAlgError:
        raise ValueError("matrix is not positive definite") from None
    return a


def inv_diag_lower_bound(A) -> np.ndarray:
    """1/A_kk, a lower bound on each diagonal entry of A^-1."""
    return 1.0 / np.diag(_check_pd(A))


def block_inv_lower_bound(A, partition: Sequence[int]) -> list[np.ndarray]:
    """Inverses of the diagonal blocks; each is below the matching block of A^-1."""
    a = _check_pd(A)
    if sum(partition) != a.shape[0] or any(p <= 0 for p in partition):
        raise ValueError("block sizes must be positive and sum to the dimension")
    out, start = [], 0
    for size in partition:
        blk = a[start:start + size, start:start + size]
        out.append(np.linalg.inv(blk))
        start += size
    return out


def g_value(J: float, d: int) -> float:
    """Trace factor of the exchange-symmetric inverse QFIM, relative to 1/(4v)."""
    if d < 1:
        raise ValueError("d must be positive")
    if d == 1:
        return 1.0
    den = (1 - J) * (1 + (d - 1) * J)
    if abs(den) < 1e-14:
        raise ValueError(f"J = {J} makes the symmetric QFIM singular for d = {d}")
    return (1 + (d - 2) * J) / den


def symmetric_qfim_inverse(v: float, c: float, d: int) -> tuple[np.ndarray, float]:
    """Inverse of 4[(v - c) 1 + c J] in closed form, and g."""
    if v <= 0:
        raise ValueError("variance must be positive")
    J = c / v
    g = g_value(J, d)
    if d > 1:
        inv = (np.eye(d) - c / (v + (d - 1) * c) * np.ones((d, d))) / (4 * (v - c))
    else:
        inv = np.array([[1 / (4 * v)]])
    return inv, g
