"""Bipartite states, Schmidt decomposition and entropy measures.

All entropies are in bits.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from penbounds.errors import InputError

NORM_TOL = 1e-9
HERMITIAN_TOL = 1e-9
PSD_TOL = 1e-9
ZERO_EIG = 1e-10


@dataclass(frozen=True, eq=False)
class PureBipartiteState:
    """Pure state on a ``dim_a x dim_b`` system, amplitudes row-major over (a, b)."""

    dim_a: int
    dim_b: int
    amplitudes: np.ndarray

    def __post_init__(self):
        if self.dim_a < 1 or self.dim_b < 1:
            raise InputError(f"dimensions must be positive, got {self.dim_a}x{self.dim_b}")
        amps = np.asarray(self.amplitudes, dtype=complex).reshape(-1)
        if amps.size != self.dim_a * self.dim_b:
            raise InputError(
                f"expected {self.dim_a * self.dim_b} amplitudes for a "
                f"{self.dim_a}x{self.dim_b} system, got {amps.size}"
            )
        norm = float(np.vdot(amps, amps).real)
        if abs(norm - 1.0) > NORM_TOL:
            raise InputError(f"state is not normalized (squared norm {norm:.12g})")
        amps.setflags(write=False)
        object.__setattr__(self, "amplitudes", amps)

    @classmethod
    def bell(cls) -> PureBipartiteState:
        return cls(2, 2, np.array([1, 0, 0, 1]) / np.sqrt(2))

    @classmethod
    def from_schmidt(cls, coefficients: Sequence[float]) -> PureBipartiteState:
        """Build ``sum_n sqrt(p_n) |n>|n>`` in the computational basis."""
        p = np.asarray(coefficients, dtype=float)
        d = p.size
        mat = np.diag(np.sqrt(np.clip(p, 0.0, None)))
        return cls(d, d, mat.reshape(-1))

    @property
    def matrix(self) -> np.ndarray:
        return self.amplitudes.reshape(self.dim_a, self.dim_b)

    def projector(self) -> DensityMatrix:
        return DensityMatrix(np.outer(self.amplitudes, self.amplitudes.conj()))


@dataclass(frozen=True, eq=False)
class DensityMatrix:
    entries: np.ndarray

    def __post_init__(self):
        m = np.asarray(self.entries, dtype=complex)
        if m.ndim != 2 or m.shape[0] != m.shape[1] or m.shape[0] < 1:
            raise InputError(f"density matrix must be square, got shape {m.shape}")
        if np.max(np.abs(m - m.conj().T)) > HERMITIAN_TOL:
            raise InputError("density matrix is not Hermitian")
        tr = np.trace(m).real
        if abs(tr - 1.0) > NORM_TOL:
            raise InputError(f"density matrix trace is {tr:.12g}, expected 1")
        if np.linalg.eigvalsh(m)[0] < -PSD_TOL:
            raise InputError("density matrix is not positive semidefinite")
        m.setflags(write=False)
        object.__setattr__(self, "entries", m)

    @property
    def dim(self) -> int:
        return self.entries.shape[0]

    @classmethod
    def maximally_mixed(cls, dim: int) -> DensityMatrix:
        return cls(np.eye(dim) / dim)


@dataclass(frozen=True, eq=False)
class SchmidtDecomposition:
    """Squared Schmidt coefficients ``p_n`` (nonincreasing) with their bases.

    ``basis_a[:, n]`` and ``basis_b[:, n]`` pair up so that the state equals
    ``sum_n sqrt(p_n) basis_a[:, n] (x) basis_b[:, n]``.
    """

    coefficients: np.ndarray
    basis_a: np.ndarray
    basis_b: np.ndarray

    @property
    def rank(self) -> int:
        return int(np.count_nonzero(self.coefficients > ZERO_EIG))

    def reconstruct(self) -> np.ndarray:
        mat = (self.basis_a * np.sqrt(self.coefficients)) @ self.basis_b.T
        return mat.reshape(-1)


def _as_matrix(rho) -> np.ndarray:
    if isinstance(rho, DensityMatrix):
        return rho.entries
    return DensityMatrix(rho).entries


def _clamped_eigvalsh(m: np.ndarray) -> np.ndarray:
    evals = np.linalg.eigvalsh(m)
    if evals[0] < -PSD_TOL:
        raise InputError(f"matrix has negative eigenvalue {evals[0]:.3g}")
    return np.where(evals < ZERO_EIG, 0.0, evals)


def shannon_entropy(probabilities) -> float:
    """Shannon entropy in bits, with 0 log 0 = 0."""
    p = np.asarray(probabilities, dtype=float).reshape(-1)
    p = p[p > 0]
    return float(-np.sum(p * np.log2(p))) + 0.0


def binary_entropy(x: float) -> float:
    if not 0.0 <= x <= 1.0:
        raise InputError(f"binary entropy argument {x} outside [0, 1]")
    return shannon_entropy([x, 1.0 - x])


def schmidt_decompose(state: PureBipartiteState) -> SchmidtDecomposition:
    u, s, vh = np.linalg.svd(state.matrix)
    s = s[s > 1e-13]  # numerical rank
    p = s**2
    p = p / p.sum()
    # psi_ab = sum_n s_n u[a, n] vh[n, b]: the B-side Schmidt vectors are the rows of vh.
    return SchmidtDecomposition(coefficients=p, basis_a=u[:, : p.size], basis_b=vh[: p.size].T)


def entanglement_entropy(state: PureBipartiteState) -> float:
    return shannon_entropy(schmidt_decompose(state).coefficients)


def von_neumann_entropy(rho) -> float:
    return shannon_entropy(_clamped_eigvalsh(_as_matrix(rho)))


def partial_trace(rho, dims: Sequence[int], keep: Sequence[int]) -> DensityMatrix:
    """Reduce ``rho`` on subsystems of sizes ``dims`` to the subsystems in ``keep``."""
    m = _as_matrix(rho)
    dims = [int(d) for d in dims]
    keep = sorted(set(int(k) for k in keep))
    if int(np.prod(dims)) != m.shape[0]:
        raise InputError(f"subsystem dims {dims} do not multiply to {m.shape[0]}")
    if not keep:
        raise InputError("keep set must be nonempty")
    if keep[0] < 0 or keep[-1] >= len(dims):
        raise InputError(f"keep indices {keep} out of range for {len(dims)} subsystems")
    n = len(dims)
    drop = [i for i in range(n) if i not in keep]
    t = m.reshape(dims + dims)
    perm = keep + drop + [n + i for i in keep] + [n + i for i in drop]
    t = t.transpose(perm)
    dk = int(np.prod([dims[i] for i in keep]))
    dd = int(np.prod([dims[i] for i in drop])) if drop else 1
    t = t.reshape(dk, dd, dk, dd)
    reduced = np.einsum("ajbj->ab", t)
    return DensityMatrix((reduced + reduced.conj().T) / 2)


_YY = np.kron(np.array([[0, -1j], [1j, 0]]), np.array([[0, -1j], [1j, 0]]))


def concurrence(rho) -> float:
    """Two-qubit concurrence of a 4x4 density matrix."""
    m = _as_matrix(rho)
    if m.shape != (4, 4):
        raise InputError(f"concurrence needs a two-qubit (4x4) state, got {m.shape}")
    # singular values of sqrt(rho) YY sqrt(rho)* are the square roots of eig(rho rho~)
    w, v = np.linalg.eigh(m)
    root = (v * np.sqrt(np.clip(w, 0.0, None))) @ v.conj().T
    lam = np.linalg.svd(root @ _YY @ root.conj(), compute_uv=False)
    return float(max(0.0, lam[0] - lam[1] - lam[2] - lam[3]))


def entanglement_of_formation_2qubit(rho) -> float:
    c = min(1.0, concurrence(rho))
    return binary_entropy((1.0 + np.sqrt(1.0 - c * c)) / 2.0)


def relative_entropy(rho, sigma) -> float:
    """Quantum relative entropy ``D(rho || sigma)`` in bits.

    Returns ``inf`` when the support of ``rho`` is not inside the support of
    ``sigma``.
    """
    r = _as_matrix(rho)
    s = _as_matrix(sigma)
    if r.shape != s.shape:
        raise InputError(f"dimension mismatch: {r.shape} vs {s.shape}")
    lr, vr = np.linalg.eigh(r)
    ls, vs = np.linalg.eigh(s)
    if lr[0] < -PSD_TOL or ls[0] < -PSD_TOL:
        raise InputError("relative entropy arguments must be positive semidefinite")
    lr = np.where(lr < ZERO_EIG, 0.0, lr)
    ls = np.where(ls < ZERO_EIG, 0.0, ls)
    # overlap[i, j] = |<r_i|s_j>|^2 weighted by the eigenvalue of rho
    weight = (np.abs(vr.conj().T @ vs) ** 2) * lr[:, None]
    kernel = ls == 0.0
    if weight[:, kernel].sum() > ZERO_EIG:
        return float("inf")
    pos = lr > 0
    self_term = float(np.sum(lr[pos] * np.log2(lr[pos])))
    cross = float(np.sum(weight[:, ~kernel] * np.log2(ls[~kernel])[None, :]))
    return max(0.0, self_term - cross)
