"""Numerical checks of the relative entropy of genuine multipartite entanglement for pure PENs.

The full Hilbert space is ordered vertex by vertex (1..N); inside a vertex,
edge halves follow the edge order of the network. Parallel copies from
``multiplicity`` are expanded into separate slots.
"""

from __future__ import annotations

import itertools
from collections import defaultdict
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Sequence

import numpy as np
from scipy.integrate import quad
from scipy.linalg import null_space

from penbounds.bounds import Cut, Partition, cut_edges, weakest_cut_bound
from penbounds.errors import InputError, LimitError, UnsupportedError
from penbounds.linalg import (
    ZERO_EIG,
    DensityMatrix,
    PureBipartiteState,
    relative_entropy,
    schmidt_decompose,
    shannon_entropy,
)
from penbounds.network import PenNetwork, derive_weights, pure_state_of

MAX_MATRIX_DIM = 4096
MAX_OUTCOMES = 10**6
FULL_EVAL_DIM = 256  # above this, work on the support of sigma* instead of full matrices


@dataclass(frozen=True)
class Slot:
    edge: int
    copy: int
    u: int
    v: int
    state: PureBipartiteState


@dataclass(frozen=True, eq=False)
class NetworkSpace:
    slots: tuple[Slot, ...]
    perm: tuple[int, ...]  # vertex-ordered position -> edge-ordered axis
    axis_dims: tuple[int, ...]  # edge order: slot0.a, slot0.b, slot1.a, ...
    vertex_dims: dict[int, int]

    @property
    def dim(self) -> int:
        return int(np.prod(self.axis_dims))

    def vector(self, factors: Sequence[np.ndarray]) -> np.ndarray:
        """Tensor product of per-slot vectors, reordered vertex by vertex."""
        vec = factors[0]
        for f in factors[1:]:
            vec = np.kron(vec, f)
        return vec.reshape(self.axis_dims).transpose(self.perm).reshape(-1)

    def matrix(self, factors: Sequence[np.ndarray]) -> np.ndarray:
        mat = factors[0]
        for f in factors[1:]:
            mat = np.kron(mat, f)
        n = len(self.axis_dims)
        t = mat.reshape(self.axis_dims + self.axis_dims)
        t = t.transpose(list(self.perm) + [n + p for p in self.perm])
        return t.reshape(self.dim, self.dim)

    def apply(self, factors: Sequence[np.ndarray], vec: np.ndarray) -> np.ndarray:
        """Apply a per-slot product operator to a vertex-ordered vector without forming it."""
        n = len(self.axis_dims)
        t = vec.reshape(self.vertex_axes()).transpose([self.perm.index(j) for j in range(n)])
        t = t.reshape([self.axis_dims[2 * k] * self.axis_dims[2 * k + 1] for k in range(n // 2)])
        for k, f in enumerate(factors):
            t = np.moveaxis(np.tensordot(f, t, axes=([1], [k])), 0, k)
        return t.reshape(self.axis_dims).transpose(self.perm).reshape(-1)

    def vertex_axes(self) -> list[int]:
        """Vertex-ordered dims of the edge halves (after permutation)."""
        return [self.axis_dims[p] for p in self.perm]


def network_space(net: PenNetwork, max_dim: int = MAX_MATRIX_DIM) -> NetworkSpace:
    slots = []
    for i, e in enumerate(net.edges):
        psi = pure_state_of(e.state)
        if psi is None:
            raise UnsupportedError(f"{net.edge_label(i)}: needs a pure edge state")
        for c in range(e.multiplicity):
            slots.append(Slot(i, c, e.u, e.v, psi))
    axis_dims = []
    for s in slots:
        axis_dims += [s.state.dim_a, s.state.dim_b]
    total = int(np.prod(axis_dims))
    if total > max_dim:
        raise LimitError(f"network Hilbert space dimension {total} exceeds the cap of {max_dim}")
    perm = []
    vertex_dims = {}
    for v in net.vertices:
        d = 1
        for k, s in enumerate(slots):
            if s.u == v:
                perm.append(2 * k)
                d *= s.state.dim_a
            if s.v == v:
                perm.append(2 * k + 1)
                d *= s.state.dim_b
        vertex_dims[v] = d
    return NetworkSpace(tuple(slots), tuple(perm), tuple(axis_dims), vertex_dims)


def pen_state_vector(net: PenNetwork, space: NetworkSpace | None = None) -> np.ndarray:
    space = space or network_space(net)
    return space.vector([s.state.amplitudes for s in space.slots])


def cut_side(net: PenNetwork, cut: Iterable[int]) -> frozenset[int]:
    """Recover the vertex side of an edge cut; raises unless the cut is I-proper."""
    cut = set(cut)
    comp: dict[int, int] = {}
    for v in net.vertices:
        if v not in comp:
            for w in net._reachable(v, skip=cut):
                comp[w] = v
    color = {comp[1]: 0}
    pending = [comp[1]]
    links = defaultdict(set)
    for i in cut:
        e = net.edges[i]
        a, b = comp[e.u], comp[e.v]
        if a == b:
            raise InputError(f"{net.edge_label(i)} does not cross the cut")
        links[a].add(b)
        links[b].add(a)
    while pending:
        c = pending.pop()
        for d in links[c]:
            if d not in color:
                color[d] = 1 - color[c]
                pending.append(d)
            elif color[d] == color[c]:
                raise InputError("edge set is not a vertex bipartition cut")
    side = frozenset(v for v in net.vertices if color[comp[v]] == 0)
    if not (side & net.seekers) or not (net.seekers - side):
        raise InputError("cut is not I-proper: one side has no secrecy-seeking vertex")
    return side


@dataclass(frozen=True, eq=False)
class SigmaStar:
    """Dephased-cut state: Schmidt-basis dephasing on cut edges, the edge state elsewhere."""

    cut: tuple[int, ...]
    side: frozenset[int]
    space: NetworkSpace
    edge_factors: tuple[np.ndarray, ...]
    support: np.ndarray  # columns span supp(sigma*), vertex order
    eigenvalues: np.ndarray

    @cached_property
    def assembled(self) -> DensityMatrix:
        return DensityMatrix(self.space.matrix(self.edge_factors))

    def support_restriction(self) -> np.ndarray:
        """``V^dag sigma* V`` for the support basis V, computed by local factor application.

        Raises unless V carries all of the trace of sigma* and spans an
        invariant subspace, which makes restricted relative entropies exact.
        """
        v = self.support
        sv = np.column_stack([self.space.apply(self.edge_factors, v[:, j]) for j in range(v.shape[1])])
        m = v.conj().T @ sv
        if abs(np.trace(m).real - 1.0) > 1e-10 or np.linalg.norm(sv - v @ m) > 1e-10:
            raise RuntimeError("support basis does not capture sigma*")  # pragma: no cover
        return (m + m.conj().T) / 2

    def numeric_support(self) -> tuple[np.ndarray, np.ndarray]:
        """Eigenvalues and eigenvectors of sigma* on its support, from a numerical eigensolver."""
        if self.space.dim <= FULL_EVAL_DIM:
            lam, vecs = np.linalg.eigh(self.assembled.entries)
        else:
            lam, u = np.linalg.eigh(self.support_restriction())
            vecs = self.support @ u
        keep = lam > ZERO_EIG
        return lam[keep], vecs[:, keep]

    def divergence(self, psi: np.ndarray) -> float:
        """``D(|psi><psi| || sigma*)`` in bits; full matrices for small spaces."""
        if self.space.dim <= FULL_EVAL_DIM:
            return relative_entropy(np.outer(psi, psi.conj()), self.assembled)
        c = self.support.conj().T @ psi
        if abs(np.vdot(c, c).real - 1.0) > 1e-9:
            return float("inf")
        return relative_entropy(np.outer(c, c.conj()), self.support_restriction())


def build_sigma_star(net: PenNetwork, cut: Iterable[int], space: NetworkSpace | None = None) -> SigmaStar:
    cut = tuple(sorted(set(cut)))
    side = cut_side(net, cut)
    space = space or network_space(net)
    factors = []
    support_parts = []
    for s in space.slots:
        if s.edge in cut:
            sd = schmidt_decompose(s.state)
            vecs = [np.kron(sd.basis_a[:, n], sd.basis_b[:, n]) for n in range(sd.coefficients.size)]
            factors.append(sum(p * np.outer(x, x.conj()) for p, x in zip(sd.coefficients, vecs)))
            support_parts.append([(p, x) for p, x in zip(sd.coefficients, vecs) if p > ZERO_EIG])
        else:
            a = s.state.amplitudes
            factors.append(np.outer(a, a.conj()))
            support_parts.append([(1.0, a)])
    columns, evals = [], []
    for combo in itertools.product(*support_parts):
        columns.append(space.vector([x for _, x in combo]))
        evals.append(float(np.prod([p for p, _ in combo])))
    return SigmaStar(
        cut=cut,
        side=side,
        space=space,
        edge_factors=tuple(factors),
        support=np.array(columns).T,
        eigenvalues=np.array(evals),
    )


def _haar(rng: np.random.Generator, d: int) -> np.ndarray:
    z = rng.normal(size=d) + 1j * rng.normal(size=d)
    return z / np.linalg.norm(z)


def _random_proper_side(net: PenNetwork, rng: np.random.Generator) -> frozenset[int]:
    verts = list(net.vertices)
    while True:
        mask = rng.integers(0, 2, size=len(verts)).astype(bool)
        side = frozenset(v for v, m in zip(verts, mask) if m)
        if side & net.seekers and net.seekers - side:
            return side


def random_biseparable_vector(net: PenNetwork, space: NetworkSpace, side: frozenset[int], rng) -> np.ndarray:
    """Haar-random product of one pure state on ``side`` and one on its complement."""
    verts = list(net.vertices)
    left = [v for v in verts if v in side]
    right = [v for v in verts if v not in side]
    dl = int(np.prod([space.vertex_dims[v] for v in left]))
    dr = int(np.prod([space.vertex_dims[v] for v in right]))
    t = np.outer(_haar(rng, dl), _haar(rng, dr)).reshape([space.vertex_dims[v] for v in left + right])
    order = left + right
    t = t.transpose([order.index(v) for v in verts])
    return t.reshape(-1)


def mixture_divergence(psi: np.ndarray, ss: SigmaStar, phi: np.ndarray, x: float) -> float:
    """``D(|psi><psi| || (1-x) sigma* + x |phi><phi|)`` on the span of supp(sigma*) and phi.

    Exact whenever ``psi`` lies in the support of ``sigma*``; avoids full-size
    eigendecompositions.
    """
    v = ss.support
    coords = v.conj().T @ psi
    if abs(np.vdot(coords, coords).real - 1.0) > 1e-9:
        raise InputError("state is not supported on sigma*")
    c = v.conj().T @ phi
    resid = phi - v @ c
    r = np.linalg.norm(resid)
    k = c.size
    w = np.append(c, r)
    m = np.zeros((k + 1, k + 1), dtype=complex)
    m[:k, :k] = np.diag((1.0 - x) * ss.eigenvalues)
    m += x * np.outer(w, w.conj())
    rho = np.zeros((k + 1, k + 1), dtype=complex)
    rho[:k, :k] = np.outer(coords, coords.conj())
    return relative_entropy(rho, m)


@dataclass
class GmeReport:
    weakest_cut: float
    cut: tuple[int, ...]
    identity_value: float
    identity_holds: bool
    samples: int
    min_sampled: float
    counterexamples: list[dict] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return self.identity_holds and not self.counterexamples

    @property
    def message(self) -> str:
        if self.counterexamples:
            return f"{len(self.counterexamples)} counterexample(s) found"
        return "no counterexample found"

    def to_dict(self) -> dict:
        return {
            "weakest_cut": self.weakest_cut,
            "cut": list(self.cut),
            "identity_value": self.identity_value,
            "identity_holds": self.identity_holds,
            "samples": self.samples,
            "min_sampled": self.min_sampled,
            "counterexamples": self.counterexamples,
            "passed": self.passed,
            "message": self.message,
        }


def verify_gme_identity(
    net: PenNetwork,
    samples: int = 1000,
    seed: int = 0x5EED,
    mix_weights: Sequence[float] = (0.0, 0.5, 1.0),
    tol: float = 1e-8,
) -> GmeReport:
    """Check ``D(rho || sigma*) == weakest cut`` and search for biseparable states beating it."""
    space = network_space(net)
    w = derive_weights(net, "entropy_S")
    wc = weakest_cut_bound(net, w)
    target = float(wc.value)
    ss = build_sigma_star(net, wc.witness.edges, space)
    psi = pen_state_vector(net, space)
    value = ss.divergence(psi)
    rng = np.random.default_rng(seed)
    best = float("inf")
    bad = []
    for k in range(samples):
        side = _random_proper_side(net, rng)
        phi = random_biseparable_vector(net, space, side, rng)
        for x in mix_weights:
            d = mixture_divergence(psi, ss, phi, x)
            best = min(best, d)
            if d < target - tol:
                bad.append({"sample": k, "side": sorted(side), "weight": x, "divergence": d})
    return GmeReport(target, ss.cut, value, abs(value - target) <= tol, samples, best, bad)


# --- directional derivative ------------------------------------------------------


def _require_maximally_entangled(space: NetworkSpace, net: PenNetwork) -> None:
    for s in space.slots:
        p = schmidt_decompose(s.state).coefficients
        d = min(s.state.dim_a, s.state.dim_b)
        if s.state.dim_a != s.state.dim_b or np.max(np.abs(p - 1.0 / d)) > 1e-9:
            raise UnsupportedError(f"{net.edge_label(s.edge)}: needs a maximally entangled edge state")


@dataclass(frozen=True, eq=False)
class ProductDirection:
    """Pure biseparable direction with per-edge structure.

    Cut slots hold product vectors ``alpha (x) beta``; other slots hold an
    arbitrary bipartite vector.
    """

    cut: frozenset[int]  # slot indices
    factors: tuple[object, ...]  # (alpha, beta) for cut slots, vector otherwise

    def slot_vectors(self) -> list[np.ndarray]:
        out = []
        for k, f in enumerate(self.factors):
            out.append(np.kron(f[0], f[1]) if k in self.cut else f)
        return out


def random_direction(net: PenNetwork, space: NetworkSpace, rng: np.random.Generator) -> ProductDirection:
    side = _random_proper_side(net, rng)
    crossing = set(cut_edges(net, side))
    cut = frozenset(k for k, s in enumerate(space.slots) if s.edge in crossing)
    factors = []
    for k, s in enumerate(space.slots):
        if k in cut:
            factors.append((_haar(rng, s.state.dim_a), _haar(rng, s.state.dim_b)))
        else:
            factors.append(_haar(rng, s.state.dim_a * s.state.dim_b))
    return ProductDirection(cut, tuple(factors))


def one_minus_derivative_closed_form(space: NetworkSpace, ss: SigmaStar, direction: ProductDirection) -> complex:
    """Product formula for ``1 - f'(0)`` along a pure per-edge product direction."""
    total = 1.0 + 0j
    star = {k for k, s in enumerate(space.slots) if s.edge in ss.cut}
    for k, s in enumerate(space.slots):
        sd = schmidt_decompose(s.state)
        d = sd.coefficients.size
        f = direction.factors[k]
        in_star, in_dir = k in star, k in direction.cut
        if in_dir:
            a = sd.basis_a.conj().T @ f[0]
            b = sd.basis_b.conj().T @ f[1]
            overlap = np.sum(a * b)
            term = abs(overlap) ** 2 if in_star else abs(overlap) ** 2 / d
        elif in_star:
            diag = np.array([np.vdot(np.kron(sd.basis_a[:, n], sd.basis_b[:, n]), f) for n in range(d)])
            term = abs(np.sum(diag)) ** 2
        else:
            term = abs(np.vdot(s.state.amplitudes, f)) ** 2
        total *= term
    return total


def derivative_quadrature(psi: np.ndarray, ss: SigmaStar, sigma: np.ndarray) -> float:
    """``f'(0) = 1 - int_0^inf Tr[(s*+t)^-1 rho (s*+t)^-1 sigma] dt`` by numerical quadrature.

    ``f`` is the relative entropy in nats along ``(1-x) sigma* + x sigma``;
    ``sigma`` may be a state vector or a density matrix. The eigenbasis of
    sigma* comes from a numerical eigendecomposition.
    """
    lam, vecs = ss.numeric_support()
    coords = vecs.conj().T @ psi
    if abs(np.vdot(coords, coords).real - 1.0) > 1e-9:
        raise InputError("state is not supported on sigma*")
    rho_t = np.outer(coords, coords.conj())
    if sigma.ndim == 1:
        wv = vecs.conj().T @ sigma
        sig_t = np.outer(wv, wv.conj())
    else:
        sig_t = vecs.conj().T @ sigma @ vecs
    kernel = rho_t * sig_t.T

    def integrand(u: float) -> float:
        t = u / (1.0 - u)
        r = 1.0 / (lam + t)
        return float(np.real(r @ kernel @ r)) / (1.0 - u) ** 2

    val, _ = quad(integrand, 0.0, 1.0, epsabs=1e-13, epsrel=1e-11, limit=400)
    return 1.0 - val


@dataclass
class DerivativeReport:
    trials: int
    max_abs_one_minus: float
    max_discrepancy: float
    bound_holds: bool
    agreement: bool

    @property
    def passed(self) -> bool:
        return self.bound_holds and self.agreement

    def to_dict(self) -> dict:
        return {
            "trials": self.trials,
            "max_abs_one_minus_fprime": self.max_abs_one_minus,
            "max_closed_vs_quadrature": self.max_discrepancy,
            "bound_holds": self.bound_holds,
            "agreement": self.agreement,
            "passed": self.passed,
        }


def directional_derivative_check(
    net: PenNetwork, trials: int = 1000, seed: int = 0x5EED, agree_tol: float = 1e-6
) -> DerivativeReport:
    """Compare closed form and quadrature of ``1 - f'(0)`` over random biseparable directions."""
    space = network_space(net)
    _require_maximally_entangled(space, net)
    wc = weakest_cut_bound(net, derive_weights(net, "entropy_S"))
    ss = build_sigma_star(net, wc.witness.edges, space)
    psi = pen_state_vector(net, space)
    rng = np.random.default_rng(seed)
    worst, gap = 0.0, 0.0
    for _ in range(trials):
        direction = random_direction(net, space, rng)
        closed = one_minus_derivative_closed_form(space, ss, direction)
        phi = space.vector(direction.slot_vectors())
        numeric = 1.0 - derivative_quadrature(psi, ss, phi)
        worst = max(worst, abs(closed))
        gap = max(gap, abs(closed - numeric))
    return DerivativeReport(trials, worst, gap, worst <= 1.0 + 1e-9, gap <= agree_tol)


# --- total correlation -------------------------------------------------------------


def _full_bases(state: PureBipartiteState) -> tuple[np.ndarray, np.ndarray]:
    sd = schmidt_decompose(state)
    a, b = sd.basis_a, sd.basis_b
    if a.shape[1] < state.dim_a:
        a = np.hstack([a, null_space(a.conj().T)])
    if b.shape[1] < state.dim_b:
        b = np.hstack([b, null_space(b.conj().T)])
    return a, b


@dataclass
class TotalCorrelationReport:
    partition: tuple[tuple[int, ...], ...]
    total_correlation: float
    cross_entropy_sum: float
    holds: bool

    def to_dict(self) -> dict:
        return {
            "partition": [list(b) for b in self.partition],
            "total_correlation": self.total_correlation,
            "cross_entropy_sum": self.cross_entropy_sum,
            "holds": self.holds,
        }


def schmidt_measurement_distribution(net: PenNetwork) -> tuple[list[tuple[int, int, int]], dict[tuple, float]]:
    """Joint outcome distribution when every edge half is measured in its Schmidt basis.

    Returns the list of measured halves as ``(slot, vertex, side)`` and a map
    from outcome tuples (one entry per half) to probabilities.
    """
    space = network_space(net, max_dim=np.inf)
    halves = []
    per_slot = []
    for k, s in enumerate(space.slots):
        a, b = _full_bases(s.state)
        amp = a.conj().T @ s.state.matrix @ b.conj()
        prob = np.abs(amp) ** 2
        per_slot.append([((x, y), float(prob[x, y])) for x, y in zip(*np.nonzero(prob > 1e-15))])
        halves += [(k, s.u, 0), (k, s.v, 1)]
    size = int(np.prod([len(p) for p in per_slot]))
    if size > MAX_OUTCOMES:
        raise LimitError(f"outcome space of {size} exceeds the cap of {MAX_OUTCOMES}")
    dist: dict[tuple, float] = {}
    for combo in itertools.product(*per_slot):
        outcome = tuple(x for pair, _ in combo for x in pair)
        dist[outcome] = dist.get(outcome, 0.0) + float(np.prod([p for _, p in combo]))
    return halves, dist


def total_correlation_check(net: PenNetwork, partition: Partition, tol: float = 1e-9) -> TotalCorrelationReport:
    """Total correlation of block outcomes under Schmidt-basis measurements vs cross-edge entropy."""
    halves, dist = schmidt_measurement_distribution(net)
    where = partition.block_of()
    if set(where) != set(net.vertices):
        raise InputError("partition does not cover the network's vertices")
    idx_of_block = defaultdict(list)
    for pos, (_, vertex, _) in enumerate(halves):
        idx_of_block[where[vertex]].append(pos)
    marginals = [defaultdict(float) for _ in partition.blocks]
    for outcome, p in dist.items():
        for blk, positions in idx_of_block.items():
            marginals[blk][tuple(outcome[i] for i in positions)] += p
    joint_h = shannon_entropy(list(dist.values()))
    tc = sum(shannon_entropy(list(m.values())) for m in marginals) - joint_h
    w = derive_weights(net, "entropy_S").effective(net)
    cross = float(sum(w[i] for i in partition.cross_edges(net)))
    return TotalCorrelationReport(partition.blocks, tc, cross, abs(tc - cross) <= tol)
