"""Spanning-tree packing and simulation of conference key propagation.

Each packed spanning tree carries one conference key bit per use: the root
(lowest-index vertex) draws a bit and it travels along the tree, every tree
edge acting as a one-time pad. The fractional packing optimum equals the
partition bound when every vertex seeks the key.
"""

from __future__ import annotations

import json
from collections import Counter, deque
from dataclasses import dataclass, field
from typing import Iterator, Sequence

import numpy as np
from scipy.optimize import Bounds, LinearConstraint, linprog, milp

from penbounds.errors import InputError, LimitError, UnsupportedError
from penbounds.network import Bell, EdgeWeighting, PenNetwork, steiner_subtree

DEFAULT_TREE_LIMIT = 50_000
DEFAULT_SEED = 0x5EED
AUDIT_TRIALS = 10_000


def spanning_tree_count(net: PenNetwork) -> int:
    """Number of spanning trees (edge entries counted separately, multiplicity ignored)."""
    n = net.n_vertices
    lap = np.zeros((n, n))
    for e in net.edges:
        a, b = e.u - 1, e.v - 1
        lap[a, a] += 1
        lap[b, b] += 1
        lap[a, b] -= 1
        lap[b, a] -= 1
    if n == 1:
        return 1
    return int(round(np.linalg.det(lap[1:, 1:])))


def spanning_trees(net: PenNetwork) -> Iterator[tuple[int, ...]]:
    """Enumerate spanning trees as sorted tuples of edge indices."""
    n = net.n_vertices
    m = len(net.edges)
    ends = [(e.u - 1, e.v - 1) for e in net.edges]
    chosen: list[int] = []

    def rec(i: int, comp: list[int]) -> Iterator[tuple[int, ...]]:
        need = n - 1 - len(chosen)
        if need == 0:
            yield tuple(chosen)
            return
        if m - i < need:
            return
        a, b = ends[i]
        ca, cb = comp[a], comp[b]
        if ca != cb:
            merged = [ca if c == cb else c for c in comp]
            chosen.append(i)
            yield from rec(i + 1, merged)
            chosen.pop()
        yield from rec(i + 1, comp)

    yield from rec(0, list(range(n)))


def _trees_or_limit(net: PenNetwork, tree_limit: int) -> list[tuple[int, ...]]:
    count = spanning_tree_count(net)
    if count > tree_limit:
        raise LimitError(f"{count} spanning trees exceed the enumeration limit of {tree_limit}")
    return list(spanning_trees(net))


@dataclass(frozen=True)
class TreePacking:
    """Weighted spanning trees respecting per-edge capacities.

    ``copies`` is filled for integer packings: for every tree, the
    ``(edge, round, copy)`` key resources it consumes.
    """

    trees: tuple[tuple[int, ...], ...]
    weights: tuple[float, ...]
    capacity: tuple[float, ...]
    vertices: frozenset[int]
    copies: tuple[tuple[tuple[int, int, int], ...], ...] | None = None
    rounds: int | None = None

    @property
    def value(self) -> float:
        return float(sum(self.weights))

    def usage(self) -> list[float]:
        used = [0.0] * len(self.capacity)
        for tree, wgt in zip(self.trees, self.weights):
            for i in tree:
                used[i] += wgt
        return used

    def validate(self, net: PenNetwork, tol: float = 1e-9) -> None:
        for k, tree in enumerate(self.trees):
            if not _spans(net, tree, self.vertices):
                raise InputError(f"tree {k} does not span {sorted(self.vertices)} acyclically")
        for i, (u, c) in enumerate(zip(self.usage(), self.capacity)):
            if u > c + tol:
                raise InputError(f"{net.edge_label(i)}: packing uses {u} > capacity {c}")
        if self.copies is not None:
            seen = Counter(c for cs in self.copies for c in cs)
            dup = [c for c, k in seen.items() if k > 1]
            if dup:
                raise InputError(f"key resources used twice: {sorted(dup)[:5]}")
            for edge, rnd, cp in seen:
                if not (0 <= rnd < (self.rounds or 0) and 0 <= cp < net.edges[edge].multiplicity):
                    raise InputError(f"key resource {(edge, rnd, cp)} does not exist")


def _spans(net: PenNetwork, tree: Sequence[int], vertices: frozenset[int]) -> bool:
    if len(tree) != len(vertices) - 1:
        return False
    parent = {v: v for v in vertices}

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for i in tree:
        e = net.edges[i]
        if e.u not in parent or e.v not in parent:
            return False
        a, b = find(e.u), find(e.v)
        if a == b:
            return False
        parent[a] = b
    return True


def _require_all_seekers(net: PenNetwork) -> None:
    if not net.all_seekers:
        raise UnsupportedError("spanning-tree packing protocol needs every vertex to seek the key")


def pack_trees_fractional(
    net: PenNetwork, w: EdgeWeighting, tree_limit: int = DEFAULT_TREE_LIMIT
) -> TreePacking:
    """Maximum fractional spanning-tree packing under capacities ``w_e * mult_e`` (LP)."""
    _require_all_seekers(net)
    cap = np.array([float(c) for c in w.effective(net)])
    trees = _trees_or_limit(net, tree_limit)
    a = np.zeros((len(net.edges), len(trees)))
    for k, tree in enumerate(trees):
        a[list(tree), k] = 1.0
    res = linprog(-np.ones(len(trees)), A_ub=a, b_ub=cap, bounds=(0, None), method="highs")
    if res.status != 0:  # pragma: no cover
        raise RuntimeError(f"packing LP failed: {res.message}")
    keep = [k for k, x in enumerate(res.x) if x > 1e-12]
    return TreePacking(
        trees=tuple(trees[k] for k in keep),
        weights=tuple(float(res.x[k]) for k in keep),
        capacity=tuple(cap),
        vertices=frozenset(net.vertices),
    )


def pack_trees_integer(net: PenNetwork, rounds: int, tree_limit: int = DEFAULT_TREE_LIMIT) -> TreePacking:
    """Maximum number of edge-disjoint spanning trees in the rounds-expanded multigraph.

    Each edge offers ``rounds * multiplicity`` key bits. On tree graphs with
    helpers the seekers' minimal subtree is packed instead.
    """
    if rounds < 1:
        raise InputError(f"rounds must be positive, got {rounds}")
    cap = [rounds * e.multiplicity for e in net.edges]
    if not net.all_seekers:
        if not net.is_tree():
            raise UnsupportedError(
                "integer packing with helper vertices is only simulated on tree graphs"
            )
        sub = tuple(steiner_subtree(net))
        count = min(cap[i] for i in sub)
        verts = frozenset(v for i in sub for v in (net.edges[i].u, net.edges[i].v))
        trees = [sub] * count
    else:
        verts = frozenset(net.vertices)
        cols = _trees_or_limit(net, tree_limit)
        a = np.zeros((len(net.edges), len(cols)))
        for k, tree in enumerate(cols):
            a[list(tree), k] = 1.0
        res = milp(
            -np.ones(len(cols)),
            constraints=LinearConstraint(a, -np.inf, np.array(cap, dtype=float)),
            integrality=np.ones(len(cols)),
            bounds=Bounds(0, np.inf),
        )
        if res.status != 0:  # pragma: no cover
            raise RuntimeError(f"integer packing failed: {res.message}")
        trees = []
        for k, x in enumerate(np.round(res.x).astype(int)):
            trees.extend([cols[k]] * int(x))
    next_copy = [0] * len(net.edges)
    copies = []
    for tree in trees:
        used = []
        for i in tree:
            c = next_copy[i]
            next_copy[i] += 1
            mult = net.edges[i].multiplicity
            used.append((i, c // mult, c % mult))
        copies.append(tuple(used))
    return TreePacking(
        trees=tuple(trees),
        weights=tuple(1.0 for _ in trees),
        capacity=tuple(float(c) for c in cap),
        vertices=verts,
        copies=tuple(copies),
        rounds=rounds,
    )


# --- simulation ----------------------------------------------------------------


@dataclass(frozen=True)
class Announcement:
    tree: int
    announcer: int
    receiver: int
    resource: tuple[int, int, int]  # (edge, round, copy) whose key bit pads this message
    bit: int


@dataclass(frozen=True)
class KeyTranscript:
    seed: int
    rounds: int
    trees: tuple[tuple[int, ...], ...]
    edge_keys: dict[tuple[int, int, int], int]
    announcements: tuple[Announcement, ...]
    conference_keys: dict[int, tuple[int, ...]]
    endpoints: tuple[tuple[int, int], ...] = field(default=())

    def to_dict(self) -> dict:
        return {
            "seed": self.seed,
            "rounds": self.rounds,
            "trees": [[list(self.endpoints[i]) for i in tree] for tree in self.trees],
            "tree_edges": [list(tree) for tree in self.trees],
            "edge_keys": [
                {"edge": k[0], "round": k[1], "copy": k[2], "bit": b} for k, b in sorted(self.edge_keys.items())
            ],
            "announcements": [
                {
                    "tree": a.tree,
                    "announcer": a.announcer,
                    "receiver": a.receiver,
                    "edge": a.resource[0],
                    "round": a.resource[1],
                    "copy": a.resource[2],
                    "bit": a.bit,
                }
                for a in self.announcements
            ],
            "key_bits": len(self.trees),
            "keys": {str(v): bits_to_hex(bits) for v, bits in sorted(self.conference_keys.items())},
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)


def bits_to_hex(bits: Sequence[int]) -> str:
    """MSB-first packing, zero-padded to whole bytes."""
    if len(bits) == 0:
        return ""
    return np.packbits(np.asarray(bits, dtype=np.uint8)).tobytes().hex()


def _round_rng(seed: int, rnd: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([seed & (2**64 - 1), rnd])))


def simulate_conference_key(net: PenNetwork, packing: TreePacking, seed: int = DEFAULT_SEED) -> KeyTranscript:
    """Propagate one conference bit per packed tree using the edge keys as pads."""
    if packing.copies is None or packing.rounds is None:
        raise InputError("simulation needs an integer packing")
    bad = [i for i, e in enumerate(net.edges) if not isinstance(e.state, Bell)]
    if bad:
        raise UnsupportedError(f"simulation needs Bell edges; {net.edge_label(bad[0])} is not")
    packing.validate(net)
    rounds = packing.rounds

    edge_keys: dict[tuple[int, int, int], int] = {}
    for r in range(rounds):
        rng = _round_rng(seed, r)
        for i, e in enumerate(net.edges):
            bits = rng.integers(0, 2, size=e.multiplicity)
            for c in range(e.multiplicity):
                edge_keys[(i, r, c)] = int(bits[c])
    root_rng = _round_rng(seed, rounds)
    root_bits = root_rng.integers(0, 2, size=len(packing.trees))

    seekers = sorted(net.seekers)
    keys: dict[int, list[int]] = {v: [] for v in seekers}
    announcements = []
    for k, (tree, used) in enumerate(zip(packing.trees, packing.copies)):
        resource = dict(zip(tree, used))
        adj: dict[int, list[int]] = {}
        for i in tree:
            e = net.edges[i]
            adj.setdefault(e.u, []).append(i)
            adj.setdefault(e.v, []).append(i)
        root = min(packing.vertices)
        known = {root: int(root_bits[k])}
        queue = deque([root])
        while queue:
            u = queue.popleft()
            for i in sorted(adj.get(u, []), key=lambda j: net.edges[j].endpoints):
                e = net.edges[i]
                v = e.v if e.u == u else e.u
                if v in known:
                    continue
                pad = edge_keys[resource[i]]
                bit = known[u] ^ pad
                announcements.append(Announcement(k, u, v, resource[i], bit))
                known[v] = bit ^ pad
                queue.append(v)
        for s in seekers:
            keys[s].append(known[s])
    return KeyTranscript(
        seed=seed,
        rounds=rounds,
        trees=packing.trees,
        edge_keys=edge_keys,
        announcements=tuple(announcements),
        conference_keys={v: tuple(b) for v, b in keys.items()},
        endpoints=tuple(e.endpoints for e in net.edges),
    )


@dataclass
class AuditReport:
    passed: bool
    violations: list[str]
    trials: int
    threshold: float | None
    max_correlation: float | None

    def to_dict(self) -> dict:
        return {
            "passed": self.passed,
            "violations": self.violations,
            "trials": self.trials,
            "threshold": self.threshold,
            "max_correlation": self.max_correlation,
        }


def audit_secrecy(transcripts: Sequence[KeyTranscript] | KeyTranscript) -> AuditReport:
    """Structural one-time-pad and agreement checks, plus a correlation test across runs.

    With two or more transcripts of the same packing, every announcement bit
    must be uncorrelated with every conference bit within ``4 / sqrt(trials)``.
    """
    if isinstance(transcripts, KeyTranscript):
        transcripts = [transcripts]
    violations: list[str] = []
    for t_idx, tr in enumerate(transcripts):
        uses = Counter(a.resource for a in tr.announcements)
        for res, k in sorted(uses.items()):
            if k > 1:
                violations.append(f"run {t_idx}: key bit {res} pads {k} announcements")
            if res not in tr.edge_keys:
                violations.append(f"run {t_idx}: announcement padded by unknown key bit {res}")
        distinct = {tuple(bits) for bits in tr.conference_keys.values()}
        if len(distinct) > 1:
            violations.append(f"run {t_idx}: seekers hold different conference keys")
        if any(len(bits) != len(tr.trees) for bits in tr.conference_keys.values()):
            violations.append(f"run {t_idx}: conference key length differs from tree count")
        if len(violations) > 50:
            break

    trials = len(transcripts)
    threshold = max_corr = None
    if trials >= 2:
        shapes = {(len(t.announcements), len(t.trees)) for t in transcripts}
        if len(shapes) != 1:
            violations.append("correlation test needs transcripts of the same packing")
        else:
            ann = np.array([[a.bit for a in t.announcements] for t in transcripts], dtype=float)
            first = min(transcripts[0].conference_keys)
            key = np.array([t.conference_keys[first] for t in transcripts], dtype=float)
            threshold = float(4.0 / np.sqrt(trials))
            corr = _cross_correlation(ann, key)
            max_corr = float(np.max(np.abs(corr))) if corr.size else 0.0
            for j, i in zip(*np.nonzero(np.abs(corr) > threshold)):
                violations.append(f"announcement {j} correlates with conference bit {i}: {corr[j, i]:+.3f}")
    return AuditReport(not violations, violations, trials, threshold, max_corr)


def _cross_correlation(x: np.ndarray, y: np.ndarray) -> np.ndarray:
    """Pearson correlation of every column of x with every column of y (0 for constant columns)."""
    xc = x - x.mean(axis=0)
    yc = y - y.mean(axis=0)
    sx = np.sqrt((xc**2).sum(axis=0))
    sy = np.sqrt((yc**2).sum(axis=0))
    num = xc.T @ yc
    den = np.outer(sx, sy)
    with np.errstate(invalid="ignore", divide="ignore"):
        out = np.where(den > 0, num / np.where(den > 0, den, 1.0), 0.0)
    return out
