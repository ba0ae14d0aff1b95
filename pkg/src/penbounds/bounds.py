"""Upper bounds on the distillable conference key of a PEN network.

Every calculator returns a :class:`BoundReport`. Values stay exact
(:class:`~fractions.Fraction`) when all edge weights are exact.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Iterator, Sequence, Union

from penbounds.errors import InputError, LimitError, UnsupportedError
from penbounds.linalg import entanglement_entropy, partial_trace, von_neumann_entropy
from penbounds.network import (
    DenseMixed,
    EdgeWeighting,
    Number,
    PenNetwork,
    WeightOverride,
    pure_state_of,
    steiner_subtree,
)

DEFAULT_PARTITION_LIMIT = 12
FLOAT_SLACK = 1e-9

BOUND_KINDS = ("weakest_cut", "partition_pure", "partition_mixed", "devetak_winter", "tree_exact")


@dataclass(frozen=True)
class Partition:
    """Set partition of the vertices; blocks are sorted tuples in sorted order."""

    blocks: tuple[tuple[int, ...], ...]
    proper: bool

    @classmethod
    def of(cls, blocks: Iterable[Iterable[int]], seekers: Iterable[int]) -> Partition:
        canon = tuple(sorted(tuple(sorted(b)) for b in blocks))
        if any(len(b) == 0 for b in canon):
            raise InputError("partition blocks must be nonempty")
        flat = [v for b in canon for v in b]
        if len(flat) != len(set(flat)):
            raise InputError("partition blocks overlap")
        seekers = set(seekers)
        return cls(canon, all(seekers.intersection(b) for b in canon))

    def __len__(self) -> int:
        return len(self.blocks)

    def block_of(self) -> dict[int, int]:
        return {v: i for i, b in enumerate(self.blocks) for v in b}

    def cross_edges(self, net: PenNetwork) -> list[int]:
        where = self.block_of()
        return [i for i, e in enumerate(net.edges) if where[e.u] != where[e.v]]


@dataclass(frozen=True)
class Cut:
    """An I-proper vertex bipartition, given by one side and the crossing edges."""

    side: frozenset[int]
    edges: tuple[int, ...]


Witness = Union[Cut, Partition, int, None]


@dataclass(frozen=True)
class BoundReport:
    bound_kind: str
    value: Number
    witness: Witness
    notes: tuple[str, ...] = field(default=())

    @property
    def exact(self) -> bool:
        return isinstance(self.value, Fraction)

    def to_dict(self) -> dict:
        w = self.witness
        if isinstance(w, Cut):
            wd = {"type": "cut", "side": sorted(w.side), "edges": list(w.edges)}
        elif isinstance(w, Partition):
            wd = {"type": "partition", "blocks": [list(b) for b in w.blocks]}
        elif w is None:
            wd = None
        else:
            wd = {"type": "edge" if self.bound_kind == "tree_exact" else "vertex", "index": w}
        return {
            "bound_kind": self.bound_kind,
            "value": float(self.value),
            "exact": str(self.value) if self.exact else None,
            "witness": wd,
            "notes": list(self.notes),
        }


def _slack(weights: Sequence[Number]) -> float:
    return 0 if all(isinstance(w, Fraction) for w in weights) else FLOAT_SLACK


def _better(value, key, best_value, best_key, slack) -> bool:
    if best_value is None:
        return True
    if value < best_value - slack:
        return True
    return value <= best_value + slack and key < best_key


# --- weakest cut -------------------------------------------------------------


def _min_st_cut(n: int, arcs: dict[tuple[int, int], Number], s: int, t: int, slack: float):
    """Edmonds-Karp max flow on an undirected capacity map; returns (value, source side)."""
    residual: dict[int, dict[int, Number]] = {v: {} for v in range(1, n + 1)}
    for (a, b), c in arcs.items():
        residual[a][b] = residual[a].get(b, 0) + c
        residual[b][a] = residual[b].get(a, 0) + c
    flow = 0
    while True:
        parent = {s: None}
        queue = deque([s])
        while queue and t not in parent:
            x = queue.popleft()
            for y, c in residual[x].items():
                if c > slack and y not in parent:
                    parent[y] = x
                    queue.append(y)
        if t not in parent:
            break
        path = []
        y = t
        while parent[y] is not None:
            path.append((parent[y], y))
            y = parent[y]
        push = min(residual[a][b] for a, b in path)
        for a, b in path:
            residual[a][b] -= push
            residual[b][a] += push
        flow += push
    return flow, frozenset(parent)


def _aggregate(net: PenNetwork, eff: Sequence[Number]) -> dict[tuple[int, int], Number]:
    arcs: dict[tuple[int, int], Number] = {}
    for e, w in zip(net.edges, eff):
        key = e.endpoints
        arcs[key] = arcs.get(key, 0) + w
    return arcs


def cut_edges(net: PenNetwork, side: Iterable[int]) -> tuple[int, ...]:
    side = set(side)
    return tuple(i for i, e in enumerate(net.edges) if (e.u in side) != (e.v in side))


def weakest_cut_bound(net: PenNetwork, w: EdgeWeighting) -> BoundReport:
    """Minimum total weight over I-proper cuts, via seeker-to-seeker max flows.

    Every I-proper cut separates the smallest seeker from some other seeker,
    so ``|I| - 1`` flow computations suffice.
    """
    eff = w.effective(net)
    slack = _slack(eff)
    arcs = _aggregate(net, eff)
    seekers = sorted(net.seekers)
    s0 = seekers[0]
    best_value, best_key, best_side = None, None, None
    for t in seekers[1:]:
        value, side = _min_st_cut(net.n_vertices, arcs, s0, t, slack)
        edges = cut_edges(net, side)
        value = sum((eff[i] for i in edges), Fraction(0) if slack == 0 else 0.0)
        if _better(value, edges, best_value, best_key, slack):
            best_value, best_key, best_side = value, edges, side
    notes = _weight_notes(w)
    return BoundReport("weakest_cut", best_value, Cut(best_side, best_key), notes)


# --- partitions --------------------------------------------------------------


def _check_limit(n: int, limit: int) -> None:
    if n > limit:
        raise LimitError(f"partition enumeration over {n} vertices exceeds the limit of {limit}")


def enumerate_proper_partitions(
    n: int, seekers: Iterable[int], limit: int = DEFAULT_PARTITION_LIMIT
) -> Iterator[Partition]:
    """Yield every partition of ``1..n`` whose blocks all contain a seeker."""
    _check_limit(n, limit)
    seekers = frozenset(seekers)
    if not seekers or not seekers <= set(range(1, n + 1)):
        raise InputError(f"seekers {sorted(seekers)} must be a nonempty subset of 1..{n}")
    remaining = [0] * (n + 2)
    for v in range(n, 0, -1):
        remaining[v] = remaining[v + 1] + (v in seekers)
    blocks: list[list[int]] = []
    has_seeker: list[bool] = []

    def rec(v: int, missing: int) -> Iterator[Partition]:
        # missing = blocks still lacking a seeker; each needs one of the later vertices
        if v > n:
            yield Partition(tuple(tuple(b) for b in blocks), True)
            return
        is_seeker = v in seekers
        for i, b in enumerate(blocks):
            now_missing = missing - (is_seeker and not has_seeker[i])
            if now_missing > remaining[v + 1]:
                continue
            old = has_seeker[i]
            b.append(v)
            has_seeker[i] = old or is_seeker
            yield from rec(v + 1, now_missing)
            has_seeker[i] = old
            b.pop()
        now_missing = missing + (not is_seeker)
        if now_missing <= remaining[v + 1]:
            blocks.append([v])
            has_seeker.append(is_seeker)
            yield from rec(v + 1, now_missing)
            blocks.pop()
            has_seeker.pop()

    yield from rec(1, 0)


def _search_partitions(net: PenNetwork, eff: Sequence[Number], slack: float, max_blocks: int | None):
    """Branch and bound over I-proper partitions minimizing cross weight / (p - 1)."""
    n = net.n_vertices
    seekers = net.seekers
    zero = Fraction(0) if slack == 0 else 0.0
    earlier: dict[int, list[tuple[int, Number]]] = {v: [] for v in net.vertices}
    for e, wgt in zip(net.edges, eff):
        a, b = e.endpoints
        earlier[b].append((a, wgt))
    remaining = [0] * (n + 2)
    for v in range(n, 0, -1):
        remaining[v] = remaining[v + 1] + (v in seekers)
    cap = max_blocks if max_blocks is not None else len(seekers)

    assign: dict[int, int] = {}
    blocks: list[list[int]] = []
    seeker_count: list[int] = []
    best: list = [None, None, None]  # value, key, partition blocks

    def rec(v: int, cross, missing: int) -> None:
        p = len(blocks)
        if v > n:
            if p < 2:
                return
            value = cross / (p - 1)
            key = tuple(sorted(tuple(b) for b in blocks))
            if _better(value, key, best[0], best[1], slack):
                best[0], best[1] = value, key
            return
        p_max = min(cap, p + remaining[v] - missing)
        if best[0] is not None and p_max >= 2 and cross / (p_max - 1) > best[0] + slack:
            return
        is_seeker = v in seekers
        options = list(range(p))
        if p < cap:
            options.append(p)
        for i in options:
            new_block = i == p
            delta = zero
            for a, wgt in earlier[v]:
                if assign[a] != i:
                    delta += wgt
            if new_block:
                blocks.append([])
                seeker_count.append(0)
            was_missing = seeker_count[i] == 0
            blocks[i].append(v)
            seeker_count[i] += is_seeker
            if new_block:
                now_missing = missing + (not is_seeker)
            else:
                now_missing = missing - (was_missing and is_seeker)
            assign[v] = i
            if now_missing <= remaining[v + 1]:
                rec(v + 1, cross + delta, now_missing)
            del assign[v]
            seeker_count[i] -= is_seeker
            blocks[i].pop()
            if new_block:
                blocks.pop()
                seeker_count.pop()

    rec(1, zero, 0)
    return best[0], best[1]


def partition_bound(
    net: PenNetwork,
    w: EdgeWeighting,
    limit: int = DEFAULT_PARTITION_LIMIT,
    bipartitions_only: bool = False,
    cross_check: bool = True,
) -> BoundReport:
    """Minimum over I-proper partitions P of (cross-edge weight) / (|P| - 1).

    With ``bipartitions_only`` the search is restricted to two blocks, which
    reproduces the weakest-cut value. For ``I = [N]`` the result is checked
    against the fractional spanning-tree packing value when that is cheap.
    """
    eff = w.effective(net)
    slack = _slack(eff)
    kind = "partition_mixed" if w.kind == "eof_EF" else "partition_pure"
    notes = list(_weight_notes(w))
    if net.n_vertices > limit:
        if not net.all_seekers:
            raise LimitError(
                f"partition bound for {net.n_vertices} vertices with helpers exceeds the "
                f"brute-force limit of {limit}"
            )
        from penbounds.packing import pack_trees_fractional

        packing = pack_trees_fractional(net, w)
        notes.append(f"value from spanning-tree packing duality; brute-force limit {limit} exceeded")
        return BoundReport(kind, packing.value, None, tuple(notes))
    value, key = _search_partitions(net, eff, slack, 2 if bipartitions_only else None)
    witness = Partition.of(key, net.seekers)
    if cross_check and net.all_seekers and not bipartitions_only:
        notes.append(_packing_cross_check(net, w, value))
    return BoundReport(kind, value, witness, tuple(notes))


def _packing_cross_check(net: PenNetwork, w: EdgeWeighting, value) -> str:
    from penbounds.packing import DEFAULT_TREE_LIMIT, pack_trees_fractional, spanning_tree_count

    if spanning_tree_count(net) > DEFAULT_TREE_LIMIT:
        return "spanning-tree packing cross-check skipped (too many spanning trees)"
    packed = pack_trees_fractional(net, w).value
    verdict = "agrees" if abs(packed - float(value)) <= 1e-6 else "DISAGREES"
    return f"spanning-tree packing cross-check {verdict}: {packed:.9g}"


def _weight_notes(w: EdgeWeighting) -> tuple[str, ...]:
    if w.kind == "eof_EF":
        return ("E_F surrogate: valid, possibly loose",)
    return ()


# --- Devetak-Winter ----------------------------------------------------------


def devetak_winter_bound(net: PenNetwork, reference: int = 1) -> BoundReport:
    """Entropy of the reference party's reduced state divided by ``N - 1``.

    The reduced state of a PEN factorizes over the reference's incident
    edges, so its entropy is the sum of per-edge local entropies.
    """
    if reference not in net.vertices:
        raise InputError(f"reference vertex {reference} outside 1..{net.n_vertices}")
    if net.n_vertices < 2:
        raise InputError("Devetak-Winter bound needs at least two vertices")
    total: Number = Fraction(0)
    for i, e in enumerate(net.edges):
        if reference not in (e.u, e.v):
            continue
        st = e.state
        if isinstance(st, WeightOverride):
            raise UnsupportedError(
                f"{net.edge_label(i)}: weight override does not determine the local entropy of vertex {reference}"
            )
        if isinstance(st, DenseMixed):
            keep = 0 if e.u == reference else 1
            s_local = von_neumann_entropy(partial_trace(st.rho, st.dims, [keep]))
        elif st.kind == "bell":
            s_local = Fraction(1)
        else:
            s_local = entanglement_entropy(pure_state_of(st))
        total = total + s_local * e.multiplicity
    notes = () if net.all_seekers else ("bound stated for all parties seeking the key",)
    return BoundReport("devetak_winter", total / (net.n_vertices - 1), reference, notes)


# --- trees -------------------------------------------------------------------


def tree_exact_rate(net: PenNetwork, w: EdgeWeighting) -> BoundReport:
    """Exact conference key rate on a tree: the weakest edge of the seekers' subtree."""
    if not net.is_tree():
        raise UnsupportedError("tree_exact_rate needs a tree graph")
    eff = w.effective(net)
    sub = steiner_subtree(net)
    best = min(sub, key=lambda i: (eff[i], net.edges[i].endpoints))
    notes = list(_weight_notes(w))
    if w.kind == "eof_EF":
        notes.append("exact only when weights equal the bipartite distillable keys")
    return BoundReport("tree_exact", eff[best], best, tuple(notes))
