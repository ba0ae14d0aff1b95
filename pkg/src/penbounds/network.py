"""Pair-entangled network (PEN) graphs and their JSON file format.

A network document looks like::

    {
      "n_vertices": 3,
      "seekers": [1, 2, 3],
      "edges": [
        {"u": 1, "v": 2, "state": {"type": "bell"}},
        {"u": 2, "v": 3, "state": {"type": "pure", "schmidt": [0.9, 0.1]}},
        {"u": 1, "v": 3, "state": {"type": "weight_override", "value": "3/2"},
         "multiplicity": 2}
      ]
    }

Vertices are 1-based. ``dense_pure`` states carry ``dims`` and ``amplitudes``
(reals or ``[re, im]`` pairs), ``dense_mixed`` states carry ``dims`` and a
``matrix`` of the same entry format. Subsystem ``a`` of a dense state sits
at ``u`` and subsystem ``b`` at ``v``.
"""

from __future__ import annotations

import json
from collections import deque
from dataclasses import dataclass, field
from fractions import Fraction
from numbers import Rational
from pathlib import Path
from typing import Iterable, Mapping, Sequence, Union

import numpy as np

from penbounds.errors import ConnectivityError, InputError, UnsupportedError
from penbounds.linalg import (
    DensityMatrix,
    PureBipartiteState,
    entanglement_entropy,
    entanglement_of_formation_2qubit,
    shannon_entropy,
)

Number = Union[Fraction, float]


@dataclass(frozen=True)
class Bell:
    kind = "bell"


@dataclass(frozen=True)
class PureSchmidt:
    coefficients: tuple[float, ...]
    kind = "pure"

    def __post_init__(self):
        p = np.asarray(self.coefficients, dtype=float)
        if p.size == 0 or np.any(p < 0) or abs(p.sum() - 1.0) > 1e-9:
            raise InputError(f"Schmidt coefficients {list(self.coefficients)} are not a probability vector")


@dataclass(frozen=True, eq=False)
class DensePure:
    state: PureBipartiteState
    kind = "dense_pure"


@dataclass(frozen=True, eq=False)
class DenseMixed:
    rho: DensityMatrix
    dims: tuple[int, int]
    kind = "dense_mixed"

    def __post_init__(self):
        if self.dims[0] * self.dims[1] != self.rho.dim:
            raise InputError(f"dims {self.dims} do not match matrix dimension {self.rho.dim}")


@dataclass(frozen=True)
class WeightOverride:
    value: Number
    kind = "weight_override"

    def __post_init__(self):
        if self.value < 0:
            raise InputError(f"weight override must be nonnegative, got {self.value}")


EdgeState = Union[Bell, PureSchmidt, DensePure, DenseMixed, WeightOverride]


def pure_state_of(state: EdgeState) -> PureBipartiteState | None:
    """State vector for pure edge kinds, ``None`` otherwise."""
    if isinstance(state, Bell):
        return PureBipartiteState.bell()
    if isinstance(state, PureSchmidt):
        return PureBipartiteState.from_schmidt(state.coefficients)
    if isinstance(state, DensePure):
        return state.state
    return None


@dataclass(frozen=True)
class EdgeSpec:
    u: int
    v: int
    state: EdgeState = field(default_factory=Bell)
    multiplicity: int = 1

    def __post_init__(self):
        if self.u == self.v:
            raise InputError(f"edge ({self.u},{self.v}) is a self-loop")
        if self.multiplicity < 1:
            raise InputError(f"edge ({self.u},{self.v}) has multiplicity {self.multiplicity} < 1")

    @property
    def endpoints(self) -> tuple[int, int]:
        return (min(self.u, self.v), max(self.u, self.v))


@dataclass(frozen=True)
class PenNetwork:
    n_vertices: int
    edges: tuple[EdgeSpec, ...]
    seekers: frozenset[int]
    names: Mapping[int, str] | None = field(default=None, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "edges", tuple(self.edges))
        object.__setattr__(self, "seekers", frozenset(int(s) for s in self.seekers))
        if self.n_vertices < 1:
            raise InputError("n_vertices must be positive")
        for i, e in enumerate(self.edges):
            for x in (e.u, e.v):
                if not 1 <= x <= self.n_vertices:
                    raise InputError(f"edge {i} ({e.u},{e.v}): vertex {x} outside 1..{self.n_vertices}")
        if len(self.seekers) < 2:
            raise InputError(f"need at least two secrecy-seeking vertices, got {sorted(self.seekers)}")
        bad = [s for s in self.seekers if not 1 <= s <= self.n_vertices]
        if bad:
            raise InputError(f"seekers {bad} outside 1..{self.n_vertices}")
        unreachable = set(self.vertices) - self._reachable(1)
        if unreachable:
            raise ConnectivityError(f"graph is disconnected: vertices {sorted(unreachable)} unreachable from 1")

    @property
    def vertices(self) -> range:
        return range(1, self.n_vertices + 1)

    @property
    def all_seekers(self) -> bool:
        return len(self.seekers) == self.n_vertices

    def neighbors(self) -> dict[int, list[tuple[int, int]]]:
        """Vertex -> list of (neighbor, edge index)."""
        adj: dict[int, list[tuple[int, int]]] = {v: [] for v in self.vertices}
        for i, e in enumerate(self.edges):
            adj[e.u].append((e.v, i))
            adj[e.v].append((e.u, i))
        return adj

    def _reachable(self, start: int, skip: Iterable[int] = ()) -> set[int]:
        skip = set(skip)
        adj = self.neighbors()
        seen = {start}
        queue = deque([start])
        while queue:
            x = queue.popleft()
            for y, i in adj[x]:
                if i not in skip and y not in seen:
                    seen.add(y)
                    queue.append(y)
        return seen

    def is_tree(self) -> bool:
        # parallel copies via multiplicity still count as one tree edge
        return len(self.edges) == self.n_vertices - 1

    def with_seekers(self, seekers: Iterable[int]) -> PenNetwork:
        return PenNetwork(self.n_vertices, self.edges, frozenset(seekers), self.names)

    def edge_label(self, i: int) -> str:
        e = self.edges[i]
        return f"edge {i} ({e.u},{e.v})"


WEIGHT_KINDS = ("entropy_S", "eof_EF", "custom")


@dataclass(frozen=True)
class EdgeWeighting:
    """Per-edge weights for a single copy; :meth:`effective` includes multiplicity.

    Values are :class:`~fractions.Fraction` when exact (Bell edges, rational
    overrides) and ``float`` otherwise.
    """

    kind: str
    values: tuple[Number, ...]

    def __post_init__(self):
        if self.kind not in WEIGHT_KINDS:
            raise InputError(f"unknown weight kind {self.kind!r}")
        if any(v < 0 for v in self.values):
            raise InputError("edge weights must be nonnegative")

    @property
    def exact(self) -> bool:
        return all(isinstance(v, Fraction) for v in self.values)

    def effective(self, net: PenNetwork) -> list[Number]:
        if len(self.values) != len(net.edges):
            raise InputError(f"{len(self.values)} weights for {len(net.edges)} edges")
        return [v * e.multiplicity for v, e in zip(self.values, net.edges)]

    def scaled(self, c: Number) -> EdgeWeighting:
        return EdgeWeighting(self.kind, tuple(v * c for v in self.values))


def custom_weights(values: Sequence[Number]) -> EdgeWeighting:
    return EdgeWeighting("custom", tuple(_exact_if_possible(v) for v in values))


def _exact_if_possible(v) -> Number:
    if isinstance(v, (Fraction, Rational)):
        return Fraction(v)
    if isinstance(v, str):
        return Fraction(v)
    return float(v)


def derive_weights(net: PenNetwork, kind: str = "entropy_S") -> EdgeWeighting:
    """Compute per-edge weights (entanglement entropy or entanglement of formation)."""
    if kind not in ("entropy_S", "eof_EF"):
        raise InputError(f"derive_weights supports entropy_S and eof_EF, not {kind!r}")
    values: list[Number] = []
    for i, e in enumerate(net.edges):
        st = e.state
        if isinstance(st, Bell):
            values.append(Fraction(1))
        elif isinstance(st, PureSchmidt):
            values.append(shannon_entropy(st.coefficients))
        elif isinstance(st, DensePure):
            values.append(entanglement_entropy(st.state))
        elif isinstance(st, WeightOverride):
            values.append(st.value)
        elif isinstance(st, DenseMixed):
            if kind == "entropy_S":
                raise UnsupportedError(f"{net.edge_label(i)}: mixed state has no entanglement entropy; use eof_EF")
            if st.dims != (2, 2):
                raise UnsupportedError(
                    f"{net.edge_label(i)}: entanglement of formation only available for two-qubit states "
                    f"(dims {st.dims}); supply a weight_override"
                )
            values.append(entanglement_of_formation_2qubit(st.rho))
        else:  # pragma: no cover
            raise UnsupportedError(f"{net.edge_label(i)}: unknown state {st!r}")
    return EdgeWeighting(kind, tuple(values))


def steiner_subtree(net: PenNetwork) -> list[int]:
    """Edge indices of the minimal subtree spanning all seekers (tree graphs only)."""
    if not net.is_tree():
        raise UnsupportedError("steiner_subtree needs a tree graph")
    adj = net.neighbors()
    degree = {v: len(adj[v]) for v in net.vertices}
    alive = set(range(len(net.edges)))
    leaves = deque(v for v in net.vertices if degree[v] == 1 and v not in net.seekers)
    removed: set[int] = set()
    while leaves:
        v = leaves.popleft()
        removed.add(v)
        for w, i in adj[v]:
            if i in alive:
                alive.discard(i)
                degree[w] -= 1
                if degree[w] == 1 and w not in net.seekers and w not in removed:
                    leaves.append(w)
    return sorted(alive)


# --- file format -----------------------------------------------------------

_TOP_FIELDS = {"n_vertices", "seekers", "edges", "names"}
_EDGE_FIELDS = {"u", "v", "state", "multiplicity"}
_STATE_FIELDS = {
    "bell": {"type"},
    "pure": {"type", "schmidt"},
    "dense_pure": {"type", "dims", "amplitudes"},
    "dense_mixed": {"type", "dims", "matrix"},
    "weight_override": {"type", "value"},
}


def _complex(x, where: str) -> complex:
    if isinstance(x, (int, float)) and not isinstance(x, bool):
        return complex(x)
    if isinstance(x, list) and len(x) == 2 and all(isinstance(t, (int, float)) for t in x):
        return complex(x[0], x[1])
    raise InputError(f"{where}: expected a number or [re, im] pair, got {x!r}")


def _encode_complex(z: complex):
    z = complex(z)
    return z.real if z.imag == 0 else [z.real, z.imag]


def _int(x, where: str) -> int:
    if isinstance(x, bool) or not isinstance(x, int):
        raise InputError(f"{where}: expected an integer, got {x!r}")
    return x


def _parse_state(doc, where: str) -> EdgeState:
    if not isinstance(doc, Mapping) or "type" not in doc:
        raise InputError(f"{where}: state must be an object with a 'type' field")
    kind = doc["type"]
    if kind not in _STATE_FIELDS:
        raise InputError(f"{where}: unknown state type {kind!r}")
    extra = set(doc) - _STATE_FIELDS[kind]
    missing = _STATE_FIELDS[kind] - set(doc)
    if extra:
        raise InputError(f"{where}: unknown state fields {sorted(extra)}")
    if missing:
        raise InputError(f"{where}: missing state fields {sorted(missing)}")
    try:
        if kind == "bell":
            return Bell()
        if kind == "pure":
            return PureSchmidt(tuple(float(p) for p in doc["schmidt"]))
        if kind == "weight_override":
            val = doc["value"]
            if isinstance(val, bool) or not isinstance(val, (int, float, str)):
                raise InputError(f"{where}: weight override must be a number or rational string")
            return WeightOverride(_exact_if_possible(val) if not isinstance(val, float) else val)
        dims = tuple(_int(d, where) for d in doc["dims"])
        if len(dims) != 2:
            raise InputError(f"{where}: dims must have two entries")
        if kind == "dense_pure":
            amps = [_complex(a, where) for a in doc["amplitudes"]]
            return DensePure(PureBipartiteState(dims[0], dims[1], np.array(amps)))
        rows = [[_complex(a, where) for a in row] for row in doc["matrix"]]
        return DenseMixed(DensityMatrix(np.array(rows)), dims)
    except InputError as exc:
        if str(exc).startswith(where):
            raise
        raise InputError(f"{where}: {exc}") from exc
    except (TypeError, ValueError, ZeroDivisionError) as exc:
        raise InputError(f"{where}: {exc}") from exc


def load_network(document: str | bytes | Mapping) -> PenNetwork:
    """Parse and validate a network document (JSON text or already-parsed mapping)."""
    if isinstance(document, (str, bytes)):
        try:
            document = json.loads(document)
        except json.JSONDecodeError as exc:
            raise InputError(f"parse error: {exc}") from exc
    if not isinstance(document, Mapping):
        raise InputError("network document must be an object")
    extra = set(document) - _TOP_FIELDS
    if extra:
        raise InputError(f"unknown top-level fields {sorted(extra)}")
    for key in ("n_vertices", "seekers", "edges"):
        if key not in document:
            raise InputError(f"missing top-level field {key!r}")
    n = _int(document["n_vertices"], "n_vertices")
    if not isinstance(document["seekers"], list):
        raise InputError("seekers must be an array")
    seekers = [_int(s, "seekers") for s in document["seekers"]]
    if len(set(seekers)) != len(seekers):
        raise InputError(f"duplicate seekers in {seekers}")
    if not isinstance(document["edges"], list):
        raise InputError("edges must be an array")
    edges = []
    for i, ed in enumerate(document["edges"]):
        where = f"edge {i}"
        if not isinstance(ed, Mapping):
            raise InputError(f"{where}: must be an object")
        extra = set(ed) - _EDGE_FIELDS
        if extra:
            raise InputError(f"{where}: unknown fields {sorted(extra)}")
        for key in ("u", "v", "state"):
            if key not in ed:
                raise InputError(f"{where}: missing field {key!r}")
        u, v = _int(ed["u"], where), _int(ed["v"], where)
        where = f"edge {i} ({u},{v})"
        state = _parse_state(ed["state"], where)
        mult = _int(ed.get("multiplicity", 1), where)
        try:
            edges.append(EdgeSpec(u, v, state, mult))
        except InputError as exc:
            raise InputError(f"{where}: {exc}") from exc
    names = document.get("names")
    if names is not None:
        if not isinstance(names, Mapping):
            raise InputError("names must be an object mapping vertex -> label")
        names = {int(k): str(val) for k, val in names.items()}
    return PenNetwork(n, tuple(edges), frozenset(seekers), names)


def read_network(path: str | Path) -> PenNetwork:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise InputError(f"cannot read network file {path}: {exc}") from exc
    return load_network(text)


def _encode_state(st: EdgeState) -> dict:
    if isinstance(st, Bell):
        return {"type": "bell"}
    if isinstance(st, PureSchmidt):
        return {"type": "pure", "schmidt": list(st.coefficients)}
    if isinstance(st, WeightOverride):
        v = st.value
        return {"type": "weight_override", "value": str(v) if isinstance(v, Fraction) else v}
    if isinstance(st, DensePure):
        s = st.state
        return {
            "type": "dense_pure",
            "dims": [s.dim_a, s.dim_b],
            "amplitudes": [_encode_complex(a) for a in s.amplitudes],
        }
    return {
        "type": "dense_mixed",
        "dims": list(st.dims),
        "matrix": [[_encode_complex(a) for a in row] for row in st.rho.entries],
    }


def network_to_dict(net: PenNetwork) -> dict:
    doc: dict = {
        "n_vertices": net.n_vertices,
        "seekers": sorted(net.seekers),
        "edges": [],
    }
    for e in net.edges:
        ed = {"u": e.u, "v": e.v, "state": _encode_state(e.state)}
        if e.multiplicity != 1:
            ed["multiplicity"] = e.multiplicity
        doc["edges"].append(ed)
    if net.names:
        doc["names"] = {str(k): v for k, v in sorted(net.names.items())}
    return doc


def dump_network(net: PenNetwork) -> str:
    return json.dumps(network_to_dict(net), indent=2)


def bell_network(n_vertices: int, edges: Iterable[tuple[int, int]], seekers: Iterable[int] | None = None) -> PenNetwork:
    """Convenience constructor: every edge carries one Bell pair."""
    seekers = range(1, n_vertices + 1) if seekers is None else seekers
    return PenNetwork(n_vertices, tuple(EdgeSpec(u, v) for u, v in edges), frozenset(seekers))
