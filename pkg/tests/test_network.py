import json
from fractions import Fraction

import numpy as np
import pytest
from conftest import HELPER_TREE_EDGES, network_file, random_connected_edges, random_tree_edges
from hypothesis import given, settings
from hypothesis import strategies as st
from oracles import h2

from penbounds.errors import ConnectivityError, InputError, UnsupportedError
from penbounds.linalg import DensityMatrix, PureBipartiteState
from penbounds.network import (
    Bell,
    DenseMixed,
    DensePure,
    EdgeSpec,
    PenNetwork,
    PureSchmidt,
    WeightOverride,
    bell_network,
    custom_weights,
    derive_weights,
    dump_network,
    load_network,
    network_to_dict,
    steiner_subtree,
)

TRIANGLE_DOC = {
    "n_vertices": 3,
    "seekers": [1, 2, 3],
    "edges": [{"u": u, "v": v, "state": {"type": "bell"}} for u, v in [(1, 2), (2, 3), (1, 3)]],
}


def test_load_triangle():
    net = load_network(json.dumps(TRIANGLE_DOC))
    assert net.n_vertices == 3
    assert len(net.edges) == 3
    assert net.seekers == {1, 2, 3}
    assert all(isinstance(e.state, Bell) for e in net.edges)


def test_load_rejects_single_seeker():
    with pytest.raises(InputError):
        load_network({**TRIANGLE_DOC, "seekers": [1]})


def test_load_rejects_unreachable_vertex():
    with pytest.raises(ConnectivityError):
        load_network({**TRIANGLE_DOC, "n_vertices": 4})


@pytest.mark.parametrize(
    "doc, locus",
    [
        ({**TRIANGLE_DOC, "extra": 1}, "unknown top-level"),
        ({**TRIANGLE_DOC, "edges": [{"u": 1, "v": 5, "state": {"type": "bell"}}]}, "edge 0"),
        ({**TRIANGLE_DOC, "edges": [{"u": 1, "v": 2, "state": {"type": "pure", "schmidt": [0.5, 0.4]}}]}, "edge 0 (1,2)"),
        ({**TRIANGLE_DOC, "edges": [{"u": 1, "v": 2, "state": {"type": "magic"}}]}, "edge 0 (1,2)"),
        ({**TRIANGLE_DOC, "edges": [{"u": 1, "v": 1, "state": {"type": "bell"}}]}, "edge 0 (1,1)"),
        ({**TRIANGLE_DOC, "seekers": [1, 1, 2]}, "duplicate"),
        ({**TRIANGLE_DOC, "seekers": [1, 9]}, "outside"),
    ],
)
def test_load_errors_carry_locus(doc, locus):
    with pytest.raises(InputError, match=locus.replace("(", r"\(").replace(")", r"\)")):
        load_network(doc)


def test_load_rejects_malformed_json():
    with pytest.raises(InputError, match="parse error"):
        load_network("{not json")


def test_sample_files_load():
    for name in ("triangle.json", "eight_node.json", "path4.json", "helper_tree.json", "mixed_weights.json"):
        net = network_file(name)
        assert network_to_dict(load_network(dump_network(net))) == network_to_dict(net)


def test_mixed_file_round_trip_preserves_states():
    net = network_file("mixed_weights.json")
    again = load_network(dump_network(net))
    assert network_to_dict(again) == network_to_dict(net)
    assert again.edges[0].multiplicity == 2
    assert again.edges[2].state.value == Fraction(3, 2)


def _random_state(rng):
    kind = rng.integers(0, 5)
    if kind == 0:
        return Bell()
    if kind == 1:
        p = rng.dirichlet(np.ones(int(rng.integers(1, 4))))
        return PureSchmidt(tuple(float(x) for x in p / p.sum()))
    if kind == 2:
        z = rng.normal(size=6) + 1j * rng.normal(size=6)
        return DensePure(PureBipartiteState(2, 3, z / np.linalg.norm(z)))
    if kind == 3:
        g = rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4))
        m = g @ g.conj().T
        return DenseMixed(DensityMatrix(m / np.trace(m).real), (2, 2))
    return WeightOverride(Fraction(int(rng.integers(0, 7)), int(rng.integers(1, 4))))


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_round_trip_random_networks(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(2, 7))
    edges = random_connected_edges(rng, n)
    net = PenNetwork(
        n,
        tuple(EdgeSpec(u, v, _random_state(rng), int(rng.integers(1, 3))) for u, v in edges),
        frozenset(range(1, n + 1)),
    )
    again = load_network(dump_network(net))
    assert network_to_dict(again) == network_to_dict(net)
    assert json.loads(dump_network(again)) == json.loads(dump_network(net))


# --- weights ---------------------------------------------------------------------


def test_triangle_weights_exact_ones(triangle):
    w = derive_weights(triangle, "entropy_S")
    assert w.values == (1, 1, 1)
    assert w.exact


def test_pure_edge_weight_is_binary_entropy():
    net = PenNetwork(2, (EdgeSpec(1, 2, PureSchmidt((0.9, 0.1))),), frozenset({1, 2}))
    assert derive_weights(net).values[0] == pytest.approx(h2(0.1), abs=1e-12)


def test_mixed_non_qubit_edge_needs_override():
    rho = DensityMatrix.maximally_mixed(6)
    net = PenNetwork(2, (EdgeSpec(1, 2, DenseMixed(rho, (2, 3))),), frozenset({1, 2}))
    with pytest.raises(UnsupportedError, match=r"edge 0 \(1,2\)"):
        derive_weights(net, "eof_EF")
    with pytest.raises(UnsupportedError):
        derive_weights(net, "entropy_S")


def test_mixed_two_qubit_edge_uses_eof():
    rho = PureBipartiteState.bell().projector()
    net = PenNetwork(2, (EdgeSpec(1, 2, DenseMixed(rho, (2, 2))),), frozenset({1, 2}))
    assert derive_weights(net, "eof_EF").values[0] == pytest.approx(1.0, abs=1e-9)


def test_effective_weights_include_multiplicity():
    net = PenNetwork(2, (EdgeSpec(1, 2, Bell(), 3),), frozenset({1, 2}))
    assert derive_weights(net).effective(net) == [3]


def test_custom_weights_keep_rationals_exact():
    w = custom_weights([Fraction(1, 3), 2, "5/7"])
    assert w.exact and w.values == (Fraction(1, 3), 2, Fraction(5, 7))
    assert not custom_weights([0.5]).exact


def _haar_unitary(rng, d):
    z = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
    q, r = np.linalg.qr(z)
    return q * (np.diag(r) / np.abs(np.diag(r)))


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_entropy_weight_invariant_under_local_unitaries(seed):
    rng = np.random.default_rng(seed)
    da, db = int(rng.integers(1, 4)), int(rng.integers(1, 4))
    z = rng.normal(size=da * db) + 1j * rng.normal(size=da * db)
    psi = z / np.linalg.norm(z)
    ua, ub = _haar_unitary(rng, da), _haar_unitary(rng, db)
    rotated = (ua @ psi.reshape(da, db) @ ub.T).reshape(-1)
    nets = [
        PenNetwork(2, (EdgeSpec(1, 2, DensePure(PureBipartiteState(da, db, v))),), frozenset({1, 2}))
        for v in (psi, rotated)
    ]
    a, b = (derive_weights(n).values[0] for n in nets)
    assert a == pytest.approx(b, abs=1e-10)


# --- Steiner subtree -------------------------------------------------------------


def test_steiner_helper_tree(helper_tree):
    sub = steiner_subtree(helper_tree)
    assert {helper_tree.edges[i].endpoints for i in sub} == {(4, 6), (6, 7), (7, 8), (7, 9)}


def test_steiner_path_and_star():
    path = bell_network(3, [(1, 2), (2, 3)], [1, 3])
    assert steiner_subtree(path) == [0, 1]
    star = bell_network(5, [(1, 2), (1, 3), (1, 4), (1, 5)], [3, 5])
    assert steiner_subtree(star) == [1, 3]


def test_steiner_needs_tree(triangle):
    with pytest.raises(UnsupportedError):
        steiner_subtree(triangle)


def _components(n, edges):
    parent = list(range(n + 1))

    def find(x):
        while parent[x] != x:
            x = parent[x]
        return x

    for u, v in edges:
        parent[find(u)] = find(v)
    return find


@settings(max_examples=200, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_steiner_properties_random_trees(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(2, 11))
    edges = random_tree_edges(rng, n)
    k = int(rng.integers(2, n + 1))
    seekers = [int(x) for x in rng.choice(np.arange(1, n + 1), size=k, replace=False)]
    net = bell_network(n, edges, seekers)
    sub = [edges[i] for i in steiner_subtree(net)]
    find = _components(n, sub)
    # connected and covering the seekers
    assert len({find(s) for s in seekers}) == 1
    verts = {x for e in sub for x in e} or {seekers[0]}
    assert set(seekers) <= verts
    # every leaf edge is needed
    deg = {v: sum(v in e for e in sub) for v in verts}
    for e in sub:
        if deg[e[0]] == 1 or deg[e[1]] == 1:
            rest = [f for f in sub if f != e]
            find = _components(n, rest)
            assert len({find(s) for s in seekers}) > 1


def test_helper_tree_edges_fixture_is_a_tree():
    assert bell_network(9, HELPER_TREE_EDGES, [4, 6, 8, 9]).is_tree()
