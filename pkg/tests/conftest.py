from __future__ import annotations

from fractions import Fraction
from pathlib import Path

import numpy as np
import pytest

from penbounds.network import EdgeSpec, PenNetwork, PureSchmidt, bell_network, custom_weights, read_network

NETWORKS = Path(__file__).resolve().parent.parent / "networks"

TRIANGLE_EDGES = [(1, 2), (2, 3), (1, 3)]
EIGHT_NODE_EDGES = [(1, 2), (1, 4), (2, 3), (2, 5), (3, 6), (3, 5), (4, 6), (4, 7), (5, 8), (6, 7), (6, 8), (7, 8)]
HELPER_TREE_EDGES = [(1, 4), (2, 4), (3, 5), (4, 6), (5, 6), (6, 7), (7, 8), (7, 9)]


@pytest.fixture
def triangle() -> PenNetwork:
    return bell_network(3, TRIANGLE_EDGES)


@pytest.fixture
def eight_node() -> PenNetwork:
    return bell_network(8, EIGHT_NODE_EDGES, [2, 5, 6, 7])


@pytest.fixture
def helper_tree() -> PenNetwork:
    return bell_network(9, HELPER_TREE_EDGES, [4, 6, 8, 9])


def network_file(name: str) -> PenNetwork:
    return read_network(NETWORKS / name)


def random_connected_edges(rng: np.random.Generator, n: int, p: float = 0.5) -> list[tuple[int, int]]:
    """Random spanning tree plus independent extra edges (no parallel edges)."""
    order = rng.permutation(np.arange(1, n + 1))
    edges = set()
    for k in range(1, n):
        u, v = int(order[k]), int(order[rng.integers(0, k)])
        edges.add((min(u, v), max(u, v)))
    for u in range(1, n + 1):
        for v in range(u + 1, n + 1):
            if (u, v) not in edges and rng.random() < p:
                edges.add((u, v))
    return sorted(edges)


def random_tree_edges(rng: np.random.Generator, n: int) -> list[tuple[int, int]]:
    return [(int(rng.integers(1, k + 1)), k + 1) for k in range(1, n)]


def random_seekers(rng: np.random.Generator, n: int) -> list[int]:
    k = int(rng.integers(2, n + 1))
    return sorted(int(x) for x in rng.choice(np.arange(1, n + 1), size=k, replace=False))


def random_rational_weights(rng: np.random.Generator, m: int):
    return custom_weights([Fraction(int(rng.integers(1, 9)), int(rng.integers(1, 5))) for _ in range(m)])


def random_schmidt(rng: np.random.Generator, d: int = 2) -> PureSchmidt:
    p = rng.dirichlet(np.ones(d))
    return PureSchmidt(tuple(float(x) for x in p / p.sum()))


def pure_network(n, edges, seekers, states) -> PenNetwork:
    return PenNetwork(n, tuple(EdgeSpec(u, v, s) for (u, v), s in zip(edges, states)), frozenset(seekers))
