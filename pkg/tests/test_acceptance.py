"""Acceptance gate: one test per criterion, each printing a single PASS/FAIL line."""

import time
from fractions import Fraction

import numpy as np
import pytest
from conftest import (
    EIGHT_NODE_EDGES,
    TRIANGLE_EDGES,
    pure_network,
    random_connected_edges,
    random_rational_weights,
    random_schmidt,
    random_seekers,
    random_tree_edges,
)
from oracles import h2

from penbounds.bb84 import bb84_ceiling_search, bb84_rate, bell_mixture_state, correlators_from_state
from penbounds.bounds import (
    devetak_winter_bound,
    enumerate_proper_partitions,
    partition_bound,
    tree_exact_rate,
    weakest_cut_bound,
)
from penbounds.gme import directional_derivative_check, network_space, total_correlation_check, verify_gme_identity
from penbounds.linalg import PureBipartiteState
from penbounds.network import Bell, DensePure, bell_network, derive_weights
from penbounds.packing import (
    audit_secrecy,
    pack_trees_fractional,
    pack_trees_integer,
    simulate_conference_key,
)

pytestmark = pytest.mark.acceptance

# pinned tolerances and budgets
BB84_RATE_TOL = 1e-9
BB84_CEILING_VALUE = 0.18872
BB84_CEILING_TOL = 1e-4
GME_IDENTITY_TOL = 1e-8
GME_SAMPLE_TOL = 1e-6
GME_SAMPLES = 1000
GME_RANDOM_NETWORKS = 50
GME_MAX_DIM = 4096
DERIV_BOUND_SLACK = 1e-9
DERIV_AGREE_TOL = 1e-6
DERIV_TRIALS = 1000
DUALITY_TOL = 1e-6
DUALITY_GRAPHS = 100
TREE_TOL = 1e-9
TREE_COUNT = 100
TC_TOL = 1e-9
AUDIT_TRIALS = 10_000

BUDGET = {1: 1.0, 2: 5.0, 3: 1.0, 4: 5.0, 5: 60.0, 6: 30.0, 7: 60.0, 8: 10.0, 9: 10.0}


def verdict(capsys, n, checks, elapsed, detail):
    ok = all(checks.values()) and elapsed < BUDGET[n]
    failed = [k for k, v in checks.items() if not v]
    if elapsed >= BUDGET[n]:
        failed.append(f"runtime {elapsed:.2f}s >= {BUDGET[n]}s")
    with capsys.disabled():
        status = "PASS" if ok else "FAIL"
        print(f"\nCRITERION {n}: {status} ({elapsed:.2f}s) {detail}" + (f" failed: {failed}" if failed else ""))
    assert ok, failed


def test_criterion_1_triangle_bounds(capsys):
    t0 = time.perf_counter()
    net = bell_network(3, TRIANGLE_EDGES)
    w = derive_weights(net)
    wc, pb = weakest_cut_bound(net, w), partition_bound(net, w)
    elapsed = time.perf_counter() - t0
    checks = {
        "weakest_cut == 2": wc.value == Fraction(2) and wc.exact,
        "partition == 3/2": pb.value == Fraction(3, 2) and pb.exact,
    }
    verdict(capsys, 1, checks, elapsed, f"weakest_cut={wc.value} partition={pb.value}")


def test_criterion_2_eight_node_bounds(capsys):
    t0 = time.perf_counter()
    net = bell_network(8, EIGHT_NODE_EDGES, [2, 5, 6, 7])
    w = derive_weights(net)
    wc, pb = weakest_cut_bound(net, w), partition_bound(net, w)
    elapsed = time.perf_counter() - t0
    checks = {
        "weakest_cut == 3": wc.value == 3,
        "partition == 5/2": pb.value == Fraction(5, 2),
        "3 blocks": len(pb.witness) == 3,
        "5 cross edges": len(pb.witness.cross_edges(net)) == 5,
    }
    verdict(capsys, 2, checks, elapsed, f"weakest_cut={wc.value} partition={pb.value} witness={pb.witness.blocks}")


def test_criterion_3_dw_triangle(capsys):
    t0 = time.perf_counter()
    r = devetak_winter_bound(bell_network(3, TRIANGLE_EDGES), reference=1)
    elapsed = time.perf_counter() - t0
    verdict(capsys, 3, {"DW == 1 exactly": r.value == 1 and r.exact}, elapsed, f"DW={r.value}")


def test_criterion_4_bb84(capsys):
    t0 = time.perf_counter()
    rate = bb84_rate(correlators_from_state(bell_mixture_state()))
    ceil = bb84_ceiling_search(1000)
    elapsed = time.perf_counter() - t0
    checks = {
        "mixture rate == 1-h(1/4)": abs(rate - (1 - h2(0.25))) <= BB84_RATE_TOL,
        "ceiling == 0.18872": abs(ceil.value - BB84_CEILING_VALUE) <= BB84_CEILING_TOL,
    }
    verdict(capsys, 4, checks, elapsed, f"rate={rate:.12f} ceiling={ceil.value:.12f}")


def _random_pure_edge_network(rng):
    while True:
        n = int(rng.integers(2, 5))
        edges = random_connected_edges(rng, n, 0.4)
        states = []
        for _ in edges:
            kind = rng.integers(0, 3)
            if kind == 0:
                states.append(Bell())
            elif kind == 1:
                states.append(random_schmidt(rng, int(rng.integers(2, 4))))
            else:
                da, db = int(rng.integers(1, 4)), int(rng.integers(2, 4))
                z = rng.normal(size=da * db) + 1j * rng.normal(size=da * db)
                states.append(DensePure(PureBipartiteState(da, db, z / np.linalg.norm(z))))
        net = pure_network(n, edges, random_seekers(rng, n), states)
        if network_space(net, max_dim=np.inf).dim <= GME_MAX_DIM:
            return net


def test_criterion_5_gme_identity(capsys):
    t0 = time.perf_counter()
    rng = np.random.default_rng(2024)
    nets = [bell_network(3, TRIANGLE_EDGES)] + [_random_pure_edge_network(rng) for _ in range(GME_RANDOM_NETWORKS)]
    identity_gap, beaten, dims = 0.0, 0, []
    for k, net in enumerate(nets):
        r = verify_gme_identity(net, samples=GME_SAMPLES, seed=k, tol=GME_SAMPLE_TOL)
        identity_gap = max(identity_gap, abs(r.identity_value - r.weakest_cut))
        beaten += len(r.counterexamples)
        dims.append(network_space(net).dim)
    elapsed = time.perf_counter() - t0
    checks = {
        "identity within 1e-8": identity_gap <= GME_IDENTITY_TOL,
        "no sample beats W* by > 1e-6": beaten == 0,
    }
    verdict(
        capsys, 5, checks, elapsed,
        f"{len(nets)} networks (max dim {max(dims)}), max identity gap {identity_gap:.2e}, counterexamples {beaten}",
    )


def test_criterion_6_derivative(capsys):
    t0 = time.perf_counter()
    r = directional_derivative_check(bell_network(3, TRIANGLE_EDGES), trials=DERIV_TRIALS, agree_tol=DERIV_AGREE_TOL)
    elapsed = time.perf_counter() - t0
    checks = {
        "|1-f'(0)| <= 1": r.max_abs_one_minus <= 1 + DERIV_BOUND_SLACK,
        "closed form == quadrature": r.max_discrepancy <= DERIV_AGREE_TOL,
    }
    verdict(
        capsys, 6, checks, elapsed,
        f"max |1-f'(0)|={r.max_abs_one_minus:.6f}, max gap {r.max_discrepancy:.2e} over {r.trials} directions",
    )


def test_criterion_7_protocol_and_duality(capsys):
    t0 = time.perf_counter()
    tri = bell_network(3, TRIANGLE_EDGES)
    pk = pack_trees_integer(tri, 2)
    runs = [simulate_conference_key(tri, pk, seed=s) for s in range(AUDIT_TRIALS)]
    keys = runs[0].conference_keys
    audit = audit_secrecy(runs)
    rate = Fraction(len(pk.trees), 2)
    bound = partition_bound(tri, derive_weights(tri)).value

    rng = np.random.default_rng(77)
    worst = 0.0
    for _ in range(DUALITY_GRAPHS):
        n = int(rng.integers(2, 8))
        edges = random_connected_edges(rng, n, float(rng.uniform(0.1, 0.6)))
        net = bell_network(n, edges)
        w = random_rational_weights(rng, len(edges))
        worst = max(worst, abs(pack_trees_fractional(net, w).value - float(partition_bound(net, w, cross_check=False).value)))
    elapsed = time.perf_counter() - t0
    checks = {
        "3 conference bits": len(pk.trees) == 3 and all(len(b) == 3 for b in keys.values()),
        "all seekers agree": all(len(set(t.conference_keys.values())) == 1 for t in runs),
        "audit passes": audit.passed,
        "rate 3/2 == partition bound": rate == bound == Fraction(3, 2),
        "duality within 1e-6": worst <= DUALITY_TOL,
    }
    verdict(
        capsys, 7, checks, elapsed,
        f"rate={rate} bound={bound} audit max corr {audit.max_correlation:.4f} (thr {audit.threshold:.3f}), "
        f"duality gap {worst:.2e}",
    )


def test_criterion_8_trees(capsys):
    t0 = time.perf_counter()
    rng = np.random.default_rng(88)
    worst = 0.0
    for _ in range(TREE_COUNT):
        n = int(rng.integers(2, 11))
        edges = random_tree_edges(rng, n)
        net = pure_network(n, edges, random_seekers(rng, n), [random_schmidt(rng) for _ in edges])
        w = derive_weights(net)
        worst = max(worst, abs(float(tree_exact_rate(net, w).value) - float(partition_bound(net, w).value)))
    elapsed = time.perf_counter() - t0
    verdict(capsys, 8, {"tree_exact == partition": worst <= TREE_TOL}, elapsed, f"max gap {worst:.2e}")


def test_criterion_9_total_correlation(capsys):
    t0 = time.perf_counter()
    worst, count = 0.0, 0
    for net in (bell_network(3, TRIANGLE_EDGES), bell_network(4, [(1, 2), (2, 3), (3, 4)])):
        for p in enumerate_proper_partitions(net.n_vertices, net.seekers):
            r = total_correlation_check(net, p, tol=TC_TOL)
            worst = max(worst, abs(r.total_correlation - r.cross_entropy_sum))
            count += 1
    elapsed = time.perf_counter() - t0
    verdict(capsys, 9, {"equality on every partition": worst <= TC_TOL}, elapsed, f"{count} partitions, max gap {worst:.2e}")
