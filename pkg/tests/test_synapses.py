"""Sparse synapse graph construction: degrees, wiring, weights, round trips."""

import numpy as np
import pytest

from gliaflow.rng import derive_stream
from gliaflow.synapses import (
    SynapseGraph,
    SynapseParams,
    build_graph,
    round_half_even,
    sample_degrees,
)


def small_graph():
    """3 neurons, hand-laid edges.

    afferents: neuron 0 <- {1 (+0.5), 2 (-0.25)}, neuron 1 <- {0 (+1.0)},
    neuron 2 <- {} (no afferents).
    """
    indptr = [0, 2, 3, 3]
    sources = [1, 2, 0]
    weights = [0.5, -0.25, 1.0]
    return SynapseGraph(3, indptr, sources, weights, ext_counts=[0, 0, 0])


def test_round_half_even_examples():
    vals = np.array([0.5, 1.5, 2.5, 3.5, -0.5, -1.5, 2.0, 2.4, 2.6])
    out = round_half_even(vals)
    assert out.tolist() == [0, 2, 2, 4, 0, -2, 2, 2, 3]
    assert out.dtype == np.int64


def test_sample_degrees_statistics():
    params = SynapseParams()  # s_ave 50, sigma 10
    n = 2400
    deg = sample_degrees(n, params, derive_stream(0, "a.degrees"))
    assert deg.shape == (n,)
    assert deg.min() >= 0
    assert deg.max() <= n - 1
    # mean within 5 standard errors of the target
    se = params.resolved_sigma() / np.sqrt(n)
    assert abs(deg.mean() - params.s_ave) < 5 * se


def test_sigma_defaults_to_fifth_of_mean():
    assert SynapseParams().resolved_sigma() == 10.0
    assert SynapseParams(s_ave=25.0).resolved_sigma() == 5.0
    assert SynapseParams(sigma_deg=3.0).resolved_sigma() == 3.0


def test_build_graph_respects_local_degrees():
    n = 300
    params = SynapseParams()
    rng = derive_stream(1, "a.graph")
    degrees = sample_degrees(n, params, derive_stream(1, "a.degrees"))
    g = build_graph(n, degrees, params, rng)

    local = round_half_even(degrees * params.p_loc)
    per_neuron = np.diff(g.indptr)
    assert np.array_equal(per_neuron, local)
    assert np.array_equal(g.ext_counts, degrees - local)


def test_build_graph_wiring_invariants():
    n = 200
    params = SynapseParams()
    degrees = sample_degrees(n, params, derive_stream(2, "a.degrees"))
    g = build_graph(n, degrees, params, derive_stream(2, "a.graph"))

    src = g.sources
    tgt = g.targets
    assert not np.any(src == tgt), "self edges are excluded by default"
    # no duplicate (target, source) pairs
    pair_ids = tgt.astype(np.int64) * n + src
    assert np.unique(pair_ids).size == pair_ids.size
    # afferent sources are sorted within each neuron's slice
    for i in range(n):
        s = src[g.afferent_slice(i)]
        assert np.array_equal(s, np.sort(s))


def test_weight_distribution_matches_mu():
    n = 600
    mu = 0.2
    params = SynapseParams(mu=mu)
    degrees = sample_degrees(n, params, derive_stream(3, "a.degrees"))
    g = build_graph(n, degrees, params, derive_stream(3, "a.graph"))
    w = g.weights
    lo = 2 * mu - 1
    assert w.min() >= lo
    assert w.max() < 1.0
    se = (1.0 - lo) / np.sqrt(12.0 * w.size)
    assert abs(w.mean() - mu) < 5 * se


def test_edge_sign_frozen_at_construction():
    g = small_graph()
    before = g.edge_sign.copy()
    g.weights[:] = [-0.1, 0.4, -0.9]  # plasticity mutates magnitudes in place
    assert np.array_equal(g.edge_sign, before)


def test_input_to_matches_dense_oracle():
    g = small_graph()
    state = np.array([1, -1, 1], dtype=np.int8)
    dense = np.zeros((3, 3))
    dense[0, 1] = 0.5
    dense[0, 2] = -0.25
    dense[1, 0] = 1.0
    assert np.allclose(g.input_to(state), dense @ state)


def test_csv_roundtrip(tmp_path):
    n = 80
    params = SynapseParams()
    degrees = sample_degrees(n, params, derive_stream(4, "a.degrees"))
    g = build_graph(n, degrees, params, derive_stream(4, "a.graph"))
    path = tmp_path / "edges.csv"
    g.to_csv(path)
    h = SynapseGraph.from_csv(path, n, ext_counts=g.ext_counts)
    assert np.array_equal(g.indptr, h.indptr)
    assert np.array_equal(g.sources, h.sources)
    assert np.array_equal(g.weights, h.weights)
    assert np.array_equal(g.edge_sign, h.edge_sign)


def test_build_graph_determinism():
    n = 150
    params = SynapseParams()
    degrees = sample_degrees(n, params, derive_stream(5, "a.degrees"))
    g1 = build_graph(n, degrees, params, derive_stream(5, "a.graph"))
    g2 = build_graph(n, degrees, params, derive_stream(5, "a.graph"))
    assert np.array_equal(g1.indptr, g2.indptr)
    assert np.array_equal(g1.sources, g2.sources)
    assert np.array_equal(g1.weights, g2.weights)


def test_degree_too_large_raises():
    params = SynapseParams(p_loc=1.0)
    degrees = np.array([6, 1, 1, 1, 1, 1], dtype=np.int64)
    with pytest.raises(ValueError):
        # neuron 0 wants 6 locals but only 5 candidates exist (no self edge)
        build_graph(6, degrees, params, derive_stream(6, "a.graph"))
    # wanting exactly the 5 available candidates fits
    degrees = np.array([5, 1, 1, 1, 1, 1], dtype=np.int64)
    g = build_graph(6, degrees, params, derive_stream(6, "a.graph"))
    assert np.array_equal(g.sources[g.afferent_slice(0)], np.arange(1, 6))


def test_weight_stats_empty_and_filled():
    g = small_graph()
    mean, lo, hi, count = g.weight_stats()
    assert count == 3
    assert lo == -0.25 and hi == 1.0
    empty = SynapseGraph(2, [0, 0, 0], [], [], ext_counts=[0, 0])
    assert empty.weight_stats() == (None, None, None, 0)
