import math
import warnings

import numpy as np
import pytest

from gpaf import sphere
from gpaf.graphstats import (
    DegreeHistogram,
    StaticGraph,
    compare_empirical_theory,
    connected_components,
    degree_histogram,
    diameter,
    tail_exponent_fit,
)
from gpaf.kernels import ConstantKernel, RangeIndicatorKernel
from gpaf.process import ProcessParams, replica_seed, run, total_attraction
from gpaf.theory import concentration_band, limit_degree_distribution


def _rng(seed=0):
    return np.random.Generator(np.random.Philox(key=seed))


def _params(**kw):
    base = dict(n=100, m=2, alpha=3.0, delta=0.0, kernel=ConstantKernel(), seed=0)
    base.update(kw)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        return ProcessParams(**base)


def _path_graph(n):
    edges = np.array([[i, i + 1] for i in range(n - 1)], dtype=np.int64)
    return StaticGraph(sigma=n, edges=edges)


def _star_graph(n):
    edges = np.array([[0, i] for i in range(1, n)], dtype=np.int64)
    return StaticGraph(sigma=n, edges=edges)


def _cycle_graph(n):
    edges = np.array([[i, (i + 1) % n] for i in range(n)], dtype=np.int64)
    return StaticGraph(sigma=n, edges=edges)


# --- histograms ---------------------------------------------------------------

def test_histogram_single_vertex_run():
    state = run(_params(n=1, m=3)).state
    hist = degree_histogram(state)
    assert hist.as_dict() == {6: 1}


def test_histogram_conservation():
    p = _params(n=500, m=3, delta=0.5, seed=4)
    hist = degree_histogram(run(p).state)
    hist.validate(p.m)
    assert int(hist.counts.sum()) == 500
    assert int((hist.k * hist.counts).sum()) == 2 * 3 * 500


# --- tail fits ------------------------------------------------------------------

def _zipf_sample(rng, tau, k_min, size, k_cap=1_000_000):
    ks = np.arange(k_min, k_cap + 1, dtype=float)
    pmf = ks ** (-tau)
    pmf /= pmf.sum()
    return rng.choice(ks.astype(np.int64), size=size, p=pmf)


def test_mle_recovers_zipf_exponent():
    draws = _zipf_sample(_rng(11), 4.0, 20, 100_000)
    ks, counts = np.unique(draws, return_counts=True)
    hist = DegreeHistogram(sigma=draws.size, k=ks, counts=counts)
    fit = tail_exponent_fit(hist, k_min=20)
    assert fit.mle_exponent == pytest.approx(4.0, abs=0.15)
    assert fit.mle_stderr < 0.05
    assert fit.plausible
    assert fit.ls_exponent == pytest.approx(4.0, abs=0.3)


def test_geometric_tail_is_flagged():
    rng = _rng(12)
    draws = 20 + rng.geometric(0.25, size=100_000)
    ks, counts = np.unique(draws, return_counts=True)
    hist = DegreeHistogram(sigma=draws.size, k=ks, counts=counts)
    fit = tail_exponent_fit(hist, k_min=20)
    assert fit.gof_pvalue < 1e-3
    assert not fit.plausible


def test_fit_on_exact_theory_table():
    dist = limit_degree_distribution(2, 3.0, 0.0, k_max=100_000)
    hist = DegreeHistogram(sigma=1, k=dist.k, counts=dist.p * 1e9)
    fit = tail_exponent_fit(hist, k_min=1000)
    assert fit.mle_exponent == pytest.approx(4.0, abs=0.01)
    # the CCDF regression carries a truncation bias at the table cut
    assert fit.ls_exponent == pytest.approx(4.0, abs=0.5)


def test_fit_requires_enough_tail():
    hist = DegreeHistogram(sigma=10, k=np.array([25, 30]),
                           counts=np.array([3, 2]))
    with pytest.raises(ValueError, match="insufficient tail"):
        tail_exponent_fit(hist, k_min=20)


# --- components ------------------------------------------------------------------

def test_components_all_selfloops():
    edges = np.array([[i, i] for i in range(7)], dtype=np.int64)
    sizes = connected_components(StaticGraph(sigma=7, edges=edges))
    assert list(sizes) == [1] * 7


def test_components_parid_graph_connected():
    p = _params(n=400, m=2, alpha=2.0, delta=0.0, seed=6)
    sizes = connected_components(run(p).state)
    assert list(sizes) == [400]


def test_components_single_vertex():
    assert list(connected_components(run(_params(n=1)).state)) == [1]


def test_components_sum_to_n():
    p = _params(n=300, m=2, alpha=4.0, kernel=RangeIndicatorKernel(0.15), seed=8)
    sizes = connected_components(run(p).state)
    assert sizes.sum() == 300
    assert np.all(np.diff(sizes) <= 0)


# --- diameter ---------------------------------------------------------------------

def test_diameter_path_and_star_and_cycle():
    assert diameter(_path_graph(5), "exact").value == 4
    assert diameter(_path_graph(5), "ifub").value == 4
    assert diameter(_star_graph(9), "exact").value == 2
    assert diameter(_star_graph(9), "ifub").value == 2
    assert diameter(_cycle_graph(12), "exact").value == 6
    assert diameter(_cycle_graph(12), "ifub").value == 6


def test_diameter_ifub_matches_exact_on_random_graphs():
    rng = _rng(13)
    for trial in range(50):
        n = int(rng.integers(5, 60))
        n_edges = int(rng.integers(n - 1, 3 * n))
        edges = rng.integers(0, n, size=(n_edges, 2)).astype(np.int64)
        g = StaticGraph(sigma=n, edges=edges)
        exact = diameter(g, "exact")
        ifub = diameter(g, "ifub")
        assert ifub.value == exact.value, f"trial {trial}"
        assert ifub.connected == exact.connected


def test_diameter_sampled_is_lower_bound():
    rng = _rng(14)
    for _ in range(10):
        n = int(rng.integers(10, 80))
        edges = rng.integers(0, n, size=(2 * n, 2)).astype(np.int64)
        g = StaticGraph(sigma=n, edges=edges)
        exact = diameter(g, "exact")
        samp = diameter(g, "sampled", rng=_rng(int(rng.integers(0, 2**32))))
        assert samp.is_lower_bound
        assert samp.value <= exact.value


def test_diameter_disconnected_uses_largest_component():
    edges = np.array([[0, 1], [1, 2], [3, 4]], dtype=np.int64)
    res = diameter(StaticGraph(sigma=5, edges=edges), "exact")
    assert not res.connected
    assert res.component_size == 3
    assert res.value == 2


def test_diameter_method_validation():
    with pytest.raises(ValueError):
        diameter(_path_graph(4), "bfs")
    big = StaticGraph(sigma=30_000, edges=np.array([[0, 1]], dtype=np.int64))
    with pytest.raises(ValueError):
        diameter(big, "exact")


def test_diameter_single_vertex():
    g = StaticGraph(sigma=1, edges=np.empty((0, 2), dtype=np.int64))
    assert diameter(g, "ifub").value == 0


# --- ensemble vs theory -------------------------------------------------------------

def test_compare_identical_replicas_have_zero_stderr():
    p = _params(n=200, seed=3)
    hist = degree_histogram(run(p).state)
    dist = limit_degree_distribution(2, 3.0, 0.0, k_max=1000)
    rows = compare_empirical_theory([hist, hist, hist], dist.k, dist.p,
                                    k_range=(2, 10))
    assert all(r.stderr == 0.0 for r in rows)
    assert all(np.isinf(r.z) or r.z == 0.0 for r in rows)


def test_compare_requires_two_replicas():
    p = _params(n=100, seed=3)
    hist = degree_histogram(run(p).state)
    with pytest.raises(ValueError):
        compare_empirical_theory([hist], np.array([2]), np.array([0.5]))


def test_compare_small_ensemble_z_scores():
    p = _params(n=3000, m=2, alpha=3.0, delta=0.0, seed=10)
    hists = [degree_histogram(run(p.with_seed(replica_seed(10, r))).state)
             for r in range(8)]
    dist = limit_degree_distribution(2, 3.0, 0.0, k_max=10_000)
    rows = compare_empirical_theory(hists, dist.k, dist.p, k_range=(2, 8))
    assert len(rows) == 7
    # z-scores should look standardized for a correct simulator
    assert np.median([abs(r.z) for r in rows]) < 4.0


def test_empirical_attraction_concentration():
    # At most 5% of replicas may leave the deviation band at sigma = n.
    kernel = RangeIndicatorKernel(0.3)
    p = _params(n=1000, m=2, alpha=3.0, delta=1.0, kernel=kernel, seed=21)
    band = concentration_band(p, p.n)
    expected = p.attraction_integral() * (2 * p.m + p.delta) * p.n
    rng = _rng(500)
    outside = 0
    reps = 60
    for r in range(reps):
        state = run(p.with_seed(replica_seed(p.seed, r))).state
        t = total_attraction(state, sphere.sample_uniform(rng), kernel, p.delta)
        if abs(t - expected) > band:
            outside += 1
    assert outside / reps <= 0.05
