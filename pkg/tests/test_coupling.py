import warnings
from collections import Counter

import numpy as np
import pytest

from gpaf import sphere
from gpaf.coupling import (
    Ball,
    CoupledRun,
    UrnPair,
    _coupled_step,
    build_urns,
    joint_draw,
    mismatch_growth_fit,
    run_coupled,
)
from gpaf.kernels import ConstantKernel, PowerLawKernel, RangeIndicatorKernel
from gpaf.process import (
    GraphState,
    ProcessParams,
    _draw_endpoints_exact,
    attachment_distribution,
    grow_one_step,
    replica_seed,
    run,
    total_attraction,
)


def _rng(seed=0):
    return np.random.Generator(np.random.Philox(key=seed))


def _params(**kw):
    base = dict(n=40, m=2, alpha=3.0, delta=0.0, kernel=ConstantKernel(), seed=0)
    base.update(kw)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        return ProcessParams(**base)


def perturbed_pair(params, tau, extra_steps, seed=1):
    """Grow a pair sharing history before tau and positions after tau,
    evolving endpoints independently afterwards."""
    rng = _rng(seed)
    athetai = params.alpha * params.theta * params.attraction_integral()
    g = GraphState(params.m, params.n)
    for _ in range(tau - 1):
        grow_one_step(g, params, rng)
    h = g.copy()
    x, xh = sphere.sample_uniform(rng), sphere.sample_uniform(rng)
    if g.sigma == 0:
        g.append_step(x, np.zeros(params.m, dtype=np.int64))
        h.append_step(xh, np.zeros(params.m, dtype=np.int64))
    else:
        g.append_step(x, _draw_endpoints_exact(g, x, params, athetai, rng))
        h.append_step(xh, _draw_endpoints_exact(h, xh, params, athetai, rng))
    for _ in range(extra_steps):
        x = sphere.sample_uniform(rng)
        hg = _draw_endpoints_exact(g, x, params, athetai, rng)
        hh = _draw_endpoints_exact(h, x, params, athetai, rng)
        g.append_step(x, hg)
        h.append_step(x, hh)
    return g, h


def ordered_pair(g, h, x_next, params):
    tg = total_attraction(g, x_next, params.kernel, params.delta)
    th = total_attraction(h, x_next, params.kernel, params.delta)
    return (g, h) if tg <= th else (h, g)


# --- enumeration oracle ----------------------------------------------------------

def enumerate_joint(pair: UrnPair):
    """Joint law computed directly from the coupling's definition,
    independent of joint_draw: P(first ball key, second ball key, matched)."""
    law = {}
    ratio = pair.total_u / pair.total_hat
    l_total = pair.total_only_hat
    for b in pair.u_balls:
        p_draw = b.weight / pair.total_u
        c = pair.common.get(b.key, 0)
        tot = c + pair.only_u.get(b.key, 0)
        p_common = c / tot if tot else 0.0
        p_match = p_common * ratio
        if p_match > 0:
            key = (b.key, b.key, True)
            law[key] = law.get(key, 0.0) + p_draw * p_match
        p_redis = 1.0 - p_match
        if p_redis > 0 and l_total > 0:
            for lkey, count in pair.only_hat.items():
                pl = count * pair.weight_of[lkey] / l_total
                key = (b.key, lkey, False)
                law[key] = law.get(key, 0.0) + p_draw * p_redis * pl
    return law


def hand_built_pair():
    u = [
        Ball("white", 1, 0.5), Ball("white", 1, 0.5),
        Ball("red", 2, 1.0),
        Ball("purple", 3, 0.7),
        Ball("green", 5, 0.4),
        Ball("blue", 5, 0.3),
    ]
    hat = [
        Ball("white", 1, 0.5), Ball("white", 1, 0.5), Ball("white", 1, 0.5),
        Ball("red", 2, 1.0),
        Ball("orange", 3, 1.2),
        Ball("green", 5, 0.4),
    ]
    return UrnPair(u, hat)


def test_hand_built_partition_and_identities():
    pair = hand_built_pair()
    assert pair.total_u == pytest.approx(3.4)
    assert pair.total_hat == pytest.approx(4.1)
    assert pair.common == Counter({("white", 1): 2, ("red", 2): 1,
                                   ("green", 5): 1})
    assert pair.only_u == Counter({("purple", 3): 1, ("blue", 5): 1})
    assert pair.only_hat == Counter({("white", 1): 1, ("orange", 3): 1})
    assert pair.total_common + pair.total_only_u == pytest.approx(pair.total_u)
    assert pair.total_common + pair.total_only_hat == pytest.approx(pair.total_hat)


def test_enumerated_marginals_are_exact():
    pair = hand_built_pair()
    law = enumerate_joint(pair)
    assert sum(law.values()) == pytest.approx(1.0, abs=1e-12)

    first = {}
    second = {}
    match_mass = 0.0
    for (kb, kh, matched), p in law.items():
        first[kb] = first.get(kb, 0.0) + p
        second[kh] = second.get(kh, 0.0) + p
        if matched:
            match_mass += p
    cu = Counter(b.key for b in pair.u_balls)
    for key, count in cu.items():
        expected = count * pair.weight_of[key] / pair.total_u
        assert first[key] == pytest.approx(expected, abs=1e-12)
    ch = Counter(b.key for b in pair.hat_balls)
    for key, count in ch.items():
        expected = count * pair.weight_of[key] / pair.total_hat
        assert second[key] == pytest.approx(expected, abs=1e-12)
    # mismatch probability is exactly |L| / |U_hat|
    assert 1.0 - match_mass == pytest.approx(
        pair.total_only_hat / pair.total_hat, abs=1e-12)


def test_joint_draw_sampling_matches_enumeration():
    pair = hand_built_pair()
    law = enumerate_joint(pair)
    rng = _rng(3)
    n = 200_000
    counts = Counter()
    mismatches = 0
    for _ in range(n):
        b, bh = joint_draw(pair, rng)
        matched = b is bh
        counts[(b.key, bh.key, matched)] += 1
        mismatches += not matched
    for key, p in law.items():
        freq = counts[key] / n
        se = np.sqrt(p * (1 - p) / n)
        assert abs(freq - p) <= 4 * se + 1e-9, key
    p_mis = pair.total_only_hat / pair.total_hat
    se = np.sqrt(p_mis * (1 - p_mis) / n)
    assert abs(mismatches / n - p_mis) <= 4 * se


def test_redistribution_can_repeat_key_but_counts_as_mismatch():
    pair = hand_built_pair()
    law = enumerate_joint(pair)
    # drawing a common white #1 and redistributing onto the extra white #1
    # copy is possible and is a mismatch
    assert law[(("white", 1), ("white", 1), False)] > 0
    assert law[(("white", 1), ("white", 1), True)] > 0


# --- build_urns -------------------------------------------------------------------

@pytest.mark.parametrize("kernel", [
    ConstantKernel(),
    RangeIndicatorKernel(1.0),
    PowerLawKernel(1.0, 0.25, 1000),
], ids=repr)
def test_build_urns_identities(kernel):
    params = _params(n=40, m=2, alpha=3.0, delta=0.5, kernel=kernel)
    tau = 4
    g, h = perturbed_pair(params, tau, extra_steps=20, seed=9)
    rng = _rng(33)
    for trial in range(5):
        x = sphere.sample_uniform(rng)
        lo, hi = ordered_pair(g, h, x, params)
        pair = build_urns(lo, hi, x, tau, params)
        t_lo = total_attraction(lo, x, params.kernel, params.delta)
        slack = params.alpha * params.theta * params.attraction_integral() * lo.sigma
        # Remark-3 identity: the urn weight is the normalizer
        assert pair.total_u == pytest.approx(max(t_lo, slack), rel=1e-9)
        assert pair.total_common + pair.total_only_u == pytest.approx(
            pair.total_u, rel=1e-12)
        assert pair.total_common + pair.total_only_hat == pytest.approx(
            pair.total_hat, rel=1e-12)
        assert {c for c, _ in pair.only_hat} <= {"white", "orange"}
        assert {c for c, _ in pair.only_u} <= {"white", "purple", "blue"}
        assert {c for c, _ in pair.common} <= {"white", "red", "green"}


def test_build_urns_identical_states_are_degenerate():
    params = _params(n=30, m=2, alpha=3.0)
    state = run(params).state
    twin = state.copy()
    x = sphere.sample_uniform(_rng(5))
    pair = build_urns(state, twin, x, tau=7, params=params)
    assert not pair.only_u
    assert not pair.only_hat
    rng = _rng(6)
    for _ in range(200):
        b, bh = joint_draw(pair, rng)
        assert b is bh


def test_build_urns_green_blue_absent_for_parid():
    params = _params(n=30, m=2, alpha=2.0, delta=0.0)
    tau = 3
    g, h = perturbed_pair(params, tau, extra_steps=10, seed=2)
    x = sphere.sample_uniform(_rng(7))
    lo, hi = ordered_pair(g, h, x, params)
    pair = build_urns(lo, hi, x, tau, params)
    colors = {b.color for b in pair.u_balls} | {b.color for b in pair.hat_balls}
    assert "green" not in colors and "blue" not in colors


def test_build_urns_rejects_wrong_labeling():
    params = _params(n=30, m=2, alpha=3.0, kernel=RangeIndicatorKernel(1.0))
    tau = 3
    g, h = perturbed_pair(params, tau, extra_steps=15, seed=21)
    rng = _rng(8)
    for _ in range(40):
        x = sphere.sample_uniform(rng)
        tg = total_attraction(g, x, params.kernel, params.delta)
        th = total_attraction(h, x, params.kernel, params.delta)
        if abs(tg - th) > 1e-9:
            lo, hi = (g, h) if tg <= th else (h, g)
            with pytest.raises(ValueError, match="lighter"):
                build_urns(hi, lo, x, tau, params)
            return
    pytest.skip("no unbalanced arrival point found")


# --- aggregated step vs materialized urns -------------------------------------------

def test_coupled_step_matches_urn_law():
    params = _params(n=30, m=2, alpha=3.0, delta=0.5,
                     kernel=RangeIndicatorKernel(1.2))
    tau = 3
    g, h = perturbed_pair(params, tau, extra_steps=12, seed=14)
    x = sphere.sample_uniform(_rng(15))
    athetai = params.alpha * params.theta * params.attraction_integral()

    lo, hi = ordered_pair(g, h, x, params)
    pair = build_urns(lo, hi, x, tau, params)
    p_mis = pair.total_only_hat / pair.total_hat
    lo_dist = attachment_distribution(lo, x, params)
    hi_dist = attachment_distribution(hi, x, params)
    swapped = lo is not g

    rng = _rng(16)
    n_trials = 30_000
    sigma = g.sigma
    lo_counts = np.zeros(sigma + 1)
    hi_counts = np.zeros(sigma + 1)
    mism = 0
    for _ in range(n_trials):
        heads_g, heads_h, miss = _coupled_step(g, h, x, tau - 1, params,
                                               athetai, rng)
        mism += miss
        lo_heads = heads_h if swapped else heads_g
        hi_heads = heads_g if swapped else heads_h
        lo_counts[lo_heads[0]] += 1
        hi_counts[hi_heads[0]] += 1

    draws = n_trials
    for counts, dist in ((lo_counts, lo_dist), (hi_counts, hi_dist)):
        freqs = counts / draws
        se = np.sqrt(dist * (1 - dist) / draws)
        live = dist > 0
        assert np.all(np.abs(freqs[live] - dist[live]) <= 4 * se[live] + 1e-9)
    total_draws = n_trials * params.m
    se = np.sqrt(p_mis * (1 - p_mis) / total_draws)
    assert abs(mism / total_draws - p_mis) <= 4 * se


# --- coupled runs -------------------------------------------------------------------

def test_run_coupled_final_step_only():
    params = _params(n=25, m=3, alpha=3.0, seed=11)
    cr = run_coupled(params, tau=25)
    assert cr.sigma[0] == 25 and cr.sigma[-1] == 25
    assert 0 <= cr.final() <= 3


def test_run_coupled_trajectory_invariants():
    params = _params(n=60, m=2, alpha=3.0, kernel=RangeIndicatorKernel(1.0),
                     seed=12)
    cr = run_coupled(params, tau=5)
    assert cr.sigma[0] == 5 and cr.sigma[-1] == 60
    assert np.all(np.diff(cr.mismatches) >= 0)
    bound = params.m * (cr.sigma - 5 + 1)
    assert np.all(cr.mismatches <= bound)


def test_run_coupled_deterministic():
    params = _params(n=50, m=2, alpha=4.0, seed=13)
    a = run_coupled(params, tau=7)
    b = run_coupled(params, tau=7)
    assert np.array_equal(a.mismatches, b.mismatches)


def test_run_coupled_tau_validation():
    params = _params(n=20)
    with pytest.raises(ValueError):
        run_coupled(params, 0)
    with pytest.raises(ValueError):
        run_coupled(params, 21)


def test_mismatch_growth_fit_guards():
    params = _params(n=500, m=2, alpha=4.0, seed=1)
    runs = [run_coupled(params.with_seed(replica_seed(1, r)), tau=10)
            for r in range(20)]
    fit = mismatch_growth_fit(runs, params)
    assert fit.slope < 1.0
    with pytest.raises(ValueError, match="replicas"):
        mismatch_growth_fit(runs[:5], params)
    short = [run_coupled(params.with_seed(replica_seed(2, r)), tau=250)
             for r in range(20)]
    with pytest.raises(ValueError, match="range"):
        mismatch_growth_fit(short, params)


def test_mismatch_growth_monotone_in_alpha():
    # Lower self-loop bias couples more slowly: the growth exponent at
    # alpha = 3 exceeds the one at alpha = 6 (a = m / (alpha * Theta)).
    n, tau, reps = 4000, 40, 20

    def slope(alpha, seed):
        params = _params(n=n, m=2, alpha=alpha, seed=seed)
        runs = [run_coupled(params.with_seed(replica_seed(seed, r)), tau)
                for r in range(reps)]
        return mismatch_growth_fit(runs, params).slope

    assert slope(3.0, 101) > slope(6.0, 202)
