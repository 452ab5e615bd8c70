"""Two-urn coupling of a perturbed pair of growth processes.

Two processes share their history up to time tau - 1, place vertex tau
at independent positions, and share every arrival position afterwards.
From then on each step draws the m endpoints of both graphs jointly
through a pair of urns built from the current states:

* one white ball per edge whose head is not tau, weighted by the
  head's attraction to the arrival point;
* one red ball per vertex other than tau, weight (m + delta) times its
  attraction;
* a purple ball (first urn) and an orange ball (second urn) for vertex
  tau, carrying that graph's degree of tau and tau's own position;
* a green ball in both urns with the slack weight
  (alpha*Theta*I*sigma - T_hat)^+ and a blue ball only in the first
  urn making up the difference of the two slacks.

With the urns labeled so the first one is the lighter (T <= T_hat), a
ball b is drawn weight-proportionally from the first urn; if it lies in
the common part C it is kept for the second urn with probability
|U| / |U_hat|, otherwise (and whenever b lies in R = U minus U_hat) the
second ball is drawn weight-proportionally from L = U_hat minus U. A
draw is a mismatch unless a common ball was kept. Both marginals equal
the single-urn weight-proportional laws, so each graph alone evolves
exactly as an unperturbed process.

Balls are compared as (color, number) multisets. The aggregated
representation used by the step engine groups white balls by their
number; copies of equal number carry equal weight, so the grouped draw
is distribution-identical to drawing individual balls.
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass

import numpy as np

from . import sphere
from .kernels import ConstantKernel
from .process import (
    GraphState,
    ProcessParams,
    _attraction_weights,
    _draw_endpoints_exact,
    _StepWorkspace as _process_ws,
    grow_one_step,
    replica_seed,
)

__all__ = [
    "Ball",
    "UrnPair",
    "CoupledRun",
    "build_urns",
    "joint_draw",
    "run_coupled",
    "MismatchFit",
    "mismatch_growth_fit",
]

COLORS = ("white", "red", "purple", "orange", "green", "blue")


@dataclass(frozen=True)
class Ball:
    """A weighted, numbered, colored ball; the number names a vertex
    (0-based) or, for green and blue, the arriving vertex sigma."""

    color: str
    number: int
    weight: float

    @property
    def key(self) -> tuple[str, int]:
        return (self.color, self.number)


class UrnPair:
    """Materialized urns for one coupled step, labeled so that
    total weight of ``u`` <= total weight of ``u_hat``.

    The partition (common / only_u / only_hat) is by (color, number)
    multiset; ``weight_of`` maps a key to its per-ball weight, which is
    identical in both urns for shared keys.
    """

    def __init__(self, u_balls: list[Ball], hat_balls: list[Ball]):
        self.u_balls = list(u_balls)
        self.hat_balls = list(hat_balls)
        cu = Counter(b.key for b in self.u_balls)
        ch = Counter(b.key for b in self.hat_balls)
        self.common = Counter({k: min(c, ch.get(k, 0)) for k, c in cu.items()
                               if min(c, ch.get(k, 0)) > 0})
        self.only_u = cu - ch
        self.only_hat = ch - cu
        self.weight_of: dict[tuple[str, int], float] = {}
        for b in self.u_balls + self.hat_balls:
            prev = self.weight_of.setdefault(b.key, b.weight)
            if not math.isclose(prev, b.weight, rel_tol=1e-12, abs_tol=1e-300):
                raise ValueError(f"inconsistent weights for ball {b.key}")
        self.total_u = sum(b.weight for b in self.u_balls)
        self.total_hat = sum(b.weight for b in self.hat_balls)
        if self.total_u > self.total_hat * (1.0 + 1e-12):
            raise ValueError("urns must be labeled with total_u <= total_hat")
        self._u_cum = np.cumsum([b.weight for b in self.u_balls])
        self._l_keys = sorted(self.only_hat.keys())
        self._l_weights = np.array(
            [self.weight_of[k] * self.only_hat[k] for k in self._l_keys])
        self._l_cum = np.cumsum(self._l_weights) if self._l_keys else np.empty(0)

    def multiset_weight(self, counter: Counter) -> float:
        return sum(self.weight_of[k] * c for k, c in counter.items())

    @property
    def total_common(self) -> float:
        return self.multiset_weight(self.common)

    @property
    def total_only_u(self) -> float:
        return self.multiset_weight(self.only_u)

    @property
    def total_only_hat(self) -> float:
        return self.multiset_weight(self.only_hat)


def build_urns(state: GraphState, state_hat: GraphState, x_next: np.ndarray,
               tau: int, params: ProcessParams) -> UrnPair:
    """Materialize the urn pair for states that share everything but the
    history from time tau on (tau is 1-based; positions after tau agree).

    The caller must pass the lighter process first: the total attraction
    of ``state`` at x_next may not exceed that of ``state_hat``. Balls
    of weight zero never influence a draw and are omitted.

    Fully identical states degenerate to the diagonal coupling: the
    distinguished vertex only exists to track a perturbation, so without
    one it is emitted as ordinary white and red balls (same total
    weight) and every draw matches.
    """
    if state.sigma != state_hat.sigma:
        raise ValueError("coupled states must have equal vertex counts")
    sigma = state.sigma
    t_idx = tau - 1
    if not 0 <= t_idx < sigma:
        raise ValueError("tau must name an existing vertex")
    same = np.ones(sigma, dtype=bool)
    same[t_idx] = False
    if not np.array_equal(state.positions[same], state_hat.positions[same]):
        raise ValueError("states must share positions away from tau")
    identical = (np.array_equal(state.positions, state_hat.positions)
                 and np.array_equal(state.edges, state_hat.edges))

    w, T = _attraction_weights(state, x_next, params.kernel, params.delta)
    w_hat, T_hat = _attraction_weights(state_hat, x_next, params.kernel,
                                       params.delta)
    if T > T_hat + 1e-12 * max(1.0, T_hat):
        raise ValueError("label the lighter process first (swap the states)")

    kernel = params.kernel
    a_vals = np.asarray(
        kernel.values_from_cosines(state.positions @ x_next), dtype=float)
    a_tau_hat = kernel.value_from_cosine(float(state_hat.positions[t_idx] @ x_next))

    slack = params.alpha * params.theta * params.attraction_integral() * sigma
    green = max(0.0, slack - T_hat)
    blue = max(0.0, max(0.0, slack - T) - green)

    def white_and_red(st: GraphState, avals, skip_tau: bool) -> list[Ball]:
        balls = []
        heads = st.edges[:, 1]
        for h in heads:
            h = int(h)
            if skip_tau and h == t_idx:
                continue
            wgt = float(avals[h])
            if wgt > 0.0:
                balls.append(Ball("white", h, wgt))
        for v in range(sigma):
            if skip_tau and v == t_idx:
                continue
            wgt = (params.m + params.delta) * float(avals[v])
            if wgt > 0.0:
                balls.append(Ball("red", v, wgt))
        return balls

    u_balls = white_and_red(state, a_vals, skip_tau=not identical)
    if not identical:
        purple = (float(state.degree[t_idx]) + params.delta) * float(a_vals[t_idx])
        if purple > 0.0:
            u_balls.append(Ball("purple", t_idx, purple))
    if green > 0.0:
        u_balls.append(Ball("green", sigma, green))
    if blue > 0.0:
        u_balls.append(Ball("blue", sigma, blue))

    hat_balls = white_and_red(state_hat, a_vals, skip_tau=not identical)
    if not identical:
        orange = (float(state_hat.degree[t_idx]) + params.delta) * a_tau_hat
        if orange > 0.0:
            hat_balls.append(Ball("orange", t_idx, orange))
    if green > 0.0:
        hat_balls.append(Ball("green", sigma, green))

    return UrnPair(u_balls, hat_balls)


def joint_draw(pair: UrnPair, rng: np.random.Generator) -> tuple[Ball, Ball]:
    """One coupled draw: a ball from each urn with the exact marginals.

    The returned balls are the *same object* exactly when the draw
    matched (a common ball kept for both urns). A redistributed second
    ball can coincide in color and number with the first by chance;
    such a draw still counts as a mismatch.
    """
    r = rng.random() * pair.total_u
    i = min(int(np.searchsorted(pair._u_cum, r, side="right")),
            len(pair.u_balls) - 1)
    b = pair.u_balls[i]
    n_common = pair.common.get(b.key, 0)
    n_total = n_common + pair.only_u.get(b.key, 0)
    in_common = n_common > 0 and (n_common == n_total
                                  or rng.random() * n_total < n_common)
    if in_common and rng.random() < pair.total_u / pair.total_hat:
        return b, b
    if not pair._l_keys:
        raise AssertionError(
            "redistribution with an empty difference set is impossible "
            "when the weight identities hold")
    rl = rng.random() * pair._l_cum[-1]
    j = min(int(np.searchsorted(pair._l_cum, rl, side="right")),
            len(pair._l_keys) - 1)
    color, number = pair._l_keys[j]
    return b, Ball(color, number, pair.weight_of[(color, number)])


@dataclass
class CoupledRun:
    """Mismatch trajectory of one coupled pair.

    ``mismatches[i]`` is the running mismatch count after completing
    step ``sigma[i]``; sigma runs from tau to n.
    """

    tau: int
    sigma: np.ndarray
    mismatches: np.ndarray

    def final(self) -> int:
        return int(self.mismatches[-1])


def _coupled_step(g: GraphState, g_hat: GraphState, x: np.ndarray, t_idx: int,
                  params: ProcessParams, athetai: float,
                  rng: np.random.Generator,
                  ws=None) -> tuple[np.ndarray, np.ndarray, int]:
    """One jointly-drawn growth step; returns (heads for g, heads for
    g_hat, mismatch count). Aggregates balls by (color, number).

    The pair is relabeled every step so the lighter urn is drawn from
    first (ties keep the current labels); the returned head arrays are
    mapped back to the fixed (g, g_hat) order. The difference set L is
    only materialized when a draw actually redistributes (most steps
    keep every draw, and L costs a full pass over the vertices).
    """
    sigma = g.sigma
    m, delta = params.m, params.delta
    kernel = params.kernel
    deg_g = g.degree
    deg_h = g_hat.degree

    if isinstance(kernel, ConstantKernel):
        # Degree sums are conserved, so both totals equal (2m+delta)*sigma
        # and the pair never needs relabeling.
        a_vals = None
        a_tau_hi = 1.0
        swap = False
        deg_lo, deg_hi = deg_g, deg_h
        if ws is None:
            w_lo = deg_g + delta
            cum_lo = np.cumsum(w_lo)
        else:
            w_lo = ws.w[:sigma]
            np.add(deg_g, delta, out=w_lo)
            cum_lo = ws.cum[:sigma]
            np.cumsum(w_lo, out=cum_lo)
        T_lo = T_hi = float(cum_lo[-1])
    else:
        a_vals = np.asarray(
            kernel.values_from_cosines(g.positions @ x), dtype=float)
        a_tau_g = float(a_vals[t_idx])
        a_tau_h = kernel.value_from_cosine(float(g_hat.positions[t_idx] @ x))
        w_g = (deg_g + delta) * a_vals
        w_h = (deg_h + delta) * a_vals
        w_h[t_idx] = (deg_h[t_idx] + delta) * a_tau_h
        T_g = float(w_g.sum())
        T_h = float(w_h.sum())
        swap = T_g > T_h
        if swap:
            w_lo, deg_lo, deg_hi = w_h, deg_h, deg_g
            T_lo, T_hi = T_h, T_g
            a_tau_hi = a_tau_g
        else:
            w_lo, deg_lo, deg_hi = w_g, deg_g, deg_h
            T_lo, T_hi = T_g, T_h
            a_tau_hi = a_tau_h
        cum_lo = np.cumsum(w_lo)
        T_lo = float(cum_lo[-1])

    slack = athetai * sigma
    green = max(0.0, slack - T_hi)
    blue = max(0.0, slack - T_lo) - green  # nonnegative since T_lo <= T_hi
    M_lo = max(T_lo, slack)
    M_hi = max(T_hi, slack)

    r = rng.random(m) * M_lo
    lo_heads = np.full(m, sigma, dtype=np.int64)
    old = r < T_lo
    if old.any():
        lo_heads[old] = np.minimum(
            np.searchsorted(cum_lo, r[old], side="right"), sigma - 1)

    # Chance that the drawn ball lies in the common part, given its
    # number v: the white/red split leaves (min(deg_lo, deg_hi)(v) +
    # delta) / (deg_lo(v) + delta) of the mass common (attractions
    # cancel); purple is never common, the arriving vertex splits
    # green : blue.
    p_common = np.empty(m)
    for i in range(m):
        v = int(lo_heads[i])
        if v == sigma:
            gb = green + blue
            p_common[i] = green / gb if gb > 0.0 else 0.0
        elif v == t_idx:
            p_common[i] = 0.0
        else:
            dl = deg_lo[v]
            dh = deg_hi[v]
            p_common[i] = ((dl if dl <= dh else dh) + delta) / (dl + delta)

    in_common = rng.random(m) < p_common
    keep = in_common & (rng.random(m) * M_hi < M_lo)
    hi_heads = np.empty(m, dtype=np.int64)
    hi_heads[keep] = lo_heads[keep]
    redistribute = np.nonzero(~keep)[0]
    if redistribute.size:
        l_vec = np.maximum(deg_hi - deg_lo, 0.0)
        if a_vals is not None:
            l_vec *= a_vals
        l_vec[t_idx] = (float(deg_hi[t_idx]) + delta) * a_tau_hi  # orange
        l_cum = np.cumsum(l_vec)
        if not l_cum[-1] > 0.0:
            raise AssertionError("nonzero redistribution mass with empty L")
        rl = rng.random(redistribute.size) * l_cum[-1]
        hi_heads[redistribute] = np.minimum(
            np.searchsorted(l_cum, rl, side="right"), sigma - 1)
    mismatches = int(redistribute.size)

    if swap:
        return hi_heads, lo_heads, mismatches
    return lo_heads, hi_heads, mismatches


def run_coupled(params: ProcessParams, tau: int) -> CoupledRun:
    """Grow a coupled pair perturbed at time tau; deterministic in the seed.

    History is shared up to tau - 1; at tau both graphs apply the growth
    rule independently (positions included); afterwards arrivals share
    positions and endpoints are drawn jointly through the urns. The
    trajectory records the running mismatch count after each step.
    """
    if not 1 <= tau <= params.n:
        raise ValueError("tau must lie in [1, n]")
    rng = np.random.Generator(np.random.Philox(key=params.seed % (1 << 64)))
    athetai = params.alpha * params.theta * params.attraction_integral()

    g = GraphState(params.m, params.n)
    ws = _process_ws(params.n)
    for _ in range(tau - 1):
        grow_one_step(g, params, rng, _ws=ws)
    g_hat = g.copy()

    counts = np.zeros(params.n - tau + 1, dtype=np.int64)
    # Step tau: independent applications of the growth rule.
    x = sphere.sample_uniform(rng)
    x_hat = sphere.sample_uniform(rng)
    if g.sigma == 0:
        heads_g = np.zeros(params.m, dtype=np.int64)
        heads_h = np.zeros(params.m, dtype=np.int64)
    else:
        heads_g = _draw_endpoints_exact(g, x, params, athetai, rng, ws)
        heads_h = _draw_endpoints_exact(g_hat, x_hat, params, athetai, rng, ws)
    g.append_step(x, heads_g)
    g_hat.append_step(x_hat, heads_h)
    counts[0] = int((heads_g != heads_h).sum())

    t_idx = tau - 1
    for t in range(tau + 1, params.n + 1):
        x = sphere.sample_uniform(rng)
        heads_g, heads_h, miss = _coupled_step(g, g_hat, x, t_idx, params,
                                               athetai, rng, ws)
        g.append_step(x, heads_g)
        g_hat.append_step(x, heads_h)
        counts[t - tau] = counts[t - tau - 1] + miss

    return CoupledRun(tau=tau, sigma=np.arange(tau, params.n + 1),
                      mismatches=counts)


@dataclass(frozen=True)
class MismatchFit:
    """Power-law fit of the ensemble-mean mismatch growth."""

    slope: float
    stderr: float
    ci95: tuple[float, float]
    n_points: int


def mismatch_growth_fit(runs, params: ProcessParams, *,
                        min_replicas: int = 20, fit_from: float = 5.0,
                        n_points: int = 40) -> MismatchFit:
    """Fitted growth exponent of the mean mismatch count.

    Regresses log(mean mismatches at sigma) - log(log(sigma)) on
    log(sigma / tau) over a log-spaced grid from fit_from * tau to n.
    Requires at least ``min_replicas`` runs with a common tau and at
    least one decade of sigma range above tau.
    """
    runs = list(runs)
    if len(runs) < min_replicas:
        raise ValueError(f"need at least {min_replicas} replicas, got {len(runs)}")
    tau = runs[0].tau
    if any(r.tau != tau for r in runs):
        raise ValueError("all runs must share the same tau")
    n = int(runs[0].sigma[-1])
    if n < 10 * tau:
        raise ValueError(
            f"insufficient range: n/tau = {n / tau:.2f}, need at least a decade")
    grid = np.unique(np.round(np.geomspace(max(fit_from * tau, tau + 1), n,
                                           n_points)).astype(int))
    mean = np.zeros(grid.size)
    for r in runs:
        mean += r.mismatches[grid - tau]
    mean /= len(runs)
    ok = mean > 0
    grid, mean = grid[ok], mean[ok]
    if grid.size < 5:
        raise ValueError("too few usable grid points with positive mean")
    x = np.log(grid / tau)
    y = np.log(mean) - np.log(np.log(grid))
    slope, intercept = np.polyfit(x, y, 1)
    resid = y - (slope * x + intercept)
    sxx = float(((x - x.mean()) ** 2).sum())
    stderr = math.sqrt(float((resid**2).sum()) / max(x.size - 2, 1) / sxx)
    return MismatchFit(slope=float(slope), stderr=stderr,
                       ci95=(float(slope - 1.96 * stderr),
                             float(slope + 1.96 * stderr)),
                       n_points=int(grid.size))
