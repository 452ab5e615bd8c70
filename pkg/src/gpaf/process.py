"""Growth engine for geometric preferential attachment with fitness.

The graph process lives on the unit-area sphere. Vertex sigma+1 arrives
at a uniform position x and emits m directed edges. Each endpoint is an
old vertex v with probability

    (degree(v) + delta) * F(dist(x_v, x)) / M,

where M = max(T, alpha * Theta * I * sigma) normalizes the total
attraction T = sum_v (degree(v) + delta) * F(dist(x_v, x)), and the
leftover mass 1 - T/M goes to a self-loop on the new vertex. Here
Theta = (2m + delta) / 2 and I is the kernel's attractiveness integral.

All m endpoints of one step are drawn with replacement against the
graph as it stood before the step (batch semantics). The first vertex
is a special case: the empty graph offers no endpoints, so its m edges
are all self-loops and it starts with degree 2m.

Vertices are 0-indexed internally; text exports are 1-indexed.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field, replace

import numpy as np

from . import sphere
from .kernels import ConstantKernel, FitnessKernel, kernel_from_json, kernel_to_json
from .weighted_index import WeightedIndex

__all__ = [
    "ProcessParams",
    "GraphState",
    "Snapshot",
    "RunResult",
    "total_attraction",
    "normalizer",
    "attachment_distribution",
    "grow_one_step",
    "run",
    "run_ensemble",
    "replica_seed",
    "FastEndpointSampler",
    "fast_sampler",
    "fast_sampler_law",
    "write_edge_list",
    "write_positions",
    "run_manifest",
]

_MEMORY_LIMIT_BYTES = 4 << 30


@dataclass(frozen=True)
class ProcessParams:
    """Parameters of one growth process.

    n      final vertex count (>= 1)
    m      edges emitted per step (>= 1)
    alpha  self-loop bias (> 0); the degree-sequence predictions assume
           alpha > 2, values in (0, 2] are accepted with a warning
    delta  initial attractiveness added to each degree; must exceed -m
    kernel fitness kernel F on angular distance
    seed   64-bit stream seed; runs are deterministic functions of it
    """

    n: int
    m: int
    alpha: float
    delta: float
    kernel: FitnessKernel
    seed: int = 0

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("n must be >= 1")
        if self.m < 1:
            raise ValueError("m must be >= 1")
        if not self.alpha > 0.0:
            raise ValueError("alpha must be > 0")
        if not self.delta > -self.m:
            raise ValueError("delta must satisfy delta > -m")
        if self.alpha <= 2.0:
            warnings.warn(
                "alpha <= 2: degree-sequence and concentration predictions "
                "assume alpha > 2 (the process itself is well defined)",
                stacklevel=2,
            )

    @property
    def theta(self) -> float:
        """Half the attachment weight added per step: (2m + delta) / 2."""
        return (2.0 * self.m + self.delta) / 2.0

    def attraction_integral(self) -> float:
        return self.kernel.integral()

    def with_seed(self, seed: int) -> "ProcessParams":
        return replace(self, seed=int(seed))


class GraphState:
    """Evolving directed multigraph with positions on the sphere.

    Every vertex has out-degree exactly m (its emitted edges, stored in
    creation order); degree(v) counts m plus every edge head equal to v,
    so a self-loop contributes 2 to its vertex. The degree array is kept
    as float64 (values are exact small integers) so attachment weights
    need no per-step conversion.
    """

    __slots__ = ("m", "_capacity", "sigma", "_positions", "_edges", "_degree")

    def __init__(self, m: int, capacity: int):
        self.m = int(m)
        self._capacity = int(capacity)
        self.sigma = 0
        self._positions = np.empty((capacity, 3))
        self._edges = np.empty((capacity * m, 2), dtype=np.int64)
        self._degree = np.zeros(capacity)

    @property
    def positions(self) -> np.ndarray:
        return self._positions[: self.sigma]

    @property
    def edges(self) -> np.ndarray:
        return self._edges[: self.sigma * self.m]

    @property
    def degree(self) -> np.ndarray:
        return self._degree[: self.sigma]

    def append_step(self, x: np.ndarray, heads: np.ndarray) -> None:
        """Add one vertex at position x with edge heads ``heads`` (len m).

        A head equal to the current sigma is a self-loop on the new
        vertex.
        """
        i = self.sigma
        if i >= self._capacity:
            raise ValueError("graph is at capacity")
        self._positions[i] = x
        m = self.m
        e0 = i * m
        self._edges[e0 : e0 + m, 0] = i
        self._edges[e0 : e0 + m, 1] = heads
        deg = self._degree
        deg[i] = m
        if m <= 8:
            for h in heads:
                deg[h] += 1.0
        else:
            np.add.at(deg, heads, 1.0)
        self.sigma = i + 1

    def copy(self) -> "GraphState":
        other = GraphState.__new__(GraphState)
        other.m = self.m
        other._capacity = self._capacity
        other.sigma = self.sigma
        other._positions = self._positions.copy()
        other._edges = self._edges.copy()
        other._degree = self._degree.copy()
        return other

    def degree_ints(self) -> np.ndarray:
        return self.degree.astype(np.int64)

    def selfloop_counts(self) -> np.ndarray:
        """Number of self-loops per vertex (only insertion steps create them)."""
        e = self.edges
        own = e[:, 0] == e[:, 1]
        return np.bincount(e[own, 0], minlength=self.sigma).astype(np.int64)

    def validate(self) -> None:
        """Assert the conservation invariants; raises AssertionError on violation."""
        sigma, m = self.sigma, self.m
        deg = self.degree_ints()
        assert deg.sum() == 2 * m * sigma, "degree sum must equal 2*m*sigma"
        assert np.all(deg >= m), "every degree is at least m"
        out = np.bincount(self.edges[:, 0], minlength=sigma)
        assert np.all(out == m), "every vertex emits exactly m edges"
        recomputed = m + np.bincount(self.edges[:, 1], minlength=sigma)
        assert np.array_equal(recomputed, deg), "degree = m + head count"


_TWO_PI = 2.0 * np.pi


def _sample_point(rng: np.random.Generator) -> np.ndarray:
    """Scalar-path uniform point; same stream consumption and values as
    sphere.sample_uniform(rng)."""
    z = rng.uniform(-1.0, 1.0)
    phi = rng.uniform(0.0, _TWO_PI)
    s = math.sqrt(max(0.0, 1.0 - z * z))
    return np.array((s * math.cos(phi), s * math.sin(phi), z))


def _weights_unsummed(state: GraphState, u: np.ndarray, kernel: FitnessKernel,
                      delta: float) -> np.ndarray:
    """Fresh per-vertex weight array (degree + delta) * F(dist)."""
    dw = state.degree + delta
    if isinstance(kernel, ConstantKernel):
        return dw
    dw *= kernel.values_from_cosines(state.positions @ u)
    return dw


def _attraction_weights(state: GraphState, u: np.ndarray, kernel: FitnessKernel,
                        delta: float):
    """Per-vertex weights (degree + delta) * F(dist) and their sum T."""
    w = _weights_unsummed(state, u, kernel, delta)
    return w, float(w.sum())


def total_attraction(state: GraphState, u: np.ndarray, kernel: FitnessKernel,
                     delta: float) -> float:
    """T(u) = sum_v (degree(v) + delta) * F(dist(x_v, u)); 0 on the empty graph."""
    if state.sigma == 0:
        return 0.0
    _, t = _attraction_weights(state, u, kernel, delta)
    return t


def normalizer(T: float, sigma: int, alpha: float, theta: float,
               attraction_integral: float) -> float:
    """M = max(T, alpha * theta * I * sigma); zero only at sigma = 0."""
    return max(T, alpha * theta * attraction_integral * sigma)


def attachment_distribution(state: GraphState, u: np.ndarray,
                            params: ProcessParams) -> np.ndarray:
    """Endpoint law for one edge of the arriving vertex.

    Entry v (0-based, v < sigma) is the probability of old vertex v;
    the final entry is the self-loop probability 1 - T/M. Entries are
    nonnegative and sum to 1 within 1e-12.
    """
    if state.sigma < 1:
        raise ValueError("attachment distribution requires at least one vertex")
    w, T = _attraction_weights(state, u, params.kernel, params.delta)
    M = normalizer(T, state.sigma, params.alpha, params.theta,
                   params.attraction_integral())
    out = np.empty(state.sigma + 1)
    out[:-1] = w / M
    out[-1] = 1.0 - T / M
    return out


class _StepWorkspace:
    """Preallocated buffers for the per-step weight computation; values
    are identical to the allocating path, only the storage is reused."""

    __slots__ = ("w", "cum", "dots")

    def __init__(self, capacity: int):
        self.w = np.empty(capacity)
        self.cum = np.empty(capacity)
        self.dots = np.empty(capacity)


def _draw_endpoints_exact(state: GraphState, u: np.ndarray, params: ProcessParams,
                          athetai: float, rng: np.random.Generator,
                          ws: _StepWorkspace | None = None) -> np.ndarray:
    """m endpoint draws against the frozen state (indices; sigma = self-loop)."""
    sigma, m = state.sigma, params.m
    kernel = params.kernel
    if ws is None:
        w = _weights_unsummed(state, u, kernel, params.delta)
        cum = np.cumsum(w)
    else:
        w = ws.w[:sigma]
        np.add(state.degree, params.delta, out=w)
        if not isinstance(kernel, ConstantKernel):
            dots = ws.dots[:sigma]
            np.dot(state.positions, u, out=dots)
            kernel.scale_by_values(dots, w)
        cum = ws.cum[:sigma]
        np.cumsum(w, out=cum)
    T = cum[-1] if sigma else 0.0
    lower = athetai * sigma
    M = T if T >= lower else lower
    r = rng.random(m) * M
    heads = np.full(m, sigma, dtype=np.int64)
    old = r < T
    if old.any():
        heads[old] = np.minimum(
            np.searchsorted(cum, r[old], side="right"), sigma - 1
        )
    return heads


def grow_one_step(state: GraphState, params: ProcessParams,
                  rng: np.random.Generator,
                  sampler: "FastEndpointSampler | None" = None,
                  _ws: _StepWorkspace | None = None) -> GraphState:
    """Advance the process by one vertex (in place; the state is returned).

    The first vertex receives m self-loops: the empty graph offers no
    endpoints and both normalizer branches vanish, so the whole mass
    sits on the new vertex.
    """
    x = _sample_point(rng)
    if state.sigma == 0:
        heads = np.zeros(params.m, dtype=np.int64)
    elif sampler is not None:
        heads = sampler.sample_step(x, rng)
    else:
        athetai = params.alpha * params.theta * params.attraction_integral()
        heads = _draw_endpoints_exact(state, x, params, athetai, rng, _ws)
    state.append_step(x, heads)
    if sampler is not None:
        sampler.notify_step(heads)
    return state


@dataclass
class Snapshot:
    """Mid-run observation: degree counts and optionally tracked degrees
    and a total-attraction sample at a fresh uniform point."""

    sigma: int
    degree_k: np.ndarray
    degree_counts: np.ndarray
    tracked_degrees: dict[int, int] = field(default_factory=dict)
    attraction_sample: float | None = None


@dataclass
class RunResult:
    state: GraphState
    snapshots: list[Snapshot]


def _estimate_bytes(n: int, m: int) -> int:
    return n * (3 * 8 + 8) + n * m * 2 * 8


def run(params: ProcessParams, *, snapshot_times=(), track_vertices=(),
        sample_attraction: bool = False, fast: bool = False,
        acceptance_floor: float = 1e-3) -> RunResult:
    """Grow a full graph of params.n vertices; deterministic in params.seed.

    snapshot_times    sorted vertex counts in [1, n] at which to record
                      a degree histogram
    track_vertices    1-based vertex ids whose degrees are recorded in
                      each snapshot
    sample_attraction draw one total-attraction value T(U) per snapshot
                      at a fresh uniform U (from a side stream, so the
                      graph itself is unaffected)
    fast              use the rejection sampler backed by the dynamic
                      weighted index instead of the exact linear scan
    """
    need = _estimate_bytes(params.n, params.m)
    if need > _MEMORY_LIMIT_BYTES:
        raise MemoryError(
            f"run of n={params.n}, m={params.m} needs about {need >> 20} MiB, "
            f"over the {_MEMORY_LIMIT_BYTES >> 20} MiB guard"
        )
    times = sorted(int(t) for t in snapshot_times)
    if times and (times[0] < 1 or times[-1] > params.n):
        raise ValueError("snapshot times must lie in [1, n]")
    tracked = [int(v) for v in track_vertices]

    rng = np.random.Generator(np.random.Philox(key=params.seed % (1 << 64)))
    side_rng = np.random.Generator(
        np.random.Philox(key=(params.seed ^ 0x5370686572655F54) % (1 << 64))
    )
    state = GraphState(params.m, params.n)
    sampler = FastEndpointSampler(state, params, acceptance_floor) if fast else None
    ws = None if fast else _StepWorkspace(params.n)

    snapshots: list[Snapshot] = []
    next_snap = 0
    for _ in range(params.n):
        grow_one_step(state, params, rng, sampler, ws)
        if next_snap < len(times) and state.sigma == times[next_snap]:
            snapshots.append(_take_snapshot(state, params, tracked,
                                            sample_attraction, side_rng))
            next_snap += 1
    return RunResult(state=state, snapshots=snapshots)


def _take_snapshot(state: GraphState, params: ProcessParams, tracked,
                   sample_attraction: bool, side_rng) -> Snapshot:
    deg = state.degree_ints()
    counts = np.bincount(deg)
    ks = np.nonzero(counts)[0]
    snap = Snapshot(sigma=state.sigma, degree_k=ks, degree_counts=counts[ks])
    for v in tracked:
        if 1 <= v <= state.sigma:
            snap.tracked_degrees[v] = int(deg[v - 1])
    if sample_attraction:
        u = sphere.sample_uniform(side_rng)
        snap.attraction_sample = total_attraction(state, u, params.kernel,
                                                  params.delta)
    return snap


def _splitmix64(x: int) -> int:
    x = (x + 0x9E3779B97F4A7C15) & 0xFFFFFFFFFFFFFFFF
    x = ((x ^ (x >> 30)) * 0xBF58476D1CE4E5B9) & 0xFFFFFFFFFFFFFFFF
    x = ((x ^ (x >> 27)) * 0x94D049BB133111EB) & 0xFFFFFFFFFFFFFFFF
    return x ^ (x >> 31)


def replica_seed(seed: int, replica: int) -> int:
    """Stream seed for replica r: base seed XOR a mixed counter.

    The mix is a splitmix64 finalizer, so consecutive replica numbers
    land on well-separated keys of the counter-based generator.
    """
    return (seed ^ _splitmix64(replica)) & 0xFFFFFFFFFFFFFFFF


def run_ensemble(params: ProcessParams, replicas: int, *, jobs: int | None = None,
                 summarize=None, **run_kwargs) -> list:
    """Run independent replicas; replica r uses replica_seed(seed, r).

    ``summarize`` (a picklable callable RunResult -> object) is applied
    in the worker so large states never cross process boundaries. With
    jobs in (None, 0, 1) everything runs in the current process.
    """
    seeds = [replica_seed(params.seed, r) for r in range(replicas)]
    tasks = [(params.with_seed(s), run_kwargs, summarize) for s in seeds]
    if not jobs or jobs <= 1:
        return [_run_task(t) for t in tasks]
    import concurrent.futures as cf

    with cf.ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(_run_task, tasks))


def _run_task(task):
    params, run_kwargs, summarize = task
    result = run(params, **run_kwargs)
    return summarize(result) if summarize is not None else result


class FastEndpointSampler:
    """Accelerated endpoint sampler with the exact attachment law.

    Self-loop versus old vertex is decided by T/M, with T maintained
    incrementally (the weighted index total) for the constant kernel
    and recomputed by a scan otherwise. Old vertices are proposed
    proportionally to degree + delta from the dynamic weighted index
    and accepted with probability F(dist)/F_max, retrying on reject.
    When the expected acceptance rate I/F_max falls below
    ``acceptance_floor`` the sampler falls back to the exact linear
    scan (rejection would stall on kernels with tiny support).
    """

    def __init__(self, state: GraphState, params: ProcessParams,
                 acceptance_floor: float = 1e-3):
        self.state = state
        self.params = params
        self._athetai = params.alpha * params.theta * params.attraction_integral()
        self._fmax = params.kernel.max_value()
        self._is_constant = isinstance(params.kernel, ConstantKernel)
        self.uses_rejection = (
            params.attraction_integral() / self._fmax >= acceptance_floor
        )
        self.index = WeightedIndex(
            state.degree + params.delta, capacity=max(64, state._capacity)
        )

    def _totals(self, u: np.ndarray):
        state, params = self.state, self.params
        if self._is_constant:
            T = self.index.total
        else:
            T = total_attraction(state, u, params.kernel, params.delta)
        return T, max(T, self._athetai * state.sigma)

    def sample(self, u: np.ndarray, rng: np.random.Generator) -> int:
        """One endpoint for an arrival at u (index; sigma means self-loop)."""
        if not self.uses_rejection:
            return int(_draw_endpoints_exact(self.state, u, self.params,
                                             self._athetai, rng)[0])
        state, kernel = self.state, self.params.kernel
        T, M = self._totals(u)
        if rng.random() * M >= T:
            return state.sigma
        pos = state._positions
        fmax = self._fmax
        while True:
            v = self.index.sample(rng)
            a = kernel.value_from_cosine(float(pos[v] @ u)) / fmax
            if a >= 1.0 or rng.random() < a:
                return v

    def sample_batch(self, u: np.ndarray, rng: np.random.Generator,
                     size: int) -> np.ndarray:
        """Vectorized draws from the identical proposal-acceptance law.

        Proposal weights are the current leaves of the weighted index;
        acceptance uses the same F/F_max thresholds as ``sample``.
        """
        state, params = self.state, self.params
        if not self.uses_rejection:
            w, _ = _attraction_weights(state, u, params.kernel, params.delta)
            cum = np.cumsum(w)
            T = cum[-1]
            M = max(T, self._athetai * state.sigma)
            r = rng.random(size) * M
            out = np.full(size, state.sigma, dtype=np.int64)
            old = r < T
            out[old] = np.minimum(
                np.searchsorted(cum, r[old], side="right"), state.sigma - 1)
            return out
        T, M = self._totals(u)
        out = np.full(size, state.sigma, dtype=np.int64)
        pending = np.nonzero(rng.random(size) * M < T)[0]
        leaves = self.index.leaf_weights()
        cum = np.cumsum(leaves)
        accept = params.kernel.values_from_cosines(state.positions @ u) / self._fmax
        while pending.size:
            r = rng.random(pending.size) * cum[-1]
            v = np.minimum(np.searchsorted(cum, r, side="right"), state.sigma - 1)
            ok = rng.random(pending.size) < accept[v]
            out[pending[ok]] = v[ok]
            pending = pending[~ok]
        return out

    def sample_step(self, u: np.ndarray, rng: np.random.Generator) -> np.ndarray:
        """The m endpoint draws of one growth step (state frozen throughout)."""
        m = self.params.m
        return np.array([self.sample(u, rng) for _ in range(m)], dtype=np.int64)

    def notify_step(self, heads: np.ndarray) -> None:
        """Fold one appended step into the weighted index."""
        self.index.append(self.params.m + self.params.delta)
        for h in heads:
            self.index.add(int(h), 1.0)

    def law(self, u: np.ndarray) -> np.ndarray:
        """Analytic law of ``sample``: proposal times acceptance, renormalized.

        Built from the sampler's own components (index leaves and
        acceptance probabilities), independently of
        attachment_distribution.
        """
        state, params = self.state, self.params
        T, M = self._totals(u)
        leaves = self.index.leaf_weights()
        accept = np.asarray(
            params.kernel.values_from_cosines(state.positions @ u), dtype=float
        ) / self._fmax
        joint = leaves * accept
        out = np.empty(state.sigma + 1)
        if joint.sum() > 0:
            out[:-1] = (T / M) * joint / joint.sum()
        else:
            out[:-1] = 0.0
        out[-1] = 1.0 - T / M
        return out


def fast_sampler(state: GraphState, u: np.ndarray, params: ProcessParams,
                 rng: np.random.Generator, size: int | None = None,
                 acceptance_floor: float = 1e-3):
    """Endpoint draw(s) at u via the accelerated sampler.

    Returns a single index (sigma meaning self-loop) or an array of
    ``size`` indices. Builds a fresh index; reuse FastEndpointSampler
    directly inside loops.
    """
    s = FastEndpointSampler(state, params, acceptance_floor)
    if size is None:
        return s.sample(u, rng)
    return s.sample_batch(u, rng, size)


def fast_sampler_law(state: GraphState, u: np.ndarray,
                     params: ProcessParams) -> np.ndarray:
    """Analytic distribution of fast_sampler (for verification)."""
    return FastEndpointSampler(state, params).law(u)


def write_edge_list(state: GraphState, path) -> None:
    """Tab-separated edges, one per line, 1-indexed, creation order."""
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        f.write("src\thead\n")
        for s, h in state.edges + 1:
            f.write(f"{s}\t{h}\n")


def write_positions(state: GraphState, path) -> None:
    """CSV of vertex positions: vertex,x,y,z with 1-indexed vertices."""
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        f.write("vertex,x,y,z\n")
        for i, (x, y, z) in enumerate(state.positions, start=1):
            f.write(f"{i},{x:.17g},{y:.17g},{z:.17g}\n")


def run_manifest(params: ProcessParams) -> dict:
    """JSON-ready description of a run: parameters, version and seed."""
    from . import __version__

    return {
        "version": __version__,
        "n": params.n,
        "m": params.m,
        "alpha": params.alpha,
        "delta": params.delta,
        "kernel": kernel_to_json(params.kernel),
        "seed": params.seed,
    }
