"""Measurement of generated graphs.

Degree histograms and their conservation laws, discrete power-law tail
fits (maximum likelihood and log-log least squares on the CCDF),
connected components via union-find, diameters via exact breadth-first
search, the lower/upper-bound pruning scheme, or sampled double sweeps,
and the per-degree comparison of an ensemble against a predicted table.

Connectivity and distance computations ignore edge directions, drop
self-loops and collapse multi-edges; none of the three can change a
component or a shortest path.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import optimize, special, stats

__all__ = [
    "DegreeHistogram",
    "StaticGraph",
    "degree_histogram",
    "TailFit",
    "tail_exponent_fit",
    "connected_components",
    "DiameterResult",
    "diameter",
    "CompareRow",
    "compare_empirical_theory",
]


@dataclass
class DegreeHistogram:
    """Counts of vertices per degree at vertex count sigma.

    Counts are integers for real graphs; float weights are accepted so
    predicted tables can be fitted with the same estimators.
    """

    sigma: int
    k: np.ndarray
    counts: np.ndarray

    def validate(self, m: int) -> None:
        assert int(self.counts.sum()) == self.sigma, "sum of counts equals sigma"
        assert int((self.k * self.counts).sum()) == 2 * m * self.sigma, \
            "degree-weighted count equals 2*m*sigma"
        assert np.all(self.k >= m), "no degree below m"

    def as_dict(self) -> dict[int, float]:
        return {int(k): c for k, c in zip(self.k, self.counts)}


@dataclass
class StaticGraph:
    """Minimal edge-list graph for the measurement functions.

    Any object with integer ``sigma`` and an (E, 2) ``edges`` array of
    0-based endpoints works (GraphState does); this class covers
    synthetic inputs.
    """

    sigma: int
    edges: np.ndarray


def degree_histogram(state) -> DegreeHistogram:
    """Exact degree counts of a generated graph."""
    if hasattr(state, "degree_ints"):
        deg = state.degree_ints()
    else:
        e = np.asarray(state.edges)
        deg = np.bincount(e[:, 0], minlength=state.sigma) + np.bincount(
            e[:, 1], minlength=state.sigma)
    counts = np.bincount(deg)
    ks = np.nonzero(counts)[0]
    return DegreeHistogram(sigma=state.sigma, k=ks.astype(np.int64),
                           counts=counts[ks].astype(np.int64))


# --- power-law tail fitting --------------------------------------------------

@dataclass(frozen=True)
class TailFit:
    """Discrete power-law fit of a degree tail k >= k_min."""

    k_min: int
    n_tail: float
    mle_exponent: float
    mle_stderr: float
    ls_exponent: float
    ls_stderr: float
    gof_pvalue: float

    @property
    def plausible(self) -> bool:
        """False when the chi-square goodness of fit rejects at 0.1%."""
        return not (self.gof_pvalue < 1e-3)


def _zipf_logpmf(tau: float, k: np.ndarray, k_min: int) -> np.ndarray:
    return -tau * np.log(k) - math.log(float(special.zeta(tau, k_min)))


def tail_exponent_fit(hist: DegreeHistogram, k_min: int) -> TailFit:
    """Fit k^-tau to the histogram tail k >= k_min.

    Maximum likelihood uses the Hurwitz-zeta normalized discrete power
    law; the least-squares estimate regresses log CCDF on log k (CCDF
    slope is 1 - tau). Standard errors come from the observed
    information and the regression residuals. A chi-square goodness of
    fit (cells pooled to expected counts >= 5) yields the p-value.
    """
    mask = hist.k >= k_min
    ks = hist.k[mask].astype(float)
    ws = hist.counts[mask].astype(float)
    n = float(ws.sum())
    if n < 50:
        raise ValueError(
            f"insufficient tail data: {n:.0f} observations with k >= {k_min}, need 50"
        )

    logk_sum = float((ws * np.log(ks)).sum())

    def negloglik(tau):
        return tau * logk_sum + n * math.log(float(special.zeta(tau, k_min)))

    res = optimize.minimize_scalar(negloglik, bounds=(1.0001, 20.0),
                                   method="bounded",
                                   options={"xatol": 1e-8})
    tau_mle = float(res.x)
    h = 1e-4
    info = (negloglik(tau_mle + h) - 2.0 * negloglik(tau_mle)
            + negloglik(tau_mle - h)) / (h * h)
    mle_stderr = 1.0 / math.sqrt(info) if info > 0 else float("nan")

    ccdf = np.cumsum(ws[::-1])[::-1] / n
    pos = ccdf > 0
    x = np.log(ks[pos])
    y = np.log(ccdf[pos])
    if x.size > 200:
        # Subsample log-spaced degrees so every decade carries equal
        # weight; dense integer spacing would let the truncated far tail
        # dominate the regression.
        keep = np.unique(np.geomspace(1, x.size, 200).astype(int) - 1)
        x, y = x[keep], y[keep]
    if x.size >= 3:
        slope, intercept = np.polyfit(x, y, 1)
        resid = y - (slope * x + intercept)
        sxx = float(((x - x.mean()) ** 2).sum())
        ls_stderr = math.sqrt(float((resid**2).sum()) / max(x.size - 2, 1) / sxx)
    else:
        slope, ls_stderr = float("nan"), float("nan")
    ls_exponent = 1.0 - float(slope)

    gof_p = _chi_square_gof(ks, ws, tau_mle, k_min)
    return TailFit(k_min=int(k_min), n_tail=n, mle_exponent=tau_mle,
                   mle_stderr=mle_stderr, ls_exponent=ls_exponent,
                   ls_stderr=ls_stderr, gof_pvalue=gof_p)


def _chi_square_gof(ks, ws, tau, k_min) -> float:
    n = float(ws.sum())
    grid = np.arange(k_min, int(ks.max()) + 1)
    pmf = np.exp(_zipf_logpmf(tau, grid.astype(float), k_min))
    pmf_tail = 1.0 - pmf.sum()  # mass above the observed maximum
    obs = np.zeros(grid.size + 1)
    obs[(ks - k_min).astype(int)] = ws
    exp = n * np.append(pmf, max(pmf_tail, 0.0))
    # Pool cells from the right until each expected count reaches 5.
    obs_cells, exp_cells = [], []
    o_acc = e_acc = 0.0
    for o, e in zip(obs[::-1], exp[::-1]):
        o_acc += o
        e_acc += e
        if e_acc >= 5.0:
            obs_cells.append(o_acc)
            exp_cells.append(e_acc)
            o_acc = e_acc = 0.0
    if o_acc or e_acc:
        if exp_cells:
            obs_cells[-1] += o_acc
            exp_cells[-1] += e_acc
    dof = len(obs_cells) - 2
    if dof < 1:
        return float("nan")
    o = np.array(obs_cells)
    e = np.array(exp_cells)
    e *= o.sum() / e.sum()
    chi2 = float(((o - e) ** 2 / e).sum())
    return float(stats.chi2.sf(chi2, dof))


# --- components and distances ------------------------------------------------

def _undirected_pairs(state) -> np.ndarray:
    e = np.asarray(state.edges)
    keep = e[:, 0] != e[:, 1]
    return e[keep]


def connected_components(state) -> np.ndarray:
    """Component sizes, largest first (union-find; self-loops ignored)."""
    n = state.sigma
    parent = np.arange(n, dtype=np.int64)

    def find(i: int) -> int:
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    for a, b in _undirected_pairs(state):
        ra, rb = find(int(a)), find(int(b))
        if ra != rb:
            parent[ra] = rb
    roots = np.array([find(int(i)) for i in range(n)])
    sizes = np.bincount(roots, minlength=n)
    sizes = sizes[sizes > 0]
    return np.sort(sizes)[::-1]


def _component_labels(state) -> np.ndarray:
    n = state.sigma
    parent = np.arange(n, dtype=np.int64)

    def find(i: int) -> int:
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    for a, b in _undirected_pairs(state):
        ra, rb = find(int(a)), find(int(b))
        if ra != rb:
            parent[ra] = rb
    return np.array([find(int(i)) for i in range(n)])


def _csr_adjacency(state):
    """Undirected simple adjacency as (indptr, indices) CSR arrays."""
    n = state.sigma
    pairs = _undirected_pairs(state)
    if pairs.size == 0:
        return np.zeros(n + 1, dtype=np.int64), np.empty(0, dtype=np.int64)
    both = np.vstack((pairs, pairs[:, ::-1]))
    both = np.unique(both, axis=0)
    src = both[:, 0]
    indptr = np.zeros(n + 1, dtype=np.int64)
    np.add.at(indptr, src + 1, 1)
    np.cumsum(indptr, out=indptr)
    return indptr, both[:, 1].astype(np.int64)


def _bfs(indptr, indices, source: int, dist: np.ndarray):
    """Level-synchronous BFS; fills dist (-1 = unreachable), returns ecc."""
    dist.fill(-1)
    dist[source] = 0
    frontier = np.array([source], dtype=np.int64)
    level = 0
    while frontier.size:
        starts = indptr[frontier]
        ends = indptr[frontier + 1]
        lens = ends - starts
        total = int(lens.sum())
        if total == 0:
            break
        gather = np.repeat(starts - np.concatenate(([0], np.cumsum(lens)[:-1])), lens)
        gather += np.arange(total)
        nbrs = indices[gather]
        nbrs = np.unique(nbrs[dist[nbrs] < 0])
        if nbrs.size == 0:
            break
        level += 1
        dist[nbrs] = level
        frontier = nbrs
    return level


@dataclass(frozen=True)
class DiameterResult:
    value: int
    method: str
    is_lower_bound: bool
    connected: bool
    component_size: int
    bfs_count: int


_EXACT_LIMIT = 20_000


def diameter(state, method: str = "ifub", sweeps: int = 8,
             rng: np.random.Generator | None = None) -> DiameterResult:
    """Diameter of the undirected simple graph underneath ``state``.

    exact    breadth-first search from every vertex (sigma <= 20000)
    ifub     the same value via lower/upper-bound level pruning
    sampled  a lower bound from ``sweeps`` random double sweeps

    A disconnected input is measured on its largest component and
    flagged through ``connected=False``.
    """
    if method not in ("exact", "ifub", "sampled"):
        raise ValueError("method must be exact, ifub or sampled")
    n = state.sigma
    if method == "exact" and n > _EXACT_LIMIT:
        raise ValueError(f"exact diameter is limited to {_EXACT_LIMIT} vertices")
    labels = _component_labels(state)
    counts = np.bincount(labels)
    root = int(np.argmax(counts))
    comp = np.nonzero(labels == root)[0]
    connected = comp.size == n
    indptr, indices = _csr_adjacency(state)
    dist = np.empty(n, dtype=np.int64)

    if comp.size == 1:
        return DiameterResult(0, method, method == "sampled", connected,
                              1, 0)

    if method == "exact":
        best = 0
        for s in comp:
            best = max(best, _bfs(indptr, indices, int(s), dist))
        return DiameterResult(int(best), "exact", False, connected,
                              int(comp.size), int(comp.size))

    if method == "sampled":
        rng = rng or np.random.default_rng(0)
        best = 0
        nbfs = 0
        for _ in range(sweeps):
            s = int(rng.choice(comp))
            _bfs(indptr, indices, s, dist)
            nbfs += 1
            far = int(np.argmax(np.where(dist >= 0, dist, -1)))
            best = max(best, _bfs(indptr, indices, far, dist))
            nbfs += 1
        return DiameterResult(int(best), "sampled", True, connected,
                              int(comp.size), nbfs)

    # ifub: root a BFS at the midpoint of a double sweep, then peel levels
    # from the deepest inward, keeping lb = max eccentricity seen and
    # ub = twice the next level; equality stops with the exact diameter.
    nbfs = 0
    deg = indptr[1:] - indptr[:-1]
    start = int(comp[np.argmax(deg[comp])])
    _bfs(indptr, indices, start, dist)
    nbfs += 1
    a = int(np.argmax(np.where(dist >= 0, dist, -1)))
    parents = _bfs_parents(indptr, indices, a, dist)
    nbfs += 1
    b = int(np.argmax(np.where(dist >= 0, dist, -1)))
    path = [b]
    while parents[path[-1]] >= 0:
        path.append(int(parents[path[-1]]))
    u = path[len(path) // 2]

    ecc_u = _bfs(indptr, indices, u, dist)
    nbfs += 1
    levels = dist.copy()
    lb = ecc_u
    i = ecc_u
    while 2 * i > lb:
        fringe = np.nonzero(levels == i)[0]
        for v in fringe:
            lb = max(lb, _bfs(indptr, indices, int(v), dist))
            nbfs += 1
        if lb > 2 * (i - 1):
            break
        i -= 1
    return DiameterResult(int(lb), "ifub", False, connected,
                          int(comp.size), nbfs)


def _bfs_parents(indptr, indices, source: int, dist: np.ndarray) -> np.ndarray:
    """BFS recording one parent per vertex (for path reconstruction)."""
    n = dist.size
    dist.fill(-1)
    parents = np.full(n, -1, dtype=np.int64)
    dist[source] = 0
    frontier = np.array([source], dtype=np.int64)
    level = 0
    while frontier.size:
        starts = indptr[frontier]
        ends = indptr[frontier + 1]
        lens = ends - starts
        total = int(lens.sum())
        if total == 0:
            break
        gather = np.repeat(starts - np.concatenate(([0], np.cumsum(lens)[:-1])), lens)
        gather += np.arange(total)
        nbrs = indices[gather]
        srcs = np.repeat(frontier, lens)
        fresh = dist[nbrs] < 0
        nbrs, srcs = nbrs[fresh], srcs[fresh]
        uniq, first = np.unique(nbrs, return_index=True)
        if uniq.size == 0:
            break
        level += 1
        dist[uniq] = level
        parents[uniq] = srcs[first]
        frontier = uniq
    return parents


# --- ensemble versus prediction ----------------------------------------------

@dataclass(frozen=True)
class CompareRow:
    k: int
    mean: float
    stderr: float
    theory: float
    z: float


def compare_empirical_theory(histograms, k_theory: np.ndarray,
                             p_theory: np.ndarray,
                             k_range: tuple[int, int] | None = None) -> list[CompareRow]:
    """Per-degree comparison of an ensemble against a predicted table.

    For each degree k: the ensemble mean of N_k / sigma, its standard
    error across replicas, the predicted fraction, and the z-score
    (zero when all replicas agree exactly with the prediction, +/-inf
    on disagreement with zero spread).
    """
    hists = list(histograms)
    if len(hists) < 2:
        raise ValueError("need at least two replicas to compare")
    theory = {int(k): float(p) for k, p in zip(k_theory, p_theory)}
    if k_range is None:
        lo = min(int(h.k.min()) for h in hists)
        hi = max(int(h.k.max()) for h in hists)
    else:
        lo, hi = k_range
    dicts = [h.as_dict() for h in hists]
    rows = []
    for k in range(lo, hi + 1):
        if k not in theory:
            continue
        fracs = np.array([d.get(k, 0.0) / h.sigma
                          for d, h in zip(dicts, hists)])
        mean = float(fracs.mean())
        if np.all(fracs == fracs[0]):
            stderr = 0.0
        else:
            stderr = float(fracs.std(ddof=1) / math.sqrt(len(fracs)))
        t = theory[k]
        if stderr > 0:
            z = (mean - t) / stderr
        else:
            z = 0.0 if mean == t else math.copysign(float("inf"), mean - t)
        rows.append(CompareRow(k=k, mean=mean, stderr=stderr, theory=t, z=float(z)))
    return rows
