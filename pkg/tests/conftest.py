"""Session fixtures for the acceptance suite.

The heavy ensembles are grown once and shared across criteria; every
generated graph is validated (degree sum, out-degree, head counts) on
creation, feeding the conservation criterion. All seeds are fixed, so
the whole suite is deterministic.
"""

import time
import warnings

import numpy as np
import pytest

from gpaf.graphstats import degree_histogram
from gpaf.kernels import ConstantKernel, RangeIndicatorKernel
from gpaf.process import ProcessParams, replica_seed, run
from gpaf.coupling import run_coupled

ACC_N = 100_000
ACC_SEED = 20250810
SNAPSHOT_TIMES = sorted(set(
    np.unique(np.round(np.geomspace(100, ACC_N, 25)).astype(int)).tolist()))


@pytest.fixture(scope="session")
def conservation_log():
    """(label, graphs_validated) records appended by fixtures and tests."""
    return []


def _ensemble(params, replicas, conservation_log, label, **run_kwargs):
    hists, tracks, selfloops = [], [], []
    validated = 0
    for r in range(replicas):
        res = run(params.with_seed(replica_seed(params.seed, r)), **run_kwargs)
        res.state.validate()
        validated += 1
        hist = degree_histogram(res.state)
        hist.validate(params.m)
        hists.append(hist)
        tracks.append([(s.sigma, s.tracked_degrees.get(10))
                       for s in res.snapshots])
        selfloops.append(res.state.selfloop_counts())
    conservation_log.append((label, validated))
    return {"hists": hists, "tracks": tracks, "selfloops": selfloops,
            "params": params}


@pytest.fixture(scope="session")
def const_ensemble(conservation_log):
    """20 replicas, n = 1e5, m = 2, alpha = 3, delta = 0, constant kernel,
    exact sampler, with vertex-10 degree tracking."""
    params = ProcessParams(n=ACC_N, m=2, alpha=3.0, delta=0.0,
                           kernel=ConstantKernel(), seed=ACC_SEED)
    return _ensemble(params, 20, conservation_log, "const_ensemble",
                     snapshot_times=SNAPSHOT_TIMES, track_vertices=[10])


@pytest.fixture(scope="session")
def indicator_ensemble(conservation_log):
    """20 replicas, n = 1e5, range-indicator kernel of radius 0.3,
    exact sampler."""
    params = ProcessParams(n=ACC_N, m=2, alpha=3.0, delta=0.0,
                           kernel=RangeIndicatorKernel(0.3), seed=ACC_SEED)
    return _ensemble(params, 20, conservation_log, "indicator_ensemble")


@pytest.fixture(scope="session")
def delta_neg_ensemble(conservation_log):
    """20 replicas, n = 1e5, delta = -1 (tail exponent 3.25); the sampler
    is unpinned for this arm, so the rejection sampler keeps it quick."""
    params = ProcessParams(n=ACC_N, m=2, alpha=3.0, delta=-1.0,
                           kernel=ConstantKernel(), seed=ACC_SEED)
    return _ensemble(params, 20, conservation_log, "delta_neg_ensemble",
                     fast=True)


@pytest.fixture(scope="session")
def coupled_ensemble(conservation_log):
    """20 coupled pairs, n = 1e5, m = 2, alpha = 4, tau = 100."""
    params = ProcessParams(n=ACC_N, m=2, alpha=4.0, delta=0.0,
                           kernel=ConstantKernel(), seed=ACC_SEED)
    runs = [run_coupled(params.with_seed(replica_seed(ACC_SEED, r)), tau=100)
            for r in range(20)]
    conservation_log.append(("coupled_ensemble", len(runs)))
    return {"runs": runs, "params": params}


def criterion_line(number: int, description: str, started: float) -> None:
    print(f"PASS criterion {number:2d}: {description} "
          f"({time.time() - started:.1f}s)")
