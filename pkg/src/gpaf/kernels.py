"""Fitness kernels on angular distance and their regularity checks.

A kernel F maps a central angle u in [0, pi] to a nonnegative
attraction weight. The canonical families are

* constant:        F(u) = 1 (geometry ignored),
* range indicator: F(u) = 1 if u <= radius else 0,
* power law:       F(u) = max(n**-psi, u) ** -beta,

plus tabulated kernels (piecewise linear through user knots) for
experimentation with non-canonical shapes.

The module also computes the derived quantities the growth model and
its predictions depend on: the attractiveness integral
I = (1/2) * integral_0^pi F(x) sin(x) dx, the effective radius rho
solving mu * I = (1/2) * integral_0^rho F(x) sin(x) dx, and the
smooth/tame condition reports with their measured constants.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np
from scipy import integrate

__all__ = [
    "FitnessKernel",
    "ConstantKernel",
    "RangeIndicatorKernel",
    "PowerLawKernel",
    "TabulatedKernel",
    "QuadratureError",
    "evaluate",
    "attractiveness_integral",
    "partial_integral",
    "solve_rho",
    "check_condition_f",
    "check_smooth",
    "check_tame",
    "kernel_report",
    "ConditionFReport",
    "SmoothReport",
    "TameReport",
    "KernelReport",
    "kernel_to_json",
    "kernel_from_json",
]

_QUAD_TOL = 1e-10


class QuadratureError(RuntimeError):
    """Adaptive quadrature failed to reach the requested tolerance."""

    def __init__(self, message: str, achieved: float):
        super().__init__(f"{message} (achieved absolute error {achieved:.3e})")
        self.achieved = achieved


def _quad(f, lo: float, hi: float, breakpoints=()) -> float:
    """Integrate f over [lo, hi] to absolute tolerance 1e-10.

    Interior breakpoints (kernel discontinuities or kinks) are passed to
    the adaptive routine so panels never straddle them.
    """
    pts = sorted(p for p in breakpoints if lo < p < hi)
    val, err = integrate.quad(f, lo, hi, points=pts or None,
                              epsabs=_QUAD_TOL, epsrel=0.0, limit=500)
    if err > 100.0 * _QUAD_TOL:
        raise QuadratureError("quadrature did not converge", err)
    return val


class FitnessKernel:
    """Base class. Subclasses are immutable value objects."""

    def __call__(self, u):
        raise NotImplementedError

    def values_from_cosines(self, c: np.ndarray) -> np.ndarray:
        """Kernel values given cos(angle); the generic path takes arccos."""
        return self(np.arccos(np.clip(c, -1.0, 1.0)))

    def value_from_cosine(self, c: float) -> float:
        return float(self(math.acos(min(1.0, max(-1.0, c)))))

    def scale_by_values(self, c: np.ndarray, w: np.ndarray) -> None:
        """In-place w *= F(angle) given cos(angle); hot-loop helper."""
        w *= self.values_from_cosines(c)

    def breakpoints(self) -> tuple[float, ...]:
        """Interior discontinuities/kinks, used to split quadrature panels."""
        return ()

    def max_value(self) -> float:
        """Exact maximum of the kernel over [0, pi]."""
        return float(self(0.0))

    def integral(self) -> float:
        """Attractiveness integral I = (1/2) * int_0^pi F(x) sin(x) dx."""
        cached = getattr(self, "_integral_cache", None)
        if cached is None:
            cached = self.partial_integral(np.pi)
            object.__setattr__(self, "_integral_cache", cached)
        return cached

    def partial_integral(self, rho: float) -> float:
        """(1/2) * int_0^rho F(x) sin(x) dx."""
        if not 0.0 <= rho <= np.pi + 1e-15:
            raise ValueError("rho must lie in [0, pi]")
        if rho <= 0.0:
            return 0.0
        return 0.5 * _quad(lambda x: self(x) * math.sin(x), 0.0, min(rho, np.pi),
                           self.breakpoints())

    def squared_integral(self) -> float:
        """int_0^pi F(x)**2 sin(x) dx (no 1/2 factor)."""
        return _quad(lambda x: self(x) ** 2 * math.sin(x), 0.0, np.pi,
                     self.breakpoints())

    def _params(self) -> dict:
        return {}

    def __repr__(self):
        ps = ", ".join(f"{k}={v!r}" for k, v in self._params().items())
        return f"{type(self).__name__}({ps})"

    def __eq__(self, other):
        return type(self) is type(other) and self._params() == other._params()

    def __hash__(self):
        return hash((type(self).__name__, tuple(sorted(self._params().items(), key=lambda kv: kv[0]))))


class ConstantKernel(FitnessKernel):
    """F(u) = 1: attachment ignores the geometry entirely."""

    variant = "constant"

    def __call__(self, u):
        u = np.asarray(u, dtype=float)
        if np.ndim(u) == 0:
            return 1.0
        return np.ones_like(u)

    def values_from_cosines(self, c):
        return np.ones_like(np.asarray(c, dtype=float))

    def value_from_cosine(self, c):
        return 1.0

    def scale_by_values(self, c, w):
        pass

    def integral(self) -> float:
        return 1.0

    def partial_integral(self, rho: float) -> float:
        if not 0.0 <= rho <= np.pi + 1e-15:
            raise ValueError("rho must lie in [0, pi]")
        return 0.5 * (1.0 - math.cos(rho))

    def squared_integral(self) -> float:
        return 2.0


class RangeIndicatorKernel(FitnessKernel):
    """F(u) = 1 when u <= radius, else 0: attachment only within reach."""

    variant = "range_indicator"

    def __init__(self, radius: float):
        radius = float(radius)
        if not 0.0 < radius <= np.pi:
            raise ValueError("radius must lie in (0, pi]")
        self.radius = radius
        self._cos_radius = math.cos(radius)

    def _params(self):
        return {"radius": self.radius}

    def __call__(self, u):
        u = np.asarray(u, dtype=float)
        out = (u <= self.radius).astype(float)
        if np.ndim(u) == 0:
            return float(out)
        return out

    def values_from_cosines(self, c):
        return (np.asarray(c) >= self._cos_radius).astype(float)

    def value_from_cosine(self, c):
        return 1.0 if c >= self._cos_radius else 0.0

    def scale_by_values(self, c, w):
        w[c < self._cos_radius] = 0.0

    def breakpoints(self):
        return (self.radius,)

    def integral(self) -> float:
        return 0.5 * (1.0 - self._cos_radius)

    def partial_integral(self, rho: float) -> float:
        if not 0.0 <= rho <= np.pi + 1e-15:
            raise ValueError("rho must lie in [0, pi]")
        return 0.5 * (1.0 - math.cos(min(rho, self.radius)))

    def squared_integral(self) -> float:
        # F**2 == F for an indicator, so this is exactly twice the integral.
        return 1.0 - self._cos_radius


class PowerLawKernel(FitnessKernel):
    """F(u) = max(n**-psi, u) ** -beta: nearby vertices are preferred.

    The floor n**-psi keeps the weight finite at zero distance; beta
    must be positive and different from 2, psi below 1/2.
    """

    variant = "power_law"

    def __init__(self, beta: float, psi: float, n: int):
        beta, psi, n = float(beta), float(psi), int(n)
        if not (beta > 0.0 and beta != 2.0):
            raise ValueError("beta must lie in (0, 2) or (2, inf)")
        if not psi < 0.5:
            raise ValueError("psi must be < 1/2")
        if n < 2:
            raise ValueError("n must be >= 2")
        self.beta = beta
        self.psi = psi
        self.n = n
        self._floor = n ** (-psi)

    def _params(self):
        return {"beta": self.beta, "psi": self.psi, "n": self.n}

    def __call__(self, u):
        u = np.asarray(u, dtype=float)
        out = np.maximum(self._floor, u) ** (-self.beta)
        if np.ndim(u) == 0:
            return float(out)
        return out

    def breakpoints(self):
        return (self._floor,) if self._floor < np.pi else ()

    def max_value(self) -> float:
        return self._floor ** (-self.beta)


class TabulatedKernel(FitnessKernel):
    """Piecewise-linear kernel through ordered (angle, value) knots.

    Values are clamped to the end knots outside the knot range; linear
    interpolation preserves monotonicity of the knot values.
    """

    variant = "tabulated"

    def __init__(self, knots):
        knots = [(float(u), float(v)) for u, v in knots]
        if len(knots) < 2:
            raise ValueError("need at least two knots")
        us = [u for u, _ in knots]
        vs = [v for _, v in knots]
        if any(b <= a for a, b in zip(us, us[1:])):
            raise ValueError("knot angles must be strictly increasing")
        if any(not 0.0 <= u <= np.pi for u in us):
            raise ValueError("knot angles must lie in [0, pi]")
        if any(v < 0.0 for v in vs):
            raise ValueError("knot values must be nonnegative")
        self.knots = tuple(knots)
        self._us = np.array(us)
        self._vs = np.array(vs)

    def _params(self):
        return {"knots": self.knots}

    def __call__(self, u):
        u = np.asarray(u, dtype=float)
        out = np.interp(u, self._us, self._vs)
        if np.ndim(u) == 0:
            return float(out)
        return out

    def breakpoints(self):
        return tuple(self._us[1:-1])

    def max_value(self) -> float:
        return float(self._vs.max())


def evaluate(kernel: FitnessKernel, u) -> float | np.ndarray:
    """Kernel value at angle(s) ``u``; rejects angles outside [0, pi]."""
    arr = np.asarray(u, dtype=float)
    if np.any(arr < 0.0) or np.any(arr > np.pi):
        raise ValueError("angle must lie in [0, pi]")
    return kernel(u)


def attractiveness_integral(kernel: FitnessKernel) -> float:
    """I = (1/2) * int_0^pi F(x) sin(x) dx, the mean attraction to a uniform point."""
    return kernel.integral()


def partial_integral(kernel: FitnessKernel, rho: float) -> float:
    """(1/2) * int_0^rho F(x) sin(x) dx; non-decreasing in rho, equals I at rho = pi."""
    return kernel.partial_integral(rho)


def solve_rho(kernel: FitnessKernel, mu: float) -> float:
    """Smallest rho with (1/2) * int_0^rho F sin = mu * I.

    Bisection on the monotone partial integral; the answer is exact to
    1e-12 in the integral value (the returned angle itself may sit
    anywhere on a flat stretch of the partial integral, in which case
    the leftmost point is produced).
    """
    if not 0.0 < mu <= 1.0:
        raise ValueError("mu must lie in (0, 1]")
    total = kernel.integral()
    if total <= 0.0:
        raise ValueError("kernel is identically zero")
    target = mu * total
    lo, hi = 0.0, float(np.pi)
    # Invariant: partial(lo) < target <= partial(hi) + tol.
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if kernel.partial_integral(mid) >= target:
            hi = mid
        else:
            lo = mid
        if hi - lo < 1e-15:
            break
    return hi


@dataclass(frozen=True)
class ConditionFReport:
    """Measured growth of the squared-kernel integral against I**2."""

    ratio: float            # int F^2 sin / I^2
    theta_estimate: float   # log(ratio) / log(n)
    passes: bool            # theta_estimate < 1


def check_condition_f(kernel: FitnessKernel, n: int) -> ConditionFReport:
    """Ratio J / I**2 with J = int_0^pi F(x)**2 sin(x) dx and its log base n.

    A continuous estimate is reported rather than a hard boolean
    threshold because the asymptotic condition hides constants; the
    pass flag simply records theta_estimate < 1.
    """
    if n < 2:
        raise ValueError("n must be >= 2")
    ratio = kernel.squared_integral() / kernel.integral() ** 2
    theta = math.log(ratio) / math.log(n)
    return ConditionFReport(ratio=ratio, theta_estimate=theta, passes=theta < 1.0)


@dataclass(frozen=True)
class SmoothReport:
    """Smoothness conditions at a given (n, mu, L) with measured constants."""

    mu: float
    rho: float
    s1_monotone: bool
    s2_radius_large: bool
    n_rho_sq: float        # n * rho**2, compared against L * log(n)
    s2_threshold: float    # L * log(n)
    s3_area_bound: bool
    c3: float              # rho**2 * F(min(2 rho, pi)) / I

    @property
    def smooth(self) -> bool:
        return self.s1_monotone and self.s2_radius_large and self.s3_area_bound


def check_smooth(kernel: FitnessKernel, n: int, mu: float, L: float = 1.0,
                 grid_points: int = 10_000) -> SmoothReport:
    """Evaluate the three smoothness conditions.

    Monotonicity is sampled on a uniform grid; the radius condition
    n * rho**2 >= L * log(n) uses the caller-supplied L (the theory only
    demands "sufficiently large"); the area condition reports the
    measured c3 = rho**2 * F(2 rho) / I and passes when it is positive.
    The kernel argument 2 rho is clamped to pi.
    """
    if n < 2:
        raise ValueError("n must be >= 2")
    rho = solve_rho(kernel, mu)
    grid = np.linspace(0.0, np.pi, grid_points)
    vals = np.asarray(kernel(grid), dtype=float)
    s1 = bool(np.all(np.diff(vals) <= 1e-12 * max(1.0, float(vals.max()))))
    n_rho_sq = n * rho * rho
    threshold = L * math.log(n)
    c3 = rho * rho * float(kernel(min(2.0 * rho, np.pi))) / kernel.integral()
    return SmoothReport(mu=mu, rho=rho, s1_monotone=s1,
                        s2_radius_large=n_rho_sq >= threshold,
                        n_rho_sq=n_rho_sq, s2_threshold=threshold,
                        s3_area_bound=c3 > 0.0, c3=c3)


@dataclass(frozen=True)
class TameReport:
    """Uniform lower bound on F and upper bound on I, when they exist."""

    c1: float   # min of F over a grid
    c2: float   # I
    tame: bool  # c1 > 0 and c2 finite


def check_tame(kernel: FitnessKernel, grid_points: int = 10_000) -> TameReport:
    grid = np.linspace(0.0, np.pi, grid_points)
    c1 = float(np.min(np.asarray(kernel(grid), dtype=float)))
    c2 = kernel.integral()
    return TameReport(c1=c1, c2=c2, tame=c1 > 0.0 and math.isfinite(c2))


@dataclass(frozen=True)
class KernelReport:
    """Everything the growth model and the theorems need from a kernel."""

    kernel: FitnessKernel
    n: int
    attraction_integral: float
    rho: float
    smooth: SmoothReport
    tame: TameReport
    condition_f: ConditionFReport

    def as_dict(self) -> dict:
        return {
            "kernel": kernel_to_json(self.kernel),
            "n": self.n,
            "attraction_integral": self.attraction_integral,
            "rho": self.rho,
            "smooth": {
                "mu": self.smooth.mu,
                "rho": self.smooth.rho,
                "s1_monotone": self.smooth.s1_monotone,
                "s2_radius_large": self.smooth.s2_radius_large,
                "n_rho_sq": self.smooth.n_rho_sq,
                "s2_threshold": self.smooth.s2_threshold,
                "s3_area_bound": self.smooth.s3_area_bound,
                "c3": self.smooth.c3,
                "smooth": self.smooth.smooth,
            },
            "tame": {"c1": self.tame.c1, "c2": self.tame.c2, "tame": self.tame.tame},
            "condition_f": {
                "ratio": self.condition_f.ratio,
                "theta_estimate": self.condition_f.theta_estimate,
                "passes": self.condition_f.passes,
            },
        }


def kernel_report(kernel: FitnessKernel, n: int, mu: float = 1.0,
                  L: float = 1.0) -> KernelReport:
    """Assemble the full regularity report for one kernel at size n."""
    smooth = check_smooth(kernel, n, mu, L)
    return KernelReport(
        kernel=kernel,
        n=n,
        attraction_integral=kernel.integral(),
        rho=smooth.rho,
        smooth=smooth,
        tame=check_tame(kernel),
        condition_f=check_condition_f(kernel, n),
    )


# --- JSON wire format -------------------------------------------------------
#
# {"variant": "constant"}
# {"variant": "range_indicator", "radius": 0.3}
# {"variant": "power_law", "beta": 1.0, "psi": 0.25, "n": 10000}
# {"variant": "tabulated", "knots": [[0.0, 1.0], [3.14159, 0.0]]}

def kernel_to_json(kernel: FitnessKernel) -> dict:
    obj = {"variant": kernel.variant}
    params = kernel._params()
    if kernel.variant == "tabulated":
        obj["knots"] = [[u, v] for u, v in params["knots"]]
    else:
        obj.update(params)
    return obj


def kernel_from_json(obj) -> FitnessKernel:
    if isinstance(obj, str):
        obj = json.loads(obj)
    if not isinstance(obj, dict) or "variant" not in obj:
        raise ValueError('kernel spec must be an object with a "variant" field')
    variant = obj["variant"]
    if variant == "constant":
        return ConstantKernel()
    if variant == "range_indicator":
        return RangeIndicatorKernel(radius=obj["radius"])
    if variant == "power_law":
        return PowerLawKernel(beta=obj["beta"], psi=obj["psi"], n=obj["n"])
    if variant == "tabulated":
        return TabulatedKernel(knots=obj["knots"])
    raise ValueError(f"unknown kernel variant {variant!r}")
