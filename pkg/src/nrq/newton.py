"""Newton-Raphson map on the real line: polynomial problems and orbit generation.

The map x -> x - f(x)/f'(x) is treated as a dynamical system, not a root
finder: poles and divergence are first-class outcomes, and orbits are fully
recorded so downstream histogramming stays exactly reproducible.
"""

import enum
import math
from dataclasses import dataclass, field


class DerivativeZero(ZeroDivisionError):
    """Raised when the map is evaluated at a pole (|f'(x)| below threshold)."""

    def __init__(self, x: float, fprime: float):
        super().__init__(f"f'({x!r}) = {fprime!r} is below the pole threshold")
        self.x = x
        self.fprime = fprime


def _horner(coeffs_desc: tuple, x: float) -> float:
    acc = 0.0
    for c in coeffs_desc:
        acc = acc * x + c
    return acc


@dataclass(frozen=True)
class PolynomialProblem:
    """Real polynomial f (ascending coefficients) with its exact derivative.

    The derivative and the Newton numerator x*f'(x) - f(x) are computed
    symbolically at construction; all evaluations use Horner's scheme in
    descending order so that every code path produces bit-identical values.
    """

    coefficients: tuple[float, ...]
    derivative: tuple[float, ...] = field(init=False)
    numerator: tuple[float, ...] = field(init=False)

    def __init__(self, coefficients):
        coeffs = tuple(float(c) for c in coefficients)
        if len(coeffs) < 2:
            raise ValueError("polynomial must have degree >= 1")
        if coeffs[-1] == 0.0:
            raise ValueError("leading coefficient must be nonzero")
        if not all(math.isfinite(c) for c in coeffs):
            raise ValueError("coefficients must be finite")
        object.__setattr__(self, "coefficients", coeffs)
        object.__setattr__(
            self, "derivative", tuple(i * c for i, c in enumerate(coeffs) if i > 0)
        )
        object.__setattr__(
            self, "numerator", tuple((i - 1) * c for i, c in enumerate(coeffs))
        )

    @property
    def degree(self) -> int:
        return len(self.coefficients) - 1

    def f(self, x: float) -> float:
        return _horner(self.coefficients[::-1], x)

    def fprime(self, x: float) -> float:
        return _horner(self.derivative[::-1], x)

    def step_fn(self, pole_epsilon: float = 1e-300):
        """Fused Newton update closure; raises DerivativeZero at poles.

        The update is evaluated as the single fraction
        (x*f'(x) - f(x)) / f'(x), which reduces to the per-polynomial
        recursions the experiments are defined by, e.g. (x^2+2)/(2x) for
        x^2-2 and (x^2-1)/(2x) for x^2+1.  Degrees 2 and 4 are unrolled;
        the generic path runs the same Horner recurrence, so all variants
        agree bit-for-bit.
        """
        pe = float(pole_epsilon)
        ns = self.numerator[::-1]
        ds = self.derivative[::-1]
        if self.degree == 2:
            n2, n1, n0 = ns
            b1, b0 = ds

            def step(x: float) -> float:
                fpx = b1 * x + b0
                if -pe <= fpx <= pe:
                    raise DerivativeZero(x, fpx)
                return ((n2 * x + n1) * x + n0) / fpx

        elif self.degree == 4:
            n4, n3, n2, n1, n0 = ns
            b3, b2, b1, b0 = ds

            def step(x: float) -> float:
                fpx = ((b3 * x + b2) * x + b1) * x + b0
                if -pe <= fpx <= pe:
                    raise DerivativeZero(x, fpx)
                return ((((n4 * x + n3) * x + n2) * x + n1) * x + n0) / fpx

        else:

            def step(x: float) -> float:
                fpx = _horner(ds, x)
                if -pe <= fpx <= pe:
                    raise DerivativeZero(x, fpx)
                return _horner(ns, x) / fpx

        return step


def newton_step(problem: PolynomialProblem, x: float, pole_epsilon: float = 1e-300) -> float:
    """One application of the map x - f(x)/f'(x).

    Evaluated as (x*f'(x) - f(x)) / f'(x): a single division, matching the
    explicit recursions that define the chaotic-orbit experiments.
    """
    fpx = problem.fprime(x)
    if -pole_epsilon <= fpx <= pole_epsilon:
        raise DerivativeZero(x, fpx)
    return _horner(problem.numerator[::-1], x) / fpx


def overlap_converged(prev: float, next_value: float, tol: float) -> bool:
    """Mixed absolute/relative stopping test |next - prev| <= tol*(1+|prev|)."""
    if tol <= 0:
        raise ValueError("tol must be positive")
    return abs(next_value - prev) <= tol * (1.0 + abs(prev))


@dataclass(frozen=True)
class IterationPolicy:
    """Bounds governing orbit generation."""

    max_steps: int = 100
    convergence_tol: float = 1e-12
    overflow_bound: float = 1e300
    pole_epsilon: float = 1e-300

    def __post_init__(self):
        if self.max_steps < 1:
            raise ValueError("max_steps must be >= 1")
        if not (self.convergence_tol > 0 and self.overflow_bound > 0 and self.pole_epsilon > 0):
            raise ValueError("tolerances and bounds must be strictly positive")


class OrbitStatus(enum.Enum):
    RUNNING = "running"
    CONVERGED = "converged"
    POLE_HIT = "pole_hit"
    OVERFLOWED = "overflowed"


@dataclass(frozen=True)
class Orbit:
    """A recorded forward orbit.

    ``iterates[0]`` is the start.  For CONVERGED, ``step`` indexes the
    iterate at which the overlap criterion first held and ``value`` is that
    iterate.  For POLE_HIT / OVERFLOWED, ``step`` indexes the last recorded
    iterate (the one whose successor could not be represented).
    """

    start: float
    iterates: tuple[float, ...]
    status: OrbitStatus
    step: int | None = None
    value: float | None = None


def iterate_orbit(problem: PolynomialProblem, x0: float, policy: IterationPolicy) -> Orbit:
    """Iterate the map from x0 until convergence, pole, overflow, or max_steps."""
    if not math.isfinite(x0):
        raise ValueError("x0 must be finite")
    step = problem.step_fn(policy.pole_epsilon)
    bound = policy.overflow_bound
    tol = policy.convergence_tol
    xs = [float(x0)]
    x = xs[0]
    for i in range(1, policy.max_steps + 1):
        try:
            y = step(x)
        except DerivativeZero:
            return Orbit(x0, tuple(xs), OrbitStatus.POLE_HIT, step=i - 1)
        if not (-bound <= y <= bound):  # also catches NaN
            return Orbit(x0, tuple(xs), OrbitStatus.OVERFLOWED, step=i - 1)
        xs.append(y)
        if overlap_converged(x, y, tol):
            return Orbit(x0, tuple(xs), OrbitStatus.CONVERGED, step=i, value=y)
        x = y
    return Orbit(x0, tuple(xs), OrbitStatus.RUNNING)


def multi_start_solve(
    problem: PolynomialProblem,
    starts,
    policy: IterationPolicy,
    cluster_radius: float = 1e-6,
):
    """Run orbits from many starts and cluster the converged endpoints.

    Returns ``(roots, non_converged)`` where ``roots`` maps a cluster mean
    to the number of starts that converged into it.  Clustering is by gaps
    larger than ``cluster_radius`` in the sorted endpoint sequence, coarse
    enough to merge quadratically converged runs and fine enough to keep
    distinct roots apart.
    """
    starts = list(starts)
    if not starts:
        raise ValueError("starts must be non-empty")
    endpoints = []
    non_converged = 0
    for x0 in starts:
        orbit = iterate_orbit(problem, x0, policy)
        if orbit.status is OrbitStatus.CONVERGED:
            endpoints.append(orbit.value)
        else:
            non_converged += 1
    clusters: list[list[float]] = []
    for v in sorted(endpoints):
        if clusters and v - clusters[-1][-1] <= cluster_radius:
            clusters[-1].append(v)
        else:
            clusters.append([v])
    roots = {math.fsum(c) / len(c): len(c) for c in clusters}
    return roots, non_converged
