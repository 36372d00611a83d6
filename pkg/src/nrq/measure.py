"""Visit-frequency densities, cycle finding, and the two-well interference run.

Long Newton-map orbits are binned into window-normalized histograms and
compared against analytic stationary densities; cycles of the map are
located by bracketing sign changes of the iterated map minus identity.
"""

import math
from dataclasses import dataclass
from decimal import Decimal
from fractions import Fraction

import numpy as np
from scipy.integrate import quad

from .newton import DerivativeZero, PolynomialProblem, newton_step


class InvalidRange(ValueError):
    pass


@dataclass(eq=False)
class EmpiricalDensity:
    """Binned visit-frequency histogram with out-of-range mass tracked.

    The normalized density integrates to exactly 1 over [lo, hi]; mass
    outside the window is kept in ``below_count`` / ``above_count`` so that
    ``total`` is conserved.  Counts form a commutative monoid under
    ``merge``, which is what makes chunked or parallel accumulation exact.
    """

    lo: float
    hi: float
    bins: int
    counts: np.ndarray
    below_count: int = 0
    above_count: int = 0
    restarts: int = 0

    def __post_init__(self):
        if not (math.isfinite(self.lo) and math.isfinite(self.hi) and self.lo < self.hi):
            raise InvalidRange(f"bad range [{self.lo}, {self.hi}]")
        if self.bins < 2:
            raise ValueError("bins must be >= 2")
        self.counts = np.asarray(self.counts, dtype=np.int64)
        if self.counts.shape != (self.bins,):
            raise ValueError("counts length must equal bins")
        if (self.counts < 0).any() or self.below_count < 0 or self.above_count < 0:
            raise ValueError("counts must be non-negative")

    @property
    def bin_width(self) -> float:
        return (self.hi - self.lo) / self.bins

    @property
    def in_range(self) -> int:
        return int(self.counts.sum())

    @property
    def total(self) -> int:
        return self.in_range + self.below_count + self.above_count

    def edges(self) -> np.ndarray:
        return np.linspace(self.lo, self.hi, self.bins + 1)

    def centers(self) -> np.ndarray:
        e = self.edges()
        return 0.5 * (e[:-1] + e[1:])

    def densities(self) -> np.ndarray:
        """Per-bin density, normalized to unit mass over [lo, hi]."""
        n = self.in_range
        if n == 0:
            return np.zeros(self.bins)
        return self.counts / (n * self.bin_width)

    def merge(self, other: "EmpiricalDensity") -> "EmpiricalDensity":
        if (self.lo, self.hi, self.bins) != (other.lo, other.hi, other.bins):
            raise ValueError("cannot merge densities with different binning")
        return EmpiricalDensity(
            self.lo,
            self.hi,
            self.bins,
            self.counts + other.counts,
            self.below_count + other.below_count,
            self.above_count + other.above_count,
            self.restarts + other.restarts,
        )

    @classmethod
    def from_samples(cls, samples, lo: float, hi: float, bins: int, restarts: int = 0):
        if not lo < hi:
            raise InvalidRange(f"bad range [{lo}, {hi}]")
        arr = np.asarray(samples, dtype=float)
        counts, _ = np.histogram(arr, bins=bins, range=(lo, hi))
        below = int((arr < lo).sum())
        above = int((arr > hi).sum())
        return cls(lo, hi, bins, counts, below, above, restarts)


def accumulate_density(
    problem: PolynomialProblem,
    x0: float | None,
    n0: int,
    n: int,
    lo: float,
    hi: float,
    bins: int,
    seed: int = 0,
    pole_epsilon: float = 1e-300,
    overflow_bound: float = 1e300,
) -> EmpiricalDensity:
    """Bin the orbit iterates with index in (n0, n].

    Iterates up to n0 are burn-in and discarded.  On a pole or overflow the
    chain restarts from a fresh uniform draw on [lo, hi] (seeded PCG64);
    the restart value enters the stream as that step's iterate and the
    restart count is reported on the result.  If ``x0`` is None the start
    is drawn from the same generator.
    """
    if not lo < hi:
        raise InvalidRange(f"bad range [{lo}, {hi}]")
    if bins < 2:
        raise ValueError("bins must be >= 2")
    if not (n > n0 >= 0):
        raise ValueError("need n > n0 >= 0")
    rng = np.random.default_rng(seed)
    x = float(rng.uniform(lo, hi)) if x0 is None else float(x0)
    step = problem.step_fn(pole_epsilon)
    bound = overflow_bound
    restarts = 0
    xs: list[float] = []
    append = xs.append
    i = 0
    while i < n:
        try:
            while i < n:
                y = step(x)
                i += 1
                if -bound <= y <= bound:
                    x = y
                else:
                    x = float(rng.uniform(lo, hi))
                    restarts += 1
                append(x)
        except DerivativeZero:
            i += 1
            x = float(rng.uniform(lo, hi))
            restarts += 1
            append(x)
    return EmpiricalDensity.from_samples(xs[n0:], lo, hi, bins, restarts=restarts)


def cauchy_density(y):
    """Standard Cauchy/Lorentzian density 1/(pi*(1+y^2))."""
    y = np.asarray(y, dtype=float)
    out = 1.0 / (np.pi * (1.0 + y * y))
    return float(out) if out.ndim == 0 else out


def cauchy_quantile(u):
    """Inverse CDF of the standard Cauchy: tan(pi*(u - 1/2))."""
    u = np.asarray(u, dtype=float)
    out = np.tan(np.pi * (u - 0.5))
    return float(out) if out.ndim == 0 else out


def _window_mass(analytic, lo: float, hi: float) -> float:
    # interior breakpoints keep QUADPACK from overlooking a narrow peak
    interior = np.linspace(lo, hi, 17)[1:-1]
    mass, _ = quad(analytic, lo, hi, limit=200, points=interior)
    if mass <= 0:
        raise ValueError("analytic density has non-positive mass on the window")
    return mass


def density_distance(emp: EmpiricalDensity, analytic, metric: str = "l1") -> float:
    """Distance between a histogram and an analytic density on the window.

    Both sides are normalized to unit mass over [lo, hi] before comparison
    (the analytic window mass is computed by quadrature), so the distance
    measures shape mismatch, not out-of-window mass.
    """
    if emp.in_range == 0:
        raise ValueError("empirical density has no in-range mass")
    lo, hi = emp.lo, emp.hi
    mass = _window_mass(analytic, lo, hi)
    m = metric.lower()
    if m == "l1":
        ref = np.array([float(analytic(c)) for c in emp.centers()]) / mass
        return float(np.abs(emp.densities() - ref).sum() * emp.bin_width)
    if m in ("ks", "kolmogorovsmirnov", "kolmogorov-smirnov"):
        edges = emp.edges()
        bin_masses = [quad(analytic, a, b, limit=200)[0] for a, b in zip(edges[:-1], edges[1:])]
        acdf = np.concatenate([[0.0], np.cumsum(bin_masses)]) / mass
        ecdf = np.concatenate([[0.0], np.cumsum(emp.counts)]) / emp.in_range
        return float(np.abs(ecdf - acdf).max())
    raise ValueError(f"unknown metric {metric!r}")


# ---------------------------------------------------------------------------
# cycles


@dataclass(frozen=True)
class Cycle:
    """A periodic orbit: applying the map ``period`` times returns to start."""

    period: int
    points: tuple[float, ...]
    residual: float


@dataclass(frozen=True)
class CycleScan:
    """Cycles found on a search range, plus subintervals excluded as poles."""

    cycles: tuple[Cycle, ...]
    pole_intervals: tuple[tuple[float, float], ...]


def _vector_step(problem: PolynomialProblem, x: np.ndarray) -> np.ndarray:
    """Vectorized Newton update (x*f'-f)/f'; poles and overflows become NaN."""
    ns = problem.numerator[::-1]
    ds = problem.derivative[::-1]
    with np.errstate(all="ignore"):
        num = np.zeros_like(x)
        for c in ns:
            num = num * x + c
        fp = np.zeros_like(x)
        for c in ds:
            fp = fp * x + c
        y = num / fp
        y[~np.isfinite(y)] = np.nan
    return y


def _iterate_vector(problem: PolynomialProblem, xs: np.ndarray, times: int) -> np.ndarray:
    y = xs.astype(float).copy()
    for _ in range(times):
        y = _vector_step(problem, y)
    return y


def _iterate_scalar(problem: PolynomialProblem, x: float, times: int) -> float | None:
    """O^times(x), or None if the composition hits a pole or overflows."""
    for _ in range(times):
        try:
            x = newton_step(problem, x)
        except DerivativeZero:
            return None
        if not math.isfinite(x):
            return None
    return x


def find_cycles(
    problem: PolynomialProblem,
    period: int,
    lo: float,
    hi: float,
    grid_points: int,
    residual_tol: float = 1e-10,
    distinct_tol: float = 1e-9,
) -> CycleScan:
    """Locate period-``period`` cycles of the map on [lo, hi].

    Sign changes of g(x) = O^period(x) - x on the evaluation grid are
    refined by bisection.  Brackets that refine onto a pole of O^period
    (residual stays huge) or whose endpoints cannot be evaluated are
    reported in ``pole_intervals``.  Solutions whose minimal period
    properly divides ``period`` are excluded, and rotations of one cycle
    are deduplicated.
    """
    if period < 1:
        raise ValueError("period must be >= 1")
    if grid_points < 2:
        raise ValueError("grid_points must be >= 2")
    if not lo < hi:
        raise InvalidRange(f"bad range [{lo}, {hi}]")
    xs = np.linspace(lo, hi, grid_points)
    g = _iterate_vector(problem, xs, period) - xs
    finite = np.isfinite(g)

    pole_intervals: list[tuple[float, float]] = []
    roots: list[tuple[float, float, float]] = []  # (root, bracket_lo, bracket_hi)
    for i in range(grid_points - 1):
        if not (finite[i] and finite[i + 1]):
            pole_intervals.append((float(xs[i]), float(xs[i + 1])))
            continue
        if g[i] == 0.0:
            roots.append((float(xs[i]), float(xs[i]), float(xs[i])))
            continue
        if g[i] * g[i + 1] >= 0.0:
            continue
        a, b = float(xs[i]), float(xs[i + 1])
        ga = g[i]
        bad = False
        for _ in range(200):
            m = 0.5 * (a + b)
            ym = _iterate_scalar(problem, m, period)
            if ym is None:
                bad = True
                break
            gm = ym - m
            if ga * gm <= 0.0:
                b = m
            else:
                a, ga = m, gm
            if b - a <= 1e-15 * max(1.0, abs(m)):
                break
        if bad:
            pole_intervals.append((float(xs[i]), float(xs[i + 1])))
            continue
        roots.append((0.5 * (a + b), float(xs[i]), float(xs[i + 1])))

    cycles: list[Cycle] = []
    for r, blo, bhi in roots:
        pts = [r]
        ok = True
        for _ in range(period - 1):
            nxt = _iterate_scalar(problem, pts[-1], 1)
            if nxt is None:
                ok = False
                break
            pts.append(nxt)
        if not ok:
            pole_intervals.append((blo, bhi))
            continue
        # minimal-period check: any proper divisor d with O^d(r) ~ r disqualifies
        minimal = True
        for d in range(1, period):
            if period % d == 0:
                yd = _iterate_scalar(problem, r, d)
                if yd is not None and abs(yd - r) <= distinct_tol:
                    minimal = False
                    break
        if not minimal:
            continue
        residual = 0.0
        for p in pts:
            yp = _iterate_scalar(problem, p, period)
            if yp is None:
                ok = False
                break
            residual = max(residual, abs(yp - p))
        if not ok or residual > residual_tol:
            # a sign change that refined onto a pole crossing of O^period
            pole_intervals.append((blo, bhi))
            continue
        srt = np.sort(pts)
        dup = any(
            len(c.points) == len(pts) and np.max(np.abs(np.sort(c.points) - srt)) <= distinct_tol
            for c in cycles
        )
        if dup:
            continue
        start = int(np.argmin(pts))
        canonical = tuple(pts[start:] + pts[:start])
        cycles.append(Cycle(period, canonical, residual))

    cycles.sort(key=lambda c: c.points[0])
    return CycleScan(tuple(cycles), tuple(pole_intervals))


# ---------------------------------------------------------------------------
# stationarity and interference


def pushforward_residual(
    problem: PolynomialProblem,
    density,
    quantile,
    sample_count: int,
    seed: int = 0,
    lo: float = -10.0,
    hi: float = 10.0,
    bins: int = 200,
) -> float:
    """L1 distance between one-step pushforward samples and the analytic density.

    Samples are drawn by inverse-CDF from ``quantile``, pushed through one
    Newton step, and binned on [lo, hi]; a zero distance (up to Monte Carlo
    noise) certifies that ``density`` is a fixed point of the transfer
    operator at eigenvalue one.
    """
    if sample_count < 1:
        raise ValueError("sample_count must be >= 1")
    rng = np.random.default_rng(seed)
    u = rng.random(sample_count)
    x = np.asarray(quantile(u), dtype=float)
    y = _vector_step(problem, x)
    y = y[np.isfinite(y)]
    emp = EmpiricalDensity.from_samples(y, lo, hi, bins)
    return density_distance(emp, density, metric="l1")


def interference_polynomial(delta: float) -> PolynomialProblem:
    """The two-well quartic (x^2 + delta)*((x-3)^2 + delta), expanded exactly.

    Expansion runs in rational arithmetic over delta's shortest decimal
    representation and converts to float once at the end, so the
    coefficients (9d + d^2, -6d, 9 + 2d, -6, 1) are correctly rounded and
    agree bit-for-bit with parsing the product form.
    """
    if not delta > 0:
        raise ValueError("delta must be positive")
    d = Fraction(Decimal(repr(float(delta))))
    coeffs = (9 * d + d * d, -6 * d, 9 + 2 * d, Fraction(-6), Fraction(1))
    return PolynomialProblem(tuple(float(c) for c in coeffs))


@dataclass(frozen=True)
class InterferenceConfig:
    """Settings for the two-well visit-density experiment."""

    delta: float
    iterations: int = 201000
    burn_in: int = 1000
    lo: float = -2.0
    hi: float = 5.0
    bins: int = 280
    x0: float | None = None

    def __post_init__(self):
        if not self.delta > 0:
            raise ValueError("delta must be positive")
        if not 0 <= self.burn_in < self.iterations:
            raise ValueError("need 0 <= burn_in < iterations")


def interference_experiment(config: InterferenceConfig, seed: int = 0) -> EmpiricalDensity:
    """Accumulate the visit density of the two-well quartic's Newton orbit."""
    problem = interference_polynomial(config.delta)
    return accumulate_density(
        problem,
        config.x0,
        config.burn_in,
        config.iterations,
        config.lo,
        config.hi,
        config.bins,
        seed=seed,
    )


def smoothed_densities(density: EmpiricalDensity, window: int = 5) -> np.ndarray:
    """Moving-average smoothing used before peak detection."""
    kernel = np.ones(window) / window
    return np.convolve(density.densities(), kernel, mode="same")


def peak_detect(density: EmpiricalDensity, min_prominence: float):
    """Local maxima of the 5-bin-smoothed density, filtered by prominence.

    A maximum is a bin (or equal-valued plateau, reported at its middle)
    strictly above both flanking values; prominence is the peak height
    minus the higher of the minima separating it from its neighboring
    peaks (or range ends).  Returns (center, height, prominence) triples
    in center order.
    """
    if min_prominence < 0:
        raise ValueError("min_prominence must be >= 0")
    s = smoothed_densities(density)
    centers = density.centers()
    idxs = []
    i = 1
    while i < len(s) - 1:
        if s[i] <= s[i - 1]:
            i += 1
            continue
        j = i
        while j + 1 < len(s) and s[j + 1] == s[i]:
            j += 1
        if j + 1 < len(s) and s[j + 1] < s[i]:
            idxs.append((i + j) // 2)
        i = j + 1
    out = []
    for j, i in enumerate(idxs):
        left_lo = idxs[j - 1] if j > 0 else 0
        right_hi = idxs[j + 1] + 1 if j + 1 < len(idxs) else len(s)
        left_min = s[left_lo:i].min() if i > left_lo else s[i]
        right_min = s[i + 1 : right_hi].min() if right_hi > i + 1 else s[i]
        prominence = float(s[i] - max(left_min, right_min))
        if prominence >= min_prominence:
            out.append((float(centers[i]), float(s[i]), prominence))
    return out


def half_width_at_half_max(density: EmpiricalDensity, center: float) -> float:
    """Half width at half maximum of the raw-density peak nearest ``center``.

    Crossing positions are linearly interpolated between bin centers.
    """
    dens = density.densities()
    centers = density.centers()
    i0 = int(np.argmin(np.abs(centers - center)))
    half = dens[i0] / 2.0
    if half <= 0:
        raise ValueError("peak height is zero")

    def cross(direction: int) -> float:
        j = i0
        while 0 <= j + direction < len(dens) and dens[j + direction] > half:
            j += direction
        if not 0 <= j + direction < len(dens):
            raise ValueError("half-maximum level not reached inside the range")
        a, b = j, j + direction
        frac = (dens[a] - half) / (dens[a] - dens[b])
        return float(centers[a] + frac * (centers[b] - centers[a]))

    return (cross(+1) - cross(-1)) / 2.0


def response_curve(d, k: float, phase: float, xi: float):
    """Damped sinusoid sin(k*d + phase) * exp(-d/xi) for separations d >= 0."""
    if not xi > 0:
        raise ValueError("xi must be positive")
    d = np.asarray(d, dtype=float)
    if (d < 0).any():
        raise ValueError("d must be >= 0")
    out = np.sin(k * d + phase) * np.exp(-d / xi)
    return float(out) if out.ndim == 0 else out
