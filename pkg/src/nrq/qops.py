"""Operators on periodic grids: shift, frequency, wave-vector, tight binding.

Everything is dense complex linear algebra on an N-point cyclic grid.  The
frequency and wave-vector operators are built spectrally from the DFT
eigenbasis of the shift operator, so their spectra are the analytic mode
values by construction.
"""

import math
from dataclasses import dataclass

import numpy as np


class DimensionMismatch(ValueError):
    pass


class NonHermitianInput(ValueError):
    pass


class HoppingRangeTooLarge(ValueError):
    pass


class BadRepresentation(ValueError):
    pass


MAX_DENSE_N = 4096

HERMITIAN_TOL = 1e-12
UNITARY_TOL = 1e-12
NORM_TOL = 1e-10


@dataclass(frozen=True)
class NaturalUnits:
    """Unit system; defaults make energy identical to frequency."""

    hbar: float = 1.0
    c: float = 1.0
    mass_scale: float = 1.0

    def __post_init__(self):
        if not (self.hbar > 0 and self.c > 0 and self.mass_scale > 0):
            raise ValueError("all unit scales must be positive")


@dataclass(frozen=True)
class Grid:
    """Periodic grid of n_points sites with uniform spacing (dt or dx)."""

    n_points: int
    spacing: float = 1.0

    def __post_init__(self):
        if self.n_points < 2:
            raise ValueError("n_points must be >= 2")
        if self.n_points > MAX_DENSE_N:
            raise ValueError(f"n_points capped at {MAX_DENSE_N} for dense algebra")
        if not self.spacing > 0:
            raise ValueError("spacing must be positive")

    @property
    def extent(self) -> float:
        return self.n_points * self.spacing

    def positions(self) -> np.ndarray:
        return np.arange(self.n_points) * self.spacing


class StateVector:
    """Normalized complex amplitude vector on a periodic grid."""

    def __init__(self, amplitudes, normalize: bool = True):
        a = np.asarray(amplitudes, dtype=complex)
        if a.ndim != 1 or a.size < 2:
            raise ValueError("amplitudes must be a 1-D vector of length >= 2")
        nrm = np.linalg.norm(a)
        if normalize:
            if nrm == 0.0:
                raise ValueError("cannot normalize the zero vector")
            a = a / nrm
        elif abs(nrm * nrm - 1.0) > NORM_TOL:
            raise ValueError(f"state norm^2 deviates from 1 by {abs(nrm*nrm-1.0):.3e}")
        self.amplitudes = a

    @property
    def dim(self) -> int:
        return self.amplitudes.size

    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def overlap(self, other: "StateVector") -> complex:
        """Inner product <self|other>."""
        if self.dim != other.dim:
            raise DimensionMismatch("state dimensions differ")
        return complex(np.vdot(self.amplitudes, other.amplitudes))


class LinearOp:
    """Dense complex square matrix with lazily verified structure metadata."""

    def __init__(self, matrix, hermitian: bool | None = None, unitary: bool | None = None):
        m = np.asarray(matrix, dtype=complex)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise ValueError("matrix must be square")
        self.matrix = m
        self.declared_hermitian = hermitian
        self.declared_unitary = unitary
        self._herm_res: float | None = None
        self._unit_res: float | None = None
        self._eig = None

    @property
    def n(self) -> int:
        return self.matrix.shape[0]

    def hermiticity_residual(self) -> float:
        if self._herm_res is None:
            self._herm_res = float(np.abs(self.matrix - self.matrix.conj().T).max())
        return self._herm_res

    def unitarity_residual(self) -> float:
        if self._unit_res is None:
            a = self.matrix.conj().T @ self.matrix
            self._unit_res = float(np.abs(a - np.eye(self.n)).max())
        return self._unit_res

    def is_hermitian(self, tol: float = HERMITIAN_TOL) -> bool:
        return self.hermiticity_residual() <= tol

    def is_unitary(self, tol: float = UNITARY_TOL) -> bool:
        return self.unitarity_residual() <= tol

    def apply(self, state: StateVector) -> np.ndarray:
        if state.dim != self.n:
            raise DimensionMismatch("operator and state dimensions differ")
        return self.matrix @ state.amplitudes

    def eigh(self):
        """Cached eigendecomposition; requires Hermiticity."""
        if self._eig is None:
            if not self.is_hermitian():
                raise NonHermitianInput(
                    f"hermiticity residual {self.hermiticity_residual():.3e} exceeds {HERMITIAN_TOL}"
                )
            self._eig = np.linalg.eigh(self.matrix)
        return self._eig


def _check_same_dim(a: LinearOp, b: LinearOp):
    if a.n != b.n:
        raise DimensionMismatch("operator dimensions differ")


def _symmetrize(m: np.ndarray) -> np.ndarray:
    return 0.5 * (m + m.conj().T)


def _dft_matrix(grid: Grid) -> np.ndarray:
    """Columns are the shift-operator eigenstates (DFT modes)."""
    n = grid.n_points
    idx = np.arange(n)
    return np.exp(2j * np.pi * np.outer(idx, idx) / n) / math.sqrt(n)


def shift_operator(grid: Grid) -> LinearOp:
    """Cyclic permutation mapping basis site i to i+1 (mod N)."""
    n = grid.n_points
    m = np.zeros((n, n), dtype=complex)
    m[(np.arange(n) + 1) % n, np.arange(n)] = 1.0
    return LinearOp(m, unitary=True)


def frequency_values(grid: Grid) -> np.ndarray:
    """Mode frequencies 2*pi*n/(N*dt) for n = 0..N-1."""
    n = grid.n_points
    return 2.0 * np.pi * np.arange(n) / (n * grid.spacing)


def wavevector_values(grid: Grid) -> np.ndarray:
    """Mode wave numbers 2*pi*j/L folded onto the symmetric branch (-pi/dx, pi/dx]."""
    n = grid.n_points
    j = np.arange(n)
    j = np.where(j <= n // 2, j, j - n)
    return 2.0 * np.pi * j / grid.extent


def fourier_eigenstate(grid: Grid, n: int) -> StateVector:
    """Shift eigenstate with amplitudes exp(i*w_n*t_l)/sqrt(N)."""
    if not 0 <= n < grid.n_points:
        raise IndexError(f"mode index {n} outside 0..{grid.n_points - 1}")
    w = frequency_values(grid)[n]
    amps = np.exp(1j * w * grid.positions()) / math.sqrt(grid.n_points)
    return StateVector(amps, normalize=False)


def _spectral_operator(grid: Grid, eigenvalues: np.ndarray) -> LinearOp:
    f = _dft_matrix(grid)
    m = f @ (eigenvalues[:, None] * f.conj().T)
    return LinearOp(_symmetrize(m), hermitian=True)


def frequency_operator(grid: Grid) -> LinearOp:
    """Spectral realization of i*d/dt: DFT modes with eigenvalues 2*pi*n/T."""
    return _spectral_operator(grid, frequency_values(grid))


def wavevector_operator(grid: Grid) -> LinearOp:
    """Spectral realization of -i*d/dx with symmetric-branch eigenvalues."""
    return _spectral_operator(grid, wavevector_values(grid))


def position_operator(grid: Grid) -> LinearOp:
    return LinearOp(np.diag(grid.positions().astype(complex)), hermitian=True)


def expectation(op: LinearOp, state: StateVector) -> complex:
    """<psi|O|psi>; real up to rounding when the operator is Hermitian."""
    return complex(np.vdot(state.amplitudes, op.apply(state)))


def projector(onto: StateVector) -> LinearOp:
    """Rank-1 projector |psi><psi|."""
    a = onto.amplitudes
    return LinearOp(np.outer(a, a.conj()), hermitian=True)


def born_probability(state: StateVector, outcome: StateVector) -> float:
    """|<outcome|state>|^2."""
    return abs(outcome.overlap(state)) ** 2


def commutator(a: LinearOp, b: LinearOp) -> LinearOp:
    _check_same_dim(a, b)
    return LinearOp(a.matrix @ b.matrix - b.matrix @ a.matrix)


def uncertainty_product(state: StateVector, a: LinearOp, b: LinearOp) -> float:
    """sigma_A * sigma_B with sigma^2 = <A^2> - <A>^2; Hermitian inputs only."""
    for op in (a, b):
        if not op.is_hermitian():
            raise NonHermitianInput(
                f"hermiticity residual {op.hermiticity_residual():.3e} exceeds {HERMITIAN_TOL}"
            )

    def sigma(op: LinearOp) -> float:
        v = op.apply(state)
        mean = float(np.vdot(state.amplitudes, v).real)
        var = float(np.vdot(v, v).real) - mean * mean
        return math.sqrt(max(var, 0.0))

    return sigma(a) * sigma(b)


def gaussian_packet(grid: Grid, center: float, sigma: float, carrier: float = 0.0) -> StateVector:
    """Normalized Gaussian wave packet exp(-(x-c)^2/(4 sigma^2) + i k0 x)."""
    if not sigma > 0:
        raise ValueError("sigma must be positive")
    x = grid.positions()
    amps = np.exp(-((x - center) ** 2) / (4.0 * sigma * sigma) + 1j * carrier * x)
    return StateVector(amps)


def tight_binding_hamiltonian(grid: Grid, onsite, hoppings) -> LinearOp:
    """Circulant-plus-diagonal operator with onsite terms and ranged hoppings.

    Column i carries -t_r at row i+r and -conj(t_r) at row i-r, which makes
    the matrix Hermitian by construction; for constant onsite eps and a
    single real t_1 the spectrum is eps - 2*t_1*cos(k*dx).
    """
    n = grid.n_points
    hoppings = [complex(t) for t in hoppings]
    if len(hoppings) >= n / 2:
        raise HoppingRangeTooLarge(f"hopping range {len(hoppings)} must be < n/2 = {n / 2}")
    if callable(onsite):
        eps = np.array([float(onsite(x)) for x in grid.positions()])
    else:
        eps = np.full(n, float(onsite))
    m = np.diag(eps.astype(complex))
    eye = np.eye(n)
    for r, t in enumerate(hoppings, start=1):
        fwd = np.roll(eye, r, axis=0)  # maps site i -> i+r
        m -= t * fwd + np.conj(t) * fwd.T
    return LinearOp(m, hermitian=True)


def evolve(
    state: StateVector, hamiltonian: LinearOp, time: float, units: NaturalUnits = NaturalUnits()
) -> StateVector:
    """Apply exp(-i*H*t/hbar) through the cached eigendecomposition of H."""
    if state.dim != hamiltonian.n:
        raise DimensionMismatch("operator and state dimensions differ")
    w, v = hamiltonian.eigh()
    phases = np.exp(-1j * w * (time / units.hbar))
    out = v @ (phases * (v.conj().T @ state.amplitudes))
    return StateVector(out, normalize=False)


# ---------------------------------------------------------------------------
# relativistic checks


def klein_gordon_dispersion(k, mass: float, units: NaturalUnits = NaturalUnits()):
    """Positive branch omega = sqrt(c^2 k^2 + (m c^2 / hbar)^2)."""
    if mass < 0:
        raise ValueError("mass must be >= 0")
    k = np.asarray(k, dtype=float)
    rest = mass * units.c * units.c / units.hbar
    out = np.sqrt(units.c * units.c * k * k + rest * rest)
    return float(out) if out.ndim == 0 else out


def klein_gordon_plane_wave_residual(
    grid: Grid, mode: int, mass: float, units: NaturalUnits = NaturalUnits()
) -> float:
    """Residual of the discretized wave equation on a grid plane wave.

    Spatial derivatives are spectral (k^2 on the symmetric branch) and the
    second time derivative of exp(-i w t) is inserted analytically, so the
    residual is pure rounding when omega satisfies the dispersion relation.
    """
    if not 0 <= mode < grid.n_points:
        raise IndexError(f"mode index {mode} outside 0..{grid.n_points - 1}")
    k = wavevector_values(grid)[mode]
    w = klein_gordon_dispersion(k, mass, units)
    ksq = _spectral_operator(grid, wavevector_values(grid) ** 2)
    psi = fourier_eigenstate(grid, mode)
    c, hbar = units.c, units.hbar
    resid = ksq.apply(psi) - (w * w / (c * c)) * psi.amplitudes + (mass * c / hbar) ** 2 * psi.amplitudes
    return float(np.abs(resid).max())


_PAULI = (
    np.array([[0, 1], [1, 0]], dtype=complex),
    np.array([[0, -1j], [1j, 0]], dtype=complex),
    np.array([[1, 0], [0, -1]], dtype=complex),
)


def dirac_alpha_beta():
    """Standard Dirac-Pauli representation: alpha_i off-diagonal, beta diagonal."""
    zero = np.zeros((2, 2), dtype=complex)
    alphas = tuple(np.block([[zero, s], [s, zero]]) for s in _PAULI)
    beta = np.diag([1.0, 1.0, -1.0, -1.0]).astype(complex)
    return alphas, beta


@dataclass(frozen=True)
class DiracReport:
    algebra_residuals: dict
    dispersion_eigenvalues: np.ndarray


def dirac_check(
    k,
    mass: float,
    units: NaturalUnits = NaturalUnits(),
    alphas=None,
    beta=None,
    tol: float = HERMITIAN_TOL,
) -> DiracReport:
    """Verify the anticommutation algebra and diagonalize c*alpha.k + m c^2 beta.

    The eigenvalues come out as +/- sqrt(c^2 k^2 + m^2 c^4), each doubly
    degenerate, matching the squared (Klein-Gordon) dispersion.
    """
    if alphas is None and beta is None:
        alphas, beta = dirac_alpha_beta()
    elif alphas is None or beta is None:
        raise ValueError("supply both alphas and beta, or neither")
    alphas = [np.asarray(a, dtype=complex) for a in alphas]
    beta = np.asarray(beta, dtype=complex)
    if len(alphas) != 3 or any(a.shape != (4, 4) for a in alphas) or beta.shape != (4, 4):
        raise BadRepresentation("need three 4x4 alpha matrices and one 4x4 beta")
    eye = np.eye(4)
    mats = alphas + [beta]
    res = {
        "hermiticity": max(float(np.abs(m - m.conj().T).max()) for m in mats),
        "alpha_squares": max(float(np.abs(a @ a - eye).max()) for a in alphas),
        "beta_square": float(np.abs(beta @ beta - eye).max()),
        "alpha_anticommute": max(
            float(np.abs(alphas[i] @ alphas[j] + alphas[j] @ alphas[i]).max())
            for i in range(3)
            for j in range(i + 1, 3)
        ),
        "alpha_beta_anticommute": max(
            float(np.abs(a @ beta + beta @ a).max()) for a in alphas
        ),
    }
    worst = max(res.values())
    if worst > tol:
        raise BadRepresentation(f"algebra residual {worst:.3e} exceeds {tol}")
    kvec = np.asarray(k, dtype=float)
    if kvec.shape != (3,):
        raise ValueError("k must be a 3-vector")
    c = units.c
    h = c * sum(kv * a for kv, a in zip(kvec, alphas)) + mass * c * c * beta
    eigs = np.linalg.eigvalsh(h)
    return DiracReport(res, eigs)


# ---------------------------------------------------------------------------
# residual suite


def ops_check(
    n: int,
    spacing: float = 1.0,
    seed: int = 0,
    evolve_steps: int = 1000,
) -> dict:
    """Residual report for the operator stack on an n-point grid."""
    grid = Grid(n, spacing)
    t = shift_operator(grid)
    f = _dft_matrix(grid)
    lam = np.exp(-1j * frequency_values(grid) * grid.spacing)
    dft_residual = float(np.abs(t.matrix @ f - f * lam[None, :]).max())
    power = np.linalg.matrix_power(t.matrix, n)
    freq = frequency_operator(grid)
    wave = wavevector_operator(grid)
    # the hopping range must stay below n/2, so the 2-site ring is onsite-only
    tb = tight_binding_hamiltonian(grid, 2.0, [1.0] if n > 2 else [])

    rng = np.random.default_rng(seed)
    psi = StateVector(rng.normal(size=n) + 1j * rng.normal(size=n))
    born_sum = sum(born_probability(psi, fourier_eigenstate(grid, m)) for m in range(n))

    state = psi
    drift = 0.0
    for _ in range(evolve_steps):
        state = evolve(state, freq, 0.05)
        drift = max(drift, abs(state.norm() ** 2 - 1.0))
    once = evolve(psi, freq, 0.35)
    twice = evolve(evolve(psi, freq, 0.2), freq, 0.15)
    composition = float(np.abs(once.amplitudes - twice.amplitudes).max())

    return {
        "n": n,
        "shift_unitarity": t.unitarity_residual(),
        "shift_power_identity": float(np.abs(power - np.eye(n)).max()),
        "dft_eigenpair": dft_residual,
        "frequency_hermiticity": freq.hermiticity_residual(),
        "wavevector_hermiticity": wave.hermiticity_residual(),
        "tight_binding_hermiticity": tb.hermiticity_residual(),
        "born_sum_deviation": abs(born_sum - 1.0),
        "evolve_norm_drift": drift,
        "evolve_composition": composition,
    }
