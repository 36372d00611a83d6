"""Operator-layer tests: shift/DFT structure, uncertainty, dispersion checks."""

import math

import numpy as np
import pytest

from nrq import (
    BadRepresentation,
    DimensionMismatch,
    Grid,
    HoppingRangeTooLarge,
    LinearOp,
    NaturalUnits,
    NonHermitianInput,
    StateVector,
    born_probability,
    commutator,
    dirac_alpha_beta,
    dirac_check,
    evolve,
    expectation,
    fourier_eigenstate,
    frequency_operator,
    frequency_values,
    gaussian_packet,
    klein_gordon_dispersion,
    klein_gordon_plane_wave_residual,
    ops_check,
    position_operator,
    projector,
    shift_operator,
    tight_binding_hamiltonian,
    uncertainty_product,
    wavevector_operator,
    wavevector_values,
)


def test_grid_validation():
    with pytest.raises(ValueError):
        Grid(1)
    with pytest.raises(ValueError):
        Grid(8, 0.0)
    with pytest.raises(ValueError):
        Grid(8192)
    with pytest.raises(ValueError):
        NaturalUnits(hbar=0.0)


def test_state_normalization():
    s = StateVector([3.0, 4.0])
    assert s.norm() == pytest.approx(1.0, abs=1e-14)
    with pytest.raises(ValueError):
        StateVector([0.0, 0.0])
    with pytest.raises(ValueError):
        StateVector([1.0, 1.0], normalize=False)  # norm^2 = 2


def test_shift_swap_matrix():
    t = shift_operator(Grid(2))
    assert np.array_equal(t.matrix.real, [[0.0, 1.0], [1.0, 0.0]])
    eig = np.sort_complex(np.linalg.eigvals(t.matrix))
    assert np.allclose(eig, [-1.0, 1.0], atol=1e-12)


def test_shift_fourth_roots_of_unity():
    t = shift_operator(Grid(4, 1.0))
    eig = np.linalg.eigvals(t.matrix)
    expected = np.exp(-1j * frequency_values(Grid(4, 1.0)))  # {1, -i, -1, i}
    for value in expected:
        assert np.abs(eig - value).min() <= 1e-12


def test_shift_unitary_and_cyclic():
    for n in (2, 3, 8, 64):
        t = shift_operator(Grid(n))
        assert t.unitarity_residual() <= 1e-12
        power = np.linalg.matrix_power(t.matrix, n)
        assert np.abs(power - np.eye(n)).max() <= 1e-12


def test_fourier_eigenstate_two_point():
    s = fourier_eigenstate(Grid(2), 1)
    assert np.allclose(s.amplitudes, np.array([1.0, -1.0]) / math.sqrt(2.0), atol=1e-15)
    t = shift_operator(Grid(2))
    assert np.allclose(t.apply(s), -s.amplitudes, atol=1e-15)


def test_fourier_eigenstates_orthonormal():
    g = Grid(8)
    states = [fourier_eigenstate(g, n) for n in range(8)]
    gram = np.array([[abs(a.overlap(b)) for b in states] for a in states])
    assert np.abs(gram - np.eye(8)).max() <= 1e-12


def test_fourier_eigenpair_residual():
    g = Grid(8, 1.0)
    t = shift_operator(g)
    s = fourier_eigenstate(g, 3)
    lam = np.exp(-2j * np.pi * 3 / 8)
    assert np.abs(t.apply(s) - lam * s.amplitudes).max() <= 1e-12
    with pytest.raises(IndexError):
        fourier_eigenstate(g, 8)


def test_expectation_values():
    g = Grid(4)
    uniform = StateVector(np.ones(4))
    ident = LinearOp(np.eye(4))
    assert expectation(ident, uniform) == pytest.approx(1.0, abs=1e-14)
    basis0 = StateVector([1.0, 0.0, 0.0, 0.0])
    assert expectation(projector(basis0), uniform) == pytest.approx(0.25, abs=1e-14)
    diag = LinearOp(np.diag([0.0, 1.0, 2.0, 3.0]))
    assert expectation(diag, uniform) == pytest.approx(1.5, abs=1e-14)
    with pytest.raises(DimensionMismatch):
        expectation(diag, StateVector([1.0, 0.0]))


def test_projector_structure():
    e0 = StateVector([1.0, 0.0])
    p = projector(e0)
    assert np.allclose(p.matrix, [[1.0, 0.0], [0.0, 0.0]], atol=1e-15)
    plus = StateVector([1.0, 1.0])
    q = projector(plus)
    assert np.allclose(q.matrix, np.full((2, 2), 0.5), atol=1e-15)
    assert np.trace(q.matrix).real == pytest.approx(1.0, abs=1e-12)
    assert np.abs(q.matrix @ q.matrix - q.matrix).max() <= 1e-12


def test_born_probabilities():
    plus = StateVector([1.0, 1.0])
    e0 = StateVector([1.0, 0.0])
    e1 = StateVector([0.0, 1.0])
    assert born_probability(plus, plus) == pytest.approx(1.0, abs=1e-12)
    assert born_probability(e0, e1) == pytest.approx(0.0, abs=1e-15)
    assert born_probability(plus, e0) == pytest.approx(0.5, abs=1e-12)


def test_born_probabilities_sum_to_one():
    g = Grid(16)
    rng = np.random.default_rng(21)
    state = StateVector(rng.normal(size=16) + 1j * rng.normal(size=16))
    total = sum(born_probability(state, fourier_eigenstate(g, n)) for n in range(16))
    assert abs(total - 1.0) <= 1e-10


def test_frequency_operator_spectrum():
    g = Grid(4, 1.0)
    w = frequency_operator(g)
    assert w.hermiticity_residual() <= 1e-12
    eig = np.sort(np.linalg.eigvalsh(w.matrix))
    assert np.allclose(eig, sorted(2.0 * np.pi * np.arange(4) / 4.0), atol=1e-12)
    s = fourier_eigenstate(g, 2)
    assert np.abs(w.apply(s) - frequency_values(g)[2] * s.amplitudes).max() <= 1e-12


def test_frequency_forward_difference_converges_first_order():
    # i*(T - 1)/dt applied to a smooth state approaches the spectral form as O(dt)
    def difference_error(n):
        g = Grid(n, 1.0 / n)  # fixed total period 1
        t = shift_operator(g)
        d = 1j * (t.matrix - np.eye(n)) / g.spacing
        w = frequency_operator(g)
        psi = StateVector(
            fourier_eigenstate(g, 1).amplitudes + 0.5 * fourier_eigenstate(g, 2).amplitudes
        )
        return np.linalg.norm(d @ psi.amplitudes - w.apply(psi))

    e64, e128 = difference_error(64), difference_error(128)
    assert e64 / e128 == pytest.approx(2.0, rel=0.1)


def test_wavevector_plane_wave_eigenvalue():
    g = Grid(16, 0.5)
    k = wavevector_operator(g)
    assert k.hermiticity_residual() <= 1e-12
    for mode in (0, 3, 9, 15):
        s = fourier_eigenstate(g, mode)
        kv = wavevector_values(g)[mode]
        assert np.abs(k.apply(s) - kv * s.amplitudes).max() <= 1e-12


def test_wavevector_symmetric_branch():
    g = Grid(8, 1.0)
    values = wavevector_values(g)
    assert values.max() == pytest.approx(np.pi, abs=1e-12)
    assert values.min() == pytest.approx(-2.0 * np.pi * 3 / 8, abs=1e-12)


def test_wavevector_on_real_even_state():
    g = Grid(64, 1.0)
    x = g.positions()
    # even about the origin on the periodic grid: psi[l] = psi[N-l]
    amps = np.exp(-((np.minimum(x, 64.0 - x)) ** 2) / 30.0)
    state = StateVector(amps)
    k = wavevector_operator(g)
    assert abs(expectation(k, state)) <= 1e-12


def test_wavevector_gaussian_carrier():
    g = Grid(256, 1.0)
    k0 = 16 * 2.0 * np.pi / 256.0
    packet = gaussian_packet(g, 128.0, 8.0, carrier=k0)
    k = wavevector_operator(g)
    assert expectation(k, packet).real == pytest.approx(k0, rel=0.01)


def test_commutator_basics():
    g = Grid(8)
    w = frequency_operator(g)
    zero = commutator(w, w)
    assert np.abs(zero.matrix).max() <= 1e-12
    d1 = LinearOp(np.diag(np.arange(8.0)))
    d2 = LinearOp(np.diag(np.arange(8.0) ** 2))
    assert np.abs(commutator(d1, d2).matrix).max() <= 1e-15
    with pytest.raises(DimensionMismatch):
        commutator(d1, LinearOp(np.eye(4)))


def test_position_wavevector_commutator_on_packet():
    g = Grid(256, 1.0)
    packet = gaussian_packet(g, 128.0, 8.0)
    comm = commutator(position_operator(g), wavevector_operator(g))
    value = expectation(comm, packet)
    assert abs(value - 1j) <= 0.02


def test_commutator_error_decreases_as_grid_refines():
    # fixed physical packet, refined grid: the deviation of <[x,k]> from i
    # drops from the under-resolved level to rounding noise
    extent, sigma = 64.0, 0.8
    errors = []
    for n in (64, 128, 256):
        g = Grid(n, extent / n)
        packet = gaussian_packet(g, extent / 2.0, sigma)
        comm = commutator(position_operator(g), wavevector_operator(g))
        errors.append(abs(expectation(comm, packet) - 1j))
    assert errors[0] > 1e-6 > errors[1]
    assert errors[2] <= 1e-12


def test_uncertainty_gaussian_packet():
    g = Grid(256, 1.0)
    packet = gaussian_packet(g, 128.0, 8.0)
    product = uncertainty_product(packet, position_operator(g), wavevector_operator(g))
    assert product == pytest.approx(0.5, rel=0.05)


def test_uncertainty_eigenstate_is_zero():
    g = Grid(8)
    e3 = StateVector(np.eye(8)[3])
    product = uncertainty_product(e3, position_operator(g), projector(e3))
    assert product == 0.0


def test_uncertainty_width_sweep():
    g = Grid(256, 1.0)
    for sigma in (4.0, 8.0, 16.0):  # 4*dx .. L/16
        packet = gaussian_packet(g, 128.0, sigma)
        product = uncertainty_product(packet, position_operator(g), wavevector_operator(g))
        assert product >= 0.45


def test_uncertainty_rejects_non_hermitian():
    g = Grid(4)
    with pytest.raises(NonHermitianInput):
        uncertainty_product(StateVector(np.ones(4)), shift_operator(g), position_operator(g))


def test_gaussian_packet_validation():
    with pytest.raises(ValueError):
        gaussian_packet(Grid(8), 4.0, 0.0)


def test_tight_binding_four_site_spectrum():
    h = tight_binding_hamiltonian(Grid(4, 1.0), 2.0, [1.0])
    eig = np.sort(np.linalg.eigvalsh(h.matrix))
    assert np.allclose(eig, [0.0, 2.0, 2.0, 4.0], atol=1e-12)
    assert h.hermiticity_residual() == 0.0


def test_tight_binding_hopping_range():
    with pytest.raises(HoppingRangeTooLarge):
        tight_binding_hamiltonian(Grid(8), 0.0, [1.0, 0.5, 0.25, 0.1])


def test_tight_binding_small_k_dispersion():
    # eigenvalue minus band bottom approaches t*(k*dx)^2 with quartic error
    g = Grid(64, 1.0)
    t1 = 0.7
    h = tight_binding_hamiltonian(g, 2.0 * t1, [t1])
    k = wavevector_values(g)
    exact = np.sort(np.linalg.eigvalsh(h.matrix))
    model = np.sort(t1 * (k * g.spacing) ** 2 / g.spacing**2 * g.spacing**2)
    small = slice(0, 5)  # smallest eigenvalues sit at smallest |k|
    bound = t1 * np.sort(np.abs(k))[small] ** 4 / 12.0 * 1.05 + 1e-12
    assert (np.abs(exact[small] - model[small]) <= bound).all()


def test_tight_binding_second_neighbor_renormalizes_mass():
    g = Grid(256, 1.0)
    t1, t2 = 1.0, 0.2
    h = tight_binding_hamiltonian(g, 2.0 * t1 + 2.0 * t2, [t1, t2])
    k = wavevector_values(g)
    lam = np.linalg.eigvalsh(h.matrix)
    # circulant eigenvalues sorted by |k| for the fit
    analytic = 2 * t1 * (1 - np.cos(k)) + 2 * t2 * (1 - np.cos(2 * k))
    assert np.abs(np.sort(lam) - np.sort(analytic)).max() <= 1e-10
    window = np.abs(k) <= np.pi / 16.0
    coeffs = np.polynomial.polynomial.polyfit(
        k[window] ** 2, analytic[window], deg=[0, 1, 2]
    )
    expected = (t1 + 4.0 * t2) * g.spacing**2
    assert coeffs[1] == pytest.approx(expected, rel=0.01)


def test_evolve_identity_at_zero_time():
    g = Grid(16)
    w = frequency_operator(g)
    state = gaussian_packet(g, 8.0, 2.0)
    out = evolve(state, w, 0.0)
    assert np.abs(out.amplitudes - state.amplitudes).max() <= 1e-12


def test_evolve_eigenstate_phase():
    g = Grid(16, 1.0)
    w = frequency_operator(g)
    s = fourier_eigenstate(g, 5)
    t = 0.37
    out = evolve(s, w, t)
    phase = np.exp(-1j * frequency_values(g)[5] * t)
    assert np.abs(out.amplitudes - phase * s.amplitudes).max() <= 1e-10
    assert np.abs(np.abs(out.amplitudes) - np.abs(s.amplitudes)).max() <= 1e-12


def test_evolve_composition_and_drift():
    g = Grid(32)
    w = frequency_operator(g)
    state = gaussian_packet(g, 16.0, 3.0)
    once = evolve(state, w, 0.9)
    twice = evolve(evolve(state, w, 0.4), w, 0.5)
    assert np.abs(once.amplitudes - twice.amplitudes).max() <= 1e-9
    s = state
    for _ in range(100):
        s = evolve(s, w, 0.05)
    assert abs(s.norm() ** 2 - 1.0) <= 1e-11


def test_evolve_rejects_non_hermitian():
    g = Grid(4)
    with pytest.raises(NonHermitianInput):
        evolve(StateVector(np.ones(4)), shift_operator(g), 1.0)


def test_hbar_scaling_is_exact():
    g = Grid(16)
    w = frequency_operator(g)
    h = LinearOp(2.0 * w.matrix, hermitian=True)  # H = hbar*omega with hbar = 2
    assert np.allclose(
        np.linalg.eigvalsh(h.matrix), 2.0 * np.linalg.eigvalsh(w.matrix), atol=1e-12
    )
    state = gaussian_packet(g, 8.0, 2.0)
    a = evolve(state, w, 1.3)
    b = evolve(state, h, 1.3, NaturalUnits(hbar=2.0))
    assert np.abs(a.amplitudes - b.amplitudes).max() <= 1e-10


def test_free_packet_moves_at_group_velocity():
    g = Grid(256, 1.0)
    t1 = 1.0
    mu = 1.0 / (2.0 * t1 * g.spacing**2)
    h = tight_binding_hamiltonian(g, 2.0 * t1, [t1])  # band bottom at zero
    k0 = 10 * 2.0 * np.pi / 256.0
    packet = gaussian_packet(g, 96.0, 12.0, carrier=k0)
    x = position_operator(g)
    elapsed = 20.0
    moved = evolve(packet, h, elapsed)
    v = (expectation(x, moved).real - expectation(x, packet).real) / elapsed
    assert v == pytest.approx(k0 / mu, rel=0.02)


def test_klein_gordon_dispersion_limits():
    units = NaturalUnits(hbar=0.5, c=3.0)
    assert klein_gordon_dispersion(2.0, 0.0, units) == pytest.approx(6.0, rel=1e-12)
    assert klein_gordon_dispersion(0.0, 1.5, units) == pytest.approx(
        1.5 * 9.0 / 0.5, rel=1e-12
    )
    with pytest.raises(ValueError):
        klein_gordon_dispersion(1.0, -1.0)


def test_klein_gordon_plane_wave_residual():
    assert klein_gordon_plane_wave_residual(Grid(64, 1.0), 5, 1.0) <= 1e-10
    assert klein_gordon_plane_wave_residual(Grid(64, 0.5), 60, 2.0) <= 1e-10


def test_dirac_algebra_and_rest_frame():
    report = dirac_check((0.0, 0.0, 0.0), 1.0)
    assert max(report.algebra_residuals.values()) <= 1e-12
    assert np.allclose(np.sort(report.dispersion_eigenvalues), [-1, -1, 1, 1], atol=1e-12)


def test_dirac_massless():
    report = dirac_check((1.0, 0.0, 0.0), 0.0)
    assert np.allclose(np.sort(report.dispersion_eigenvalues), [-1, -1, 1, 1], atol=1e-12)


def test_dirac_matches_squared_dispersion():
    report = dirac_check((0.6, 0.0, 0.8), 1.0)  # |k| = 1
    expected = math.sqrt(2.0)
    assert np.allclose(
        np.sort(report.dispersion_eigenvalues),
        [-expected, -expected, expected, expected],
        atol=1e-10,
    )


def test_dirac_rejects_bad_representation():
    alphas, beta = dirac_alpha_beta()
    broken = [a.copy() for a in alphas]
    broken[0][0, 0] = 0.5
    with pytest.raises(BadRepresentation):
        dirac_check((1.0, 0.0, 0.0), 1.0, alphas=broken, beta=beta)
    with pytest.raises(ValueError):
        dirac_check((1.0, 0.0), 1.0)


def test_ops_check_report():
    report = ops_check(8, evolve_steps=50)
    for key, value in report.items():
        if key in ("n", "born_sum_deviation", "evolve_norm_drift", "evolve_composition"):
            continue
        assert value <= 1e-12, key
    assert report["born_sum_deviation"] <= 1e-10
    assert report["evolve_norm_drift"] <= 1e-10
