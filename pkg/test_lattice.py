"""
Tests for the lattice phase space, conserved quantities and perturbations
"""

import sys
from pathlib import Path

import numpy as np
import pytest

# Add src to path
sys.path.insert(0, str(Path(__file__).parent))

from src.lattice.core import (
    LatticeParams, LatticeState, continuum_hamiltonian, gradient_h0, gradient_I, hamiltonian_h0,
    invariant_D, invariant_I, plane_wave_h0, plane_wave_h0_derivative, plane_wave_I,
    poisson_bracket, rhs_unperturbed, scaled_discrete_hamiltonian
)
from src.lattice.vector_field import perturbation_gradient, rhs_perturbed
from src.perturbations import NonresonantPerturbation, PerturbationSpec, ResonantPerturbation
from src.utils.errors import AmplitudeRangeError, ParameterError


def _state(seed=7, N=5, scale=0.8):
    return LatticeState.random_even(N, np.random.default_rng(seed), scale=scale, center=0.5)


def _fd_gradient(f, q, step=1e-6):
    """Central-difference Wirtinger gradient of a real function of q."""
    d_dx = np.empty(q.size, dtype=complex)
    d_dy = np.empty(q.size, dtype=complex)
    for n in range(q.size):
        for direction, out in ((1.0, d_dx), (1j, d_dy)):
            up = q.copy()
            down = q.copy()
            up[n] += direction * step
            down[n] -= direction * step
            out[n] = (f(up) - f(down)) / (2.0 * step)
    return 0.5 * (d_dx - 1j * d_dy), 0.5 * (d_dx + 1j * d_dy)


def test_params_validation():
    with pytest.raises(ParameterError):
        LatticeParams(2)
    with pytest.raises(ParameterError):
        LatticeParams(3.5)
    with pytest.raises(ParameterError):
        LatticeParams(3, omega=-1.0)
    params = LatticeParams(5, omega=0.0)
    assert params.h == pytest.approx(0.2)
    assert params.M == 2
    assert params.number_of_constants == 3


def test_amplitude_range():
    lower, upper = LatticeParams(3).amplitude_range()
    assert lower == pytest.approx(3.0 * np.sqrt(3.0))
    assert upper == np.inf

    lower, upper = LatticeParams(5).amplitude_range()
    assert lower == pytest.approx(5.0 * np.tan(np.pi / 5))
    assert upper == pytest.approx(5.0 * np.tan(2.0 * np.pi / 5))

    with pytest.raises(AmplitudeRangeError) as info:
        LatticeParams(3).check_amplitude(5.0)
    assert info.value.a == 5.0
    LatticeParams(3).check_amplitude(6.0)


def test_state_is_even_and_read_only():
    state = LatticeState([1.0, 2.0 + 1j, 3.0, 4.0, 5.0 - 1j])
    assert state.symmetry_defect() == 0.0
    assert state.q[1] == state.q[4]
    with pytest.raises(ValueError):
        state.q[0] = 2.0
    with pytest.raises(ParameterError):
        LatticeState([1.0, np.nan, 1.0])
    with pytest.raises(ParameterError):
        LatticeState([1.0, 2.0])


def test_plane_wave_restrictions():
    params = LatticeParams(3)
    for a in (5.5, 6.0, 8.0):
        state = LatticeState.plane_wave(3, a, phase=0.4)
        assert invariant_I(state, params) == pytest.approx(float(plane_wave_I(a, params)), rel=1e-13)
        assert hamiltonian_h0(state, params) == pytest.approx(float(plane_wave_h0(a, params)), rel=1e-12)
        assert invariant_D(state, params) ** 2 == pytest.approx((1.0 + a * a / 9.0) ** 3, rel=1e-13)


def test_plane_wave_h0_derivatives():
    params = LatticeParams(3, omega=10.0)
    a, step = 10.7, 1e-5
    first = (plane_wave_h0(a + step, params) - plane_wave_h0(a - step, params)) / (2.0 * step)
    assert float(plane_wave_h0_derivative(a, params)) == pytest.approx(float(first), rel=1e-7)
    second = (plane_wave_h0_derivative(a + step, params) - plane_wave_h0_derivative(a - step, params)) / (2.0 * step)
    assert float(plane_wave_h0_derivative(a, params, order=2)) == pytest.approx(float(second), rel=1e-7)
    # the restricted H0 is stationary at a = omega
    assert float(plane_wave_h0_derivative(10.0, params)) == pytest.approx(0.0, abs=1e-9)
    with pytest.raises(ParameterError):
        plane_wave_h0_derivative(a, params, order=3)


def test_gradients_against_finite_differences():
    params = LatticeParams(5, omega=1.3)
    q = np.array(_state().q)
    for value, grad in ((hamiltonian_h0, gradient_h0), (invariant_I, gradient_I)):
        d_dq, d_dqbar = _fd_gradient(lambda x: value(x, params), q)
        analytic = grad(q, params)
        scale = max(1.0, analytic.max_abs())
        assert np.max(np.abs(analytic.d_dq - d_dq)) / scale < 1e-6
        assert np.max(np.abs(analytic.d_dqbar - d_dqbar)) / scale < 1e-6
        assert np.allclose(analytic.d_dq, np.conj(analytic.d_dqbar))


def test_vector_field_is_hamiltonian():
    """dq/dt = -i rho dH0/dconj(q)."""
    params = LatticeParams(5, omega=0.7)
    state = _state(seed=3)
    expected = -1j * state.rho() * gradient_h0(state, params).d_dqbar
    assert np.allclose(rhs_unperturbed(state, params), expected, rtol=1e-12, atol=1e-10)


def test_bracket_properties():
    params = LatticeParams(5)
    state = _state(seed=11)
    gI = gradient_I(state, params)
    gH = gradient_h0(state, params)
    assert poisson_bracket(gI, gH, state) == pytest.approx(-poisson_bracket(gH, gI, state))
    # I is conserved by the unperturbed flow
    assert abs(poisson_bracket(gI, gH, state)) < 1e-9 * max(1.0, gH.max_abs())
    with pytest.raises(ParameterError):
        poisson_bracket(gI, (np.zeros(3), np.zeros(3)), state)


def test_perturbation_gradients_against_finite_differences():
    params = LatticeParams(5)
    q = np.array(_state(seed=5).q)
    t = 0.83
    for pert in (NonresonantPerturbation(1.7), ResonantPerturbation(0.6)):
        d_dq, d_dqbar = _fd_gradient(lambda x: pert.hamiltonian(x, t, params), q)
        analytic = pert.gradient(q, t, params)
        scale = max(1.0, analytic.max_abs())
        assert np.max(np.abs(analytic.d_dq - d_dq)) / scale < 1e-6
        assert np.max(np.abs(analytic.d_dqbar - d_dqbar)) / scale < 1e-6


def test_nonresonant_perturbation_vanishes_on_plane_waves():
    params = LatticeParams(3)
    state = LatticeState.plane_wave(3, 6.0, phase=1.1)
    pert = NonresonantPerturbation(2.0)
    assert pert.hamiltonian(state, 0.4, params) == pytest.approx(0.0, abs=1e-10)
    assert pert.gradient(state, 0.4, params).max_abs() < 1e-10


def test_resonant_parts():
    params = LatticeParams(3, omega=10.0)
    q = np.array(_state(seed=2, N=3).q)
    pert = ResonantPerturbation(0.9)
    full = pert.gradient(q, 0.5, params)
    h1 = pert.gradient(q, 0.5, params, include=('H1',))
    h2 = pert.gradient(q, 0.5, params, include=('H2',))
    assert np.allclose(full.d_dqbar, h1.d_dqbar + h2.d_dqbar)
    assert np.allclose(h1.d_dqbar, 0.9)
    with pytest.raises(ParameterError):
        pert.gradient(q, 0.5, params, include=('H3',))


def test_perturbed_field():
    params = LatticeParams(3)
    state = _state(seed=9, N=3)
    assert np.array_equal(rhs_perturbed(state, 0.3, params, PerturbationSpec('nonresonant', 0.0, 1.0)),
                          rhs_unperturbed(state, params))
    pert = PerturbationSpec('nonresonant', 0.01, 0.7)
    grad = perturbation_gradient(state, 0.3, params, pert)
    expected = rhs_unperturbed(state, params) - 1j * 0.01 * state.rho() * grad.d_dqbar
    assert np.allclose(rhs_perturbed(state, 0.3, params, pert), expected)
    with pytest.raises(ParameterError):
        PerturbationSpec('none', 0.1)
    with pytest.raises(ParameterError):
        PerturbationSpec('periodic', 0.1)


def test_continuum_limit():
    def profile(x):
        return 0.8 + 0.3 * np.cos(2 * np.pi * x)

    def dprofile(x):
        return -0.6 * np.pi * np.sin(2 * np.pi * x)

    exact = continuum_hamiltonian(profile, dprofile, 0.0)
    errors = [abs(scaled_discrete_hamiltonian(profile, N, 0.0) - exact) for N in (8, 16, 32, 64)]
    assert all(e2 < e1 for e1, e2 in zip(errors, errors[1:]))
    assert errors[-1] < 1e-2
