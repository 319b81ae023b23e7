"""
Tests for the Lax pair, Floquet discriminant, critical points and Bloch gradients
"""

import sys
from pathlib import Path

import numpy as np
import pytest

# Add src to path
sys.path.insert(0, str(Path(__file__).parent))

from src.darboux.homoclinic import derived_constants
from src.integrators.evolve import evolve
from src.isospectral.bloch import (
    bloch_solutions, gradient_fd_oracle, gradient_trace, melnikov_gradient, multiplier_separation
)
from src.isospectral.lax import (
    discriminant, discriminant_derivative, discriminant_derivatives, lax_compatibility_check,
    lax_residual, monodromy
)
from src.isospectral.spectrum import (
    AnnulusSearch, constant_F, find_critical_points, most_separated_critical_point,
    nearest_critical_point, spectrum_grid, track_critical_point
)
from src.lattice.core import LatticeParams, LatticeState, invariant_D
from src.utils.errors import ParameterError, SpectralParameterError

SEARCH = AnnulusSearch(0.3, 3.0, 16, 16)


def _state(seed=4, N=3, scale=0.7, center=1.0):
    return LatticeState.random_even(N, np.random.default_rng(seed), scale=scale, center=center)


def test_zero_state_discriminant():
    params = LatticeParams(3)
    z = np.array([1.3 + 0.2j, 0.5 - 0.9j, -2.0])
    assert np.allclose(discriminant(z, LatticeState.zeros(3), params), z ** 3 + z ** -3)


def test_discriminant_symmetries():
    params = LatticeParams(5)
    state = _state(N=5)
    z = 1.1 + 0.6j
    delta = discriminant(z, state, params)
    assert discriminant(-z, state, params) == pytest.approx(-delta, rel=1e-12)
    assert discriminant(1.0 / np.conj(z), state, params) == pytest.approx(np.conj(delta), rel=1e-12)


def test_monodromy_determinant():
    params = LatticeParams(5)
    state = _state(N=5, seed=8)
    M = monodromy(0.8 + 0.4j, state, params)
    assert np.linalg.det(M) == pytest.approx(invariant_D(state, params) ** 2, rel=1e-12)


def test_derivatives_against_finite_differences():
    params = LatticeParams(3)
    state = _state()
    z, step = 1.4 - 0.3j, 1e-6
    fd = (discriminant(z + step, state, params) - discriminant(z - step, state, params)) / (2 * step)
    assert discriminant_derivative(z, state, params) == pytest.approx(fd, rel=1e-7)
    delta, d1, d2 = discriminant_derivatives(z, state, params)
    fd2 = (discriminant_derivative(z + step, state, params)
           - discriminant_derivative(z - step, state, params)) / (2 * step)
    assert d2 == pytest.approx(fd2, rel=1e-6)
    assert delta == pytest.approx(discriminant(z, state, params))


def test_zero_spectral_parameter_rejected():
    params = LatticeParams(3)
    with pytest.raises(SpectralParameterError):
        discriminant(0.0, _state(), params)
    with pytest.raises(SpectralParameterError):
        discriminant(np.array([1.0, 0.0]), _state(), params)


def test_lax_pair_compatibility():
    params = LatticeParams(3, omega=0.5)
    state = _state(seed=6)
    for z in (1.3 + 0.2j, 0.6 - 0.4j, 2.0j):
        assert lax_residual(z, state, params) < 1e-7
    traj = evolve(state, 0.0, 0.1, params, sample_times=[0.05])
    assert lax_compatibility_check(traj, [1.2 + 0.1j]) < 1e-7


def test_plane_wave_critical_value():
    params = LatticeParams(3)
    state = LatticeState.plane_wave(3, 6.0)
    z_hat = derived_constants(6.0, params).z_hat
    assert z_hat == pytest.approx((1.0 + np.sqrt(5.0)) / 2.0)
    assert discriminant(z_hat, state, params) == pytest.approx(-2.0, abs=1e-10)
    assert abs(discriminant_derivative(z_hat, state, params)) < 1e-10

    scans = find_critical_points(state, params, SEARCH)
    nearest = nearest_critical_point(scans, z_hat)
    assert abs(nearest.z - z_hat) < 1e-8
    assert nearest.delta.real == pytest.approx(-2.0, abs=1e-8)


def test_critical_points_are_critical():
    params = LatticeParams(3)
    state = _state()
    scans = find_critical_points(state, params, SEARCH)
    assert scans
    for scan in scans:
        assert abs(scan.ddelta_dz) <= 1e-10
        assert SEARCH.r_min <= abs(scan.z) <= SEARCH.r_max
        row = scan.to_dict()
        assert row['re_z'] == scan.z.real
    # the critical value is unchanged along the unperturbed flow
    z_c = most_separated_critical_point(scans).z
    F0 = constant_F(state, params, z_c)
    traj = evolve(state, 0.0, 0.2, params)
    z_t = track_critical_point(traj.final, params, z_c)
    assert constant_F(traj.final, params, z_t) == pytest.approx(F0, rel=1e-8, abs=1e-8)


def test_trace_gradient_matches_frozen_finite_differences():
    params = LatticeParams(5)
    state = _state(N=5, seed=12)
    z = 1.25 + 0.35j
    analytic = gradient_trace(z, state, params)
    frozen = gradient_fd_oracle(state, params, z, track=False)
    scale = max(1.0, analytic.max_abs())
    assert np.max(np.abs(analytic.d_dq - frozen.d_dq)) / scale < 1e-6
    assert np.max(np.abs(analytic.d_dqbar - frozen.d_dqbar)) / scale < 1e-6


def test_bloch_and_trace_gradients_agree():
    params = LatticeParams(3)
    state = _state()
    z_c = most_separated_critical_point(find_critical_points(state, params, SEARCH)).z
    assert multiplier_separation(z_c, state, params) > 1e-6
    bloch = melnikov_gradient(state, params, z_c, method='bloch')
    trace = melnikov_gradient(state, params, z_c, method='trace')
    scale = max(1.0, trace.max_abs())
    assert np.max(np.abs(bloch.d_dq - trace.d_dq)) / scale < 1e-7
    assert np.max(np.abs(bloch.d_dqbar - trace.d_dqbar)) / scale < 1e-7
    with pytest.raises(ParameterError):
        melnikov_gradient(state, params, z_c, method='exact')


def test_bloch_solutions():
    params = LatticeParams(3)
    state = _state(seed=9)
    pair = bloch_solutions(1.3 + 0.4j, state, params)
    D = invariant_D(state, params)
    m_plus, m_minus = pair.multipliers
    assert m_plus * m_minus == pytest.approx(D ** 2, rel=1e-10)
    assert abs(m_plus) >= abs(m_minus)
    assert pair.periodicity_defect < 1e-9 * max(1.0, abs(m_plus))
    assert pair.N == 3


def test_spectrum_grid_skips_origin():
    params = LatticeParams(3)
    axis = np.linspace(-1.0, 1.0, 3)
    header, rows = spectrum_grid(_state(), params, axis, axis)
    assert header == ['re_z', 'im_z', 're_delta', 'im_delta', 'abs_ddelta']
    assert len(rows) == 8
    assert all(not (r[0] == 0.0 and r[1] == 0.0) for r in rows)


@pytest.mark.parametrize("N", [3, 4, 5])
@pytest.mark.parametrize("seed", range(7))
def test_gradient_matches_finite_differences_on_random_states(N, seed):
    params = LatticeParams(N)
    state = _state(seed=100 + seed, N=N)
    z_c = most_separated_critical_point(find_critical_points(state, params, SEARCH)).z
    analytic = melnikov_gradient(state, params, z_c)
    oracle = gradient_fd_oracle(state, params, z_c, track=False)
    scale = max(1.0, analytic.max_abs())
    assert np.max(np.abs(analytic.d_dq - oracle.d_dq)) / scale < 1e-5
    assert np.max(np.abs(analytic.d_dqbar - oracle.d_dqbar)) / scale < 1e-5
