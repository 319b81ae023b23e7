"""
Tests for time integration and conservation monitoring
"""

import sys
from pathlib import Path

import numpy as np
import pytest

# Add src to path
sys.path.insert(0, str(Path(__file__).parent))

from src.integrators.evolve import (
    drift_monitor, evolve, plane_wave_period, plane_wave_solution, reverse_time, trajectory_rows
)
from src.lattice.core import LatticeParams, LatticeState, hamiltonian_h0, invariant_I
from src.perturbations import PerturbationSpec
from src.utils.errors import ParameterError, SymmetryDriftError


def test_plane_wave_returns_after_one_period():
    params = LatticeParams(3)
    state = LatticeState.plane_wave(3, 6.0)
    traj = evolve(state, 0.0, plane_wave_period(6.0), params)
    assert np.max(np.abs(traj.final.q - state.q)) / 6.0 < 1e-8


def test_plane_wave_matches_exact_rotation():
    params = LatticeParams(3, omega=2.0)
    a, gamma = 6.0, 0.3
    state = LatticeState.plane_wave(3, a, phase=gamma)
    times = np.linspace(0.0, 0.2, 5)
    traj = evolve(state, 0.0, 0.2, params, sample_times=times)
    assert np.allclose(traj.times, times)
    exact = plane_wave_solution(a, gamma, params, traj.times)
    assert np.max(np.abs(traj.as_array() - exact)) < 1e-8 * a


def test_unperturbed_conservation():
    params = LatticeParams(3)
    state = LatticeState.random_even(3, np.random.default_rng(1), scale=1.0)
    traj = evolve(state, 0.0, 1.0, params, sample_times=np.linspace(0.0, 1.0, 11))
    for quantity, value in (('H0', hamiltonian_h0), ('I', invariant_I)):
        report = drift_monitor(traj, quantity)
        assert report.max_abs_drift < 1e-8 * max(1.0, abs(value(state, params)))
    report = drift_monitor(traj, 'Delta', z=[1.2 + 0.3j, 0.7 - 0.5j])
    assert report.quantity == 'Delta(z)'
    assert report.max_abs_drift < 1e-8 * 100


def test_perturbed_run_keeps_symmetry():
    params = LatticeParams(3)
    state = LatticeState.random_even(3, np.random.default_rng(4), scale=0.8, center=6.0)
    pert = PerturbationSpec('nonresonant', 1e-3, 1.5)
    traj = evolve(state, 0.0, 0.5, params, pert, sample_times=[0.1, 0.25])
    assert traj.stats['max_symmetry_defect'] <= 1e-9
    assert len(traj) == 4
    assert traj.final.symmetry_defect() <= 1e-9


def test_interpolation_within_interval():
    params = LatticeParams(3)
    state = LatticeState.plane_wave(3, 6.0)
    traj = evolve(state, 0.0, 0.05, params)
    middle = traj.interpolate(0.025)
    exact = plane_wave_solution(6.0, 0.0, params, 0.025)
    assert np.max(np.abs(middle - exact)) < 1e-3 * 6.0
    with pytest.raises(ParameterError):
        traj.interpolate(0.1)


def test_time_reversal():
    params = LatticeParams(3)
    state = LatticeState.random_even(3, np.random.default_rng(2), scale=1.0)
    forward = evolve(state, 0.0, 0.3, params)
    back = evolve(reverse_time(forward.final), 0.0, 0.3, params)
    assert np.max(np.abs(reverse_time(back.final).q - state.q)) < 1e-8


def test_invalid_arguments():
    params = LatticeParams(3)
    state = LatticeState.plane_wave(3, 6.0)
    with pytest.raises(ParameterError):
        evolve(state, 1.0, 0.5, params)
    with pytest.raises(ParameterError):
        evolve(state, 0.0, 1.0, params, tol=1e-2)
    with pytest.raises(ParameterError):
        evolve(state, 0.0, 1.0, params, method='Euler')
    with pytest.raises(ParameterError):
        evolve(state, 0.0, 1.0, params, sample_times=[2.0])
    with pytest.raises(SymmetryDriftError):
        evolve(LatticeState([1.0, 2.0, 3.0], symmetrize=False), 0.0, 1.0, params)
    with pytest.raises(ParameterError):
        drift_monitor(evolve(state, 0.0, 0.01, params), 'Delta')


def test_trajectory_rows():
    params = LatticeParams(3)
    traj = evolve(LatticeState.plane_wave(3, 6.0), 0.0, 0.01, params, sample_times=[0.005])
    header, rows = trajectory_rows(traj)
    assert header == ['t', 're_q0', 'im_q0', 're_q1', 'im_q1', 're_q2', 'im_q2']
    assert len(rows) == 3
    assert all(len(r) == len(header) for r in rows)
    assert rows[0][1] == 6.0
