"""
Adaptive time integration of the lattice ODE with conservation monitoring
"""

from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy.integrate import DOP853, RK45
from scipy.interpolate import CubicHermiteSpline

from ..lattice.core import (
    LatticeParams, LatticeState, as_array, hamiltonian_h0, invariant_D, invariant_I,
    rhs_unperturbed
)
from ..isospectral.lax import discriminant
from ..isospectral.spectrum import track_critical_point
from ..lattice.vector_field import rhs_perturbed
from ..perturbations import PerturbationSpec
from ..utils.errors import IntegrationError, ParameterError, StepSizeUnderflowError, SymmetryDriftError
from ..utils.logger import get_logger

logger = get_logger()

SOLVERS = {'DOP853': DOP853, 'RK45': RK45}
DRIFT_QUANTITIES = ('H0', 'I', 'D', 'F', 'Delta')


@dataclass
class Trajectory:
    """Sampled solution of the lattice ODE."""

    times: np.ndarray
    states: List[LatticeState]
    params: LatticeParams
    pert: PerturbationSpec
    stats: Dict[str, Any] = field(default_factory=dict)
    dense: Optional[CubicHermiteSpline] = field(default=None, repr=False)

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=float)
        if self.times.size != len(self.states):
            raise ParameterError(f"{self.times.size} times but {len(self.states)} states")
        if self.times.size > 1 and np.any(np.diff(self.times) <= 0):
            raise ParameterError("trajectory times must be strictly increasing")

    def __len__(self) -> int:
        return len(self.states)

    @property
    def final(self) -> LatticeState:
        return self.states[-1]

    def as_array(self) -> np.ndarray:
        """States stacked as a (samples, N) complex array."""
        return np.vstack([s.q for s in self.states])

    def interpolate(self, t) -> np.ndarray:
        """Cubic Hermite interpolant through the accepted steps."""
        if self.dense is None:
            raise IntegrationError("trajectory carries no dense output")
        t = np.asarray(t, dtype=float)
        if np.any(t < self.times[0]) or np.any(t > self.times[-1]):
            raise ParameterError("interpolation time outside the integrated interval")
        return self.dense(t)


@dataclass(frozen=True)
class DriftReport:
    quantity: str
    max_abs_drift: float
    at_time: float

    def to_dict(self) -> Dict[str, Any]:
        return {'quantity': self.quantity, 'max_abs_drift': self.max_abs_drift, 'at_time': self.at_time}


def _vector_field(params: LatticeParams, pert: PerturbationSpec):
    if not pert.is_active:
        return lambda t, y: rhs_unperturbed(y, params)
    return lambda t, y: rhs_perturbed(y, t, params, pert)


def _mirror_defect(y: np.ndarray) -> float:
    mirror = (-np.arange(y.size)) % y.size
    return float(np.max(np.abs(y[mirror] - y)))


def _sample_grid(t0: float, t1: float, sample_times: Optional[Sequence[float]]) -> np.ndarray:
    if sample_times is None:
        return np.array([t1])
    samples = np.unique(np.asarray(sample_times, dtype=float))
    if samples.size and (samples[0] < t0 or samples[-1] > t1):
        raise ParameterError(f"sample times must lie in [{t0}, {t1}]")
    samples = samples[samples > t0]
    if samples.size == 0 or samples[-1] < t1:
        samples = np.append(samples, t1)
    return samples


def evolve(state0, t0: float, t1: float, params: LatticeParams,
           pert: Optional[PerturbationSpec] = None, tol: float = 1e-11,
           sample_times: Optional[Sequence[float]] = None, method: str = 'DOP853',
           symmetry_abort: float = 1e-9) -> Trajectory:
    """
    Integrate the (perturbed) lattice ODE from t0 to t1.

    Every sample time is a segment endpoint: the solver is restarted there with
    the last accepted step size, so sampled states carry the full step accuracy.

    Args:
        state0: Initial LatticeState or array
        t0: Initial time
        t1: Final time, t1 > t0
        params: Lattice parameters
        pert: Perturbation; None means the unperturbed lattice
        tol: rtol = atol of the embedded pair, in (1e-14, 1e-3)
        sample_times: Output times in [t0, t1]; t0 and t1 are always included
        method: 'DOP853' (default) or 'RK45'
        symmetry_abort: Even-symmetry defect that aborts the run

    Returns:
        Trajectory
    """
    if pert is None:
        pert = PerturbationSpec()
    if not (np.isfinite(t0) and np.isfinite(t1)) or t1 <= t0:
        raise ParameterError(f"need finite t1 > t0, got t0={t0!r}, t1={t1!r}")
    if not (1e-14 < tol < 1e-3):
        raise ParameterError(f"tol must lie in (1e-14, 1e-3), got {tol!r}")
    if method not in SOLVERS:
        raise ParameterError(f"Unknown integration method: {method!r}")

    y = np.array(as_array(state0, params), dtype=complex)
    defect = _mirror_defect(y)
    if defect > symmetry_abort:
        raise SymmetryDriftError(defect, t0)

    fun = _vector_field(params, pert)
    solver_cls = SOLVERS[method]
    samples = _sample_grid(t0, t1, sample_times)

    times = [t0]
    states = [LatticeState(y, symmetrize=False)]
    knots_t = [t0]
    knots_y = [y.copy()]
    knots_f = [fun(t0, y)]
    max_defect = defect
    n_steps = 0
    nfev = 0
    step_size = None
    t = t0

    for target in samples:
        span = target - t
        kwargs = {}
        if step_size is not None and step_size > 0:
            kwargs['first_step'] = min(step_size, span)
        solver = solver_cls(fun, t, y, target, rtol=tol, atol=tol, **kwargs)
        while solver.status == 'running':
            message = solver.step()
            if solver.status == 'failed':
                raise StepSizeUnderflowError(f"{method} failed: {message}", solver.t)
            n_steps += 1
            defect = _mirror_defect(solver.y)
            max_defect = max(max_defect, defect)
            if defect > symmetry_abort:
                raise SymmetryDriftError(defect, solver.t)
            knots_t.append(solver.t)
            knots_y.append(solver.y.copy())
            knots_f.append(solver.f.copy())
            if solver.step_size is not None and solver.t < target:
                step_size = solver.step_size
        nfev += solver.nfev
        t = solver.t
        y = solver.y.copy()
        times.append(t)
        states.append(LatticeState(y, symmetrize=False))
        logger.debug(f"segment to t={t:.6g}: {n_steps} steps so far")

    dense = CubicHermiteSpline(np.array(knots_t), np.array(knots_y), np.array(knots_f), axis=0)
    stats = {'method': method, 'tol': tol, 'steps': n_steps, 'nfev': nfev,
             'max_symmetry_defect': max_defect}
    return Trajectory(np.array(times), states, params, pert, stats, dense)


def _quantity_series(traj: Trajectory, quantity: str, z=None, z_c=None) -> Tuple[str, np.ndarray]:
    params = traj.params
    if quantity == 'H0':
        return 'H0', np.array([hamiltonian_h0(s, params) for s in traj.states])
    if quantity == 'I':
        return 'I', np.array([invariant_I(s, params) for s in traj.states])
    if quantity == 'D':
        return 'D', np.array([invariant_D(s, params) for s in traj.states])

    if quantity == 'Delta':
        if z is None:
            raise ParameterError("quantity 'Delta' needs the spectral parameter z")
        zs = np.atleast_1d(np.asarray(z, dtype=complex))
        values = np.array([discriminant(zs, s, params) for s in traj.states])
        return "Delta(z)", values
    if quantity == 'F':
        if z_c is None:
            raise ParameterError("quantity 'F' needs a critical point z_c of the initial state")
        values = []
        z_track = complex(z_c)
        for s in traj.states:
            z_track = track_critical_point(s, params, z_track)
            values.append(discriminant(z_track, s, params))
        return 'F_j(z)', np.array(values)
    raise ParameterError(f"Unknown drift quantity: {quantity!r} (expected one of {DRIFT_QUANTITIES})")


def drift_monitor(traj: Trajectory, quantity: str, z=None, z_c=None) -> DriftReport:
    """
    Largest deviation of a conserved quantity from its initial value.

    Args:
        traj: Non-empty trajectory
        quantity: 'H0', 'I', 'D', 'Delta' (at the spectral parameter(s) z) or
            'F' (critical value tracked from z_c)
        z: Spectral parameter or array of them, for 'Delta'
        z_c: Critical point of the initial state, for 'F'

    Returns:
        DriftReport
    """
    if len(traj) == 0:
        raise ParameterError("empty trajectory")
    label, values = _quantity_series(traj, quantity, z, z_c)
    deviation = np.abs(values - values[0])
    if deviation.ndim > 1:
        deviation = deviation.max(axis=tuple(range(1, deviation.ndim)))
    k = int(np.argmax(deviation))
    return DriftReport(label, float(deviation[k]), float(traj.times[k]))


def reverse_time(state) -> LatticeState:
    """q -> conj(q); maps solutions of the autonomous lattice to time-reversed ones."""
    return LatticeState(np.conj(as_array(state)), symmetrize=False)


def plane_wave_frequency(a: float, omega: float = 0.0) -> float:
    return 2.0 * (a * a - omega * omega)


def plane_wave_period(a: float, omega: float = 0.0) -> float:
    """Period pi / |a^2 - omega^2| of the uniform rotation."""
    return float(np.pi / abs(a * a - omega * omega))


def plane_wave_solution(a: float, gamma: float, params: LatticeParams, t) -> np.ndarray:
    """
    Exact uniform solution q_n(t) = a exp(-i(2(a^2 - w^2) t - gamma)).

    Returns an array of shape (N,) for scalar t and (len(t), N) otherwise.
    """
    t_arr = np.asarray(t, dtype=float)
    phase = np.exp(-1j * (plane_wave_frequency(a, params.omega) * t_arr - gamma))
    values = a * phase[..., None] * np.ones(params.N)
    return values


def trajectory_rows(traj: Trajectory) -> Tuple[List[str], List[List[float]]]:
    """Header and rows (t, re_q0, im_q0, ...) for CSV export."""
    header = ['t']
    for n in range(traj.params.N):
        header.extend([f're_q{n}', f'im_q{n}'])
    rows = []
    for t, s in zip(traj.times, traj.states):
        row = [float(t)]
        for value in s.q:
            row.extend([float(value.real), float(value.imag)])
        rows.append(row)
    return header, rows
