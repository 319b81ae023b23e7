"""
Invariant suite orchestrator
"""

import time
from concurrent.futures import ThreadPoolExecutor, as_completed
from typing import Any, Callable, Dict, List, Optional, Sequence

import numpy as np

from ..darboux.homoclinic import HomoclinicParams, asymptotic_limit, homoclinic_orbit, homoclinic_residual
from ..integrators.evolve import drift_monitor, evolve, plane_wave_period
from ..isospectral.bloch import gradient_fd_oracle, melnikov_gradient
from ..isospectral.lax import discriminant, discriminant_derivative, lax_residual
from ..isospectral.spectrum import AnnulusSearch, find_critical_points, most_separated_critical_point
from ..lattice.core import (
    LatticeParams, LatticeState, continuum_hamiltonian, gradient_I, plane_wave_I,
    poisson_bracket, scaled_discrete_hamiltonian
)
from ..lattice.vector_field import perturbation_gradient, rhs_perturbed
from ..melnikov.chain import build_chain
from ..melnikov.integrals import compute_M
from ..perturbations import PerturbationSpec
from ..utils.config import Config
from ..utils.logger import get_logger

logger = get_logger()

Check = Dict[str, Any]


def _profile(x):
    return 0.8 + 0.3 * np.cos(2 * np.pi * x) + 0.2j * np.cos(4 * np.pi * x)


def _dprofile(x):
    return -0.6 * np.pi * np.sin(2 * np.pi * x) - 0.8j * np.pi * np.sin(4 * np.pi * x)


def _result(name: str, value: float, threshold: float, detail: str = '', passed: Optional[bool] = None) -> Check:
    if passed is None:
        passed = bool(np.isfinite(value) and value <= threshold)
    return {'name': name, 'passed': passed, 'value': float(value), 'threshold': float(threshold),
            'detail': detail}


class InvariantSuite:
    """Runs the numerical invariants of the library and collects pass/fail results."""

    def __init__(self, config: Config, seed: Optional[int] = None):
        """
        Initialize the suite.

        Args:
            config: Configuration object
            seed: Random seed for the generated states (default runtime.seed)
        """
        self.config = config
        self.seed = int(seed if seed is not None else config.get('runtime.seed', 20240611))
        self.N = int(config.get('lattice.N', 3))
        self.tol = float(config.get('integrator.tol', 1e-11))
        self.amplitude = float(config.get('verify.amplitude', 6.0))
        self.resonant_omega = float(config.get('lattice.resonant_omega', 10.0))

    def checks(self) -> Dict[str, Callable[[], Check]]:
        return {
            'isospectrality': self.check_isospectrality,
            'plane_wave_constant': self.check_plane_wave_constant,
            'plane_wave_period': self.check_plane_wave_period,
            'gradient_oracle': self.check_gradient_oracle,
            'bracket_convention': self.check_bracket_convention,
            'lax_residual': self.check_lax_residual,
            'darboux_residual': self.check_darboux_residual,
            'homoclinic_asymptotics': self.check_homoclinic_asymptotics,
            'melnikov_robustness': self.check_melnikov_robustness,
            'chain_residuals': self.check_chain,
            'continuum_limit': self.check_continuum_limit,
        }

    def run(self, names: Optional[Sequence[str]] = None) -> Dict[str, Any]:
        """
        Run the selected checks concurrently.

        Args:
            names: Subset of check names (default verify.checks, else all)

        Returns:
            Results with per-check entries and statistics
        """
        available = self.checks()
        names = list(names or self.config.get('verify.checks') or available)
        unknown = [n for n in names if n not in available]
        if unknown:
            raise KeyError(f"Unknown checks: {unknown}")

        logger.info(f"Running {len(names)} invariant checks (seed {self.seed})")
        results: Dict[str, Check] = {}
        with ThreadPoolExecutor(max_workers=self.config.get_thread_count()) as executor:
            futures = {executor.submit(self._timed, name, available[name]): name for name in names}
            for future in as_completed(futures):
                name = futures[future]
                results[name] = future.result()

        ordered = [results[n] for n in names]
        statistics = self._calculate_statistics(ordered)
        logger.info(f"Invariant checks complete: {statistics['passed']}/{statistics['total']} passed")
        return {'seed': self.seed, 'checks': ordered, 'statistics': statistics}

    def _timed(self, name: str, check: Callable[[], Check]) -> Check:
        start = time.perf_counter()
        try:
            result = check()
        except Exception as e:
            logger.error(f"Check {name} raised: {e}", exc_info=True)
            result = _result(name, float('nan'), 0.0, f"{type(e).__name__}: {e}", passed=False)
        result['elapsed'] = time.perf_counter() - start
        logger.debug(f"Check {name} took {result['elapsed']:.3f}s")
        return result

    def _rng(self, offset: int) -> np.random.Generator:
        return np.random.default_rng(self.seed + offset)

    def _params(self, omega: float = 0.0) -> LatticeParams:
        return LatticeParams(self.N, omega)

    def check_isospectrality(self) -> Check:
        params = self._params()
        state = LatticeState.random_even(self.N, self._rng(1), scale=1.0)
        traj = evolve(state, 0.0, 1.0, params, tol=self.tol, sample_times=np.linspace(0.0, 1.0, 11))
        zs = np.array([1.2 + 0.3j, 0.7 - 0.5j, -1.5 + 0.1j])
        report = drift_monitor(traj, 'Delta', z=zs)
        scale = max(1.0, float(np.max(np.abs(discriminant(zs, state, params)))))
        return _result('isospectrality', report.max_abs_drift / scale, 1e-8,
                       f"max |Delta(t) - Delta(0)| at t={report.at_time:.3g}")

    def check_plane_wave_constant(self) -> Check:
        params = self._params()
        hp = HomoclinicParams(self.amplitude, params)
        z_hat = hp.constants.z_hat
        state = LatticeState.plane_wave(self.N, self.amplitude)
        F = discriminant(z_hat, state, params)
        slope = abs(discriminant_derivative(z_hat, state, params))
        return _result('plane_wave_constant', max(abs(F + 2.0), slope), 1e-10,
                       f"F = {F.real:.15g}{F.imag:+.3g}i at z_hat = {z_hat:.12g}")

    def check_plane_wave_period(self) -> Check:
        params = self._params()
        state = LatticeState.plane_wave(self.N, self.amplitude)
        period = plane_wave_period(self.amplitude)
        traj = evolve(state, 0.0, period, params, tol=self.tol)
        defect = float(np.max(np.abs(traj.final.q - state.q))) / self.amplitude
        return _result('plane_wave_period', defect, 1e-8, f"period pi/a^2 = {period:.12g}")

    def check_gradient_oracle(self) -> Check:
        params = self._params()
        state = LatticeState.random_even(self.N, self._rng(2), scale=0.7, center=1.0)
        scans = find_critical_points(state, params, AnnulusSearch(0.3, 3.0, 16, 16))
        if not scans:
            return _result('gradient_oracle', float('nan'), 1e-5, 'no critical point found', passed=False)
        z_c = most_separated_critical_point(scans).z
        analytic = melnikov_gradient(state, params, z_c)
        oracle = gradient_fd_oracle(state, params, z_c, step=float(self.config.get('spectrum.fd_step', 1e-6)))
        scale = max(1.0, analytic.max_abs())
        defect = max(float(np.max(np.abs(analytic.d_dq - oracle.d_dq))),
                     float(np.max(np.abs(analytic.d_dqbar - oracle.d_dqbar)))) / scale
        return _result('gradient_oracle', defect, 1e-5, f"z_c = {z_c:.10g}")

    def check_bracket_convention(self) -> Check:
        """dI/dt along the perturbed field against -i eps {I, H1}."""
        params = self._params()
        pert = PerturbationSpec('nonresonant', 1e-2, 0.7)
        q = LatticeState.random_even(self.N, self._rng(3), scale=1.0).q
        t = 0.37
        qdot = rhs_perturbed(q, t, params, pert)
        grad = gradient_I(q, params)
        dI = float(2.0 * np.real(np.sum(grad.d_dq * qdot)))
        predicted = -1j * pert.epsilon * poisson_bracket(grad, perturbation_gradient(q, t, params, pert), q)
        defect = abs(dI - predicted) / max(1.0, abs(predicted))
        return _result('bracket_convention', defect, 1e-10, 'dI/dt = -i eps {I, H1}')

    def check_lax_residual(self) -> Check:
        params = self._params()
        state = LatticeState.random_even(self.N, self._rng(4), scale=1.0)
        worst = max(lax_residual(z, state, params) for z in (1.3 + 0.2j, 0.6 - 0.4j, 2.0j))
        return _result('lax_residual', worst, 1e-7, 'dL/dt = B_{n+1} L_n - L_n B_n')

    def check_darboux_residual(self) -> Check:
        hp = HomoclinicParams(self.amplitude, self._params(), gamma=0.4, p=0.3)
        worst = max(homoclinic_residual(hp, t) for t in np.linspace(-0.3, 0.3, 13))
        return _result('darboux_residual', worst, 1e-7, 'closed-form orbit against the lattice field')

    def check_homoclinic_asymptotics(self) -> Check:
        hp = HomoclinicParams(self.amplitude, self._params(), gamma=0.4, p=0.3)
        mu = hp.constants.mu
        worst = 0.0
        for direction in (1, -1):
            t = (direction * 40.0 - 2.0 * hp.p) / (2.0 * mu)
            diff = homoclinic_orbit(hp, t).q - asymptotic_limit(hp, t, direction)
            worst = max(worst, float(np.max(np.abs(diff))) / self.amplitude)
        return _result('homoclinic_asymptotics', worst, 1e-12, '|2 mu t + 2p| = 40')

    def check_melnikov_robustness(self) -> Check:
        worst = 0.0
        cases = (('nonresonant', self.amplitude, 0.0),
                 ('resonant', self.resonant_omega + 0.5, self.resonant_omega))
        for mode, a, omega in cases:
            params = self._params(omega)
            base = compute_M(mode, a, params)
            coarse = compute_M(mode, a, params, quadrature='gk15')
            wide = compute_M(mode, a, params, T=2.0 * base.T)
            for other in (coarse, wide):
                diff = np.abs(np.array(base.M) - np.array(other.M)) / np.maximum(1.0, np.abs(base.M))
                worst = max(worst, float(np.max(diff)))
        return _result('melnikov_robustness', worst, 1e-9, 'gk21 vs gk15 and T vs 2T')

    def check_chain(self) -> Check:
        params = self._params()
        A1 = float(plane_wave_I(self.amplitude, params))
        A2 = float(plane_wave_I(self.amplitude + 0.02, params))
        chain = build_chain('nonresonant', A1, A2, 1e-3, params)
        return _result('chain_residuals', chain.max_residual(), 1e-10,
                       f"{len(chain.levels)} levels, {chain.n_links} links")

    def check_continuum_limit(self) -> Check:
        Ns = (8, 16, 32, 64)
        exact = continuum_hamiltonian(_profile, _dprofile, 0.0)
        errors = np.array([abs(scaled_discrete_hamiltonian(_profile, N, 0.0) - exact) for N in Ns])
        order = float(np.polyfit(np.log(1.0 / np.array(Ns)), np.log(errors), 1)[0])
        return _result('continuum_limit', order, 1.0, f"errors {np.array2string(errors, precision=3)}",
                       passed=bool(order >= 1.0))

    def _calculate_statistics(self, checks: List[Check]) -> Dict[str, Any]:
        passed = sum(1 for c in checks if c['passed'])
        return {
            'total': len(checks),
            'passed': passed,
            'failed': len(checks) - passed,
            'elapsed': round(sum(c.get('elapsed', 0.0) for c in checks), 3),
            'failed_checks': [c['name'] for c in checks if not c['passed']]
        }


def without_timing(results: Dict[str, Any]) -> Dict[str, Any]:
    """Suite results minus wall-clock fields, for the written verify.json."""
    checks = [{k: v for k, v in c.items() if k != 'elapsed'} for c in results.get('checks', [])]
    statistics = {k: v for k, v in results.get('statistics', {}).items() if k != 'elapsed'}
    return dict(results, checks=checks, statistics=statistics)
