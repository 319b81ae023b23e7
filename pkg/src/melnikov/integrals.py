"""
Melnikov-Arnold integrals M1 .. M6 along the homoclinic family

On the homoclinic orbit q_n = q^_n e^{i g} and dF_1/dq_n = V_n e^{-i g}, where
g = gamma + Omega p / mu and q^_n, V_n depend only on tau = t + p/mu. The six
integrals are taken over tau in (-inf, inf), truncated where sech(2 mu tau)
drops below the tail level.
"""

from concurrent.futures import ThreadPoolExecutor, as_completed
from dataclasses import dataclass
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy.integrate import quad_vec

from ..darboux.homoclinic import (
    HomoclinicConstants, HomoclinicParams, derived_constants, homoclinic_melnikov_vector,
    homoclinic_orbit, sech_tanh, _cos_even
)
from ..lattice.core import (
    GradientField, LatticeParams, even_index, gradient_h0, gradient_I, laplacian,
    neighbour_sum, poisson_bracket
)
from ..perturbations import NonresonantPerturbation, ResonantPerturbation
from ..utils.errors import DarbouxError, ParameterError, QuadratureError
from ..utils.logger import get_logger

logger = get_logger()

MELNIKOV_MODES = ('nonresonant', 'resonant')
CSV_COLUMNS = ['a', 'M1', 'M2', 'M3', 'M4', 'M5', 'M6', 'amp12', 'amp34', 'amp56', 'th1', 'th2', 'th3']


@dataclass(frozen=True)
class MelnikovResult:
    """The six integrals at one amplitude with the derived amplitudes and phases."""

    a: float
    mode: str
    M: Tuple[float, float, float, float, float, float]
    amp12: float
    amp34: float
    amp56: float
    th1: float
    th2: float
    th3: float
    error_estimate: float = 0.0
    T: float = 0.0
    omega: float = 0.0
    N: int = 0

    @classmethod
    def from_integrals(cls, a: float, mode: str, M: Sequence[float], error_estimate: float = 0.0,
                       T: float = 0.0, omega: float = 0.0, N: int = 0) -> 'MelnikovResult':
        M = tuple(float(m) for m in M)
        if len(M) != 6 or not all(np.isfinite(M)):
            raise QuadratureError(f"Melnikov integrals must be six finite numbers, got {M}")
        return cls(
            a=float(a), mode=mode, M=M,
            amp12=float(np.hypot(M[0], M[1])),
            amp34=float(np.hypot(M[2], M[3])),
            amp56=float(np.hypot(M[4], M[5])),
            th1=float(np.arctan2(M[1], M[0])),
            th2=float(np.arctan2(M[3], M[2])),
            th3=float(np.arctan2(M[5], M[4])),
            error_estimate=float(error_estimate), T=float(T), omega=float(omega), N=int(N)
        )

    def reconstruction_defect(self) -> float:
        """max |amp (cos th, sin th) - (M_odd, M_even)| over the three pairs."""
        pairs = ((self.amp12, self.th1, 0), (self.amp34, self.th2, 2), (self.amp56, self.th3, 4))
        return float(max(max(abs(amp * np.cos(th) - self.M[k]), abs(amp * np.sin(th) - self.M[k + 1]))
                         for amp, th, k in pairs))

    def alpha_min(self) -> float:
        """Smallest |alpha| for which the first intersection equation is solvable."""
        if self.mode == 'nonresonant':
            return self.amp34 / self.amp12 if self.amp12 > 0 else np.inf
        return self.amp12 / self.amp34 if self.amp34 > 0 else np.inf

    def as_row(self) -> List[float]:
        return [self.a, *self.M, self.amp12, self.amp34, self.amp56, self.th1, self.th2, self.th3]

    def to_dict(self) -> Dict[str, Any]:
        row = dict(zip(CSV_COLUMNS, self.as_row()))
        row.update({'mode': self.mode, 'error_estimate': self.error_estimate, 'T': self.T,
                    'omega': self.omega, 'N': self.N})
        return row


def hatted_profile(constants: HomoclinicConstants, params: LatticeParams, branch: int,
                   tau: float) -> Tuple[np.ndarray, np.ndarray]:
    """
    q^_n(tau) and V_n(tau) from the closed forms with the phase g removed.

    Returns:
        (q_hat, V), each of length N
    """
    c = constants
    N = params.N
    n = np.arange(N)
    s, th = sech_tanh(2.0 * c.mu * tau)
    cb, cp, sp = np.cos(c.beta), np.cos(c.phi), np.sin(c.phi)
    cos2n = np.cos(2.0 * even_index(N) * c.beta)
    Gamma_t = 1.0 - np.cos(2.0 * c.phi) - 1j * np.sin(2.0 * c.phi) * th
    Lambda = 1.0 + branch * (cp / cb) * s * cos2n
    carrier = np.exp(-1j * c.Omega * tau)
    q_hat = c.a * carrier * (Gamma_t / Lambda - 1.0)
    K_n = (cb + branch * cp * s * _cos_even(n - 1, N, c.beta)) * (cb + branch * cp * s * _cos_even(n + 1, N, c.beta))
    X1 = (cb * s + branch * (cp - 1j * sp * th) * cos2n) / carrier
    V = c.K / K_n * s * X1
    return q_hat, V


def hatted_orbit(hp: HomoclinicParams, t: float, verify: bool = True,
                 tol: float = 1e-10) -> Tuple[np.ndarray, np.ndarray]:
    """
    Strip the phase g = gamma + Omega p / mu from the orbit and Melnikov vector.

    Args:
        hp: Homoclinic parameters
        t: Time on the orbit (tau = t + p / mu)
        verify: Repeat with a shifted gamma and require identical results
        tol: Allowed gamma-dependence, relative to max(1, |Q|)

    Returns:
        (q_hat, V)

    Raises:
        DarbouxError: the stripped quantities depend on gamma
    """
    c = hp.constants

    def strip(member: HomoclinicParams):
        g = member.gamma + c.Omega * member.p / c.mu
        Q = homoclinic_orbit(member, t).q
        V = homoclinic_melnikov_vector(member, t).d_dq
        return Q * np.exp(-1j * g), V * np.exp(1j * g)

    q_hat, V = strip(hp)
    if verify:
        q_alt, V_alt = strip(hp.with_phase(hp.gamma + 1.2345))
        scale = max(1.0, float(np.max(np.abs(q_hat))))
        drift = max(float(np.max(np.abs(q_alt - q_hat))) / scale,
                    float(np.max(np.abs(V_alt - V))) / max(1.0, float(np.max(np.abs(V)))))
        if drift > tol:
            raise DarbouxError(f"hatted quantities depend on gamma (defect {drift:.3e})")
    return q_hat, V


def _base_kernels(mode: str, q_hat: np.ndarray, V: np.ndarray, params: LatticeParams) -> np.ndarray:
    """
    Unweighted kernel sums [S1, k3, k4, S56] where M1/M2 weight S1 by cos/-sin,
    and S56 is (k5, k6) for nonresonant or Sum Im[G1 G2] for resonant.
    """
    h = params.h
    rho = 1.0 + h * h * np.abs(q_hat) ** 2
    G1 = laplacian(q_hat, h)
    s1 = np.sum(rho * np.imag(V * G1))
    if mode == 'nonresonant':
        G2 = 2.0 * np.conj(G1)
        G3 = -2.0 * np.conj(q_hat) * np.conj(G1)
        return np.array([s1, np.sum(rho * np.real(V * G2)), -np.sum(rho * np.imag(V * G2)),
                         -np.sum(np.real(G3)), np.sum(np.imag(G3))])
    qb = np.conj(q_hat)
    G2 = laplacian(qb, h) + np.abs(q_hat) ** 2 * neighbour_sum(qb) - 2.0 * params.omega ** 2 * qb
    return np.array([s1, -np.sum(rho * np.real(V)), np.sum(rho * np.imag(V)),
                     np.sum(np.imag(G1 * G2)), 0.0])


def melnikov_kernels(mode: str, q_hat: np.ndarray, V: np.ndarray, tau: float,
                     params: LatticeParams) -> np.ndarray:
    """Integrands of M1 .. M6 at tau."""
    s1, k3, k4, k5, k6 = _base_kernels(mode, q_hat, V, params)
    ct, st = np.cos(tau), np.sin(tau)
    if mode == 'nonresonant':
        return np.array([ct * s1, -st * s1, k3, k4, k5, k6])
    return np.array([ct * s1, -st * s1, k3, k4, ct * k5, -st * k5])


def truncation_time(mu: float, tail_level: float = 1e-14) -> float:
    """T with sech(2 mu T) = tail_level."""
    return float(np.arccosh(1.0 / tail_level) / (2.0 * mu))


def _check_mode(mode: str, a: float, params: LatticeParams) -> None:
    if mode not in MELNIKOV_MODES:
        raise ParameterError(f"Unknown Melnikov mode: {mode!r}")
    if mode == 'nonresonant' and params.omega != 0.0:
        raise ParameterError(f"nonresonant integrals need omega = 0, got {params.omega}")
    if mode == 'resonant' and not params.omega > params.amplitude_range()[0]:
        raise ParameterError(f"resonant integrals need omega > {params.amplitude_range()[0]:.6g}, got {params.omega}")
    params.check_amplitude(a)


def compute_M(mode: str, a: float, params: LatticeParams, T: Optional[float] = None,
              quadrature: str = 'gk21', epsabs: float = 1e-11, epsrel: float = 1e-12,
              tail_level: float = 1e-14, p: float = 0.0, branch: int = 1) -> MelnikovResult:
    """
    Adaptive Gauss-Kronrod quadrature of the six integrals.

    Args:
        mode: 'nonresonant' or 'resonant'
        a: Plane-wave amplitude
        params: Lattice parameters
        T: Half-width of the truncated interval; default from tail_level
        quadrature: 'gk21' or 'gk15'
        epsabs, epsrel: Quadrature tolerances
        tail_level: sech level defining the default T
        p: Fiber parameter; nonzero p integrates in t over the shifted
            interval through the full orbit decomposition
        branch: Sign of the homoclinic branch

    Returns:
        MelnikovResult with the error estimate including the tail bound
    """
    _check_mode(mode, a, params)
    c = derived_constants(a, params)
    if T is None:
        T = truncation_time(c.mu, tail_level)
    if p == 0.0:
        def integrand(tau):
            q_hat, V = hatted_profile(c, params, branch, tau)
            return melnikov_kernels(mode, q_hat, V, tau, params)
        lo, hi, centre = -T, T, 0.0
    else:
        hp = HomoclinicParams(a, params, 0.0, p, branch)
        shift = p / c.mu

        def integrand(t):
            q_hat, V = hatted_orbit(hp, t, verify=False)
            return melnikov_kernels(mode, q_hat, V, t + shift, params)
        lo, hi, centre = -T - shift, T - shift, -shift

    result, err, info = quad_vec(integrand, lo, hi, epsabs=epsabs, epsrel=epsrel,
                                 points=[centre], quadrature=quadrature, full_output=True)
    if info.status == 1:
        raise QuadratureError(f"quadrature hit the subinterval limit at a={a} (error {err:.3e})")
    if info.status != 0:
        logger.warning(f"quadrature at a={a} reported status {info.status} (error {err:.3e})")
    tail = (np.max(np.abs(integrand(lo))) + np.max(np.abs(integrand(hi)))) / (2.0 * c.mu)
    return MelnikovResult.from_integrals(a, mode, result, float(err) + float(tail), T,
                                         params.omega, params.N)


def compute_M_nonresonant(a: float, params: LatticeParams, **kwargs) -> MelnikovResult:
    """M1 .. M6 for H1 = alpha sin t sum|d|^2 + sum(d^2 + conj d^2), omega = 0."""
    return compute_M('nonresonant', a, params, **kwargs)


def compute_M_resonant(a: float, params: LatticeParams, **kwargs) -> MelnikovResult:
    """M1 .. M6 for H1 = alpha sum(q + conj q), H2 = sin t sum|d|^2."""
    return compute_M('resonant', a, params, **kwargs)


def _phase_split(hp_constants: HomoclinicConstants, params: LatticeParams, branch: int,
                 tau: float, gamma_hat: float):
    q_hat, V = hatted_profile(hp_constants, params, branch, tau)
    q = q_hat * np.exp(1j * gamma_hat)
    v = V * np.exp(-1j * gamma_hat)
    return q_hat, V, q, GradientField(v, np.conj(v))


def assembled_brackets(mode: str, q_hat: np.ndarray, V: np.ndarray, t: float, gamma_hat: float,
                       alpha: float, params: LatticeParams) -> Tuple[float, float]:
    """
    Bracket integrands written through the kernels:

        nonresonant: -i{F1, H1} = 2 sum[-alpha sin t rho Im(V G1) - rho Im(V G2 e^{-2ig})]
                     -i{I, H1}  = 2 sum Im(G3 e^{-2ig})
        resonant:    -i{F1, H1 + H2} = 2 sum[alpha rho Im(V e^{-ig}) - sin t rho Im(V G1)]
                     -i{H0, H2}      = -2 sin t sum Im(G1 G2)
    """
    h = params.h
    rho = 1.0 + h * h * np.abs(q_hat) ** 2
    G1 = laplacian(q_hat, h)
    st = np.sin(t)
    if mode == 'nonresonant':
        G2 = 2.0 * np.conj(G1)
        G3 = -2.0 * np.conj(q_hat) * np.conj(G1)
        rot = np.exp(-2j * gamma_hat)
        first = 2.0 * np.sum(-alpha * st * rho * np.imag(V * G1) - rho * np.imag(V * G2 * rot))
        second = 2.0 * np.sum(np.imag(G3 * rot))
        return float(first), float(second)
    qb = np.conj(q_hat)
    G2 = laplacian(qb, h) + np.abs(q_hat) ** 2 * neighbour_sum(qb) - 2.0 * params.omega ** 2 * qb
    first = 2.0 * np.sum(alpha * rho * np.imag(V * np.exp(-1j * gamma_hat)) - st * rho * np.imag(V * G1))
    second = -2.0 * st * np.sum(np.imag(G1 * G2))
    return float(first), float(second)


def brute_force_brackets(mode: str, q: np.ndarray, grad_F: GradientField, t: float,
                         alpha: float, params: LatticeParams) -> Tuple[complex, complex]:
    """-i{F1, H} and -i{I, H1} (or -i{H0, H2}) from the Poisson bracket itself."""
    if mode == 'nonresonant':
        grad_H = NonresonantPerturbation(alpha).gradient(q, t, params)
        return (-1j * poisson_bracket(grad_F, grad_H, q),
                -1j * poisson_bracket(gradient_I(q, params), grad_H, q))
    pert = ResonantPerturbation(alpha)
    grad_H = pert.gradient(q, t, params)
    grad_H2 = pert.gradient(q, t, params, include=('H2',))
    return (-1j * poisson_bracket(grad_F, grad_H, q),
            -1j * poisson_bracket(gradient_h0(q, params), grad_H2, q))


def bracket_kernel_check(mode: str, a: float, params: LatticeParams, taus: Sequence[float],
                         gamma_hat: float = 0.3, t0: float = 0.2, alpha: float = 1.7,
                         branch: int = 1) -> float:
    """
    Largest relative difference between the Poisson-bracket integrands and
    their kernel form on a tau grid (t = tau - t0).
    """
    _check_mode(mode, a, params)
    c = derived_constants(a, params)
    worst = 0.0
    for tau in taus:
        q_hat, V, q, grad_F = _phase_split(c, params, branch, tau, gamma_hat)
        t = tau - t0
        brute = brute_force_brackets(mode, q, grad_F, t, alpha, params)
        assembled = assembled_brackets(mode, q_hat, V, t, gamma_hat, alpha, params)
        for b, k in zip(brute, assembled):
            worst = max(worst, abs(b - k) / max(1.0, abs(k)))
    return worst


def direct_bracket_integrals(mode: str, a: float, params: LatticeParams, gamma_hat: float,
                             t0: float, alpha: float, branch: int = 1,
                             tail_level: float = 1e-14, epsabs: float = 1e-11,
                             epsrel: float = 1e-12) -> Tuple[float, float]:
    """
    Integrals over tau of the brute-force brackets, for comparison with the
    printed intersection equations.

    Returns:
        (J1, J2): J1 = int -i{F1, H}; J2 = int -i{I, H1} (nonresonant) or
        int -i{H0, H2} (resonant)
    """
    _check_mode(mode, a, params)
    c = derived_constants(a, params)
    T = truncation_time(c.mu, tail_level)

    def integrand(tau):
        _, _, q, grad_F = _phase_split(c, params, branch, tau, gamma_hat)
        first, second = brute_force_brackets(mode, q, grad_F, tau - t0, alpha, params)
        return np.array([first.real, second.real, first.imag, second.imag])

    values = quad_vec(integrand, -T, T, epsabs=epsabs, epsrel=epsrel, points=[0.0])[0]
    if max(abs(values[2]), abs(values[3])) > 1e-8 * max(1.0, abs(values[0]), abs(values[1])):
        logger.warning(f"bracket integrals carry an imaginary part: {values[2]:.3e}, {values[3]:.3e}")
    return float(values[0]), float(values[1])


def arnold_integral(a: float, params: LatticeParams, alpha: float, t0: float = 0.0,
                    gamma_hat: float = 0.0, branch: int = 1, tail_level: float = 1e-14) -> float:
    """
    int sum 2 Im[dF_1/dq_n rho_n dH1/dconj(q_n)] dt along the homoclinic orbit
    for the nonresonant H1; equals -i int {F1, H1} dt.
    """
    return direct_bracket_integrals('nonresonant', a, params, gamma_hat, t0, alpha, branch, tail_level)[0]


def melnikov_equations(result: MelnikovResult, gamma_hat: float, t0: float, alpha: float,
                       epsilon: float, a1: float, a2: float) -> Tuple[float, float]:
    """
    Residuals of the leading-order intersection equations.

        nonresonant: alpha amp12 sin(t0 + th1) + amp34 sin(2 g + th2) = 0
                     a1 - a2 = 2 eps amp56 sin(2 g + th3)
        resonant:    amp12 sin(t0 + th1) + alpha amp34 sin(g + th2) = 0
                     a1 - a2 = 2 eps amp56 sin(t0 + th3)
    """
    r = result
    if r.mode == 'nonresonant':
        eq1 = alpha * r.amp12 * np.sin(t0 + r.th1) + r.amp34 * np.sin(2.0 * gamma_hat + r.th2)
        eq2 = (a1 - a2) - 2.0 * epsilon * r.amp56 * np.sin(2.0 * gamma_hat + r.th3)
    else:
        eq1 = r.amp12 * np.sin(t0 + r.th1) + alpha * r.amp34 * np.sin(gamma_hat + r.th2)
        eq2 = (a1 - a2) - 2.0 * epsilon * r.amp56 * np.sin(t0 + r.th3)
    return float(eq1), float(eq2)


def sweep_curves(mode: str, a_grid: Sequence[float], params: LatticeParams,
                 threads: int = 4, **kwargs) -> List[MelnikovResult]:
    """
    Melnikov integrals over an amplitude grid, evaluated concurrently.

    Returns:
        Results in grid order
    """
    a_grid = [float(a) for a in a_grid]
    for a in a_grid:
        _check_mode(mode, a, params)
    results: List[Optional[MelnikovResult]] = [None] * len(a_grid)
    with ThreadPoolExecutor(max_workers=max(1, threads)) as executor:
        futures = {executor.submit(compute_M, mode, a, params, **kwargs): k for k, a in enumerate(a_grid)}
        for future in as_completed(futures):
            k = futures[future]
            results[k] = future.result()
    logger.info(f"Computed {len(results)} {mode} Melnikov points on [{min(a_grid, default=0):.4g}, "
                f"{max(a_grid, default=0):.4g}]")
    return results


def solvability_flags(results: Sequence[MelnikovResult], rel_tol: float = 1e-6) -> List[Dict[str, Any]]:
    """
    Per-point flags for the amplitudes that must not vanish (amp12 and amp56
    nonresonant, amp34 and amp56 resonant) and sign changes of M between
    neighbouring grid points.
    """
    flags = []
    for k, r in enumerate(results):
        names = ('amp12', 'amp56') if r.mode == 'nonresonant' else ('amp34', 'amp56')
        scale = max([max(abs(getattr(x, n)) for x in results) for n in names] + [1.0])
        near_zero = [n for n in names if abs(getattr(r, n)) <= rel_tol * scale]
        sign_changes = []
        if k > 0:
            prev = results[k - 1]
            sign_changes = [f"M{j + 1}" for j in range(6) if np.sign(prev.M[j]) * np.sign(r.M[j]) < 0]
        flags.append({'a': r.a, 'near_zero': near_zero, 'sign_changes': sign_changes,
                      'solvable': not near_zero})
    return flags
