"""
Explicit homoclinic orbits of the plane-wave 1-tori and their Melnikov vector

For an amplitude a with rho cos^2(beta) > 1 (beta = pi/N) the plane wave
q_c = a exp(-i(Omega t - gamma)), Omega = 2(a^2 - w^2), has a one-dimensional
unstable direction. Its homoclinic family is

    Q_n = q_c [Gamma_t / Lambda_n - 1]

with Gamma_t = 1 - cos 2phi - i sin 2phi tanh(xi), xi = 2 mu t + 2p, and
Lambda_n = 1 +- (cos phi / cos beta) sech(xi) cos(2 n beta). The scalar Gamma_t
here is unrelated to the Darboux matrix of the same letter.
"""

from dataclasses import dataclass
from functools import cached_property
from typing import Tuple

import numpy as np

from ..lattice.core import GradientField, LatticeParams, LatticeState, even_index, rhs_unperturbed
from ..utils.errors import AmplitudeRangeError, ParameterError


@dataclass(frozen=True)
class HomoclinicConstants:
    """Constants derived from (a, N, omega)."""

    a: float
    beta: float
    rho: float
    mu: float
    z_hat: float
    phi: float
    Omega: float
    K: float

    @property
    def z_d(self) -> float:
        """Darboux parameter; it coincides with the critical point z_hat."""
        return self.z_hat

    @property
    def gap(self) -> float:
        """sqrt(rho cos^2 beta - 1)."""
        return float(np.sqrt(self.rho * np.cos(self.beta) ** 2 - 1.0))

    def as_dict(self) -> dict:
        return {
            'a': self.a, 'beta': self.beta, 'rho': self.rho, 'mu': self.mu,
            'z_hat': self.z_hat, 'z_d': self.z_d, 'phi': self.phi,
            'Omega': self.Omega, 'K': self.K
        }


def derived_constants(a: float, params: LatticeParams) -> HomoclinicConstants:
    """
    beta, rho, mu, z_hat, phi (and Omega, K) for amplitude a.

    Raises:
        AmplitudeRangeError: rho cos^2(beta) <= 1, i.e. a <= N tan(pi/N)
    """
    if not np.isfinite(a) or a <= 0:
        raise ParameterError(f"amplitude must be positive and finite, got {a!r}")
    N = params.N
    h = params.h
    beta = np.pi / N
    rho = 1.0 + h * h * a * a
    excess = rho * np.cos(beta) ** 2 - 1.0
    if excess <= 0:
        lower, upper = params.amplitude_range()
        raise AmplitudeRangeError(a, lower, upper)
    gap = np.sqrt(excess)
    mu = 2.0 / (h * h) * np.sqrt(rho) * np.sin(beta) * gap
    z_hat = np.sqrt(rho) * np.cos(beta) + gap
    phi = np.arctan2(np.sqrt(rho) * np.sin(beta), gap)
    K = -2.0 * N * (1.0 - z_hat ** 4) / (8.0 * a * rho ** 1.5 * z_hat ** 2) * gap
    Omega = 2.0 * (a * a - params.omega ** 2)
    return HomoclinicConstants(float(a), float(beta), float(rho), float(mu), float(z_hat),
                               float(phi), float(Omega), float(K))


@dataclass(frozen=True)
class HomoclinicParams:
    """A member of the homoclinic family: amplitude, phase, fiber parameter and branch."""

    a: float
    params: LatticeParams
    gamma: float = 0.0
    p: float = 0.0
    branch: int = 1

    def __post_init__(self):
        if self.branch not in (1, -1):
            raise ParameterError(f"branch must be +1 or -1, got {self.branch!r}")
        if not (np.isfinite(self.gamma) and np.isfinite(self.p)):
            raise ParameterError("gamma and p must be finite")
        self.params.check_amplitude(self.a)

    @cached_property
    def constants(self) -> HomoclinicConstants:
        return derived_constants(self.a, self.params)

    def with_phase(self, gamma: float) -> 'HomoclinicParams':
        return HomoclinicParams(self.a, self.params, gamma, self.p, self.branch)

    def with_fiber(self, p: float) -> 'HomoclinicParams':
        return HomoclinicParams(self.a, self.params, self.gamma, p, self.branch)

    def to_dict(self) -> dict:
        return {'a': self.a, 'gamma': self.gamma, 'p': self.p, 'branch': self.branch,
                'N': self.params.N, 'omega': self.params.omega}


def sech_tanh(xi) -> Tuple[np.ndarray, np.ndarray]:
    """sech and tanh without overflow for large |xi|."""
    xi = np.asarray(xi, dtype=float)
    e = np.exp(-2.0 * np.abs(xi))
    sech = 2.0 * np.sqrt(e) / (1.0 + e)
    return sech, np.tanh(xi)


def _cos_even(n: np.ndarray, N: int, beta: float) -> np.ndarray:
    m = n % N
    return np.cos(2.0 * np.minimum(m, N - m) * beta)


def _profile(hp: HomoclinicParams, t: float):
    c = hp.constants
    N = hp.params.N
    xi = 2.0 * c.mu * t + 2.0 * hp.p
    s, th = sech_tanh(xi)
    cos2n = np.cos(2.0 * even_index(N) * c.beta)
    ratio = np.cos(c.phi) / np.cos(c.beta)
    Gamma_t = 1.0 - np.cos(2.0 * c.phi) - 1j * np.sin(2.0 * c.phi) * th
    Lambda = 1.0 + hp.branch * ratio * s * cos2n
    q_c = hp.a * np.exp(-1j * (c.Omega * t - hp.gamma))
    return s, th, cos2n, ratio, Gamma_t, Lambda, q_c


def plane_wave_value(hp: HomoclinicParams, t: float) -> complex:
    """The base orbit q_c(t)."""
    c = hp.constants
    return complex(hp.a * np.exp(-1j * (c.Omega * t - hp.gamma)))


def homoclinic_orbit(hp: HomoclinicParams, t: float) -> LatticeState:
    """Q_n(t); exactly even in n."""
    _, _, _, _, Gamma_t, Lambda, q_c = _profile(hp, t)
    if np.any(Lambda == 0):
        raise ParameterError("Lambda_n vanished; amplitude outside the admissible range")
    return LatticeState(q_c * (Gamma_t / Lambda - 1.0), symmetrize=False)


def homoclinic_time_derivative(hp: HomoclinicParams, t: float) -> np.ndarray:
    """dQ_n/dt from the derivatives of sech, tanh and the carrier phase."""
    c = hp.constants
    s, th, cos2n, ratio, Gamma_t, Lambda, q_c = _profile(hp, t)
    ds = -2.0 * c.mu * s * th
    dGamma = -1j * np.sin(2.0 * c.phi) * 2.0 * c.mu * s * s
    dLambda = hp.branch * ratio * ds * cos2n
    dq_c = -1j * c.Omega * q_c
    return dq_c * (Gamma_t / Lambda - 1.0) + q_c * (dGamma * Lambda - Gamma_t * dLambda) / Lambda ** 2


def homoclinic_residual(hp: HomoclinicParams, t: float) -> float:
    """max_n |dQ_n/dt - DNLS(Q)_n|."""
    Q = homoclinic_orbit(hp, t)
    return float(np.max(np.abs(homoclinic_time_derivative(hp, t) - rhs_unperturbed(Q, hp.params))))


def asymptotic_limit(hp: HomoclinicParams, t: float, direction: int) -> np.ndarray:
    """q_c(t) exp(i(pi + direction * 2 phi)), the limit of Q as t -> direction * inf."""
    phi = hp.constants.phi
    return np.full(hp.params.N, plane_wave_value(hp, t) * np.exp(1j * (np.pi + direction * 2.0 * phi)))


def _vector_parts(hp: HomoclinicParams, t: float):
    c = hp.constants
    N = hp.params.N
    n = np.arange(N)
    xi = 2.0 * c.mu * t + 2.0 * hp.p
    s, th = sech_tanh(xi)
    cb, cp, sp = np.cos(c.beta), np.cos(c.phi), np.sin(c.phi)
    sigma = hp.branch
    K_n = (cb + sigma * cp * s * _cos_even(n - 1, N, c.beta)) * (cb + sigma * cp * s * _cos_even(n + 1, N, c.beta))
    cos2n = _cos_even(n, N, c.beta)
    carrier = np.exp(1j * (c.Omega * t - hp.gamma))
    X1 = (cb * s + sigma * (cp - 1j * sp * th) * cos2n) * carrier
    return s, K_n, X1


def homoclinic_melnikov_vector(hp: HomoclinicParams, t: float) -> GradientField:
    """
    K [K_n]^{-1} sech(2 mu t + 2p) (X^1_n, X^2_n) with X^2_n = conj(X^1_n).

    Returns:
        GradientField (dF_1/dq_n, dF_1/dconj q_n) on Q(t)
    """
    s, K_n, X1 = _vector_parts(hp, t)
    if np.any(K_n == 0):
        raise ParameterError("K_n vanished; amplitude outside the admissible range")
    V = hp.constants.K / K_n * s * X1
    return GradientField(V, np.conj(V))
