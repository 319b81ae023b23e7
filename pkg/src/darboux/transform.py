"""
Darboux transformation of the lattice

Given a solution q, a parameter z_d with |z_d| != 1 at which the Lax recursion
has two (anti)periodic solutions phi^+-, and complex weights c^+-, the dressed
field

    Q_n = (i/h) b_{n+1} - a_{n+1} q_n

solves the same lattice equation and Psi_n = Gamma_n(z) psi_n solves its Lax
pair. Applied to the plane wave it produces the homoclinic family.
"""

from dataclasses import dataclass, field
from typing import List, Optional, Tuple

import numpy as np
from scipy.linalg import expm
from scipy.optimize import least_squares

from .homoclinic import HomoclinicParams, derived_constants, homoclinic_orbit
from ..isospectral.lax import lax_operator_b, monodromy, partial_products, transfer_matrix
from ..lattice.core import LatticeParams, LatticeState, as_array, invariant_D
from ..utils.errors import DarbouxError, SingularDressingError
from ..utils.logger import get_logger

logger = get_logger()


@dataclass(frozen=True)
class DarbouxData:
    """Dressing coefficients built from phi_n, n = 0..N."""

    z_d: complex
    phi: np.ndarray
    a: np.ndarray
    b: np.ndarray
    c: np.ndarray
    d: np.ndarray
    delta: np.ndarray

    def gamma_matrix(self, z: complex) -> np.ndarray:
        """Gamma_n(z) = [[z + a_n/z, b_n], [c_n, -1/z + z d_n]], shape (N+1, 2, 2)."""
        G = np.empty((self.a.size, 2, 2), dtype=complex)
        G[:, 0, 0] = z + self.a / z
        G[:, 0, 1] = self.b
        G[:, 1, 0] = self.c
        G[:, 1, 1] = -1.0 / z + z * self.d
        return G

    def conjugation_defect(self) -> float:
        """max over n of |conj(a_n) + d_n| and |conj(b_n) - c_n|."""
        return float(max(np.max(np.abs(np.conj(self.a) + self.d)),
                         np.max(np.abs(np.conj(self.b) - self.c))))


@dataclass
class DarbouxResult:
    Q: LatticeState
    data: DarbouxData
    Psi: Optional[np.ndarray] = field(default=None, repr=False)


def dressing_coefficients(phi: np.ndarray, z_d: complex) -> DarbouxData:
    """
    a_n, b_n, c_n, d_n and Delta_n from phi_n = (phi_n1, phi_n2).

    Raises:
        SingularDressingError: some Delta_n vanishes
    """
    phi = np.asarray(phi, dtype=complex)
    z = complex(z_d)
    zb = np.conj(z)
    r2 = abs(z) ** 2
    p1 = np.abs(phi[:, 0]) ** 2 + r2 * np.abs(phi[:, 1]) ** 2
    p2 = np.abs(phi[:, 1]) ** 2 + r2 * np.abs(phi[:, 0]) ** 2
    delta = -p1 / zb
    scale = float(np.max(np.abs(delta))) if delta.size else 0.0
    if scale == 0.0 or np.any(np.abs(delta) <= 1e-300 + 1e-14 * scale):
        raise SingularDressingError("Delta_n vanishes: the dressing vector is zero at some site")
    a = z / (zb ** 2 * delta) * p2
    d = -1.0 / (z * delta) * p2
    b = (r2 ** 2 - 1.0) / (zb ** 2 * delta) * phi[:, 0] * np.conj(phi[:, 1])
    c = (r2 ** 2 - 1.0) / (r2 * delta) * np.conj(phi[:, 0]) * phi[:, 1]
    return DarbouxData(z, phi, a, b, c, d, delta)


def periodic_eigenfunctions(state, z_d: complex, params: LatticeParams,
                            tol: float = 1e-8, periodicity_tol: float = 1e-10
                            ) -> Tuple[np.ndarray, np.ndarray, int]:
    """
    Two independent solutions with phi^+-_{n+N} = sign D phi^+-_n.

    The seeds are eigenvectors of L_0(z_d); the monodromy must equal sign * D
    times the identity.

    Args:
        state: LatticeState or complex array (a plane wave for the homoclinic construction)
        z_d: Darboux parameter, |z_d| != 1
        params: Lattice parameters
        tol: Allowed relative distance of M_N from +-D I
        periodicity_tol: Allowed relative (anti)periodicity defect

    Returns:
        (phi_plus, phi_minus, sign), each phi of shape (N+1, 2)

    Raises:
        DarbouxError: |z_d| = 1 or the monodromy is not +-D I
    """
    q = as_array(state, params)
    z = complex(z_d)
    if abs(abs(z) - 1.0) <= 1e-12:
        raise DarbouxError(f"Darboux parameter must be off the unit circle, got {z!r}")
    D = invariant_D(q, params)
    M = monodromy(z, q, params)
    sign = 1 if np.real(M[0, 0] + M[1, 1]) >= 0 else -1
    distance = float(np.max(np.abs(M - sign * D * np.eye(2))))
    if distance > tol * D:
        raise DarbouxError(f"monodromy at z_d={z!r} is not +-D I (distance {distance:.3e})")

    values, vectors = np.linalg.eig(transfer_matrix(z, q[0], params))
    order = np.argsort(-np.angle(values), kind='stable')
    vectors = vectors[:, order]
    if abs(np.linalg.det(vectors)) < 1e-12:
        raise DarbouxError("seed eigenvectors are not independent")

    P, _ = partial_products(z, q, params)
    N = q.size
    phi_plus = np.array([P[n] @ vectors[:, 0] for n in range(N + 1)])
    phi_minus = np.array([P[n] @ vectors[:, 1] for n in range(N + 1)])
    for phi in (phi_plus, phi_minus):
        defect = np.max(np.abs(phi[N] - sign * D * phi[0]))
        if defect > periodicity_tol * D * max(1.0, float(np.max(np.abs(phi[0])))):
            raise DarbouxError(f"(anti)periodicity defect {defect:.3e} exceeds tolerance")
    return phi_plus, phi_minus, sign


def darboux_transform(state, phi_plus: np.ndarray, phi_minus: np.ndarray, z_d: complex,
                      c_plus: complex, c_minus: complex, params: LatticeParams,
                      psi: Optional[np.ndarray] = None, z: Optional[complex] = None) -> DarbouxResult:
    """
    Dress a lattice state.

    Args:
        state: Solution sample q at the current time
        phi_plus, phi_minus: (Anti)periodic Lax solutions at (q, z_d), shape (N+1, 2)
        z_d: Darboux parameter
        c_plus, c_minus: Weights of phi = c+ phi+ + c- phi-
        params: Lattice parameters
        psi: Optional Lax solution at (q, z), shape (N+1, 2)
        z: Spectral parameter of psi

    Returns:
        DarbouxResult with Q (not symmetrized) and Psi = Gamma_n(z) psi_n when psi is given
    """
    q = as_array(state, params)
    phi = c_plus * np.asarray(phi_plus, dtype=complex) + c_minus * np.asarray(phi_minus, dtype=complex)
    if phi.shape != (q.size + 1, 2):
        raise DarbouxError(f"dressing vector must have shape ({q.size + 1}, 2), got {phi.shape}")
    data = dressing_coefficients(phi, z_d)
    Q = 1j / params.h * data.b[1:] - data.a[1:] * q
    Psi = None
    if psi is not None:
        if z is None:
            raise DarbouxError("psi given without its spectral parameter z")
        Psi = np.einsum('nij,nj->ni', data.gamma_matrix(z), np.asarray(psi, dtype=complex))
    return DarbouxResult(LatticeState(Q, symmetrize=False), data, Psi)


def _plane_wave_frame(a: float, gamma: float, params: LatticeParams, z_d: complex):
    """L at t = 0, traceless B-tilde and the L-eigenvectors ordered by decreasing argument."""
    q0 = np.full(params.N, a * np.exp(1j * gamma), dtype=complex)
    L0 = transfer_matrix(z_d, q0[0], params)
    Omega = 2.0 * (a * a - params.omega ** 2)
    B = lax_operator_b(z_d, q0, params)[0] + np.diag([0.5j * Omega, -0.5j * Omega])
    B = B - 0.5 * np.trace(B) * np.eye(2)
    values, vectors = np.linalg.eig(L0)
    order = np.argsort(-np.angle(values), kind='stable')
    return L0, B, vectors[:, order], Omega


def plane_wave_lax_flow(a: float, gamma: float, params: LatticeParams, z: complex, t: float,
                        chi0: np.ndarray) -> np.ndarray:
    """
    Lax solution at site 0 on the plane wave, psi_0(t) = G(t) expm(B-tilde t) chi0.

    G(t) = diag(exp(-i Omega t/2), exp(i Omega t/2)) removes the carrier
    rotation so B-tilde is constant; its scalar part is dropped, which only
    rescales psi.
    """
    _, B, _, Omega = _plane_wave_frame(a, gamma, params, z)
    G = np.diag([np.exp(-0.5j * Omega * t), np.exp(0.5j * Omega * t)])
    return G @ expm(B * t) @ np.asarray(chi0, dtype=complex)


def plane_wave_eigenfunctions(a: float, gamma: float, params: LatticeParams, t: float,
                              z_d: Optional[complex] = None):
    """
    phi^+-_n(t) and their time derivatives on the plane wave, n = 0..N.

    Returns:
        (phi_plus, phi_minus, dphi_plus, dphi_minus)
    """
    if z_d is None:
        z_d = derived_constants(a, params).z_d
    L0, B, vectors, Omega = _plane_wave_frame(a, gamma, params, z_d)
    E = expm(B * t)
    g = np.array([np.exp(-0.5j * Omega * t), np.exp(0.5j * Omega * t)])
    dg = g * np.array([-0.5j * Omega, 0.5j * Omega])
    out = []
    for k in range(2):
        chi = E @ vectors[:, k]
        dchi = B @ chi
        phi = np.empty((params.N + 1, 2), dtype=complex)
        dphi = np.empty_like(phi)
        for n in range(params.N + 1):
            phi[n] = g * chi
            dphi[n] = dg * chi + g * dchi
            chi = L0 @ chi
            dchi = L0 @ dchi
        out.append((phi, dphi))
    return out[0][0], out[1][0], out[0][1], out[1][1]


def dressing_vector(a: float, gamma: float, params: LatticeParams, t: float,
                    c_plus: complex, c_minus: complex, z_d: Optional[complex] = None):
    """phi_n(t) = c+ phi+_n(t) + c- phi-_n(t) and its time derivative."""
    pp, pm, dpp, dpm = plane_wave_eigenfunctions(a, gamma, params, t, z_d)
    return c_plus * pp + c_minus * pm, c_plus * dpp + c_minus * dpm


def dressed_plane_wave(a: float, gamma: float, params: LatticeParams, t: float,
                       c_plus: complex, c_minus: complex) -> Tuple[LatticeState, np.ndarray]:
    """
    Darboux image of the plane wave at time t and its analytic time derivative.

    Returns:
        (Q, dQ/dt)
    """
    z_d = derived_constants(a, params).z_d
    phi, dphi = dressing_vector(a, gamma, params, t, c_plus, c_minus, z_d)
    data = dressing_coefficients(phi, z_d)
    Omega = 2.0 * (a * a - params.omega ** 2)
    q = a * np.exp(-1j * (Omega * t - gamma))
    dq = -1j * Omega * q
    Q = 1j / params.h * data.b[1:] - data.a[1:] * q

    z = complex(z_d)
    zb = np.conj(z)
    r2 = abs(z) ** 2
    p1 = np.abs(phi[:, 0]) ** 2 + r2 * np.abs(phi[:, 1]) ** 2
    p2 = np.abs(phi[:, 1]) ** 2 + r2 * np.abs(phi[:, 0]) ** 2
    dp1 = 2.0 * np.real(np.conj(phi[:, 0]) * dphi[:, 0]) + r2 * 2.0 * np.real(np.conj(phi[:, 1]) * dphi[:, 1])
    dp2 = 2.0 * np.real(np.conj(phi[:, 1]) * dphi[:, 1]) + r2 * 2.0 * np.real(np.conj(phi[:, 0]) * dphi[:, 0])
    da = -(z / zb) * (dp2 * p1 - p2 * dp1) / p1 ** 2
    w = phi[:, 0] * np.conj(phi[:, 1])
    dw = dphi[:, 0] * np.conj(phi[:, 1]) + phi[:, 0] * np.conj(dphi[:, 1])
    db = -(r2 ** 2 - 1.0) / zb * (dw * p1 - w * dp1) / p1 ** 2
    dQ = 1j / params.h * db[1:] - da[1:] * q - data.a[1:] * dq
    return LatticeState(Q, symmetrize=False), dQ


def _stack(z: np.ndarray) -> np.ndarray:
    return np.concatenate([z.real, z.imag])


def fit_dressing_coefficients(hp: HomoclinicParams, tol: float = 1e-9,
                              log_moduli: Optional[List[float]] = None,
                              angles: int = 8) -> Tuple[complex, complex, float]:
    """
    Weights (c+, c-) = (1, r) whose dressed plane wave equals the closed-form
    orbit at t = 0.

    Multi-start least squares over (log|r|, arg r).

    Returns:
        (c_plus, c_minus, residual)

    Raises:
        DarbouxError: best residual above tol
    """
    target = homoclinic_orbit(hp, 0.0).q
    if log_moduli is None:
        log_moduli = list(np.linspace(-8.0, 8.0, 17))

    def residual(x):
        r = np.exp(x[0] + 1j * x[1])
        Q, _ = dressed_plane_wave(hp.a, hp.gamma, hp.params, 0.0, 1.0, r)
        return _stack(Q.q - target)

    best = None
    for lm in log_moduli:
        for k in range(angles):
            x0 = np.array([lm, 2.0 * np.pi * k / angles])
            try:
                fit = least_squares(residual, x0, xtol=1e-15, ftol=1e-15, gtol=1e-15)
            except DarbouxError:
                continue
            if best is None or fit.cost < best.cost:
                best = fit
    if best is None:
        raise DarbouxError("no dressing weights could be evaluated")
    r = np.exp(best.x[0] + 1j * best.x[1])
    res = float(np.max(np.abs(residual(best.x))))
    if res > tol * max(1.0, hp.a):
        raise DarbouxError(f"dressing weights do not reproduce the closed form (residual {res:.3e})")
    logger.debug(f"fitted dressing weights r={r!r} with residual {res:.3e}")
    return 1.0 + 0j, complex(r), res


def fit_closed_form(a: float, gamma: float, params: LatticeParams, c_plus: complex,
                    c_minus: complex, p_starts: Optional[List[float]] = None) -> Tuple[HomoclinicParams, float]:
    """
    Fiber parameter p and branch of the closed form matching the dressed
    plane wave at t = 0.

    Returns:
        (HomoclinicParams, residual)
    """
    Q, _ = dressed_plane_wave(a, gamma, params, 0.0, c_plus, c_minus)
    target = Q.q
    if p_starts is None:
        p_starts = list(np.linspace(-10.0, 10.0, 21))
    best_hp = None
    best_res = np.inf
    for branch in (1, -1):
        def residual(x, branch=branch):
            hp = HomoclinicParams(a, params, gamma, float(x[0]), branch)
            return _stack(homoclinic_orbit(hp, 0.0).q - target)

        for p0 in p_starts:
            fit = least_squares(residual, np.array([p0]), xtol=1e-15, ftol=1e-15, gtol=1e-15)
            res = float(np.max(np.abs(residual(fit.x))))
            if res < best_res:
                best_res = res
                best_hp = HomoclinicParams(a, params, gamma, float(fit.x[0]), branch)
    return best_hp, best_res
