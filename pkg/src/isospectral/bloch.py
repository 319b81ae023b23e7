"""
Bloch solutions and the gradient of the constants F_j

The gradient of F_j = Delta(z_c(q), q) equals the partial gradient of Delta at
fixed z = z_c because dDelta/dz vanishes there. It is evaluated either from the
two Bloch solutions (Wronskian formula) or from cyclic products of transfer
matrices; both give the same numbers, and only the second stays defined when
the monodromy eigenvalues collide (Delta = +-2).
"""

from dataclasses import dataclass
from typing import Tuple

import numpy as np

from .lax import discriminant, monodromy, partial_products
from .spectrum import track_critical_point
from ..lattice.core import GradientField, LatticeParams, LatticeState, as_array, invariant_D, rho
from ..utils.errors import DegenerateSpectrumError, ParameterError

GRADIENT_METHODS = ('auto', 'bloch', 'trace')


@dataclass(frozen=True)
class BlochPair:
    """
    Bloch solutions psi^+-_n, n = 0..N, seeded by unit eigenvectors of M_N.

    The multipliers are m+ = D zeta and m- = D / zeta with |m+| >= |m-|.
    """

    z: complex
    psi_plus: np.ndarray
    psi_minus: np.ndarray
    zeta: complex
    wronskian: np.ndarray
    multipliers: Tuple[complex, complex]
    periodicity_defect: float

    @property
    def N(self) -> int:
        return self.psi_plus.shape[0] - 1


def _sorted_eigen(M: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    values, vectors = np.linalg.eig(M)
    order = np.argsort(-np.abs(values), kind='stable')
    return values[order], vectors[:, order]


def multiplier_separation(z: complex, state, params: LatticeParams) -> float:
    """|m+ - m-| / (|m+| + |m-|) for the monodromy eigenvalues at z."""
    values, _ = _sorted_eigen(monodromy(z, state, params))
    return float(abs(values[0] - values[1]) / (abs(values[0]) + abs(values[1])))


def bloch_solutions(z: complex, state, params: LatticeParams, collision_tol: float = 1e-10) -> BlochPair:
    """
    Bloch solutions of the spatial Lax recursion at z.

    Args:
        z: Spectral parameter, nonzero
        state: LatticeState or complex array
        params: Lattice parameters
        collision_tol: Eigenvalue collision threshold, relative to D

    Returns:
        BlochPair

    Raises:
        DegenerateSpectrumError: eigenvalues of M_N collide
    """
    q = as_array(state, params)
    z = complex(z)
    M = monodromy(z, q, params)
    D = invariant_D(q, params)
    values, vectors = _sorted_eigen(M)
    if abs(values[0] - values[1]) <= collision_tol * max(1.0, D):
        raise DegenerateSpectrumError(
            f"monodromy eigenvalues collide at z={z!r} (|m+ - m-| = {abs(values[0] - values[1]):.3e})"
        )

    P, _ = partial_products(z, q, params)
    N = q.size
    psi_plus = np.array([P[n] @ vectors[:, 0] for n in range(N + 1)])
    psi_minus = np.array([P[n] @ vectors[:, 1] for n in range(N + 1)])
    wronskian = psi_plus[:, 0] * psi_minus[:, 1] - psi_plus[:, 1] * psi_minus[:, 0]
    zeta = values[0] / D

    # continue one more period: psi_{n+N} = P_n psi_N
    defect = 0.0
    for n in range(N + 1):
        cont_plus = P[n] @ psi_plus[N]
        cont_minus = P[n] @ psi_minus[N]
        defect = max(defect,
                     float(np.max(np.abs(cont_plus - D * zeta * psi_plus[n]))),
                     float(np.max(np.abs(cont_minus - D / zeta * psi_minus[n]))))

    return BlochPair(z, psi_plus, psi_minus, complex(zeta), wronskian,
                     (complex(values[0]), complex(values[1])), defect)


def gradient_from_bloch(pair: BlochPair, state, params: LatticeParams,
                        wronskian_tol: float = 1e-300) -> GradientField:
    """
    Wronskian formula for (dF/dq_n, dF/dconj q_n):

        i h (zeta - 1/zeta) / (2 W_{n+1}) * ( psi+2_{n+1} psi-2_n + psi+2_n psi-2_{n+1},
                                             -psi+1_{n+1} psi-1_n - psi+1_n psi-1_{n+1} )
    """
    h = params.h
    N = pair.N
    W = pair.wronskian[1:N + 1]
    if np.any(np.abs(W) <= wronskian_tol):
        raise DegenerateSpectrumError(f"vanishing Wronskian at z={pair.z!r}")
    prefactor = 1j * h * (pair.zeta - 1.0 / pair.zeta) / (2.0 * W)
    pp, pm = pair.psi_plus, pair.psi_minus
    d_dq = prefactor * (pp[1:, 1] * pm[:-1, 1] + pp[:-1, 1] * pm[1:, 1])
    d_dqbar = -prefactor * (pp[1:, 0] * pm[:-1, 0] + pp[:-1, 0] * pm[1:, 0])
    return GradientField(d_dq, d_dqbar)


def gradient_trace(z: complex, state, params: LatticeParams) -> GradientField:
    """
    Partial gradient of Delta at fixed z from cyclic products C_n = P_n S_n:

        dDelta/dq_n       = i h (C_n)_10 / D - Delta h^2 conj(q_n) / (2 rho_n)
        dDelta/dconj(q_n) = i h (C_n)_01 / D - Delta h^2 q_n / (2 rho_n)
    """
    q = as_array(state, params)
    h = params.h
    D = invariant_D(q, params)
    delta = discriminant(complex(z), q, params)
    P, S = partial_products(complex(z), q, params)
    C = np.array([P[n] @ S[n] for n in range(q.size)])
    r = rho(q, h)
    d_dq = 1j * h * C[:, 1, 0] / D - delta * h * h * np.conj(q) / (2.0 * r)
    d_dqbar = 1j * h * C[:, 0, 1] / D - delta * h * h * q / (2.0 * r)
    return GradientField(d_dq, d_dqbar)


def melnikov_gradient(state, params: LatticeParams, z_c: complex, method: str = 'auto',
                      separation_tol: float = 1e-6) -> GradientField:
    """
    Gradient of F_j at a critical point z_c.

    Args:
        state: LatticeState or complex array
        params: Lattice parameters
        z_c: Critical point of Delta(., q)
        method: 'bloch' (Wronskian formula, refuses degenerate monodromy),
            'trace' (cyclic products) or 'auto' (bloch when the multipliers
            are separated by more than separation_tol, trace otherwise)
        separation_tol: Relative multiplier separation used by 'auto'

    Returns:
        GradientField
    """
    if method not in GRADIENT_METHODS:
        raise ParameterError(f"Unknown gradient method: {method!r}")
    q = as_array(state, params)
    if method == 'auto':
        method = 'bloch' if multiplier_separation(z_c, q, params) > separation_tol else 'trace'
    if method == 'bloch':
        return gradient_from_bloch(bloch_solutions(z_c, q, params), q, params)
    return gradient_trace(z_c, q, params)


def _F(q: np.ndarray, params: LatticeParams, z_c: complex, track: bool) -> complex:
    z = track_critical_point(q, params, z_c) if track else z_c
    return discriminant(z, LatticeState(q, symmetrize=False), params)


def gradient_fd_oracle(state, params: LatticeParams, z_c: complex, step: float = 1e-6,
                       track: bool = True) -> GradientField:
    """
    Central-difference gradient of F_j under independent real and imaginary
    perturbations of each q_n.

    Args:
        state: LatticeState or complex array
        params: Lattice parameters
        z_c: Critical point of the unperturbed state
        step: Perturbation size in [1e-7, 1e-4]
        track: Re-converge the critical point after each perturbation;
            with False z_c stays frozen

    Returns:
        GradientField (d/dq = (d/dx - i d/dy)/2, d/dconj q = (d/dx + i d/dy)/2)
    """
    if not (1e-7 <= step <= 1e-4):
        raise ParameterError(f"step must lie in [1e-7, 1e-4], got {step!r}")
    q = np.array(as_array(state, params), dtype=complex)
    N = q.size
    d_dx = np.empty(N, dtype=complex)
    d_dy = np.empty(N, dtype=complex)
    for n in range(N):
        for direction, out in ((1.0, d_dx), (1j, d_dy)):
            up = q.copy()
            down = q.copy()
            up[n] += direction * step
            down[n] -= direction * step
            out[n] = (_F(up, params, z_c, track) - _F(down, params, z_c, track)) / (2.0 * step)
    return GradientField(0.5 * (d_dx - 1j * d_dy), 0.5 * (d_dx + 1j * d_dy))


def fd_envelope_defect(state, params: LatticeParams, z_c: complex, step: float = 1e-6) -> float:
    """Largest difference between the tracked and frozen-z_c oracles."""
    tracked = gradient_fd_oracle(state, params, z_c, step, track=True)
    frozen = gradient_fd_oracle(state, params, z_c, step, track=False)
    return max(float(np.max(np.abs(tracked.d_dq - frozen.d_dq))),
               float(np.max(np.abs(tracked.d_dqbar - frozen.d_dqbar))))
