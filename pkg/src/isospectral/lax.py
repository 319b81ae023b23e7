"""
Lax pair, monodromy matrix and Floquet discriminant

L_n(z) = [[z, i h q_n], [i h conj(q_n), 1/z]] and M_N = L_{N-1} ... L_0.
Every function accepts a scalar z or an array of z values and returns the same
shape (with two trailing matrix axes where applicable).
"""

from typing import Iterable, List, Tuple, Union

import numpy as np

from ..lattice.core import LatticeParams, as_array, invariant_D, rhs_unperturbed
from ..utils.errors import SpectralParameterError

ZLike = Union[complex, np.ndarray]


def _as_z(z: ZLike) -> np.ndarray:
    z_arr = np.asarray(z, dtype=complex)
    if np.any(z_arr == 0):
        raise SpectralParameterError("spectral parameter z must be nonzero")
    if not np.all(np.isfinite(z_arr)):
        raise SpectralParameterError("spectral parameter z must be finite")
    return z_arr


def _transfer(z: np.ndarray, q_n: complex, h: float) -> np.ndarray:
    L = np.zeros(z.shape + (2, 2), dtype=complex)
    L[..., 0, 0] = z
    L[..., 0, 1] = 1j * h * q_n
    L[..., 1, 0] = 1j * h * np.conj(q_n)
    L[..., 1, 1] = 1.0 / z
    return L


def transfer_matrix(z: ZLike, q_n: complex, params: LatticeParams) -> np.ndarray:
    """L_n(z); det L_n = rho_n."""
    z_arr = _as_z(z)
    return _transfer(z_arr, complex(q_n), params.h)


def monodromy(z: ZLike, state, params: LatticeParams, derivatives: int = 0):
    """
    Ordered product M_N = L_{N-1} ... L_0.

    Args:
        z: Spectral parameter(s), nonzero
        state: LatticeState or complex array
        params: Lattice parameters
        derivatives: 0, 1 or 2; also return dM/dz (and d2M/dz2)

    Returns:
        M, or the tuple (M, dM) / (M, dM, d2M)
    """
    z_arr = _as_z(z)
    q = as_array(state, params)
    h = params.h
    eye = np.broadcast_to(np.eye(2, dtype=complex), z_arr.shape + (2, 2))
    M = eye.copy()
    dM = np.zeros_like(M)
    d2M = np.zeros_like(M)

    dL = np.zeros_like(M)
    dL[..., 0, 0] = 1.0
    dL[..., 1, 1] = -1.0 / z_arr ** 2
    d2L = np.zeros_like(M)
    d2L[..., 1, 1] = 2.0 / z_arr ** 3

    for q_n in q:
        L = _transfer(z_arr, q_n, h)
        if derivatives >= 2:
            d2M = d2L @ M + 2.0 * (dL @ dM) + L @ d2M
        if derivatives >= 1:
            dM = dL @ M + L @ dM
        M = L @ M

    if derivatives == 0:
        return M
    if derivatives == 1:
        return M, dM
    if derivatives == 2:
        return M, dM, d2M
    raise SpectralParameterError(f"derivatives must be 0, 1 or 2, got {derivatives}")


def _trace(A: np.ndarray) -> np.ndarray:
    return A[..., 0, 0] + A[..., 1, 1]


def discriminant(z: ZLike, state, params: LatticeParams):
    """Delta(z) = trace(M_N) / D."""
    M = monodromy(z, state, params)
    values = _trace(M) / invariant_D(state, params)
    return complex(values) if np.ndim(z) == 0 else values


def discriminant_derivative(z: ZLike, state, params: LatticeParams):
    """dDelta/dz by the product rule over the transfer-matrix factors."""
    _, dM = monodromy(z, state, params, derivatives=1)
    values = _trace(dM) / invariant_D(state, params)
    return complex(values) if np.ndim(z) == 0 else values


def discriminant_derivatives(z: ZLike, state, params: LatticeParams) -> Tuple:
    """(Delta, dDelta/dz, d2Delta/dz2) from one recursion."""
    M, dM, d2M = monodromy(z, state, params, derivatives=2)
    D = invariant_D(state, params)
    values = (_trace(M) / D, _trace(dM) / D, _trace(d2M) / D)
    if np.ndim(z) == 0:
        return tuple(complex(v) for v in values)
    return values


def partial_products(z: complex, state, params: LatticeParams) -> Tuple[List[np.ndarray], List[np.ndarray]]:
    """
    Prefix and suffix products at a scalar z.

    Returns:
        (P, S) with P[n] = L_{n-1} ... L_0 for n = 0..N and
        S[n] = L_{N-1} ... L_{n+1} for n = 0..N-1
    """
    z_arr = _as_z(z)
    if z_arr.ndim != 0:
        raise SpectralParameterError("partial products need a scalar z")
    q = as_array(state, params)
    N = q.size
    Ls = [_transfer(z_arr, q_n, params.h) for q_n in q]
    P = [np.eye(2, dtype=complex)]
    for L in Ls:
        P.append(L @ P[-1])
    S = [np.eye(2, dtype=complex) for _ in range(N)]
    for n in range(N - 2, -1, -1):
        S[n] = S[n + 1] @ Ls[n + 1]
    return P, S


def lax_operator_b(z: complex, state, params: LatticeParams) -> np.ndarray:
    """
    Temporal Lax matrices B_0 .. B_{N-1} at a scalar z, shape (N, 2, 2).

    The spectral parameter enters through 2 i lambda h = 2 log z on the
    principal branch; that term is a multiple of the identity.
    """
    z_arr = _as_z(z)
    if z_arr.ndim != 0:
        raise SpectralParameterError("B_n needs a scalar z")
    z = complex(z_arr)
    q = as_array(state, params)
    q_prev = np.roll(q, 1)
    h = params.h
    w2h2 = params.omega ** 2 * h * h
    two_log = 2.0 * np.log(z)
    B = np.empty((q.size, 2, 2), dtype=complex)
    B[:, 0, 0] = 1.0 - z * z + two_log - h * h * q * np.conj(q_prev) + w2h2
    B[:, 0, 1] = -1j * z * h * q + 1j * h * q_prev / z
    B[:, 1, 0] = -1j * z * h * np.conj(q_prev) + 1j * h * np.conj(q) / z
    B[:, 1, 1] = 1.0 / (z * z) - 1.0 + two_log + h * h * np.conj(q) * q_prev - w2h2
    return (1j / (h * h)) * B


def lax_residual(z: complex, state, params: LatticeParams) -> float:
    """max_n |dL_n/dt - (B_{n+1} L_n - L_n B_n)| at one state, with dq/dt analytic."""
    q = as_array(state, params)
    qdot = rhs_unperturbed(q, params)
    B = lax_operator_b(z, q, params)
    B_next = np.roll(B, -1, axis=0)
    h = params.h
    worst = 0.0
    for n in range(q.size):
        L = transfer_matrix(z, q[n], params)
        Ldot = np.array([[0.0, 1j * h * qdot[n]], [1j * h * np.conj(qdot[n]), 0.0]])
        defect = Ldot - (B_next[n] @ L - L @ B[n])
        worst = max(worst, float(np.max(np.abs(defect))))
    return worst


def lax_compatibility_check(traj, z: Union[complex, Iterable[complex]]) -> float:
    """
    Largest Lax-representation defect over the trajectory samples and z values.

    Args:
        traj: Unperturbed trajectory (anything with .states and .params)
        z: Spectral parameter or iterable of them

    Returns:
        Maximum residual
    """
    zs = np.atleast_1d(_as_z(z))
    worst = 0.0
    for state in traj.states:
        for z_k in zs:
            worst = max(worst, lax_residual(complex(z_k), state, traj.params))
    return worst
