"""
Phase space, unperturbed DNLS vector field, conserved quantities and the
Poisson bracket.

All gradients use Wirtinger calculus: q_n and conj(q_n) are independent
variables and gradient pairs are stored explicitly.
"""

from dataclasses import dataclass
from typing import Callable, Optional, Tuple, Union

import numpy as np

from ..utils.errors import AmplitudeRangeError, ParameterError


@dataclass(frozen=True)
class LatticeParams:
    """Number of sites N (h = 1/N) and the detuning omega."""

    N: int
    omega: float = 0.0

    def __post_init__(self):
        if isinstance(self.N, bool) or int(self.N) != self.N or self.N < 3:
            raise ParameterError(f"N must be an integer >= 3, got {self.N!r}")
        object.__setattr__(self, 'N', int(self.N))
        if not np.isfinite(self.omega) or self.omega < 0:
            raise ParameterError(f"omega must be finite and >= 0, got {self.omega!r}")
        object.__setattr__(self, 'omega', float(self.omega))

    @property
    def h(self) -> float:
        return 1.0 / self.N

    @property
    def M(self) -> int:
        return self.N // 2

    @property
    def number_of_constants(self) -> int:
        """Count of functionally independent constants of motion, M + 1."""
        return self.M + 1

    def amplitude_range(self) -> Tuple[float, float]:
        """Open interval of plane-wave amplitudes with exactly one unstable mode."""
        lower = self.N * np.tan(np.pi / self.N)
        if 2.0 * np.pi / self.N >= np.pi / 2.0 - 1e-15:
            upper = np.inf
        else:
            upper = self.N * np.tan(2.0 * np.pi / self.N)
        return float(lower), float(upper)

    def check_amplitude(self, a: float) -> None:
        lower, upper = self.amplitude_range()
        if not (lower < a < upper):
            raise AmplitudeRangeError(a, lower, upper)


GradientPair = Union['GradientField', Tuple[np.ndarray, np.ndarray]]


@dataclass(frozen=True)
class GradientField:
    """Wirtinger gradient (dF/dq_n, dF/dconj(q_n)) of a scalar function."""

    d_dq: np.ndarray
    d_dqbar: np.ndarray

    def __post_init__(self):
        d_dq = np.asarray(self.d_dq, dtype=complex)
        d_dqbar = np.asarray(self.d_dqbar, dtype=complex)
        if d_dq.shape != d_dqbar.shape or d_dq.ndim != 1:
            raise ParameterError("gradient components must be 1-d arrays of equal length")
        object.__setattr__(self, 'd_dq', d_dq)
        object.__setattr__(self, 'd_dqbar', d_dqbar)

    def __len__(self) -> int:
        return self.d_dq.size

    def scaled(self, factor: complex) -> 'GradientField':
        return GradientField(factor * self.d_dq, factor * self.d_dqbar)

    def max_abs(self) -> float:
        return float(max(np.max(np.abs(self.d_dq)), np.max(np.abs(self.d_dqbar))))

    def is_finite(self) -> bool:
        return bool(np.all(np.isfinite(self.d_dq)) and np.all(np.isfinite(self.d_dqbar)))


def _mirror_index(N: int) -> np.ndarray:
    return (-np.arange(N)) % N


def even_index(N: int) -> np.ndarray:
    """min(n, N-n): functions of this index are exactly even on the lattice."""
    n = np.arange(N)
    return np.minimum(n, N - n)


def symmetrize(q: np.ndarray) -> np.ndarray:
    """Projection q_n <- (q_n + q_{N-n})/2, exact in floating point."""
    q = np.asarray(q, dtype=complex)
    return 0.5 * (q + q[_mirror_index(q.size)])


class LatticeState:
    """
    The N complex amplitudes q_0 .. q_{N-1}.

    The even projection is applied once at construction; the stored array is
    read-only. Pass symmetrize=False to wrap a state that must stay as given
    (finite-difference perturbations, dressed states).
    """

    __slots__ = ('_q',)

    def __init__(self, q, symmetrize: bool = True):
        arr = np.array(q, dtype=complex)
        if arr.ndim != 1 or arr.size < 3:
            raise ParameterError(f"state must be a 1-d sequence of at least 3 values, got shape {arr.shape}")
        if not np.all(np.isfinite(arr)):
            raise ParameterError("state contains non-finite entries")
        if symmetrize:
            arr = 0.5 * (arr + arr[_mirror_index(arr.size)])
        arr.setflags(write=False)
        self._q = arr

    @property
    def q(self) -> np.ndarray:
        return self._q

    @property
    def N(self) -> int:
        return self._q.size

    def __len__(self) -> int:
        return self._q.size

    def __array__(self, dtype=None, copy=None):
        return np.array(self._q, dtype=dtype)

    def __repr__(self) -> str:
        return f"LatticeState(N={self.N}, q={np.array2string(self._q, precision=6)})"

    def rho(self) -> np.ndarray:
        h = 1.0 / self.N
        return 1.0 + h * h * np.abs(self._q) ** 2

    def symmetry_defect(self) -> float:
        return float(np.max(np.abs(self._q[_mirror_index(self.N)] - self._q)))

    def conjugate(self) -> 'LatticeState':
        return LatticeState(np.conj(self._q), symmetrize=False)

    def rotated(self, phase: float) -> 'LatticeState':
        return LatticeState(self._q * np.exp(1j * phase), symmetrize=False)

    @classmethod
    def from_values(cls, values, symmetrize: bool = True) -> 'LatticeState':
        return cls(values, symmetrize=symmetrize)

    @classmethod
    def zeros(cls, N: int) -> 'LatticeState':
        return cls(np.zeros(N, dtype=complex))

    @classmethod
    def plane_wave(cls, N: int, a: float, phase: float = 0.0) -> 'LatticeState':
        """Spatially uniform state q_n = a e^{i phase}, a point of the plane Pi."""
        return cls(np.full(N, a * np.exp(1j * phase), dtype=complex))

    @classmethod
    def random_even(cls, N: int, rng: np.random.Generator, scale: float = 1.0,
                    center: complex = 0.0) -> 'LatticeState':
        noise = rng.standard_normal(N) + 1j * rng.standard_normal(N)
        return cls(center + scale * noise)

    @classmethod
    def from_profile(cls, profile: Callable[[np.ndarray], np.ndarray], N: int) -> 'LatticeState':
        """Sample a smooth, even, 1-periodic profile at x_n = n/N."""
        x = np.arange(N) / N
        return cls(np.asarray(profile(x), dtype=complex))


def as_array(state, params: Optional[LatticeParams] = None) -> np.ndarray:
    """Raw complex array of a LatticeState or array-like, length-checked."""
    if isinstance(state, LatticeState):
        q = state.q
    else:
        q = np.asarray(state, dtype=complex)
        if q.ndim != 1:
            raise ParameterError(f"state must be 1-d, got shape {q.shape}")
    if params is not None and q.size != params.N:
        raise ParameterError(f"state has {q.size} sites but params.N = {params.N}")
    return q


def neighbour_sum(q: np.ndarray) -> np.ndarray:
    """q_{n+1} + q_{n-1} with periodic wrap."""
    return np.roll(q, -1) + np.roll(q, 1)


def laplacian(q: np.ndarray, h: float) -> np.ndarray:
    """(q_{n+1} - 2 q_n + q_{n-1}) / h^2, neighbours summed first."""
    return (neighbour_sum(q) - 2.0 * q) / (h * h)


def rho(q: np.ndarray, h: float) -> np.ndarray:
    return 1.0 + h * h * np.abs(q) ** 2


def dnls_operator(q: np.ndarray, params: LatticeParams) -> np.ndarray:
    """Right-hand side of i dq/dt: h^-2 second difference + |q|^2 (q+ + q-) - 2 w^2 q."""
    h = params.h
    s = neighbour_sum(q)
    return (s - 2.0 * q) / (h * h) + np.abs(q) ** 2 * s - 2.0 * params.omega ** 2 * q


def rhs_unperturbed(state, params: LatticeParams) -> np.ndarray:
    """
    Unperturbed DNLS vector field dq/dt.

    Args:
        state: LatticeState or complex array of length N
        params: Lattice parameters

    Returns:
        Complex array of length N; even whenever the input is even
    """
    q = as_array(state, params)
    return -1j * dnls_operator(q, params)


def hamiltonian_h0(state, params: LatticeParams) -> float:
    """H0 = h^-2 sum{ 2 Re(conj(q_n) q_{n+1}) - (2/h^2)(1 + w^2 h^2) ln rho_n }."""
    q = as_array(state, params)
    h = params.h
    hopping = 2.0 * np.real(np.conj(q) * np.roll(q, -1))
    log_rho = np.log1p(h * h * np.abs(q) ** 2)
    onsite = (2.0 / h ** 2) * (1.0 + params.omega ** 2 * h * h) * log_rho
    return float(np.sum(hopping - onsite) / (h * h))


def gradient_h0(state, params: LatticeParams) -> GradientField:
    """dH0/dconj(q_n) = h^-2 [(q_{n+1} + q_{n-1}) - 2(1 + w^2 h^2) q_n / rho_n]."""
    q = as_array(state, params)
    h = params.h
    d_dqbar = (neighbour_sum(q) - 2.0 * (1.0 + params.omega ** 2 * h * h) * q / rho(q, h)) / (h * h)
    return GradientField(np.conj(d_dqbar), d_dqbar)


def invariant_I(state, params: LatticeParams) -> float:
    """I = h^-2 sum ln rho_n."""
    q = as_array(state, params)
    h = params.h
    return float(np.sum(np.log1p(h * h * np.abs(q) ** 2)) / (h * h))


def gradient_I(state, params: LatticeParams) -> GradientField:
    q = as_array(state, params)
    r = rho(q, params.h)
    return GradientField(np.conj(q) / r, q / r)


def invariant_D(state, params: LatticeParams) -> float:
    """Positive root of D^2 = prod rho_n."""
    q = as_array(state, params)
    h = params.h
    return float(np.exp(0.5 * np.sum(np.log1p(h * h * np.abs(q) ** 2))))


def _pair(grad: GradientPair) -> Tuple[np.ndarray, np.ndarray]:
    if isinstance(grad, GradientField):
        return grad.d_dq, grad.d_dqbar
    d_dq, d_dqbar = grad
    return np.asarray(d_dq, dtype=complex), np.asarray(d_dqbar, dtype=complex)


def poisson_bracket(grad_f: GradientPair, grad_g: GradientPair, state) -> complex:
    """
    {f, g} = sum rho_n [df/dq_n dg/dconj(q_n) - df/dconj(q_n) dg/dq_n].

    With this bracket dF/dt = -i {F, H} along dq/dt = -i rho dH/dconj(q).
    """
    q = as_array(state)
    f_q, f_qbar = _pair(grad_f)
    g_q, g_qbar = _pair(grad_g)
    if not (f_q.size == f_qbar.size == g_q.size == g_qbar.size == q.size):
        raise ParameterError(
            f"gradient length mismatch: {f_q.size}, {f_qbar.size}, {g_q.size}, {g_qbar.size} vs N={q.size}"
        )
    r = rho(q, 1.0 / q.size)
    return complex(np.sum(r * (f_q * g_qbar - f_qbar * g_q)))


def inner_product(q_plus, q_minus) -> float:
    """<q+, q-> = sum (q+_n conj(q-_n) + conj(q+_n) q-_n), real by construction."""
    a = as_array(q_plus)
    b = as_array(q_minus)
    return float(2.0 * np.real(np.sum(a * np.conj(b))))


def norm(state) -> float:
    return float(np.sqrt(inner_product(state, state)))


def plane_wave_I(a, params: LatticeParams):
    """I restricted to Pi: h^-3 ln(1 + h^2 a^2)."""
    h = params.h
    return np.log1p(h * h * np.asarray(a) ** 2) / h ** 3


def plane_wave_h0(a, params: LatticeParams):
    """H0 restricted to Pi: h^-3 [2 a^2 - (2/h^2)(1 + w^2 h^2) ln rho]."""
    h = params.h
    a = np.asarray(a, dtype=float)
    return (2.0 * a ** 2 - (2.0 / h ** 2) * (1.0 + params.omega ** 2 * h * h) * np.log1p(h * h * a ** 2)) / h ** 3


def plane_wave_h0_derivative(a, params: LatticeParams, order: int = 1):
    """First or second a-derivative of plane_wave_h0."""
    h = params.h
    a = np.asarray(a, dtype=float)
    r = 1.0 + h * h * a ** 2
    w2 = params.omega ** 2
    if order == 1:
        return 4.0 * a * (a ** 2 - w2) / (h * r)
    if order == 2:
        # d/da [4 a (a^2 - w^2) / (h rho)]
        num = (12.0 * a ** 2 - 4.0 * w2) * r - 4.0 * a * (a ** 2 - w2) * 2.0 * h * h * a
        return num / (h * r * r)
    raise ParameterError(f"order must be 1 or 2, got {order}")


def continuum_hamiltonian(profile: Callable[[np.ndarray], np.ndarray],
                          dprofile: Callable[[np.ndarray], np.ndarray],
                          omega: float, points: int = 4096) -> float:
    """
    H_c = -int_0^1 [|q_x|^2 + 2 w^2 |q|^2 - |q|^4] dx by the composite
    trapezoid rule on a periodic grid.
    """
    x = np.arange(points) / points
    q = np.asarray(profile(x), dtype=complex)
    qx = np.asarray(dprofile(x), dtype=complex)
    density = np.abs(qx) ** 2 + 2.0 * omega ** 2 * np.abs(q) ** 2 - np.abs(q) ** 4
    return float(-np.mean(density))


def scaled_discrete_hamiltonian(profile: Callable[[np.ndarray], np.ndarray], N: int,
                                omega: float) -> float:
    """h * H0 of the profile sampled on N sites."""
    params = LatticeParams(N, omega)
    return params.h * hamiltonian_h0(LatticeState.from_profile(profile, N), params)
