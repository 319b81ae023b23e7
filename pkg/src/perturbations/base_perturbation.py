"""
Base perturbation interface for the time-periodic Hamiltonian perturbations
"""

from abc import ABC, abstractmethod
from dataclasses import dataclass
from typing import Optional

import numpy as np

from ..lattice.core import GradientField, LatticeParams, as_array
from ..utils.errors import ParameterError

PERTURBATION_MODES = ('none', 'nonresonant', 'resonant')


@dataclass(frozen=True)
class PerturbationSpec:
    """Which perturbation drives the lattice, with its size epsilon and coupling alpha."""

    mode: str = 'none'
    epsilon: float = 0.0
    alpha: float = 0.0

    def __post_init__(self):
        if self.mode not in PERTURBATION_MODES:
            raise ParameterError(f"Unknown perturbation mode: {self.mode!r} (expected one of {PERTURBATION_MODES})")
        if not np.isfinite(self.epsilon) or self.epsilon < 0:
            raise ParameterError(f"epsilon must be finite and >= 0, got {self.epsilon!r}")
        if not np.isfinite(self.alpha):
            raise ParameterError(f"alpha must be finite, got {self.alpha!r}")
        if self.mode == 'none' and self.epsilon != 0:
            raise ParameterError("mode 'none' with nonzero epsilon is ambiguous")
        object.__setattr__(self, 'epsilon', float(self.epsilon))
        object.__setattr__(self, 'alpha', float(self.alpha))

    @property
    def is_active(self) -> bool:
        return self.mode != 'none' and self.epsilon != 0.0

    def to_dict(self) -> dict:
        return {'mode': self.mode, 'epsilon': self.epsilon, 'alpha': self.alpha}


def differences(q: np.ndarray, h: float) -> np.ndarray:
    """Backward difference quotients d_n = (q_n - q_{n-1}) / h."""
    return (q - np.roll(q, 1)) / h


class BasePerturbation(ABC):
    """Abstract base class for the perturbing Hamiltonians."""

    name: str = 'base'

    def __init__(self, alpha: float):
        """
        Initialize perturbation.

        Args:
            alpha: Coupling constant of the perturbation
        """
        self.alpha = float(alpha)

    @abstractmethod
    def hamiltonian(self, state, t: float, params: LatticeParams) -> float:
        """
        Value of the perturbing Hamiltonian (without the epsilon factor).

        Args:
            state: LatticeState or complex array
            t: Time
            params: Lattice parameters

        Returns:
            Real scalar
        """
        pass

    @abstractmethod
    def gradient(self, state, t: float, params: LatticeParams) -> GradientField:
        """
        Wirtinger gradient of the perturbing Hamiltonian.

        Args:
            state: LatticeState or complex array
            t: Time
            params: Lattice parameters

        Returns:
            GradientField with d/dq and d/dconj(q)
        """
        pass

    def grad_qbar(self, state, t: float, params: LatticeParams) -> np.ndarray:
        return self.gradient(state, t, params).d_dqbar

    def grad_q(self, state, t: float, params: LatticeParams) -> np.ndarray:
        return self.gradient(state, t, params).d_dq

    def vector_field(self, state, t: float, params: LatticeParams,
                     epsilon: float) -> np.ndarray:
        """Contribution -i eps rho_n dH/dconj(q_n) to dq/dt."""
        q = as_array(state, params)
        rho = 1.0 + params.h ** 2 * np.abs(q) ** 2
        return -1j * epsilon * rho * self.grad_qbar(q, t, params)


class NoPerturbation(BasePerturbation):
    """The unperturbed lattice; every quantity vanishes."""

    name = 'none'

    def __init__(self, alpha: Optional[float] = 0.0):
        super().__init__(alpha or 0.0)

    def hamiltonian(self, state, t: float, params: LatticeParams) -> float:
        return 0.0

    def gradient(self, state, t: float, params: LatticeParams) -> GradientField:
        q = as_array(state, params)
        zero = np.zeros(q.size, dtype=complex)
        return GradientField(zero, zero)
