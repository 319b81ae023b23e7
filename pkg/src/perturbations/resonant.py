"""
Resonant perturbation

H1 = alpha sum (q_n + conj(q_n)) and H2 = sin t sum |d_n|^2. The split is kept
accessible so each part can be bracketed separately.
"""

from typing import Sequence

import numpy as np

from .base_perturbation import BasePerturbation, differences
from ..lattice.core import GradientField, LatticeParams, as_array, laplacian
from ..utils.errors import ParameterError

PARTS = ('H1', 'H2')


def _check_parts(include: Sequence[str]) -> None:
    unknown = set(include) - set(PARTS)
    if unknown:
        raise ParameterError(f"Unknown resonant parts: {sorted(unknown)}")


class ResonantPerturbation(BasePerturbation):
    """Forcing plus time-periodic hopping, used with omega inside the amplitude range."""

    name = 'resonant'

    def hamiltonian(self, state, t: float, params: LatticeParams,
                    include: Sequence[str] = PARTS) -> float:
        _check_parts(include)
        q = as_array(state, params)
        value = 0.0
        if 'H1' in include:
            value += 2.0 * self.alpha * float(np.sum(np.real(q)))
        if 'H2' in include:
            d = differences(q, params.h)
            value += float(np.sin(t) * np.sum(np.abs(d) ** 2))
        return value

    def gradient(self, state, t: float, params: LatticeParams,
                 include: Sequence[str] = PARTS) -> GradientField:
        """d(H1 + H2)/dconj(q_n) = alpha - sin t (Lq)_n, and the conjugate for d/dq_n."""
        _check_parts(include)
        q = as_array(state, params)
        d_dq = np.zeros(q.size, dtype=complex)
        d_dqbar = np.zeros(q.size, dtype=complex)
        if 'H1' in include:
            d_dq += self.alpha
            d_dqbar += self.alpha
        if 'H2' in include:
            lap = laplacian(q, params.h)
            d_dq -= np.sin(t) * np.conj(lap)
            d_dqbar -= np.sin(t) * lap
        return GradientField(d_dq, d_dqbar)
