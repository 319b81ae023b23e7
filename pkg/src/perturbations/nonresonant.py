"""
Nonresonant perturbation

H1 = alpha sin t sum |d_n|^2 + sum (d_n^2 + conj(d_n)^2),  d_n = (q_n - q_{n-1}) / h.

Both terms are built from difference quotients, so H1 and its gradient vanish
identically on the plane of spatially uniform states.
"""

import numpy as np

from .base_perturbation import BasePerturbation, differences
from ..lattice.core import GradientField, LatticeParams, as_array, laplacian


class NonresonantPerturbation(BasePerturbation):
    """Time-periodic gradient perturbation used with omega = 0."""

    name = 'nonresonant'

    def hamiltonian(self, state, t: float, params: LatticeParams) -> float:
        q = as_array(state, params)
        d = differences(q, params.h)
        value = self.alpha * np.sin(t) * np.sum(np.abs(d) ** 2) + 2.0 * np.sum(np.real(d * d))
        return float(value)

    def gradient(self, state, t: float, params: LatticeParams) -> GradientField:
        """
        dH1/dconj(q_n) = -alpha sin t (Lq)_n - 2 (L conj q)_n
        dH1/dq_n       = -alpha sin t (L conj q)_n - 2 (Lq)_n
        with L the periodic second difference divided by h^2.
        """
        q = as_array(state, params)
        lap = laplacian(q, params.h)
        lap_bar = np.conj(lap)
        s = self.alpha * np.sin(t)
        return GradientField(-s * lap_bar - 2.0 * lap, -s * lap - 2.0 * lap_bar)
