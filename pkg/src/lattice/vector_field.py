"""
Perturbed DNLS vector field

dq_n/dt = -i rho_n d(H0 + eps H)/dconj(q_n), where H is the nonresonant H1 or
the resonant H1 + H2.
"""

import numpy as np

from .core import GradientField, LatticeParams, as_array, rhs_unperturbed
from ..perturbations import PerturbationSpec, get_perturbation
from ..utils.errors import ParameterError


def _check_spec(pert: PerturbationSpec) -> None:
    if pert.mode == 'none' and pert.epsilon != 0:
        raise ParameterError("mode 'none' with nonzero epsilon is ambiguous")


def rhs_perturbed(state, t: float, params: LatticeParams, pert: PerturbationSpec) -> np.ndarray:
    """
    Perturbed vector field.

    Args:
        state: LatticeState or complex array
        t: Time (the perturbations are 2*pi periodic in t)
        params: Lattice parameters
        pert: Perturbation mode, epsilon and alpha

    Returns:
        dq/dt; equal to rhs_unperturbed exactly when epsilon = 0
    """
    _check_spec(pert)
    if not np.isfinite(t):
        raise ParameterError(f"time must be finite, got {t!r}")
    base = rhs_unperturbed(state, params)
    if pert.epsilon == 0.0:
        return base
    perturbation = get_perturbation(pert)
    return base + perturbation.vector_field(as_array(state, params), t, params, pert.epsilon)


def perturbation_hamiltonian(state, t: float, params: LatticeParams, pert: PerturbationSpec) -> float:
    """The perturbing Hamiltonian (H1, or H1 + H2) without the epsilon factor."""
    _check_spec(pert)
    return get_perturbation(pert).hamiltonian(state, t, params)


def perturbation_gradient(state, t: float, params: LatticeParams, pert: PerturbationSpec) -> GradientField:
    _check_spec(pert)
    return get_perturbation(pert).gradient(state, t, params)
