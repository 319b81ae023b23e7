"""
Perturbations package for the driven lattice
"""

from .base_perturbation import BasePerturbation, NoPerturbation, PerturbationSpec, PERTURBATION_MODES
from .nonresonant import NonresonantPerturbation
from .resonant import ResonantPerturbation


def get_perturbation(spec: PerturbationSpec) -> BasePerturbation:
    """Return the perturbation object that implements spec.mode."""
    if spec.mode == 'nonresonant':
        return NonresonantPerturbation(spec.alpha)
    if spec.mode == 'resonant':
        return ResonantPerturbation(spec.alpha)
    return NoPerturbation(spec.alpha)


__all__ = [
    'BasePerturbation', 'NoPerturbation', 'NonresonantPerturbation', 'ResonantPerturbation',
    'PerturbationSpec', 'PERTURBATION_MODES', 'get_perturbation'
]
