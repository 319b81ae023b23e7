"""
Leading-order solutions of the intersection equations for (gamma^, t0)
"""

from dataclasses import dataclass, field
from typing import Any, Dict, List, Tuple

import numpy as np

from .integrals import MELNIKOV_MODES, MelnikovResult, melnikov_equations
from ..utils.errors import ParameterError, SolvabilityError
from ..utils.logger import get_logger

logger = get_logger()

TWO_PI = 2.0 * np.pi


@dataclass(frozen=True)
class IntersectionCandidate:
    gamma_hat: float
    t0: float
    jacobian_det: float
    residuals: Tuple[float, float]


@dataclass
class IntersectionSolution:
    """Primary transversal solution plus every other accepted branch."""

    mode: str
    a1: float
    a2: float
    epsilon: float
    alpha: float
    alpha_min: float
    gamma_hat: float
    t0: float
    residuals: Tuple[float, float]
    jacobian_det: float
    alternatives: List[IntersectionCandidate] = field(default_factory=list)

    def to_dict(self) -> Dict[str, Any]:
        return {
            'mode': self.mode, 'a1': self.a1, 'a2': self.a2, 'epsilon': self.epsilon,
            'alpha': self.alpha, 'alpha_min': self.alpha_min,
            'gamma_hat': self.gamma_hat, 't0': self.t0,
            'residuals': list(self.residuals), 'jacobian_det': self.jacobian_det,
            'alternatives': [
                {'gamma_hat': c.gamma_hat, 't0': c.t0, 'jacobian_det': c.jacobian_det}
                for c in self.alternatives
            ]
        }


def wrap_angle(x: float) -> float:
    """Reduce to (-pi, pi]."""
    y = float(np.mod(x + np.pi, TWO_PI) - np.pi)
    return np.pi if y == -np.pi else y


def _arcsin_branches(s: float) -> Tuple[float, ...]:
    base = float(np.arcsin(np.clip(s, -1.0, 1.0)))
    other = np.pi - base
    return (base,) if abs(other - base) < 1e-15 else (base, other)


def jacobian_determinant(result: MelnikovResult, gamma_hat: float, t0: float,
                         alpha: float, epsilon: float) -> float:
    """det d(eq1, eq2)/d(gamma^, t0)."""
    r = result
    if r.mode == 'nonresonant':
        return float(4.0 * epsilon * alpha * r.amp12 * r.amp56
                     * np.cos(t0 + r.th1) * np.cos(2.0 * gamma_hat + r.th3))
    return float(-2.0 * epsilon * alpha * r.amp34 * r.amp56
                 * np.cos(gamma_hat + r.th2) * np.cos(t0 + r.th3))


def _candidates(result: MelnikovResult, s: float, alpha: float) -> List[Tuple[float, float]]:
    r = result
    pairs = []
    if r.mode == 'nonresonant':
        for x in _arcsin_branches(s):
            for k in (0, 1):
                g = float(np.mod((x - r.th3) / 2.0 + k * np.pi, TWO_PI))
                u = -r.amp34 * np.sin(2.0 * g + r.th2) / (alpha * r.amp12)
                if abs(u) > 1.0:
                    continue
                for y in _arcsin_branches(u):
                    pairs.append((g, wrap_angle(y - r.th1)))
    else:
        for x in _arcsin_branches(s):
            t0 = wrap_angle(x - r.th3)
            u = -r.amp12 * np.sin(t0 + r.th1) / (alpha * r.amp34)
            if abs(u) > 1.0:
                continue
            for y in _arcsin_branches(u):
                pairs.append((float(np.mod(y - r.th2, TWO_PI)), t0))
    return pairs


def solve_intersection(mode: str, a1: float, a2: float, epsilon: float, alpha: float,
                       result: MelnikovResult, residual_tol: float = 1e-10,
                       det_tol: float = 1e-12) -> IntersectionSolution:
    """
    Transversal solutions of the leading-order intersection equations.

    The second equation fixes 2 gamma^ + th3 (nonresonant) or t0 + th3
    (resonant); the first then fixes the remaining unknown. Branches are
    enumerated with gamma^ in [0, 2 pi) and t0 in (-pi, pi]; the primary
    solution has the smallest |t0|.

    Args:
        mode: 'nonresonant' or 'resonant'
        a1, a2: Levels (I for nonresonant, H0 on the plane waves for resonant)
        epsilon: Perturbation size, > 0
        alpha: Coupling, |alpha| above amp34/amp12 (nonresonant) or
            amp12/amp34 (resonant)
        result: Melnikov integrals at the base amplitude
        residual_tol: Accepted residual relative to each equation's scale
        det_tol: Smallest accepted |det| relative to its bound

    Returns:
        IntersectionSolution

    Raises:
        SolvabilityError: a required amplitude vanishes, |alpha| is too small,
            |a1 - a2| is too large, or no branch is transversal
    """
    if mode not in MELNIKOV_MODES or result.mode != mode:
        raise ParameterError(f"mode {mode!r} does not match the Melnikov result ({result.mode!r})")
    if not (np.isfinite(epsilon) and epsilon > 0):
        raise ParameterError(f"epsilon must be positive, got {epsilon!r}")
    r = result
    first_amp = ('amp12', r.amp12) if mode == 'nonresonant' else ('amp34', r.amp34)
    for name, value in (first_amp, ('amp56', r.amp56)):
        if value <= 0.0:
            raise SolvabilityError(f"{name} vanishes at a={r.a}", name, value)

    alpha_min = r.alpha_min()
    if not abs(alpha) > alpha_min:
        raise SolvabilityError(f"|alpha| = {abs(alpha):.6g} must exceed {alpha_min:.6g}",
                               'alpha', float(alpha), alpha_min)

    s = (a1 - a2) / (2.0 * epsilon * r.amp56)
    if abs(s) > 1.0:
        raise SolvabilityError(f"|a1 - a2| = {abs(a1 - a2):.6g} exceeds 2 eps amp56 = {2 * epsilon * r.amp56:.6g}",
                               'a1-a2', float(a1 - a2), alpha_min)

    if mode == 'nonresonant':
        scale1 = abs(alpha) * r.amp12 + r.amp34
        det_bound = 4.0 * epsilon * abs(alpha) * r.amp12 * r.amp56
    else:
        scale1 = r.amp12 + abs(alpha) * r.amp34
        det_bound = 2.0 * epsilon * abs(alpha) * r.amp34 * r.amp56
    scale2 = max(abs(a1 - a2), 2.0 * epsilon * r.amp56)

    accepted: List[IntersectionCandidate] = []
    for g, t0 in _candidates(r, s, alpha):
        eq1, eq2 = melnikov_equations(r, g, t0, alpha, epsilon, a1, a2)
        residuals = (eq1 / scale1, eq2 / scale2)
        det = jacobian_determinant(r, g, t0, alpha, epsilon)
        if max(abs(residuals[0]), abs(residuals[1])) > residual_tol:
            continue
        if abs(det) <= det_tol * det_bound:
            continue
        if any(abs(g - c.gamma_hat) < 1e-12 and abs(t0 - c.t0) < 1e-12 for c in accepted):
            continue
        accepted.append(IntersectionCandidate(g, t0, det, residuals))

    if not accepted:
        raise SolvabilityError(f"no transversal solution at a1={a1!r}, a2={a2!r}", 'jacobian', 0.0, alpha_min)

    accepted.sort(key=lambda c: (abs(c.t0), c.gamma_hat))
    primary = accepted[0]
    logger.debug(f"{mode} intersection: gamma^={primary.gamma_hat:.6f}, t0={primary.t0:.6f} "
                 f"({len(accepted)} branches)")
    return IntersectionSolution(
        mode=mode, a1=float(a1), a2=float(a2), epsilon=float(epsilon), alpha=float(alpha),
        alpha_min=float(alpha_min), gamma_hat=primary.gamma_hat, t0=primary.t0,
        residuals=primary.residuals, jacobian_det=primary.jacobian_det, alternatives=accepted[1:]
    )
