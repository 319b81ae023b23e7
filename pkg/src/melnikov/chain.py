"""
Transition chains of plane-wave tori

A chain is an increasing sequence of amplitudes a_1 < ... < a_K whose
consecutive levels (I for the nonresonant perturbation, H0 restricted to the
plane waves for the resonant one) differ by less than the Melnikov gap
2 eps amp56, so each link has a transversal leading-order intersection.
"""

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Callable, Dict, List, Optional, Tuple

import numpy as np
from scipy.optimize import brentq

from .integrals import MELNIKOV_MODES, MelnikovResult, compute_M
from .intersection import IntersectionSolution, solve_intersection
from ..lattice.core import LatticeParams, plane_wave_h0, plane_wave_h0_derivative, plane_wave_I
from ..utils.errors import ChainError, ParameterError, SolvabilityError
from ..utils.logger import get_logger

logger = get_logger()

COORDINATES = ('level', 'amplitude')


@dataclass
class TransitionChain:
    """Levels, links and the checks made while building them."""

    mode: str
    coordinate: str
    epsilon: float
    amplitudes: List[float] = field(default_factory=list)
    levels: List[float] = field(default_factory=list)
    links: List[IntersectionSolution] = field(default_factory=list)
    frequency_check: List[Dict[str, Any]] = field(default_factory=list)
    bridging: List[bool] = field(default_factory=list)
    alphas: List[float] = field(default_factory=list)
    half_width: Optional[float] = None

    @property
    def n_links(self) -> int:
        return len(self.links)

    def max_residual(self) -> float:
        return max((max(abs(r) for r in link.residuals) for link in self.links), default=0.0)

    def to_dict(self) -> Dict[str, Any]:
        return {
            'mode': self.mode,
            'coordinate': self.coordinate,
            'epsilon': self.epsilon,
            'amplitudes': list(self.amplitudes),
            'levels': list(self.levels),
            'bridging': list(self.bridging),
            'alphas': list(self.alphas),
            'half_width': self.half_width,
            'frequency_check': list(self.frequency_check),
            'links': [link.to_dict() for link in self.links]
        }


def level_value(mode: str, a: float, params: LatticeParams) -> float:
    """I (nonresonant) or H0 (resonant) on the plane wave of amplitude a."""
    if mode == 'nonresonant':
        return float(plane_wave_I(a, params))
    return float(plane_wave_h0(a, params))


def amplitude_for_level(mode: str, level: float, params: LatticeParams, branch: int = 1) -> float:
    """
    Invert level_value with brentq.

    For the resonant level (minimal at a = omega) branch +1 selects a >= omega
    and branch -1 selects a <= omega.

    Raises:
        ParameterError: the level is not attained inside the amplitude range
    """
    lower, upper = params.amplitude_range()
    f = lambda a: level_value(mode, a, params) - level
    if mode == 'resonant' and branch == -1:
        lo, hi = lower, params.omega
        if not (f(hi) <= 0.0 <= f(lo)):
            raise ParameterError(f"level {level!r} not attained on the branch a <= omega")
        return float(brentq(f, lo, hi, xtol=1e-15, rtol=4 * np.finfo(float).eps))

    lo = max(lower, params.omega) if mode == 'resonant' else lower
    if f(lo) > 0.0:
        raise ParameterError(f"level {level!r} lies below the admissible range")
    if np.isfinite(upper):
        hi = upper
    else:
        hi = 2.0 * lo + 1.0
        for _ in range(200):
            if f(hi) >= 0.0:
                break
            hi *= 2.0
    if f(hi) < 0.0:
        raise ParameterError(f"level {level!r} lies above the admissible range")
    return float(brentq(f, lo, hi, xtol=1e-15, rtol=4 * np.finfo(float).eps))


def torus_frequency(a: float, omega: float = 0.0) -> float:
    """1 / (2 |a^2 - omega^2|); infinite at a = omega."""
    gap = abs(a * a - omega * omega)
    return float(np.inf) if gap == 0 else 1.0 / (2.0 * gap)


def rational_proximity(frequency: float, max_denominator: int = 64) -> Tuple[Optional[Fraction], float]:
    """Nearest rational with bounded denominator and its distance."""
    if not np.isfinite(frequency):
        return None, float(np.inf)
    nearest = Fraction(frequency).limit_denominator(max_denominator)
    return nearest, abs(frequency - float(nearest))


def resonance_half_width(epsilon: float, gap_at_omega: float, curvature: float) -> float:
    """w = min(sqrt(eps), sqrt(g(omega) / (4 c)))."""
    if curvature <= 0 or gap_at_omega <= 0:
        raise ParameterError("resonance width needs positive curvature and gap")
    return float(min(np.sqrt(epsilon), np.sqrt(gap_at_omega / (4.0 * curvature))))


def _nudge(a: float, toward: float, omega: float, max_denominator: int,
           distance: float) -> Tuple[float, Dict[str, Any]]:
    """Move a towards `toward` until its torus frequency is distance-far from every small-denominator rational."""
    record = _frequency_record(a, omega, max_denominator)
    if record['distance'] >= distance:
        return a, record

    nearest, _ = rational_proximity(record['frequency'], max_denominator)
    side = 1.0 if a >= omega else -1.0
    moved = None
    for f_new in (float(nearest) + 1.5 * distance, float(nearest) - 1.5 * distance):
        if f_new <= 0:
            continue
        candidate = np.sqrt(omega * omega + side / (2.0 * f_new))
        if (toward - a) * (candidate - a) > 0 and abs(candidate - a) < abs(toward - a):
            moved = float(candidate)
            break
    if moved is None:
        raise ChainError("no room to move off a rational torus frequency", a, a)

    freq = torus_frequency(moved, omega)
    nearest, dist = rational_proximity(freq, max_denominator)
    record.update({'amplitude': moved, 'frequency': freq, 'nearest_rational': str(nearest),
                   'distance': dist, 'nudged': True, 'shift': moved - a})
    logger.debug(f"nudged amplitude {a:.12g} -> {moved:.12g} off frequency {nearest}")
    return moved, record


def _advance(level: Callable[[float], float], a_j: float, a_stop: float, gap: float, sign: float) -> float:
    """Next amplitude on a monotone segment where the level has moved by sign * gap, or a_stop."""
    target = level(a_j) + sign * gap
    if sign * (level(a_stop) - target) <= 0.0:
        return a_stop
    return float(brentq(lambda a: level(a) - target, a_j, a_stop, xtol=1e-15, rtol=4 * np.finfo(float).eps))


def build_chain(mode: str, A1: float, A2: float, epsilon: float, params: LatticeParams,
                alpha: Optional[float] = None, coordinate: str = 'level', margin: float = 0.1,
                max_denominator: int = 64, rational_distance: float = 1e-6,
                alpha_factor: float = 10.0, max_levels: int = 2000,
                melnikov_kwargs: Optional[Dict[str, Any]] = None, start_branch: int = 1) -> TransitionChain:
    """
    Greedy transition chain from A1 to A2.

    Args:
        mode: 'nonresonant' or 'resonant'
        A1, A2: Endpoints as levels or amplitudes (see coordinate); the
            corresponding amplitudes must satisfy a(A1) <= a(A2). Both are kept
            exactly even when their torus frequency is near a rational
        epsilon: Perturbation size
        params: Lattice parameters (omega = 0 for nonresonant)
        alpha: Coupling for every link; None uses alpha_factor * alpha_min per link
        coordinate: 'level' or 'amplitude'. Resonant levels map to a >= omega
            except A1 with start_branch = -1; endpoints on both sides of omega
            cross the resonance through one bridging level at omega + w/2
        margin: Fraction of the Melnikov gap left unused
        max_denominator, rational_distance: Rational-proximity filter on the
            torus frequency
        alpha_factor: Multiple of alpha_min used when alpha is None
        max_levels: Upper bound on the chain length
        melnikov_kwargs: Extra arguments for compute_M
        start_branch: Branch of the resonant level A1 (-1 for a <= omega)

    Returns:
        TransitionChain

    Raises:
        ChainError: a gap vanishes, alpha is too small, a link has no
            transversal solution, or the chain grows past max_levels
    """
    if mode not in MELNIKOV_MODES:
        raise ParameterError(f"Unknown chain mode: {mode!r}")
    if coordinate not in COORDINATES:
        raise ParameterError(f"Unknown coordinate: {coordinate!r}")
    if not (np.isfinite(epsilon) and epsilon > 0):
        raise ParameterError(f"epsilon must be positive, got {epsilon!r}")
    if not (0.0 <= margin < 1.0):
        raise ParameterError(f"margin must lie in [0, 1), got {margin!r}")
    if start_branch not in (1, -1):
        raise ParameterError(f"start_branch must be +1 or -1, got {start_branch!r}")
    if start_branch == -1 and not (mode == 'resonant' and coordinate == 'level'):
        raise ParameterError("start_branch = -1 applies to resonant level coordinates only")
    if alpha is None and alpha_factor <= 1.0:
        raise ParameterError("alpha_factor must exceed 1")

    omega = params.omega
    melnikov_kwargs = dict(melnikov_kwargs or {})
    level = lambda a: level_value(mode, a, params)
    cache: Dict[float, MelnikovResult] = {}

    def melnikov_at(a: float) -> MelnikovResult:
        if a not in cache:
            cache[a] = compute_M(mode, a, params, **melnikov_kwargs)
        return cache[a]

    def gap_at(a: float) -> float:
        return 2.0 * epsilon * melnikov_at(a).amp56 * (1.0 - margin)

    if coordinate == 'level':
        a_start = amplitude_for_level(mode, A1, params, branch=start_branch)
        a_end = amplitude_for_level(mode, A2, params)
    else:
        a_start, a_end = float(A1), float(A2)
        params.check_amplitude(a_start)
        params.check_amplitude(a_end)
    if a_start > a_end:
        raise ParameterError(f"A1 must not lie beyond A2 (amplitudes {a_start}, {a_end})")

    chain = TransitionChain(mode=mode, coordinate=coordinate, epsilon=float(epsilon))

    crossing = mode == 'resonant' and a_start < omega < a_end
    bridge_from = bridge_to = None
    if crossing:
        curvature = 0.5 * float(plane_wave_h0_derivative(omega, params, order=2))
        w = resonance_half_width(epsilon, gap_at(omega), curvature)
        chain.half_width = w
        bridge_from = max(a_start, omega - w)
        bridge_to = min(omega + 0.5 * w, a_end)
        logger.info(f"resonant band half-width w={w:.6g}; bridging {bridge_from:.8g} -> {bridge_to:.8g}")
        phase = 'left' if a_start < bridge_from else 'bridge'
    else:
        phase = 'main'
    # the level decreases in a below omega
    main_sign = -1.0 if mode == 'resonant' and a_end <= omega else 1.0

    record = _endpoint_record(a_start, omega, max_denominator, rational_distance)
    _append_level(chain, a_start, level(a_start), record, bridging=False)

    while chain.amplitudes[-1] < a_end:
        if len(chain.amplitudes) >= max_levels:
            raise ChainError(f"chain exceeded {max_levels} levels", chain.levels[-1], chain.amplitudes[-1])
        a_j = chain.amplitudes[-1]
        g = gap_at(a_j)
        if not (np.isfinite(g) and g > 0.0):
            raise ChainError(f"Melnikov gap vanishes at a={a_j:.12g}", chain.levels[-1], a_j)

        is_bridge = False
        if phase == 'left':
            a_next = _advance(level, a_j, bridge_from, g, -1.0)
            if a_next == bridge_from:
                phase = 'bridge'
        elif phase == 'bridge':
            a_next, is_bridge, phase = bridge_to, True, 'right'
            if abs(level(a_j) - level(a_next)) > g:
                raise ChainError(f"resonant band too wide to bridge at a={a_j:.12g}", chain.levels[-1], a_j)
        elif phase == 'right':
            a_next = _advance(level, a_j, a_end, g, 1.0)
        else:
            a_next = _advance(level, a_j, a_end, g, main_sign)
        reached_end = a_next >= a_end

        if reached_end:
            record = _endpoint_record(a_next, omega, max_denominator, rational_distance)
        elif not is_bridge:
            a_next, record = _nudge(a_next, a_j, omega, max_denominator, rational_distance)
        else:
            record = _frequency_record(a_next, omega, max_denominator)
        if a_next <= a_j:
            raise ChainError(f"chain stalled at a={a_j:.12g}", chain.levels[-1], a_j)
        _link(chain, mode, a_j, a_next, epsilon, alpha, alpha_factor, melnikov_at(a_j), level)
        _append_level(chain, a_next, level(a_next), record, bridging=is_bridge)
        if reached_end:
            break

    logger.info(f"{mode} chain: {len(chain.amplitudes)} levels, {chain.n_links} links, "
                f"{sum(chain.bridging)} bridging")
    return chain


def _frequency_record(a: float, omega: float, max_denominator: int) -> Dict[str, Any]:
    freq = torus_frequency(a, omega)
    nearest, dist = rational_proximity(freq, max_denominator)
    return {'amplitude': a, 'frequency': freq, 'nearest_rational': None if nearest is None else str(nearest),
            'distance': dist, 'nudged': False, 'shift': 0.0}


def _endpoint_record(a: float, omega: float, max_denominator: int, rational_distance: float) -> Dict[str, Any]:
    record = _frequency_record(a, omega, max_denominator)
    record['rational_endpoint'] = bool(record['distance'] < rational_distance)
    if record['rational_endpoint']:
        logger.warning(f"endpoint a={a:.12g} has torus frequency within {record['distance']:.3e} "
                       f"of {record['nearest_rational']}; kept as requested")
    return record


def _append_level(chain: TransitionChain, a: float, value: float, record: Dict[str, Any],
                  bridging: bool) -> None:
    record = dict(record, index=len(chain.amplitudes), level=value)
    chain.amplitudes.append(float(a))
    chain.levels.append(float(value))
    chain.frequency_check.append(record)
    chain.bridging.append(bridging)


def _link(chain: TransitionChain, mode: str, a_j: float, a_next: float, epsilon: float,
          alpha: Optional[float], alpha_factor: float, result: MelnikovResult,
          level: Callable[[float], float]) -> None:
    alpha_min = result.alpha_min()
    if not np.isfinite(alpha_min):
        raise ChainError(f"alpha_min is unbounded at a={a_j:.12g}", level(a_j), a_j)
    if alpha is None:
        alpha_j = alpha_factor * alpha_min
    else:
        alpha_j = float(alpha)
        if abs(alpha_j) <= alpha_min:
            raise ChainError(f"|alpha| = {abs(alpha_j):.6g} does not exceed alpha_min = {alpha_min:.6g} "
                             f"at a={a_j:.12g}", level(a_j), a_j)
    try:
        solution = solve_intersection(mode, level(a_j), level(a_next), epsilon, alpha_j, result)
    except SolvabilityError as e:
        raise ChainError(f"link from a={a_j:.12g} has no transversal solution: {e}", level(a_j), a_j) from e
    chain.links.append(solution)
    chain.alphas.append(alpha_j)
