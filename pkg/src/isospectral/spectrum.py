"""
Critical points of the Floquet discriminant and the constants F_j
"""

from dataclasses import dataclass
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np

from .lax import discriminant, discriminant_derivative, discriminant_derivatives
from ..lattice.core import LatticeParams, as_array
from ..utils.errors import CriticalPointError, ParameterError
from ..utils.logger import get_logger

logger = get_logger()


@dataclass(frozen=True)
class SpectralScan:
    """One evaluation of the discriminant at z."""

    z: complex
    delta: complex
    ddelta_dz: complex
    is_critical: bool
    d2delta_dz2: Optional[complex] = None
    is_simple: Optional[bool] = None

    def to_dict(self) -> Dict[str, Any]:
        return {
            're_z': self.z.real, 'im_z': self.z.imag,
            're_delta': self.delta.real, 'im_delta': self.delta.imag,
            'abs_ddelta': abs(self.ddelta_dz),
            'abs_d2delta': None if self.d2delta_dz2 is None else abs(self.d2delta_dz2),
            'is_critical': self.is_critical, 'is_simple': self.is_simple
        }


@dataclass(frozen=True)
class AnnulusSearch:
    """Seed grid for the critical-point search: r_min <= |z| <= r_max."""

    r_min: float = 0.2
    r_max: float = 5.0
    radial_seeds: int = 64
    angular_seeds: int = 64

    def __post_init__(self):
        if not (0 < self.r_min < self.r_max):
            raise ParameterError(f"annulus needs 0 < r_min < r_max, got ({self.r_min}, {self.r_max})")
        if self.radial_seeds < 1 or self.angular_seeds < 1:
            raise ParameterError("seed counts must be positive")

    @classmethod
    def from_config(cls, config) -> 'AnnulusSearch':
        return cls(
            r_min=config.get('spectrum.r_min', 0.2),
            r_max=config.get('spectrum.r_max', 5.0),
            radial_seeds=config.get('spectrum.radial_seeds', 64),
            angular_seeds=config.get('spectrum.angular_seeds', 64)
        )

    def seeds(self) -> np.ndarray:
        radii = np.geomspace(self.r_min, self.r_max, self.radial_seeds)
        angles = 2.0 * np.pi * (np.arange(self.angular_seeds) + 0.5) / self.angular_seeds
        return (radii[:, None] * np.exp(1j * angles)[None, :]).ravel()


def second_derivative_fd(z: complex, state, params: LatticeParams, rel_step: float = 1e-5) -> complex:
    """Central difference of the analytic dDelta/dz."""
    delta = rel_step * max(abs(z), 1e-300)
    upper = discriminant_derivative(z + delta, state, params)
    lower = discriminant_derivative(z - delta, state, params)
    return (upper - lower) / (2.0 * delta)


def _newton(z: np.ndarray, state, params: LatticeParams, max_iter: int,
            r_lo: float, r_hi: float) -> np.ndarray:
    z = z.astype(complex).copy()
    alive = np.ones(z.shape, dtype=bool)
    for _ in range(max_iter):
        idx = np.flatnonzero(alive)
        if idx.size == 0:
            break
        _, d1, d2 = discriminant_derivatives(z[idx], state, params)
        with np.errstate(divide='ignore', invalid='ignore'):
            step = d1 / d2
        z_new = z[idx] - step
        bad = ~np.isfinite(z_new) | (np.abs(z_new) < r_lo) | (np.abs(z_new) > r_hi)
        done = ~bad & (np.abs(step) <= 1e-15 * np.abs(z_new))
        z[idx[~bad]] = z_new[~bad]
        alive[idx[bad | done]] = False
        z[idx[bad]] = np.nan
    return z


def find_critical_points(state, params: LatticeParams, search: Optional[AnnulusSearch] = None,
                         accept_tol: float = 1e-10, dedupe_tol: float = 1e-9,
                         simple_threshold: float = 1e-8, fd_rel_step: float = 1e-5,
                         max_iter: int = 60) -> List[SpectralScan]:
    """
    Critical points of Delta(., q) inside an annulus.

    Newton iteration on dDelta/dz runs from every seed of the polar grid at
    once; converged roots are deduplicated and classified.

    Args:
        state: LatticeState or complex array
        params: Lattice parameters
        search: Annulus and seed grid (default 0.2 <= |z| <= 5, 64 x 64 seeds)
        accept_tol: Largest accepted |dDelta/dz| (absolute)
        dedupe_tol: Roots closer than this (relative to max(1, |z|)) are merged
        simple_threshold: |d2Delta/dz2| above which a root is flagged simple
        fd_rel_step: Relative step of the central difference for d2Delta/dz2
        max_iter: Newton iterations per seed

    Returns:
        List of SpectralScan sorted by modulus then argument; empty (with a
        warning) when no seed converges
    """
    search = search or AnnulusSearch()
    q = as_array(state, params)
    roots = _newton(search.seeds(), q, params, max_iter, 0.5 * search.r_min, 2.0 * search.r_max)
    roots = roots[np.isfinite(roots)]
    roots = roots[(np.abs(roots) >= search.r_min) & (np.abs(roots) <= search.r_max)]

    if roots.size:
        _, d1, _ = discriminant_derivatives(roots, q, params)
        keep = np.abs(d1) <= accept_tol
        roots, d1 = roots[keep], d1[keep]
        roots = roots[np.argsort(np.abs(d1), kind='stable')]

    unique: List[complex] = []
    for r in roots:
        if all(abs(r - u) > dedupe_tol * max(1.0, abs(u)) for u in unique):
            unique.append(complex(r))

    if not unique:
        logger.warning("No critical point of the discriminant converged inside the annulus")
        return []

    unique.sort(key=lambda w: (round(abs(w), 9), np.angle(w)))
    scans = []
    for w in unique:
        d2 = second_derivative_fd(w, q, params, fd_rel_step)
        scans.append(SpectralScan(
            z=w,
            delta=discriminant(w, q, params),
            ddelta_dz=discriminant_derivative(w, q, params),
            is_critical=True,
            d2delta_dz2=d2,
            is_simple=bool(abs(d2) > simple_threshold)
        ))
    logger.debug(f"Found {len(scans)} critical points from {search.radial_seeds * search.angular_seeds} seeds")
    return scans


def track_critical_point(state, params: LatticeParams, z_guess: complex,
                         tol: float = 1e-13, max_iter: int = 50,
                         max_shift: float = 0.1) -> complex:
    """
    Newton refinement of a critical point from a nearby guess.

    Raises:
        CriticalPointError: no convergence, or the root moved further than
            max_shift * max(1, |z_guess|)
    """
    q = as_array(state, params)
    z = complex(z_guess)
    if z == 0:
        raise CriticalPointError("cannot track a critical point from z = 0")
    for _ in range(max_iter):
        _, d1, d2 = discriminant_derivatives(z, q, params)
        if d1 == 0:
            break
        if d2 == 0 or not np.isfinite(d2):
            raise CriticalPointError(f"vanishing second derivative while tracking near z={z!r}")
        step = d1 / d2
        z -= step
        if not np.isfinite(z) or z == 0:
            raise CriticalPointError(f"critical point lost while tracking from z={z_guess!r}")
        if abs(step) <= tol * max(1.0, abs(z)):
            break
    else:
        raise CriticalPointError(f"Newton did not converge from z={z_guess!r}")
    if abs(z - z_guess) > max_shift * max(1.0, abs(z_guess)):
        raise CriticalPointError(f"critical point jumped from {z_guess!r} to {z!r}")
    return z


def constant_F(state, params: LatticeParams, z_c: complex, track: bool = False) -> complex:
    """F_j = Delta(z_c(q), q); with track=True z_c is refined first."""
    if track:
        z_c = track_critical_point(state, params, z_c)
    return discriminant(complex(z_c), state, params)


def count_independent_constants(scans: Sequence[SpectralScan], tol: float = 1e-8) -> int:
    """
    Number of distinct |F_j| values among the critical points.

    Delta(-z) = (-1)^N Delta(z) and Delta(1/conj z) = conj Delta(z), so critical
    points related by these maps carry the same |F|.
    """
    values: List[float] = []
    for scan in scans:
        v = abs(scan.delta)
        if all(abs(v - u) > tol * max(1.0, u) for u in values):
            values.append(v)
    return len(values)


def most_separated_critical_point(scans: Sequence[SpectralScan]) -> SpectralScan:
    """Simple critical point with the largest |Delta^2 - 4|, i.e. the farthest from degeneracy."""
    candidates = [s for s in scans if s.is_simple] or list(scans)
    if not candidates:
        raise CriticalPointError("no critical points to choose from")
    return max(candidates, key=lambda s: abs(s.delta ** 2 - 4.0))


def nearest_critical_point(scans: Sequence[SpectralScan], z: complex) -> SpectralScan:
    if not scans:
        raise CriticalPointError("no critical points to choose from")
    return min(scans, key=lambda s: abs(s.z - z))


def spectrum_grid(state, params: LatticeParams, re_values: Sequence[float],
                  im_values: Sequence[float]) -> Tuple[List[str], List[List[float]]]:
    """
    Discriminant over a rectangular z-grid for the spectrum artifact.

    Returns:
        Header and rows (re_z, im_z, re_delta, im_delta, abs_ddelta); z = 0 is skipped
    """
    re_grid, im_grid = np.meshgrid(np.asarray(re_values, float), np.asarray(im_values, float), indexing='ij')
    z = (re_grid + 1j * im_grid).ravel()
    z = z[z != 0]
    header = ['re_z', 'im_z', 're_delta', 'im_delta', 'abs_ddelta']
    if z.size == 0:
        return header, []
    delta, d1, _ = discriminant_derivatives(z, state, params)
    rows = [[float(w.real), float(w.imag), float(d.real), float(d.imag), float(abs(g))]
            for w, d, g in zip(z, delta, d1)]
    return header, rows
