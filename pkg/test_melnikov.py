"""
Tests for the Melnikov integrals and the intersection equations
"""

import sys
from pathlib import Path

import numpy as np
import pytest

# Add src to path
sys.path.insert(0, str(Path(__file__).parent))

from src.darboux.homoclinic import HomoclinicParams, derived_constants
from src.lattice.core import LatticeParams, plane_wave_h0, plane_wave_I
from src.melnikov.integrals import (
    CSV_COLUMNS, MelnikovResult, arnold_integral, bracket_kernel_check, compute_M,
    compute_M_nonresonant, compute_M_resonant, direct_bracket_integrals, hatted_orbit,
    hatted_profile, melnikov_equations, solvability_flags, sweep_curves, truncation_time
)
from src.melnikov.intersection import jacobian_determinant, solve_intersection, wrap_angle
from src.utils.errors import AmplitudeRangeError, ParameterError, QuadratureError, SolvabilityError

NONRES = LatticeParams(3)
RES = LatticeParams(3, omega=10.0)


@pytest.fixture(scope="module")
def nonresonant():
    return compute_M_nonresonant(6.0, NONRES)


@pytest.fixture(scope="module")
def resonant():
    return compute_M_resonant(10.5, RES)


def _relative(x, y):
    x, y = np.asarray(x), np.asarray(y)
    return float(np.max(np.abs(x - y) / np.maximum(1.0, np.abs(y))))


def test_result_amplitudes(nonresonant, resonant):
    for r in (nonresonant, resonant):
        assert r.reconstruction_defect() < 1e-12 * max(1.0, r.amp12, r.amp34, r.amp56)
        assert r.amp56 > 0.0
        assert -np.pi <= r.th1 <= np.pi
        assert len(r.as_row()) == len(CSV_COLUMNS)
        assert np.isfinite(r.error_estimate)
    assert nonresonant.mode == 'nonresonant' and nonresonant.N == 3
    assert resonant.omega == 10.0
    assert nonresonant.alpha_min() == pytest.approx(nonresonant.amp34 / nonresonant.amp12)
    assert resonant.alpha_min() == pytest.approx(resonant.amp12 / resonant.amp34)


def test_truncation_time():
    mu = derived_constants(6.0, NONRES).mu
    T = truncation_time(mu)
    assert 1.0 / np.cosh(2.0 * mu * T) == pytest.approx(1e-14, rel=1e-6)


def test_quadrature_is_robust(nonresonant):
    coarse = compute_M('nonresonant', 6.0, NONRES, quadrature='gk15')
    wide = compute_M('nonresonant', 6.0, NONRES, T=2.0 * nonresonant.T)
    assert _relative(coarse.M, nonresonant.M) < 1e-9
    assert _relative(wide.M, nonresonant.M) < 1e-9


def test_fiber_shift_invariance(nonresonant, resonant):
    shifted = compute_M('nonresonant', 6.0, NONRES, p=0.3)
    assert _relative(shifted.M, nonresonant.M) < 1e-8
    shifted = compute_M('resonant', 10.5, RES, p=-0.2)
    assert _relative(shifted.M, resonant.M) < 1e-8


def test_hatted_orbit_strips_the_phase():
    hp = HomoclinicParams(6.0, NONRES, gamma=0.7, p=0.3)
    c = hp.constants
    for t in (-0.1, 0.0, 0.05):
        q_hat, V = hatted_orbit(hp, t)
        q_ref, V_ref = hatted_profile(c, NONRES, hp.branch, t + hp.p / c.mu)
        assert np.allclose(q_hat, q_ref, rtol=1e-10, atol=1e-10)
        assert np.allclose(V, V_ref, rtol=1e-10, atol=1e-10)


@pytest.mark.parametrize("mode,a,params", [
    ('nonresonant', 6.0, NONRES),
    ('resonant', 10.5, RES),
])
def test_kernels_match_poisson_brackets(mode, a, params):
    assert bracket_kernel_check(mode, a, params, np.linspace(-0.2, 0.2, 9)) < 1e-8


def test_direct_brackets_match_nonresonant_equations(nonresonant):
    r = nonresonant
    g, t0, alpha = 0.3, 0.2, 1.7
    J1, J2 = direct_bracket_integrals('nonresonant', 6.0, NONRES, g, t0, alpha)
    first = alpha * r.amp12 * np.sin(t0 + r.th1) + r.amp34 * np.sin(2 * g + r.th2)
    second = r.amp56 * np.sin(2 * g + r.th3)
    scale = max(1.0, alpha * r.amp12 + r.amp34, r.amp56)
    assert abs(J1 - 2.0 * first) < 1e-7 * scale
    assert abs(J2 - 2.0 * second) < 1e-7 * scale
    assert arnold_integral(6.0, NONRES, alpha, t0, g) == pytest.approx(J1, rel=1e-10, abs=1e-10)


def test_direct_brackets_match_resonant_equations(resonant):
    r = resonant
    g, t0, alpha = 0.3, 0.2, 1.7
    J1, J2 = direct_bracket_integrals('resonant', 10.5, RES, g, t0, alpha)
    first = r.amp12 * np.sin(t0 + r.th1) + alpha * r.amp34 * np.sin(g + r.th2)
    second = r.amp56 * np.sin(t0 + r.th3)
    scale = max(1.0, r.amp12 + alpha * r.amp34, r.amp56)
    assert abs(J1 - 2.0 * first) < 1e-7 * scale
    assert abs(J2 - 2.0 * second) < 1e-7 * scale


def test_mode_checks():
    with pytest.raises(ParameterError):
        compute_M('periodic', 6.0, NONRES)
    with pytest.raises(ParameterError):
        compute_M('nonresonant', 10.5, RES)
    # resonant integrals need omega above the lower end of the amplitude range
    with pytest.raises(ParameterError):
        compute_M('resonant', 6.0, NONRES)
    with pytest.raises(ParameterError):
        compute_M('resonant', 6.0, LatticeParams(3, omega=3.0 * np.tan(np.pi / 3.0)))
    with pytest.raises(AmplitudeRangeError):
        compute_M('nonresonant', 5.0, NONRES)
    with pytest.raises(QuadratureError):
        MelnikovResult.from_integrals(6.0, 'nonresonant', [1.0, 2.0, np.nan, 0.0, 0.0, 0.0])


def test_alpha_min_unbounded_when_amplitude_vanishes():
    r = MelnikovResult.from_integrals(6.0, 'nonresonant', [0.0, 0.0, 1.0, 0.0, 1.0, 0.0])
    assert r.alpha_min() == np.inf


@pytest.mark.parametrize("fixture_name,level", [
    ('nonresonant', lambda a: float(plane_wave_I(a, NONRES))),
    ('resonant', lambda a: float(plane_wave_h0(a, RES))),
])
def test_intersection_at_equal_levels(request, fixture_name, level):
    r = request.getfixturevalue(fixture_name)
    alpha = 3.0 * r.alpha_min() + 1.0
    eps = 1e-3
    a1 = a2 = level(r.a)
    solution = solve_intersection(r.mode, a1, a2, eps, alpha, r)
    eq1, eq2 = melnikov_equations(r, solution.gamma_hat, solution.t0, alpha, eps, a1, a2)
    assert abs(eq1) < 1e-10 * max(1.0, alpha * (r.amp12 + r.amp34))
    assert abs(eq2) < 1e-10 * max(1.0, eps * r.amp56)
    assert solution.jacobian_det == pytest.approx(
        jacobian_determinant(r, solution.gamma_hat, solution.t0, alpha, eps))
    assert abs(solution.jacobian_det) > 0.0
    assert -np.pi < solution.t0 <= np.pi
    assert 0.0 <= solution.gamma_hat < 2.0 * np.pi
    assert all(abs(solution.t0) <= abs(c.t0) for c in solution.alternatives)
    assert solution.to_dict()['alpha_min'] == pytest.approx(r.alpha_min())


def test_intersection_with_a_level_gap(nonresonant):
    r = nonresonant
    eps = 1e-3
    a1 = float(plane_wave_I(6.0, NONRES))
    a2 = a1 + eps * r.amp56
    alpha = 2.0 * r.alpha_min() + 0.5
    solution = solve_intersection('nonresonant', a1, a2, eps, alpha, r)
    assert max(abs(x) for x in solution.residuals) < 1e-10
    # a1 - a2 = 2 eps amp56 sin(2 g + th3) fixes the phase
    assert np.sin(2 * solution.gamma_hat + r.th3) == pytest.approx(-0.5, abs=1e-10)


def test_intersection_failures(nonresonant, resonant):
    r = nonresonant
    level = float(plane_wave_I(6.0, NONRES))
    with pytest.raises(SolvabilityError) as info:
        solve_intersection('nonresonant', level, level, 1e-3, 0.5 * r.alpha_min(), r)
    assert info.value.quantity == 'alpha'
    assert info.value.alpha_min == pytest.approx(r.alpha_min())

    with pytest.raises(SolvabilityError) as info:
        solve_intersection('nonresonant', level, level + 3e-3 * r.amp56, 1e-3, 3.0 * r.alpha_min() + 1.0, r)
    assert info.value.quantity == 'a1-a2'

    with pytest.raises(ParameterError):
        solve_intersection('resonant', level, level, 1e-3, 10.0, r)
    with pytest.raises(ParameterError):
        solve_intersection('resonant', level, level, 0.0, 10.0, resonant)

    flat = MelnikovResult.from_integrals(6.0, 'nonresonant', [1.0, 0.0, 1.0, 0.0, 0.0, 0.0])
    with pytest.raises(SolvabilityError) as info:
        solve_intersection('nonresonant', level, level, 1e-3, 10.0, flat)
    assert info.value.quantity == 'amp56'


def test_wrap_angle():
    assert wrap_angle(np.pi) == np.pi
    assert wrap_angle(-np.pi) == np.pi
    assert wrap_angle(3 * np.pi / 2) == pytest.approx(-np.pi / 2)


def test_sweep_matches_single_points(nonresonant):
    results = sweep_curves('nonresonant', [6.0, 6.5], NONRES, threads=2)
    assert [r.a for r in results] == [6.0, 6.5]
    assert results[0].as_row() == nonresonant.as_row()
    assert results[1].as_row() == compute_M('nonresonant', 6.5, NONRES).as_row()

    flags = solvability_flags(results)
    assert [f['a'] for f in flags] == [6.0, 6.5]
    assert all(set(f) == {'a', 'near_zero', 'sign_changes', 'solvable'} for f in flags)
    assert flags[0]['sign_changes'] == []
    with pytest.raises(AmplitudeRangeError):
        sweep_curves('nonresonant', [4.0], NONRES)


@pytest.mark.parametrize("fixture_name,seed", [('nonresonant', 11), ('resonant', 12)])
def test_solvability_dichotomy(request, fixture_name, seed):
    r = request.getfixturevalue(fixture_name)
    rng = np.random.default_rng(seed)
    eps = 1e-3
    base = float(plane_wave_I(r.a, NONRES)) if r.mode == 'nonresonant' else float(plane_wave_h0(r.a, RES))
    outcomes = {'alpha': 0, 'a1-a2': 0, 'solved': 0}
    for case in range(30):
        # each outcome in turn, 2% away from both boundaries
        kind = case % 3
        ratio = rng.uniform(0.1, 0.98) if kind == 0 else rng.uniform(1.02, 6.0)
        s = rng.uniform(1.02, 3.0) * rng.choice([-1.0, 1.0]) if kind == 1 else rng.uniform(-0.98, 0.98)
        if kind == 0 and case % 2:
            # a small alpha is reported before a wide level gap
            s = rng.uniform(1.02, 3.0)
        alpha = float(rng.choice([-1.0, 1.0]) * ratio * r.alpha_min())
        a1 = base + 2.0 * eps * r.amp56 * s
        if ratio < 1.0:
            with pytest.raises(SolvabilityError) as info:
                solve_intersection(r.mode, a1, base, eps, alpha, r)
            assert info.value.quantity == 'alpha'
            outcomes['alpha'] += 1
        elif abs(s) > 1.0:
            with pytest.raises(SolvabilityError) as info:
                solve_intersection(r.mode, a1, base, eps, alpha, r)
            assert info.value.quantity == 'a1-a2'
            outcomes['a1-a2'] += 1
        else:
            solution = solve_intersection(r.mode, a1, base, eps, alpha, r)
            assert max(abs(x) for x in solution.residuals) < 1e-10
            assert abs(solution.jacobian_det) > 0.0
            outcomes['solved'] += 1
    assert sum(outcomes.values()) == 30
    assert all(count > 0 for count in outcomes.values())
