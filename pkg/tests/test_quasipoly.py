import cmath
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import boundary_lambda, halley_lambertw
from delayadmit.errors import DomainError
from delayadmit.quasipoly import (
    ModeParams,
    analyze_mode,
    char_roots,
    count_rhp_roots,
    critical_delay,
    crossing_direction,
    crossing_frequency,
    eval_charfun,
    eval_charfun_derivative,
    in_lambda_region,
    is_critical,
    principal_arg,
    spectral_abscissa,
)

W0_MINUS_ONE = halley_lambertw(-1.0, 1j)

args = st.floats(math.pi / 2 + 1e-3, math.pi).flatmap(lambda a: st.sampled_from([a, -a]))
taus = st.floats(0.05, 10.0)
fills = st.floats(0.01, 0.99)


def member_from(arg, tau, fill):
    return ModeParams(fill * boundary_lambda(arg, tau), tau)


class TestModeParams:
    def test_rejects_nonnegative_real_part(self):
        with pytest.raises(DomainError):
            ModeParams(0.5, 1.0)
        with pytest.raises(DomainError):
            ModeParams(1j, 1.0)

    def test_rejects_bad_tau(self):
        for tau in (0.0, -1.0, math.inf, math.nan):
            with pytest.raises(DomainError):
                ModeParams(-1.0, tau)

    def test_negative_real_axis_has_arg_pi(self):
        assert principal_arg(complex(-1.0, -0.0)) == math.pi
        assert ModeParams(-2.0, 1.0).epsilon == pytest.approx(math.pi / 2)


class TestCharfun:
    def test_at_origin(self, unit_mode):
        assert eval_charfun(unit_mode, 0) == 1

    def test_crossing_point(self, crossing_mode):
        assert abs(eval_charfun(crossing_mode, 1j * math.pi / 4)) < 1e-15

    def test_lambert_root(self, unit_mode):
        assert abs(W0_MINUS_ONE - complex(-0.31813, 1.33724)) < 1e-5
        assert abs(eval_charfun(unit_mode, W0_MINUS_ONE)) < 1e-12

    def test_vectorized(self, unit_mode):
        s = np.array([0, 1j, W0_MINUS_ONE])
        vals = eval_charfun(unit_mode, s)
        assert vals.shape == (3,)
        assert vals[0] == 1

    def test_derivative_matches_difference(self, rng):
        mode = ModeParams(-0.7 + 0.3j, 1.3)
        for s in rng.normal(size=5) + 1j * rng.normal(size=5):
            h = 1e-6
            fd = (eval_charfun(mode, s + h) - eval_charfun(mode, s - h)) / (2 * h)
            assert abs(fd - eval_charfun_derivative(mode, s)) < 1e-7


class TestRegion:
    def test_heat_reciprocal_members(self):
        assert all(in_lambda_region(ModeParams(-1 / k**2, 1.0)) for k in range(1, 101))

    def test_outside(self):
        assert not in_lambda_region(ModeParams(-2.0, 1.0))

    def test_boundary_is_excluded(self, crossing_mode):
        assert not in_lambda_region(crossing_mode)
        assert is_critical(crossing_mode)

    @given(args, taus, fills)
    def test_strictly_inside_is_member(self, arg, tau, fill):
        assert in_lambda_region(member_from(arg, tau, fill))

    @given(args, taus, st.floats(1.01, 5.0))
    def test_outside_radius_is_not_member(self, arg, tau, grow):
        assert not in_lambda_region(ModeParams(grow * boundary_lambda(arg, tau), tau))

    @given(args, taus, fills, st.floats(0.1, 10.0))
    def test_scaling_invariance(self, arg, tau, fill, c):
        # membership depends on |lam| tau only
        mode = member_from(arg, tau, fill)
        assert in_lambda_region(ModeParams(mode.lam * c, tau / c))


class TestCriticalDelay:
    @pytest.mark.parametrize(
        "lam, expected",
        [(-1.0, math.pi / 2), (math.pi / 4 * cmath.exp(3j * math.pi / 4), 1.0), (-0.25, 2 * math.pi)],
    )
    def test_values(self, lam, expected):
        assert critical_delay(lam) == pytest.approx(expected, rel=1e-14)

    @given(args, st.floats(0.01, 10.0))
    def test_boundary_at_critical_delay(self, arg, r):
        lam = r * cmath.exp(1j * arg)
        tau = critical_delay(lam)
        mode = ModeParams(lam, tau)
        assert is_critical(mode, tol=1e-10)
        omega = crossing_frequency(lam)
        assert abs(eval_charfun(mode, 1j * omega)) <= 1e-10 * (1 + abs(lam))


class TestCrossing:
    def test_frequency_sign(self):
        assert crossing_frequency(-1.0) == 1.0
        assert crossing_frequency(cmath.exp(-3j * math.pi / 4)) == pytest.approx(-1.0)

    def test_crossing_mode(self, crossing_mode):
        w = crossing_frequency(crossing_mode.lam)
        assert w == pytest.approx(math.pi / 4)
        assert abs(eval_charfun(crossing_mode, 1j * w)) < 1e-15

    def test_direction_values(self):
        assert crossing_direction(1.0, 1.0) == 0.5
        assert crossing_direction(2.0, 0.0) == 4.0
        x = (math.pi / 4) ** 2
        assert crossing_direction(math.pi / 4, 1.0) == pytest.approx(x / (1 + x), rel=1e-14)
        assert crossing_direction(math.pi / 4, 1.0) == pytest.approx(0.3815, abs=1e-4)

    @given(args, st.floats(0.01, 10.0))
    def test_direction_matches_root_velocity(self, arg, r):
        # implicit differentiation of P(s; tau) = 0 at the crossing, by finite differences in tau
        lam = r * cmath.exp(1j * arg)
        tau = critical_delay(lam)
        w = crossing_frequency(lam)
        h = 1e-6 * tau
        roots = []
        for t in (tau - h, tau + h):
            mode = ModeParams(lam, t)
            rs = char_roots(mode, 4).roots
            roots.append(rs[np.argmin(np.abs(rs - 1j * w))])
        velocity = (roots[1].real - roots[0].real) / (2 * h)
        assert velocity == pytest.approx(crossing_direction(w, tau), rel=1e-5)
        assert velocity > 0

    def test_direction_rejects_negative_tau(self):
        with pytest.raises(DomainError):
            crossing_direction(1.0, -1.0)


class TestRoots:
    def test_principal_root(self, unit_mode):
        rs = char_roots(unit_mode, 0)
        assert len(rs) == 1
        assert abs(rs.roots[0] - W0_MINUS_ONE) < 1e-13

    def test_branch_roots_match_halley_oracle(self):
        mode = ModeParams(-0.8 + 0.4j, 1.7)
        x = mode.lam * mode.tau
        rs = char_roots(mode, 5)
        for s in rs.roots:
            # polish the returned root as a W value with the independent iteration
            w = halley_lambertw(x, s * mode.tau)
            assert abs(w / mode.tau - s) < 1e-12 * (1 + abs(s))

    def test_crossing_root_present(self, crossing_mode):
        rs = char_roots(crossing_mode, 0)
        assert np.min(np.abs(rs.roots - 1j * math.pi / 4)) < 1e-10

    def test_small_delay_approaches_undelayed_root(self):
        rs = char_roots(ModeParams(-1.0, 1e-8), 0)
        assert abs(rs.roots[0] - (-1.0)) < 1e-6

    def test_count_and_order(self, unit_mode):
        rs = char_roots(unit_mode, 4)
        assert len(rs) == 9
        assert np.all(np.diff(np.round(rs.roots.real, 12)) <= 0)
        assert rs.rightmost.imag > 0

    def test_negative_K(self, unit_mode):
        with pytest.raises(DomainError):
            char_roots(unit_mode, -1)

    @settings(max_examples=40, deadline=None)
    @given(st.floats(-3.0, -0.01), st.floats(-3.0, 3.0), taus)
    def test_conjugate_symmetry(self, re, im, tau):
        mode = ModeParams(complex(re, im), tau)
        a = char_roots(mode, 6).roots
        b = np.conj(char_roots(mode.conjugate(), 6).roots)
        # the sweep over -K..K is conjugation invariant up to the ends of the range
        inner = a[np.abs(a.imag) < 10 * math.pi / tau]
        for s in inner:
            assert np.min(np.abs(b - s)) <= 1e-9 * (1 + abs(s))


class TestAbscissa:
    def test_unit_mode(self, unit_mode):
        ab = spectral_abscissa(unit_mode, 8)
        assert ab.value == pytest.approx(W0_MINUS_ONE.real, abs=1e-12)
        assert ab.rhp_count == 0

    def test_critical_mode(self, crossing_mode):
        ab = spectral_abscissa(crossing_mode, 8)
        assert abs(ab.value) < 1e-10
        assert ab.rhp_count == 0

    def test_unstable_mode(self):
        ab = spectral_abscissa(ModeParams(-2.0, 2.0), 8)
        assert ab.value > 0
        assert ab.rhp_count == 2

    def test_count_agrees_with_roots(self):
        # lam tau = -8: several unstable pairs
        mode = ModeParams(-8.0, 1.0)
        rs = char_roots(mode, 16)
        assert count_rhp_roots(mode) == int(np.sum(rs.roots.real > 0))

    def test_analyze(self, unit_mode):
        rep = analyze_mode(unit_mode)
        assert rep.member and not rep.critical
        assert rep.critical_delay == pytest.approx(math.pi / 2)
        assert rep.rightmost_root == pytest.approx(W0_MINUS_ONE)
