"""Resonance poles: refinement, families, census certificates, zero maps."""

import math

import mpmath
import numpy as np
import pytest
from mpmath import mp, mpc, mpf

from starktunnel.precision import PrecisionContext
from starktunnel.model import ModelParams, bound_states, d_pm
from starktunnel.poles import (find_pole, enumerate_poles, strip_winding,
                               MatchingEvaluator, zero_contour_map,
                               serialize_pole_set, load_pole_set,
                               classify_family)
from starktunnel.errors import CertificationError


def test_delta_b_pole(delta50_params):
    p = delta50_params
    W, dd, res = find_pole(mpc("-0.5", "-0.001"), p)
    with mp.workdps(p.ctx.dps):
        assert abs(W.real + mpf("0.51010550423126625527")) < mpf(10) ** -18
        assert W.imag < 0
        # width agrees with the semiclassical barrier exponent in order of
        # magnitude: Gamma ~ exp(-2 (2|Q|)^(3/2) / (3F))
        gamma_est = mpmath.exp(-2 * (2 * mpf("0.5")) ** mpf("1.5") / (3 * p.f_mp()))
        ratio = abs(2 * W.imag) / gamma_est
        assert mpf("1e-2") < ratio < mpf("1e2")
        assert res < 1e-30
        # winding number around the root is 1
        ev = MatchingEvaluator(p)
        n = strip_winding(p, ev, W.real - mpf("0.01"), W.real + mpf("0.01"),
                          mpf("0.01"))
        assert n == 1


def test_pole_refinement_residual_bound(delta50_params):
    p = delta50_params
    W, dd, res = find_pole(mpc("-0.5", "-0.001"), p)
    with mp.workdps(p.ctx.dps):
        assert abs(d_pm(W, +1, p)) / abs(dd) < mpf(10) ** (-(p.ctx.digits - 12))


def test_basin_robustness(delta50_params):
    p = delta50_params
    W1, _, _ = find_pole(mpc("-0.5", "-0.001"), p)
    W2, _, _ = find_pole(mpc("-0.499", "-0.0011"), p)
    with mp.workdps(p.ctx.dps):
        assert abs(W1 - W2) < mpf(10) ** (-(p.ctx.digits - 14))


def test_mirror_point_is_zero_of_other_sign(delta50_params):
    """d~+(conj W_p) = conj(d~-(W_p)): the mirror point is a zero of d~-,
    not of d~+."""
    p = delta50_params
    W, _, _ = find_pole(mpc("-0.5", "-0.001"), p)
    with mp.workdps(p.ctx.dps):
        lhs = d_pm(mpmath.conj(W), +1, p)
        rhs = mpmath.conj(d_pm(W, -1, p))
        assert abs(lhs - rhs) < mpf(10) ** (-(p.ctx.digits - 8)) * (abs(lhs) + 1)
        # and it is not a zero of d~+
        assert abs(d_pm(mpmath.conj(W), +1, p)) > mpf(10) ** -6


def test_enumerate_delta_strip(delta50_params):
    ps = enumerate_poles(delta50_params, mpf(3) / 100, re_lo=-0.9, re_hi=30.0)
    assert ps.completeness_certificate == 1
    assert len(ps.poles) == 1
    assert ps.poles[0].family == "B"


def test_determinism_bit_identical(delta50_params):
    a = enumerate_poles(delta50_params, mpf(3) / 100, re_lo=-0.9, re_hi=5.0)
    b = enumerate_poles(delta50_params, mpf(3) / 100, re_lo=-0.9, re_hi=5.0)
    sa = serialize_pole_set(a, delta50_params.ctx.digits)
    sb = serialize_pole_set(b, delta50_params.ctx.digits)
    assert sa == sb


def test_pole_set_roundtrip(delta50_params):
    ps = enumerate_poles(delta50_params, mpf(3) / 100, re_lo=-0.9, re_hi=5.0)
    text = serialize_pole_set(ps, delta50_params.ctx.digits)
    back = load_pole_set(text, delta50_params.ctx)
    assert len(back.poles) == len(ps.poles)
    assert back.completeness_certificate == ps.completeness_certificate
    with mp.workdps(delta50_params.ctx.dps):
        for p1, p2 in zip(ps.poles, back.poles):
            assert abs(p1.W - p2.W) < mpf(10) ** (-(delta50_params.ctx.digits - 2))
            assert p1.family == p2.family


def test_upper_half_windows_are_empty(delta50_params):
    p = delta50_params
    ev = MatchingEvaluator(p)
    with mp.workdps(p.ctx.dps):
        for lo, hi, top in (("-0.8", "0.5", "0.4"), ("0.5", "2.0", "0.3")):
            n = strip_winding(p, ev, mpf(lo), mpf(hi), mpf("-0.02"),
                              im_top=mpf(top))
            found = 1 if mpf(lo) < mpf("-0.51") < mpf(hi) else 0
            assert n == found  # only the B pole below the axis, nothing above


def test_strip_count_decreases_with_s(delta50_params):
    """Shrinking the contour depth monotonically shrinks the crossed set."""
    p = delta50_params
    ev = MatchingEvaluator(p)
    with mp.workdps(p.ctx.dps):
        n_deep = strip_winding(p, ev, mpf("-1.0"), mpf("8.0"), mpf("0.3"))
        n_mid = strip_winding(p, ev, mpf("-1.0"), mpf("8.0"), mpf("0.03"))
        n_thin = strip_winding(p, ev, mpf("-1.0"), mpf("8.0"), mpf("0.015"))
        assert n_deep >= n_mid >= n_thin >= 1


def test_family_classification_rule():
    ctx = PrecisionContext(40)
    p = ModelParams(F="1/50", delta_limit=True, ctx=ctx)
    qs = [mpf("-0.5")]
    assert classify_family(mpc("-0.51", "-1e-12"), qs, 0.5, p) == "B"
    assert classify_family(mpc("1.3", "-0.02"), qs, 0.5, p) == "A"
    # Stokes direction: arg W near -120 degrees
    w = 0.3 * complex(math.cos(-2 * math.pi / 3), math.sin(-2 * math.pi / 3))
    assert classify_family(mpc(w.real, w.imag), qs, 0.1, p) == "C"


def test_zero_contour_map_intersections(delta50_params):
    """Every enumerated pole lies within a grid cell of a Re/Im curve
    crossing, and the map reproduces the B pole location."""
    p = delta50_params
    st = bound_states(p)[0]
    ps = enumerate_poles(p, mpf(3) / 100, re_lo=-0.9, re_hi=2.0)
    zm = zero_contour_map(p, st, (-0.8, 1.5, -0.2, 0.02), grid=201)
    dx = (1.5 + 0.8) / 200
    dz = (0.02 + 0.2) / 200
    for pole in ps.poles:
        w = pole.as_complex()
        near_re = any(min(abs(w.real - p1[0]), abs(w.real - p2[0])) < 2 * dx
                      and min(abs(w.imag - p1[1]), abs(w.imag - p2[1])) < 2 * dz
                      for (p1, p2) in zm["re_zero"])
        near_im = any(min(abs(w.real - p1[0]), abs(w.real - p2[0])) < 2 * dx
                      and min(abs(w.imag - p1[1]), abs(w.imag - p2[1])) < 2 * dz
                      for (p1, p2) in zm["im_zero"])
        assert near_re and near_im


def test_strongfield_map_has_three_families():
    """A strong field over a shallow well shows all three families in the
    lower half-plane."""
    ctx = PrecisionContext(50)
    p = ModelParams(F=1, L=2, V0=2, ctx=ctx)
    ps = enumerate_poles(p, mpf("0.35"), re_lo=-2.2, re_hi=8.0)
    fams = {pl.family for pl in ps.poles}
    assert ps.completeness_certificate == len(ps.poles) >= 3
    assert "B" in fams and ("A" in fams or "C" in fams)
