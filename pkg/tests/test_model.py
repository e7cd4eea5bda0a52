"""Model layer: bound states, matching functions, eigenfunctions."""

import random

import mpmath
import pytest
from mpmath import mp, mpc, mpf

from starktunnel.precision import PrecisionContext
from starktunnel.model import (ModelParams, bound_states, select_state,
                               psi_bound, bound_norm, d_pm, d_pair,
                               d_pm_deriv, psi_w, eigenvalue_residual)
from oracles import bisect_bound_states


def test_params_validation():
    with pytest.raises(ValueError):
        ModelParams(F="1/50", delta_limit=True, L=1)
    with pytest.raises(ValueError):
        ModelParams(F="1/50")           # finite well without L, V0
    with pytest.raises(ValueError):
        ModelParams(F="-1/50", delta_limit=True)
    p = ModelParams(F="1/50", delta_limit=True)
    with mp.workdps(40):
        assert abs(p.alpha() + (2 * mpf(1) / 50) ** (mpf(1) / 3)) < mpf(10) ** -35
        assert p.norm_const() > 0


def test_delta_bound_state(delta50_params):
    sts = bound_states(delta50_params)
    assert len(sts) == 1
    assert mpf(sts[0].Q) == mpf(-1) / 2


def test_nanotip_contains_paper_level(nanotip_params_small):
    sts = bound_states(nanotip_params_small)
    qs = [float(s.Q) for s in sts]
    assert len(qs) >= 20
    st = select_state(sts, -0.1848)
    assert abs(float(st.Q) + 0.1848) < 5e-4
    for s in sts:
        assert eigenvalue_residual(s, nanotip_params_small) < mpf(10) ** -(40 - 5)


def test_bound_states_vs_bisection_oracle():
    params = ModelParams(F="1/100", L=1, V0=2, ctx=PrecisionContext(40))
    sts = bound_states(params)
    oracle = bisect_bound_states(1.0, 2.0)
    assert len(sts) == len(oracle)
    for s, q in zip(sts, sorted(oracle)):
        assert abs(float(s.Q) - q) < 1e-10


def test_psi_bound_junction_and_wall(nanotip_params_small):
    sts = bound_states(nanotip_params_small)
    st = select_state(sts, -0.1848)
    p = nanotip_params_small
    with mp.workdps(p.ctx.dps):
        # continuity at the junction: both branches equal 1
        assert abs(psi_bound(0, st, p) - 1) < mpf(10) ** -30
        left = psi_bound(mpf("-1e-20"), st, p)
        right = psi_bound(mpf("1e-20"), st, p)
        assert abs(left - right) < mpf(10) ** -19
        # Neumann wall: derivative vanishes at -L
        L = p.l_mp()
        h = mpf(10) ** -12
        d = (psi_bound(-L + h, st, p) - psi_bound(-L, st, p)) / h
        assert abs(d) < mpf(10) ** -10
        with pytest.raises(ValueError):
            psi_bound(float(-L) - 1.0, st, p)


def test_psi_bound_delta_tail(delta50_params):
    st = bound_states(delta50_params)[0]
    with mp.workdps(delta50_params.ctx.dps):
        v = psi_bound(3, st, delta50_params)
        assert abs(v - mpmath.exp(-3)) < mpf(10) ** -45


def test_d_pm_conjugate_symmetry(delta50_params):
    p = delta50_params
    with mp.workdps(p.ctx.dps):
        W = mpf("0.37")
        dp = d_pm(W, +1, p)
        dm = d_pm(W, -1, p)
        assert abs(dm - mpmath.conj(dp)) < mpf(10) ** (-(p.ctx.digits - 6)) * abs(dp)


def test_d_pm_recomputation_oracle(delta50_params):
    """Delta-limit values match an independent composition of ci() and
    elementary functions evaluated at doubled precision."""
    from starktunnel.precision import ci, ci_prime
    p = delta50_params
    ctx2 = PrecisionContext(p.ctx.digits * 2)
    p2 = ModelParams(F=p.F, delta_limit=True, ctx=ctx2)
    with mp.workdps(ctx2.dps):
        for wtxt in ("-0.3", "0.05", "1.9"):
            W = mpf(wtxt)
            alpha = p2.alpha()
            u0 = alpha * W / p2.f_mp()
            ref = (mp.pi / 2) * (ci_prime(u0, +1, ctx2) + ci(u0, +1, ctx2) / alpha)
            val = d_pm(W, +1, p)
            assert abs(val - ref) < mpf(10) ** (-(p.ctx.digits - 6)) * abs(ref)


def test_d_pm_paper_form_divides_cos(nanotip_params_small):
    p = nanotip_params_small
    with mp.workdps(p.ctx.dps):
        W = mpc("0.21", "-0.005")
        k = p.k_w(W)
        c = mpmath.cos(k * p.l_mp())
        assert abs(d_pm(W, +1, p, cleared=False) * c - d_pm(W, +1, p)) \
            < mpf(10) ** (-(p.ctx.digits - 8)) * abs(d_pm(W, +1, p))


def test_d_pm_cauchy_riemann(nanotip_params_small):
    """Finite differences of the cleared matching function satisfy the
    analyticity relations at random complex energies."""
    p = nanotip_params_small
    rng = random.Random(99)
    with mp.workdps(p.ctx.dps):
        h = mpf(10) ** -13
        for _ in range(5):
            W = mpc(1.5 * rng.random() - 0.4, -0.4 * rng.random() - 0.01)
            dx = (d_pm(W + h, +1, p) - d_pm(W - h, +1, p)) / (2 * h)
            dy = (d_pm(W + 1j * h, +1, p) - d_pm(W - 1j * h, +1, p)) / (2 * h)
            assert abs(dx + 1j * dy) < mpf(10) ** (-(p.ctx.digits // 2)) * abs(dx)


def test_d_pm_deriv_matches_finite_difference(nanotip_params_small):
    p = nanotip_params_small
    with mp.workdps(p.ctx.dps):
        W = mpc("0.4", "-0.01")
        h = mpf(10) ** -14
        fd = (d_pm(W + h, +1, p) - d_pm(W - h, +1, p)) / (2 * h)
        an = d_pm_deriv(W, +1, p)
        assert abs(fd - an) < mpf(10) ** -8 * abs(an)


def test_psi_w_junction_smoothness(nanotip_params_small):
    p = nanotip_params_small
    with mp.workdps(p.ctx.dps):
        W = mpf("0.13")
        h = mpf(10) ** -10
        left = psi_w(-h, W, p)
        right = psi_w(h, W, p)
        mid = psi_w(0, W, p)
        assert abs(left - right) < mpf(10) ** -9 * abs(mid)
        dl = (mid - left) / h
        dr = (right - mid) / h
        assert abs(dl - dr) < mpf(10) ** -8 * (abs(dl) + abs(dr) + 1)


def test_psi_w_equal_flux_components(nanotip_params_small):
    """Real-W eigenfunctions carry no net current: the incoming and outgoing
    coefficients have equal magnitude, |d~+| = |d~-|."""
    p = nanotip_params_small
    with mp.workdps(p.ctx.dps):
        dp, dm = d_pair(mpf("0.31"), p)
        assert abs(abs(dp) - abs(dm)) < mpf(10) ** (-(p.ctx.digits - 6)) * abs(dp)


def test_eigenfunction_relation_by_finite_differences(delta50_params):
    """H psi_W = W psi_W at exterior points, checked with a high-order stencil
    at 50-digit precision."""
    p = delta50_params
    ctx = p.ctx
    with mp.workdps(ctx.dps):
        W = mpf("0.22")
        F = p.f_mp()
        h = mpf(10) ** -4
        for x0txt in ("1.3", "7.7"):
            x0 = mpf(x0txt)
            # 8th-order second derivative
            c = [mpf(v) for v in ("-1/560", "8/315", "-1/5", "8/5", "-205/72",
                                  "8/5", "-1/5", "8/315", "-1/560")]
            vals = [psi_w(x0 + (i - 4) * h, W, p) for i in range(9)]
            d2 = sum(ci * vi for ci, vi in zip(c, vals)) / h ** 2
            lhs = -d2 / 2 - F * x0 * psi_w(x0, W, p)
            rhs = W * psi_w(x0, W, p)
            assert abs(lhs - rhs) < mpf(10) ** -8 * (abs(rhs) + 1)


def test_delta_limit_consistency():
    """Finite wells tuned to k tan(kL) = 1 at W = -1/2 approach the contact
    limit monotonically as L shrinks."""
    ctx = PrecisionContext(40)
    delta = ModelParams(F="1/50", delta_limit=True, ctx=ctx)
    with mp.workdps(ctx.dps):
        W = mpf("0.1")
        ref = d_pm(W, +1, delta)
        errs = []
        for Ltxt in ("1/100", "1/1000", "1/10000"):
            L = mpf(Ltxt.split("/")[0]) / mpf(Ltxt.split("/")[1])
            # pick V0 so that k tan(kL) = 1 at W = -1/2: k^2 L ~ 1 to O(L)
            # solve k tan(kL) = 1 for k with tan expansion at small L
            k = mpmath.findroot(lambda kk: kk * mpmath.tan(kk * L) - 1,
                                mpmath.sqrt(1 / L))
            V0 = k * k / 2 - mpf(-1) / 2
            pl = ModelParams(F="1/50", L=Ltxt, V0=Fraction_str(V0, 30), ctx=ctx)
            errs.append(abs(d_pm(W, +1, pl) - ref) / abs(ref))
        assert errs[0] > errs[1] > errs[2]
        assert errs[2] < mpf(10) ** -3


def Fraction_str(x, digits):
    """Rational string approximating an mp number to the given digits."""
    from fractions import Fraction
    return str(Fraction(mpmath.nstr(x, digits)).limit_denominator(10 ** digits))
