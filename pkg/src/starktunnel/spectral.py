"""Overlap amplitudes between the initial bound state and field-on eigenfunctions.

The amplitude splits into an interior part with a closed form and an exterior
part that is an exponentially weighted Airy integral over the initial tail.
Both are computed in *cleared* form (multiplied by cos(k_W L), matching the
cleared matching functions in :mod:`.model`), which keeps them entire in W.

Exterior part, written in the incoming/outgoing basis:

    a_out(W) = -i/(N |a|) * [ d~-(W) E_+(u0) - d~+(W) E_-(u0) ],   u0 = a W/F

with E_s(u0) = integral_0^oo exp(-sqrt(-2Q) y) ci_s(u0 + a y) dy rescaled by
|a|.  The bracket hides a large cancellation in the evanescent region, which
is why the whole pipeline carries full working precision here.
"""

from __future__ import annotations

from dataclasses import dataclass

import mpmath
from mpmath import mp, mpc, mpf

from .precision import PrecisionContext
from .model import ModelParams, BoundState, d_pair
from .airytab import exp_airy_direct, LineTable


@dataclass
class SpectralAmplitude:
    """Amplitude record at one energy: interior + exterior parts."""

    W: object
    a_inside: object
    a_outside: object
    quadrature_error: float

    @property
    def total(self):
        return self.a_inside + self.a_outside


def _g_inside(W, state: BoundState, params: ModelParams):
    """numerator gamma*cos(kL) - k sin(kL); identically 0 in the contact limit."""
    gamma = state.decay_rate()
    if params.delta_limit:
        return mpc(0)
    k = params.k_w(W)
    L = params.l_mp()
    return gamma * mpmath.cos(k * L) - k * mpmath.sin(k * L)


def amp_inside(W, state: BoundState, params: ModelParams, cleared: bool = True):
    """Interior overlap, cleared form [gamma cos(kL) - k sin(kL)] / (2N(Q-W)).

    The apparent pole at W = Q is removable (the numerator vanishes there by
    the bound-state condition); near Q the quotient is evaluated with enough
    extra digits to absorb the cancellation, and exactly at Q the analytic
    limit -g'(Q)/(2N) is returned.
    """
    ctx = params.ctx
    with mp.workdps(ctx.dps):
        W = mpc(W)
        if params.delta_limit:
            return mpc(0)
        N = params.norm_const()
        Q = mpf(state.Q)
        dist = abs(W - Q)
        if dist == 0:
            k = mpf(state.kQ)
            L = params.l_mp()
            c = mpmath.cos(k * L)
            s = mpmath.sin(k * L)
            gamma = state.decay_rate()
            gp = -gamma * L * s / k - s / k - L * c
            val = -gp / (2 * N)
        else:
            import math
            deficit = max(0, int(-math.log10(float(dist))) + 5)
            with mp.workdps(ctx.dps + deficit):
                Wb = mpc(W)
                g = _g_inside(Wb, state, params)
                val = g / (2 * params.norm_const() * (mpf(state.Q) - Wb))
        if not cleared:
            k = params.k_w(W)
            val = val / mpmath.cos(k * params.l_mp())
        return mpc(val)


def amp_outside_from_parts(dp, dm, ecp, ecm, params: ModelParams):
    """Exterior amplitude from matching functions and weighted Airy integrals."""
    with mp.workdps(params.ctx.dps):
        N = params.norm_const()
        aabs = -params.alpha()
        return -1j / (N * aabs) * (dm * ecp - dp * ecm)


def amp_outside(W, state: BoundState, params: ModelParams, tol=None,
                line: LineTable = None):
    """Exterior overlap at one energy.

    Uses the marched ``line`` table when the point is within its reach,
    otherwise falls back to direct rotated-ray quadrature; ``tol`` is the
    relative tolerance of the direct path.
    """
    ctx = params.ctx
    with mp.workdps(ctx.dps):
        W = mpc(W)
        u0 = params.alpha() * W / params.f_mp()
        beta = state.decay_rate() / (-params.alpha())
        dp, dm = d_pair(W, params)
        if line is not None and line.beta == beta:
            ecp = line.e_at([u0], +1)[0]
            ecm = line.e_at([u0], -1)[0]
        else:
            ecp = exp_airy_direct(u0, beta, +1, ctx, rel_tol=tol)
            ecm = exp_airy_direct(u0, beta, -1, ctx, rel_tol=tol)
        return amp_outside_from_parts(dp, dm, ecp, ecm, params)


def amplitude(W, state: BoundState, params: ModelParams, tol=None,
              line: LineTable = None) -> SpectralAmplitude:
    """Full cleared amplitude record at W."""
    ai = amp_inside(W, state, params)
    ao = amp_outside(W, state, params, tol=tol, line=line)
    if tol is None:
        tol = float(mpf(10) ** (-min(params.ctx.digits - 8, 48)))
    return SpectralAmplitude(W=W, a_inside=ai, a_outside=ao,
                             quadrature_error=float(tol))
