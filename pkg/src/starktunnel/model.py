"""Physical model: tilted half-space potential with a binding well at the origin.

The Hamiltonian is ``-1/2 d^2/dx^2 - V0`` on ``-L <= x <= 0`` (Neumann wall
at ``x = -L``) and ``-1/2 d^2/dx^2 - F x`` for ``x > 0``, in atomic units.
The contact-interaction ("atom") limit L -> 0, V0 -> oo replaces
``k_W tan(k_W L)`` by 1 and leaves a single bound state at energy -1/2.

Everything downstream is built from the two matching functions of the
energy-eigenfunction construction.  To keep them entire in W (no spurious
singularities at zeros of cos(k_W L)) they are evaluated in cleared form:

    d~(W, s) = (pi/2) [ cos(k L) ci_s'(a W/F) + (k/a) sin(k L) ci_s(a W/F) ]

with ``a = -(2F)^(1/3) < 0``, ``k = sqrt(2(V0+W))`` and ci_s = Bi + i s Ai.
The conventional form divides this by cos(k L).  Zeros of d~(W, +1) in the
lower half-plane are the outgoing resonance energies.

Note on constants: requiring the energy-eigenfunctions to be delta-normalized
in energy fixes the normalization constant to ``2^(2/3) F^(1/6)`` (checked
against the asymptotic envelope sqrt(2/(pi v)) and by reconstructing the
initial state at t = 0).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional

import mpmath
from mpmath import mp, mpc, mpf

from .precision import PrecisionContext, DEFAULT_CTX, ci_pair, airy


def _as_fraction(x) -> Fraction:
    if isinstance(x, Fraction):
        return x
    if isinstance(x, int):
        return Fraction(x)
    if isinstance(x, str):
        return Fraction(x)
    if isinstance(x, float):
        return Fraction(x).limit_denominator(10 ** 12)
    raise TypeError(f"cannot convert {x!r} to an exact rational")


@dataclass(frozen=True)
class ModelParams:
    """Model configuration; lengths/energies/fields as exact rationals.

    Exactly one of the finite well (L, V0) and the contact limit is active.
    """

    F: Fraction
    L: Optional[Fraction] = None
    V0: Optional[Fraction] = None
    delta_limit: bool = False
    ctx: PrecisionContext = field(default=DEFAULT_CTX)

    def __post_init__(self):
        object.__setattr__(self, "F", _as_fraction(self.F))
        if self.F <= 0:
            raise ValueError("F must be positive")
        if self.delta_limit:
            if self.L is not None or self.V0 is not None:
                raise ValueError("delta_limit excludes finite-well L, V0")
        else:
            if self.L is None or self.V0 is None:
                raise ValueError("finite well requires both L and V0")
            object.__setattr__(self, "L", _as_fraction(self.L))
            object.__setattr__(self, "V0", _as_fraction(self.V0))
            if self.L <= 0 or self.V0 <= 0:
                raise ValueError("L and V0 must be positive")

    # derived quantities, recomputed at the working precision on demand
    def f_mp(self):
        return mpf(self.F.numerator) / self.F.denominator

    def alpha(self):
        """-(2F)^(1/3) < 0."""
        return -(2 * self.f_mp()) ** (mpf(1) / 3)

    def norm_const(self):
        """Energy-delta normalization constant 2^(2/3) F^(1/6)."""
        return mpf(2) ** (mpf(2) / 3) * self.f_mp() ** (mpf(1) / 6)

    def l_mp(self):
        return mpf(self.L.numerator) / self.L.denominator

    def v0_mp(self):
        return mpf(self.V0.numerator) / self.V0.denominator

    def k_w(self, W):
        """sqrt(2(V0+W)), principal branch (finite well only)."""
        return mpmath.sqrt(2 * (self.v0_mp() + mpc(W)))

    def label(self) -> str:
        if self.delta_limit:
            return f"delta(F={self.F})"
        return f"well(L={self.L},V0={self.V0},F={self.F})"


@dataclass(frozen=True)
class BoundState:
    """Zero-field bound level: energy Q in (-V0, 0) and wavenumber inside."""

    Q: object          # mpf
    kQ: object = None  # mpf; None in the contact limit

    def decay_rate(self):
        """sqrt(-2Q), the exponential falloff of the outside tail."""
        return mpmath.sqrt(-2 * mpf(self.Q))


def bound_states(params: ModelParams) -> list:
    """All zero-field bound states, sorted by increasing energy.

    Roots of ``k sin(kL) = sqrt(2 V0 - k^2) cos(kL)`` on 0 < k < sqrt(2 V0),
    bracketed on a fine grid and polished by bisection at working precision.
    """
    ctx = params.ctx
    if params.delta_limit:
        with mp.workdps(ctx.dps):
            return [BoundState(Q=mpf(-1) / 2)]
    with mp.workdps(ctx.dps):
        L = params.l_mp()
        V0 = params.v0_mp()
        kmax = mpmath.sqrt(2 * V0)

        def h(k):
            return k * mpmath.sin(k * L) - mpmath.sqrt(2 * V0 - k * k) * mpmath.cos(k * L)

        n = max(2000, int(40 * float(kmax * L) / 3.14159) + 50)
        grid = [kmax * mpf(i) / n for i in range(1, n)]
        vals = [h(k) for k in grid]
        states = []
        for i in range(len(grid) - 1):
            if mpmath.sign(vals[i]) * mpmath.sign(vals[i + 1]) < 0:
                a, b = grid[i], grid[i + 1]
                fa = vals[i]
                for _ in range(ctx.dps * 4):
                    m = (a + b) / 2
                    fm = h(m)
                    if fm == 0:
                        a = b = m
                        break
                    if mpmath.sign(fm) == mpmath.sign(fa):
                        a, fa = m, fm
                    else:
                        b = m
                    if b - a < mpf(10) ** (-ctx.dps) * kmax:
                        break
                k = (a + b) / 2
                Q = k * k / 2 - V0
                if Q < 0:
                    states.append(BoundState(Q=Q, kQ=k))
        states.sort(key=lambda st: mpf(st.Q))
        return states


def select_state(states, energy_near) -> BoundState:
    """Bound state with energy closest to a target value."""
    if not states:
        raise ValueError("no bound states")
    with mp.workdps(50):
        target = mpf(str(energy_near))
        return min(states, key=lambda st: abs(mpf(st.Q) - target))


def eigenvalue_residual(state: BoundState, params: ModelParams):
    """|kQ tan(kQ L) - sqrt(-2Q)| (0 by definition in the contact limit)."""
    ctx = params.ctx
    with mp.workdps(ctx.dps):
        if params.delta_limit:
            return abs(mpmath.sqrt(-2 * mpf(state.Q)) - 1)
        k = mpf(state.kQ)
        return abs(k * mpmath.tan(k * params.l_mp()) - mpmath.sqrt(-2 * mpf(state.Q)))


def psi_bound(x, state: BoundState, params: ModelParams):
    """Zero-field bound wavefunction, normalized to 1 at the junction."""
    ctx = params.ctx
    with mp.workdps(ctx.dps):
        x = mpf(x)
        if params.delta_limit:
            if x < 0:
                raise ValueError("x < 0 outside the contact-limit domain")
            return mpmath.exp(-mpmath.sqrt(-2 * mpf(state.Q)) * x)
        L = params.l_mp()
        if x < -L:
            raise ValueError(f"x={x} lies left of the wall at -L")
        if x <= 0:
            k = mpf(state.kQ)
            return mpmath.cos(k * (L + x)) / mpmath.cos(k * L)
        return mpmath.exp(-mpmath.sqrt(-2 * mpf(state.Q)) * x)


def bound_norm(state: BoundState, params: ModelParams):
    """Squared L2 norm of psi_bound (closed form)."""
    ctx = params.ctx
    with mp.workdps(ctx.dps):
        g = mpmath.sqrt(-2 * mpf(state.Q))
        outside = 1 / (2 * g)
        if params.delta_limit:
            return outside
        k = mpf(state.kQ)
        L = params.l_mp()
        inside = (L / 2 + mpmath.sin(2 * k * L) / (4 * k)) / mpmath.cos(k * L) ** 2
        return inside + outside


def _clear_coeffs(W, params: ModelParams):
    """(cos(kL), (k/alpha) sin(kL)) clearing pair; (1, 1/alpha) in the contact limit."""
    if params.delta_limit:
        return mpf(1), 1 / params.alpha()
    k = params.k_w(W)
    L = params.l_mp()
    return mpmath.cos(k * L), (k / params.alpha()) * mpmath.sin(k * L)


def d_pm(W, sign: int, params: ModelParams, cleared: bool = True):
    """Matching function d~(W, sign); ``cleared=False`` divides by cos(k L).

    Analytic in W (entire, even in k_W); its lower-half-plane zeros at
    sign=+1 are the outgoing resonance energies.
    """
    ctx = params.ctx
    with mp.workdps(ctx.dps):
        W = mpc(W)
        c, g = _clear_coeffs(W, params)
        u0 = params.alpha() * W / params.f_mp()
        cp, cpp, cm, cmp_ = ci_pair(u0, ctx)
        if sign > 0:
            val = (mp.pi / 2) * (c * cpp + g * cp)
        else:
            val = (mp.pi / 2) * (c * cmp_ + g * cm)
        if not cleared:
            val = val / c
        return val


def d_pair(W, params: ModelParams):
    """(d~+, d~-) sharing one Airy evaluation."""
    ctx = params.ctx
    with mp.workdps(ctx.dps):
        W = mpc(W)
        c, g = _clear_coeffs(W, params)
        u0 = params.alpha() * W / params.f_mp()
        cp, cpp, cm, cmp_ = ci_pair(u0, ctx)
        return ((mp.pi / 2) * (c * cpp + g * cp),
                (mp.pi / 2) * (c * cmp_ + g * cm))


def d_pm_deriv(W, sign: int, params: ModelParams):
    """d/dW of the cleared matching function (exact, via the Airy ODE)."""
    ctx = params.ctx
    with mp.workdps(ctx.dps):
        W = mpc(W)
        alpha = params.alpha()
        F = params.f_mp()
        u0 = alpha * W / F
        cp, cpp, cm, cmp_ = ci_pair(u0, ctx)
        P, Pp = (cp, cpp) if sign > 0 else (cm, cmp_)
        if params.delta_limit:
            return (mp.pi / 2) * ((alpha ** 2 * W / F ** 2) * P + Pp / F)
        k = params.k_w(W)
        L = params.l_mp()
        c = mpmath.cos(k * L)
        s = mpmath.sin(k * L)
        coeff_dp = -L * s / k + k * s / F
        coeff_d = c * alpha ** 2 * W / F ** 2 + s / (alpha * k) + L * c / alpha
        return (mp.pi / 2) * (coeff_dp * Pp + coeff_d * P)


def psi_w(x, W, params: ModelParams):
    """Energy eigenfunction at real or complex W.

    Inside:  cos(k(L+x)) / (N sqrt(d~+ d~-))
    Outside: (-i/N) sqrt(d~-/d~+) ci+(a(x+W/F)) + (i/N) sqrt(d~+/d~-) ci-(...)

    Both ratio square roots are derived from one principal sqrt(d~+ d~-)
    (sqrt(d~-/d~+) := d~-/sqrt(d~+ d~-) and its mirror), which ties the
    branch choices together and keeps the two sides of the junction smooth
    for every W; the residual freedom is one overall sign per energy.
    """
    ctx = params.ctx
    with mp.workdps(ctx.dps):
        x = mpf(x)
        W = mpc(W)
        N = params.norm_const()
        dp, dm = d_pair(W, params)
        sq = mpmath.sqrt(dp * dm)
        if x < 0:
            if params.delta_limit:
                raise ValueError("x < 0 outside the contact-limit domain")
            L = params.l_mp()
            if x < -L:
                raise ValueError(f"x={x} lies left of the wall at -L")
            k = params.k_w(W)
            return mpmath.cos(k * (L + x)) / (N * sq)
        u = params.alpha() * (x + W / params.f_mp())
        cp, _, cm, _ = ci_pair(u, ctx)
        return (-1j / N) * (dm * cp - dp * cm) / sq
