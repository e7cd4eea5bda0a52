"""Arbitrary-precision arithmetic context and complex Airy evaluations.

All heavy numerics in this package run on mpmath numbers under an explicit
:class:`PrecisionContext`.  The context carries the *requested* decimal
precision; internally every routine works at ``digits + guard_digits`` so
that results are faithful to the requested precision after the usual few
digits of arithmetic loss.

The two incoming/outgoing Airy combinations used throughout are

    ci(z, +1) = Bi(z) + i Ai(z)        (outgoing for large negative z)
    ci(z, -1) = Bi(z) - i Ai(z)        (incoming)

Far from the real axis these are evaluated through the rotation identities

    Bi(z) + i Ai(z) = 2 e^{+i pi/6} Ai(z e^{+2 pi i/3})
    Bi(z) - i Ai(z) = 2 e^{-i pi/6} Ai(z e^{-2 pi i/3})

which keep the subdominant combination well conditioned.
"""

from __future__ import annotations

from dataclasses import dataclass

import mpmath
from mpmath import mp, mpc, mpf


class PrecisionError(ArithmeticError):
    """Requested accuracy could not be certified at the working precision."""


@dataclass(frozen=True)
class PrecisionContext:
    """Working precision in decimal digits, plus internal guard digits."""

    digits: int = 100
    guard_digits: int = 12

    def __post_init__(self):
        if self.digits < 30:
            raise ValueError(f"digits must be >= 30, got {self.digits}")
        if self.guard_digits < 0:
            raise ValueError("guard_digits must be non-negative")

    @property
    def dps(self) -> int:
        return self.digits + self.guard_digits

    @property
    def eps(self) -> mpf:
        """10^(-digits), the target relative accuracy."""
        with mp.workdps(self.dps):
            return mpf(10) ** (-self.digits)

    def bumped(self, extra: int = 20) -> "PrecisionContext":
        return PrecisionContext(self.digits + extra, self.guard_digits)


DEFAULT_CTX = PrecisionContext(100)

# phase constants of the rotation identities, memoized per dps
_CONST_CACHE: dict = {}


def _rot_consts(dps):
    cached = _CONST_CACHE.get(dps)
    if cached is None:
        with mp.workdps(dps):
            rot = mpmath.expjpi(mpf(2) / 3)
            ph = 2 * mpmath.expjpi(mpf(1) / 6)
            cached = (rot, ph, mpmath.conj(rot), mpmath.conj(ph))
        _CONST_CACHE[dps] = cached
    return cached


def airy(z, ctx: PrecisionContext = DEFAULT_CTX, certify: bool = False):
    """Evaluate (Ai, Ai', Bi, Bi') at a complex point.

    With ``certify=True`` the value is recomputed at +20 digits and a
    :class:`PrecisionError` is raised if the two evaluations differ by more
    than the context accuracy (relative where the value is not tiny).
    """
    with mp.workdps(ctx.dps):
        z = mpc(z)
        vals = (mpmath.airyai(z), mpmath.airyai(z, 1),
                mpmath.airybi(z), mpmath.airybi(z, 1))
    if certify:
        with mp.workdps(ctx.dps + 20):
            zz = mpc(z)
            ref = (mpmath.airyai(zz), mpmath.airyai(zz, 1),
                   mpmath.airybi(zz), mpmath.airybi(zz, 1))
        tol = ctx.eps * 10
        for v, r in zip(vals, ref):
            scale = max(abs(r), mpf(1) * 10 ** (-ctx.digits))
            if abs(v - r) / scale > tol:
                raise PrecisionError(
                    f"airy({z}) not certified to {ctx.digits} digits")
    return vals


def ci(z, sign: int, ctx: PrecisionContext = DEFAULT_CTX):
    """Bi(z) + i*sign*Ai(z) via the rotation identity (stable everywhere)."""
    if sign not in (+1, -1):
        raise ValueError("sign must be +1 or -1")
    rot, ph, rotc, phc = _rot_consts(ctx.dps)
    with mp.workdps(ctx.dps):
        z = mpc(z)
        if sign > 0:
            return ph * mpmath.airyai(z * rot)
        return phc * mpmath.airyai(z * rotc)


def ci_prime(z, sign: int, ctx: PrecisionContext = DEFAULT_CTX):
    """d/dz of ci(z, sign)."""
    if sign not in (+1, -1):
        raise ValueError("sign must be +1 or -1")
    rot, ph, rotc, phc = _rot_consts(ctx.dps)
    with mp.workdps(ctx.dps):
        z = mpc(z)
        if sign > 0:
            return ph * rot * mpmath.airyai(z * rot, 1)
        return phc * rotc * mpmath.airyai(z * rotc, 1)


def ci_pair(z, ctx: PrecisionContext = DEFAULT_CTX):
    """(ci+, ci+', ci-, ci-') at z, sharing the two rotated Ai calls."""
    rot, ph, rotc, phc = _rot_consts(ctx.dps)
    with mp.workdps(ctx.dps):
        z = mpc(z)
        zp = z * rot
        zm = z * rotc
        return (ph * mpmath.airyai(zp), ph * rot * mpmath.airyai(zp, 1),
                phc * mpmath.airyai(zm), phc * rotc * mpmath.airyai(zm, 1))


def airy_origin(ctx: PrecisionContext = DEFAULT_CTX):
    """Exact origin values: Ai(0), Ai'(0), Bi(0), Bi'(0) from gamma closed forms."""
    key = ("origin", ctx.dps)
    cached = _CONST_CACHE.get(key)
    if cached is None:
        with mp.workdps(ctx.dps):
            g13 = mpmath.gamma(mpf(1) / 3)
            g23 = mpmath.gamma(mpf(2) / 3)
            three = mpf(3)
            ai0 = 1 / (three ** (mpf(2) / 3) * g23)
            aip0 = -1 / (three ** (mpf(1) / 3) * g13)
            bi0 = 1 / (three ** (mpf(1) / 6) * g23)
            bip0 = three ** (mpf(1) / 6) / g13
            cached = (ai0, aip0, bi0, bip0)
        _CONST_CACHE[key] = cached
    return cached


def wronskian_residual(z, ctx: PrecisionContext = DEFAULT_CTX):
    """Relative defect of Ai*Bi' - Ai'*Bi = 1/pi at z.

    Far off the real axis both solutions share the dominant exponential and
    the Wronskian emerges from a cancellation as large as their products, so
    the defect is normalized by that conditioning scale; digit-faithful
    values give a residual ~10^-digits everywhere in the plane.
    """
    ai, aip, bi, bip = airy(z, ctx)
    with mp.workdps(ctx.dps):
        w = ai * bip - aip * bi
        scale = max(1 / mp.pi, abs(ai) * abs(bip) + abs(aip) * abs(bi))
        return abs(w - 1 / mp.pi) / (scale * mp.pi)
