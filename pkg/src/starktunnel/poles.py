"""Outgoing resonance poles: zeros of the matching function in the lower half-plane.

Three families populate the lower half-plane: descendants of the zero-field
bound levels (B, exponentially small widths), the continuum ladder above the
well mouth (A, widths growing with energy until the family dives below any
fixed contour depth), and a sparse chain along the Stokes direction of the
outgoing Airy combination (C).  Enumeration seeds B from the bound energies,
continues the ladder by spacing extrapolation, seeds C near the zeros of
ci_+, and certifies completeness with an argument-principle winding count
around the strip; a bisection rescue localizes anything the seeding missed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import mpmath
import numpy as np
from mpmath import mp, mpc, mpf

from .precision import PrecisionContext
from .model import ModelParams, BoundState, bound_states, d_pm, d_pm_deriv
from .airytab import LineTable
from .errors import CertificationError, DegeneratePoleError
from . import fastnum


@dataclass
class ResonantPole:
    W: object                  # mpc
    family: str                # 'A', 'B' or 'C'
    dplus_deriv: object        # mpc, derivative of the cleared matching function
    residual: float            # |d(W)/d'(W)| at convergence
    amp: object = None         # cleared spectral amplitude at the pole
    pole_coef: object = None   # -2 pi amp / (N d') residue prefactor

    def as_complex(self):
        return complex(self.W)


@dataclass
class PoleSet:
    poles: list
    contour_s: float
    re_lo: float
    re_hi: float
    completeness_certificate: int
    near_line: list = field(default_factory=list)  # poles just below the contour
    label: str = ""

    def __len__(self):
        return len(self.poles)

    def crossed(self):
        return self.poles


class MatchingEvaluator:
    """Cleared matching function and derivative, optionally line-accelerated."""

    def __init__(self, params: ModelParams, line: Optional[LineTable] = None):
        self.params = params
        self.line = line
        self.ctx = params.ctx

    def _airy_parts(self, u0):
        if self.line is not None:
            return self.line.airy_at([u0])[0]
        from .precision import airy
        return airy(u0, self.ctx)

    def value_and_deriv(self, W):
        p = self.params
        with mp.workdps(self.ctx.dps):
            W = mpc(W)
            alpha = p.alpha()
            F = p.f_mp()
            u0 = alpha * W / F
            ai, aip, bi, bip = self._airy_parts(u0)
            cp = bi + 1j * ai
            cpp = bip + 1j * aip
            if p.delta_limit:
                d = (mp.pi / 2) * (cpp + cp / alpha)
                dd = (mp.pi / 2) * ((alpha ** 2 * W / F ** 2) * cp + cpp / F)
                return d, dd
            k = p.k_w(W)
            L = p.l_mp()
            c = mpmath.cos(k * L)
            s = mpmath.sin(k * L)
            g = (k / alpha) * s
            d = (mp.pi / 2) * (c * cpp + g * cp)
            coeff_dp = -L * s / k + k * s / F
            coeff_d = c * alpha ** 2 * W / F ** 2 + s / (alpha * k) + L * c / alpha
            dd = (mp.pi / 2) * (coeff_dp * cpp + coeff_d * cp)
            return d, dd

    def value(self, W):
        return self.value_and_deriv(W)[0]


def find_pole(seed, params: ModelParams, evaluator: Optional[MatchingEvaluator] = None,
              max_iter=100):
    """Newton-refine a zero of the cleared matching function from a seed.

    Returns (W, d', residual).  Raises CertificationError when the iteration
    does not settle and DegeneratePoleError when the root is not simple.
    """
    ctx = params.ctx
    ev = evaluator or MatchingEvaluator(params)
    with mp.workdps(ctx.dps):
        W = mpc(seed)
        tol = mpf(10) ** (-(ctx.digits - 12))
        last_step = None
        for it in range(max_iter):
            d, dd = ev.value_and_deriv(W)
            if dd == 0:
                raise DegeneratePoleError(f"matching derivative vanished at {complex(W)}")
            step = d / dd
            # keep Newton inside the basin scale
            cap = mpf(1) / 4 * (1 + abs(W))
            if abs(step) > cap:
                step = step / abs(step) * cap
            W = W - step
            if abs(step) <= tol * max(abs(W), mpf("1e-3")):
                if last_step is not None and last_step <= tol * max(abs(W), mpf("1e-3")):
                    break
                last_step = abs(step)
            else:
                last_step = None
        else:
            raise CertificationError(
                f"pole refinement did not converge from seed {complex(mpc(seed))}; "
                f"last iterate {complex(W)}")
        d, dd = ev.value_and_deriv(W)
        # simple-pole check against the local scale of d'
        scale = abs(dd)
        probe = abs(ev.value(W + mpf("0.05"))) + abs(ev.value(W - mpf("0.05")))
        if scale * mpf("0.05") < probe * mpf(10) ** (-(ctx.digits // 2)):
            raise DegeneratePoleError(f"near-degenerate pole at {complex(W)}")
        residual = float(abs(d) / scale) if scale > 0 else float("inf")
        return W, dd, residual


def classify_family(W, bound_qs, spacing, params: ModelParams) -> str:
    """B near a bound level, C in the Stokes sector arg W ~ -2 pi/3, else A."""
    w = complex(W)
    for q in bound_qs:
        if abs(w.real - float(q)) < 0.5 * spacing and w.real < 0:
            return "B"
    ang = math.atan2(w.imag, w.real)
    if abs(ang - (-2 * math.pi / 3)) < math.radians(25):
        return "C"
    return "A"


def _level_spacing(bound_qs):
    if len(bound_qs) >= 2:
        return min(float(b - a) for a, b in zip(bound_qs, bound_qs[1:]))
    return abs(float(bound_qs[0])) if bound_qs else 1.0


def ci_plus_zero_seeds(params: ModelParams, max_depth, count=8):
    """Seeds near zeros of ci_+(a W / F): W_n = (F/|a|) |a_n| exp(-2 pi i/3)."""
    ctx = params.ctx
    seeds = []
    with mp.workdps(ctx.dps):
        scale = params.f_mp() / abs(params.alpha())
        phase = mpmath.expjpi(mpf(-2) / 3)
        for n in range(1, count + 1):
            a_n = abs(mpmath.airyaizero(n))
            W = scale * a_n * phase
            if abs(W.imag) > max_depth:
                break
            seeds.append(W)
    return seeds


def enumerate_poles(params: ModelParams, s, re_lo=None, re_hi=None,
                    line: Optional[LineTable] = None,
                    states=None, certify=True) -> PoleSet:
    """All matching-function zeros in the strip -s < Im W < 0, Re W in range.

    B seeds at the bound energies, ladder extrapolation upward until the
    family dives below the strip, C seeds near the outgoing-Airy zeros.
    Completeness is certified by the argument principle over the strip
    boundary; mismatches trigger a bisection rescue before failing.
    """
    ctx = params.ctx
    ev = MatchingEvaluator(params, line=line)
    with mp.workdps(ctx.dps):
        s = mpf(s)
        if states is None:
            states = bound_states(params)
        bound_qs = [mpf(st.Q) for st in states]
        spacing = _level_spacing(bound_qs)
        found = []

        def accept(W, dd, res):
            for p in found:
                if abs(p.W - W) < mpf("1e-8") * (1 + abs(W)):
                    return False
            fam = classify_family(W, bound_qs, spacing, params)
            found.append(ResonantPole(W=W, family=fam, dplus_deriv=dd, residual=res))
            return True

        im_seed = -min(s / 10, mpf("1e-3"))
        for q in bound_qs:
            W, dd, res = find_pole(mpc(q, im_seed), params, ev)
            accept(W, dd, res)
        # ladder extrapolation into the continuum
        ladder = sorted((p.W for p in found), key=lambda w: mpf(w.real))
        if len(ladder) >= 2:
            below = 0
            guard = 0
            while below < 3 and guard < 4000:
                guard += 1
                seed = 2 * ladder[-1] - ladder[-2]
                if re_hi is not None and seed.real > mpf(re_hi) + 1:
                    break
                try:
                    W, dd, res = find_pole(seed, params, ev)
                except (CertificationError, DegeneratePoleError):
                    break
                if W.real <= ladder[-1].real + mpf("1e-10"):
                    # refinement fell back onto a known pole; nudge forward
                    step = ladder[-1] - ladder[-2]
                    try:
                        W, dd, res = find_pole(ladder[-1] + mpf("1.5") * step, params, ev)
                    except (CertificationError, DegeneratePoleError):
                        break
                    if W.real <= ladder[-1].real + mpf("1e-10"):
                        break
                ladder.append(W)
                if -3 * s < W.imag < 0:
                    accept(W, dd, res)
                below = below + 1 if W.imag < -s else 0
        for seed in ci_plus_zero_seeds(params, max_depth=3 * s):
            try:
                W, dd, res = find_pole(seed, params, ev)
            except (CertificationError, DegeneratePoleError):
                continue
            if -3 * s < W.imag < 0:
                accept(W, dd, res)

        if re_lo is None:
            re_lo = min(float(q) for q in bound_qs) - 0.25 if bound_qs else -1.0
        if re_hi is None:
            re_hi = max((float(p.W.real) for p in found), default=1.0) + 2.0
        re_lo = mpf(re_lo)
        re_hi = mpf(re_hi)

        crossed = [p for p in found
                   if -s < p.W.imag < 0 and re_lo <= p.W.real <= re_hi]
        near = [p for p in found if p.W.imag <= -s]
        crossed.sort(key=lambda p: mpf(p.W.real))

        cert = -1
        if certify:
            cert = strip_winding(params, ev, re_lo, re_hi, s)
            if cert != len(crossed):
                crossed = _rescue(params, ev, crossed, re_lo, re_hi, s,
                                  bound_qs, spacing, cert)
                crossed.sort(key=lambda p: mpf(p.W.real))
                if cert != len(crossed):
                    raise CertificationError(
                        f"pole census mismatch: winding={cert}, found={len(crossed)} "
                        f"in [{float(re_lo)},{float(re_hi)}] x (-{float(s)},0)")
        return PoleSet(poles=crossed, contour_s=float(s), re_lo=float(re_lo),
                       re_hi=float(re_hi), completeness_certificate=cert,
                       near_line=near, label=params.label())


def strip_winding(params: ModelParams, ev: MatchingEvaluator, re_lo, re_hi, s,
                  im_top=None):
    """Argument-principle count of matching-function zeros in the strip.

    The top edge runs slightly above the real axis: the matching function has
    no real zeros (the Wronskian keeps |d|^2 = gB^2 + gA^2 > 0 there) and no
    upper-half zeros (they would be complex eigenvalues of a self-adjoint
    operator), so the lifted rectangle counts exactly the strip content.
    """
    ctx = params.ctx
    with mp.workdps(ctx.dps):
        s = mpf(s)
        top = mpf(im_top) if im_top is not None else min(s, mpf("0.01"))
        corners = [mpc(re_lo, -s), mpc(re_hi, -s), mpc(re_hi, top),
                   mpc(re_lo, top), mpc(re_lo, -s)]
        total = mpf(0)
        for a, b in zip(corners[:-1], corners[1:]):
            total += _edge_phase(ev, a, b, float(s))
        n = total / (2 * mp.pi)
        n_int = int(mpmath.nint(n))
        if abs(n - n_int) > mpf("1e-4"):
            raise CertificationError(
                f"non-integer winding {float(n):.6f} over strip boundary")
        return n_int


def _edge_phase(ev: MatchingEvaluator, a, b, s):
    """Accumulated phase of the matching function along segment a->b,
    adaptively bisected so each step turns by less than pi/2."""
    length = abs(b - a)
    n0 = max(8, int(float(length) / min(0.2, s)) + 1)
    zs = [a + (b - a) * mpf(k) / n0 for k in range(n0 + 1)]
    vals = [ev.value(z) for z in zs]
    total = mpf(0)
    for i in range(n0):
        total += _phase_step(ev, zs[i], zs[i + 1], vals[i], vals[i + 1], 0)
    return total


def _phase_step(ev, z1, z2, f1, f2, depth):
    if abs(f1) == 0 or abs(f2) == 0:
        raise CertificationError(f"matching-function zero on census boundary near {complex(z1)}")
    d = mpmath.arg(f2 / f1)
    if abs(d) <= mp.pi / 2:
        return d
    if depth > 48:
        raise CertificationError(
            f"phase walk cannot resolve boundary near {complex(z1)}; "
            "a pole may sit on the contour line")
    zm = (z1 + z2) / 2
    fm = ev.value(zm)
    return (_phase_step(ev, z1, zm, f1, fm, depth + 1)
            + _phase_step(ev, zm, z2, fm, f2, depth + 1))


def _rescue(params, ev, crossed, re_lo, re_hi, s, bound_qs, spacing, want):
    """Bisect the strip in Re to localize missed zeros, then grid-seed them."""
    ctx = params.ctx
    with mp.workdps(ctx.dps):
        segments = [(mpf(re_lo), mpf(re_hi))]
        poles = list(crossed)
        for _ in range(60):
            if len(poles) == want:
                break
            new_segments = []
            for lo, hi in segments:
                cnt = strip_winding(params, ev, lo, hi, s)
                have = sum(1 for p in poles if lo <= p.W.real <= hi)
                if cnt == have:
                    continue
                if hi - lo < mpf("0.05"):
                    # dense seeding inside the small offending rectangle
                    for ii in range(5):
                        for jj in range(4):
                            seed = mpc(lo + (hi - lo) * (ii + mpf(1) / 2) / 5,
                                       -mpf(s) * (jj + mpf(1) / 2) / 4)
                            try:
                                W, dd, res = find_pole(seed, params, ev)
                            except (CertificationError, DegeneratePoleError):
                                continue
                            if not (-mpf(s) < W.imag < 0 and lo <= W.real <= hi):
                                continue
                            if any(abs(p.W - W) < mpf("1e-8") * (1 + abs(W)) for p in poles):
                                continue
                            fam = classify_family(W, bound_qs, spacing, params)
                            poles.append(ResonantPole(W=W, family=fam,
                                                      dplus_deriv=dd, residual=res))
                else:
                    mid = (lo + hi) / 2
                    new_segments.extend([(lo, mid), (mid, hi)])
            if not new_segments:
                break
            segments = new_segments
        return poles


def zero_contour_map(params: ModelParams, state: BoundState, window, grid=301):
    """Sign-change curves of Re and Im of the matching function on a window.

    Returns plot-ready polyline segments for each family of curves plus the
    sampling grid (double precision; this is illustration data).
    """
    re_lo, re_hi, im_lo, im_hi = [float(v) for v in window]
    m = fastnum.FastModel.build(params, state)
    xs = np.linspace(re_lo, re_hi, grid)
    ys = np.linspace(im_lo, im_hi, grid)
    Wg = xs[None, :] + 1j * ys[:, None]
    dp, _ = fastnum.d_pair_f(Wg.ravel(), m)
    dp = dp.reshape(Wg.shape)
    segs_re = _level_segments(xs, ys, dp.real)
    segs_im = _level_segments(xs, ys, dp.imag)
    return {"re_zero": segs_re, "im_zero": segs_im,
            "xs": xs, "ys": ys, "values": dp}


def _level_segments(xs, ys, f):
    """Zero-level polyline segments of f on the grid (marching squares, linear)."""
    segs = []
    nz, nx = f.shape
    for j in range(nz - 1):
        for i in range(nx - 1):
            corners = [(xs[i], ys[j], f[j, i]), (xs[i + 1], ys[j], f[j, i + 1]),
                       (xs[i + 1], ys[j + 1], f[j + 1, i + 1]), (xs[i], ys[j + 1], f[j + 1, i])]
            pts = []
            for (x1, y1, f1), (x2, y2, f2) in zip(corners, corners[1:] + corners[:1]):
                if f1 == 0.0:
                    pts.append((x1, y1))
                elif (f1 < 0) != (f2 < 0):
                    t = f1 / (f1 - f2)
                    pts.append((x1 + t * (x2 - x1), y1 + t * (y2 - y1)))
            if len(pts) >= 2:
                segs.append((pts[0], pts[1]))
    return segs


def serialize_pole_set(ps: PoleSet, digits: int) -> str:
    """Versioned text serialization, one pole per line."""
    lines = ["# starktunnel pole set v1",
             f"# label: {ps.label}",
             f"# s: {ps.contour_s!r}",
             f"# range: {ps.re_lo!r} {ps.re_hi!r}",
             f"# certificate: {ps.completeness_certificate}",
             "# columns: re_w im_w family re_dderiv im_dderiv residual re_amp im_amp"]
    nd = digits + 8

    def fmt(x):
        return mpmath.nstr(x, nd, strip_zeros=False)

    for p in ps.poles:
        amp = p.amp if p.amp is not None else mpc(0)
        lines.append(" ".join([
            fmt(p.W.real), fmt(p.W.imag), p.family,
            fmt(p.dplus_deriv.real), fmt(p.dplus_deriv.imag),
            repr(p.residual), fmt(amp.real), fmt(amp.imag)]))
    return "\n".join(lines) + "\n"


def load_pole_set(text: str, ctx: PrecisionContext) -> PoleSet:
    header = {}
    poles = []
    with mp.workdps(ctx.dps):
        for line in text.splitlines():
            line = line.strip()
            if not line:
                continue
            if line.startswith("#"):
                body = line[1:].strip()
                if ":" in body:
                    k, v = body.split(":", 1)
                    header[k.strip()] = v.strip()
                continue
            parts = line.split()
            rw, iw = mpf(parts[0]), mpf(parts[1])
            fam = parts[2]
            rd, idd = mpf(parts[3]), mpf(parts[4])
            res = float(parts[5])
            ra, ia = mpf(parts[6]), mpf(parts[7])
            poles.append(ResonantPole(W=mpc(rw, iw), family=fam,
                                      dplus_deriv=mpc(rd, idd), residual=res,
                                      amp=mpc(ra, ia)))
        s = float(header.get("s", "0.0"))
        lo, hi = header.get("range", "0 0").split()
        ps = PoleSet(poles=poles, contour_s=s, re_lo=float(lo),
                     re_hi=float(hi),
                     completeness_certificate=int(header.get("certificate", -1)),
                     label=header.get("label", ""))
    return ps
