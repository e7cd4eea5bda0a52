"""Taylor-marched tabulation of Airy functions along a horizontal line.

Every quantity the spectral pipeline needs lives on (or within Taylor reach
of) one straight line ``Im v = im0`` in the Airy-argument plane: the image of
the shifted integration contour.  Direct multiprecision Airy evaluation costs
tens of milliseconds per point, so this module marches the Airy ODE
``f'' = v f`` once along the line and answers all subsequent evaluations with
local Taylor series around the nearest tabulated node (the functions are
entire, so the series converge factorially and complex offsets off the line
are equally valid).

Marching directions are chosen so the tracked solution is the locally
dominant one: the recessive-at-+oo solution (Ai) marches right-to-left, the
dominant one (Bi) left-to-right; against-the-grain marching would amplify
contamination by the opposite solution exponentially.

The same node grid carries the exponentially weighted integrals

    E_s(v) = integral_0^oo exp(-beta*tau) ci_s(v - tau) dtau,   s = +-1

which satisfy E_s' = ci_s - beta E_s and are marched left-to-right (the
stable direction: the homogeneous error mode decays as exp(-beta dv)), with
the inhomogeneous term integrated exactly through its Taylor series.  The
march starts from a zero seed inside a padding zone of length
(working digits)*ln(10)/beta to the left of the requested range: the seed
error contracts below the working precision before the usable range begins,
so no direct evaluation is needed.  :func:`exp_airy_direct` (rotated-ray
quadrature) remains available as an independent cross-check.
"""

from __future__ import annotations

import bisect

import mpmath
from mpmath import mp, mpc, mpf

from .precision import PrecisionContext, PrecisionError, ci, airy


_RECIP_CACHE = {}


def _recips(n, dps):
    """[1/((k+1)(k+2)) for k] and [1/(k+1) for k], as mpf, memoized per dps."""
    key = (n, dps)
    if key not in _RECIP_CACHE:
        with mp.workdps(dps):
            _RECIP_CACHE[key] = ([mpf(1) / ((k + 1) * (k + 2)) for k in range(n)],
                                 [mpf(1) / (k + 1) for k in range(n)])
    return _RECIP_CACHE[key]


def _airy_taylor_coeffs(v0, f0, f1, n_terms, dps):
    """Taylor coefficients of the solution of f'' = v f with given data at v0."""
    r2, _ = _recips(n_terms, dps)
    a = [mpc(f0), mpc(f1), mpc(v0) * f0 / 2]
    for n in range(1, n_terms - 2):
        a.append((v0 * a[n] + a[n - 1]) * r2[n])
    return a


def _horner(a, delta):
    f = mpc(0)
    for n in range(len(a) - 1, -1, -1):
        f = f * delta + a[n]
    return f


def _horner_pair(a, delta):
    f = mpc(0)
    fp = mpc(0)
    for n in range(len(a) - 1, 0, -1):
        f = f * delta + a[n]
        fp = fp * delta + n * a[n]
    f = f * delta + a[0]
    return f, fp


def _n_terms_for(rho, dps):
    """Series length so that rho^n / n! is below 10^-(dps+5)."""
    target = (dps + 5) * 2.302585
    import math
    n = 8
    logfact = 0.0
    logrho = math.log(max(float(rho), 0.05))
    while n < 500:
        logfact += math.log(n)
        if n * logrho - logfact < -target:
            return n + 6
        n += 1
    return 500


class LineTable:
    """Airy values (and optional E integrals) on Im v = im0, Re v in [lo, hi]."""

    def __init__(self, im0, lo, hi, ctx: PrecisionContext, beta=None,
                 r_step=4.0, validate_every=2000):
        self.ctx = ctx
        with mp.workdps(ctx.dps):
            self.im0 = mpf(im0)
            self.lo = mpf(lo)
            self.hi = mpf(hi)
            if self.hi <= self.lo:
                raise ValueError("empty line range")
            self.beta = None if beta is None else mpf(beta)
            self.r_step = mpf(r_step)
            self.pad = mpf(0)
            if self.beta is not None:
                # zero-seed contraction zone for the E march
                self.pad = (ctx.dps * mpmath.log(10) + 30) / self.beta
            self._build_grid()
            self._march_airy(validate_every)
            if self.beta is not None:
                self._march_e()

    # -- construction ------------------------------------------------------

    def _build_grid(self):
        xs = [self.lo - self.pad]
        x = xs[0]
        hmax = mpf(1) / 2
        while x < self.hi:
            scale = mpmath.sqrt(abs(x) + abs(self.im0) + 1)
            h = min(hmax, self.r_step / scale)
            x = min(x + h, self.hi)
            xs.append(x)
        self.re = xs
        self.refl = [float(v) for v in xs]
        n = len(xs)
        self.ai = [None] * n
        self.aip = [None] * n
        self.bi = [None] * n
        self.bip = [None] * n
        self.ep = [None] * n
        self.em = [None] * n
        # series length covering one full march step plus slack
        self._n_march = _n_terms_for(float(self.r_step) * 1.1 + 0.3, self.ctx.dps)
        # in-cell evaluations sit within half a step of a node
        self._n_eval = _n_terms_for(float(self.r_step) * 0.6 + 0.3, self.ctx.dps)
        self._reach = float(self.r_step) * 0.6 + 0.25

    def _v(self, i):
        return mpc(self.re[i], self.im0)

    def _march_airy(self, validate_every):
        ctx = self.ctx
        n = len(self.re)
        dps = ctx.dps
        with mp.workdps(dps):
            v = self._v(0)
            b, bp = mpmath.airybi(v), mpmath.airybi(v, 1)
            self.bi[0], self.bip[0] = b, bp
            for i in range(1, n):
                delta = mpc(self.re[i] - self.re[i - 1])
                coeffs = _airy_taylor_coeffs(self._v(i - 1), b, bp, self._n_march, dps)
                b, bp = _horner_pair(coeffs, delta)
                self.bi[i], self.bip[i] = b, bp
            v = self._v(n - 1)
            a, ap = mpmath.airyai(v), mpmath.airyai(v, 1)
            self.ai[n - 1], self.aip[n - 1] = a, ap
            for i in range(n - 2, -1, -1):
                delta = mpc(self.re[i] - self.re[i + 1])
                coeffs = _airy_taylor_coeffs(self._v(i + 1), a, ap, self._n_march, dps)
                a, ap = _horner_pair(coeffs, delta)
                self.ai[i], self.aip[i] = a, ap
            if validate_every:
                self._validate(validate_every)

    def _validate(self, every):
        ctx = self.ctx
        tol = mpf(10) ** (-(ctx.digits - 5))
        with mp.workdps(ctx.dps):
            for i in range(every // 2, len(self.re), every):
                v = self._v(i)
                ra = mpmath.airyai(v)
                rb = mpmath.airybi(v)
                ea = abs(self.ai[i] - ra) / max(abs(ra), mpf(10) ** (-ctx.dps))
                eb = abs(self.bi[i] - rb) / max(abs(rb), mpf(10) ** (-ctx.dps))
                if ea > tol or eb > tol:
                    raise PrecisionError(
                        f"line march drift at Re v={self.refl[i]:.3f}: "
                        f"Ai rel {mpmath.nstr(ea, 3)}, Bi rel {mpmath.nstr(eb, 3)}")

    def _ab_coeffs(self, i, n_terms):
        dps = self.ctx.dps
        v = self._v(i)
        return (_airy_taylor_coeffs(v, self.ai[i], self.aip[i], n_terms, dps),
                _airy_taylor_coeffs(v, self.bi[i], self.bip[i], n_terms, dps))

    def _march_e(self):
        """E_s(v+d) = e^(-beta d) E_s(v) + G_s(d), G from the Taylor recurrence."""
        ctx = self.ctx
        dps = ctx.dps
        with mp.workdps(dps):
            _, r1 = _recips(self._n_march + 2, dps)
            self.ep[0] = mpc(0)
            self.em[0] = mpc(0)
            for i in range(1, len(self.re)):
                delta = mpc(self.re[i] - self.re[i - 1])
                decay = mpmath.exp(-self.beta * delta)
                ac, bc = self._ab_coeffs(i - 1, self._n_march)
                for sign, store, prev in ((+1, self.ep, self.ep[i - 1]),
                                          (-1, self.em, self.em[i - 1])):
                    gn = mpc(0)
                    gs = [gn]
                    for nn in range(len(ac)):
                        cn = bc[nn] + 1j * sign * ac[nn]
                        gn = (cn - self.beta * gn) * r1[nn]
                        gs.append(gn)
                    g = mpc(0)
                    for nn in range(len(gs) - 1, 0, -1):
                        g = g * delta + gs[nn]
                    g = g * delta
                    store[i] = decay * prev + g

    # -- evaluation --------------------------------------------------------

    def _nearest(self, re_part: float) -> int:
        i = bisect.bisect_left(self.refl, re_part)
        if i <= 0:
            return 0
        if i >= len(self.refl):
            return len(self.refl) - 1
        return i if self.refl[i] - re_part < re_part - self.refl[i - 1] else i - 1

    def _rho(self, delta, p):
        return float(abs(delta) * mpmath.sqrt(abs(p) + 1))

    def airy_at(self, points):
        """(Ai, Ai', Bi, Bi') at each point; falls back to direct evaluation
        for points beyond Taylor reach of the line."""
        ctx = self.ctx
        out = [None] * len(points)
        with mp.workdps(ctx.dps):
            order = sorted(range(len(points)), key=lambda j: mpc(points[j]).real)
            cur = -1
            ca = cb = None
            for j in order:
                p = mpc(points[j])
                i = self._nearest(float(p.real))
                delta = p - self._v(i)
                if self._rho(delta, p) > self._reach:
                    out[j] = airy(p, ctx)
                    continue
                if i != cur:
                    ca, cb = self._ab_coeffs(i, self._n_eval)
                    cur = i
                a, apv = _horner_pair(ca, delta)
                b, bpv = _horner_pair(cb, delta)
                out[j] = (a, apv, b, bpv)
        return out

    def ci_at(self, points, sign):
        """ci_sign values at points (no derivatives)."""
        ctx = self.ctx
        out = [None] * len(points)
        with mp.workdps(ctx.dps):
            order = sorted(range(len(points)), key=lambda j: mpc(points[j]).real)
            cur = -1
            cc = None
            for j in order:
                p = mpc(points[j])
                i = self._nearest(float(p.real))
                delta = p - self._v(i)
                if self._rho(delta, p) > self._reach:
                    out[j] = ci(p, sign, ctx)
                    continue
                if i != cur:
                    f0 = self.bi[i] + 1j * sign * self.ai[i]
                    f1 = self.bip[i] + 1j * sign * self.aip[i]
                    cc = _airy_taylor_coeffs(self._v(i), f0, f1, self._n_eval, ctx.dps)
                    cur = i
                out[j] = _horner(cc, delta)
        return out

    def e_at(self, points, sign):
        """E_sign at points, via the Taylor recurrence around the nearest node."""
        if self.beta is None:
            raise ValueError("table built without E integrals")
        ctx = self.ctx
        out = [None] * len(points)
        store = self.ep if sign > 0 else self.em
        with mp.workdps(ctx.dps):
            _, r1 = _recips(self._n_eval + 2, ctx.dps)
            order = sorted(range(len(points)), key=lambda j: mpc(points[j]).real)
            cur = -1
            es = None
            lo_ok = float(self.lo) - 0.01
            for j in order:
                p = mpc(points[j])
                i = self._nearest(float(p.real))
                delta = p - self._v(i)
                # the padding zone carries the decaying zero-seed error
                if self._rho(delta, p) > self._reach or float(p.real) < lo_ok:
                    out[j] = exp_airy_direct(p, self.beta, sign, ctx)
                    continue
                if i != cur:
                    ac, bc = self._ab_coeffs(i, self._n_eval)
                    e = [store[i]]
                    for nn in range(len(ac)):
                        cn = bc[nn] + 1j * sign * ac[nn]
                        e.append((cn - self.beta * e[nn]) * r1[nn])
                    es = e
                    cur = i
                out[j] = _horner(es, delta)
        return out


def exp_airy_direct(u0, beta, sign, ctx: PrecisionContext, rel_tol=None):
    """E_sign(u0) by direct quadrature: a real leg down to the turning-point
    region, then a rotated ray on which the integrand decays superexponentially.

    ci_+(u0 - tau) decays as tau turns into the upper half-plane and ci_- as it
    turns into the lower one; the closing arcs vanish, so the deformation is
    exact.  Fixed-order Gauss-Legendre panels with curvature-limited widths.
    """
    with mp.workdps(ctx.dps):
        u0 = mpc(u0)
        beta = mpf(beta)
        if rel_tol is None:
            rel_tol = mpf(10) ** (-min(ctx.digits - 8, 40))
        nodes_w = _gl_cache(24, ctx.dps)
        total = mpc(0)
        scale = mpf(0)

        def panel(t_lo, t_hi):
            nonlocal total, scale
            mid = (t_lo + t_hi) / 2
            half = (t_hi - t_lo) / 2
            acc = mpc(0)
            big = mpf(0)
            for xg, wg in nodes_w:
                tau = mid + half * xg
                val = mpmath.exp(-beta * tau) * ci(u0 - tau, sign, ctx)
                acc += wg * val
                big = max(big, abs(val))
            total += half * acc
            scale = max(scale, big)
            return big

        t_t = max(mpf(0), u0.real + 2)
        if t_t > 0:
            t = mpf(0)
            while t < t_t:
                w = min(mpf("1.5"), mpf("3.0") / mpmath.sqrt(abs(u0 - t) + 1))
                t2 = min(t + w, t_t)
                panel(t, t2)
                t = t2
        rot = mpmath.expjpi(mpf(sign) / 3)
        r = mpf(0)
        quiet = 0
        r_cap = 80 + 2 * abs(u0)
        while quiet < 3 and r < r_cap:
            w = min(mpf("1.5"), mpf("3.0") / mpmath.sqrt(abs(u0 - (t_t + r * rot)) + 1))
            mid = t_t + (r + w / 2) * rot
            half = (w / 2) * rot
            acc = mpc(0)
            big = mpf(0)
            for xg, wg in nodes_w:
                tau = mid + half * xg
                val = mpmath.exp(-beta * tau) * ci(u0 - tau, sign, ctx)
                acc += wg * val
                big = max(big, abs(val))
            total += half * acc
            scale = max(scale, big)
            if big < rel_tol * scale:
                quiet += 1
            else:
                quiet = 0
            r += w
        return total


_GL_CACHE = {}


def _gl_cache(n, dps):
    """Gauss-Legendre nodes/weights at working precision (Newton on P_n)."""
    key = (n, dps)
    if key not in _GL_CACHE:
        with mp.workdps(dps + 10):
            nodes = []
            for k in range(1, n + 1):
                x = mpmath.cos(mp.pi * (k - mpf(1) / 4) / (n + mpf(1) / 2))
                for _ in range(80):
                    p0, p1 = mpf(1), x
                    for m in range(2, n + 1):
                        p0, p1 = p1, ((2 * m - 1) * x * p1 - (m - 1) * p0) / m
                    dp = n * (x * p1 - p0) / (x * x - 1)
                    dx = p1 / dp
                    x -= dx
                    if abs(dx) < mpf(10) ** (-(dps + 5)):
                        break
                p0, p1 = mpf(1), x
                for m in range(2, n + 1):
                    p0, p1 = p1, ((2 * m - 1) * x * p1 - (m - 1) * p0) / m
                dp = n * (x * p1 - p0) / (x * x - 1)
                nodes.append((x, 2 / ((1 - x * x) * dp * dp)))
        _GL_CACHE[key] = nodes
    return _GL_CACHE[key]
