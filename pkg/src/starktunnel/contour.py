"""Shifted integration line: truncation, panelization, quadrature nodes.

The spectral integral runs along Im z = -s.  Composite Gauss-Legendre panels
are sized three ways: by the fastest phase present (exp(-i t z) at the
largest requested time plus the travelling-wave phase ~ x/sqrt(2z) at the
farthest requested position), by a smoothness cap, and by proximity of
resonance poles to the line (a pole at vertical distance d imprints a
Lorentzian feature of width ~ d on the integrand, which the panels must
resolve).

Truncation is chosen where the amplitude envelope falls below the requested
tolerance; the probes run in double precision (order-of-magnitude decisions
only) with an exponential-envelope extrapolation where doubles cannot follow
the decay.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from mpmath import mp, mpc, mpf

from .model import ModelParams, BoundState
from .airytab import _gl_cache
from . import fastnum


@dataclass
class ContourSpec:
    s: float
    z_min: float
    z_max: float
    gl_order: int
    nodes: list                      # mpc, on Im z = -s
    weights: list                    # mpf
    nodes_f: np.ndarray = None       # complex128 mirrors
    weights_f: np.ndarray = None
    trunc_estimates: tuple = (0.0, 0.0)
    meta: dict = field(default_factory=dict)

    def __len__(self):
        return len(self.nodes)


def probe_truncation(params: ModelParams, state: BoundState, s, tol,
                     z_lo_start, z_hi_start, z_hi_cap=400.0):
    """(z_min, z_max, est_lo, est_hi): bounds where the integrand envelope
    falls below tol/20 (low side superexponential, high side algebraic)."""
    m = fastnum.FastModel.build(params, state)
    thresh = tol / 20.0

    def envelope(z):
        W = np.array([z - 1j * s])
        at = fastnum.amp_total_f(W, m, dtau=0.05)[0]
        dp, dm = fastnum.d_pair_f(W, m)
        u0 = m.alpha * W[0] / m.F
        br = (fastnum.ci_minus(u0) / dm[0] - fastnum.ci_plus(u0) / dp[0])
        return abs(at * br) / m.N

    # low side: march down; trust doubles while Re u0 is moderate, then
    # extrapolate with the tunneling exponent 2 * (2/3) u0^(3/2)
    z = z_lo_start
    est_lo = envelope(z)
    while est_lo >= thresh:
        z -= 0.05
        u0re = m.alpha * z / m.F
        if u0re < 11.0:
            est_lo = envelope(z)
        else:
            z_ref = -11.0 * m.F / m.alpha
            base = envelope(z_ref)
            expo = (4.0 / 3.0) * (u0re ** 1.5 - 11.0 ** 1.5)
            est_lo = base * math.exp(-expo)
        if z < z_lo_start - 6:
            break
    z_min = z

    z = max(z_hi_start, 1.0)
    est_hi = envelope(z)
    while est_hi * z >= thresh and z < z_hi_cap:
        z *= 1.3
        est_hi = envelope(z)
    z_max = z
    return z_min, z_max, est_lo, est_hi


def build_contour(params: ModelParams, state: BoundState, s, t_max, x_max,
                  z_min=None, z_max=None, tol=1e-9, gl_order=12,
                  periods_per_panel=0.9, near_line_poles=(),
                  z_hi_cap=400.0) -> ContourSpec:
    """Lay out panels and emit quadrature nodes/weights at working precision."""
    ctx = params.ctx
    if z_min is None or z_max is None:
        q0 = float(min(float(st.Q) for st in [state]))
        lo0 = q0 - 0.2
        a_lo, a_hi, e_lo, e_hi = probe_truncation(params, state, float(s), tol,
                                                  lo0, max(4.0, 2 * abs(q0)),
                                                  z_hi_cap=z_hi_cap)
        if z_min is None:
            z_min = a_lo
        if z_max is None:
            z_max = a_hi
        trunc = (e_lo, e_hi)
    else:
        trunc = (float("nan"), float("nan"))

    z_min = float(z_min)
    z_max = float(z_max)
    if z_max <= z_min:
        raise ValueError("empty contour range")
    t_max = float(t_max)
    x_max = float(x_max)
    s_f = float(s)

    pole_marks = []
    for p in near_line_poles:
        w = complex(p)
        dist = abs(w.imag + s_f)
        pole_marks.append((w.real, max(dist, 1e-5)))

    def width(z):
        rate = t_max + x_max / math.sqrt(2 * max(z, 0.02)) + 1.0
        w = min(0.6, 2 * math.pi / rate * periods_per_panel)
        for pr, dist in pole_marks:
            if abs(z - pr) < 3.0:
                w = min(w, max(dist / 2.5, abs(z - pr) / 5.0))
        return w

    edges = [z_min]
    z = z_min
    while z < z_max:
        z = min(z + width(z), z_max)
        edges.append(z)

    gl = _gl_cache(gl_order, ctx.dps)
    nodes = []
    weights = []
    with mp.workdps(ctx.dps):
        s_mp = mpf(str(s)) if not isinstance(s, (mpf,)) else s
        for lo, hi in zip(edges[:-1], edges[1:]):
            lo_m = mpf(repr(lo))
            hi_m = mpf(repr(hi))
            mid = (lo_m + hi_m) / 2
            half = (hi_m - lo_m) / 2
            for xg, wg in gl:
                nodes.append(mpc(mid + half * xg, -s_mp))
                weights.append(half * wg)
    spec = ContourSpec(s=s_f, z_min=z_min, z_max=z_max, gl_order=gl_order,
                       nodes=nodes, weights=weights,
                       nodes_f=np.array([complex(n) for n in nodes]),
                       weights_f=np.array([float(w) for w in weights]),
                       trunc_estimates=trunc,
                       meta={"panels": len(edges) - 1, "t_max": t_max,
                             "x_max": x_max,
                             "periods_per_panel": periods_per_panel})
    return spec
