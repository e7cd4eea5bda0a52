"""Time-dependent wavefunction: residue sum over crossed poles + contour integral.

For positions beyond the well mouth,

    psi(x,t) = -2 pi sum_p e^{-i t W_p} ci+(a(x+W_p/F)) A(W_p) / (N d~+'(W_p))
             + int_C (i e^{-i t z}/N) [ci-(u)/d~-(z) - ci+(u)/d~+(z)] A(z) dz

with u = a(x + z/F), the sum running over poles crossed by lowering the
contour to Im z = -s, and A the cleared spectral amplitude.  Everything
t- and x-independent is computed once at working precision and stored per
node ("stage one"); sweeps over (x, t) then run either at full precision or
through a vectorized double-precision engine whose inputs are the
down-converted stage-one coefficients.

Interior points (finite well) use the same expansion with the interior
branch cos(k(L+x)) A(z) / (N d~+ d~-), needed only for norm audits.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import mpmath
import numpy as np
from mpmath import mp, mpc, mpf
from scipy.special import airy as _airy_f

from .precision import PrecisionContext, ci as ci_direct
from .model import ModelParams, BoundState, bound_states, select_state
from .airytab import LineTable
from .contour import ContourSpec, build_contour
from .poles import PoleSet, enumerate_poles
from .spectral import amp_inside, amp_outside_from_parts
from .errors import ConfigError
from . import fastnum


@dataclass
class WavefunctionField:
    """Sampled psi on a (t, x) product grid, double-precision output."""

    x: np.ndarray
    t: np.ndarray
    values: np.ndarray              # [nt, nx] complex128
    meta: dict = field(default_factory=dict)

    def density(self):
        return np.abs(self.values) ** 2


class SpectralPropagator:
    """Stage-one tables bound to one model configuration and contour."""

    def __init__(self, params: ModelParams, state: BoundState,
                 pole_set: PoleSet, contour: ContourSpec, line: LineTable,
                 meta=None):
        self.params = params
        self.state = state
        self.pole_set = pole_set
        self.contour = contour
        self.line = line
        self.meta = dict(meta or {})
        self._x_tables = {}
        self._assemble_nodes()
        self._assemble_poles()
        self._make_float_mirrors()

    # -- construction ------------------------------------------------------

    @classmethod
    def build(cls, params: ModelParams, state_energy_near=None, s="3/100",
              t_max=120.0, x_max=40.0, z_min=None, z_max=None, tol=1e-9,
              gl_order=12, periods_per_panel=0.9, meta=None, z_hi_cap=400.0):
        ctx = params.ctx
        with mp.workdps(ctx.dps):
            s_mp = mpf(str(s))
            states = bound_states(params)
            if state_energy_near is None:
                state = states[0]
            else:
                state = select_state(states, state_energy_near)
            gamma = state.decay_rate()
            alpha = params.alpha()
            beta = gamma / (-alpha)
            F = params.f_mp()

            # truncation first (cheap probes), then the line that spans it
            cspec_probe = build_contour(params, state, s_mp, t_max, x_max,
                                        z_min=z_min, z_max=z_max, tol=tol,
                                        gl_order=gl_order,
                                        periods_per_panel=periods_per_panel,
                                        z_hi_cap=z_hi_cap)
            zlo, zhi = cspec_probe.z_min, cspec_probe.z_max
            lo = alpha * (mpf(repr(x_max)) + mpf(repr(zhi)) / F) - 2
            hi = alpha * mpf(repr(zlo)) / F + 3
            line = LineTable(im0=s_mp * (-alpha) / F, lo=lo, hi=hi,
                             ctx=ctx, beta=beta)
            pole_set = enumerate_poles(params, s_mp, re_lo=zlo, re_hi=zhi,
                                       line=line, states=states)
            near = ([p.W for p in pole_set.poles]
                    + [p.W for p in pole_set.near_line])
            contour = build_contour(params, state, s_mp, t_max, x_max,
                                    z_min=zlo, z_max=zhi, tol=tol,
                                    gl_order=gl_order,
                                    periods_per_panel=periods_per_panel,
                                    near_line_poles=near)
            contour.trunc_estimates = cspec_probe.trunc_estimates
            return cls(params, state, pole_set, contour, line, meta=meta)

    def _assemble_nodes(self):
        """Per-node matching functions, amplitudes, folded coefficients."""
        p = self.params
        ctx = p.ctx
        with mp.workdps(ctx.dps):
            alpha = p.alpha()
            F = p.f_mp()
            N = p.norm_const()
            zs = self.contour.nodes
            ws = self.contour.weights
            u0s = [alpha * z / F for z in zs]
            airy_parts = self.line.airy_at(u0s)
            ecp = self.line.e_at(u0s, +1)
            ecm = self.line.e_at(u0s, -1)
            n = len(zs)
            self.node_dp = [None] * n
            self.node_dm = [None] * n
            self.node_amp = [None] * n
            self.coef_m = [None] * n
            self.coef_p = [None] * n
            self.coef_int = [None] * n if not p.delta_limit else None
            self.node_k = [None] * n if not p.delta_limit else None
            for j, z in enumerate(zs):
                ai, aip, bi, bip = airy_parts[j]
                if p.delta_limit:
                    c = mpf(1)
                    g = 1 / alpha
                else:
                    k = p.k_w(z)
                    L = p.l_mp()
                    c = mpmath.cos(k * L)
                    g = (k / alpha) * mpmath.sin(k * L)
                    self.node_k[j] = k
                gB = c * bip + g * bi
                gA = c * aip + g * ai
                dp = (mp.pi / 2) * (gB + 1j * gA)
                dm = (mp.pi / 2) * (gB - 1j * gA)
                amp = amp_outside_from_parts(dp, dm, ecp[j], ecm[j], p)
                amp = amp + amp_inside(z, self.state, p)
                w = ws[j]
                self.node_dp[j] = dp
                self.node_dm[j] = dm
                self.node_amp[j] = amp
                self.coef_m[j] = (1j / N) * amp / dm * w
                self.coef_p[j] = -(1j / N) * amp / dp * w
                if self.coef_int is not None:
                    self.coef_int[j] = amp / (N * dp * dm) * w

    def _assemble_poles(self):
        p = self.params
        ctx = p.ctx
        with mp.workdps(ctx.dps):
            alpha = p.alpha()
            F = p.f_mp()
            N = p.norm_const()
            for pole in self.pole_set.poles:
                u0 = alpha * pole.W / F
                ai, aip, bi, bip = self.line.airy_at([u0])[0]
                if p.delta_limit:
                    c, g = mpf(1), 1 / alpha
                else:
                    k = p.k_w(pole.W)
                    L = p.l_mp()
                    c = mpmath.cos(k * L)
                    g = (k / alpha) * mpmath.sin(k * L)
                dm = (mp.pi / 2) * ((c * bip + g * bi) - 1j * (c * aip + g * ai))
                ep = self.line.e_at([u0], +1)[0]
                em = self.line.e_at([u0], -1)[0]
                amp = amp_outside_from_parts(mpc(0), dm, ep, em, p)
                # d~+(W_p) = 0 at the pole: only the d~- E_+ term survives
                amp = amp + amp_inside(pole.W, self.state, p)
                pole.amp = amp
                pole.pole_coef = -2 * mp.pi * amp / (N * pole.dplus_deriv)
                pole._dm = dm
                # interior residue prefactor
                pole._int_coef = -2j * mp.pi * amp / (N * dm * pole.dplus_deriv)

    def _restore_from_rows(self, node_rows):
        """Rebuild coefficient arrays from cached per-node amp/d~ values."""
        p = self.params
        ctx = p.ctx
        with mp.workdps(ctx.dps):
            N = p.norm_const()
            self.node_amp = [mpc(mpf(r[3]), mpf(r[4])) for r in node_rows]
            self.node_dp = [mpc(mpf(r[5]), mpf(r[6])) for r in node_rows]
            self.node_dm = [mpc(mpf(r[7]), mpf(r[8])) for r in node_rows]
            n = len(self.contour.nodes)
            self.coef_m = [None] * n
            self.coef_p = [None] * n
            self.coef_int = [None] * n if not p.delta_limit else None
            self.node_k = [None] * n if not p.delta_limit else None
            for j, z in enumerate(self.contour.nodes):
                amp = self.node_amp[j]
                dp = self.node_dp[j]
                dm = self.node_dm[j]
                w = self.contour.weights[j]
                self.coef_m[j] = (1j / N) * amp / dm * w
                self.coef_p[j] = -(1j / N) * amp / dp * w
                if self.coef_int is not None:
                    self.node_k[j] = p.k_w(z)
                    self.coef_int[j] = amp / (N * dp * dm) * w
            for pole in self.pole_set.poles:
                pole.pole_coef = -2 * mp.pi * pole.amp / (N * pole.dplus_deriv)
                pole._int_coef = (-2j * mp.pi * pole.amp
                                  / (N * pole._dm * pole.dplus_deriv))
        self._make_float_mirrors()

    def _make_float_mirrors(self):
        self.nodes_f = self.contour.nodes_f
        self.coef_m_f = np.array([complex(v) for v in self.coef_m])
        self.coef_p_f = np.array([complex(v) for v in self.coef_p])
        bad = ~(np.isfinite(self.coef_m_f) & np.isfinite(self.coef_p_f))
        if bad.any():
            raise ConfigError("node coefficients exceed double range; "
                              "use the full-precision engine")
        self.pole_w_f = np.array([complex(p.W) for p in self.pole_set.poles])
        self.pole_coef_f = np.array([complex(p.pole_coef) for p in self.pole_set.poles])
        if self.coef_int is not None:
            self.coef_int_f = np.array([complex(v) for v in self.coef_int])
            self.node_k_f = np.array([complex(v) for v in self.node_k])
            self.pole_k_f = np.array([complex(self.params.k_w(p.W))
                                      for p in self.pole_set.poles])
            self.pole_int_f = np.array([complex(p._int_coef)
                                        for p in self.pole_set.poles])

    # -- full-precision engine ----------------------------------------------

    def tabulate_x(self, x, use_line=True):
        """Per-node t-independent factors T_j(x) (cached per position)."""
        if self.line is None:
            use_line = False
        key = (str(x), use_line)
        if key in self._x_tables:
            return self._x_tables[key]
        p = self.params
        ctx = p.ctx
        with mp.workdps(ctx.dps):
            xm = mpf(str(x))
            alpha = p.alpha()
            F = p.f_mp()
            us = [alpha * (xm + z / F) for z in self.contour.nodes]
            if use_line:
                cim = self.line.ci_at(us, -1)
                cip = self.line.ci_at(us, +1)
            else:
                cim = [ci_direct(u, -1, ctx) for u in us]
                cip = [ci_direct(u, +1, ctx) for u in us]
            table = [cm * u1 + cp * u2 for cm, u1, cp, u2
                     in zip(self.coef_m, cim, self.coef_p, cip)]
        if len(self._x_tables) > 64:
            self._x_tables.clear()
        self._x_tables[key] = table
        return table

    def psi_mp(self, x, t, use_line=True):
        """psi(x, t) at working precision (x >= 0)."""
        p = self.params
        ctx = p.ctx
        table = self.tabulate_x(x, use_line=use_line)
        with mp.workdps(ctx.dps):
            xm = mpf(str(x))
            tm = mpf(str(t))
            if xm < 0:
                raise ValueError("exterior evaluation needs x >= 0")
            acc = mpc(0)
            for T, z in zip(table, self.contour.nodes):
                acc += T * mpmath.exp(-1j * tm * z)
            alpha = p.alpha()
            F = p.f_mp()
            for pole in self.pole_set.poles:
                up = alpha * (xm + pole.W / F)
                cp = (self.line.ci_at([up], +1)[0]
                      if use_line and self.line is not None
                      else ci_direct(up, +1, ctx))
                acc += pole.pole_coef * mpmath.exp(-1j * tm * pole.W) * cp
            return acc

    def psi_interior_mp(self, x, t):
        """psi at -L <= x < 0 (finite well only), working precision."""
        p = self.params
        if p.delta_limit:
            raise ValueError("no interior region in the contact limit")
        ctx = p.ctx
        with mp.workdps(ctx.dps):
            xm = mpf(str(x))
            tm = mpf(str(t))
            L = p.l_mp()
            if xm < -L or xm > 0:
                raise ValueError("interior evaluation needs -L <= x <= 0")
            acc = mpc(0)
            for q, k, z in zip(self.coef_int, self.node_k, self.contour.nodes):
                acc += q * mpmath.cos(k * (L + xm)) * mpmath.exp(-1j * tm * z)
            for pole in self.pole_set.poles:
                k = p.k_w(pole.W)
                acc += (pole._int_coef * mpmath.cos(k * (L + xm))
                        * mpmath.exp(-1j * tm * pole.W))
            return acc

    # -- fast engine ---------------------------------------------------------

    def field(self, xs, ts, x_chunk=48, t_chunk=256) -> WavefunctionField:
        """Vectorized double-precision sweep over exterior positions."""
        xs = np.asarray(xs, dtype=float)
        ts = np.asarray(ts, dtype=float)
        if (xs < 0).any():
            raise ValueError("field() covers x >= 0; use interior_field for x < 0")
        alpha = float(self.params.alpha())
        F = float(self.params.F)
        vals = np.zeros((len(ts), len(xs)), dtype=complex)
        for i0 in range(0, len(xs), x_chunk):
            sl = slice(i0, min(i0 + x_chunk, len(xs)))
            u = alpha * (xs[sl][None, :] + self.nodes_f[:, None] / F)
            base = (self.coef_m_f[:, None] * fastnum.ci_minus(u)
                    + self.coef_p_f[:, None] * fastnum.ci_plus(u))
            for j0 in range(0, len(ts), t_chunk):
                tl = slice(j0, min(j0 + t_chunk, len(ts)))
                phase = np.exp(-1j * np.outer(ts[tl], self.nodes_f))
                vals[tl, sl] = phase @ base
        if len(self.pole_w_f):
            for ip, wp in enumerate(self.pole_w_f):
                up = alpha * (xs + wp / F)
                cp = fastnum.ci_plus(up)
                vals += (self.pole_coef_f[ip]
                         * np.exp(-1j * np.outer(ts, np.ones(1)) * wp)
                         * cp[None, :])
        return WavefunctionField(x=xs, t=ts, values=vals, meta=self._field_meta())

    def interior_field(self, xs, ts, x_chunk=64) -> WavefunctionField:
        """Vectorized sweep over interior positions (-L <= x <= 0)."""
        p = self.params
        if p.delta_limit:
            raise ValueError("no interior region in the contact limit")
        xs = np.asarray(xs, dtype=float)
        ts = np.asarray(ts, dtype=float)
        L = float(p.L)
        if (xs < -L).any() or (xs > 0).any():
            raise ValueError("interior positions must lie in [-L, 0]")
        vals = np.zeros((len(ts), len(xs)), dtype=complex)
        for i0 in range(0, len(xs), x_chunk):
            sl = slice(i0, min(i0 + x_chunk, len(xs)))
            base = self.coef_int_f[:, None] * np.cos(
                self.node_k_f[:, None] * (L + xs[sl][None, :]))
            phase = np.exp(-1j * np.outer(ts, self.nodes_f))
            vals[:, sl] = phase @ base
        for ip, wp in enumerate(self.pole_w_f):
            ck = np.cos(self.pole_k_f[ip] * (L + xs))
            vals += (self.pole_int_f[ip] * np.exp(-1j * ts[:, None] * wp)
                     * ck[None, :])
        return WavefunctionField(x=xs, t=ts, values=vals, meta=self._field_meta())

    def _field_meta(self):
        m = dict(self.meta)
        m.update({
            "s": self.contour.s,
            "z_min": self.contour.z_min,
            "z_max": self.contour.z_max,
            "n_nodes": len(self.contour),
            "n_poles": len(self.pole_set),
            "digits": self.params.ctx.digits,
            "model": self.params.label(),
        })
        return m

    # -- consistency ---------------------------------------------------------

    def check_pole_contour_consistency(self):
        """Crossed set must be exactly the poles shallower than the contour."""
        s = self.contour.s
        for p in self.pole_set.poles:
            if not (-s < float(p.W.imag) < 0):
                raise ConfigError(
                    f"pole {p.as_complex()} in crossed set but not above Im z=-{s}")
        if self.pole_set.completeness_certificate >= 0 and \
                self.pole_set.completeness_certificate != len(self.pole_set):
            raise ConfigError("pole-set certificate does not match its size")


def write_field_csv(field: WavefunctionField, path):
    """CSV rows (x, t, Re psi, Im psi, |psi|^2), 17 significant digits."""
    lines = []
    for key in sorted(field.meta):
        lines.append(f"# {key}: {field.meta[key]}")
    lines.append("x,t,re_psi,im_psi,abs2")
    for it, t in enumerate(field.t):
        for ix, x in enumerate(field.x):
            v = field.values[it, ix]
            lines.append("%.16e,%.16e,%.16e,%.16e,%.16e"
                         % (x, t, v.real, v.imag, abs(v) ** 2))
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def write_density_matrix(field: WavefunctionField, path):
    """Gridded |psi|^2: header comments, x-grid line, then one row per time."""
    lines = []
    for key in sorted(field.meta):
        lines.append(f"# {key}: {field.meta[key]}")
    lines.append("# row = t, column = x; first data line is the x grid")
    lines.append("x " + " ".join("%.16e" % x for x in field.x))
    dens = field.density()
    for it, t in enumerate(field.t):
        lines.append("%.16e " % t + " ".join("%.16e" % v for v in dens[it]))
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")
