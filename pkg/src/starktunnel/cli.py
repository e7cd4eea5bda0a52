"""Command-line front end: configuration, caching, and file outputs.

Subcommands: poles, reconstruct, evolve, map, arrival, norm, oracle,
recipe <name>.  Exit codes: 0 success, 2 configuration error, 3 numerical
certification failure, 4 cross-method disagreement beyond threshold.
Cache location: [run] cache_dir, overridable with STARKTUNNEL_CACHE.
"""

from __future__ import annotations

import argparse
import os
import shutil
import sys
import tempfile

import numpy as np
import mpmath
from mpmath import mp, mpc, mpf

from .config import RunConfig
from .recipes import get_recipe
from .errors import ConfigError, CertificationError, OracleMismatchError
from .precision import PrecisionError
from .model import bound_states, select_state, bound_norm
from .poles import enumerate_poles, zero_contour_map, serialize_pole_set, load_pole_set
from .evolve import SpectralPropagator, write_field_csv, write_density_matrix
from .contour import ContourSpec
from . import analysis
from . import gridprop


def _atomic_write(path, text):
    os.makedirs(os.path.dirname(path) or ".", exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=os.path.dirname(path) or ".", suffix=".tmp")
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _out_dir(cfg: RunConfig) -> str:
    base = cfg.out_dir()
    sub = cfg.get_str("run", "recipe", None) or cfg.hash()
    return os.path.join(base, sub)


def _state_for(cfg, params):
    states = bound_states(params)
    near = cfg.get_float("model", "state_energy_near", None)
    return states[0] if near is None else select_state(states, near)


# -- stage-one caching --------------------------------------------------------

def _stage1_path(cfg):
    return os.path.join(cfg.cache_dir(), cfg.hash(), "stage1.txt")


def save_stage1(prop: SpectralPropagator, cfg: RunConfig, path):
    digs = prop.params.ctx.digits + 8

    def f(x):
        return mpmath.nstr(x, digs, strip_zeros=False)

    lines = ["# starktunnel stage1 v1",
             f"# config_hash: {cfg.hash()}",
             f"# model: {prop.params.label()}",
             f"# s: {prop.contour.s!r}",
             f"# z_min: {prop.contour.z_min!r}",
             f"# z_max: {prop.contour.z_max!r}",
             f"# gl_order: {prop.contour.gl_order}",
             f"# certificate: {prop.pole_set.completeness_certificate}",
             f"# census: {prop.pole_set.re_lo!r} {prop.pole_set.re_hi!r}"]
    for j, z in enumerate(prop.contour.nodes):
        lines.append("NODE " + " ".join([
            f(z.real), f(z.imag), f(prop.contour.weights[j]),
            f(prop.node_amp[j].real), f(prop.node_amp[j].imag),
            f(prop.node_dp[j].real), f(prop.node_dp[j].imag),
            f(prop.node_dm[j].real), f(prop.node_dm[j].imag)]))
    for p in prop.pole_set.poles:
        lines.append("POLE " + " ".join([
            f(p.W.real), f(p.W.imag), p.family, repr(p.residual),
            f(p.dplus_deriv.real), f(p.dplus_deriv.imag),
            f(p.amp.real), f(p.amp.imag),
            f(p._dm.real), f(p._dm.imag)]))
    _atomic_write(path, "\n".join(lines) + "\n")


def load_stage1(params, state, path) -> SpectralPropagator:
    from .poles import ResonantPole, PoleSet
    ctx = params.ctx
    header = {}
    node_rows = []
    pole_rows = []
    with open(path) as fh:
        for raw in fh:
            raw = raw.strip()
            if not raw:
                continue
            if raw.startswith("#"):
                body = raw[1:].strip()
                if ":" in body:
                    k, v = body.split(":", 1)
                    header[k.strip()] = v.strip()
            elif raw.startswith("NODE "):
                node_rows.append(raw[5:].split())
            elif raw.startswith("POLE "):
                pole_rows.append(raw[5:].split())
    with mp.workdps(ctx.dps):
        nodes = [mpc(mpf(r[0]), mpf(r[1])) for r in node_rows]
        weights = [mpf(r[2]) for r in node_rows]
        cspec = ContourSpec(
            s=float(header["s"]), z_min=float(header["z_min"]),
            z_max=float(header["z_max"]), gl_order=int(header["gl_order"]),
            nodes=nodes, weights=weights,
            nodes_f=np.array([complex(n) for n in nodes]),
            weights_f=np.array([float(w) for w in weights]))
        poles = []
        for r in pole_rows:
            p = ResonantPole(W=mpc(mpf(r[0]), mpf(r[1])), family=r[2],
                             residual=float(r[3]),
                             dplus_deriv=mpc(mpf(r[4]), mpf(r[5])),
                             amp=mpc(mpf(r[6]), mpf(r[7])))
            p._dm = mpc(mpf(r[8]), mpf(r[9]))
            poles.append(p)
        lo, hi = header.get("census", "0 0").split()
        pset = PoleSet(poles=poles, contour_s=float(header["s"]),
                       re_lo=float(lo), re_hi=float(hi),
                       completeness_certificate=int(header.get("certificate", -1)),
                       label=header.get("model", ""))
        prop = SpectralPropagator.__new__(SpectralPropagator)
        prop.params = params
        prop.state = state
        prop.pole_set = pset
        prop.contour = cspec
        prop.line = None
        prop.meta = {"config_hash": header.get("config_hash", "")}
        prop._x_tables = {}
        prop._restore_from_rows(node_rows)
        return prop


def _get_propagator(cfg: RunConfig) -> SpectralPropagator:
    params = cfg.model_params()
    state = _state_for(cfg, params)
    path = _stage1_path(cfg)
    if os.path.exists(path):
        return load_stage1(params, state, path)
    prop = SpectralPropagator.build(params, meta={"config_hash": cfg.hash()},
                                    **cfg.propagator_kwargs())
    save_stage1(prop, cfg, path)
    return prop


# -- commands -------------------------------------------------------------

def cmd_poles(cfg: RunConfig) -> int:
    params = cfg.model_params()
    state = _state_for(cfg, params)
    out = _out_dir(cfg)
    cache = os.path.join(cfg.cache_dir(), cfg.hash())
    pole_file = os.path.join(cache, "poles.txt")
    if not os.path.exists(pole_file):
        kw = cfg.propagator_kwargs()
        ps = enumerate_poles(params, mpf(str(kw["s"])),
                             re_lo=kw["z_min"], re_hi=kw["z_max"])
        _atomic_write(pole_file, serialize_pole_set(ps, params.ctx.digits))
    shutil.copyfile(pole_file, _ensure_dir(os.path.join(out, "poles.txt")))

    window = cfg.get_grid("grids", "map_window", None)
    if window is not None and len(window) == 4:
        grid_n = cfg.get_int("grids", "map_grid", 201)
        zm = zero_contour_map(params, state, window, grid=grid_n)
        lines = [f"# config_hash: {cfg.hash()}",
                 "family,x1,y1,x2,y2"]
        for fam in ("re_zero", "im_zero"):
            for (p1, p2) in zm[fam]:
                lines.append("%s,%.16e,%.16e,%.16e,%.16e"
                             % (fam, p1[0], p1[1], p2[0], p2[1]))
        _atomic_write(os.path.join(out, "zero_map.csv"), "\n".join(lines) + "\n")
    print(f"poles: wrote {os.path.join(out, 'poles.txt')}")
    return 0


def _ensure_dir(path):
    os.makedirs(os.path.dirname(path) or ".", exist_ok=True)
    return path


def cmd_reconstruct(cfg: RunConfig) -> int:
    prop = _get_propagator(cfg)
    xs = cfg.get_grid("grids", "x", "0:40:81")
    fld = prop.field(xs, np.array([0.0]))
    out = os.path.join(_out_dir(cfg), "reconstruct.csv")
    _ensure_dir(out)
    write_field_csv(fld, out)
    print(f"reconstruct: wrote {out}")
    return 0


def cmd_evolve(cfg: RunConfig) -> int:
    prop = _get_propagator(cfg)
    dets = cfg.get_grid("grids", "detectors", None)
    if dets is None:
        raise ConfigError("evolve needs grids.detectors")
    ts = cfg.get_grid("grids", "t", "0:120:481")
    fld = prop.field(np.asarray(dets), ts)
    Q = float(prop.state.Q)
    F = float(prop.params.F)
    xe = analysis.exit_point(Q, F)
    lines = []
    for key in sorted(fld.meta):
        lines.append(f"# {key}: {fld.meta[key]}")
    lines.append("x,t,re_psi,im_psi,abs2,t_eta")
    for it, t in enumerate(fld.t):
        for ix, x in enumerate(fld.x):
            v = fld.values[it, ix]
            te = analysis.t_eta(x, Q, F) if x >= xe else float("nan")
            lines.append("%.16e,%.16e,%.16e,%.16e,%.16e,%.16e"
                         % (x, t, v.real, v.imag, abs(v) ** 2, te))
    out = os.path.join(_out_dir(cfg), "evolve.csv")
    _atomic_write(out, "\n".join(lines) + "\n")
    print(f"evolve: wrote {out}")
    return 0


def cmd_map(cfg: RunConfig) -> int:
    prop = _get_propagator(cfg)
    xs = cfg.get_grid("grids", "x", "0.5:60:120")
    ts = cfg.get_grid("grids", "t", "0:200:401")
    fld = prop.field(xs, ts)
    out = os.path.join(_out_dir(cfg), "density_map.txt")
    _ensure_dir(out)
    write_density_matrix(fld, out)
    print(f"map: wrote {out}")
    return 0


def cmd_arrival(cfg: RunConfig) -> int:
    prop = _get_propagator(cfg)
    dets = cfg.get_grid("grids", "detectors", None)
    if dets is None:
        raise ConfigError("arrival needs grids.detectors")
    ts = cfg.get_grid("grids", "t", "0:200:801")
    fld = prop.field(np.asarray(dets), ts)
    Q = float(prop.state.Q)
    F = float(prop.params.F)
    records = [analysis.peak_arrival(fld, x, Q, F) for x in dets]
    lines = [f"# config_hash: {cfg.hash()}",
             "x_obs,t_peak,t_eta,fwhm,peak_density,truncated"]
    for r in records:
        lines.append("%.16e,%.16e,%.16e,%.16e,%.16e,%d"
                     % (r.x_obs, r.t_peak, r.t_eta, r.fwhm, r.peak_density,
                        int(r.truncated)))
    out_dir = _out_dir(cfg)
    _atomic_write(os.path.join(out_dir, "arrivals.csv"), "\n".join(lines) + "\n")
    xe = analysis.exit_point(Q, F)
    fit = analysis.fit_trajectory(records, F, ref_position=xe)
    summary = [f"# config_hash: {cfg.hash()}",
               "x0,v0,t0,residual,sd_x0,sd_v0,t_at_exit,v_at_exit",
               "%.16e,%.16e,%.16e,%.16e,%.16e,%.16e,%.16e,%.16e"
               % (fit.x0, fit.v0, fit.t0, fit.residual,
                  np.sqrt(fit.cov[0, 0]), np.sqrt(fit.cov[1, 1]),
                  fit.t_at_ref, fit.v_at_ref)]
    _atomic_write(os.path.join(out_dir, "trajectory_fit.csv"),
                  "\n".join(summary) + "\n")
    print(f"arrival: x0={fit.x0:.3f} v0={fit.v0:.4f} -> {out_dir}")
    return 0


def cmd_norm(cfg: RunConfig) -> int:
    prop = _get_propagator(cfg)
    xs = cfg.get_grid("grids", "x", "0:400:801")
    ts = cfg.get_grid("grids", "t", "0, 50, 100, 150, 200")
    ext = prop.field(xs, ts)
    interior = None
    if not prop.params.delta_limit:
        xi = cfg.get_grid("grids", "x_interior", "-100:0:301")
        interior = prop.interior_field(xi, ts)
    audit = analysis.norm_audit(ext, prop.params, prop.state, interior=interior)
    lines = [f"# config_hash: {cfg.hash()}",
             "t,norm,deviation,vs_initial,tail_bound"]
    for i in range(len(audit.t)):
        lines.append("%.16e,%.16e,%.16e,%.16e,%.16e"
                     % (audit.t[i], audit.norm[i], audit.deviation[i],
                        audit.vs_initial[i], audit.tail_bound[i]))
    out = os.path.join(_out_dir(cfg), "norm_audit.csv")
    _atomic_write(out, "\n".join(lines) + "\n")
    print(f"norm: max deviation {audit.deviation.max():.3e} -> {out}")
    return 0


def cmd_oracle(cfg: RunConfig) -> int:
    prop = _get_propagator(cfg)
    params = prop.params
    xs = cfg.get_grid("grids", "x", "2:40:77")
    ts = cfg.get_grid("grids", "t", "0:30:121")
    spectral = prop.field(xs, ts)

    grid = gridprop.GridSpec(
        x_hi=cfg.get_float("oracle", "x_hi", 110.0),
        dx=cfg.get_float("oracle", "dx", 0.01),
        dt=cfg.get_float("oracle", "dt", 0.002),
        absorber_start=cfg.get_float("oracle", "absorber_start", 60.0),
        absorber_strength=cfg.get_float("oracle", "absorber_strength", 0.35))
    t_max = float(ts[-1])
    run = gridprop.evolve_grid(params, grid, t_max, n_snapshots=len(ts),
                               energy_near=cfg.get_float("model", "state_energy_near", None))
    # sample the grid field on the comparison grid
    gx = run.field.x
    gi = np.array([int(round((x - gx[0]) / grid.dx)) for x in xs])
    gt = np.array([int(np.argmin(np.abs(run.field.t - t))) for t in ts])
    grid_dens = np.abs(run.field.values[np.ix_(gt, gi)]) ** 2
    scale = float(bound_norm(prop.state, params))
    spec_dens = spectral.density() / scale
    num = np.linalg.norm(spec_dens - grid_dens)
    den = np.linalg.norm(grid_dens)
    l2 = float(num / den)
    tol = cfg.get_float("oracle", "l2_tol", 0.01)
    lines = [f"# config_hash: {cfg.hash()}",
             f"# grid: dx={grid.dx} dt={grid.dt} x_hi={grid.x_hi}",
             f"# bound_energy_grid: {run.bound_energy!r}",
             "metric,value",
             "l2_relative_density,%.16e" % l2,
             "tolerance,%.16e" % tol]
    out = os.path.join(_out_dir(cfg), "oracle_diff.csv")
    _atomic_write(out, "\n".join(lines) + "\n")
    print(f"oracle: L2 relative density difference {l2:.3e} (tol {tol:.1e}) -> {out}")
    if l2 > tol:
        raise OracleMismatchError(
            f"spectral vs grid density L2 difference {l2:.3e} exceeds {tol:.1e}")
    return 0


_COMMANDS = {
    "poles": cmd_poles,
    "reconstruct": cmd_reconstruct,
    "evolve": cmd_evolve,
    "map": cmd_map,
    "arrival": cmd_arrival,
    "norm": cmd_norm,
    "oracle": cmd_oracle,
}


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="starktunnel",
        description="Tunneling wavefunctions from resonance poles and a "
                    "shifted spectral contour")
    parser.add_argument("command", choices=list(_COMMANDS) + ["recipe"])
    parser.add_argument("name", nargs="?", default=None,
                        help="recipe name (for the recipe command)")
    parser.add_argument("--config", default=None, help="config file (ini)")
    parser.add_argument("--set", action="append", default=[],
                        metavar="SECTION.KEY=VALUE", help="override a config value")
    parser.add_argument("--cache-dir", default=None)
    parser.add_argument("--out-dir", default=None)
    parser.add_argument("--print-config", action="store_true",
                        help="print the resolved configuration and exit")
    args = parser.parse_args(argv)

    try:
        if args.command == "recipe":
            if not args.name:
                raise ConfigError("recipe command needs a name")
            command, cfg = get_recipe(args.name)
        else:
            command = args.command
            cfg = RunConfig.from_ini(args.config) if args.config else RunConfig()
        for ov in args.set:
            if "=" not in ov:
                raise ConfigError(f"override must be SECTION.KEY=VALUE, got {ov}")
            key, val = ov.split("=", 1)
            cfg.set_override(key, val)
        if args.cache_dir:
            cfg.data.setdefault("run", {})["cache_dir"] = args.cache_dir
        if args.out_dir:
            cfg.data.setdefault("outputs", {})["dir"] = args.out_dir
        if args.print_config:
            print(cfg.to_ini())
            print(f"# hash: {cfg.hash()}")
            return 0
        return _COMMANDS[command](cfg)
    except ConfigError as e:
        print(f"config error: {e}", file=sys.stderr)
        return 2
    except (CertificationError, PrecisionError) as e:
        print(f"certification failure: {e}", file=sys.stderr)
        return 3
    except OracleMismatchError as e:
        print(f"oracle mismatch: {e}", file=sys.stderr)
        return 4


if __name__ == "__main__":
    sys.exit(main())
