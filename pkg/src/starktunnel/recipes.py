"""Named run recipes: complete configurations for the standard illustrations.

Each recipe is a full config (nothing hard-coded downstream) plus the command
it feeds.  Contour truncations are pinned values tuned by convergence sweeps,
so recipe runs are reproducible without re-probing.
"""

from __future__ import annotations

from .config import RunConfig
from .errors import ConfigError


def _delta50(digits, extra=None):
    d = {
        "model": {"delta_limit": "true", "f": "1/50"},
        "precision": {"digits": str(digits)},
        "contour": {"s": "3/100", "tol": "1e-9"},
    }
    for sec, kv in (extra or {}).items():
        d.setdefault(sec, {}).update(kv)
    return d


def _nanotip(digits, extra=None):
    d = {
        "model": {"delta_limit": "false", "l": "100", "v0": "25/68",
                  "f": "1/100", "state_energy_near": "-0.1848"},
        "precision": {"digits": str(digits)},
        "contour": {"s": "3/100", "tol": "1e-8"},
    }
    for sec, kv in (extra or {}).items():
        d.setdefault(sec, {}).update(kv)
    return d


RECIPES = {
    # pole censuses / zero-line maps
    "delta-f002": ("poles", _delta50(60, {
        "contour": {"t_max": "0", "x_max": "1", "z_min": "-0.9", "z_max": "30"},
        "grids": {"map_window": "-1.2, 1.5, -0.4, 0.02", "map_grid": "221"},
    })),
    "nanotip-s003": ("poles", _nanotip(100, {
        "contour": {"t_max": "0", "x_max": "1", "z_min": "-0.55", "z_max": "15"},
        "grids": {"map_window": "-0.45, 1.8, -0.05, 0.005", "map_grid": "221"},
    })),
    "polemap-strongfield": ("poles", {
        "model": {"delta_limit": "false", "l": "2", "v0": "2", "f": "1"},
        "precision": {"digits": "50"},
        "contour": {"s": "0.35", "t_max": "0", "x_max": "1",
                    "z_min": "-2.2", "z_max": "8"},
        "grids": {"map_window": "-2.5, 6.0, -2.5, 0.1", "map_grid": "261"},
    }),

    # initial-state reconstruction
    "fig3": ("reconstruct", _delta50(100, {
        "contour": {"t_max": "0", "x_max": "40", "z_min": "-0.95", "z_max": "40"},
        "grids": {"x": "0:40:81"},
    })),
    "fig3-smoke": ("reconstruct", _delta50(40, {
        "contour": {"t_max": "0", "x_max": "40", "z_min": "-0.75", "z_max": "12"},
        "grids": {"x": "0:40:21"},
    })),

    # wavefunction and density pulses at detectors
    "fig4": ("evolve", _delta50(100, {
        "contour": {"t_max": "120", "x_max": "40", "z_min": "-0.95", "z_max": "40"},
        "grids": {"detectors": "25", "t": "0:120:481"},
    })),
    "fig5": ("evolve", _delta50(100, {
        "contour": {"t_max": "130", "x_max": "110", "z_min": "-0.95", "z_max": "40"},
        "grids": {"detectors": "25, 100", "t": "0:130:521"},
    })),
    "fig6": ("evolve", _nanotip(200, {
        "contour": {"t_max": "200", "x_max": "160", "z_min": "-0.55", "z_max": "15"},
        "grids": {"detectors": "18.48, 28.48, 38.48, 58.48, 88.48, 118.48, 148.48",
                   "t": "0:200:801"},
    })),
    "fig6-smoke": ("evolve", _nanotip(100, {
        "contour": {"t_max": "200", "x_max": "160", "z_min": "-0.55", "z_max": "15"},
        "grids": {"detectors": "18.48, 28.48, 38.48, 58.48, 88.48, 118.48, 148.48",
                   "t": "0:200:801"},
    })),

    # density map over (t, x)
    "fig7": ("map", _nanotip(200, {
        "contour": {"t_max": "200", "x_max": "80", "z_min": "-0.55", "z_max": "15"},
        "grids": {"x": "0.5:80:160", "t": "0:200:401"},
    })),
    "fig7-smoke": ("map", _nanotip(100, {
        "contour": {"t_max": "200", "x_max": "80", "z_min": "-0.55", "z_max": "15"},
        "grids": {"x": "0.5:80:160", "t": "0:200:401"},
    })),

    # arrival analysis + trajectory fit
    "arrival-delta": ("arrival", _delta50(100, {
        "contour": {"t_max": "130", "x_max": "120", "z_min": "-0.95", "z_max": "40"},
        "grids": {"detectors": "25, 40, 55, 70, 85, 100, 115", "t": "0:130:521"},
    })),
    "arrival-nanotip": ("arrival", _nanotip(200, {
        "contour": {"t_max": "200", "x_max": "160", "z_min": "-0.55", "z_max": "15"},
        "grids": {"detectors": "18.48, 28.48, 38.48, 58.48, 88.48, 118.48, 148.48",
                   "t": "0:200:801"},
    })),
    "arrival-nanotip-smoke": ("arrival", _nanotip(100, {
        "contour": {"t_max": "200", "x_max": "160", "z_min": "-0.55", "z_max": "15"},
        "grids": {"detectors": "18.48, 28.48, 38.48, 58.48, 88.48, 118.48, 148.48",
                   "t": "0:200:801"},
    })),

    # probability conservation audit
    "norm-nanotip": ("norm", _nanotip(100, {
        "contour": {"t_max": "200", "x_max": "420", "z_min": "-0.55", "z_max": "15"},
        "grids": {"x": "0:420:841", "x_interior": "-100:0:301",
                   "t": "0, 40, 80, 120, 160, 200"},
    })),

    # grid-propagation cross-check at a moderate field
    "oracle-f02": ("oracle", {
        "model": {"delta_limit": "true", "f": "1/5"},
        "precision": {"digits": "60"},
        "contour": {"s": "0.06", "t_max": "30", "x_max": "45",
                    "z_min": "-3.2", "z_max": "60", "tol": "1e-9"},
        "grids": {"x": "2:40:77", "t": "0:30:121"},
        "oracle": {"dx": "0.01", "dt": "0.002", "x_hi": "175",
                    "absorber_start": "45", "absorber_strength": "0.8",
                    "l2_tol": "0.01"},
    }),
}


def get_recipe(name: str) -> tuple:
    """(command, RunConfig) for a named recipe."""
    if name not in RECIPES:
        raise ConfigError(f"unknown recipe {name!r}; known: {', '.join(sorted(RECIPES))}")
    command, data = RECIPES[name]
    cfg = RunConfig(data)
    cfg.data.setdefault("run", {})["recipe"] = name
    return command, cfg
