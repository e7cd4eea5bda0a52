"""Run configuration: a sectioned key/value file, canonically hashable.

Values are kept as the exact strings found in the file (rationals like
``25/68`` stay exact all the way into the multiprecision layer).  The
canonical dump sorts sections and keys, which makes the config hash stable
and lets outputs embed an unambiguous provenance stamp.
"""

from __future__ import annotations

import configparser
import hashlib
import io
import os
from fractions import Fraction

import numpy as np

from .precision import PrecisionContext
from .model import ModelParams
from .errors import ConfigError


_DEFAULTS = {
    "model": {"delta_limit": "false", "f": "1/100"},
    "precision": {"digits": "100"},
    "contour": {"s": "3/100", "t_max": "120", "x_max": "40",
                "tol": "1e-9", "gl_order": "12", "periods_per_panel": "0.9"},
    "grids": {},
    "oracle": {},
    "run": {"engine": "fast"},
    "outputs": {},
}


class RunConfig:
    def __init__(self, data=None):
        self.data = {}
        for sec, kv in _DEFAULTS.items():
            self.data[sec] = dict(kv)
        for sec, kv in (data or {}).items():
            self.data.setdefault(sec, {})
            for k, v in kv.items():
                self.data[sec][str(k).lower()] = str(v)

    # -- I/O -----------------------------------------------------------------

    @classmethod
    def from_ini(cls, text_or_path):
        cp = configparser.ConfigParser(interpolation=None)
        if os.path.exists(str(text_or_path)):
            with open(text_or_path) as fh:
                cp.read_file(fh)
        else:
            cp.read_file(io.StringIO(str(text_or_path)))
        data = {sec: dict(cp.items(sec)) for sec in cp.sections()}
        return cls(data)

    def to_ini(self, sections=None) -> str:
        lines = []
        for sec in sorted(self.data):
            if sections is not None and sec not in sections:
                continue
            kv = {k: v for k, v in self.data[sec].items() if v != ""}
            if not kv:
                continue
            lines.append(f"[{sec}]")
            for k in sorted(kv):
                lines.append(f"{k} = {kv[k]}")
            lines.append("")
        return "\n".join(lines)

    # sections that define the computation; paths and bookkeeping do not
    HASH_SECTIONS = ("model", "precision", "contour", "grids", "oracle")

    def hash(self) -> str:
        text = self.to_ini(sections=self.HASH_SECTIONS)
        return hashlib.sha256(text.encode()).hexdigest()[:16]

    def set_override(self, dotted_key, value):
        if "." not in dotted_key:
            raise ConfigError(f"override must be section.key=value, got {dotted_key}")
        sec, key = dotted_key.split(".", 1)
        self.data.setdefault(sec, {})[key.lower()] = str(value)

    # -- typed accessors -------------------------------------------------------

    def _get(self, sec, key, default=None):
        v = self.data.get(sec, {}).get(key, None)
        if v is None or v == "":
            return default
        return v

    def get_bool(self, sec, key, default=False):
        v = self._get(sec, key)
        if v is None:
            return default
        if v.lower() in ("1", "true", "yes", "on"):
            return True
        if v.lower() in ("0", "false", "no", "off"):
            return False
        raise ConfigError(f"bad boolean {sec}.{key} = {v}")

    def get_float(self, sec, key, default=None):
        v = self._get(sec, key)
        if v is None:
            return default
        try:
            return float(Fraction(v))
        except (ValueError, ZeroDivisionError) as e:
            raise ConfigError(f"bad number {sec}.{key} = {v}") from e

    def get_int(self, sec, key, default=None):
        v = self._get(sec, key)
        if v is None:
            return default
        try:
            return int(v)
        except ValueError as e:
            raise ConfigError(f"bad integer {sec}.{key} = {v}") from e

    def get_str(self, sec, key, default=None):
        v = self._get(sec, key)
        return default if v is None else v

    def get_grid(self, sec, key, default=None):
        """Grid spec 'lo:hi:n' or a comma list of values."""
        v = self._get(sec, key)
        if v is None:
            if default is None:
                return None
            v = default
        if ":" in v:
            parts = v.split(":")
            if len(parts) != 3:
                raise ConfigError(f"grid {sec}.{key} must be lo:hi:n, got {v}")
            lo, hi, n = float(Fraction(parts[0])), float(Fraction(parts[1])), int(parts[2])
            return np.linspace(lo, hi, n)
        return np.array([float(Fraction(tok.strip())) for tok in v.split(",") if tok.strip()])

    # -- model assembly ---------------------------------------------------------

    def precision_context(self) -> PrecisionContext:
        return PrecisionContext(self.get_int("precision", "digits", 100))

    def model_params(self) -> ModelParams:
        ctx = self.precision_context()
        try:
            if self.get_bool("model", "delta_limit", False):
                return ModelParams(F=Fraction(self._get("model", "f")),
                                   delta_limit=True, ctx=ctx)
            L = self._get("model", "l")
            V0 = self._get("model", "v0")
            if L is None or V0 is None:
                raise ConfigError("finite well needs model.l and model.v0")
            return ModelParams(F=Fraction(self._get("model", "f")),
                               L=Fraction(L), V0=Fraction(V0), ctx=ctx)
        except (ValueError, TypeError, ZeroDivisionError) as e:
            raise ConfigError(f"bad model section: {e}") from e

    def propagator_kwargs(self):
        kw = dict(
            s=self._get("contour", "s", "3/100"),
            t_max=self.get_float("contour", "t_max", 120.0),
            x_max=self.get_float("contour", "x_max", 40.0),
            tol=self.get_float("contour", "tol", 1e-9),
            gl_order=self.get_int("contour", "gl_order", 12),
            periods_per_panel=self.get_float("contour", "periods_per_panel", 0.9),
        )
        zmin = self._get("contour", "z_min")
        zmax = self._get("contour", "z_max")
        kw["z_min"] = None if zmin in (None, "auto") else float(Fraction(zmin))
        kw["z_max"] = None if zmax in (None, "auto") else float(Fraction(zmax))
        near = self._get("model", "state_energy_near")
        kw["state_energy_near"] = None if near is None else float(Fraction(near))
        return kw

    def cache_dir(self) -> str:
        env = os.environ.get("STARKTUNNEL_CACHE")
        if env:
            return env
        return self.get_str("run", "cache_dir", ".starktunnel-cache")

    def out_dir(self) -> str:
        return self.get_str("outputs", "dir", "outputs")
