"""Config parsing with strict schemas, and deterministic report writing."""

from __future__ import annotations

import json
import math
import os
import sys
import tempfile
from fractions import Fraction
from pathlib import Path

import numpy as np

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from . import iter_engine as ie
from .sp_core import BlockLabel


class ConfigError(ValueError):
    pass


def load_config(path) -> dict:
    """Read a TOML or JSON file; errors carry the file name and position."""
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc.strerror}") from None
    if path.suffix.lower() == ".json":
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: line {exc.lineno}, column {exc.colno}: {exc.msg}") from None
    else:
        try:
            data = tomllib.loads(text)
        except tomllib.TOMLDecodeError as exc:
            raise ConfigError(f"{path}: {exc}") from None
    if not isinstance(data, dict):
        raise ConfigError(f"{path}: top level must be a table")
    return data


def check_keys(table: dict, allowed, where: str, required=()):
    unknown = sorted(set(table) - set(allowed))
    if unknown:
        raise ConfigError(f"{where}: unknown key {unknown[0]!r} (allowed: {', '.join(sorted(allowed))})")
    for key in required:
        if key not in table:
            raise ConfigError(f"{where}: missing required key {key!r}")


def _typed(table, key, kinds, where):
    value = table[key]
    if isinstance(value, bool) or not isinstance(value, kinds):
        names = "/".join(k.__name__ for k in (kinds if isinstance(kinds, tuple) else (kinds,)))
        raise ConfigError(f"{where}: key {key!r} must be {names}, got {type(value).__name__}")
    return value


def parse_fraction(value, where: str):
    """int, float, or a string like '3/7'."""
    if isinstance(value, bool):
        raise ConfigError(f"{where}: expected a number")
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, float):
        return value
    if isinstance(value, str):
        try:
            return Fraction(value)
        except ValueError:
            raise ConfigError(f"{where}: cannot read {value!r} as a number") from None
    raise ConfigError(f"{where}: expected a number, got {type(value).__name__}")


# -- profiles ----------------------------------------------------------------

BLOCK_KEYS = {
    "R": {"kind", "theta_over_2pi", "rational"},
    "N1": {"kind", "eig", "b"},
    "hyp": {"kind", "lambda"},
}
PROFILE_KEYS = {"i1", "blocks", "family", "n"}


def parse_block(table: dict, where: str) -> BlockLabel:
    if not isinstance(table, dict) or "kind" not in table:
        raise ConfigError(f"{where}: each block needs a 'kind'")
    kind = table["kind"]
    if kind not in BLOCK_KEYS:
        raise ConfigError(f"{where}: unknown block kind {kind!r} (allowed: {', '.join(BLOCK_KEYS)})")
    check_keys(table, BLOCK_KEYS[kind], where)
    try:
        if kind == "N1":
            return BlockLabel.N1(_typed(table, "eig", int, where), _typed(table, "b", int, where))
        if kind == "hyp":
            return BlockLabel.hyp(_typed(table, "lambda", (int, float), where))
        if "rational" in table:
            pair = table["rational"]
            if not (isinstance(pair, list) and len(pair) == 2 and all(isinstance(v, int) for v in pair)):
                raise ConfigError(f"{where}: 'rational' must be [L, N] integers")
            frac = Fraction(pair[0], pair[1])
            if frac.denominator != pair[1]:
                raise ConfigError(f"{where}: 'rational' = {pair} is not in lowest terms")
            if "theta_over_2pi" in table and abs(float(table["theta_over_2pi"]) - float(frac)) > 1e-9:
                raise ConfigError(f"{where}: theta_over_2pi disagrees with rational = {pair}")
            return BlockLabel.R(0.0, frac=frac)
        if "theta_over_2pi" not in table:
            raise ConfigError(f"{where}: missing required key 'theta_over_2pi'")
        return BlockLabel.R(2 * math.pi * float(_typed(table, "theta_over_2pi", (int, float), where)))
    except KeyError as exc:
        raise ConfigError(f"{where}: missing required key {exc.args[0]!r}") from None
    except ValueError as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(f"{where}: {exc}") from None


def parse_profile(table: dict, where: str, extra=()) -> ie.MonodromyProfile:
    check_keys(table, PROFILE_KEYS | set(extra), where, required=("i1", "blocks"))
    i1 = _typed(table, "i1", int, where)
    raw = table["blocks"]
    if not isinstance(raw, list):
        raise ConfigError(f"{where}: 'blocks' must be an array of tables")
    blocks = [parse_block(b, f"{where}.blocks[{k}]") for k, b in enumerate(raw)]
    family = table.get("family", ie.R_FAMILY)
    n = table.get("n", sum(b.dim for b in blocks) // 2)
    try:
        return ie.MonodromyProfile(i1, tuple(blocks), family, n)
    except ie.ProfileError as exc:
        raise ConfigError(f"{where}: {exc}") from None


# -- surfaces ----------------------------------------------------------------

SURFACE_KEYS = {"kind", "radii", "epsilon", "coeffs", "alpha"}


def parse_surface(table: dict, where: str = "surface", rng=None):
    from . import orbit_lab as ol

    check_keys(table, SURFACE_KEYS, where, required=("kind", "radii"))
    radii = table["radii"]
    if not isinstance(radii, list) or not radii or not all(
        isinstance(r, (int, float)) and not isinstance(r, bool) for r in radii
    ):
        raise ConfigError(f"{where}: 'radii' must be a non-empty array of numbers")
    alpha = float(table.get("alpha", 2.0))
    kind = table["kind"]
    try:
        if kind == "ellipsoid":
            if "epsilon" in table or "coeffs" in table:
                raise ConfigError(f"{where}: 'epsilon'/'coeffs' only apply to kind = 'perturbed_ellipsoid'")
            return ol.ellipsoid(radii, alpha)
        if kind == "perturbed_ellipsoid":
            check_keys(table, SURFACE_KEYS, where, required=("epsilon", "coeffs"))
            return ol.perturbed_ellipsoid(radii, float(table["epsilon"]), table["coeffs"], alpha, rng=rng)
    except (ValueError, ol.NonConvexError) as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(f"{where}: {exc}") from None
    raise ConfigError(f"{where}: unknown surface kind {kind!r} (allowed: ellipsoid, perturbed_ellipsoid)")


# -- output ------------------------------------------------------------------

def to_plain(obj):
    """Recursively convert to JSON-ready builtins (Fractions become strings)."""
    if isinstance(obj, dict):
        return {str(k): to_plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_plain(v) for v in obj]
    if isinstance(obj, Fraction):
        return str(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating,)):
        return float(obj)
    if isinstance(obj, np.ndarray):
        return to_plain(obj.tolist())
    if isinstance(obj, complex):
        return [obj.real, obj.imag]
    if isinstance(obj, float) and not math.isfinite(obj):
        return repr(obj)
    return obj


def dumps(report: dict) -> str:
    return json.dumps(to_plain(report), sort_keys=True, indent=2) + "\n"


def format_csv(header, rows) -> str:
    """Comma-separated table with space-padded, aligned columns."""
    cells = [[str(h) for h in header]] + [[_cell(v) for v in row] for row in rows]
    widths = [max(len(r[c]) for r in cells) for c in range(len(header))]
    lines = [", ".join(v.rjust(w) for v, w in zip(row, widths)) for row in cells]
    return "\n".join(lines) + "\n"


def _cell(v) -> str:
    if isinstance(v, float):
        return repr(v)
    if v is None:
        return ""
    return str(v)


def atomic_write(path, text: str):
    """Write via a temporary file in the same directory, then rename."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
