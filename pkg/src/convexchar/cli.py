"""Command-line front end.

    convexchar COMMAND [INPUT] [--out REPORT.json] [--tol T] [--steps N]
                               [--qmax Q] [--tmax T] [--seed S] [--case LABEL]

Each command reads a TOML (or JSON) file, writes a JSON report and an
aligned CSV table next to it, and exits with 0 on success, 2 on a
mathematically meaningful negative finding, 1 on errors.
"""

from __future__ import annotations

import argparse
import sys
import warnings
from fractions import Fraction
from pathlib import Path

import numpy as np

from . import __version__
from . import iter_engine as ie
from . import morse_ledger as ml
from . import orbit_lab as ol
from .io import (
    ConfigError,
    atomic_write,
    check_keys,
    dumps,
    format_csv,
    load_config,
    parse_fraction,
    parse_profile,
    parse_surface,
)
from .sp_core import SymplecticMatrix, classify_blocks, elliptic_height, floquet_multipliers

EXIT_OK, EXIT_ERROR, EXIT_NEGATIVE = 0, 1, 2


class Outcome:
    def __init__(self, result, header=(), rows=(), negative=False):
        self.result = result
        self.header = list(header)
        self.rows = [list(r) for r in rows]
        self.negative = negative


def _flag(args, name, cfg, key, default):
    """Command-line flag wins over the config key, which wins over the default."""
    value = getattr(args, name)
    if value is not None:
        return value
    return cfg.get(key, default)


# -- commands ----------------------------------------------------------------

def cmd_matrix_analyze(cfg, args, resolved):
    check_keys(cfg, {"matrix", "i1", "tol"}, "config", required=("matrix",))
    tol = float(_flag(args, "tol", cfg, "tol", 1e-7))
    resolved["tol"] = tol
    try:
        m = SymplecticMatrix.from_array(cfg["matrix"], tol=max(1e-9, tol / 100))
    except ValueError as exc:
        raise ConfigError(f"config.matrix: {exc}") from None
    lam = floquet_multipliers(m)
    dec = classify_blocks(m, tol=tol)
    cls = ol.classify_monodromy(m, cfg.get("i1"))
    result = {
        "n": m.n,
        "sympl_residual": m.sympl_residual,
        "multipliers": [{"k": k, "re": float(z.real), "im": float(z.imag)} for k, z in enumerate(lam)],
        "elliptic_height": elliptic_height(m),
        "decomposition": dec.to_json(),
        "classification": cls.to_json(),
    }
    rows = [[k, float(z.real), float(z.imag)] for k, z in enumerate(lam)]
    return Outcome(result, ["k", "re", "im"], rows)


def _surface_orbits(surface, steps, tol):
    seeds = ol.ellipsoid_orbits(surface.radii, surface.alpha, steps=min(steps, 4000))
    if surface.kind == "ellipsoid":
        return seeds
    return [ol.refine_orbit(surface, o, tol=tol, steps=min(steps, 4000)) for o in seeds]


def cmd_orbit_find(cfg, args, resolved):
    check_keys(cfg, {"surface", "steps", "checkpoints", "samples", "tol", "q_max"}, "config", required=("surface",))
    steps = int(_flag(args, "steps", cfg, "steps", 10_000))
    tol = float(_flag(args, "tol", cfg, "tol", 1e-10))
    q_max = int(_flag(args, "qmax", cfg, "q_max", 10_000))
    samples = int(cfg.get("samples", 100))
    resolved.update(steps=steps, tol=tol, q_max=q_max, samples=samples)
    surface = parse_surface(cfg["surface"], rng=np.random.default_rng(args.seed))
    out, rows = [], []
    for k, orbit in enumerate(_surface_orbits(surface, steps, tol), start=1):
        rep = ol.analyze_orbit(orbit, steps, int(cfg.get("checkpoints", 500)), q_max)
        stride = max(1, (len(orbit.samples) - 1) // samples)
        pts = orbit.samples[::stride]
        ts = orbit.times[::stride]
        table = [[k, float(t)] + [float(v) for v in p] for t, p in zip(ts, pts)]
        rows += table
        out.append({
            "orbit": k,
            "closed_orbit": orbit.to_json(),
            "monodromy": rep.monodromy.to_json(),
            "index": rep.cz.to_json(),
            "classification": rep.classification.to_json(),
            "samples": table,
        })
    header = ["orbit", "t"] + [f"x{j + 1}" for j in range(2 * surface.n)]
    return Outcome({"surface": surface.to_json(), "orbits": out}, header, rows)


def cmd_iterate(cfg, args, resolved):
    p = parse_profile(cfg, "config", extra={"m_max"})
    m_max = int(cfg.get("m_max", 20))
    resolved["m_max"] = m_max
    rows = [ie.iterate(p, m) for m in range(1, m_max + 1)]
    result = {"profile": p.to_json(), "iterates": [r.to_json() for r in rows]}
    return Outcome(result, ["m", "i_maslov", "nu", "i_ekeland"], [[r.m, r.i_maslov, r.nu, r.i_ekeland] for r in rows])


def _mean_row(p):
    mi = ie.mean_index(p)
    return {
        "mean_index": mi.value,
        "exact": mi.exact,
        "rational": mi.rational,
        "K": ie.minimal_period_K(p),
        "above_two": mi.value > 2,
    }


def cmd_mean_index(cfg, args, resolved):
    p = parse_profile(cfg, "config")
    row = _mean_row(p)
    result = {"profile": p.to_json(), **row}
    exact = "" if row["exact"] is None else str(row["exact"])
    return Outcome(result, ["mean_index", "exact", "K"], [[row["mean_index"], exact, row["K"]]])


def _orbit_identity_row(t, where):
    if "chi" in t or "mean_index" in t:
        check_keys(t, {"chi", "mean_index"}, where, required=("chi", "mean_index"))
        return parse_fraction(t["chi"], f"{where}.chi"), parse_fraction(t["mean_index"], f"{where}.mean_index")
    p = parse_profile(t, where, extra={"degenerate"})
    rows = {}
    for k, d in enumerate(t.get("degenerate", [])):
        check_keys(d, {"m", "k"}, f"{where}.degenerate[{k}]", required=("m", "k"))
        rows[int(d["m"])] = tuple(d["k"])
    try:
        chi = ml.chi_hat_profile(p, rows)
    except (ml.MissingKTypesError, ml.InvalidKTypesError) as exc:
        raise ConfigError(f"{where}: {exc}") from None
    return chi, ie.mean_index(p)


def cmd_identity_check(cfg, args, resolved):
    check_keys(cfg, {"surface", "orbit", "steps", "tol"}, "config")
    if ("surface" in cfg) == ("orbit" in cfg):
        raise ConfigError("config: give exactly one of 'surface' or 'orbit'")
    if "surface" in cfg:
        steps = int(_flag(args, "steps", cfg, "steps", 10_000))
        tol = float(_flag(args, "tol", cfg, "tol", 1e-10))
        resolved.update(steps=steps, tol=tol)
        surface = parse_surface(cfg["surface"], rng=np.random.default_rng(args.seed))
        pairs = []
        for orbit in _surface_orbits(surface, steps, tol):
            rep = ol.analyze_orbit(orbit, steps)
            prof = rep.classification.profile
            if prof is None:
                raise ConfigError(f"orbit {orbit.label}: degenerate monodromy; supply its data as [[orbit]] tables")
            pairs.append((ml.chi_hat_profile(prof), ie.mean_index(prof)))
    else:
        pairs = [_orbit_identity_row(t, f"orbit[{k}]") for k, t in enumerate(cfg["orbit"])]
    rep = ml.identity_check(pairs)
    js = rep.to_json()
    for k, row in enumerate(js["rows"], start=1):
        row["orbit"] = k
    rows = [
        [k + 1, _num(r.chi), _num(r.mean), _num(r.ratio)] for k, r in enumerate(rep.rows)
    ]
    rows.append(["total", "", "", _num(rep.total)])
    rows.append(["residual", "", "", _num(rep.residual)])
    negative = float(rep.residual) > 1e-6
    return Outcome(js, ["orbit", "chi_hat", "mean_index", "ratio"], rows, negative)


def _num(v):
    return str(v) if isinstance(v, Fraction) else float(v)


def cmd_morse_check(cfg, args, resolved):
    check_keys(cfg, {"q_max", "orbit", "n"}, "config", required=("orbit",))
    q_max = int(_flag(args, "qmax", cfg, "q_max", 40))
    n = int(cfg.get("n", 3))
    resolved.update(q_max=q_max, n=n)
    data = []
    for k, t in enumerate(cfg["orbit"]):
        where = f"orbit[{k}]"
        p = parse_profile(t, where, extra={"k"})
        ct = None
        if "k" in t:
            rows = [tuple(r) for r in t["k"]]
            nus = tuple(ie.iterate(p, m).nu for m in range(1, len(rows) + 1))
            ct = ml.CriticalTypeVector(nus, tuple(rows))
            seq = ie.iterate_many(p, ct.K)
            bad = ml.validate_ktypes(ct, seq)
            if bad:
                raise ConfigError(f"{where}.k: " + "; ".join(str(v) for v in bad))
        data.append((p, ct))
    try:
        table = ml.morse_counts(data, q_max, n)
    except ml.MissingKTypesError as exc:
        raise ConfigError(str(exc)) from None
    rep = ml.morse_inequalities(table)
    rows = [[q, table.M[q], table.b[q]] for q in range(q_max + 1)]
    return Outcome({"table": table.to_json(), "report": rep.to_json()}, ["q", "M", "b"], rows, not rep.ok)


def cmd_jump_search(cfg, args, resolved):
    check_keys(cfg, {"profile", "t_max", "window"}, "config", required=("profile",))
    t_max = int(_flag(args, "tmax", cfg, "t_max", 100_000))
    window = int(cfg.get("window", 8))
    resolved.update(t_max=t_max, window=window)
    profiles = [parse_profile(t, f"profile[{k}]") for k, t in enumerate(cfg["profile"])]
    if not profiles:
        raise ConfigError("config.profile: at least one profile is required")
    try:
        cert = ie.common_jump_search(profiles, t_max, window)
    except ie.JumpSearchExhausted as exc:
        return Outcome({"found": False, "message": str(exc), "near_miss": exc.near_miss}, negative=True)
    verified = ie.verify_certificate(profiles, cert, window)
    rows = []
    for k, (p, m, checks) in enumerate(zip(profiles, cert.m_list, cert.checks), start=1):
        rows.append([k, cert.T, m] + [checks[c] for c in ie.JUMP_CHECKS])
    result = {"found": True, "certificate": cert.to_json(), "reverified": verified}
    return Outcome(result, ["profile", "T", "m"] + list(ie.JUMP_CHECKS), rows, not verified)


def cmd_scenario_check(cfg, args, resolved):
    check_keys(cfg, {"case", "grid_step", "window", "max_index"}, "config")
    label = args.case or cfg.get("case")
    if not label:
        raise ConfigError("scenario-check needs --case or a 'case' key")
    resolved.update(case=label, grid_step=float(cfg.get("grid_step", 1e-3)))
    try:
        rep = ml.scenario_check(
            label, resolved["grid_step"], int(cfg.get("max_index", 12)), int(cfg.get("window", 7))
        )
    except ml.UnknownScenarioError as exc:
        raise ConfigError(str(exc)) from None
    js = rep.to_json()
    rows = [
        ["chi1_forced", js["chi1_forced"]],
        ["forced_pair", " ".join(map(str, rep.forced_pair or ()))],
        ["grid_max", rep.grid_max],
        ["supremum", js["supremum"]],
        ["supremum_float", js["supremum_float"]],
        ["verdict", js["verdict"]],
    ]
    return Outcome(js, ["quantity", "value"], rows, rep.infeasible)


COMMANDS = {
    "matrix-analyze": cmd_matrix_analyze,
    "orbit-find": cmd_orbit_find,
    "iterate": cmd_iterate,
    "mean-index": cmd_mean_index,
    "identity-check": cmd_identity_check,
    "morse-check": cmd_morse_check,
    "jump-search": cmd_jump_search,
    "scenario-check": cmd_scenario_check,
}


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="convexchar", description=__doc__.split("\n\n")[0])
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    ap.add_argument("command", choices=sorted(COMMANDS))
    ap.add_argument("input", nargs="?", help="TOML or JSON config")
    ap.add_argument("--out", help="JSON report path; the CSV table goes next to it")
    ap.add_argument("--tol", type=float)
    ap.add_argument("--steps", type=int)
    ap.add_argument("--qmax", type=int)
    ap.add_argument("--tmax", type=int)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--case")
    return ap


def run(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.input:
            cfg = load_config(args.input)
        elif args.command == "scenario-check":
            cfg = {}
        else:
            raise ConfigError(f"{args.command} needs an input file")
        resolved = {"input": cfg, "seed": args.seed}
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", ie.NearIntegerWarning)
            outcome = COMMANDS[args.command](cfg, args, resolved)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR
    except (ArithmeticError, ValueError, RuntimeError) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_ERROR
    report = {
        "tool": "convexchar",
        "version": __version__,
        "command": args.command,
        "config": resolved,
        "status": "negative" if outcome.negative else "ok",
        "result": outcome.result,
    }
    text = dumps(report)
    if args.out:
        out = Path(args.out)
        atomic_write(out, text)
        if outcome.header:
            atomic_write(out.with_suffix(".csv"), format_csv(outcome.header, outcome.rows))
    else:
        sys.stdout.write(text)
    if outcome.negative and args.command == "scenario-check":
        print(f"{outcome.result['label']}: infeasible (supremum {outcome.result['supremum']} "
              f"= {outcome.result['supremum_float']:.6f} < 1/2)", file=sys.stderr)
    return EXIT_NEGATIVE if outcome.negative else EXIT_OK


def main():
    sys.exit(run())


if __name__ == "__main__":
    main()
