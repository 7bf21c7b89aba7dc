"""Batch front end: build caches, verify explicit formulas, tabulate derivative sums.

Options come from a flat JSON config file (--config) overlaid by command-line
flags; the resolved values are embedded in every report.  Exit codes: 0 pass,
1 residual over budget, 2 usage error, 3 numeric failure.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
import time
from dataclasses import replace
from pathlib import Path

import numpy as np

EXIT_OK, EXIT_BUDGET, EXIT_USAGE, EXIT_NUMERIC = 0, 1, 2, 3

DEFAULTS = {
    "cache_dir": "caches",
    "out": "-",
    "format": "json",
    "T": 40.0,
    "x": [100.5],
    "sigma_step": 0.25,
    "t_step": 0.05,
    "target_error": None,
    "em_order": None,
    "formula": "auto",
    "limit": 100_000,
    "fixed_height": False,
    "sigma": [-1.0, 2.0, 0.5],
    "t": [0.0, 30.0, 1.0],
    "draws": 1000,
    "seed": 0,
}


class UsageError(ValueError):
    pass


def _diag(kind: str, message: str) -> None:
    print(json.dumps({"error": kind, "message": message}, sort_keys=True), file=sys.stderr)


# -- option resolution -------------------------------------------------------------------

def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="flat JSON file of option values (flags win)")
    p.add_argument("--cache-dir", dest="cache_dir", help="cache root (default: caches)")
    p.add_argument("--out", help="output file, '-' for stdout")
    p.add_argument("--format", choices=["json", "csv"])
    p.add_argument("--sigma-step", dest="sigma_step", type=float, help="σ grid step for good ordinates")
    p.add_argument("--t-step", dest="t_step", type=float, help="t grid step for good ordinates")
    p.add_argument("--target-error", dest="target_error", type=float, help="L-evaluation relative error target")
    p.add_argument("--em-order", dest="em_order", type=int, help="Euler-Maclaurin order")


def _subject(p: argparse.ArgumentParser) -> None:
    p.add_argument("--chi", help="character label, e.g. 4.1")
    p.add_argument("--q", type=int, help="modulus")
    p.add_argument("--a", type=int, help="residue class for progressions")
    p.add_argument("--field", help="Q, Q(i), quad:D, cyc:m or m:label+label")


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="explicit-mobius", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("sieve", help="build Möbius and field coefficient caches")
    _common(s)
    s.add_argument("--limit", type=int, help="sieve limit N")
    s.add_argument("--field", help="also build the coefficients of this field")

    z = sub.add_parser("zeros", help="scan, verify and store zero caches")
    _common(z)
    _subject(z)
    z.add_argument("--T", type=float, help="height")

    v = sub.add_parser("verify", help="run explicit-formula sweeps against the sieve")
    _common(v)
    _subject(v)
    v.add_argument("--formula", choices=["auto", "theorem1", "theorem2", "corollary1", "theorem3"])
    v.add_argument("--x", type=float, nargs="+", help="x values")
    v.add_argument("--T", type=float, help="truncation height")

    d = sub.add_parser("derivsum", help="partial sums of 1/L'(ρ) over zeros")
    _common(d)
    _subject(d)
    d.add_argument("--T", type=float, help="height")
    d.add_argument("--fixed-height", dest="fixed_height", action="store_true", default=None,
                   help="sum up to T itself instead of the good ordinate")

    f = sub.add_parser("fproduct", help="finite Euler product tables")
    _common(f)
    _subject(f)
    f.add_argument("--T", type=float, help="lattice height")
    f.add_argument("--draws", type=int, help="random (t, h) draws for the zero-count bound")
    f.add_argument("--seed", type=int, help="RNG seed")

    g = sub.add_parser("lgrid", help="L(s, χ) on a rectangular grid as CSV")
    _common(g)
    _subject(g)
    g.add_argument("--sigma", type=float, nargs=3, metavar=("LO", "HI", "STEP"))
    g.add_argument("--t", type=float, nargs=3, metavar=("LO", "HI", "STEP"))
    return p


def resolve(args: argparse.Namespace) -> dict:
    cfg = {}
    if getattr(args, "config", None):
        try:
            cfg = json.loads(Path(args.config).read_text())
        except (OSError, json.JSONDecodeError) as e:
            raise UsageError(f"cannot read config {args.config}: {e}") from e
        if not isinstance(cfg, dict):
            raise UsageError("config must be a flat JSON object")
    out = {}
    for k, v in vars(args).items():
        if k == "config":
            continue
        if v is None:
            v = cfg.get(k, DEFAULTS.get(k))
        out[k] = v
    for k, v in cfg.items():
        out.setdefault(k, v)
    if isinstance(out.get("x"), (int, float)):
        out["x"] = [out["x"]]
    return out


def _policy(cfg):
    from .lfunc import DEFAULT_POLICY

    pol = DEFAULT_POLICY
    if cfg.get("target_error") is not None:
        pol = replace(pol, target_relative_error=float(cfg["target_error"]))
    if cfg.get("em_order") is not None:
        pol = replace(pol, euler_maclaurin_order=int(cfg["em_order"]))
    return pol


def _workspace(cfg):
    from .explicit import Workspace

    if cfg["sigma_step"] <= 0 or cfg["t_step"] <= 0:
        raise UsageError("grid steps must be positive")
    return Workspace(cfg["cache_dir"], _policy(cfg), cfg["sigma_step"], cfg["t_step"])


def parse_field(spec: str):
    from .field import build_field, cyclotomic, gaussian, quadratic_field, rationals

    try:
        if spec == "Q":
            return rationals()
        if spec == "Q(i)":
            return gaussian()
        kind, _, rest = spec.partition(":")
        if kind == "quad":
            return quadratic_field(int(rest))
        if kind == "cyc":
            return cyclotomic(int(rest))
        if kind.isdigit() and rest:
            m = int(kind)
            return build_field(m, [g if "." in g else f"{m}.{g}" for g in rest.split("+")])
    except (ValueError, KeyError) as e:
        raise UsageError(f"bad field spec {spec!r}: {e}") from e
    raise UsageError(f"bad field spec {spec!r}")


def _character(cfg):
    from .characters import from_label

    if not cfg.get("chi"):
        raise UsageError("--chi is required")
    try:
        return from_label(cfg["chi"])
    except (ValueError, KeyError) as e:
        raise UsageError(f"bad character label {cfg['chi']!r}: {e}") from e


def _height(cfg) -> float:
    T = float(cfg["T"])
    if not T > 0:
        raise UsageError("T must be positive")
    return T


# -- output --------------------------------------------------------------------------------

def _emit(cfg, text: str) -> None:
    if cfg["out"] in (None, "-"):
        sys.stdout.write(text)
    else:
        path = Path(cfg["out"])
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(text)


def _provenance(cfg) -> dict:
    from . import __version__

    return {"config": cfg, "version": __version__, "generated_at": time.strftime("%Y-%m-%dT%H:%M:%SZ", time.gmtime())}


# -- commands ----------------------------------------------------------------------------------

def cmd_sieve(cfg) -> int:
    from .sieve import mertens, write_coefficients_csv
    from .field import serialize

    N = int(cfg["limit"])
    if N < 1:
        raise UsageError("limit must be positive")
    ws = _workspace(cfg)
    table = ws.mobius(N)
    info = {"limit": table.limit, "mertens": mertens(N, table)}
    if cfg.get("field"):
        K = parse_field(cfg["field"])
        coeffs = ws.field(K, N)
        d = Path(cfg["cache_dir"]) / "fields" / _safe(K.label)
        d.mkdir(parents=True, exist_ok=True)
        (d / "field.txt").write_text(serialize(K))
        with open(d / "coefficients.csv", "w", newline="") as fh:
            write_coefficients_csv(coeffs, fh)
        info["field"] = K.label
        info["field_mertens"] = int(np.sum(coeffs.mobius_coeffs[1:N + 1]))
    _emit(cfg, json.dumps({"schema": "efr-1", "sieve": info, "provenance": _provenance(cfg)},
                          indent=2, sort_keys=True) + "\n")
    return EXIT_OK


def _safe(label: str) -> str:
    return "".join(ch if ch.isalnum() or ch in "._-" else "_" for ch in label)


def _subject_characters(cfg):
    from .characters import build_group, primitive_inducer

    if cfg.get("field"):
        K = parse_field(cfg["field"])
        return list(dict.fromkeys(K.primitive_characters))
    if cfg.get("q"):
        if cfg["q"] < 1:
            raise UsageError("q must be positive")
        return list(dict.fromkeys(primitive_inducer(c) for c in build_group(cfg["q"])))
    c = primitive_inducer(_character(cfg))
    return list(dict.fromkeys([c, c.conj()]))


def cmd_zeros(cfg) -> int:
    from .zeros import write_csv

    T = _height(cfg)
    ws = _workspace(cfg)
    rows = []
    buf = io.StringIO()
    for c in _subject_characters(cfg):
        cache = ws.bank.get(c, T)
        rows.append({"label": c.label, "T": T, "zeros": int(len(cache.below(T))),
                     "count_verified": cache.count_verified, "warnings": list(cache.warnings)})
        write_csv(cache, buf)
    if cfg["format"] == "csv":
        _emit(cfg, buf.getvalue())
    else:
        _emit(cfg, json.dumps({"schema": "efr-1", "zeros": rows, "provenance": _provenance(cfg)},
                              indent=2, sort_keys=True) + "\n")
    return EXIT_OK if all(r["count_verified"] for r in rows) else EXIT_NUMERIC


def _pick_formula(cfg) -> str:
    f = cfg["formula"]
    if f != "auto":
        return f
    if cfg.get("field"):
        return "theorem3"
    if cfg.get("q") and cfg.get("a") is not None:
        return "corollary1"
    return "theorem1" if _character(cfg).is_primitive else "theorem2"


def cmd_verify(cfg) -> int:
    from . import explicit as ex

    T = _height(cfg)
    xs = [float(x) for x in cfg["x"]]
    if not xs or any(not x > 0 for x in xs):
        raise UsageError("x values must be positive")
    formula = _pick_formula(cfg)
    if formula == "corollary1":
        q, a = cfg.get("q"), cfg.get("a")
        if not q or a is None:
            raise UsageError("corollary1 needs --q and --a")
        if q < 2 or math.gcd(a, q) != 1:
            raise UsageError(f"need q ≥ 2 and gcd(a, q) = 1, got q={q}, a={a}")
    elif formula == "theorem3":
        if not cfg.get("field"):
            raise UsageError("theorem3 needs --field")
        K = parse_field(cfg["field"])
    else:
        chi = _character(cfg)
        if formula == "theorem1" and not chi.is_primitive:
            raise UsageError(f"{chi.label} is not primitive")
        if formula == "theorem2":
            from .finite_euler import build_product

            if chi.is_primitive or build_product(chi).is_trivial:
                raise UsageError(f"{chi.label}: finite Euler product is identically 1")
    ws = _workspace(cfg)
    reports = []
    for x in xs:
        if formula == "theorem1":
            r = ex.assemble_theorem1(x, chi, T, ws)
        elif formula == "theorem2":
            r = ex.assemble_theorem2(x, chi, T, ws)
        elif formula == "corollary1":
            r = ex.assemble_corollary1(x, cfg["q"], cfg["a"], T, ws)
        else:
            r = ex.assemble_theorem3(x, K, T, ws)
        r.provenance["config"] = cfg
        reports.append(r)
    if cfg["format"] == "csv":
        buf = io.StringIO()
        ex.write_summary_csv(reports, buf)
        _emit(cfg, buf.getvalue())
    else:
        _emit(cfg, ex.reports_to_json(reports, {"provenance": _provenance(cfg)}) + "\n")
    bad = [r for r in reports if not r.within_budget]
    for r in bad:
        _diag("budget", f"{r.formula} {r.subject} x={r.x}: |residual|={abs(r.residual):.3g} > "
                        f"{ex.BUDGET_FACTOR:g} x budget {r.budget:.3g}; inputs={json.dumps(r.error_budget_inputs, sort_keys=True)}")
    return EXIT_BUDGET if bad else EXIT_OK


def cmd_derivsum(cfg) -> int:
    from . import explicit as ex

    T = _height(cfg)
    ws = _workspace(cfg)
    good = not cfg["fixed_height"]
    if cfg.get("field"):
        rep = ex.derivative_sum_field(parse_field(cfg["field"]), T, ws, good)
    else:
        chi = _character(cfg)
        if not chi.is_primitive:
            raise UsageError(f"{chi.label} is not primitive")
        rep = ex.derivative_sum(chi, T, ws, good)
    buf = io.StringIO()
    w = csv.writer(buf)
    w.writerow(["gamma", "partial_re", "partial_im", "main_term"])
    for g, s in rep.trajectory:
        w.writerow([repr(g), repr(s.real), repr(s.imag), repr(g / (2 * math.pi))])
    if cfg["format"] == "csv":
        _emit(cfg, buf.getvalue())
    else:
        doc = {"schema": "efr-1", "subject": rep.subject, "T": rep.T_requested, "T_nu": rep.T_nu,
               "sum": [rep.sum.real, rep.sum.imag], "abs_sum": rep.abs_sum, "main_term": rep.main_term,
               "difference": [rep.difference.real, rep.difference.imag], "zeros": len(rep.trajectory),
               "provenance": _provenance(cfg)}
        _emit(cfg, json.dumps(doc, indent=2, sort_keys=True) + "\n")
    return EXIT_OK


def cmd_fproduct(cfg) -> int:
    from .finite_euler import build_product, count_zeros, zero_lattice

    chi = _character(cfg)
    if chi.modulus < 2:
        raise UsageError("modulus must be at least 2")
    T = _height(cfg)
    F = build_product(chi)
    lat = zero_lattice(F, T, include_zero=True)
    resid = max((abs(F(1j * z.eta)) for z in lat), default=0.0)
    rng = np.random.default_rng(int(cfg["seed"]))
    fails = 0
    for t, h in zip(rng.uniform(-T, T, cfg["draws"]), rng.uniform(0.01, 5.0, cfg["draws"])):
        fails += not count_zeros(F, float(t), float(h)).ok
    doc = {
        "schema": "efr-1",
        "character": chi.label,
        "inducer": F.chi_star.label,
        "active_primes": list(F.active_primes),
        "r": F.r,
        "b": [F.b_constant.real, F.b_constant.imag],
        "exp_a": [F.exp_a().real, F.exp_a().imag],
        "lattice": [{"eta": z.eta, "primes": list(z.primes), "multiplicity": z.multiplicity} for z in lat],
        "max_abs_F_on_lattice": resid,
        "zero_count_draws": int(cfg["draws"]),
        "zero_count_violations": fails,
        "provenance": _provenance(cfg),
    }
    if cfg["format"] == "csv":
        from .finite_euler import write_lattice_csv

        buf = io.StringIO()
        write_lattice_csv(F, T, buf)
        _emit(cfg, buf.getvalue())
    else:
        _emit(cfg, json.dumps(doc, indent=2, sort_keys=True) + "\n")
    return EXIT_OK if fails == 0 else EXIT_BUDGET


def cmd_lgrid(cfg) -> int:
    from .lfunc import value_grid

    chi = _character(cfg)
    (s0, s1, ds), (t0, t1, dt) = cfg["sigma"], cfg["t"]
    if ds <= 0 or dt <= 0 or s1 < s0 or t1 < t0:
        raise UsageError("grid ranges need LO ≤ HI and STEP > 0")
    sig = s0 + ds * np.arange(int(math.floor((s1 - s0) / ds + 1e-9)) + 1)
    ts = t0 + dt * np.arange(int(math.floor((t1 - t0) / dt + 1e-9)) + 1)
    rows = value_grid(chi, sig, ts, _policy(cfg))
    buf = io.StringIO()
    w = csv.writer(buf)
    w.writerow(["sigma", "t", "re", "im", "error_estimate"])
    for row in rows:
        w.writerow([repr(float(v)) for v in row])
    _emit(cfg, buf.getvalue())
    return EXIT_OK


COMMANDS = {
    "sieve": cmd_sieve,
    "zeros": cmd_zeros,
    "verify": cmd_verify,
    "derivsum": cmd_derivsum,
    "fproduct": cmd_fproduct,
    "lgrid": cmd_lgrid,
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return EXIT_USAGE if e.code else EXIT_OK
    try:
        cfg = resolve(args)
        return COMMANDS[cfg["command"]](cfg)
    except UsageError as e:
        _diag("usage", str(e))
        return EXIT_USAGE
    except (ArithmeticError, RuntimeError, MemoryError) as e:
        _diag("numeric", f"{type(e).__name__}: {e}")
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
