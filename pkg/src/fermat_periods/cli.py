"""Command line front end: periods, mirror, split, deligne, lfunc, verify-all.

Reports are JSON documents with a schema tag. Everything that varies between
identical runs (timestamps, timings, cache hits) goes to a sidecar
``<output>.meta.json`` instead, so the report itself is byte-identical.
"""

from __future__ import annotations

import argparse
import json
import os
import re
import sys
import time
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Sequence

from . import checks
from . import reference as ref
from .hodge import SUPPORTED_N, PeriodVectors, period_vectors
from .lfunc import FormError, load_form
from .numerics import DEFAULT_DIGITS, PrecisionContext
from .pf_transport import (DEFAULT_ROUTES, JetPoint, PathError, TransportPath, cache_key, default_branch,
                           fermat_jets, load_jets, save_jets)
from .recognize import InsufficientPrecision
from .splitter import (Charge, NoSplitFound, assemble_split, attempt_deeper_split, plane_contains, report_to_json,
                       tate_twist, verify_charge)

SCHEMA = "fermat-periods/report-1"
CACHE_ENV = "FERMAT_PERIODS_CACHE"
# half the default precision; below this the charge searches lose their margin
MIN_DIGITS = {n: d // 2 for n, d in DEFAULT_DIGITS.items()}
COMMANDS = ("periods", "mirror", "split", "deligne", "lfunc", "verify-all")

EXIT_OK, EXIT_FAIL, EXIT_CONFIG = 0, 1, 2


class ConfigError(ValueError):
    """Bad flags or inputs; maps to exit code 2."""


@dataclass(frozen=True)
class RunConfig:
    command: str
    n: tuple[int, ...] = ()
    digits: int | None = None
    psi0: complex = -3
    path: str | None = None
    branch: int | None = None
    field: tuple[int, ...] | None = None
    max_height: int | None = None
    coeffs: str | None = None
    fetch: bool = False
    l_scale: Fraction = Fraction(1)
    cache_dir: Path | None = None
    output: Path | None = None
    fmt: str = "json"
    verify: tuple[str, ...] = ()
    deeper: bool = False

    def context(self, n: int) -> PrecisionContext:
        return PrecisionContext.for_n(n, self.digits)

    def route(self, n: int) -> tuple[TransportPath, int]:
        preset = self.path or DEFAULT_ROUTES[n][0]
        branch = default_branch(n) if self.branch is None else self.branch
        return TransportPath.parse(n, preset, self.psi0), branch

    def is_default_route(self, n: int) -> bool:
        return (self.psi0 == -3 and self.path in (None, DEFAULT_ROUTES[n][0])
                and self.branch in (None, DEFAULT_ROUTES[n][1]))

    def describe(self) -> dict:
        """The inputs that determine the report."""
        return {
            "command": self.command,
            "n": list(self.n),
            "digits": self.digits,
            "psi0": [self.psi0.real, self.psi0.imag],
            "path": self.path,
            "branch": self.branch,
            "field": None if self.field is None else list(self.field),
            "max_height": self.max_height,
            "coeffs": self.coeffs,
            "l_scale": str(self.l_scale),
            "verify": list(self.verify),
            "deeper": self.deeper,
        }


@dataclass
class Run:
    """Mutable state of one invocation: metadata only, never part of the report."""

    config: RunConfig
    cache_hits: list = field(default_factory=list)
    timings: dict = field(default_factory=dict)


# ---------------------------------------------------------------- argument parsing


def _parse_complex(text: str) -> complex:
    try:
        return complex(text.replace(" ", "").replace("i", "j"))
    except ValueError as exc:
        raise ConfigError(f"cannot read {text!r} as a complex number") from exc


def _parse_fields(text: str) -> tuple[int, ...] | None:
    if text == "auto":
        return None
    try:
        out = tuple(int(t) for t in text.split(",") if t.strip())
    except ValueError as exc:
        raise ConfigError(f"--field takes 'auto' or comma separated integers, got {text!r}") from exc
    if any(d < 1 for d in out):
        raise ConfigError("field parameters must be positive squarefree integers")
    return out


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="fermat-periods",
                                     description="Periods, Hodge splits and Deligne periods at the Fermat point.")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--n", type=int, action="append", help="dimension; repeatable for verify-all")
        p.add_argument("--digits", type=int)
        p.add_argument("--psi0", default="-3")
        p.add_argument("--path", help="straight, upper, lower or a comma separated waypoint list")
        p.add_argument("--branch", type=int)
        p.add_argument("--field", default="auto", help="'auto' or comma separated d values to try, in order")
        p.add_argument("--max-height", type=float)
        p.add_argument("--coeffs", help="coefficient file for the L-function")
        p.add_argument("--fetch", action="store_true", help="allow downloading coefficients")
        p.add_argument("--l-scale", default="1")
        p.add_argument("--cache-dir")
        p.add_argument("--output")
        p.add_argument("--format", choices=("json", "text"), default="json")
        if name == "split":
            p.add_argument("--verify", action="append", default=[],
                           help="LEVEL:c0,c1,... charge to verify, e.g. '1:5/2-1/2*sqrt(5),-8,0,1'")
            p.add_argument("--deeper", action="store_true", help="also search levels past 3 (n = 8, 10)")
    return parser


def config_from_args(argv: Sequence[str] | None = None) -> RunConfig:
    args = build_parser().parse_args(argv)
    ns = tuple(args.n or ())
    if args.command == "verify-all" and not ns:
        ns = SUPPORTED_N
    if args.command == "lfunc":
        ns = ns or (4,)
    if not ns:
        raise ConfigError(f"{args.command} needs --n")
    for n in ns:
        if n not in SUPPORTED_N:
            raise ConfigError(f"n={n} is not supported; choose from {', '.join(map(str, SUPPORTED_N))}")
        if args.digits is not None and args.digits < MIN_DIGITS[n]:
            raise ConfigError(f"--digits {args.digits} is below the minimum {MIN_DIGITS[n]} for n={n}")
    if args.command == "lfunc" and ns != (4,):
        raise ConfigError("the L-function check concerns n = 4 only")
    try:
        l_scale = Fraction(args.l_scale)
    except ValueError as exc:
        raise ConfigError(f"--l-scale must be rational, got {args.l_scale!r}") from exc
    if l_scale == 0:
        raise ConfigError("--l-scale must be nonzero")
    cache = args.cache_dir or os.environ.get(CACHE_ENV)
    height = None
    if args.max_height is not None:
        if args.max_height < 2:
            raise ConfigError("--max-height must be at least 2")
        height = int(args.max_height)
    return RunConfig(
        command=args.command, n=ns, digits=args.digits, psi0=_parse_complex(args.psi0), path=args.path,
        branch=args.branch, field=_parse_fields(args.field), max_height=height, coeffs=args.coeffs,
        fetch=args.fetch, l_scale=l_scale, cache_dir=Path(cache) if cache else None,
        output=Path(args.output) if args.output else None, fmt=args.format,
        verify=tuple(getattr(args, "verify", ())), deeper=getattr(args, "deeper", False))


# ---------------------------------------------------------------- jets with cache


def _freeze(jp: JetPoint, ctx: PrecisionContext) -> JetPoint:
    """Round through the cache's decimal text so cached and fresh runs agree bit for bit."""
    mp = ctx.mp
    k = ctx.decimal_digits

    def rt(v):
        v = mp.mpc(v)
        return mp.mpc(mp.mpf(mp.nstr(v.real, k)), mp.mpf(mp.nstr(v.imag, k)))

    return JetPoint(mp.mpf(0), tuple(tuple(rt(v) for v in row) for row in jp.jets))


def obtain_jets(run: Run, n: int, ctx: PrecisionContext) -> JetPoint:
    cfg = run.config
    path, branch = cfg.route(n)
    depth = n + 5
    key = cache_key(n, ctx.decimal_digits, path, branch, depth)
    target = cfg.cache_dir / f"{key}.txt" if cfg.cache_dir else None
    if target is not None and target.exists():
        jp, _ = load_jets(target, ctx)
        run.cache_hits.append(key)
        return jp
    start = time.perf_counter()
    jp = fermat_jets(n, ctx, path=path, log_branch=branch, depth=depth)
    run.timings[f"transport_n{n}"] = round(time.perf_counter() - start, 3)
    if target is not None:
        target.parent.mkdir(parents=True, exist_ok=True)
        header = {"n": n, "digits": ctx.decimal_digits, "depth": depth, "branch": branch,
                  "path": [[z.real, z.imag] for z in path.waypoints]}
        save_jets(jp, target, header, ctx)
    return _freeze(jp, ctx)


def obtain_periods(run: Run, n: int, ctx: PrecisionContext) -> PeriodVectors:
    return period_vectors(n, obtain_jets(run, n, ctx), ctx, scale=run.config.l_scale)


# ---------------------------------------------------------------- formatting helpers


def _c(x, ctx: PrecisionContext, digits: int | None = None) -> list[str]:
    mp = ctx.mp
    k = digits or ctx.tol_exponent
    x = mp.mpc(x)
    return [mp.nstr(x.real, k), mp.nstr(x.imag, k)]


def _summary(checks_: list[dict]) -> bool:
    return all(c["passed"] for c in checks_)


# ---------------------------------------------------------------- commands


def cmd_periods(run: Run) -> dict:
    n = run.config.n[0]
    ctx = run.config.context(n)
    jp = obtain_jets(run, n, ctx)
    pv = period_vectors(n, jp, ctx, scale=run.config.l_scale)
    path, branch = run.config.route(n)
    result = {
        "n": n,
        "digits": ctx.decimal_digits,
        "path": path.label,
        "branch": branch,
        "jets": {str(j): {str(k): _c(jp.value(j, k), ctx) for k in range(3)} for j in range(n + 1)},
        "rational_periods": {str(k): [_c(v, ctx) for v in pv.Pi[k]] for k in range(3)},
    }
    found = [checks.check_jets(n, jp, ctx).to_json()] if run.config.is_default_route(n) else []
    return {"result": result, "checks": found}


def cmd_mirror(run: Run) -> dict:
    n = run.config.n[0]
    ctx = run.config.context(n)
    jp = obtain_jets(run, n, ctx)
    pv = period_vectors(n, jp, ctx)
    rec = checks.recognize_mirror(pv.t0, ctx)
    result = {
        "n": n,
        "t": _c(pv.t0, ctx),
        "real_part_gap": ctx.mp.nstr(rec.real_part_gap, 5),
        "imaginary_part_minpoly": None if rec.minpoly is None else list(rec.minpoly.coefficients),
        "residual": None if rec.minpoly is None else ctx.mp.nstr(rec.minpoly.residual, 5),
    }
    found = [checks.check_mirror(n, pv, ctx).to_json()] if run.config.is_default_route(n) else []
    return {"result": result, "checks": found}


def _parse_charge(text: str, d: int) -> tuple[int, Charge]:
    level, sep, body = text.partition(":")
    if not sep:
        raise ConfigError(f"--verify expects LEVEL:coords, got {text!r}")
    try:
        return int(level), Charge.from_strings([t for t in body.split(",")], d)
    except ValueError as exc:
        raise ConfigError(f"cannot read charge {text!r}: {exc}") from exc


def _split(run: Run, n: int, ctx: PrecisionContext, pv: PeriodVectors):
    cfg = run.config
    return assemble_split(n, pv, ctx, max_height=cfg.max_height, candidates=cfg.field)


def cmd_split(run: Run) -> dict:
    cfg = run.config
    n = cfg.n[0]
    ctx = cfg.context(n)
    pv = obtain_periods(run, n, ctx)
    report = _split(run, n, ctx, pv)
    result = report_to_json(report, ctx, digits=30)
    found = [{"name": f"level_{j}", "passed": bool(r["passed"]), "detail": {}}
             for j, r in sorted(report.residuals.items())]
    if not report.summands:
        found.append({"name": "split_found", "passed": False,
                      "detail": {"reason": "no charge plane in any candidate field",
                                 "fields": [] if cfg.field is None else list(cfg.field)}})
    d = report.d if report.summands else max(cfg.field or (1,))
    verified = []
    for text in cfg.verify:
        j, rho = _parse_charge(text, max(d, _field_of(text)))
        chk = verify_charge(rho, pv, j, ctx)
        verified.append({"charge": rho.to_strings(), "level": j, "passed": chk.passed,
                         "pairings": [_c(p, ctx, 20) for p in chk.pairings],
                         "projection": None if chk.projection_residual is None
                         else ctx.mp.nstr(chk.projection_residual, 5)})
        found.append({"name": f"verify_{len(verified)}", "passed": chk.passed, "detail": {}})
    result["verified"] = verified
    if cfg.deeper and n in (8, 10):
        result["deeper"] = attempt_deeper_split(n, pv, ctx)
    return {"result": result, "checks": found}


def _field_of(text: str) -> int:
    m = re.search(r"sqrt\((\d+)\)", text)
    return int(m.group(1)) if m else 1


def cmd_deligne(run: Run) -> dict:
    cfg = run.config
    n = cfg.n[0]
    ctx = cfg.context(n)
    pv = obtain_periods(run, n, ctx)
    report = _split(run, n, ctx, pv)
    mp = ctx.mp
    rows, found = [], []
    for s in report.summands:
        row = {"level": s.level, "hodge_type": list(s.hodge_type), "d": s.d,
               "basis": [r.to_strings() for r in s.basis],
               "c_plus": None if s.c_plus is None else _c(s.c_plus, ctx, 40),
               "c_minus": None if s.c_minus is None else _c(s.c_minus, ctx, 40)}
        if s.quotient is not None:
            row["quotient"] = _c(s.quotient, ctx, 40)
            row["quotient_minpoly"] = None if s.recognized_quotient is None else list(s.recognized_quotient.coefficients)
            pure = mp.fabs(mp.re(s.quotient)) < ctx.tolerance * mp.fabs(s.quotient)
            found.append({"name": f"quotient_pure_{s.level}", "passed": bool(pure), "detail": {}})
            found.append({"name": f"quotient_recognized_{s.level}",
                          "passed": s.recognized_quotient is not None, "detail": {}})
        rows.append(row)
    result = {"n": n, "l_scale": str(cfg.l_scale), "summands": rows,
              "unresolved": report_to_json(report, ctx)["unresolved"]}
    if cfg.l_scale == 1 and cfg.is_default_route(n):
        found.append(checks.check_periods(n, pv, ctx).to_json())
    return {"result": result, "checks": found}


def _load_form(run: Run, ctx: PrecisionContext):
    cfg = run.config
    return load_form(cfg.coeffs, ctx, fetch=cfg.fetch)


def cmd_lfunc(run: Run) -> dict:
    cfg = run.config
    ctx = cfg.context(4)
    form = _load_form(run, ctx)
    pv = obtain_periods(run, 4, ctx)
    summand = checks.reference_summands(4, pv, ctx)[0]
    chk = checks.check_lfunction(summand, form, ctx)
    result = {"label": form.label, "coefficients": form.count, "l_scale": str(cfg.l_scale),
              "twisted_periods": {str(m): _c(tate_twist(summand, m, ctx), ctx, 40) for m in (1, 2, 3)},
              **chk.detail}
    if cfg.l_scale != 1:
        # the ratios carry l_4; only the scale-free steps are compared
        steps = chk.detail["steps"]
        ok = all(chk.detail["matches"].values()) and steps == ["132", "-72"]
        return {"result": result, "checks": [{"name": "l_function_steps", "passed": ok, "detail": {}}]}
    return {"result": result, "checks": [chk.to_json()]}


CRITERIA = {
    "series_n3_exact": 1, "jets_match_tables": 2, "ode_coefficients": 3, "monodromy": 4,
    "mirror_closed_form": 5, "charge_planes": 6, "split_assembled": 6, "deligne_periods": 7,
    "hodge_tate": 8, "l_function": 9,
}


def _assembled_check(n: int, report, ctx: PrecisionContext) -> dict:
    charges = ref.reference_charges(n)
    ok = True
    levels = {}
    for s in report.summands:
        idx = ref.SUMMAND_CHARGES[n].get(s.level, ())
        if len(idx) == 2:
            inside = all(plane_contains(s.basis, charges[k]) for k in idx)
        else:
            inside = len(idx) == 1 and plane_contains(s.basis, charges[idx[0]])
        levels[str(s.level)] = inside
        ok = ok and inside
    ok = ok and len(report.summands) == len(ref.SUMMAND_CHARGES[n])
    unresolved = report_to_json(report, ctx)["unresolved"]
    return {"name": "split_assembled", "passed": ok, "detail": {"levels": levels, "unresolved": unresolved}}


def cmd_verify_all(run: Run) -> dict:
    cfg = run.config
    found = [dict(checks.check_series().to_json(), n=3)]
    per_n = {}
    for n in cfg.n:
        ctx = cfg.context(n)
        start = time.perf_counter()
        jp = obtain_jets(run, n, ctx)
        pv = period_vectors(n, jp, ctx)
        items = [checks.check_jets(n, jp, ctx), checks.check_odes(n),
                 checks.check_monodromy(n, ctx, points=10 if n == 3 else 0), checks.check_mirror(n, pv, ctx),
                 checks.check_splits(n, pv, ctx), checks.check_periods(n, pv, ctx)]
        rows = [c.to_json() for c in items]
        rows.insert(5, _assembled_check(n, assemble_split(n, pv, ctx), ctx))
        if n == 4:
            rows.append(checks.check_hodge_tate(pv, ctx).to_json())
            form = _load_form(run, ctx)
            rows.append(checks.check_lfunction(checks.reference_summands(4, pv, ctx)[0], form, ctx).to_json())
        for r in rows:
            r["n"] = n
        found += rows
        per_n[str(n)] = _summary(rows)
        run.timings[f"verify_n{n}"] = round(time.perf_counter() - start, 3)
    for r in found:
        r["criterion"] = CRITERIA[r["name"]]
    summary = [f"n={r['n']} criterion {r['criterion']} {r['name']}: {'PASS' if r['passed'] else 'FAIL'}"
               for r in found]
    return {"result": {"per_n": per_n, "summary": summary,
                       "note": "property suites (criterion 10) run in the test suite"}, "checks": found}


HANDLERS = {"periods": cmd_periods, "mirror": cmd_mirror, "split": cmd_split, "deligne": cmd_deligne,
            "lfunc": cmd_lfunc, "verify-all": cmd_verify_all}


# ---------------------------------------------------------------- output


def render_text(report: dict) -> str:
    lines = [f"# {report['command']} ({report['schema']})"]
    if report["command"] == "verify-all":
        lines += report["result"]["summary"]
    else:
        lines += _flatten(report["result"])
        lines += [f"check {c['name']}: {'PASS' if c['passed'] else 'FAIL'}" for c in report["checks"]]
    lines.append("status: " + ("PASS" if report["passed"] else "FAIL"))
    return "\n".join(lines) + "\n"


def _flatten(obj, prefix: str = "") -> list[str]:
    if isinstance(obj, dict):
        out = []
        for k in obj:
            out += _flatten(obj[k], f"{prefix}.{k}" if prefix else str(k))
        return out
    if isinstance(obj, list) and obj and all(isinstance(x, (dict, list)) for x in obj):
        out = []
        for i, x in enumerate(obj):
            out += _flatten(x, f"{prefix}[{i}]")
        return out
    return [f"{prefix}: {json.dumps(obj)}"]


def run_command(cfg: RunConfig) -> tuple[dict, Run]:
    run = Run(cfg)
    body = HANDLERS[cfg.command](run)
    report = {"schema": SCHEMA, "command": cfg.command, "config": cfg.describe(),
              "result": body["result"], "checks": body["checks"], "passed": _summary(body["checks"])}
    return report, run


def _write(cfg: RunConfig, text: str, meta: dict) -> None:
    if cfg.output is None:
        sys.stdout.write(text)
        return
    cfg.output.parent.mkdir(parents=True, exist_ok=True)
    cfg.output.write_text(text)
    Path(str(cfg.output) + ".meta.json").write_text(json.dumps(meta, indent=1, sort_keys=True) + "\n")


def main(argv: Sequence[str] | None = None) -> int:
    try:
        cfg = config_from_args(argv)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code else EXIT_OK
    started = time.time()
    try:
        report, run = run_command(cfg)
    except (ConfigError, FormError, PathError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (NoSplitFound, InsufficientPrecision) as exc:
        print(f"check failed: {exc}", file=sys.stderr)
        return EXIT_FAIL
    if cfg.fmt == "json":
        text = json.dumps(report, indent=1, sort_keys=True) + "\n"
    else:
        text = render_text(report)
    meta = {"schema": SCHEMA, "started": time.strftime("%Y-%m-%dT%H:%M:%SZ", time.gmtime(started)),
            "elapsed": round(time.time() - started, 3), "cache_hits": run.cache_hits, "timings": run.timings}
    _write(cfg, text, meta)
    return EXIT_OK if report["passed"] else EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
