"""Command-line entry point: ``dlh <command> [options]``.

Exit codes: 0 success, 1 selftest failure, 2 configuration error,
3 admissibility conditions not met, 4 numerical failure.
"""
from __future__ import annotations

import argparse
import csv
import io
import sys as _sys
from typing import Optional, Sequence


from . import norms
from .config import (
    RunConfig,
    fmt,
    fmt_list,
    load,
    parse_domain,
    parse_floats,
    parse_sampler,
    parse_schedule,
    parse_testfn,
    read_source,
    system_id,
    system_lines,
)
from .errors import ConditionsNotMet, ConfigParse, DLHError, ValidationError
from .hardy import Mode, check_conditions, constant_numerator, hardy_constant
from .integrate import verify_inequality
from .sharpness import default_schedule, grushin_sharpness_sweep

EXIT_OK, EXIT_SELFTEST, EXIT_CONFIG, EXIT_CONDITIONS, EXIT_NUMERIC = 0, 1, 2, 3, 4
SCHEMA = "# schema=1"
VERIFY_COLUMNS = ["system_id", "p", "s", "t", "mu", "constant", "lhs", "lhs_se", "rhs", "rhs_se", "margin", "z", "verdict"]


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise ConfigParse(message)


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="config file with system/params/run sections (or fixture:<name>)")
    common.add_argument("--system", help="system section file (or fixture:<name>)")
    common.add_argument("--params", help="params section file (or fixture:<name>)")
    common.add_argument("--format", choices=["text", "csv"], help="output format")
    common.add_argument("--output", help="write the report to this file instead of stdout")
    common.add_argument("--threads", type=int, help="worker threads (overrides DLH_THREADS; 0 = auto)")

    parser = _Parser(prog="dlh", description="Weighted Hardy inequalities for Δλ-Laplacians")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    sub.add_parser("derive", parents=[common], help="print σ and Q")

    p = sub.add_parser("check", parents=[common], help="evaluate the admissibility conditions")
    p.add_argument("--mode", choices=[m.value for m in Mode])
    p.add_argument("--index", choices=["column", "row"], default="column")
    p.add_argument("--override-conditions", action="store_true")

    p = sub.add_parser("norm-eval", parents=[common], help="evaluate a homogeneous norm at a point")
    p.add_argument("--variant", choices=[v.value for v in norms.NormVariant])
    p.add_argument("--point")
    p.add_argument("--epsilon", type=float)

    p = sub.add_parser("verify", parents=[common], help="Monte-Carlo check of one inequality")
    p.add_argument("--testfn")
    p.add_argument("--domain")
    p.add_argument("--n", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--sampler", help="auto, uniform or radial:<a>[:<uniform weight>]")
    p.add_argument("--mode", choices=[m.value for m in Mode])
    p.add_argument("--override-conditions", action="store_true")

    p = sub.add_parser("estimate-constant", parents=[common], help="Grushin trial-family sweep")
    p.add_argument("--schedule", help="schedule file (schedule: [[delta, R], ...] or deltas/radii)")
    p.add_argument("--n", type=int)
    p.add_argument("--seed", type=int)

    sub.add_parser("selftest", parents=[common], help="run the invariant suites on the shipped fixtures")
    return parser


def _merge(cfg: RunConfig, args: argparse.Namespace) -> dict:
    """Flags override run-section keys."""
    run = dict(cfg.run)
    run["command"] = args.command
    for key in ("format", "output", "testfn", "domain", "n", "seed", "sampler", "mode", "variant", "point", "epsilon"):
        value = getattr(args, key, None)
        if value is not None:
            run[key] = value
    if getattr(args, "override_conditions", False):
        run["override_conditions"] = True
    if getattr(args, "schedule", None):
        run["schedule"] = parse_schedule(read_source(args.schedule))
    run.setdefault("format", "text")
    cfg.run = run
    return run


def _need(value, what: str):
    if value is None:
        raise ConfigParse(f"missing {what}")
    return value


def _header(cfg: RunConfig) -> list[str]:
    return [f"# dlh {cfg.run['command']}"] + cfg.echo()


def cmd_derive(cfg: RunConfig) -> tuple[int, list[str]]:
    sys = _need(cfg.system, "system section")
    body = system_lines(sys) + [f"sigma = {fmt_list(sys.sigma)}", f"Q = {fmt(sys.Q)}"]
    return EXIT_OK, [f"# dlh {cfg.run['command']}"] + body


def cmd_check(cfg: RunConfig, args) -> tuple[int, list[str]]:
    sys = _need(cfg.system, "system section")
    params = _need(cfg.params, "params section")
    report = check_conditions(sys, params, cfg.run.get("mode", "verbatim"), args.index)
    lines = _header(cfg) + report.lines()
    lines.append(f"constant = {fmt(hardy_constant(sys, params))}")
    lines.append(f"applicable = {str(constant_numerator(sys, params) > 0).lower()}")
    if not report.overall and not cfg.run.get("override_conditions"):
        return EXIT_CONDITIONS, lines
    return EXIT_OK, lines


def cmd_norm_eval(cfg: RunConfig) -> tuple[int, list[str]]:
    sys = _need(cfg.system, "system section")
    point = parse_floats(_need(cfg.run.get("point"), "--point"), "point")
    variant = cfg.run.get("variant", "bracket")
    eps = cfg.run.get("epsilon")
    value = norms.evaluate(sys, point, variant, eps)
    return EXIT_OK, _header(cfg) + [f"value = {fmt(value)}"]


def cmd_verify(cfg: RunConfig, workers: Optional[int]) -> tuple[int, list[str]]:
    sys = _need(cfg.system, "system section")
    params = _need(cfg.params, "params section")
    run = cfg.run
    u = parse_testfn(_need(run.get("testfn"), "--testfn"), sys)
    domain = parse_domain(_need(run.get("domain"), "--domain"))
    report = verify_inequality(
        sys,
        params,
        u,
        domain,
        int(run.get("n", 1_000_000)),
        int(run.get("seed", 0)),
        sampler=parse_sampler(run.get("sampler")),
        mode=run.get("mode", "verbatim"),
        override=bool(run.get("override_conditions", False)),
        workers=workers,
    )
    f = report.fields()
    mu = params.mu_for(sys.k)
    if run["format"] == "csv":
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(VERIFY_COLUMNS)
        w.writerow([
            system_id(sys), fmt(params.p), fmt(params.s), fmt(params.t), fmt_list(mu),
            fmt(f["constant"]), fmt(f["lhs"]), fmt(f["lhs_se"]), fmt(f["rhs"]), fmt(f["rhs_se"]),
            fmt(f["margin"]), fmt(f["z"]), f["verdict"],
        ])
        return EXIT_OK, [SCHEMA] + _header(cfg) + buf.getvalue().splitlines()
    parts = [f"system_id={system_id(sys)}"]
    for key, value in f.items():
        if isinstance(value, bool):
            value = str(value).lower()
        elif isinstance(value, float):
            value = fmt(value)
        parts.append(f"{key}={value}")
    return EXIT_OK, _header(cfg) + [" ".join(parts)]


def cmd_estimate(cfg: RunConfig, workers: Optional[int]) -> tuple[int, list[str]]:
    sys = _need(cfg.system, "system section")
    run = cfg.run
    sched = run.get("schedule")
    sched = default_schedule() if sched is None else parse_schedule(sched)
    run["schedule"] = [f"{fmt(d)}/{fmt(r)}" for d, r in sched]
    trend = grushin_sharpness_sweep(sys, cfg.params, sched, int(run.get("n", 200_000)), int(run.get("seed", 0)), workers=workers)
    best = trend.extrapolated
    lines = [SCHEMA] + _header(cfg) + ["delta,R,ratio,se"]
    lines += [f"{fmt(e.delta)},{fmt(e.R)},{fmt(e.ratio)},{fmt(e.se)}" for e in trend.entries]
    lines.append(
        f"# summary target={fmt(trend.target)} extrapolated={fmt(best.ratio)} se={fmt(best.se)} "
        f"delta={fmt(best.delta)} R={fmt(best.R)} relative_gap={fmt(trend.relative_gap)} "
        f"lower_bound_ok={str(trend.lower_bound_ok()).lower()}"
    )
    return EXIT_OK, lines


def cmd_selftest(cfg: RunConfig) -> tuple[int, list[str]]:
    from .selftest import run_all

    outcomes = run_all()
    lines = [f"# dlh {cfg.run['command']}"]
    lines += [f"{'PASS' if o.ok else 'FAIL'} {o.name}: {o.detail}" for o in outcomes]
    ok = all(o.ok for o in outcomes)
    lines.append(f"selftest = {'pass' if ok else 'fail'}")
    return (EXIT_OK if ok else EXIT_SELFTEST), lines


def run(argv: Optional[Sequence[str]] = None, stdout=None, stderr=None) -> int:
    stdout = stdout or _sys.stdout
    stderr = stderr or _sys.stderr
    lines: list[str] = []
    try:
        args = build_parser().parse_args(argv)
        cfg = load(args.config, args.system, args.params)
        run_sec = _merge(cfg, args)
        workers = args.threads
        command = args.command
        if command == "derive":
            code, lines = cmd_derive(cfg)
        elif command == "check":
            code, lines = cmd_check(cfg, args)
        elif command == "norm-eval":
            code, lines = cmd_norm_eval(cfg)
        elif command == "verify":
            code, lines = cmd_verify(cfg, workers)
        elif command == "estimate-constant":
            code, lines = cmd_estimate(cfg, workers)
        else:
            code, lines = cmd_selftest(cfg)
    except ConfigParse as exc:
        print(f"error: {exc}", file=stderr)
        return EXIT_CONFIG
    except ConditionsNotMet as exc:
        for line in exc.report.lines():
            print(line, file=stdout)
        print("error: admissibility conditions not met (use --override-conditions to run anyway)", file=stderr)
        return EXIT_CONDITIONS
    except ValidationError as exc:
        print(f"error: {exc}", file=stderr)
        return EXIT_CONFIG
    except (DLHError, ArithmeticError, FloatingPointError) as exc:
        print(f"numerical failure: {type(exc).__name__}: {exc}", file=stderr)
        return EXIT_NUMERIC

    text = "\n".join(lines) + "\n"
    if run_sec.get("output"):
        with open(run_sec["output"], "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
    else:
        stdout.write(text)
    return code


def main() -> None:
    raise SystemExit(run())


if __name__ == "__main__":
    main()
