"""Command-line driver: ``qmanifold verify | sweep | describe``."""
from __future__ import annotations

import argparse
import dataclasses
import json
import os
import sys

from . import __version__, config
from .report import ANCHORS
from .suites import SUITES, SWEEPS, SuiteConfig, catalog, convergence_sweep, report_csv, run_suite, sweep_csv

EXIT_PASS, EXIT_FAIL, EXIT_USAGE = 0, 1, 2
TOL_FIELDS = tuple(f.name for f in dataclasses.fields(config.Tolerances))
CONFIG_KEYS = {f.name for f in dataclasses.fields(SuiteConfig)}


class UsageError(Exception):
    pass


def _default_degree() -> int | None:
    raw = os.environ.get("QM_DEFAULT_DEGREE")
    if raw is None or raw == "":
        return None
    try:
        value = int(raw)
    except ValueError:
        raise UsageError(f"QM_DEFAULT_DEGREE must be an integer, got {raw!r}") from None
    if value < 1:
        raise UsageError("QM_DEFAULT_DEGREE must be positive")
    return value


def _split_tolerances(argv: list) -> tuple:
    """Pull ``--tol.<name> VALUE`` / ``--tol.<name>=VALUE`` out of ``argv``."""
    rest, tols = [], {}
    it = iter(argv)
    for token in it:
        if not token.startswith("--tol."):
            rest.append(token)
            continue
        name, sep, value = token[len("--tol."):].partition("=")
        if not sep:
            value = next(it, None)
            if value is None:
                raise UsageError(f"{token} needs a value")
        if name not in TOL_FIELDS:
            raise UsageError(f"unknown tolerance {name!r}; known: {', '.join(TOL_FIELDS)}")
        kind = type(getattr(config.DEFAULT, name))
        try:
            tols[name] = kind(value) if kind is float else int(value)
        except ValueError:
            raise UsageError(f"{token}: not a number: {value!r}") from None
    return rest, tols


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="qmanifold", description=__doc__)
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    v = sub.add_parser("verify", help="run a verification suite",
                       epilog="tolerances: --tol.<name> VALUE with <name> in " + ", ".join(TOL_FIELDS))
    v.add_argument("--suite", choices=SUITES)
    v.add_argument("--manifold", help='"euclidean", "euclidean(n)" or "circle"')
    v.add_argument("--degree", type=int, help="truncation degree K per axis (env QM_DEFAULT_DEGREE)")
    v.add_argument("--seed", type=int)
    v.add_argument("--samples", type=int, help="random samples per check")
    v.add_argument("--max-degree", type=int, dest="max_degree", help="translation degree cap (default 8K)")
    v.add_argument("--scale", type=float, help="circle chart scaling")
    v.add_argument("--config", help="JSON suite description; a list under \"runs\" runs a batch")
    v.add_argument("--out", help="report path (default: stdout)")
    v.add_argument("--format", choices=("json", "csv"), default="json")

    s = sub.add_parser("sweep", help="residual of a check against the truncation degree")
    s.add_argument("--check", required=True, choices=sorted(SWEEPS))
    s.add_argument("--degrees", default="8,16,32,48", help="comma separated list of K")
    s.add_argument("--out", help="table path (default: stdout)")
    s.add_argument("--format", choices=("json", "csv"), default="csv")

    d = sub.add_parser("describe", help="list suites, checks and their anchors")
    d.add_argument("--format", choices=("text", "json"), default="text")
    return p


def _load_config(path: str) -> list:
    try:
        with open(path) as fh:
            doc = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise UsageError(f"cannot read config {path}: {exc}") from None
    runs = doc.get("runs", [doc]) if isinstance(doc, dict) else None
    if not isinstance(runs, list) or not all(isinstance(r, dict) for r in runs):
        raise UsageError("config must be an object or {\"runs\": [objects]}")
    for r in runs:
        unknown = set(r) - CONFIG_KEYS
        if unknown:
            raise UsageError(f"unknown config keys: {', '.join(sorted(unknown))}")
    return runs


def _suite_configs(args, tols: dict) -> list:
    base = _load_config(args.config) if args.config else [{}]
    default_degree = _default_degree()
    configs = []
    for entry in base:
        entry = dict(entry)
        if default_degree is not None:
            entry.setdefault("degree", default_degree)
        for key in ("suite", "manifold", "degree", "seed", "samples", "max_degree", "scale", "out"):
            value = getattr(args, key)
            if value is not None:
                entry[key] = value
        entry["tolerances"] = {**entry.get("tolerances", {}), **tols}
        try:
            configs.append(SuiteConfig(**entry).validate())
        except (TypeError, ValueError) as exc:
            raise UsageError(str(exc)) from None
    return configs


def _write(text: str, path: str | None) -> None:
    if path is None:
        sys.stdout.write(text if text.endswith("\n") else text + "\n")
        return
    try:
        with open(path, "w") as fh:
            fh.write(text)
    except OSError as exc:
        raise UsageError(f"cannot write {path}: {exc}") from None


def _verify(args, tols: dict) -> int:
    configs = _suite_configs(args, tols)
    for cfg in configs:
        if cfg.out:
            parent = os.path.dirname(os.path.abspath(cfg.out))
            if not os.path.isdir(parent) or not os.access(parent, os.W_OK):
                raise UsageError(f"cannot write {cfg.out}: directory missing or read-only")
    failed = 0
    for cfg in configs:
        out, cfg.out = cfg.out, None
        report = run_suite(cfg)
        text = report.to_json() if args.format == "json" else report_csv(report)
        _write(text, out)
        status = "PASS" if report.passed else "FAIL"
        print(f"{status} suite={cfg.suite} manifold={cfg.manifold} K={cfg.degree} seed={cfg.seed} "
              f"checks={len(report.checks)} failed={report.n_failed}", file=sys.stderr)
        for r in report.sorted_checks():
            if r.failed:
                print(f"  fail {r.check_id}: residual {r.residual!r} tolerance {r.tolerance!r} {r.detail}",
                      file=sys.stderr)
        failed += report.n_failed
    return EXIT_FAIL if failed else EXIT_PASS


def _sweep(args) -> int:
    try:
        degrees = [int(k) for k in args.degrees.split(",") if k.strip()]
    except ValueError:
        raise UsageError(f"bad degree list {args.degrees!r}") from None
    if not degrees:
        raise UsageError("empty degree list")
    try:
        rows = convergence_sweep(args.check, degrees)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    if args.format == "csv":
        text = sweep_csv(rows)
    else:
        text = json.dumps([{"K": k, "residual": r, "wall_time": w} for k, r, w in rows], indent=2)
    _write(text, args.out)
    return EXIT_PASS


def _describe(args) -> int:
    cat = catalog()
    if args.format == "json":
        doc = {name: [{"check_id": c.check_id, "anchor": ANCHORS[c.anchor]} for c in checks]
               for name, checks in cat.items()}
        print(json.dumps(doc, indent=2))
        return EXIT_PASS
    for name in SUITES:
        print(name)
        if name == "all":
            print("  every check of the suites above")
            continue
        for c in cat[name]:
            print(f"  {c.check_id:40s} {ANCHORS[c.anchor]}")
    return EXIT_PASS


def main(argv: list | None = None) -> int:
    argv = sys.argv[1:] if argv is None else list(argv)
    parser = build_parser()
    try:
        rest, tols = _split_tolerances(argv)
        args = parser.parse_args(rest)
        if tols and args.command != "verify":
            raise UsageError("--tol.<name> applies to verify only")
        if args.command == "verify":
            return _verify(args, tols)
        if args.command == "sweep":
            return _sweep(args)
        return _describe(args)
    except UsageError as exc:
        print(f"qmanifold: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except SystemExit as exc:  # argparse usage errors and --help
        return int(exc.code or 0)


if __name__ == "__main__":
    sys.exit(main())
