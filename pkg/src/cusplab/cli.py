"""Command-line runner: ``cusplab <group> <experiment> [flags]`` and ``cusplab list``."""

from __future__ import annotations

import argparse
import csv
import json
import sys
from pathlib import Path

from . import __version__
from .errors import CuspLabError, InputError
from .experiments import REGISTRY, SCHEMA_VERSION, _plain, default_jobs, run_experiment

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def _caster(default):
    if isinstance(default, bool):
        return lambda s: {"1": True, "true": True, "yes": True, "0": False, "false": False, "no": False}[s.lower()]
    if isinstance(default, int):
        return int
    if isinstance(default, float):
        return float
    if isinstance(default, tuple):
        inner = _caster(default[0]) if default else float
        return lambda s: tuple(inner(x) for x in s.split(",") if x.strip())
    return str


def _convert(exp, key: str, raw: str):
    try:
        return _caster(exp.defaults[key])(raw.strip())
    except (ValueError, KeyError) as e:
        raise UsageError(f"bad value {raw!r} for {key}") from e


def read_config(path: str) -> dict:
    """``key=value`` lines; blank lines and ``#`` comments are skipped."""
    out = {}
    try:
        text = Path(path).read_text()
    except OSError as e:
        raise UsageError(f"cannot read config {path}: {e}") from e
    for n, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise UsageError(f"{path}:{n}: expected key=value")
        k, v = line.split("=", 1)
        out[k.strip().replace("-", "_")] = v
    return out


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="cusplab", description="Numerical experiments on cuspidal model metrics.")
    parser.add_argument("--version", action="version", version=f"cusplab {__version__}")
    groups = parser.add_subparsers(dest="group", metavar="GROUP")
    groups.add_parser("list", help="print the experiment catalog")
    by_group: dict[str, list] = {}
    for exp in REGISTRY.values():
        by_group.setdefault(exp.group, []).append(exp)
    for group, exps in by_group.items():
        gp = groups.add_parser(group, help=f"{group} experiments")
        sub = gp.add_subparsers(dest="experiment", metavar="EXPERIMENT")
        for exp in exps:
            ep = sub.add_parser(exp.name, help=exp.citation, description=exp.citation)
            ep.add_argument("--config", help="key=value file; flags override it")
            ep.add_argument("--seed", type=int, default=0)
            ep.add_argument("--jobs", type=int, default=None, help="worker processes (default $CUSPLAB_JOBS or 1)")
            ep.add_argument("--out", help="write the JSON report here (default stdout)")
            ep.add_argument("--csv", help="directory for CSV tables")
            for key, default in exp.defaults.items():
                shown = ",".join(map(str, default)) if isinstance(default, tuple) else default
                ep.add_argument("--" + key.replace("_", "-"), dest="p_" + key, default=None, metavar="VALUE",
                                help=f"default {shown}")
    return parser


def catalog() -> list[tuple[str, str]]:
    return sorted((k, e.citation) for k, e in REGISTRY.items())


def report(key: str, params: dict, outcome, seed: int, error: str | None = None) -> dict:
    doc = {
        "experiment": key,
        "schema_version": SCHEMA_VERSION,
        "spec": _plain(params),
        "results": _plain(outcome.results) if outcome else [],
        "verdicts": [v.to_dict() for v in outcome.verdicts] if outcome else [],
        "seed": seed,
        "version": __version__,
    }
    if error is not None:
        doc["error"] = error
    return doc


def write_tables(directory: str, key: str, tables: dict) -> list[Path]:
    d = Path(directory)
    d.mkdir(parents=True, exist_ok=True)
    written = []
    for name, rows in tables.items():
        if not rows:
            continue
        path = d / f"{key.replace('/', '_')}_{name}.csv"
        cols = list(rows[0])
        with path.open("w", newline="") as fh:
            w = csv.DictWriter(fh, fieldnames=cols, lineterminator="\n")
            w.writeheader()
            for row in rows:
                w.writerow({c: _plain(row.get(c)) for c in cols})
        written.append(path)
    return written


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if args.group is None:
            raise UsageError(parser.format_usage().strip())
        if args.group == "list":
            for key, cite in catalog():
                print(f"{key:28s} {cite}")
            return EXIT_OK
        if args.experiment is None:
            raise UsageError(f"choose an experiment for {args.group}")
        key = f"{args.group}/{args.experiment}"
        exp = REGISTRY[key]
        raw = read_config(args.config) if args.config else {}
        unknown = set(raw) - set(exp.defaults)
        if unknown:
            raise UsageError(f"unknown config keys for {key}: {sorted(unknown)}")
        for k in exp.defaults:
            flag = getattr(args, "p_" + k)
            if flag is not None:
                raw[k] = flag
        overrides = {k: _convert(exp, k, v) for k, v in raw.items()}
        jobs = args.jobs if args.jobs is not None else default_jobs()
        if jobs < 1:
            raise UsageError("--jobs must be positive")
    except UsageError as e:
        print(e, file=sys.stderr)
        return EXIT_USAGE

    params = {**exp.defaults, **overrides}
    try:
        params, outcome = run_experiment(key, overrides, seed=args.seed, jobs=jobs)
        doc = report(key, params, outcome, args.seed)
        status = EXIT_OK if outcome.passed else EXIT_FAIL
    except InputError as e:
        print(f"{key}: {e}", file=sys.stderr)
        return EXIT_USAGE
    except CuspLabError as e:
        outcome = None
        doc = report(key, params, None, args.seed, error=f"{type(e).__name__}: {e}")
        status = EXIT_FAIL

    text = json.dumps(doc, indent=2, sort_keys=True)
    if args.out:
        Path(args.out).write_text(text + "\n")
    else:
        print(text)
    if args.csv and outcome is not None:
        write_tables(args.csv, key, outcome.tables)
    for v in doc["verdicts"]:
        print(f"{'PASS' if v['pass'] else 'FAIL'} {v['id']}", file=sys.stderr)
    return status


if __name__ == "__main__":
    sys.exit(main())
