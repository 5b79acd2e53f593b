"""Campaign runner: ``jensentrace run | describe | version``.

Exit codes of ``run``: 0 every row passes, 1 some row failed or had a
failed precondition, 2 a guaranteed instance failed (anomaly), 3 the
three-factor search confirmed a candidate, 4 invalid configuration. When
several apply the order of precedence is 4, 2, 3, 1.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Optional

from . import __version__
from .calculus import get_function
from .serialize import dumps
from .suites import CANDIDATE, REPORT_COLUMNS, SUITES, Cell, describe, run_cell
from .verifiers import DEFAULT_TOL, FAIL, PRECONDITION, precondition_failed

EXIT_OK, EXIT_FAIL, EXIT_ANOMALY, EXIT_CANDIDATE, EXIT_CONFIG = 0, 1, 2, 3, 4

ROW_COLUMNS = REPORT_COLUMNS + ["cell", "dim", "function", "reason"]

_KEYS = {"suites", "seeds", "dims", "functions", "tolerances", "output", "workers", "options"}


class ConfigError(ValueError):
    pass


def _parse_dims(value) -> tuple[int, int]:
    if isinstance(value, str):
        parts = value.split("..")
        if len(parts) == 1:
            parts = parts * 2
        if len(parts) != 2:
            raise ConfigError(f"dims must look like 'a..b', got {value!r}")
        try:
            value = [int(p) for p in parts]
        except ValueError:
            raise ConfigError(f"dims must be integers, got {value!r}") from None
    elif isinstance(value, int):
        value = [value, value]
    if not (isinstance(value, (list, tuple)) and len(value) == 2 and all(isinstance(v, int) for v in value)):
        raise ConfigError(f"dims must be [a, b] or 'a..b', got {value!r}")
    a, b = value
    if not 1 <= a <= b:
        raise ConfigError(f"dims need 1 <= a <= b, got {a}..{b}")
    return a, b


@dataclass
class CampaignConfig:
    """Validated campaign description.

    JSON fields: ``suites`` (list of suite ids), ``seeds`` (count or
    ``{"base", "count"}``), ``dims`` (``[a, b]`` or ``"a..b"``),
    ``functions`` (catalog names, default per suite), ``tolerances``
    (``{"default": tol, suite: tol}``), ``output`` (``{"path", "format"}``),
    ``workers`` and ``options`` (per-suite settings such as ``N`` for
    ``sin_lp`` or ``trials`` and ``arm`` for ``rst_search``).
    """

    suites: list[str]
    seed_base: int = 0
    seed_count: int = 1
    dims: tuple[int, int] = (2, 4)
    functions: Optional[list[str]] = None
    tolerances: dict = field(default_factory=dict)
    out: Optional[str] = None
    format: str = "json"
    workers: int = 1
    options: dict = field(default_factory=dict)

    @classmethod
    def from_dict(cls, doc: dict) -> "CampaignConfig":
        if not isinstance(doc, dict):
            raise ConfigError("config must be a JSON object")
        unknown = set(doc) - _KEYS
        if unknown:
            raise ConfigError(f"unknown config fields: {', '.join(sorted(unknown))}")
        suites = doc.get("suites")
        if not isinstance(suites, list) or not suites:
            raise ConfigError("suites must be a non-empty list")
        for s in suites:
            if s not in SUITES:
                raise ConfigError(f"unknown suite {s!r}; known: {', '.join(SUITES)}")
        seeds = doc.get("seeds", 1)
        if isinstance(seeds, int):
            base, count = 0, seeds
        elif isinstance(seeds, dict) and set(seeds) <= {"base", "count"}:
            base, count = seeds.get("base", 0), seeds.get("count", 1)
        else:
            raise ConfigError("seeds must be a count or {base, count}")
        if not isinstance(base, int) or not isinstance(count, int) or count < 1:
            raise ConfigError("seed count must be an integer >= 1")
        dims = _parse_dims(doc.get("dims", [2, 4]))
        functions = doc.get("functions")
        if functions is not None:
            if not isinstance(functions, list) or not functions:
                raise ConfigError("functions must be a non-empty list of catalog names")
            for name in functions:
                try:
                    get_function(name)
                except KeyError as exc:
                    raise ConfigError(str(exc)) from None
                except ValueError:
                    pass
        tolerances = doc.get("tolerances", {})
        if not isinstance(tolerances, dict):
            raise ConfigError("tolerances must be an object")
        for k, v in tolerances.items():
            if k != "default" and k not in SUITES:
                raise ConfigError(f"tolerance for unknown suite {k!r}")
            if not isinstance(v, (int, float)) or v < 0:
                raise ConfigError(f"tolerance {k} must be a nonnegative number")
        output = doc.get("output", {})
        if not isinstance(output, dict) or set(output) - {"path", "format"}:
            raise ConfigError("output must be {path, format}")
        fmt = output.get("format", "json")
        if fmt not in ("json", "csv"):
            raise ConfigError(f"format must be json or csv, got {fmt!r}")
        workers = doc.get("workers", 1)
        if not isinstance(workers, int) or workers < 1:
            raise ConfigError("workers must be an integer >= 1")
        options = doc.get("options", {})
        if not isinstance(options, dict) or any(k not in SUITES or not isinstance(v, dict) for k, v in options.items()):
            raise ConfigError("options must map suite ids to objects")
        return cls(list(suites), base, count, dims, functions, dict(tolerances), output.get("path"), fmt, workers,
                   options)

    def tol(self, suite: str) -> float:
        return float(self.tolerances.get(suite, self.tolerances.get("default", DEFAULT_TOL)))

    def cells(self) -> list[Cell]:
        out = []
        seeds = range(self.seed_base, self.seed_base + self.seed_count)
        for sid in self.suites:
            suite = SUITES[sid]
            opts = dict(self.options.get(sid, {}))
            tol = self.tol(sid)
            if suite.cells == "single":
                out.append(Cell(len(out), sid, self.seed_base, 0, None, tol, _freeze(opts)))
                continue
            if suite.cells == "seed":
                opts.setdefault("dims", list(self.dims))
                for s in seeds:
                    out.append(Cell(len(out), sid, s, 0, None, tol, _freeze(opts)))
                continue
            funcs = [None] if suite.default_function is None else (self.functions or [suite.default_function])
            for s in seeds:
                for d in range(self.dims[0], self.dims[1] + 1):
                    for fn in funcs:
                        out.append(Cell(len(out), sid, s, d, fn, tol, _freeze(opts)))
        return out


def _freeze(opts: dict) -> tuple:
    return tuple(sorted((k, tuple(v) if isinstance(v, list) else v) for k, v in opts.items()))


# --------------------------------------------------------------------------
# execution


def execute(cell: Cell) -> tuple[dict, Optional[dict]]:
    """Row for one cell plus a dump document for anomalies and candidates."""
    try:
        rep, man = run_cell(cell)
    except (KeyError, ValueError) as exc:
        # e.g. a catalog function whose arity does not fit the suite
        rep, man = precondition_failed(cell.suite, f"{type(exc).__name__}: {exc}", cell.tol, seed=cell.seed), {}
    row = rep.to_row()
    row.update(cell=cell.index, dim=cell.dim, function=cell.function, reason=rep.reason)
    dump = None
    if rep.anomaly or rep.verdict == CANDIDATE:
        dump = {
            "kind": "anomaly" if rep.anomaly else "candidate",
            "cell": {"index": cell.index, "suite": cell.suite, "seed": cell.seed, "dim": cell.dim,
                     "function": cell.function, "tol": cell.tol, "options": dict(cell.options)},
            "report": rep.to_dict(),
            "manifest": man,
        }
    return row, dump


def exit_status(verdicts: list[str], anomalies: int) -> int:
    if anomalies:
        return EXIT_ANOMALY
    if CANDIDATE in verdicts:
        return EXIT_CANDIDATE
    if any(v in (FAIL, PRECONDITION) for v in verdicts):
        return EXIT_FAIL
    return EXIT_OK


class _Writer:
    def __init__(self, stream, fmt: str):
        self.stream = stream
        self.fmt = fmt
        if fmt == "csv":
            self.csv = csv.DictWriter(stream, fieldnames=ROW_COLUMNS, extrasaction="ignore", lineterminator="\n")
            self.csv.writeheader()

    def write(self, row: dict) -> None:
        if self.fmt == "csv":
            self.csv.writerow({k: ("" if row.get(k) is None else row.get(k)) for k in ROW_COLUMNS})
        else:
            self.stream.write(dumps({k: row.get(k) for k in ROW_COLUMNS}) + "\n")
        self.stream.flush()


def run(config: CampaignConfig, stdout=None, stderr=None) -> int:
    """Execute every cell, stream rows in cell order and return the exit status.

    Rows go to ``config.out`` (JSON lines or CSV) or ``stdout``. Dumps are
    written next to the output as ``<out>.cell<i>.<kind>.json`` (or into the
    working directory when writing to ``stdout``).
    """
    stdout = stdout or sys.stdout
    stderr = stderr or sys.stderr
    cells = config.cells()
    verdicts, anomalies = [], 0
    handle = open(config.out, "w", newline="") if config.out else None
    prefix = config.out or "jensentrace"
    try:
        writer = _Writer(handle or stdout, config.format)
        if config.workers > 1:
            pool = ProcessPoolExecutor(max_workers=config.workers)
            results = pool.map(execute, cells, chunksize=1)
        else:
            pool = None
            results = map(execute, cells)
        try:
            for row, dump in results:
                writer.write(row)
                verdicts.append(row["verdict"])
                if dump is not None:
                    anomalies += dump["kind"] == "anomaly"
                    path = f"{prefix}.cell{dump['cell']['index']}.{dump['kind']}.json"
                    with open(path, "w") as fh:
                        fh.write(dumps(dump, indent=1) + "\n")
                    print(f"{dump['kind']} in cell {dump['cell']['index']}: instance written to {path}", file=stderr)
        finally:
            if pool is not None:
                pool.shutdown()
    finally:
        if handle:
            handle.close()
    counts = {v: verdicts.count(v) for v in sorted(set(verdicts))}
    status = exit_status(verdicts, anomalies)
    print(f"{len(cells)} cells: " + ", ".join(f"{k} {v}" for k, v in counts.items()) + f"; exit {status}", file=stderr)
    return status


# --------------------------------------------------------------------------
# argument parsing


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="jensentrace", description="Trace inequality verification campaigns.")
    sub = p.add_subparsers(dest="command", required=True)
    r = sub.add_parser("run", help="run a campaign")
    r.add_argument("--config", help="JSON campaign file; flags below override its fields")
    r.add_argument("--suites", nargs="+", help="suite ids")
    r.add_argument("--seeds", type=int, help="number of seeds")
    r.add_argument("--seed-base", type=int, help="first seed")
    r.add_argument("--dims", help="dimension range a..b")
    r.add_argument("--functions", nargs="+", help="catalog function names")
    r.add_argument("--tol", type=float, help="default tolerance")
    r.add_argument("--out", help="report path (default: stdout)")
    r.add_argument("--format", choices=["json", "csv"])
    r.add_argument("--workers", type=int)
    d = sub.add_parser("describe", help="describe a suite")
    d.add_argument("suite")
    sub.add_parser("version", help="print the version")
    return p


def load_config(args) -> CampaignConfig:
    doc: dict = {}
    if args.config:
        try:
            with open(args.config) as fh:
                doc = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config: {exc}") from None
        if not isinstance(doc, dict):
            raise ConfigError("config must be a JSON object")
    if args.suites is not None:
        doc["suites"] = args.suites
    if args.seeds is not None or args.seed_base is not None:
        seeds = doc.get("seeds", 1)
        seeds = dict(seeds) if isinstance(seeds, dict) else {"count": seeds}
        if args.seeds is not None:
            seeds["count"] = args.seeds
        if args.seed_base is not None:
            seeds["base"] = args.seed_base
        doc["seeds"] = seeds
    if args.dims is not None:
        doc["dims"] = args.dims
    if args.functions is not None:
        doc["functions"] = args.functions
    if args.tol is not None:
        doc["tolerances"] = {**doc.get("tolerances", {}), "default": args.tol}
    if args.out is not None or args.format is not None:
        out = dict(doc.get("output", {}))
        if args.out is not None:
            out["path"] = args.out
        if args.format is not None:
            out["format"] = args.format
        doc["output"] = out
    if args.workers is not None:
        doc["workers"] = args.workers
    return CampaignConfig.from_dict(doc)


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_CONFIG
    if args.command == "version":
        print(__version__)
        return EXIT_OK
    if args.command == "describe":
        try:
            print(describe(args.suite))
        except KeyError as exc:
            print(f"error: {exc.args[0]}", file=sys.stderr)
            return EXIT_CONFIG
        return EXIT_OK
    try:
        config = load_config(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    return run(config)


if __name__ == "__main__":
    sys.exit(main())
