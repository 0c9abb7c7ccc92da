#!/usr/bin/env python3
"""
Command-line front end.

Usage:
    python -m folner_density density --set evens
    python -m folner_density thm jin --A evens --B evens
    python -m folner_density counterexample --M 1 --N 1 --L 4 --k 3
    python -m folner_density verify result.json
    python -m folner_density batch --config runs.json --format csv

Every operation prints one JSON document (or CSV table) on stdout. Exit
status: 0 when the operation ran (whatever its verdict), 2 on a schema or
precondition error (with a machine-readable error document), 1 when verify
rejects a certificate.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
from typing import Dict, List, Optional, Sequence, Tuple

from folner_density.certificates import verify_all
from folner_density.config import setup_logging
from folner_density.errors import ConfigError, FolnerError
from folner_density.output import FORMATS, emit, load_document
from folner_density.runner import RunConfig, error_document, run, run_batch

log = logging.getLogger(__name__)

EXIT_OK, EXIT_REJECTED, EXIT_ERROR = 0, 1, 2

# (parameter key, kind); the flag is --key with "_" written as "-"
CHAIN = [("E", "value"), ("delta", "value"), ("max_aux", "int"), ("aux_family", "text")]
GRID = [("n_values", "ints"), ("shifts", "value"), ("family", "text")]
DELTA_GRID = [("delta_n_values", "ints"), ("delta_shifts", "value"), ("delta_family", "text")]

OPTIONS: Dict[str, List[Tuple[str, str]]] = {
    "density": [("set", "value"), ("direction", "text")] + GRID,
    "folner-check": [("H", "value"), ("eps", "value"), ("n_values", "ints"), ("shape", "text"),
                     ("side", "text")],
    "product": [("A", "value"), ("B", "value"), ("difference", "flag"), ("window", "value"),
                ("factor_A", "value"), ("factor_B", "value")],
    "delta": [("set", "value"), ("eps", "value"), ("candidates", "value")] + GRID,
    "syndetic": [("set", "value"), ("k", "int"), ("region", "value"), ("pool", "value"),
                 ("strict", "flag")],
    "thick": [("set", "value"), ("probes", "value"), ("pool", "value")],
    "pws": [("set", "value"), ("k", "int"), ("probes", "value"), ("pool", "value"),
            ("F_pool", "value"), ("F", "value"), ("strict", "flag")],
    "embed": [("A", "value"), ("B", "value"), ("probes", "value"), ("pool", "value")],
    "lemma overlap": [("E", "value"), ("family", "value"), ("gamma", "value"), ("eps", "value")],
    "lemma delta-cover": [("C", "value"), ("E", "value"), ("P", "value"), ("g0", "value"),
                          ("eps", "value")],
    "lemma shift": [("U", "value"), ("V", "value"), ("C", "value"), ("D", "value"), ("side", "text")],
    "lemma chain": [("sets", "values"), ("side", "text")] + CHAIN,
    "thm delta-cover": [("sets", "values"), ("eps", "value"), ("P", "value"), ("g0", "value")]
                       + CHAIN + DELTA_GRID,
    "thm roots": [("sets", "values"), ("eps", "value"), ("k", "int"), ("window", "value")]
                 + CHAIN + DELTA_GRID,
    "thm jin": [("A", "value"), ("B", "value"), ("X", "value"), ("w", "value"), ("window", "value"),
                ("probes", "value"), ("pool", "value")] + CHAIN + GRID,
    "thm jin-pws": [("A", "value"), ("B", "value"), ("window", "value"), ("probes", "value"),
                    ("pool", "value")] + CHAIN + GRID,
    "thm pullback": [("C", "value"), ("E", "value"), ("pool", "value")] + GRID,
    "thm embed": [("sets", "values"), ("pool", "value"), ("shift_pool", "value")] + CHAIN + GRID,
    "thm inverse-probe": [("set", "value")] + GRID,
    "counterexample": [("M", "int"), ("N", "int"), ("L", "int"), ("k", "int"), ("alpha", "value"),
                       ("beta", "value")],
}

GROUP_SHORTHANDS = {"Z": {"kind": "Zd", "d": 1}, "H3": {"kind": "Heisenberg3"},
                    "Heisenberg3": {"kind": "Heisenberg3"}}


def parse_value(text: str):
    """JSON when it parses ("3", "[0, 60]", '{"kind": ...}'), the raw string otherwise ("evens", "1/2")."""
    try:
        return json.loads(text)
    except json.JSONDecodeError:
        return text


def parse_group(text: str) -> dict:
    """Z, Z2, Zn:6, H3, or a JSON group spec."""
    if text in GROUP_SHORTHANDS:
        return dict(GROUP_SHORTHANDS[text])
    if text.startswith("Zn:"):
        return {"kind": "FiniteCyclic", "n": int(text[3:])}
    if text.startswith("Z") and text[1:].isdigit():
        return {"kind": "Zd", "d": int(text[1:])}
    value = parse_value(text)
    if not isinstance(value, dict):
        raise ConfigError(f"bad group {text!r}")
    return value


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="JSON run config; flags given here override its params")
    p.add_argument("--group", help="Z, Z2, Zn:6, H3 or a JSON group spec (default Z)")
    p.add_argument("--define", action="append", default=[], metavar="NAME=SPEC",
                   help="name a set for later reference (repeatable)")
    p.add_argument("--format", choices=FORMATS, default=None)
    p.add_argument("--output", help="write the document to this file instead of stdout")
    p.add_argument("--window-cap", type=int, dest="window_cap")
    p.add_argument("--search-budget", type=int, dest="search_budget")
    p.add_argument("--workers", type=int)
    p.add_argument("--chain-delta", dest="chain_delta")
    p.add_argument("--log-level", dest="log_level")


def _add_options(p: argparse.ArgumentParser, options: Sequence[Tuple[str, str]]) -> None:
    for key, kind in options:
        flag = "--" + key.replace("_", "-")
        if kind == "flag":
            p.add_argument(flag, dest="p_" + key, action="store_true", default=None)
        elif kind == "int":
            p.add_argument(flag, dest="p_" + key, type=int)
        elif kind == "ints":
            p.add_argument(flag, dest="p_" + key, type=int, nargs="+")
        elif kind == "values":
            p.add_argument(flag, dest="p_" + key, type=parse_value, nargs="+")
        elif kind == "text":
            p.add_argument(flag, dest="p_" + key)
        else:
            p.add_argument(flag, dest="p_" + key, type=parse_value)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="folner_density",
        description="Window-scale density, Δ-set and embeddability checks with replayable certificates",
    )
    top = parser.add_subparsers(dest="command", required=True)
    groups: Dict[str, argparse._SubParsersAction] = {}
    for op, options in OPTIONS.items():
        if " " in op:
            head, tail = op.split(" ", 1)
            if head not in groups:
                gp = top.add_parser(head, help=f"{head} operations")
                groups[head] = gp.add_subparsers(dest="sub", required=True)
            p = groups[head].add_parser(tail)
        else:
            p = top.add_parser(op)
        p.set_defaults(operation=op)
        _add_common(p)
        _add_options(p, options)

    v = top.add_parser("verify", help="replay certificates from JSON documents")
    v.add_argument("documents", nargs="+")
    v.add_argument("--format", choices=FORMATS, default="json")
    v.add_argument("--output")
    v.add_argument("--log-level", dest="log_level")
    v.set_defaults(operation="verify")

    b = top.add_parser("batch", help="run a list of run configs")
    b.add_argument("--config", required=True, help='JSON list of run configs, or {"runs": [...]}')
    b.add_argument("--format", choices=FORMATS, default="json")
    b.add_argument("--output")
    b.add_argument("--log-level", dest="log_level")
    b.set_defaults(operation="batch")
    return parser


def config_from_args(args: argparse.Namespace) -> RunConfig:
    raw: dict = {}
    if args.config:
        raw = load_document(args.config)
        if not isinstance(raw, dict):
            raise ConfigError("--config must hold a single run config object")
    raw = dict(raw)
    raw["operation"] = args.operation
    if args.group:
        raw["group"] = parse_group(args.group)
    sets = dict(raw.get("sets") or {})
    for item in args.define:
        name, sep, spec = item.partition("=")
        if not sep or not name:
            raise ConfigError(f"--define expects NAME=SPEC, got {item!r}")
        sets[name] = parse_value(spec)
    raw["sets"] = sets
    params = dict(raw.get("params") or {})
    for key, _ in OPTIONS[args.operation]:
        value = getattr(args, "p_" + key, None)
        if value is not None:
            params[key] = value
    raw["params"] = params
    b = dict(raw.get("budgets") or {})
    for key in ("window_cap", "search_budget", "workers", "chain_delta"):
        if getattr(args, key, None) is not None:
            b[key] = getattr(args, key)
    raw["budgets"] = b
    if args.format:
        raw["format"] = args.format
    if args.output:
        raw["output"] = args.output
    return RunConfig.from_dict(raw)


def _verify(args: argparse.Namespace) -> int:
    reports = []
    for path in args.documents:
        reports.extend(verify_all(load_document(path)))
    for r in reports:
        if not r.accepted:
            log.warning("rejected %s: %s", r.operation, r.reason)
    emit([r.to_record() for r in reports], args.format, args.output)
    return EXIT_OK if all(r.accepted for r in reports) else EXIT_REJECTED


def _batch(args: argparse.Namespace) -> int:
    raw = load_document(args.config)
    runs = raw.get("runs") if isinstance(raw, dict) else raw
    if not isinstance(runs, list):
        raise ConfigError("batch config must be a list of run configs or {\"runs\": [...]}")
    docs = run_batch(runs)
    log.info("batch: %d runs", len(docs))
    emit(docs, args.format, args.output)
    return EXIT_OK


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    setup_logging(getattr(args, "log_level", None))
    operation = getattr(args, "operation", None)
    try:
        if operation == "verify":
            return _verify(args)
        if operation == "batch":
            return _batch(args)
        config = config_from_args(args)
        doc = run(config)
        emit(doc, config.format, config.output)
        return EXIT_OK
    except FolnerError as e:
        log.error("%s", e)
        emit(error_document(e, operation), "json")
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
