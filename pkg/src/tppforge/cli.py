"""Command-line interface.

Exit codes: 0 ok, 2 invariant violation (a theorem check failed),
3 a search hit its budget, 4 input error.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import re
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

from .catalog import CatalogEntry, catalog_entry, group_from_text, read_catalog
from .errors import (
    CapExceeded,
    InvalidAction,
    NotATppTriple,
    ParseError,
    SearchNotExhausted,
    TableInvalid,
    TheoremViolation,
    TppForgeError,
)
from .groups import GroupTable, dump_table, enumerate_subgroups, find_abelian_normal_prime_index, verify_group_axioms
from .matmul import IndexedMatrix, group_algebra_multiply, naive_multiply, validate_triple
from .search import CSV_HEADER, SearchConfig, SearchReport, csv_row, run_search
from .structure import SCAN_HEADER, conjecture_scan, verify_corollary, verify_theorem
from .tpp import is_tpp_definitional, is_tpp_quotient, load_triple, triple_from_json_dict

log = logging.getLogger("tppforge")

EXIT_OK = 0
EXIT_VIOLATION = 2
EXIT_TRUNCATED = 3
EXIT_INPUT = 4

INPUT_ERRORS = (ParseError, InvalidAction, TableInvalid, CapExceeded, OSError, ValueError, json.JSONDecodeError)


class InputError(Exception):
    pass


# ---------------------------------------------------------------------------
# Helpers


def parse_mode(text: str) -> tuple[str, tuple[int, int, int] | None]:
    """``beta`` | ``beta0`` | ``type=a,b,c``."""
    text = text.strip()
    if text == "beta":
        return "full_capacity", None
    if text == "beta0":
        return "subgroup_capacity", None
    m = re.fullmatch(r"type\s*=\s*(\d+)\s*,\s*(\d+)\s*,\s*(\d+)", text)
    if m:
        typ = tuple(int(x) for x in m.groups())
        if min(typ) < 1:
            raise InputError("type parameters must be >= 1")
        return "fixed_type", typ
    raise InputError(f"unknown mode {text!r}; expected beta, beta0 or type=a,b,c")


def make_config(args: argparse.Namespace) -> SearchConfig:
    mode, typ = parse_mode(args.mode)
    return SearchConfig(
        mode=mode,
        type=typ,
        node_budget=args.node_budget,
        time_budget=args.time_budget,
        thread_count=args.threads,
        report_all_witness_types=args.all_witnesses,
        max_order=args.max_order,
    )


def slug(spec: str) -> str:
    return re.sub(r"[^A-Za-z0-9]+", "_", spec).strip("_") or "group"


def csv_text(header: Sequence[str], rows: Sequence[Sequence]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    writer.writerows(rows)
    return buf.getvalue()


def _json_text(payload) -> str:
    return json.dumps(payload, indent=2, sort_keys=False) + "\n"


def _emit(args, stem: str, payload: dict | None, header=None, rows=None) -> None:
    """Write JSON and/or CSV under ``--out``, or to stdout."""
    fmt = getattr(args, "format", "json")
    out = getattr(args, "out", None)
    pieces = []
    if fmt in ("json", "both") and payload is not None:
        pieces.append((".json", _json_text(payload)))
    if fmt in ("csv", "both") and header is not None:
        pieces.append((".csv", csv_text(header, rows)))
    if out:
        directory = Path(out)
        directory.mkdir(parents=True, exist_ok=True)
        for ext, text in pieces:
            (directory / f"{stem}{ext}").write_text(text, encoding="utf-8")
    else:
        for _, text in pieces:
            sys.stdout.write(text)


def _load_group(args) -> GroupTable:
    base = Path(args.base_dir) if getattr(args, "base_dir", None) else None
    return group_from_text(args.group, base)


def _load_json_arg(text: str):
    """Inline JSON, or a path to a JSON file."""
    stripped = text.lstrip()
    if stripped.startswith(("{", "[")):
        return json.loads(text)
    with open(text, encoding="utf-8") as fh:
        return json.load(fh)


# ---------------------------------------------------------------------------
# Subcommands


def cmd_build(args) -> int:
    g = _load_group(args)
    subgroups = enumerate_subgroups(g)
    pairs = find_abelian_normal_prime_index(g, subgroups)
    entry = catalog_entry(args.group, Path(args.base_dir) if args.base_dir else None)
    summary = {
        "group": g.describe(),
        "order": g.order,
        "axioms_ok": verify_group_axioms(g),
        "subgroup_count": len(subgroups),
        "abelian_normal_prime_index": [{"order": h.order, "p": p} for h, p in pairs],
        "tags": entry.tags,
    }
    if args.out:
        directory = Path(args.out)
        directory.mkdir(parents=True, exist_ok=True)
        path = directory / f"{slug(args.group)}.json"
        dump_table(g, path)
        summary["table_file"] = str(path)
    sys.stdout.write(_json_text(summary))
    return EXIT_OK


def cmd_check(args) -> int:
    g = _load_group(args)
    result: dict = {"group": g.describe(), "order": g.order, "axioms_ok": verify_group_axioms(g)}
    if args.triple:
        payload = _load_json_arg(args.triple)
        tr = triple_from_json_dict(g, payload)
        quotient = is_tpp_quotient(g, tr)
        definitional = is_tpp_definitional(g, tr)
        if quotient != definitional:
            log.error("TPP oracles disagree on %s", tr)
            return EXIT_VIOLATION
        result.update(triple=tr.to_json_dict(), type=list(tr.type), size=tr.size, is_tpp=quotient)
    sys.stdout.write(_json_text(result))
    return EXIT_OK


def cmd_search(args) -> int:
    g = _load_group(args)
    cfg = make_config(args)
    report = run_search(g, cfg)
    _emit(args, slug(args.group), report.to_json_dict(), CSV_HEADER, [csv_row(report)])
    if not report.exhausted:
        log.warning("%s: search budget exhausted before completion; result is a lower bound", report.group)
        return EXIT_TRUNCATED
    return EXIT_OK


def _theorem_payload(g: GroupTable, report: SearchReport | None = None) -> dict:
    subgroups = enumerate_subgroups(g)
    theorem = verify_theorem(g, report, subgroups)
    corollary = verify_corollary(g, report, subgroups)
    return {
        "group": g.describe(),
        "order": g.order,
        "applicable": bool(theorem),
        "theorem": [t.to_json_dict() for t in theorem],
        "corollary": [
            {"check": c.name, "p": c.p, "h_order": c.h_order, "claim": c.claim, "ok": c.ok} for c in corollary.checks
        ],
    }


def cmd_verify_theorem(args) -> int:
    if args.group:
        groups = [_load_group(args)]
    elif args.catalog:
        groups, bad = _catalog_groups(args.catalog, args.max_order)
        for line, err in bad:
            log.error("%s:%d: %s", args.catalog, line.lineno, err)
    else:
        raise InputError("verify-theorem needs --group or --catalog")
    results = []
    rows = []
    status = EXIT_OK
    for g in groups:
        try:
            payload = _theorem_payload(g)
        except TheoremViolation as exc:
            log.error("THEOREM CHECK FAILED: %s", exc)
            payload = {"group": g.describe(), "order": g.order, "violation": str(exc)}
            status = EXIT_VIOLATION
        results.append(payload)
        for t in payload.get("theorem", []):
            rows.append(
                (payload["group"], payload["order"], t["h_order"], t["p"], *t["bound"], t["beta0"], *t["rho0"],
                 str(t["holds"]).lower(), str(t["equality"]).lower())
            )
    header = ("group", "order", "h_order", "p", "bound_num", "bound_den", "beta0", "rho0_num", "rho0_den", "holds", "equality")
    _emit(args, "theorem", {"results": results}, header, rows)
    return status


def cmd_conjecture_scan(args) -> int:
    groups, bad = _catalog_groups(args.catalog, args.max_order)
    for line, err in bad:
        log.error("%s:%d: %s", args.catalog, line.lineno, err)
    cfg = SearchConfig(
        node_budget=args.node_budget, time_budget=args.time_budget, thread_count=args.threads, max_order=args.max_order
    )
    try:
        scan = conjecture_scan(groups, max_order=args.max_order, cfg=cfg, beta_for_all=not args.cyclic_only)
    except TheoremViolation as exc:
        log.error("THEOREM CHECK FAILED: %s", exc)
        return EXIT_VIOLATION
    payload = {
        "rows": [dict(zip(SCAN_HEADER, r.as_csv())) for r in scan.rows],
        "counterexamples": [r.group for r in scan.counterexamples],
        "equality_cases": sorted({r.group for r in scan.equality_cases}),
        "inconclusive": [{"group": gname, "reason": why} for gname, why in scan.skipped],
    }
    _emit(args, "conjecture_scan", payload, SCAN_HEADER, [r.as_csv() for r in scan.rows])
    if scan.counterexamples:
        sys.stderr.write(
            "CONJECTURE COUNTEREXAMPLES: " + ", ".join(r.group for r in scan.counterexamples) + "\n"
        )
    if scan.skipped:
        return EXIT_TRUNCATED
    return EXIT_OK


def cmd_matmul(args) -> int:
    g = _load_group(args)
    tr = triple_from_json_dict(g, _load_json_arg(args.triple))
    if args.A is not None or args.B is not None:
        if args.A is None or args.B is None:
            raise InputError("matmul needs both --A and --B, or neither (random trials)")
        a, b = _load_json_arg(args.A), _load_json_arg(args.B)
        try:
            product = group_algebra_multiply(g, tr, a, b)
        except NotATppTriple as exc:
            sys.stderr.write(f"refused: {exc}\n")
            return EXIT_INPUT
        c = product.to_lists()
        sys.stdout.write(_json_text({"product": c, "matches_naive": c == naive_multiply(a, b)}))
        return EXIT_OK
    try:
        trial = validate_triple(g, tr, trials=args.trials, seed=args.seed)
    except NotATppTriple as exc:
        sys.stderr.write(f"refused: {exc}\n")
        return EXIT_INPUT
    sys.stdout.write(_json_text({"trials": trial.trials, "mismatches": trial.mismatches, "matches_naive": trial.ok}))
    return EXIT_OK if trial.ok else EXIT_VIOLATION


# ---------------------------------------------------------------------------
# Batch runs


def _catalog_groups(path, max_order: int | None) -> tuple[list[GroupTable], list]:
    path = Path(path)
    groups, bad = [], []
    for line in read_catalog(path):
        try:
            g = group_from_text(line.text, path.parent)
        except INPUT_ERRORS + (TppForgeError,) as exc:
            bad.append((line, str(exc)))
            continue
        if max_order is None or g.order <= max_order:
            groups.append(g)
    return groups, bad


@dataclass
class BatchResult:
    exit_code: int
    reports: list[SearchReport] = field(default_factory=list)
    failures: list[tuple[str, str]] = field(default_factory=list)
    violations: list[str] = field(default_factory=list)
    truncated: list[str] = field(default_factory=list)
    files: list[Path] = field(default_factory=list)


def run_batch(
    catalog: str | Path,
    mode: str,
    cfg_overrides: dict | None = None,
    out_dir: str | Path = "tppforge-out",
    fmt: str = "both",
) -> BatchResult:
    """Search every catalog group; write one JSON per group plus ``results.csv``.

    In ``beta0`` mode the theorem and corollary checks are attached to each
    group's JSON. Bad catalog lines are reported and skipped.
    """
    search_mode, typ = parse_mode(mode)
    cfg = SearchConfig(mode=search_mode, type=typ, **(cfg_overrides or {}))
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    result = BatchResult(EXIT_OK)
    rows = []
    path = Path(catalog)
    for line in read_catalog(path):
        try:
            g = group_from_text(line.text, path.parent)
            report = run_search(g, cfg)
        except INPUT_ERRORS + (TppForgeError,) as exc:
            result.failures.append((f"line {line.lineno}: {line.text}", str(exc)))
            log.error("%s:%d: %s", path, line.lineno, exc)
            continue
        payload = {"spec": line.text, **report.to_json_dict()}
        if search_mode == "subgroup_capacity":
            try:
                extra = _theorem_payload(g, report)
                payload["theorem"], payload["corollary"] = extra["theorem"], extra["corollary"]
            except TheoremViolation as exc:
                log.error("THEOREM CHECK FAILED: %s", exc)
                payload["violation"] = str(exc)
                result.violations.append(line.text)
            except SearchNotExhausted:
                pass
        if not report.exhausted:
            result.truncated.append(line.text)
        result.reports.append(report)
        rows.append(csv_row(report))
        if fmt in ("json", "both"):
            target = out / f"{slug(line.text)}.json"
            target.write_text(_json_text(payload), encoding="utf-8")
            result.files.append(target)
    if fmt in ("csv", "both"):
        target = out / "results.csv"
        target.write_text(csv_text(CSV_HEADER, rows), encoding="utf-8")
        result.files.append(target)
    summary = {
        "groups": len(result.reports),
        "failures": [{"line": where, "error": err} for where, err in result.failures],
        "violations": result.violations,
        "truncated": result.truncated,
    }
    target = out / "summary.json"
    target.write_text(_json_text(summary), encoding="utf-8")
    result.files.append(target)
    if result.violations:
        result.exit_code = EXIT_VIOLATION
    elif result.failures:
        result.exit_code = EXIT_INPUT
    elif result.truncated:
        result.exit_code = EXIT_TRUNCATED
    return result


def cmd_batch(args) -> int:
    overrides = dict(
        node_budget=args.node_budget,
        time_budget=args.time_budget,
        thread_count=args.threads,
        report_all_witness_types=args.all_witnesses,
        max_order=args.max_order,
    )
    result = run_batch(args.catalog, args.mode, overrides, args.out or "tppforge-out", args.format)
    for where, err in result.failures:
        sys.stderr.write(f"skipped {where}: {err}\n")
    sys.stdout.write(f"{len(result.reports)} groups processed, {len(result.failures)} failed\n")
    return result.exit_code


# ---------------------------------------------------------------------------
# Parser


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="tppforge", description="Triple product property search and verification.")
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True)

    def group_args(p, required=True):
        p.add_argument("--group", required=required, help="group spec, e.g. sd:7,3,2 or prod:cyclic:4*cyclic:4")
        p.add_argument("--base-dir", help="directory for resolving file: specs")

    def search_args(p):
        p.add_argument("--threads", type=int, default=1)
        p.add_argument("--node-budget", type=int)
        p.add_argument("--time-budget", type=float, help="seconds")
        p.add_argument("--max-order", type=int, default=32, help="largest order for full-capacity search")

    def output_args(p, default="json"):
        p.add_argument("--out", help="output directory (default: stdout)")
        p.add_argument("--format", choices=("json", "csv", "both"), default=default)

    p = sub.add_parser("build", help="build a group and summarize it")
    group_args(p)
    p.add_argument("--out", help="directory to write the Cayley table JSON")
    p.set_defaults(func=cmd_build)

    p = sub.add_parser("check", help="check group axioms and, optionally, a triple")
    group_args(p)
    p.add_argument("--triple", help='triple JSON or path: {"S": [...], "T": [...], "U": [...]}')
    p.set_defaults(func=cmd_check)

    p = sub.add_parser("search", help="exact capacity search")
    group_args(p)
    p.add_argument("--mode", default="beta", help="beta | beta0 | type=a,b,c")
    p.add_argument("--all-witnesses", action="store_true", help="report one witness per optimal type")
    search_args(p)
    output_args(p)
    p.set_defaults(func=cmd_search)

    p = sub.add_parser("verify-theorem", help="check the subgroup bound and its corollary")
    group_args(p, required=False)
    p.add_argument("--catalog")
    p.add_argument("--max-order", type=int, default=64)
    output_args(p)
    p.set_defaults(func=cmd_verify_theorem)

    p = sub.add_parser("conjecture-scan", help="compare full capacity with the bound for cyclic normal subgroups")
    p.add_argument("--catalog", required=True)
    p.add_argument("--cyclic-only", action="store_true", help="skip the full search for groups outside the conjecture")
    search_args(p)
    output_args(p, default="csv")
    p.set_defaults(func=cmd_conjecture_scan)

    p = sub.add_parser("matmul", help="multiply matrices through a triple")
    group_args(p)
    p.add_argument("--triple", required=True)
    p.add_argument("--A", help="|S|x|T| integer matrix (JSON or path)")
    p.add_argument("--B", help="|T|x|U| integer matrix (JSON or path)")
    p.add_argument("--trials", type=int, default=100)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_matmul)

    p = sub.add_parser("batch", help="search every group in a catalog")
    p.add_argument("--catalog", required=True)
    p.add_argument("--mode", default="beta0")
    p.add_argument("--all-witnesses", action="store_true")
    search_args(p)
    output_args(p, default="both")
    p.set_defaults(func=cmd_batch)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except TheoremViolation as exc:
        sys.stderr.write(f"invariant violation: {exc}\n")
        return EXIT_VIOLATION
    except SearchNotExhausted as exc:
        sys.stderr.write(f"{exc}\n")
        return EXIT_TRUNCATED
    except (InputError, TppForgeError) + INPUT_ERRORS as exc:
        sys.stderr.write(f"input error: {exc}\n")
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
