"""Command-line workbench.

Commands::

    qdelcodes types enum   --n N --ell L
    qdelcodes types search --n N --ell L --t T [--strategy exhaustive|greedy]
    qdelcodes code verify  --code NAME|PATH [--t T]
    qdelcodes code export  --code NAME
    qdelcodes marker check --n N --t T
    qdelcodes sim run      --code NAME|PATH --trials K [--log trials.csv]

Exit codes: 0 success, 1 a check failed, 2 invalid input, 3 resource cutoff.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import io
import itertools
import json
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from .composed import (
    CATALOG_NAMES,
    ComposedCode,
    InnerCode,
    catalog_entry,
    deletion_patterns,
    delete_qudits,
    end_to_end_simulate,
    haar_state,
    locate_and_strip,
)
from .hilbert import fidelity, partial_trace
from .marker import verify_lemma_exhaustive
from .picode import (
    BasisCode,
    DecodeFailure,
    NotCorrectableError,
    PiCode,
    apply_recovery,
    build_recovery,
    check_erasure_condition,
    check_permutation_invariance,
    code_metrics,
    correct_deletion,
    logical_state,
)
from .typeclasses import (
    TypeSet,
    class_members,
    class_sequence_count,
    enumerate_classes,
    enumerate_types,
    is_suitable,
    search_suitable,
    sequence_count,
)

DEFAULT_SEED = 20210421
DEFAULT_TOLERANCE = 1e-9

EXIT_OK, EXIT_FAILED, EXIT_INPUT, EXIT_CUTOFF = 0, 1, 2, 3


class InputError(ValueError):
    pass


# code specs -------------------------------------------------------------------


def load_code(spec: str | dict):
    """Catalog name, path to a JSON code file, or an already-parsed JSON object."""
    if isinstance(spec, str):
        if spec in CATALOG_NAMES:
            return catalog_entry(spec)
        path = Path(spec)
        if not path.exists():
            raise InputError(f"{spec!r} is neither a catalog code ({', '.join(CATALOG_NAMES)}) nor a file")
        spec = json.loads(path.read_text())
    kind = spec.get("kind")
    if kind == "pi_code":
        return PiCode.from_json(spec)
    if kind == "basis_code":
        return BasisCode.from_json(spec)
    if kind == "composed":
        t = int(spec["t"])
        inner = load_code(spec["inner"])
        if isinstance(inner, (ComposedCode, InnerCode)):
            inner = inner.inner if isinstance(inner, ComposedCode) else inner
            inner = InnerCode(inner.basis, t, inner.name)
        else:
            inner = InnerCode(inner.basis, t)
        return ComposedCode(inner)
    raise InputError(f"unknown code kind {kind!r}")


def code_to_json(code) -> dict:
    if isinstance(code, ComposedCode):
        inner = code.inner.name or {"kind": "basis_code", **BasisCode(code.inner.basis).to_json()}
        return {"kind": "composed", "t": code.t, "inner": inner}
    if isinstance(code, InnerCode):
        return BasisCode(code.basis).to_json()
    return code.to_json()


# report plumbing --------------------------------------------------------------


def _hash_input(echo: dict) -> str:
    blob = json.dumps(echo, sort_keys=True, separators=(",", ":")).encode()
    return hashlib.sha256(blob).hexdigest()


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.floating,)):
        return float(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    return obj


def make_report(echo: dict, results: dict, deviations: dict, elapsed: float | None) -> dict:
    report = {
        "command": echo,
        "input_hash": _hash_input(echo),
        "results": results,
        "deviations": deviations,
        "artifact_version": __version__,
    }
    if elapsed is not None:
        report["wall_clock_seconds"] = elapsed
    return _jsonable(report)


def dump_json(report: dict) -> str:
    return json.dumps(report, sort_keys=True, indent=2, allow_nan=False) + "\n"


def _fmt(v) -> str:
    if isinstance(v, float):
        return format(v, ".17g")
    if isinstance(v, (list, tuple)):
        return " ".join(str(x) for x in v)
    return str(v)


def dump_csv(header: list[str], rows: list[list]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([_fmt(v) for v in row])
    return buf.getvalue()


# commands ---------------------------------------------------------------------


def cmd_types_enum(args) -> tuple[int, dict, dict, tuple | None]:
    types = enumerate_types(args.n, args.ell)
    classes = enumerate_classes(args.n, args.ell)
    results = {
        "n": args.n,
        "ell": args.ell,
        "num_types": len(types),
        "num_classes": len(classes),
        "types": [{"counts": list(p.counts), "sequences": sequence_count(p)} for p in types],
        "classes": [
            {
                "canonical": list(c.canonical.counts),
                "members": len(class_members(c)),
                "sequences": class_sequence_count(c),
            }
            for c in classes
        ],
    }
    rows = [["type", list(p.counts), sequence_count(p)] for p in types]
    rows += [["class", list(c.canonical.counts), class_sequence_count(c)] for c in classes]
    return EXIT_OK, results, {}, (["kind", "counts", "sequences"], rows)


def cmd_types_search(args):
    res = search_suitable(
        args.n, args.ell, args.t, args.strategy, args.max_M, args.max_classes, args.max_subsets
    )
    results = {
        "n": args.n,
        "ell": args.ell,
        "t": args.t,
        "strategy": args.strategy,
        "truncated": res.truncated,
        "truncation_reason": res.reason,
        "search_nodes": res.examined,
        "max_M": res.max_M,
        "sets": [s.to_json() for s in res.sets],
    }
    rows = [[i, s.M, ";".join(" ".join(map(str, c.canonical.counts)) for c in s.classes)] for i, s in enumerate(res.sets)]
    if res.truncated:
        code = EXIT_CUTOFF
    elif args.require_information and res.max_M < 2:
        code = EXIT_FAILED
    else:
        code = EXIT_OK
    return code, results, {}, (["index", "M", "classes"], rows)


def _alphas(rng: np.random.Generator, M: int, count: int) -> list[np.ndarray]:
    basis = [np.eye(M)[k] for k in range(M)]
    return basis + [haar_state(rng, M) for _ in range(count)]


def _verify_erasures(basis, n: int, t: int, tol: float, checks: list, deviations: dict) -> bool:
    ok = True
    for k in range(1, t + 1):
        for erased in itertools.combinations(range(1, n + 1), k):
            rep = check_erasure_condition(basis, erased, tol)
            checks.append({"check": "erasure_condition", **rep.to_json()})
            deviations[f"erasure{list(erased)}"] = max(rep.max_cross_deviation, rep.max_equalness_deviation)
            ok &= rep.passed
    return ok


def cmd_code_verify(args):
    code = load_code(args.code)
    tol = args.tolerance
    rng = np.random.default_rng(args.seed)
    checks: list[dict] = []
    deviations: dict[str, float] = {}
    ok = True

    if isinstance(code, InnerCode):
        code = BasisCode(code.basis)
    if isinstance(code, ComposedCode):
        t = code.t if args.t is None else args.t
        if t != code.t:
            code = ComposedCode(InnerCode(code.inner.basis, t, code.inner.name))
        ok &= _verify_erasures(code.inner.basis, code.n, t, tol, checks, deviations)
        worst = 0.0
        for deleted in deletion_patterns(code.n, t):
            for alpha in _alphas(rng, code.M, args.trials):
                rho = delete_qudits(code.encode(alpha), deleted, t)
                located, inner_rho = locate_and_strip(rho, code.n, t)
                f = fidelity(logical_state(alpha), apply_recovery(code.recovery(located), inner_rho))
                worst = max(worst, 1 - f)
                ok &= located == deleted and f >= 1 - tol
        checks.append({"check": "deletion_decode", "patterns": len(deletion_patterns(code.n, t)), "max_infidelity": worst})
        deviations["deletion_decode"] = worst
    else:
        t = args.t if args.t is not None else (code.type_set.t if isinstance(code, PiCode) else 1)
        n = code.n
        if isinstance(code, PiCode):
            inv, dev = check_permutation_invariance(code)
            checks.append({"check": "permutation_invariance", "pass": inv, "max_deviation": dev})
            deviations["permutation_invariance"] = dev
            ts = TypeSet(code.type_set.classes, t)
            suit = is_suitable(ts)
            witness = [list(q.counts) for q in suit.witness] if suit.witness else None
            checks.append({"check": "suitability", "t": t, "pass": suit.suitable, "witness": witness})
            ok &= inv and suit.suitable
        erasures_ok = _verify_erasures(code.basis, n, t, tol, checks, deviations)
        ok &= erasures_ok
        worst = 0.0
        if isinstance(code, PiCode) and t == 1:
            decoded = True
            try:
                for pos in range(1, n + 1):
                    for alpha in _alphas(rng, code.M, args.trials):
                        rho = delete_qudits(code.encode(alpha), [pos])
                        worst = max(worst, 1 - fidelity(logical_state(alpha), correct_deletion(code, rho)))
            except (NotCorrectableError, DecodeFailure) as exc:
                decoded, worst = False, None
                checks.append({"check": "deletion_decode", "pass": False, "error": str(exc)})
            else:
                checks.append({"check": "deletion_decode", "pass": worst <= tol, "max_infidelity": worst})
            ok &= decoded and worst is not None and worst <= tol
            deviations["deletion_decode"] = worst
        elif erasures_ok:
            for k in range(1, t + 1):
                for erased in itertools.combinations(range(1, n + 1), k):
                    rmap = build_recovery(code.basis, erased)
                    keep = [p for p in range(1, n + 1) if p not in erased]
                    for alpha in _alphas(rng, code.M, args.trials):
                        rho = partial_trace(code.encode(alpha), keep)
                        worst = max(worst, 1 - fidelity(logical_state(alpha), apply_recovery(rmap, rho)))
            checks.append({"check": "erasure_decode", "pass": worst <= tol, "max_infidelity": worst})
            ok &= worst <= tol
            deviations["erasure_decode"] = worst
        else:
            checks.append({"check": "decode", "pass": False, "skipped": "erasure condition failed"})

    metrics = code_metrics(code).to_json()
    results = {"pass": bool(ok), "t": t, "metrics": metrics, "checks": checks}
    rows = [[c["check"], c.get("pass", ""), c.get("erased_set", "")] for c in checks]
    return (EXIT_OK if ok else EXIT_FAILED), results, deviations, (["check", "pass", "erased_set"], rows)


def cmd_code_export(args):
    code = load_code(args.code)
    return EXIT_OK, {"code": code_to_json(code)}, {}, None


def cmd_marker_check(args):
    rep = verify_lemma_exhaustive(args.n, args.t)
    code = EXIT_CUTOFF if rep.truncated else (EXIT_OK if rep.ok else EXIT_FAILED)
    return code, rep.to_json(), {}, (["n", "t", "ok", "cases"], [[rep.n, rep.t, rep.ok, rep.cases]])


def cmd_sim_run(args):
    code = load_code(args.code)
    rep = end_to_end_simulate(code, args.trials, args.seed, args.tolerance, args.threads)
    header = ["trial", "deleted_positions", "fidelity"]
    rows = [[r.trial, list(r.deleted_positions), r.fidelity] for r in rep.records]
    if args.log:
        Path(args.log).write_text(dump_csv(header, rows))
    results = rep.to_json()
    results["errors"] = [{"trial": r.trial, "error": r.error} for r in rep.records if r.error]
    deviations = {"max_infidelity": 1 - rep.min_fidelity}
    return (EXIT_OK if rep.failures == 0 else EXIT_FAILED), results, deviations, (header, rows)


# parser -----------------------------------------------------------------------


def _positive(v: str) -> int:
    i = int(v)
    if i < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {v}")
    return i


def _nonneg(v: str) -> int:
    i = int(v)
    if i < 0:
        raise argparse.ArgumentTypeError(f"expected a non-negative integer, got {v}")
    return i


def _add_globals(p: argparse.ArgumentParser, suppress: bool) -> None:
    d = (lambda v: argparse.SUPPRESS) if suppress else (lambda v: v)
    p.add_argument("--out", default=d(None), help="write the report here instead of stdout")
    p.add_argument("--format", choices=["json", "csv"], default=d("json"))
    p.add_argument("--seed", type=int, default=d(DEFAULT_SEED))
    p.add_argument("--tolerance", type=float, default=d(DEFAULT_TOLERANCE))
    p.add_argument("--threads", type=_positive, default=d(1))
    p.add_argument("--timing", action="store_true", default=d(False), help="include wall-clock time in the report")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="qdelcodes", description=__doc__.split("\n\n")[0], allow_abbrev=False)
    _add_globals(parser, suppress=False)
    groups = parser.add_subparsers(dest="group", required=True)
    common = argparse.ArgumentParser(add_help=False, allow_abbrev=False)
    _add_globals(common, suppress=True)

    types = groups.add_parser("types").add_subparsers(dest="action", required=True)
    p = types.add_parser("enum", parents=[common], help="list types and type classes")
    p.add_argument("--n", type=_positive, required=True)
    p.add_argument("--ell", type=_positive, required=True)
    p.set_defaults(func=cmd_types_enum)

    p = types.add_parser("search", parents=[common], help="search for suitable type sets")
    p.add_argument("--n", type=_positive, required=True)
    p.add_argument("--ell", type=_positive, required=True)
    p.add_argument("--t", type=_nonneg, default=1)
    p.add_argument("--strategy", choices=["exhaustive", "greedy"], default="exhaustive")
    p.add_argument("--max-M", dest="max_M", type=_positive, default=None)
    p.add_argument("--max-classes", type=_positive, default=40)
    p.add_argument("--max-subsets", type=_positive, default=10**6)
    p.add_argument("--require-information", action="store_true", help="fail unless some set has M >= 2")
    p.set_defaults(func=cmd_types_search)

    code = groups.add_parser("code").add_subparsers(dest="action", required=True)
    p = code.add_parser("verify", parents=[common], help="run every correctability check on a code")
    p.add_argument("--code", required=True, help=f"catalog name ({', '.join(CATALOG_NAMES)}) or JSON path")
    p.add_argument("--t", type=_positive, default=None)
    p.add_argument("--trials", type=_nonneg, default=3, help="random logical states per pattern")
    p.set_defaults(func=cmd_code_verify)

    p = code.add_parser("export", parents=[common], help="print the JSON description of a code")
    p.add_argument("--code", required=True)
    p.set_defaults(func=cmd_code_export)

    marker = groups.add_parser("marker").add_subparsers(dest="action", required=True)
    p = marker.add_parser("check", parents=[common], help="exhaustively verify marker position recovery")
    p.add_argument("--n", type=_positive, required=True)
    p.add_argument("--t", type=_positive, required=True)
    p.set_defaults(func=cmd_marker_check)

    sim = groups.add_parser("sim").add_subparsers(dest="action", required=True)
    p = sim.add_parser("run", parents=[common], help="Monte Carlo encode/delete/decode")
    p.add_argument("--code", required=True)
    p.add_argument("--trials", type=_positive, default=100)
    p.add_argument("--log", default=None, help="per-trial CSV log")
    p.set_defaults(func=cmd_sim_run)
    return parser


_ECHO_SKIP = {"func", "out", "log", "timing", "threads"}


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    echo = {k: v for k, v in sorted(vars(args).items()) if k not in _ECHO_SKIP}
    start = time.perf_counter()
    try:
        code, results, deviations, table = args.func(args)
    except NotCorrectableError as exc:
        print(f"check failed: {exc}", file=sys.stderr)
        return EXIT_FAILED
    except (InputError, ValueError, KeyError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    elapsed = time.perf_counter() - start
    print(f"{args.group} {args.action}: exit {code} in {elapsed:.3f}s", file=sys.stderr)

    if args.format == "csv":
        if table is None:
            print("error: this command has no CSV form", file=sys.stderr)
            return EXIT_INPUT
        text = dump_csv(*table)
    else:
        text = dump_json(make_report(echo, results, deviations, elapsed if args.timing else None))
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)
    return code


if __name__ == "__main__":
    sys.exit(main())
