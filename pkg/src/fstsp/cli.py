"""Command-line entry point: ``solve``, ``emit``, ``oracle`` and ``bench``.

Exit codes: 0 success, 2 usage error, 3 unreadable or invalid data,
4 instance too large for the requested exact method.
"""
from __future__ import annotations

import argparse
import csv
import json
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import replace
from pathlib import Path

from .instance import (
    PRESETS,
    Instance,
    InstanceError,
    import_agatz,
    import_murray_dir,
    import_tsplib_fstsp,
    load_canonical,
)
from .mip import ModelError, adapt_murray, build_model, emit_lp, emit_mps
from .oracle import brute_force
from .search import GvnsParams, solve
from .solution import SizeError, save_solution, solution_to_dict

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_SIZE = 0, 2, 3, 4
CSV_FIELDS = (
    "instance", "variant", "seed", "best", "avg", "time_ms", "gap_pct",
    "tsp_seed_time_ms", "best_raw", "avg_raw",
)


class UsageError(Exception):
    pass


def read_instance(path, variant: str | None = None, drone: dict | None = None) -> Instance:
    """Load an instance file or Murray-style directory and apply ``variant``.

    ``drone`` may override ``e``, ``s_l`` and ``s_r``; a directory needs all three.
    """
    path = Path(path)
    drone = {k: v for k, v in (drone or {}).items() if v is not None}
    if path.is_dir():
        if set(drone) != {"e", "s_l", "s_r"}:
            raise InstanceError(f"{path}: directory instances need --endurance, --setup-launch and --setup-return")
        inst = import_murray_dir(path, drone["e"], drone["s_l"], drone["s_r"])
        return inst.with_variant(variant) if variant else inst
    if not path.is_file():
        raise InstanceError(f"{path}: no such file")
    try:
        text = path.read_text()
    except (OSError, UnicodeDecodeError) as exc:
        raise InstanceError(f"{path}: {exc}") from None
    if path.suffix.lower() == ".json" or text.lstrip().startswith("{"):
        inst = load_canonical(path)
    elif "NODE_COORD_SECTION" in text:
        inst = import_tsplib_fstsp(path, variant or "ponza")
    else:
        inst = import_agatz(path)
    if variant:
        inst = inst.with_variant(variant)
    return replace(inst, **drone) if drone else inst


def _round(x: float) -> str:
    return f"{x:.2f}"


def _csv_row(name, variant, seed, best, avg, time_ms, seed_ms, bks=None) -> dict:
    gap = "" if bks is None else _round(100.0 * (best - bks) / bks)
    return {
        "instance": name, "variant": variant, "seed": seed,
        "best": _round(best), "avg": _round(avg), "time_ms": _round(time_ms), "gap_pct": gap,
        "tsp_seed_time_ms": _round(seed_ms), "best_raw": repr(float(best)), "avg_raw": repr(float(avg)),
    }


def _write_rows(path, rows, append: bool) -> None:
    path = Path(path)
    new = not (append and path.exists() and path.stat().st_size > 0)
    with path.open("a" if append else "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=CSV_FIELDS)
        if new:
            w.writeheader()
        w.writerows(rows)


def _drone(args) -> dict:
    return {"e": args.endurance, "s_l": args.setup_launch, "s_r": args.setup_return}


def _params(inst: Instance, args) -> GvnsParams:
    return GvnsParams.for_size(inst.n, getattr(args, "k_max", None))


def cmd_solve(args) -> int:
    inst = read_instance(args.instance, args.variant, _drone(args))
    best, stats = solve(inst, args.seed, args.runs, args.time_limit, _params(inst, args))
    if args.out:
        save_solution(best, inst, args.out)
    if args.csv:
        rows, total = [], 0.0
        for r, st in enumerate(stats, 1):
            total += st.best_objective
            rows.append(_csv_row(inst.name, args.variant, st.seed, st.best_objective, total / r,
                                 st.time_ms, st.tsp_seed_time_ms))
        _write_rows(args.csv, rows, append=True)
    out = solution_to_dict(best, inst)
    out["runs"] = [{"seed": s.seed, "objective": s.best_objective, "time_ms": s.time_ms} for s in stats]
    print(json.dumps(out))
    return EXIT_OK


def cmd_emit(args) -> int:
    if args.variant == "tspd":
        raise UsageError("the formulation covers FSTSP only; variant tspd cannot be emitted")
    inst = read_instance(args.instance, args.variant, _drone(args))
    model = build_model(inst)
    if args.variant == "murray":
        model = adapt_murray(model, inst)
    (emit_lp if args.format == "lp" else emit_mps)(model, args.out)
    print(json.dumps(model.stats()))
    return EXIT_OK


def cmd_oracle(args) -> int:
    inst = read_instance(args.instance, args.variant, _drone(args))
    value, sol = brute_force(inst)
    print(json.dumps(solution_to_dict(sol, inst)))
    return EXIT_OK


def read_bks(path) -> dict[str, float]:
    """``instance,value`` pairs; a header row is skipped."""
    out = {}
    with Path(path).open(newline="") as fh:
        for row in csv.reader(fh):
            if len(row) < 2:
                continue
            try:
                out[row[0].strip()] = float(row[1])
            except ValueError:
                continue
    return out


def _bench_one(job):
    path, variant, seed, runs, time_limit, k_max = job
    inst = read_instance(path, variant)
    _, stats = solve(inst, seed, runs, time_limit, GvnsParams.for_size(inst.n, k_max))
    values = [s.best_objective for s in stats]
    return (inst.name, Path(path).stem, min(values), sum(values) / len(values),
            sum(s.time_ms for s in stats) / len(stats),
            sum(s.tsp_seed_time_ms for s in stats) / len(stats))


def threads() -> int:
    try:
        return max(1, int(os.environ.get("FSTSP_THREADS", "")))
    except ValueError:
        return os.cpu_count() or 1


def cmd_bench(args) -> int:
    folder = Path(args.dir)
    if not folder.is_dir():
        raise InstanceError(f"{folder}: not a directory")
    files = sorted(p for p in folder.iterdir() if p.is_file() and not p.name.startswith("."))
    bks = read_bks(args.bks) if args.bks else {}
    jobs = [(str(p), args.variant, args.seed, args.runs, args.time_limit, args.k_max) for p in files]
    workers = min(threads(), len(jobs)) or 1
    if workers == 1:
        results = [_bench_one(j) for j in jobs]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_bench_one, jobs))
    rows = [
        _csv_row(name, args.variant, args.seed, best, avg, t, seed_ms, bks.get(name, bks.get(stem)))
        for name, stem, best, avg, t, seed_ms in results
    ]
    _write_rows(args.csv, rows, append=False)
    print(json.dumps({"instances": len(rows), "csv": str(args.csv)}))
    return EXIT_OK


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_USAGE)


def _positive_int(s: str) -> int:
    v = int(s)
    if v < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {s}")
    return v


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="fstsp", description="Truck-and-drone routing solver.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def instance_flags(sp, variant_required=True):
        sp.add_argument("--instance", required=True, help="instance file or Murray-style directory")
        sp.add_argument("--variant", choices=PRESETS, required=variant_required, default=None)
        sp.add_argument("--endurance", type=float, default=None)
        sp.add_argument("--setup-launch", type=float, default=None)
        sp.add_argument("--setup-return", type=float, default=None)

    def search_flags(sp):
        sp.add_argument("--seed", type=int, default=0)
        sp.add_argument("--runs", type=_positive_int, default=1)
        sp.add_argument("--time-limit", type=float, default=None, help="seconds per run")
        sp.add_argument("--k-max", type=_positive_int, default=None)

    s = sub.add_parser("solve", help="run the metaheuristic")
    instance_flags(s)
    search_flags(s)
    s.add_argument("--out")
    s.add_argument("--csv")
    s.set_defaults(func=cmd_solve)

    e = sub.add_parser("emit", help="write the MIP model")
    instance_flags(e)
    e.add_argument("--format", choices=("lp", "mps"), required=True)
    e.add_argument("--out", required=True)
    e.set_defaults(func=cmd_emit)

    o = sub.add_parser("oracle", help="exact optimum by enumeration")
    instance_flags(o, variant_required=False)
    o.set_defaults(func=cmd_oracle)

    b = sub.add_parser("bench", help="solve every instance in a directory")
    b.add_argument("--dir", required=True)
    b.add_argument("--variant", choices=PRESETS, required=True)
    search_flags(b)
    b.add_argument("--csv", required=True)
    b.add_argument("--bks", help="CSV of instance,best-known value for the gap column")
    b.set_defaults(func=cmd_bench)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"fstsp: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except SizeError as exc:
        print(f"fstsp: error: {exc}", file=sys.stderr)
        return EXIT_SIZE
    except (InstanceError, ModelError, OSError) as exc:
        print(f"fstsp: error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
