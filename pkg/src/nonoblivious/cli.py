"""Command-line interface: ``nonoblivious <subcommand> ...``.

Exit codes: 0 success, 1 usage or validation error, 2 the solve ended with
Error status, 3 ``bench`` found a guarantee violation.
"""
from __future__ import annotations

import argparse
import csv
import json
import sys
import warnings
from pathlib import Path

from . import __version__
from .bits import elements
from .errors import InstanceError
from .experiment import SUITES, desk_suite, parse_config, rows_to_csv, run_experiment, suite_config_json, violations
from .instances import MATROID_KINDS, OBJECTIVE_KINDS, generate, load_instance, write_instance
from .matroids import verify_matroid_axioms
from .objectives import exact_curvature, verify_monotone_submodular
from .potential import coefficient_table
from .seeding import derive_seed
from .solvers import ALGORITHMS, ERROR, SolveConfig, brute_force_opt, solve

EXIT_OK, EXIT_USAGE, EXIT_ERROR_STATUS, EXIT_VIOLATION = 0, 1, 2, 3


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        sys.exit(EXIT_USAGE)


def _dump(obj):
    json.dump(obj, sys.stdout, indent=2, sort_keys=True)
    sys.stdout.write("\n")


def cmd_solve(args) -> int:
    inst = load_instance(args.instance)
    m, f = inst.build_matroid(), inst.build_oracle()
    c = args.c if args.c is not None else (inst.curvature or 1.0)
    seed = args.seed
    attempts = []
    for k in range(args.retry + 1):
        f.calls = 0
        rep = solve(m, f, SolveConfig(args.algo, c, args.epsilon, args.alpha, seed))
        attempts.append({"seed": seed, "status": rep.status})
        if rep.status != ERROR:
            break
        seed = derive_seed(args.seed, "retry", k + 1)
    out = rep.to_dict()
    if len(attempts) > 1:
        out["attempts"] = attempts
    _dump(out)
    return EXIT_ERROR_STATUS if rep.status == ERROR else EXIT_OK


def cmd_opt(args) -> int:
    inst = load_instance(args.instance)
    m, f = inst.build_matroid(), inst.build_oracle()
    S, val = brute_force_opt(m, f.value, args.limit)
    _dump({"set": elements(S), "value": val})
    return EXIT_OK


def cmd_verify(args) -> int:
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        inst = load_instance(args.instance)
    m, f = inst.build_matroid(), inst.build_oracle()
    report = {"n": inst.n, "rank": m.rank, "matroid": inst.matroid["kind"], "objective": inst.objective["kind"]}
    if inst.matroid["kind"] == "explicit":
        report["matroid_axioms"] = verify_matroid_axioms(m.independents, inst.n).ok
    if inst.n <= 20:
        sub = verify_monotone_submodular(f)
        report["monotone_submodular"] = sub.ok
        if not sub.ok:
            report["reason"] = sub.reason
        report["exact_curvature"] = exact_curvature(f)
    report["declared_curvature"] = inst.curvature
    report["warnings"] = inst.warnings
    _dump(report)
    return EXIT_OK if report.get("monotone_submodular", True) else EXIT_USAGE


def cmd_gen(args) -> int:
    if args.suite:
        if not args.out:
            raise InstanceError("--suite needs --out DIR")
        insts, configs = desk_suite(args.suite, args.seed)
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        for inst in insts:
            (out / f"{inst.id}.json").write_bytes(write_instance(inst))
        (out / "config.json").write_text(suite_config_json(configs, args.seed))
        print(f"wrote {len(insts)} instances and config.json to {out}", file=sys.stderr)
        return EXIT_OK
    inst = generate(args.kind, args.matroid, args.seed, n=args.n, rank=args.rank, parts=args.parts,
                    capacity=args.capacity, universe=args.universe, density=args.density,
                    weight_law=args.weight_law, budget_factor=args.budget_factor,
                    curvature_cap=args.curvature_cap, instance_id=args.id)
    data = write_instance(inst)
    if args.out:
        Path(args.out).write_bytes(data)
    else:
        sys.stdout.buffer.write(data)
    return EXIT_OK


def cmd_coeffs(args) -> int:
    t = coefficient_table(args.c, args.amax)
    w = csv.writer(sys.stdout, lineterminator="\n")
    if args.table == "m":
        w.writerow(["a", "b", "m_ab"])
        for a in range(args.amax + 1):
            for b in range(a + 1):
                w.writerow([a, b, repr(float(t.m[a, b]))])
    elif args.table == "tau":
        w.writerow(["k", "tau_k"])
        for k in range(1, args.amax + 1):
            w.writerow([k, repr(float(t.tau[k]))])
    else:
        w.writerow(["k", "ell_k"])
        for k in range(len(t.ell)):
            w.writerow([k, repr(float(t.ell[k]))])
    return EXIT_OK


def cmd_bench(args) -> int:
    suite = Path(args.suite)
    files = sorted(p for p in suite.glob("*.json") if p.name != "config.json")
    if not files:
        raise InstanceError(f"no instance files in {suite}")
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        insts = [load_instance(p) for p in files]
    config_path = Path(args.config) if args.config else suite / "config.json"
    configs, master = parse_config(config_path.read_text())
    if args.master_seed is not None:
        master = args.master_seed
    rows = run_experiment(insts, configs, master, workers=args.workers, timing=not args.no_timing)
    text = rows_to_csv(rows)
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)
    bad = violations(rows)
    for r in bad:
        print(f"violation: {r.instance_id} {r.algorithm} seed={r.seed} ratio={r.ratio} < {r.guarantee}",
              file=sys.stderr)
    return EXIT_VIOLATION if bad else EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="nonoblivious", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    s = sub.add_parser("solve", help="run one solver on an instance; prints a JSON report")
    s.add_argument("--instance", required=True)
    s.add_argument("--algo", choices=ALGORITHMS, default="nonoblivious-exact")
    s.add_argument("--c", type=float, help="curvature bound (default: declared, else 1)")
    s.add_argument("--epsilon", type=float, default=0.1)
    s.add_argument("--alpha", type=float, default=1.0)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--retry", type=int, default=0, metavar="K",
                   help="on Error status, retry up to K times with derived seeds")
    s.set_defaults(func=cmd_solve)

    s = sub.add_parser("opt", help="brute-force optimum over all bases")
    s.add_argument("--instance", required=True)
    s.add_argument("--limit", type=int, default=1_000_000, help="maximum number of candidate bases")
    s.set_defaults(func=cmd_opt)

    s = sub.add_parser("verify", help="matroid axioms, submodularity and curvature report")
    s.add_argument("--instance", required=True)
    s.set_defaults(func=cmd_verify)

    s = sub.add_parser("gen", help="generate a random instance (or a whole desk suite)")
    s.add_argument("--kind", choices=OBJECTIVE_KINDS, default="random-coverage")
    s.add_argument("--matroid", choices=MATROID_KINDS, default="uniform-matroid")
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--n", type=int, default=10)
    s.add_argument("--rank", type=int, default=3)
    s.add_argument("--parts", type=int)
    s.add_argument("--capacity", type=int, default=1)
    s.add_argument("--universe", type=int)
    s.add_argument("--density", type=float, default=0.3)
    s.add_argument("--weight-law", choices=("exponential", "uniform", "unit"), default="exponential")
    s.add_argument("--budget-factor", type=float, default=0.5, help="'inf' gives a linear objective")
    s.add_argument("--curvature-cap", type=float)
    s.add_argument("--id")
    s.add_argument("--suite", choices=SUITES, help="write a desk suite plus config.json to --out DIR")
    s.add_argument("--out")
    s.set_defaults(func=cmd_gen)

    s = sub.add_parser("coeffs", help="dump potential coefficients as CSV")
    s.add_argument("--c", type=float, required=True)
    s.add_argument("--amax", type=int, required=True)
    s.add_argument("--table", choices=("m", "tau", "ell"), default="m")
    s.set_defaults(func=cmd_coeffs)

    s = sub.add_parser("bench", help="run a config over a directory of instances; writes CSV")
    s.add_argument("--suite", required=True, help="directory of instance JSON files")
    s.add_argument("--config", help="config JSON (default: DIR/config.json)")
    s.add_argument("--out", help="CSV path (default: stdout)")
    s.add_argument("--workers", type=int, default=1)
    s.add_argument("--master-seed", type=int)
    s.add_argument("--no-timing", action="store_true", help="leave wall_time blank for byte-stable output")
    s.set_defaults(func=cmd_bench)
    return p


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except SystemExit as exc:  # --help, --version and usage errors
        return exc.code if isinstance(exc.code, int) else EXIT_USAGE
    try:
        return args.func(args)
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
