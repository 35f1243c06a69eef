"""Command-line entry point.

    ptrmatrix gen --family one_clean -s 16 --seed 1 --out m.txt
    ptrmatrix eval m.txt
    ptrmatrix run m.txt --algorithm zpp --seed 7
    ptrmatrix sweep --sides 128,256,512 --families one_decoy --trials 20 --out sweep.csv
    ptrmatrix verify-lemma bad_index --cases 10000

Exit codes: 0 success, 1 usage error, 2 verification failure, 3 internal
assertion.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import sys

import numpy as np

from . import matrix as mx
from .analysis import bad_indices, bad_indices_brute, greedy_intervals, window_is_heavy
from .errors import AccountingViolation, RoundLimitExceeded
from .generators import FAMILIES, GenSpec, generate
from .one_sided import OneSidedConfig, one_sided_on
from .oracle import QueryOracle, transcript_to_jsonl
from .sweep import ALGORITHMS, SweepPlan, rows_to_csv, run_algorithm, run_sweep
from .zero_error import ZeroErrorConfig, derive_seed, zero_sided_on

EXIT_OK, EXIT_USAGE, EXIT_VERIFY, EXIT_INTERNAL = 0, 1, 2, 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _configs(overrides: dict, seed: int):
    one_fields = {f.name for f in dataclasses.fields(OneSidedConfig)}
    zero_fields = {f.name for f in dataclasses.fields(ZeroErrorConfig)}
    extra = {"max_rounds"}
    unknown = set(overrides) - one_fields - zero_fields - extra
    if unknown:
        raise UsageError(f"unknown config keys: {sorted(unknown)}")
    one = OneSidedConfig(**{k: v for k, v in overrides.items() if k in one_fields})
    zero = ZeroErrorConfig(**{k: v for k, v in overrides.items() if k in zero_fields})
    one = dataclasses.replace(one, rng_seed=seed)
    zero = dataclasses.replace(zero, rng_seed=seed)
    return one, zero, int(overrides.get("max_rounds", 1000))


def _parse_config(text):
    if not text:
        return {}
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as e:
        raise UsageError(f"--config is not valid JSON: {e}") from None
    if not isinstance(obj, dict):
        raise UsageError("--config must be a JSON object")
    return obj


def _parse_params(items):
    out = {}
    for item in items or []:
        key, sep, value = item.partition("=")
        if not sep:
            raise UsageError(f"--param expects key=value, got {item!r}")
        try:
            out[key] = json.loads(value)
        except json.JSONDecodeError:
            out[key] = value
    return out


def _int_list(text):
    return tuple(int(x) for x in text.split(",") if x.strip())


def _str_list(text):
    return tuple(x.strip() for x in text.split(",") if x.strip())


# --- subcommands ----------------------------------------------------------

def cmd_gen(args) -> int:
    if args.spec:
        spec = GenSpec.from_json(args.spec)
    else:
        if args.family is None or args.side is None:
            raise UsageError("gen needs --family and --side, or --spec")
        spec = GenSpec(args.side, args.family, _parse_params(args.param), args.seed)
    m = generate(spec)
    text = mx.dumps(m, args.format)
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    print(f"F={mx.evaluate_reference(m)}", file=sys.stderr if not args.out else sys.stdout)
    return EXIT_OK


def cmd_eval(args) -> int:
    m = mx.load(args.matrix)
    value = mx.evaluate_reference(m)
    out = {"s": m.s, "value": value}
    chain = mx.principal_chain(m)
    if chain is not None:
        out["chain"] = [[r.row, r.col] for r in chain.cells]
    print(json.dumps(out))
    return EXIT_OK


def cmd_run(args) -> int:
    m = mx.load(args.matrix)
    one, zero, max_rounds = _configs(_parse_config(args.config), args.seed)
    if args.transcript:
        if args.algorithm == "one_sided":
            o = QueryOracle(m, one.oracle_mode)
            rep = one_sided_on(o, one, args.seed)
        elif args.algorithm == "zero_sided":
            o = QueryOracle(m, zero.oracle_mode)
            rep = zero_sided_on(o, zero, args.seed)
        else:
            raise UsageError("--transcript is supported for one_sided and zero_sided")
        with open(args.transcript, "w") as fh:
            fh.write(transcript_to_jsonl(o.transcript(), m.s))
    else:
        rep = run_algorithm(args.algorithm, m, args.seed, one, zero, max_rounds)
    print(json.dumps(rep.to_json()))
    if rep.certificate is not None and not mx.verify_certificate(m, rep.certificate):
        print("certificate failed verification", file=sys.stderr)
        return EXIT_VERIFY
    return EXIT_OK


def cmd_sweep(args) -> int:
    one, zero, max_rounds = _configs(_parse_config(args.config), args.seed)
    params = json.loads(args.params) if args.params else {}
    plan = SweepPlan(sides=_int_list(args.sides), families=_str_list(args.families),
                     trials=args.trials, algorithms=_str_list(args.algorithms),
                     base_seed=args.seed, params=params, one_sided=one, zero_sided=zero,
                     max_rounds=max_rounds)
    rows = run_sweep(plan, jobs=args.jobs)
    text = rows_to_csv(rows)
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    seen = set()
    for r in rows:
        key = (r["family"], r["algorithm"])
        if key not in seen and r["slope"] != "":
            seen.add(key)
            print(f"slope {key[0]} {key[1]}: max {r['slope']:.4f} mean {r['slope_mean']:.4f}",
                  file=sys.stderr)
    return EXIT_OK


def _fuzz_gaps(rng, max_len):
    ell = int(rng.integers(1, max_len + 1))
    kind = int(rng.integers(4))
    if kind == 0:
        xs = rng.random(ell)
    elif kind == 1:
        xs = np.zeros(ell)
        spikes = rng.integers(0, ell, size=int(rng.integers(1, 4)))
        xs[spikes] = rng.random(spikes.size) * 10.0 ** int(rng.integers(0, 7))
    elif kind == 2:
        xs = rng.geometric(float(rng.uniform(0.01, 0.9)), size=ell).astype(float)
    else:
        xs = rng.integers(0, 3, size=ell).astype(float)
        xs[rng.integers(ell)] += float(rng.integers(0, 10 ** 5))
    return xs


def verify_bad_index(cases: int, max_len: int, seed: int, brute_max: int = 200) -> dict:
    rng = np.random.Generator(np.random.Philox(seed))
    violations = mismatches = cover_failures = 0
    worst = 0.0
    for _ in range(cases):
        xs = _fuzz_gaps(rng, max_len)
        ell = len(xs)
        bad = bad_indices(xs)
        worst = max(worst, len(bad) / ell)
        if not len(bad) < ell / 100:
            violations += 1
        if ell <= brute_max:
            if bad != bad_indices_brute(list(xs)):
                mismatches += 1
            ivs = greedy_intervals(list(xs))
            covered = set()
            for a, b in ivs:
                covered.update(range(a, b + 1))
            lengths = sum(b - a + 1 for a, b in ivs)
            if (not bad <= covered or lengths != len(covered)
                    or not all(window_is_heavy(list(xs), a, b) for a, b in ivs)):
                cover_failures += 1
    return {"cases": cases, "violations": violations, "brute_mismatches": mismatches,
            "cover_failures": cover_failures, "max_bad_fraction": worst,
            "passed": violations == 0 and mismatches == 0 and cover_failures == 0}


def verify_accounting(runs: int, side: int, budget_factor: float, seed: int) -> dict:
    """Full one-sided runs over generated instances; every trace is checked against its bound."""
    cfg = OneSidedConfig(budget_factor=budget_factor, check_accounting=False)
    families = ("one_decoy", "one_clean", "zero_dense", "zero_sparse_nonspanning", "random")
    violations = traces = 0
    for k in range(runs):
        fam = families[k % len(families)]
        sd = derive_seed(seed, k)
        m = generate(GenSpec(side, fam, {}, sd))
        rep = one_sided_on(QueryOracle(m), cfg, sd)
        traces += rep.details["traces"]
        violations += rep.details["accounting_violations"]
    return {"runs": runs, "traces": traces, "violations": violations,
            "budget_factor": budget_factor, "passed": violations == 0}


def cmd_verify_lemma(args) -> int:
    if args.which == "bad_index":
        res = verify_bad_index(args.cases, args.max_len, args.seed)
    else:
        res = verify_accounting(args.runs, args.side, args.budget_factor, args.seed)
    print(json.dumps(res))
    return EXIT_OK if res["passed"] else EXIT_VERIFY


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--format", choices=("bits", "json"), default="bits")
    common.add_argument("--config", help="JSON object of config overrides")

    p = _Parser(prog="ptrmatrix", description=__doc__.split("\n\n")[0])
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    g = sub.add_parser("gen", parents=[common], help="generate an instance")
    g.add_argument("--family", choices=FAMILIES)
    g.add_argument("-s", "--side", type=int)
    g.add_argument("--param", action="append", help="family parameter key=value")
    g.add_argument("--spec", help="GenSpec as JSON (overrides the flags)")
    g.add_argument("--out")
    g.set_defaults(func=cmd_gen)

    e = sub.add_parser("eval", parents=[common], help="evaluate F with full knowledge")
    e.add_argument("matrix")
    e.set_defaults(func=cmd_eval)

    r = sub.add_parser("run", parents=[common], help="run an algorithm on a matrix file")
    r.add_argument("matrix")
    r.add_argument("--algorithm", choices=ALGORITHMS, default="zpp")
    r.add_argument("--transcript", help="write the query transcript as JSON lines")
    r.set_defaults(func=cmd_run)

    sw = sub.add_parser("sweep", parents=[common], help="scaling sweep to CSV")
    sw.add_argument("--sides", required=True, help="comma-separated side lengths")
    sw.add_argument("--families", required=True)
    sw.add_argument("--algorithms", default="one_sided")
    sw.add_argument("--trials", type=int, default=10)
    sw.add_argument("--params", help='per-family params, e.g. {"one_decoy": {"decoy_length": 6}}')
    sw.add_argument("--jobs", type=int, default=1)
    sw.add_argument("--out")
    sw.set_defaults(func=cmd_sweep)

    v = sub.add_parser("verify-lemma", parents=[common], help="fuzz a proved inequality")
    v.add_argument("which", choices=("bad_index", "accounting"))
    v.add_argument("--cases", type=int, default=10_000)
    v.add_argument("--max-len", type=int, default=2000)
    v.add_argument("--runs", type=int, default=1000)
    v.add_argument("--side", type=int, default=128)
    v.add_argument("--budget-factor", type=float, default=100.0)
    v.set_defaults(func=cmd_verify_lemma)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (UsageError, ValueError, OSError, KeyError) as e:
        print(f"ptrmatrix: error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except (AccountingViolation, RoundLimitExceeded, AssertionError) as e:
        print(f"ptrmatrix: internal assertion: {e}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
