"""Time the hot kernels under numba and under the pure-Python fallback.

Each backend runs in its own interpreter because the choice is made at
import time from PTRMATRIX_DISABLE_NUMBA.

    python3 benchmarks/bench_kernels.py --side 128 --repeat 3
"""

import argparse
import json
import os
import subprocess
import sys

WORKER = r"""
import json, sys, time
from ptrmatrix import _kernels
from ptrmatrix.generators import GenSpec, generate
from ptrmatrix.matrix import Matrix, evaluate_reference, span_full
from ptrmatrix.analysis import bad_indices
from ptrmatrix.one_sided import OneSidedConfig, run_one_sided
from ptrmatrix.zero_error import ZeroErrorConfig, run_zero_sided
import numpy as np

side, repeat = int(sys.argv[1]), int(sys.argv[2])
decoy = generate(GenSpec(side, "one_decoy", {}, 1))
dense = generate(GenSpec(side, "zero_dense", {}, 2))
sparse = generate(GenSpec(side, "zero_sparse_nonspanning", {}, 3))
# every trace stops on its first read, so the main loop runs all its iterations
ones = Matrix(np.ones((side, side), dtype=np.uint8), np.arange(side * side).reshape(side, side))
gaps = np.random.default_rng(0).geometric(0.05, size=2000).astype(float)

cases = {
    "evaluate_reference": lambda: evaluate_reference(decoy),
    "span_full_all_columns": lambda: [span_full(dense, c) for c in range(side)],
    "one_sided_one_decoy": lambda: run_one_sided(decoy, OneSidedConfig(rng_seed=5)),
    "one_sided_zero_dense": lambda: run_one_sided(dense, OneSidedConfig(rng_seed=5)),
    "one_sided_full_loop": lambda: run_one_sided(ones, OneSidedConfig(rng_seed=5)),
    "zero_sided_weak_sparsify": lambda: run_zero_sided(
        sparse, ZeroErrorConfig(spars_multiplier=0.01, rng_seed=5)),
    "bad_indices_l2000": lambda: bad_indices(gaps),
}
out = {"backend": _kernels.BACKEND, "times": {}}
for name, fn in cases.items():
    fn()  # warm-up, includes compilation or cache load
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    out["times"][name] = best
print(json.dumps(out))
"""


def run_backend(disable: bool, side: int, repeat: int) -> dict:
    env = dict(os.environ)
    env.pop("PTRMATRIX_DISABLE_NUMBA", None)
    if disable:
        env["PTRMATRIX_DISABLE_NUMBA"] = "1"
    proc = subprocess.run([sys.executable, "-c", WORKER, str(side), str(repeat)],
                          env=env, capture_output=True, text=True, check=True)
    return json.loads(proc.stdout.strip().splitlines()[-1])


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.split("\n\n")[0])
    ap.add_argument("--side", type=int, default=128)
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--json", action="store_true", help="print raw JSON instead of a table")
    args = ap.parse_args(argv)

    fast = run_backend(False, args.side, args.repeat)
    slow = run_backend(True, args.side, args.repeat)
    if args.json:
        print(json.dumps({"side": args.side, "numba": fast, "python": slow}, indent=2))
        return 0
    print(f"s={args.side}, best of {args.repeat}  ({fast['backend']} vs {slow['backend']})")
    print(f"{'kernel':<28}{'compiled':>12}{'python':>12}{'speedup':>10}")
    for name, t_fast in fast["times"].items():
        t_slow = slow["times"][name]
        print(f"{name:<28}{t_fast * 1e3:>10.2f}ms{t_slow * 1e3:>10.2f}ms{t_slow / t_fast:>9.1f}x")
    return 0


if __name__ == "__main__":
    sys.exit(main())
