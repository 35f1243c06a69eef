import json
import os
import subprocess
import sys

from ptrmatrix import _kernels

SCRIPT = r"""
import json
from ptrmatrix import _kernels
from ptrmatrix.generators import GenSpec, generate
from ptrmatrix.matrix import encode, evaluate_reference, span_full
from ptrmatrix.analysis import bad_indices
from ptrmatrix.sweep import run_algorithm

out = {"backend": _kernels.BACKEND, "runs": []}
for seed in range(6):
    fam = ("one_decoy", "zero_dense", "zero_sparse_nonspanning")[seed % 3]
    m = generate(GenSpec(40, fam, {}, seed))
    row = {"enc": encode(m), "value": evaluate_reference(m),
           "spans": [sorted(span_full(m, c)) for c in range(0, 40, 7)]}
    for alg in ("one_sided", "zero_sided", "zpp"):
        row[alg] = run_algorithm(alg, m, seed).to_json()
    out["runs"].append(row)
big = generate(GenSpec(128, "one_decoy", {}, 11))
out["big"] = run_algorithm("one_sided", big, 3).to_json()
out["bad"] = sorted(bad_indices([0.0] * 150 + [1e5] + [1.0] * 49))
print(json.dumps(out, sort_keys=True))
"""


def run(disable: bool) -> dict:
    env = dict(os.environ)
    env.pop("PTRMATRIX_DISABLE_NUMBA", None)
    if disable:
        env["PTRMATRIX_DISABLE_NUMBA"] = "1"
    proc = subprocess.run([sys.executable, "-c", SCRIPT], capture_output=True, text=True,
                          env=env, check=True, timeout=600)
    return json.loads(proc.stdout)


def test_python_fallback_matches_compiled():
    fast, slow = run(False), run(True)
    assert slow["backend"] == "python"
    if _kernels.BACKEND == "numba":
        assert fast["backend"] == "numba"
    fast.pop("backend"), slow.pop("backend")
    assert fast == slow


def test_pyfunc_is_plain_python():
    f = _kernels.pyfunc(_kernels.chain_is_valid)
    assert callable(f) and not hasattr(f, "signatures")
