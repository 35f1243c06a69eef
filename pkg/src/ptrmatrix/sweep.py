"""Scaling sweeps: generate instances per (family, side), run algorithms, aggregate."""

from __future__ import annotations

import csv
import hashlib
import io
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .analysis import fit_loglog
from .errors import DegenerateInput
from .generators import GenSpec, generate
from .matrix import evaluate_reference
from .one_sided import OneSidedConfig, run_full_read, one_sided_on
from .oracle import QueryOracle
from .zero_error import ZeroErrorConfig, ZPPConfig, run_zpp, zero_sided_on

ALGORITHMS = ("one_sided", "zero_sided", "zpp", "full_read")

CSV_FIELDS = ("family", "algorithm", "s", "n", "trials", "mean_q", "max_q", "p95_q",
              "success_rate", "slope", "slope_mean", "seeds")


def trial_seed(base: int, family: str, s: int, trial: int) -> int:
    h = hashlib.blake2b(f"{base}:{family}:{s}:{trial}".encode(), digest_size=8)
    return int.from_bytes(h.digest(), "big") >> 1


@dataclass(frozen=True)
class SweepPlan:
    sides: tuple
    families: tuple
    trials: int
    algorithms: tuple = ("one_sided",)
    base_seed: int = 0
    params: dict = field(default_factory=dict, hash=False)
    one_sided: OneSidedConfig = field(default_factory=OneSidedConfig)
    zero_sided: ZeroErrorConfig = field(default_factory=ZeroErrorConfig)
    max_rounds: int = 1000

    def __post_init__(self):
        if not self.sides or not self.families or not self.algorithms:
            raise ValueError("sides, families and algorithms must be non-empty")
        if self.trials < 1:
            raise ValueError("trials must be at least 1")
        bad = set(self.algorithms) - set(ALGORITHMS)
        if bad:
            raise ValueError(f"unknown algorithms {sorted(bad)}")


def run_algorithm(name: str, m, seed: int, one_cfg: OneSidedConfig = OneSidedConfig(),
                  zero_cfg: ZeroErrorConfig = ZeroErrorConfig(), max_rounds: int = 1000):
    if name == "one_sided":
        return one_sided_on(QueryOracle(m, one_cfg.oracle_mode), one_cfg, seed)
    if name == "zero_sided":
        return zero_sided_on(QueryOracle(m, zero_cfg.oracle_mode), zero_cfg, seed)
    if name == "zpp":
        return run_zpp(m, ZPPConfig(one_cfg, zero_cfg, seed, max_rounds))
    if name == "full_read":
        return run_full_read(m, seed)
    raise ValueError(f"unknown algorithm {name!r}")


def _trial(args):
    plan, family, s, t = args
    seed = trial_seed(plan.base_seed, family, s, t)
    m = generate(GenSpec(s, family, plan.params.get(family, {}), seed))
    ref = evaluate_reference(m)
    out = []
    for alg in plan.algorithms:
        rep = run_algorithm(alg, m, seed, plan.one_sided, plan.zero_sided, plan.max_rounds)
        out.append((alg, rep.stats.entry_queries, int(rep.answer == ref)))
    return seed, out


def run_sweep(plan: SweepPlan, jobs: int = 1) -> list:
    """One row per (family, side, algorithm), in plan order, with fitted slopes."""
    tasks = [(plan, f, s, t) for f in plan.families for s in plan.sides for t in range(plan.trials)]
    if jobs > 1:
        with ProcessPoolExecutor(jobs) as ex:
            results = list(ex.map(_trial, tasks, chunksize=max(1, len(tasks) // (4 * jobs))))
    else:
        results = [_trial(t) for t in tasks]

    rows = []
    k = 0
    for f in plan.families:
        for s in plan.sides:
            chunk = results[k:k + plan.trials]
            k += plan.trials
            seeds = ";".join(str(sd) for sd, _ in chunk)
            for a, alg in enumerate(plan.algorithms):
                q = np.array([res[a][1] for _, res in chunk], dtype=np.float64)
                ok = [res[a][2] for _, res in chunk]
                rows.append({"family": f, "algorithm": alg, "s": s, "n": s * s,
                             "trials": plan.trials, "mean_q": float(q.mean()),
                             "max_q": float(q.max()), "p95_q": float(np.quantile(q, 0.95)),
                             "success_rate": sum(ok) / len(ok), "slope": "",
                             "slope_mean": "", "seeds": seeds})
    _attach_slopes(rows)
    return rows


def _attach_slopes(rows) -> None:
    groups = {}
    for r in rows:
        groups.setdefault((r["family"], r["algorithm"]), []).append(r)
    for grp in groups.values():
        grp = sorted(grp, key=lambda r: r["n"])
        try:
            s_max = fit_loglog([(r["n"], r["max_q"]) for r in grp]).slope
            s_mean = fit_loglog([(r["n"], r["mean_q"]) for r in grp]).slope
        except DegenerateInput:
            continue
        for r in grp:
            r["slope"], r["slope_mean"] = s_max, s_mean


def rows_to_csv(rows) -> str:
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=CSV_FIELDS, lineterminator="\n")
    w.writeheader()
    for r in rows:
        w.writerow({k: _fmt(r[k]) for k in CSV_FIELDS})
    return buf.getvalue()


def _fmt(v):
    if isinstance(v, float):
        return f"{v:.6g}" if math.isfinite(v) else ""
    return v
