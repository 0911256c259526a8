"""Multi-seed pilot for the statistical acceptance bands.

Runs two table1.cfg cells, the compound Poisson marginal and the one-jump
diagnostic over many seeds and reports the spread of each statistic, so
tolerances can be fixed before the acceptance suite is run.

    python benchmarks/pilot_bands.py --seeds 30 --out benchmarks/pilot_results.json
"""

import argparse
import json
import time

import numpy as np

from factorld import FactorModelSpec, Deterministic, pareto
from factorld.cond_mc import estimate_tail_cmc_many
from factorld.levy_paths import (
    LevyFactorSpec,
    critical_lambda,
    estimate_marginal_tail_many,
    limit_measure_terms,
    one_jump_diagnostic,
)

SEED_OFFSET = 1000  # pilot seeds are disjoint from the acceptance seeds


def table1_spec():
    return FactorModelSpec(10, pareto(5), pareto(3), Deterministic([1.0] * 10))


def unit_levy_spec():
    return LevyFactorSpec(1, 1.0, 1.0, pareto(5), pareto(3), (1.0,))


def summarize(values):
    v = np.asarray(values, dtype=float)
    return {"min": float(v.min()), "max": float(v.max()), "mean": float(v.mean()), "std": float(v.std(ddof=1))}


def pilot_table1(seeds, iters):
    spec = table1_spec()
    out = {}
    for n, x in ((1000, 0.1), (100_000, 10.0)):
        vals = []
        for s in seeds:
            vals.append(estimate_tail_cmc_many(spec, n, [n ** 2 * x], iters, s)[0].value)
        out[f"n={n},x={x}"] = {"values": vals, **summarize(vals)}
    return out


def pilot_marginal(seeds, iters, n=10_000):
    spec = unit_levy_spec()
    res = {1.0: [], 2.0: []}
    for s in seeds:
        for e in estimate_marginal_tail_many(spec, n, 1.0, [1.0, 2.0], iters, s):
            res[e.x].append(e.value / sum(limit_measure_terms(spec, 1.0, e.x)) - 1.0)
    return {f"x={x}": {"rel_dev": v, **summarize(v)} for x, v in res.items()}


def pilot_one_jump(seeds, paths, n=100):
    spec = unit_levy_spec()
    a_F, a_eps = limit_measure_terms(spec, 1.0, 1.0)
    conc, share, hits = [], [], []
    for s in seeds:
        r = one_jump_diagnostic(spec, n, critical_lambda(spec, n), paths, s)
        conc.append(r.concentration(0.9))
        share.append(r.factor_share - a_F / (a_F + a_eps))
        hits.append(r.exceedances)
    return {
        "concentration_0.9": summarize(conc),
        "factor_share_minus_predicted": summarize(share),
        "exceedances": summarize(hits),
    }


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--seeds", type=int, default=30)
    ap.add_argument("--iters", type=int, default=10_000)
    ap.add_argument("--paths", type=int, default=200_000)
    ap.add_argument("--parts", nargs="+", default=["table1", "marginal", "one_jump"])
    ap.add_argument("--out", default=None)
    args = ap.parse_args()
    seeds = [SEED_OFFSET + i for i in range(args.seeds)]
    report = {"seeds": seeds, "iters": args.iters, "paths": args.paths}
    for part in args.parts:
        t0 = time.perf_counter()
        if part == "table1":
            report[part] = pilot_table1(seeds, args.iters)
        elif part == "marginal":
            report[part] = pilot_marginal(seeds, args.iters)
        elif part == "one_jump":
            report[part] = pilot_one_jump(seeds, args.paths)
        else:
            raise SystemExit(f"unknown part {part!r}")
        report[part]["seconds"] = time.perf_counter() - t0
        summary = {k: v for k, v in report[part].items() if not isinstance(v, dict) or "values" not in v}
        print(part, json.dumps(summary, default=lambda o: None, indent=1))
    if args.out:
        with open(args.out, "w") as fh:
            json.dump(report, fh, indent=1)


if __name__ == "__main__":
    main()
