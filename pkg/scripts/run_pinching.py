"""Run the five pinching configurations and summarise the monitored quantities.

Usage: python3 scripts/run_pinching.py [--out results] [--only a c]
"""
import argparse
import time
from pathlib import Path

import numpy as np

from curvflow.config import load_config
from curvflow.flow import run_flow
from curvflow.monitors import fit_decay_rate
from curvflow.writers import run_summary, write_outputs

ROOT = Path(__file__).resolve().parent.parent
RUNS = {
    "a": "pinch_a_rms_expm1",
    "b": "pinch_b_rms_cubic",
    "c": "pinch_c_gm_cubic",
    "d": "pinch_d_gm_log1p",
    "e": "pinch_e_pm3_s2s3",
}


def decay(records):
    tau = np.array([r.tau for r in records])
    dev = np.array([r.sup_dev_unit for r in records])
    ok = np.isfinite(tau) & np.isfinite(dev)
    return fit_decay_rate(tau[ok], dev[ok])[0] if ok.sum() >= 8 else float("nan")


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--out", default=str(ROOT / "results"))
    ap.add_argument("--only", nargs="*", choices=sorted(RUNS), default=sorted(RUNS))
    args = ap.parse_args()
    for label in args.only:
        name = RUNS[label]
        t0 = time.perf_counter()
        res = run_flow(load_config(ROOT / "configs" / f"{name}.json"))
        out = write_outputs(res, Path(args.out) / name)
        print(f"[{label}] {name}: {res.extra['steps']} steps, T_est={res.T_est:.10g}, "
              f"{time.perf_counter() - t0:.1f} s -> {out}")
        print(f"    cases: {', '.join(res.classification.applicable_cases)}")
        for rep in run_summary(res)["monotonicity"]:
            if "skipped" in rep:
                continue
            mark = "ok " if rep["passed"] else "BAD"
            exp = "expected" if rep["expected"] else "        "
            print(f"    {mark} {exp} {rep['quantity']:<12} {rep['direction']:<14} worst {rep['worst_violation']:+.3e}")
        print(f"    rescaled roundness decay rate: {decay(res.records):.3f}")


if __name__ == "__main__":
    main()
