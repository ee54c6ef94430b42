"""Track a shrinking sphere against the exact radius for n = 2 and 3.

Usage: python3 scripts/sphere_check.py [--modes 64] [--theta-end 0.05]
"""
import argparse
import time
from pathlib import Path

from curvflow.config import load_config
from curvflow.flow import run_flow, sphere_tracking

ROOT = Path(__file__).resolve().parent.parent


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--modes", type=int, default=64)
    ap.add_argument("--theta-end", type=float, default=0.05)
    args = ap.parse_args()
    for n in (2, 3):
        cfg = load_config(ROOT / "configs" / f"sphere_n{n}.json",
                          [f"modes={args.modes}", f"r_stop={args.theta_end}"])
        t0 = time.perf_counter()
        res = run_flow(cfg)
        track = sphere_tracking(res)
        print(f"n={n}: T_oracle={track.T_oracle:.12g} T_est={res.T_est:.12g} "
              f"max rel dev={track.max_rel_dev:.3e} steps={res.extra['steps']} "
              f"({time.perf_counter() - t0:.1f} s)")


if __name__ == "__main__":
    main()
