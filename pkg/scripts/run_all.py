"""Run every preset through the harness and write results under one directory.

    python scripts/run_all.py [--out results] [--seed 1]
"""

import argparse
from pathlib import Path

from tsengvi.harness import parse_config, run_experiment

RUNS = [
    dict(preset="example1", m=5, algos="tseng_inertial,visegm,mategm"),
    dict(preset="example1", m=20, algos="tseng_inertial,visegm,mategm"),
    dict(preset="example2", m=5, algos="tseng_inertial,visegm,mategm"),
    dict(preset="example2", m=20, algos="tseng_inertial,visegm,mategm"),
    dict(preset="example3", algos="tseng_inertial,visegm,mategm"),
    dict(preset="control41", algos="tseng_inertial,tseng_viscosity"),
    dict(preset="control42", algos="tseng_inertial,tseng_viscosity"),
]


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out", type=Path, default=Path("results"))
    ap.add_argument("--seed", type=int, default=1)
    args = ap.parse_args()
    for run in RUNS:
        tag = run["preset"] + (f"_m{run['m']}" if "m" in run else "")
        spec = parse_config(seed=args.seed, out_dir=args.out / tag, **run)
        run_experiment(spec)
        print()


if __name__ == "__main__":
    main()
