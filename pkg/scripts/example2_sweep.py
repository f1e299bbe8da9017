"""Iterations needed to reach ||x_n|| <= tol on random affine problems.

Sweeps m and seeds for a set of methods and prints one table row per
(method, m): the median and worst iteration count, and the mean number of
operator evaluations per iteration.

    python scripts/example2_sweep.py --ms 5 10 20 --seeds 5 --tol 1e-3
"""

import argparse

import numpy as np

from tsengvi import AlgorithmKind, generate_example2, make_rng, default_config, solve


def first_hit(err, tol):
    hit = np.nonzero(err <= tol)[0]
    return int(hit[0]) + 1 if hit.size else None


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--ms", type=int, nargs="+", default=[5, 10, 20])
    ap.add_argument("--seeds", type=int, default=5)
    ap.add_argument("--tol", type=float, default=1e-3)
    ap.add_argument("--max-iters", type=int, default=1000)
    ap.add_argument("--algos", default="tseng_inertial,tseng_viscosity,visegm,mategm")
    args = ap.parse_args()

    cfg = default_config(max_iters=args.max_iters)
    print(f"{'method':<16}{'m':>4}{'median':>8}{'worst':>8}{'evals/it':>10}")
    for name in args.algos.split(","):
        kind = AlgorithmKind.parse(name)
        for m in args.ms:
            iters, rates = [], []
            for seed in range(1, args.seeds + 1):
                p = generate_example2(m, seed)
                x1 = make_rng(seed, 1).uniform(size=m)
                _, trace, _ = solve(p, cfg, kind, x1=x1)
                iters.append(first_hit(trace.column("error"), args.tol))
                rates.append(p.eval_count / max(len(trace), 1))
            done = [i for i in iters if i is not None]
            med = f"{np.median(done):.0f}" if done else "-"
            worst = f"{max(done)}" if len(done) == len(iters) else "miss"
            print(f"{kind.value:<16}{m:>4}{med:>8}{worst:>8}{np.mean(rates):>10.2f}")


if __name__ == "__main__":
    main()
