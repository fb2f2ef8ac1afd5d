"""Compare the compiled and pure-Python rank-one Cholesky kernels.

Times ``chol_update`` / ``chol_downdate`` on random factors of several
sizes, then one full kink learning run, under each available backend.

    python benchmarks/bench_chol.py [--sizes 10 50 200] [--repeat 20]
"""

import argparse
import json
import timeit

import numpy as np

from gpssm import linalg
from gpssm.bench.config import load_config
from gpssm.bench.runner import run_seed


def random_factor(n: int, rng: np.random.Generator) -> np.ndarray:
    A = rng.standard_normal((n, n))
    return np.linalg.cholesky(A @ A.T + n * np.eye(n))


def time_kernels(sizes, repeat: int) -> list[dict]:
    rows = []
    rng = np.random.default_rng(0)
    for n in sizes:
        L = random_factor(n, rng)
        v = rng.standard_normal(n)
        L_up = linalg.chol_update(L, v)
        for backend in linalg.available_backends():
            linalg.use_backend(backend)
            up = min(timeit.repeat(lambda: linalg.chol_update(L, v), number=1, repeat=repeat))
            down = min(timeit.repeat(lambda: linalg.chol_downdate(L_up, v), number=1, repeat=repeat))
            rows.append(dict(size=n, backend=backend, update_s=up, downdate_s=down))
    return rows


def time_kink(matcher: str) -> list[dict]:
    cfg = load_config(dict(experiment="kink", matcher=matcher, seeds=1, output=dict(curves=False)))
    rows = []
    for backend in linalg.available_backends():
        linalg.use_backend(backend)
        res = run_seed(cfg, 0.008, 0)
        rows.append(dict(backend=backend, matcher=matcher, seconds=res.seconds, nmse=res.primary_nmse()[0]))
    return rows


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--sizes", type=int, nargs="+", default=[10, 50, 200, 800])
    parser.add_argument("--repeat", type=int, default=20)
    parser.add_argument("--matcher", default="ukf", choices=["ekf", "ukf", "adf"])
    parser.add_argument("--json", help="also write the timings to this file")
    args = parser.parse_args()

    default = linalg.BACKEND
    kernels = time_kernels(args.sizes, args.repeat)
    kink = time_kink(args.matcher)
    linalg.use_backend(default)

    print(f"{'n':>5} {'backend':>9} {'update us':>10} {'downdate us':>12}")
    for r in kernels:
        print(f"{r['size']:5d} {r['backend']:>9} {1e6 * r['update_s']:10.1f} {1e6 * r['downdate_s']:12.1f}")
    print()
    for r in kink:
        print(f"kink/{r['matcher']} with {r['backend']}: {r['seconds']:.2f} s, nMSE {r['nmse']:.4g}")
    if args.json:
        with open(args.json, "w") as fh:
            json.dump(dict(kernels=kernels, kink=kink), fh, indent=1)


if __name__ == "__main__":
    main()
