"""Time the numba and numpy flavours of each kernel, then one AR trial.

Run with ``python benchmarks/bench_kernels.py``. The end-to-end line uses
whichever flavour ``ONEBIT_AR_NUMBA`` selects.
"""
import argparse
import timeit

import numpy as np

from onebit_ar import kernels
from onebit_ar.harness import preset, run_trial


def cases(rng):
    z = rng.standard_normal((64, 32)) + 1j * rng.standard_normal((64, 32))
    y = kernels.csign_np(rng.standard_normal((4, 32)) + 1j * rng.standard_normal((4, 32)))
    hs = rng.standard_normal((4, 32)) + 1j * rng.standard_normal((4, 32))
    c2 = rng.random(64)
    sig = np.sort(rng.random(64)) + 0.1
    x = rng.standard_normal(128 * 128) + 1j * rng.standard_normal(128 * 128)
    return {
        "csign 64x32": ("csign", (z,)),
        "gamma_update 4x32": ("gamma_update", (y, hs)),
        "secular_root n=64": ("secular_root", (c2, sig, 3.0, 1e-12, 200)),
        "quartic_root": ("quartic_root", (20.0, 5.0, 3.0, 1e-12, 200)),
        "hard_threshold 16384, k=5": ("hard_threshold", (x, 5)),
    }


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=2000)
    ap.add_argument("--trials", type=int, default=3, help="end-to-end AR trials")
    args = ap.parse_args()
    rng = np.random.default_rng(0)
    print(f"{'kernel':28s} {'numpy us':>10s} {'numba us':>10s} {'speedup':>8s}")
    for label, (name, inputs) in cases(rng).items():
        f_np = getattr(kernels, name + "_np")
        f_nb = getattr(kernels, name + "_nb")
        f_nb(*inputs)  # compile outside the timing
        t_np = min(timeit.repeat(lambda: f_np(*inputs), number=args.repeat, repeat=3)) / args.repeat
        t_nb = min(timeit.repeat(lambda: f_nb(*inputs), number=args.repeat, repeat=3)) / args.repeat
        print(f"{label:28s} {1e6 * t_np:10.2f} {1e6 * t_nb:10.2f} {t_np / t_nb:8.2f}")

    cfg = preset("downlink-fdd", estimators=["ar"], snr_grid_db=[10.0])
    run_trial(cfg, 10.0, cfg.n_train, 0)
    times = []
    for t in range(args.trials):
        times.append(run_trial(cfg, 10.0, cfg.n_train, t)[0].wall_time)
    flavour = "numba" if kernels.USE_NUMBA else "numpy"
    print(f"downlink-fdd AR trial ({flavour}): median {1000 * np.median(times):.1f} ms over {args.trials}")


if __name__ == "__main__":
    main()
