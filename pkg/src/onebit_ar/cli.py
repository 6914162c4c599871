"""Command line entry point: ``simulate``, ``sweep`` and ``check``."""
import argparse
import csv
import logging
import sys

from .checks import run_checks
from .harness import load_config, preset, run_sweep, run_trial

log = logging.getLogger("onebit_ar")

TRACE_FIELDS = ["iteration", "objective", "fit_term", "reg_term", "rho", "rho_path", "ml_cost", "step"]


def _common(p):
    p.add_argument("--config", help="JSON file with ExperimentConfig fields")
    p.add_argument("--preset", choices=["downlink-fdd", "uplink-tdd"], help="scenario defaults (downlink-fdd if no config)")
    p.add_argument("--seed", type=int, help="base seed")
    p.add_argument("--trials", type=int)
    p.add_argument("--out", help="aggregate CSV path")
    p.add_argument("--estimators", help="comma list from {ar,biht}")
    p.add_argument("--threads", type=int, default=1, help="worker processes")
    p.add_argument("-v", "--verbose", action="store_true")


def build_parser():
    parser = argparse.ArgumentParser(prog="onebit-ar", description="One-bit MIMO channel estimation by amplitude retrieval.")
    sub = parser.add_subparsers(dest="command", required=True)

    sim = sub.add_parser("simulate", help="run one trial and print diagnostics")
    _common(sim)
    sim.add_argument("--snr", type=float, help="SNR in dB (default: first grid point)")
    sim.add_argument("--n-train", type=int, help="training length (default: first grid point)")
    sim.add_argument("--trial", type=int, default=0, help="trial index")
    sim.add_argument("--trace", help="write the AR objective trace to this CSV")

    sw = sub.add_parser("sweep", help="run the Monte Carlo experiment and write CSVs")
    _common(sw)
    sw.add_argument("--timing", action="store_true", help="fill wall_time_ms in the per-trial CSV")

    chk = sub.add_parser("check", help="run the invariant and oracle checks")
    chk.add_argument("--seed", type=int, default=0)
    return parser


def config_from_args(args):
    overrides = {}
    if args.seed is not None:
        overrides["base_seed"] = args.seed
    if args.trials is not None:
        overrides["trials"] = args.trials
    if args.out is not None:
        overrides["output_path"] = args.out
    if args.estimators is not None:
        overrides["estimators"] = [e for e in args.estimators.split(",") if e]
    if getattr(args, "timing", False):
        overrides["record_wall_time"] = True
    if args.config:
        if args.preset:
            overrides["preset"] = args.preset
        return load_config(args.config, **overrides)
    return preset(args.preset or "downlink-fdd", **overrides)


def cmd_simulate(args):
    cfg = config_from_args(args)
    snr = cfg.snr_grid_db[0] if args.snr is None else args.snr
    n = cfg.n_grid[0] if args.n_train is None else args.n_train
    if snr not in cfg.snr_grid_db:
        cfg.snr_grid_db = [snr]
    if n not in cfg.n_grid:
        cfg.n_grid = [n]
    trace = []

    def on_iter(d):
        trace.append(d)
        print(
            f"iter {d['iteration']:4d}  obj {d['objective']:.6e}  fit {d['fit_term']:.4e}  "
            f"reg {d['reg_term']:.4e}  rho {d['rho']:.4e} ({d['rho_path']})  ml {d['ml_cost']:.4e}"
        )

    results = run_trial(cfg, snr, n, args.trial, ar_callback=on_iter)
    print(f"scenario {cfg.scenario}  M_r={cfg.m_r} M_t={cfg.m_t} N={n} K={cfg.k_paths} SNR={snr} dB")
    for r in results:
        print(f"{r.estimator:5s} nmse {r.nmse:.6e}  iterations {r.iterations}  seed {r.seed}  {1000 * r.wall_time:.1f} ms")
    if args.trace:
        with open(args.trace, "w", newline="", encoding="utf-8") as fh:
            w = csv.DictWriter(fh, fieldnames=TRACE_FIELDS, extrasaction="ignore", lineterminator="\n")
            w.writeheader()
            w.writerows(trace)
    return 0


def cmd_sweep(args):
    cfg = config_from_args(args)

    def progress(done, total):
        if done == total or done % max(1, total // 20) == 0:
            log.info("%d/%d trials", done, total)

    rows, _ = run_sweep(cfg, threads=args.threads, progress=progress)
    for r in rows:
        print(f"{r['estimator']:5s} snr {r['snr_db']:>6s} N {r['n_train']:4d}  mean {float(r['mean_nmse']):.4e}  std {float(r['std_nmse']):.4e}")
    print(f"wrote {cfg.output_path}")
    return 0


def cmd_check(args):
    results = run_checks(seed=args.seed)
    for r in results:
        print(f"{'PASS' if r.passed else 'FAIL'}  {r.name:22s} {r.detail}")
    failed = sum(not r.passed for r in results)
    print(f"{len(results) - failed}/{len(results)} checks passed")
    return 1 if failed else 0


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if getattr(args, "verbose", False) else logging.WARNING, format="%(message)s")
    try:
        return {"simulate": cmd_simulate, "sweep": cmd_sweep, "check": cmd_check}[args.command](args)
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
