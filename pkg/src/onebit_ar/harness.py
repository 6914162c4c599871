"""Monte Carlo driver: seeded trials, NMSE, sweeps over SNR and training
length, CSV output."""
import csv
import dataclasses
import io
import json
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from functools import lru_cache
from pathlib import Path

import numpy as np

from .ar import ArConfig, run_ar
from .biht import biht_estimate, build_dictionary
from .channel import ArrayGeometry, ChannelParams, gen_angles, gen_gains, gen_training, observe, synth_channel
from .core import fro_norm_sq

__all__ = [
    "ExperimentConfig",
    "TrialResult",
    "PRESETS",
    "preset",
    "load_config",
    "nmse",
    "trial_seed",
    "run_trial",
    "run_sweep",
    "aggregate",
    "AGGREGATE_FIELDS",
    "RAW_FIELDS",
]

ESTIMATORS = ("ar", "biht")
AGGREGATE_FIELDS = ["estimator", "snr_db", "n_train", "m_r", "m_t", "k_paths", "trials", "mean_nmse", "std_nmse"]
RAW_FIELDS = ["estimator", "snr_db", "n_train", "trial_idx", "seed", "nmse", "iterations", "wall_time_ms"]


@dataclass
class ExperimentConfig:
    scenario: str = "custom"
    m_r: int = 4
    m_t: int = 64
    n_train: int = 32
    k_paths: int = 5
    snr_grid_db: list = field(default_factory=lambda: [10.0])
    n_grid: list = field(default_factory=list)
    trials: int = 50
    min_angle_sep: float = math.pi / 16
    estimators: list = field(default_factory=lambda: ["ar", "biht"])
    base_seed: int = 0
    ar: ArConfig = field(default_factory=ArConfig)
    output_path: str = "results.csv"
    training: str = "semi_unitary"
    tx_kind: str = "ula"
    oracle_norm: bool = True
    biht_grid_points: int = 128
    biht_iters: int = 300
    record_wall_time: bool = False

    def __post_init__(self):
        if isinstance(self.ar, dict):
            self.ar = ArConfig(**self.ar)
        self.snr_grid_db = [float(v) for v in self.snr_grid_db]
        self.n_grid = [int(v) for v in self.n_grid] or [int(self.n_train)]
        self.estimators = [e.strip() for e in self.estimators]
        self.validate()

    def validate(self):
        if self.trials < 1:
            raise ValueError("trials must be >= 1")
        if not self.snr_grid_db or not self.n_grid:
            raise ValueError("grids must be nonempty")
        bad = set(self.estimators) - set(ESTIMATORS)
        if bad or not self.estimators:
            raise ValueError(f"unknown estimators {sorted(bad)}; choose from {ESTIMATORS}")
        if self.tx_kind == "users" and self.k_paths != self.m_t:
            raise ValueError("users geometry needs k_paths == m_t")
        if self.ar.k_paths != self.k_paths:
            self.ar = dataclasses.replace(self.ar, k_paths=self.k_paths)

    @property
    def rx(self):
        return ArrayGeometry(self.m_r)

    @property
    def tx(self):
        return ArrayGeometry(self.m_t, self.tx_kind)

    def to_dict(self):
        return dataclasses.asdict(self)


PRESETS = {
    "downlink-fdd": dict(
        scenario="downlink_fdd",
        m_r=4,
        m_t=64,
        n_train=32,
        k_paths=5,
        snr_grid_db=[-10.0, -5.0, 0.0, 5.0, 10.0, 15.0, 20.0],
        training="semi_unitary",
        tx_kind="ula",
    ),
    "uplink-tdd": dict(
        scenario="uplink_tdd",
        m_r=64,
        m_t=16,
        n_train=16,
        k_paths=16,
        snr_grid_db=[-10.0, -5.0, 0.0, 5.0, 10.0, 15.0, 20.0],
        training="unitary",
        tx_kind="users",
    ),
}


def preset(name, **overrides):
    key = name.replace("_", "-")
    if key not in PRESETS:
        raise ValueError(f"unknown preset {name!r}; choose from {sorted(PRESETS)}")
    values = dict(PRESETS[key])
    values.update(overrides)
    return ExperimentConfig(**values)


def load_config(path, **overrides):
    """Read a JSON config whose keys mirror :class:`ExperimentConfig`.

    A ``"preset"`` key seeds the values from :data:`PRESETS` first.
    """
    with open(path, encoding="utf-8") as fh:
        values = json.load(fh)
    name = values.pop("preset", None)
    values.update(overrides)
    if name is not None:
        return preset(name, **values)
    return ExperimentConfig(**values)


def nmse(h_hat, h_true):
    """``|| H_hat/||H_hat||_F - H/||H||_F ||_F^2``."""
    h_hat = np.asarray(h_hat)
    h_true = np.asarray(h_true)
    if h_hat.shape != h_true.shape:
        raise ValueError(f"dimension mismatch: {h_hat.shape} vs {h_true.shape}")
    a = fro_norm_sq(h_hat)
    b = fro_norm_sq(h_true)
    if a == 0.0 or b == 0.0:
        raise ValueError("nmse of a zero matrix")
    return fro_norm_sq(h_hat / math.sqrt(a) - h_true / math.sqrt(b))


@dataclass
class TrialResult:
    estimator: str
    snr_db: float
    n_train: int
    trial_idx: int
    nmse: float
    iterations: int
    wall_time: float
    seed: int
    rho_paths: tuple = ()

    def raw_row(self, timing=False):
        return {
            "estimator": self.estimator,
            "snr_db": _fmt(self.snr_db),
            "n_train": self.n_train,
            "trial_idx": self.trial_idx,
            "seed": self.seed,
            "nmse": _fmt(self.nmse),
            "iterations": self.iterations,
            "wall_time_ms": f"{1000.0 * self.wall_time:.3f}" if timing else "",
        }


def _fmt(x):
    return repr(float(x))


def trial_seed(base_seed, snr_idx, n_idx, trial_idx):
    """Order-independent per-trial seed."""
    ss = np.random.SeedSequence([int(base_seed), int(snr_idx), int(n_idx), int(trial_idx)])
    return int(ss.generate_state(1, np.uint64)[0])


@lru_cache(maxsize=8)
def _dictionary(m_r, m_t, tx_kind, grid_points):
    return build_dictionary(ArrayGeometry(m_r), ArrayGeometry(m_t, tx_kind), grid_points)


def draw_instance(cfg, n_train, rng):
    """Channel parameters, channel matrix and training for one trial."""
    k = cfg.k_paths
    doa = gen_angles(k, rng, cfg.min_angle_sep)
    if cfg.tx_kind == "users":
        dod = np.full(k, np.pi / 2)
    else:
        dod = gen_angles(k, rng, cfg.min_angle_sep)
    params = ChannelParams(doa, dod, gen_gains(k, rng))
    h = synth_channel(params, cfg.rx, cfg.tx)
    s = gen_training(cfg.m_t, n_train, cfg.training, rng)
    return params, h, s


def _indices(cfg, snr_db, n_train):
    try:
        return cfg.snr_grid_db.index(float(snr_db)), cfg.n_grid.index(int(n_train))
    except ValueError:
        raise ValueError(f"({snr_db}, {n_train}) is not on the configured grid") from None


def run_trial(cfg, snr_db, n_train, trial_idx, ar_callback=None):
    """One Monte Carlo trial; one :class:`TrialResult` per enabled estimator.

    Deterministic in ``(base_seed, snr index, n index, trial_idx)``.
    ``ar_callback`` receives the per-iteration AR diagnostics.
    """
    snr_idx, n_idx = _indices(cfg, snr_db, n_train)
    seed = trial_seed(cfg.base_seed, snr_idx, n_idx, trial_idx)
    rng = np.random.default_rng(seed)
    _, h, s = draw_instance(cfg, n_train, rng)
    obs = observe(h, s, snr_db, rng)
    r_norm = fro_norm_sq(h) if cfg.oracle_norm else None
    ar_cfg = dataclasses.replace(cfg.ar, r_norm=r_norm) if r_norm is not None else cfg.ar

    results = []
    for name in cfg.estimators:
        t0 = time.perf_counter()
        if name == "ar":
            _, h_hat, state = run_ar(obs, ar_cfg, cfg.rx, cfg.tx, callback=ar_callback)
            iters = state.iterations
            paths = tuple(sorted({d["rho_path"] for d in state.diagnostics}))
        else:
            d = _dictionary(cfg.m_r, cfg.m_t, cfg.tx_kind, cfg.biht_grid_points)
            res = biht_estimate(obs, d, cfg.k_paths, iters=cfg.biht_iters, r_norm=ar_cfg.resolve_r_norm(cfg.m_r, cfg.m_t))
            h_hat, iters, paths = res.h, res.iterations, ()
        wall = time.perf_counter() - t0
        results.append(TrialResult(name, float(snr_db), int(n_train), int(trial_idx), nmse(h_hat, h), iters, wall, seed, paths))
    return results


def _work(args):
    cfg, snr_db, n_train, trial_idx = args
    return run_trial(cfg, snr_db, n_train, trial_idx)


def aggregate(results, cfg):
    """Mean and sample standard deviation of NMSE per (estimator, SNR, N)."""
    groups = {}
    for r in results:
        groups.setdefault((r.estimator, r.snr_db, r.n_train), []).append(r.nmse)
    rows = []
    for est in cfg.estimators:
        for snr in cfg.snr_grid_db:
            for n in cfg.n_grid:
                vals = groups.get((est, snr, n))
                if not vals:
                    continue
                arr = np.array(vals)
                std = float(arr.std(ddof=1)) if arr.size > 1 else 0.0
                rows.append(
                    {
                        "estimator": est,
                        "snr_db": _fmt(snr),
                        "n_train": n,
                        "m_r": cfg.m_r,
                        "m_t": cfg.m_t,
                        "k_paths": cfg.k_paths,
                        "trials": arr.size,
                        "mean_nmse": _fmt(arr.mean()),
                        "std_nmse": _fmt(std),
                    }
                )
    return rows


def _sort_key(cfg):
    order = {e: i for i, e in enumerate(cfg.estimators)}

    def key(r):
        return (order[r.estimator], cfg.snr_grid_db.index(r.snr_db), cfg.n_grid.index(r.n_train), r.trial_idx)

    return key


def raw_path_for(output_path):
    p = Path(output_path)
    return p.with_name(p.stem + "_trials" + (p.suffix or ".csv"))


def csv_text(rows, fields):
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=fields, lineterminator="\n")
    w.writeheader()
    w.writerows(rows)
    return buf.getvalue()


def run_sweep(cfg, threads=1, write=True, progress=None):
    """Run every (SNR, N, trial) cell and write the aggregate and raw CSVs.

    The raw file sits next to ``cfg.output_path`` with a ``_trials`` suffix.
    Its ``wall_time_ms`` column stays empty unless ``cfg.record_wall_time``
    is set, so that both files are a pure function of the config.
    Results are sorted before aggregation, so the aggregate CSV does not
    depend on ``threads``.

    Returns
    -------
    rows : list of dict
        Aggregate rows as written.
    results : list of TrialResult
    """
    work = [
        (cfg, snr, n, t)
        for snr in cfg.snr_grid_db
        for n in cfg.n_grid
        for t in range(cfg.trials)
    ]
    results = []
    if threads <= 1:
        for i, item in enumerate(work):
            results.extend(_work(item))
            if progress:
                progress(i + 1, len(work))
    else:
        with ProcessPoolExecutor(max_workers=threads) as pool:
            for i, res in enumerate(pool.map(_work, work, chunksize=max(1, len(work) // (4 * threads)))):
                results.extend(res)
                if progress:
                    progress(i + 1, len(work))
    results.sort(key=_sort_key(cfg))
    rows = aggregate(results, cfg)
    if write:
        out = Path(cfg.output_path)
        out.parent.mkdir(parents=True, exist_ok=True)
        out.write_text(csv_text(rows, AGGREGATE_FIELDS), encoding="utf-8")
        raw_path_for(out).write_text(csv_text([r.raw_row(cfg.record_wall_time) for r in results], RAW_FIELDS), encoding="utf-8")
    return rows, results
