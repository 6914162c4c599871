"""Amplitude Retrieval: joint recovery of lost amplitudes and a specular
channel from one-bit measurements.

The estimator minimizes

    ||Y ⊚ Γ - H S||_F^2 + lam ||H - A_r(θ) diag(β) A_t(φ)^H||_F^2
    s.t.  Re Γ >= 0, Im Γ >= 0, ||H||_F^2 = R

by cycling over three blocks: the amplitudes Γ (closed form), the path
parameters (concentrated ML, a few gradient steps) and H (sphere-constrained
QCQP solved exactly).
"""
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .channel import ArrayGeometry, ChannelParams
from .core import fro_norm_sq, herm_eig, odot_mix
from .ml import coarse_init, fold_angles, khatri_rao_dict, ml_fit, refine_angles, split_eta, unvec, vec
from .qcqp import solve_h_subproblem, training_structure

__all__ = ["ArConfig", "ArState", "objective", "update_gamma", "update_h", "initial_channel", "run_ar"]


ROUNDOFF_OBJECTIVE = 1e-24


@dataclass
class ArConfig:
    """Algorithm settings.

    ``r_norm=None`` means the blind default ``M_r * M_t * k_paths`` (expected
    squared norm under unit-variance gains).
    """

    k_paths: int = 1
    lam: float = 1.0
    r_norm: float | None = None
    max_outer_iters: int = 200
    outer_tol: float = 1e-6
    grad_iters: int = 5
    armijo_init_step: float = 1.0
    armijo_shrink: float = 0.5
    armijo_slope: float = 1e-4
    init_grid_points: int = 64
    secular_tol: float = 1e-12
    restart_every: int = 0
    rng_seed: int = 0

    def __post_init__(self):
        if self.k_paths < 1:
            raise ValueError("k_paths must be >= 1")
        if self.lam <= 0:
            raise ValueError("lam must be positive")
        if self.r_norm is not None and self.r_norm <= 0:
            raise ValueError("r_norm must be positive")
        if self.outer_tol <= 0 or self.secular_tol <= 0:
            raise ValueError("tolerances must be positive")
        if not 0 < self.armijo_shrink < 1:
            raise ValueError("armijo_shrink must be in (0, 1)")

    def resolve_r_norm(self, m_r, m_t):
        if self.r_norm is not None:
            return float(self.r_norm)
        return float(m_r * m_t * self.k_paths)


@dataclass
class ArState:
    h: np.ndarray
    gamma: np.ndarray
    eta: np.ndarray
    beta: np.ndarray
    objective_trace: list = field(default_factory=list)
    diagnostics: list = field(default_factory=list)

    @property
    def iterations(self):
        return len(self.objective_trace)


def _model_channel(eta, beta, rx, tx):
    a = khatri_rao_dict(eta, rx, tx)
    return unvec(a @ beta, rx.num_elements, tx.num_elements)


def objective_terms(h, gamma, eta, beta, y, s, rx, tx):
    fit_term = fro_norm_sq(odot_mix(y, gamma) - h @ s)
    reg_term = fro_norm_sq(h - _model_channel(eta, beta, rx, tx))
    return fit_term, reg_term


def objective(state, y, s, cfg, rx=None, tx=None):
    """Value of the full AR cost at ``state``."""
    rx = rx or ArrayGeometry(y.shape[0])
    tx = tx or ArrayGeometry(s.shape[0])
    fit_term, reg_term = objective_terms(state.h, state.gamma, state.eta, state.beta, y, s, rx, tx)
    return fit_term + cfg.lam * reg_term


def update_gamma(y, hs):
    """Amplitudes minimizing ``||Y ⊚ Γ - HS||_F^2`` over the nonnegative orthant."""
    y = np.asarray(y, dtype=np.complex128)
    hs = np.asarray(hs, dtype=np.complex128)
    if y.shape != hs.shape:
        raise ValueError(f"dimension mismatch: {y.shape} vs {hs.shape}")
    return kernels.gamma_update(y, hs)


def update_h(y, gamma, s, h_tilde, cfg, r_norm=None):
    """Exact minimizer of the channel subproblem on ``||H||_F^2 = R``."""
    if r_norm is None:
        r_norm = cfg.resolve_r_norm(y.shape[0], s.shape[0])
    z = odot_mix(y, gamma)
    h, _, _ = solve_h_subproblem(z, s, h_tilde, cfg.lam, r_norm, tol=cfg.secular_tol)
    return h


def initial_channel(y, s, r_norm, eta=None, rx=None, tx=None):
    """Starting channel on the sphere ``||H||_F^2 = R``.

    With angles ``eta`` this is the parametric channel whose gains best fit
    ``Y`` in the measurement domain. Without them, or if that fit is zero,
    it is the regularized one-bit least squares ``Y S^H (S S^H + eps I)^{-1}``.
    """
    h0 = None
    if eta is not None:
        beta = ml_fit(eta, vec(y), rx, tx, s).beta
        h0 = _model_channel(eta, beta, rx, tx)
    if h0 is None or fro_norm_sq(h0) == 0.0:
        m_t = s.shape[0]
        gram = s @ s.conj().T
        eps = 1e-3 * np.trace(gram).real / m_t
        h0 = np.linalg.solve((gram + eps * np.eye(m_t)).T, (y @ s.conj().T).T).T
    return h0 * np.sqrt(r_norm / fro_norm_sq(h0))


def run_ar(obs, cfg, rx=None, tx=None, callback=None, h_init=None, eta_init=None):
    """Run the alternating AR iterations on a one-bit observation.

    Parameters
    ----------
    obs : QuantizedObservation
    cfg : ArConfig
    rx, tx : ArrayGeometry, optional
        Default to half-wavelength ULAs sized from ``obs``.
    callback : callable, optional
        Called with each per-iteration diagnostic dict.
    h_init, eta_init : ndarray, optional
        Override the default starting channel (rescaled onto the sphere) and
        the coarse-grid angle initialization.

    Returns
    -------
    params : ChannelParams
    h : ndarray
        Final channel estimate, ``||h||_F^2 = R``.
    state : ArState
    """
    y, s = obs.y, obs.s
    m_r, m_t = y.shape[0], s.shape[0]
    rx = rx or ArrayGeometry(m_r)
    tx = tx or ArrayGeometry(m_t)
    if rx.num_elements != m_r or tx.num_elements != m_t:
        raise ValueError("array sizes disagree with the observation")
    r_norm = cfg.resolve_r_norm(m_r, m_t)
    path = training_structure(s)
    eig = herm_eig(s @ s.conj().T) if path == "general" else None

    if eta_init is None:
        eta = coarse_init(y, rx, tx, cfg.k_paths, cfg.init_grid_points, s=s)
    else:
        eta = np.asarray(eta_init, dtype=np.float64).copy()
    if h_init is None:
        h = initial_channel(y, s, r_norm, eta, rx, tx)
    else:
        h = np.asarray(h_init, dtype=np.complex128)
        h = h * np.sqrt(r_norm / fro_norm_sq(h))
    fit = ml_fit(eta, vec(h), rx, tx)
    beta = fit.beta
    gamma = update_gamma(y, h @ s)
    state = ArState(h, gamma, eta, beta)

    step = cfg.armijo_init_step
    prev = None
    for it in range(cfg.max_outer_iters):
        gamma = update_gamma(y, h @ s)

        h_vec = vec(h)
        old_cost = fro_norm_sq(h_vec - khatri_rao_dict(eta, rx, tx) @ beta)
        ref = refine_angles(
            eta,
            h_vec,
            rx,
            tx,
            iters=cfg.grad_iters,
            init_step=cfg.armijo_init_step,
            shrink=cfg.armijo_shrink,
            slope=cfg.armijo_slope,
            start_step=step,
        )
        if cfg.restart_every and (it + 1) % cfg.restart_every == 0:
            cold = refine_angles(
                coarse_init(h, rx, tx, cfg.k_paths, cfg.init_grid_points),
                h_vec,
                rx,
                tx,
                iters=cfg.grad_iters,
                init_step=cfg.armijo_init_step,
                shrink=cfg.armijo_shrink,
                slope=cfg.armijo_slope,
            )
            if cold.cost < ref.cost:
                ref = cold
        if ref.cost <= old_cost:
            eta, beta = ref.eta, ref.beta
        step = ref.step if not ref.line_search_failed else cfg.armijo_init_step

        h_tilde = _model_channel(eta, beta, rx, tx)
        z = odot_mix(y, gamma)
        h, rho, used = solve_h_subproblem(z, s, h_tilde, cfg.lam, r_norm, path=path, eig=eig, tol=cfg.secular_tol)

        fit_term = fro_norm_sq(z - h @ s)
        reg_term = fro_norm_sq(h - h_tilde)
        obj = fit_term + cfg.lam * reg_term
        state.objective_trace.append(obj)
        diag = {
            "iteration": it,
            "objective": obj,
            "fit_term": fit_term,
            "reg_term": reg_term,
            "rho": rho,
            "rho_path": used,
            "ml_cost": ref.cost,
            "step": ref.step,
            "line_search_failed": ref.line_search_failed,
            "rank_deficient": ref.rank_deficient,
        }
        state.diagnostics.append(diag)
        if callback is not None:
            callback(diag)
        if obj <= ROUNDOFF_OBJECTIVE * r_norm:
            # consistent point reached; further steps only shuffle round-off
            break
        if prev is not None and prev - obj <= cfg.outer_tol * max(prev, np.finfo(float).tiny):
            break
        prev = obj

    state.h, state.gamma, state.eta, state.beta = h, gamma, eta, beta
    doa, dod = split_eta(fold_angles(eta))
    if tx.kind == "users":
        dod = split_eta(eta)[1]
    params = ChannelParams(np.clip(doa, 0, np.pi), np.clip(dod, 0, np.pi), beta)
    return params, h, state
