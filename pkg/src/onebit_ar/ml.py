"""Concentrated maximum-likelihood fit of path angles to a channel estimate.

With ``h = vec(H)`` and the Khatri-Rao dictionary ``A(eta)``, the gains are
eliminated by least squares and the angles minimize ``||P_A^perp h||^2``.
``eta`` stacks DOAs then DODs.
"""
from dataclasses import dataclass

import numpy as np

from .channel import response_derivative, response_matrix
from .core import PINV_RCOND

__all__ = [
    "vec",
    "unvec",
    "split_eta",
    "fold_angles",
    "khatri_rao_dict",
    "khatri_rao_derivatives",
    "ml_fit",
    "ml_cost",
    "ml_gradient",
    "refine_angles",
    "coarse_init",
    "RefineResult",
]


def vec(h):
    """Column-stacking vectorization."""
    return np.asarray(h).reshape(-1, order="F")


def unvec(h_vec, m_r, m_t):
    return np.asarray(h_vec).reshape(m_t, m_r).T


def split_eta(eta):
    eta = np.asarray(eta, dtype=np.float64)
    if eta.ndim != 1 or eta.size % 2:
        raise ValueError("eta must be a 1-D vector of even length")
    k = eta.size // 2
    return eta[:k], eta[k:]


def fold_angles(eta):
    """Map angles back into ``[0, pi]``; the ULA response is unchanged."""
    return np.arccos(np.cos(eta))


def _tx_side(tx, dod, s=None, derivative=False):
    if derivative:
        t = response_derivative(tx, dod).conj()
    else:
        t = response_matrix(tx, dod).conj()
    return t if s is None else s.T @ t


def khatri_rao_dict(eta, rx, tx, s=None):
    """``A = conj(A_t(dod)) ⊙ A_r(doa)``, shape ``(M_r M_t, K)``.

    Satisfies ``vec(A_r diag(beta) A_t^H) == A @ beta``. With a training
    matrix ``s`` the atoms are mapped to the measurement domain,
    ``(S^T ⊗ I) A``, so that ``vec(A_r diag(beta) A_t^H S) == A @ beta``.
    """
    doa, dod = split_eta(eta)
    a_r = response_matrix(rx, doa)
    t = _tx_side(tx, dod, s)
    return (t[:, None, :] * a_r[None, :, :]).reshape(-1, doa.size)


def khatri_rao_derivatives(eta, rx, tx, s=None):
    """Columnwise derivatives of the dictionary w.r.t. DOA and DOD."""
    doa, dod = split_eta(eta)
    a_r = response_matrix(rx, doa)
    da_r = response_derivative(rx, doa)
    t = _tx_side(tx, dod, s)
    dt = _tx_side(tx, dod, s, derivative=True)
    k = doa.size
    d_doa = (t[:, None, :] * da_r[None, :, :]).reshape(-1, k)
    d_dod = (dt[:, None, :] * a_r[None, :, :]).reshape(-1, k)
    return d_doa, d_dod


@dataclass
class MlFit:
    cost: float
    beta: np.ndarray
    residual: np.ndarray
    a: np.ndarray
    rank_deficient: bool


def ml_fit(eta, h_vec, rx, tx, s=None):
    """Least-squares gains, residual ``P_A^perp h`` and the concentrated cost."""
    a = khatri_rao_dict(eta, rx, tx, s)
    u, sv, vh = np.linalg.svd(a, full_matrices=False)
    keep = sv > PINV_RCOND * sv[0]
    uk = u[:, keep]
    coef = uk.conj().T @ h_vec
    beta = vh[keep].conj().T @ (coef / sv[keep])
    residual = h_vec - uk @ coef
    cost = float(np.vdot(residual, residual).real)
    return MlFit(cost, beta, residual, a, not bool(np.all(keep)))


def ml_cost(eta, h_vec, rx, tx, s=None):
    """``||(I - A A^+) h||^2``."""
    return ml_fit(eta, h_vec, rx, tx, s).cost


def _gradient_from_fit(eta, fit, rx, tx, s=None):
    d_doa, d_dod = khatri_rao_derivatives(eta, rx, tx, s)
    r_h = fit.residual.conj()
    g_doa = -2.0 * np.real(fit.beta * (r_h @ d_doa))
    g_dod = -2.0 * np.real(fit.beta * (r_h @ d_dod))
    return np.concatenate([g_doa, g_dod])


def ml_gradient(eta, h_vec, rx, tx, s=None):
    """Gradient of :func:`ml_cost`.

    Entry ``k`` is ``-2 Re[(A^+ h)_k (h^H P_A^perp d_k)]`` where ``d_k`` is
    the derivative of the ``k``-th dictionary column w.r.t. that angle.
    """
    fit = ml_fit(eta, h_vec, rx, tx, s)
    return _gradient_from_fit(eta, fit, rx, tx, s)


@dataclass
class RefineResult:
    eta: np.ndarray
    beta: np.ndarray
    cost: float
    costs: list
    step: float
    line_search_failed: bool
    rank_deficient: bool


def refine_angles(
    eta,
    h_vec,
    rx,
    tx,
    iters=5,
    init_step=1.0,
    shrink=0.5,
    slope=1e-4,
    start_step=None,
    min_step=1e-14,
    s=None,
):
    """Armijo-backtracked gradient descent on the concentrated ML cost.

    Step sizes are measured as the largest angular move in radians, i.e. the
    trial point is ``eta - t * g / max|g|``. ``start_step`` warm-starts the
    first trial (it is capped at ``init_step``); later iterations try twice
    the last accepted step. The returned cost never exceeds the input cost.
    If the line search underflows the current iterate is returned as is.
    ``s`` switches to the measurement-domain cost (see :func:`khatri_rao_dict`).
    """
    eta = np.asarray(eta, dtype=np.float64).copy()
    fit = ml_fit(eta, h_vec, rx, tx, s)
    costs = [fit.cost]
    t = init_step if start_step is None else min(start_step, init_step)
    failed = False
    for _ in range(iters):
        g = _gradient_from_fit(eta, fit, rx, tx, s)
        gmax = np.max(np.abs(g))
        if gmax == 0.0 or fit.cost == 0.0:
            break
        g2 = float(g @ g)
        while True:
            mu = t / gmax
            trial = fold_angles(eta - mu * g)
            trial_fit = ml_fit(trial, h_vec, rx, tx, s)
            if trial_fit.cost <= fit.cost - slope * mu * g2:
                break
            t *= shrink
            if t < min_step:
                failed = True
                break
        if failed:
            break
        eta, fit = trial, trial_fit
        costs.append(fit.cost)
        t = min(2.0 * t, init_step)
    return RefineResult(eta, fit.beta, fit.cost, costs, t, failed, fit.rank_deficient)


def angle_grid(points):
    """Angles whose cosines are evenly spaced on ``(-1, 1)``."""
    return np.arccos(1.0 - (2.0 * np.arange(points) + 1.0) / points)


def _spectrum(resid, ar_g, tx_g):
    # |a_r^H R t| / ||t|| for every (rx angle, tx atom)
    norms = np.linalg.norm(tx_g, axis=0)
    return np.abs(ar_g.conj().T @ resid @ tx_g) / np.where(norms > 0, norms, np.inf)[None, :]


def coarse_init(target, rx, tx, k, grid_points=64, s=None, refine_iters=10, cycles=1):
    """Greedy grid search with continuous refinement.

    ``target`` is a channel estimate (``s=None``) or measurement-domain data
    ``Y ≈ H S`` (``s`` given). Each round picks the peak of the normalized
    matched-filter spectrum of the current residual, then jointly refines
    all picked angles with :func:`refine_angles`. ``cycles`` further passes
    re-detect every path on the residual of the others, keeping the swap
    only when the fit improves. Grids are uniform in cosine with at least
    twice as many points as array elements. With a ``users`` transmit
    geometry each user column is searched on its own.
    """
    m_r = rx.num_elements
    data_vec = vec(target)
    n_cols = target.shape[1]
    grid_r = angle_grid(max(grid_points, 2 * m_r))
    ar_g = response_matrix(rx, grid_r)

    def refine(eta):
        return refine_angles(eta, data_vec, rx, tx, iters=refine_iters, s=s)

    if tx.kind == "users":
        if k != tx.num_elements:
            raise ValueError("users geometry needs k_paths == number of users")
        tx_g = np.eye(k, dtype=np.complex128)
        if s is not None:
            tx_g = s.conj().T
        spec = _spectrum(target, ar_g, tx_g)
        eta = np.concatenate([grid_r[np.argmax(spec, axis=0)], np.full(k, np.pi / 2)])
        return refine(eta).eta

    grid_t = angle_grid(max(grid_points, 2 * tx.num_elements))
    at_g = response_matrix(tx, grid_t)
    tx_g = at_g if s is None else s.conj().T @ at_g

    def pick(resid_vec):
        spec = _spectrum(resid_vec.reshape(n_cols, m_r).T, ar_g, tx_g)
        i, j = np.unravel_index(np.argmax(spec), spec.shape)
        return grid_r[i], grid_t[j]

    doa, dod = np.empty(0), np.empty(0)
    resid = data_vec
    for _ in range(k):
        a, b = pick(resid)
        ref = refine(np.concatenate([doa, [a], dod, [b]]))
        doa, dod = split_eta(ref.eta)
        resid = ml_fit(ref.eta, data_vec, rx, tx, s).residual
    best = ref
    for _ in range(cycles if k > 1 else 0):
        for p in range(k):
            keep = np.arange(k) != p
            others = np.concatenate([doa[keep], dod[keep]])
            a, b = pick(ml_fit(others, data_vec, rx, tx, s).residual)
            cand = refine(np.concatenate([doa[keep], [a], dod[keep], [b]]))
            if cand.cost < best.cost:
                best = cand
                doa, dod = split_eta(cand.eta)
    return np.concatenate([doa, dod])
