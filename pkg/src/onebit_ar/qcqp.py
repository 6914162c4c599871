"""Channel update on the sphere ``||H||_F^2 = R``.

The subproblem

    min_H ||Z - H S||_F^2 + lam ||H - H_tilde||_F^2   s.t.  ||H||_F^2 = R

has the stationary point ``H = Lam (S S^H + rho I)^{-1}`` with
``Lam = Z S^H + lam H_tilde``. The shifted multiplier ``rho`` is the root of
the secular function

    f(rho) = sum_i ||c_i||^2 / (rho + s_i)^2 - R,

``c_i`` the columns of ``Lam U`` and ``(s_i, U)`` the eigenpairs of
``S S^H``. ``f`` is strictly decreasing on ``(-s_min, inf)`` and the root
there gives the global minimizer.
"""
import math

import numpy as np

from . import kernels
from .core import fro_norm_sq, herm_eig

__all__ = [
    "SecularError",
    "training_structure",
    "secular_function",
    "secular_solve",
    "special_case_semi_unitary",
    "special_case_unitary",
    "h_from_rho",
    "solve_h_subproblem",
    "subproblem_objective",
]

STRUCTURE_TOL = 1e-8


class SecularError(ArithmeticError):
    """The norm-constraint root could not be bracketed or located."""


def training_structure(s, tol=STRUCTURE_TOL):
    """Classify ``S`` as ``"unitary"``, ``"semi_unitary"`` or ``"general"``."""
    m_t, n = s.shape
    gram = s.conj().T @ s
    if np.max(np.abs(gram - np.eye(n))) > tol:
        return "general"
    if m_t == n:
        return "unitary"
    return "semi_unitary"


def _secular_terms(lambda_mat, s, eig=None):
    if eig is None:
        eig = herm_eig(s @ s.conj().T)
    c = lambda_mat @ eig.eigenvectors
    c2 = np.sum(c.real ** 2 + c.imag ** 2, axis=0)
    return c2, eig.eigenvalues, eig


def secular_function(rho, lambda_mat, s, r_norm, eig=None):
    c2, sig, _ = _secular_terms(lambda_mat, s, eig)
    d = np.asarray(rho, dtype=np.float64)[..., None] + sig
    return np.sum(c2 / d ** 2, axis=-1) - r_norm


def secular_solve(lambda_mat, s, r_norm, tol=1e-12, eig=None, maxiter=200):
    """Shifted multiplier ``rho`` for the general training matrix."""
    if r_norm <= 0:
        raise ValueError("r_norm must be positive")
    if fro_norm_sq(lambda_mat) == 0.0:
        raise ValueError("Lambda is zero; the norm constraint cannot be met")
    c2, sig, _ = _secular_terms(lambda_mat, s, eig)
    rho, status = kernels.secular_root(c2, sig, float(r_norm), float(tol), int(maxiter))
    if status == 1:
        raise SecularError("no sign change of the secular function on (-s_min, inf)")
    return float(rho)


def special_case_semi_unitary(lambda_mat, s, r_norm, tol=1e-14, maxiter=200):
    """Unique positive root of the quartic that replaces the secular equation
    when ``S^H S = I``."""
    if training_structure(s) == "general":
        raise ValueError("training matrix is not semi-unitary")
    t1 = fro_norm_sq(lambda_mat)
    if t1 == 0.0:
        raise ValueError("Lambda is zero; the norm constraint cannot be met")
    t2 = fro_norm_sq(lambda_mat @ s)
    rho, status = kernels.quartic_root(float(r_norm), t1, t2, float(tol), int(maxiter))
    if status == 1:
        raise SecularError("quartic root could not be bracketed")
    return float(rho)


def special_case_unitary(lambda_mat, r_norm):
    """Closed form ``sqrt(trace(Lam Lam^H) / R) - 1`` for unitary ``S``."""
    t1 = fro_norm_sq(lambda_mat)
    if t1 == 0.0:
        raise ValueError("trace(Lam Lam^H) is zero")
    return math.sqrt(t1 / r_norm) - 1.0


def h_from_rho(lambda_mat, s, rho, path="general", eig=None):
    """``Lam (S S^H + rho I)^{-1}`` using the cheapest form for ``path``."""
    if path == "unitary":
        return lambda_mat / (1.0 + rho)
    if path == "semi_unitary":
        ls = lambda_mat @ s
        return lambda_mat / rho - (ls @ s.conj().T) / (rho * (1.0 + rho))
    if eig is None:
        eig = herm_eig(s @ s.conj().T)
    u = eig.eigenvectors
    return ((lambda_mat @ u) / (eig.eigenvalues + rho)[None, :]) @ u.conj().T


def subproblem_objective(h, z, s, h_tilde, lam):
    return fro_norm_sq(z - h @ s) + lam * fro_norm_sq(h - h_tilde)


def solve_h_subproblem(z, s, h_tilde, lam, r_norm, path=None, eig=None, tol=1e-12):
    """Global minimizer of the sphere-constrained channel subproblem.

    Parameters
    ----------
    z : ndarray
        Amplitude-completed data ``Y ⊚ Γ``, shape ``(M_r, N)``.
    s : ndarray
        Training, ``(M_t, N)``.
    h_tilde : ndarray
        Parametric channel from the current angles and gains.
    lam, r_norm : float
        Regularization weight and squared-norm budget.
    path : {"general", "semi_unitary", "unitary"}, optional
        Root solver to use; detected from ``s`` when omitted.

    Returns
    -------
    h : ndarray
    rho : float
        The shifted multiplier ``rho + lam``.
    path : str
    """
    lambda_mat = z @ s.conj().T + lam * h_tilde
    if fro_norm_sq(lambda_mat) == 0.0:
        raise ValueError("Lambda is zero; the norm constraint cannot be met")
    if path is None:
        path = training_structure(s)
    if path == "unitary":
        rho = special_case_unitary(lambda_mat, r_norm)
    elif path == "semi_unitary":
        rho = special_case_semi_unitary(lambda_mat, s, r_norm)
        if rho <= 0.0:
            # degenerate quartic (Lam has no component outside range(S));
            # fall back to the general root on (-s_min, inf)
            path = "general"
            rho = secular_solve(lambda_mat, s, r_norm, tol, eig)
    else:
        rho = secular_solve(lambda_mat, s, r_norm, tol, eig)
    return h_from_rho(lambda_mat, s, rho, path, eig), rho, path
