"""Invariant and oracle checks on small random instances.

Each check returns a :class:`CheckResult`; :func:`run_checks` runs them all.
These are quick sanity runs for an installed copy, the test suite goes
further.
"""
import math
from dataclasses import dataclass

import numpy as np

from . import kernels
from .ar import ArConfig, run_ar, update_gamma
from .channel import ArrayGeometry, ChannelParams, gen_angles, gen_gains, gen_training, observe, synth_channel
from .core import fro_norm_sq, herm_eig, odot_mix, pinv, sign_quantize
from .ml import ml_cost, ml_gradient
from .qcqp import (
    h_from_rho,
    secular_function,
    secular_solve,
    solve_h_subproblem,
    special_case_semi_unitary,
    special_case_unitary,
    subproblem_objective,
)

__all__ = ["CheckResult", "CHECKS", "run_checks"]


@dataclass
class CheckResult:
    name: str
    passed: bool
    detail: str


def _crandn(rng, *shape):
    return rng.standard_normal(shape) + 1j * rng.standard_normal(shape)


def check_sign(rng):
    z = _crandn(rng, 6, 5)
    q = sign_quantize(z)
    ok = np.array_equal(sign_quantize(q), q) and np.allclose(odot_mix(q, np.abs(z.real) + 1j * np.abs(z.imag)), z)
    return ok, "sign idempotent, Y ⊚ |Z| recovers Z"


def check_pinv(rng):
    a = _crandn(rng, 7, 3)
    p = pinv(a)
    err = max(np.abs(a @ p @ a - a).max(), np.abs(p @ a @ p - p).max())
    return err < 1e-10, f"Penrose residual {err:.2e}"


def check_eig(rng):
    s = _crandn(rng, 5, 9)
    e = herm_eig(s @ s.conj().T)
    rec = (e.eigenvectors * e.eigenvalues) @ e.eigenvectors.conj().T
    err = np.abs(rec - s @ s.conj().T).max()
    return err < 1e-10, f"reconstruction error {err:.2e}"


def check_gradient(rng):
    rx, tx = ArrayGeometry(8), ArrayGeometry(8)
    eta = np.concatenate([gen_angles(2, rng, 0.3), gen_angles(2, rng, 0.3)])
    h = _crandn(rng, 64)
    g = ml_gradient(eta, h, rx, tx)
    fd = np.empty_like(g)
    for i in range(eta.size):
        e = np.zeros_like(eta)
        e[i] = 1e-6
        fd[i] = (ml_cost(eta + e, h, rx, tx) - ml_cost(eta - e, h, rx, tx)) / 2e-6
    err = np.linalg.norm(g - fd) / np.linalg.norm(fd)
    return err < 1e-5, f"relative error vs central differences {err:.2e}"


def check_secular(rng):
    s = _crandn(rng, 4, 6)
    lam_mat = _crandn(rng, 3, 4)
    r = 5.0
    rho = secular_solve(lam_mat, s, r)
    res = abs(secular_function(rho, lam_mat, s, r))
    h = h_from_rho(lam_mat, s, rho)
    return res <= 1e-8 * r and abs(fro_norm_sq(h) - r) <= 1e-8 * r, f"root residual {res:.2e}"


def check_special_cases(rng):
    lam_mat = _crandn(rng, 3, 4)
    s_semi = gen_training(4, 3, "semi_unitary", rng)
    s_uni = gen_training(4, 4, "unitary", rng)
    r = 7.0
    a = special_case_semi_unitary(lam_mat, s_semi, r)
    b = secular_solve(lam_mat, s_semi, r)
    c = special_case_unitary(lam_mat, r)
    d = secular_solve(lam_mat, s_uni, r)
    e1, e2 = abs(a - b) / abs(b), abs(c - d) / abs(d)
    return e1 <= 1e-6 and e2 <= 1e-8, f"quartic vs general {e1:.1e}, closed form vs general {e2:.1e}"


def check_h_optimal(rng):
    z = _crandn(rng, 4, 4)
    s = _crandn(rng, 4, 4)
    h_tilde = _crandn(rng, 4, 4)
    r = 16.0
    h, _, _ = solve_h_subproblem(z, s, h_tilde, 1.0, r, path="general")
    best = subproblem_objective(h, z, s, h_tilde, 1.0)
    cand = _crandn(rng, 2000, 4, 4)
    cand *= np.sqrt(r / np.sum(np.abs(cand) ** 2, axis=(1, 2)))[:, None, None]
    vals = np.sum(np.abs(z - cand @ s) ** 2, axis=(1, 2)) + np.sum(np.abs(cand - h_tilde) ** 2, axis=(1, 2))
    margin = vals.min() - best
    return margin >= -1e-8, f"margin over 2000 sphere samples {margin:.3e}"


def check_gamma_optimal(rng):
    y = sign_quantize(_crandn(rng, 5, 5))
    hs = _crandn(rng, 5, 5)
    g = update_gamma(y, hs)
    base = np.abs(odot_mix(y, g) - hs) ** 2
    grid = np.linspace(0.0, 5.0, 201)
    scan = ((y.real[..., None] * grid - hs.real[..., None]) ** 2).min(-1)
    scan = scan + ((y.imag[..., None] * grid - hs.imag[..., None]) ** 2).min(-1)
    gap = (scan - base).min()
    ok = g.real.min() >= 0 and g.imag.min() >= 0 and gap >= -1e-12
    return ok, f"worst scan gap {gap:.2e}"


def check_monotone(rng):
    rx, tx = ArrayGeometry(4), ArrayGeometry(8)
    worst = 0.0
    for _ in range(3):
        p = ChannelParams(gen_angles(2, rng, 0.2), gen_angles(2, rng, 0.2), gen_gains(2, rng))
        h = synth_channel(p, rx, tx)
        obs = observe(h, gen_training(8, 8, "unitary", rng), 10.0, rng)
        _, _, st = run_ar(obs, ArConfig(k_paths=2, r_norm=fro_norm_sq(h), max_outer_iters=40), rx, tx)
        tr = np.asarray(st.objective_trace)
        if tr.size > 1:
            worst = max(worst, float(np.max((tr[1:] - tr[:-1]) / tr[:-1])))
    return worst <= 1e-9, f"largest relative increase {worst:.2e}"


def check_kernels(rng):
    z = _crandn(rng, 9, 7)
    y = sign_quantize(_crandn(rng, 9, 7))
    ok = np.array_equal(kernels.csign_np(z), kernels.csign_nb(z))
    ok &= np.allclose(kernels.gamma_update_np(y, z), kernels.gamma_update_nb(y, z))
    c2, sig = rng.random(5) + 0.1, rng.random(5)
    a = kernels.secular_root_np(c2, sig, 2.0, 1e-12, 200)[0]
    b = kernels.secular_root_nb(c2, sig, 2.0, 1e-12, 200)[0]
    ok &= math.isclose(a, b, rel_tol=1e-10)
    x = _crandn(rng, 40)
    ok &= np.array_equal(kernels.hard_threshold_np(x, 4), kernels.hard_threshold_nb(x, 4))
    return bool(ok), f"numba and numpy kernels agree (numba active: {kernels.USE_NUMBA})"


CHECKS = {
    "sign-quantizer": check_sign,
    "pseudo-inverse": check_pinv,
    "hermitian-eig": check_eig,
    "ml-gradient": check_gradient,
    "secular-root": check_secular,
    "special-cases": check_special_cases,
    "h-update-optimal": check_h_optimal,
    "gamma-update-optimal": check_gamma_optimal,
    "objective-monotone": check_monotone,
    "kernel-agreement": check_kernels,
}


def run_checks(seed=0, names=None):
    """Run the named checks (all by default) with a seeded generator each."""
    out = []
    for i, (name, fn) in enumerate(CHECKS.items()):
        if names is not None and name not in names:
            continue
        rng = np.random.default_rng([seed, i])
        try:
            ok, detail = fn(rng)
        except Exception as exc:  # report, do not abort the suite
            ok, detail = False, f"{type(exc).__name__}: {exc}"
        out.append(CheckResult(name, bool(ok), detail))
    return out
