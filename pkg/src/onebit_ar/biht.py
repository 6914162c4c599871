"""On-grid one-bit compressive sensing baseline (binary iterative hard
thresholding over a Kronecker angular dictionary)."""
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from . import kernels
from .channel import response_matrix
from .core import fro_norm_sq

__all__ = ["AngularDictionary", "build_dictionary", "sensing_matrix", "biht_estimate", "BihtResult"]


@dataclass(frozen=True)
class AngularDictionary:
    """Unit-norm atoms ``vec(a_r(t) a_t(p)^H) / scale`` over an angle grid.

    Column ``i_tx * grid_points + i_rx`` pairs receive grid angle ``i_rx``
    with transmit atom ``i_tx`` (a grid angle for a ULA, a user index for
    the ``users`` geometry). Only the factors are stored; :attr:`dict`
    materializes the full matrix on first access.
    """

    grid_points: int
    grid: np.ndarray
    rx_atoms: np.ndarray
    tx_atoms: np.ndarray
    scale: float

    @property
    def m_r(self):
        return self.rx_atoms.shape[0]

    @property
    def m_t(self):
        return self.tx_atoms.shape[0]

    @property
    def size(self):
        return self.rx_atoms.shape[1] * self.tx_atoms.shape[1]

    def column_index(self, i_rx, i_tx):
        return i_tx * self.grid_points + i_rx

    @cached_property
    def dict(self):
        d = self.tx_atoms.conj()[:, None, :, None] * self.rx_atoms[None, :, None, :]
        return d.reshape(self.m_r * self.m_t, self.size) / self.scale

    def channel(self, coef):
        """``unvec(D @ coef)`` without forming ``D``."""
        x = np.asarray(coef).reshape(self.grid_points, -1, order="F")
        i, j = np.nonzero(x)
        return (self.rx_atoms[:, i] * x[i, j][None, :]) @ self.tx_atoms[:, j].conj().T / self.scale


def build_dictionary(rx, tx, grid_points=128):
    """Grid ``[0, pi)`` with spacing ``pi / grid_points`` on each angle."""
    if grid_points < 2:
        raise ValueError("grid_points must be >= 2")
    grid = np.arange(grid_points) * np.pi / grid_points
    a_r = response_matrix(rx, grid)
    if tx.kind == "users":
        a_t = np.eye(tx.num_elements, dtype=np.complex128)
    else:
        a_t = response_matrix(tx, grid)
    scale = float(np.sqrt(rx.num_elements * np.sum(np.abs(a_t[:, 0]) ** 2)))
    return AngularDictionary(grid_points, grid, a_r, a_t, scale)


def sensing_matrix(dictionary, s):
    """Explicit ``Phi = (S^T ⊗ I) D`` so that ``vec(H S) = Phi x`` for ``vec(H) = D x``."""
    m_r, m_t = dictionary.m_r, dictionary.m_t
    n = s.shape[1]
    d3 = dictionary.dict.reshape(m_t, m_r * dictionary.size)
    return (s.T @ d3).reshape(n * m_r, dictionary.size)


@dataclass
class BihtResult:
    h: np.ndarray
    coef: np.ndarray
    support: np.ndarray
    iterations: int


def biht_estimate(obs, dictionary, sparsity_k, iters=300, step=None, r_norm=None):
    """Binary iterative hard thresholding.

    Iterates ``x <- H_K(x + step * Phi^H (y - csign(Phi x)))``, the complex
    form of the real-composite update on ``[Re x; Im x]``. Thresholding keeps
    the ``sparsity_k`` coefficients of largest modulus; the start point is
    ``H_K(step * Phi^H y)``. ``Phi`` factors as ``(B^T ⊗ A_r) / scale`` with
    ``B = A_t^H S``, so it is applied through the grid factors and never
    formed. The default step is ``1 / ||Phi||_2^2``. The channel estimate is
    rescaled to ``||H||_F^2 = r_norm`` (``M_r M_t K`` if omitted).
    """
    if sparsity_k < 1:
        raise ValueError("sparsity_k must be >= 1")
    y = obs.y
    a_r = dictionary.rx_atoms
    b = dictionary.tx_atoms.conj().T @ obs.s
    c = dictionary.scale
    if step is None:
        step = (c / (np.linalg.norm(a_r, 2) * np.linalg.norm(b, 2))) ** 2
    k = min(sparsity_k, dictionary.size)
    shape = (dictionary.grid_points, b.shape[0])

    def adjoint(r):
        return (a_r.conj().T @ r @ b.conj().T) / c

    def threshold(xm):
        return kernels.hard_threshold(xm.reshape(-1, order="F"), k).reshape(shape, order="F")

    x = threshold(step * adjoint(y))
    for _ in range(iters):
        i, j = np.nonzero(x)
        phix = (a_r[:, i] * x[i, j][None, :]) @ b[j, :] / c
        x = threshold(x + step * adjoint(y - kernels.csign(phix)))

    coef = x.reshape(-1, order="F")
    h = dictionary.channel(coef)
    if r_norm is None:
        r_norm = dictionary.m_r * dictionary.m_t * sparsity_k
    norm = fro_norm_sq(h)
    if norm > 0:
        h = h * np.sqrt(r_norm / norm)
    return BihtResult(h, coef, np.flatnonzero(coef), iters)
