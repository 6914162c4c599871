"""Dense complex-matrix helpers and the element-wise operators of the one-bit
signal model.

Matrices are plain ``numpy.ndarray`` objects of dtype ``complex128``.
"""
from dataclasses import dataclass

import numpy as np

from . import kernels

__all__ = [
    "HermEig",
    "as_cmatrix",
    "sign_quantize",
    "amplitude",
    "odot_mix",
    "hadamard",
    "pinv",
    "herm_eig",
    "fro_norm_sq",
]

PINV_RCOND = 1e-10


def as_cmatrix(a, name="matrix"):
    """Return ``a`` as a finite 2-D complex128 array."""
    a = np.asarray(a, dtype=np.complex128)
    if a.ndim != 2:
        raise ValueError(f"{name} must be 2-D, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise ValueError(f"{name} has non-finite entries")
    return a


def _same_shape(a, b):
    if a.shape != b.shape:
        raise ValueError(f"dimension mismatch: {a.shape} vs {b.shape}")


def sign_quantize(z):
    """One-bit quantizer applied separately to real and imaginary parts.

    ``sign(0)`` is taken as +1, so every output entry is one of ``±1±1j``.
    """
    z = np.asarray(z, dtype=np.complex128)
    if not np.all(np.isfinite(z)):
        raise ValueError("input has non-finite entries")
    return kernels.csign(z)


def amplitude(z):
    """Lost amplitudes ``|Re z| + j|Im z|``; ``odot_mix(sign_quantize(z), amplitude(z)) == z``."""
    z = np.asarray(z, dtype=np.complex128)
    return np.abs(z.real) + 1j * np.abs(z.imag)


def odot_mix(a, b):
    """Component-mixing product ``Re(a)Re(b) + j Im(a)Im(b)``."""
    a = np.asarray(a, dtype=np.complex128)
    b = np.asarray(b, dtype=np.complex128)
    _same_shape(a, b)
    return a.real * b.real + 1j * (a.imag * b.imag)


def hadamard(a, b):
    a = np.asarray(a, dtype=np.complex128)
    b = np.asarray(b, dtype=np.complex128)
    _same_shape(a, b)
    return a * b


def pinv(a, rcond=PINV_RCOND):
    """Moore-Penrose pseudo-inverse.

    Singular values below ``rcond * sigma_max`` are treated as zero.
    """
    a = np.asarray(a, dtype=np.complex128)
    if a.size == 0:
        raise ValueError("pinv of an empty matrix")
    return np.linalg.pinv(a, rcond=rcond)


@dataclass(frozen=True)
class HermEig:
    """Eigen-decomposition ``M = U diag(eigenvalues) U^H`` (ascending order)."""

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray


def herm_eig(m, atol=1e-10):
    m = as_cmatrix(m)
    if m.shape[0] != m.shape[1]:
        raise ValueError("herm_eig needs a square matrix")
    scale = max(1.0, np.max(np.abs(m)))
    if np.max(np.abs(m - m.conj().T)) > atol * scale:
        raise ValueError("matrix is not Hermitian")
    w, v = np.linalg.eigh(m)
    return HermEig(w, v)


def fro_norm_sq(a):
    a = np.asarray(a, dtype=np.complex128)
    return float(np.sum(a.real ** 2 + a.imag ** 2))
