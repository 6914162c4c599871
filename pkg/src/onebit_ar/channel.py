"""Geometric multipath channel, training signals and one-bit observations."""
import math
from dataclasses import dataclass, field

import numpy as np

from .core import as_cmatrix, sign_quantize

__all__ = [
    "ArrayGeometry",
    "ChannelParams",
    "QuantizedObservation",
    "steering_vector",
    "response_matrix",
    "response_derivative",
    "synth_channel",
    "gen_angles",
    "gen_gains",
    "gen_training",
    "observe",
    "noise_variance",
]

GEOMETRY_KINDS = ("ula", "users")
TRAINING_KINDS = ("semi_unitary", "unitary", "gaussian")


@dataclass(frozen=True)
class ArrayGeometry:
    """Array at one end of the link.

    ``kind="ula"`` is a half-wavelength uniform linear array whose element
    ``m`` sees phase ``pi * m * cos(angle)``. ``kind="users"`` models
    ``num_elements`` distributed single-antenna terminals, each reached over
    its own path: the response of path ``k`` is the ``k``-th unit vector and
    does not depend on the angle (uplink with one dominant path per user).
    """

    num_elements: int
    kind: str = "ula"

    def __post_init__(self):
        if self.num_elements < 1:
            raise ValueError("num_elements must be >= 1")
        if self.kind not in GEOMETRY_KINDS:
            raise ValueError(f"unknown geometry kind {self.kind!r}")

    @property
    def angle_dependent(self):
        return self.kind == "ula"


def _check_angles(angles):
    angles = np.atleast_1d(np.asarray(angles, dtype=np.float64))
    if np.any(angles < 0.0) or np.any(angles > np.pi) or not np.all(np.isfinite(angles)):
        raise ValueError("angles must lie in [0, pi]")
    return angles


@dataclass(frozen=True)
class ChannelParams:
    """DOAs, DODs (radians) and complex gains of ``K`` specular paths."""

    doa: np.ndarray
    dod: np.ndarray
    gains: np.ndarray

    def __post_init__(self):
        doa = _check_angles(self.doa)
        dod = _check_angles(self.dod)
        gains = np.atleast_1d(np.asarray(self.gains, dtype=np.complex128))
        if not (doa.size == dod.size == gains.size) or doa.size < 1:
            raise ValueError("doa, dod and gains must share a length K >= 1")
        object.__setattr__(self, "doa", doa)
        object.__setattr__(self, "dod", dod)
        object.__setattr__(self, "gains", gains)

    @property
    def k_paths(self):
        return self.doa.size


@dataclass(frozen=True)
class QuantizedObservation:
    y: np.ndarray
    s: np.ndarray
    snr_db: float
    noise_seed: int = -1
    meta: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        y = as_cmatrix(self.y, "y")
        if not (np.all(np.abs(y.real) == 1.0) and np.all(np.abs(y.imag) == 1.0)):
            raise ValueError("y entries must be in {+-1 +- 1j}")
        s = as_cmatrix(self.s, "s")
        if s.shape[1] != y.shape[1]:
            raise ValueError("y and s must have the same number of columns")
        object.__setattr__(self, "y", y)
        object.__setattr__(self, "s", s)

    @property
    def m_r(self):
        return self.y.shape[0]

    @property
    def m_t(self):
        return self.s.shape[0]

    @property
    def n_train(self):
        return self.y.shape[1]


def steering_vector(geom, angle):
    """ULA response ``exp(j pi m cos(angle))``, ``m = 0..M-1``."""
    if not geom.angle_dependent:
        raise ValueError("steering vectors are only defined for ULA geometries")
    if not 0.0 <= angle <= np.pi:
        raise ValueError(f"angle {angle} outside [0, pi]")
    m = np.arange(geom.num_elements)
    return np.exp(1j * np.pi * m * np.cos(angle))


def response_matrix(geom, angles):
    """Stack of per-path responses, shape ``(num_elements, K)``.

    Angles are not range-checked here: outside ``[0, pi]`` the ULA response
    is that of the mirrored angle, which the optimizer relies on.
    """
    angles = np.atleast_1d(np.asarray(angles, dtype=np.float64))
    if geom.kind == "users":
        if angles.size != geom.num_elements:
            raise ValueError("users geometry needs exactly one path per user")
        return np.eye(geom.num_elements, dtype=np.complex128)
    m = np.arange(geom.num_elements)[:, None]
    return np.exp(1j * np.pi * m * np.cos(angles)[None, :])


def response_derivative(geom, angles):
    """Derivative of :func:`response_matrix` with respect to each angle."""
    angles = np.atleast_1d(np.asarray(angles, dtype=np.float64))
    a = response_matrix(geom, angles)
    if geom.kind == "users":
        return np.zeros_like(a)
    m = np.arange(geom.num_elements)[:, None]
    return 1j * np.pi * m * (-np.sin(angles))[None, :] * a


def synth_channel(params, rx, tx):
    """``H = A_r(doa) diag(gains) A_t(dod)^H``."""
    a_r = response_matrix(rx, params.doa)
    a_t = response_matrix(tx, params.dod)
    return (a_r * params.gains[None, :]) @ a_t.conj().T


def gen_angles(k, rng, min_sep=0.0):
    """Draw ``k`` angles uniformly on ``[0, pi]`` with pairwise gaps >= ``min_sep``.

    Uses the spacing transform: sorted uniforms on ``[0, pi - (k-1) min_sep]``
    shifted by ``i * min_sep``. This is exactly the uniform law on the
    constrained set (what rejection sampling would produce) without the
    rejection loop. The result is returned in random order.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    if min_sep < 0:
        raise ValueError("min_sep must be >= 0")
    slack = np.pi - (k - 1) * min_sep
    if slack < 0:
        raise ValueError(f"cannot place {k} angles {min_sep:.4g} rad apart in [0, pi]")
    base = np.sort(rng.uniform(0.0, slack, size=k))
    angles = base + min_sep * np.arange(k)
    return np.clip(rng.permutation(angles), 0.0, np.pi)


def gen_gains(k, rng):
    """Circular complex Gaussian gains with unit variance."""
    return (rng.standard_normal(k) + 1j * rng.standard_normal(k)) / math.sqrt(2.0)


def gen_training(m_t, n, kind, rng):
    """Training matrix ``S`` of shape ``(m_t, n)``.

    ``semi_unitary`` has orthonormal columns, ``unitary`` is square unitary,
    ``gaussian`` has i.i.d. unit-variance circular entries.
    """
    if kind not in TRAINING_KINDS:
        raise ValueError(f"unknown training kind {kind!r}")
    if kind == "semi_unitary" and n > m_t:
        raise ValueError("semi_unitary training needs n <= m_t")
    if kind == "unitary" and n != m_t:
        raise ValueError("unitary training needs n == m_t")
    g = (rng.standard_normal((m_t, n)) + 1j * rng.standard_normal((m_t, n))) / math.sqrt(2.0)
    if kind == "gaussian":
        return g
    q, r = np.linalg.qr(g)
    # fix the phase ambiguity of QR so the draw is Haar-distributed
    d = np.diagonal(r)
    return q * (d / np.abs(d))[None, :]


def noise_variance(hs, snr_db):
    """Per-complex-entry noise variance ``mean|HS|^2 / 10^(snr_db/10)``."""
    if np.isinf(snr_db) and snr_db > 0:
        return 0.0
    power = float(np.mean(np.abs(hs) ** 2))
    if power == 0.0:
        # no signal: any positive variance gives the same sign statistics
        power = 1.0
    return power / 10.0 ** (snr_db / 10.0)


def observe(h, s, snr_db, rng):
    """One-bit observation ``Y = csign(HS + N)``.

    ``snr_db = inf`` gives the noiseless observation. ``rng`` may be an int
    seed (recorded in the result) or a ``numpy.random.Generator``.
    """
    h = as_cmatrix(h, "h")
    s = as_cmatrix(s, "s")
    if h.shape[1] != s.shape[0]:
        raise ValueError(f"inner dimensions disagree: {h.shape} x {s.shape}")
    seed = -1
    if not isinstance(rng, np.random.Generator):
        seed = int(rng)
        rng = np.random.default_rng(seed)
    hs = h @ s
    sigma2 = noise_variance(hs, snr_db)
    if sigma2 > 0:
        scale = math.sqrt(sigma2 / 2.0)
        hs = hs + scale * (rng.standard_normal(hs.shape) + 1j * rng.standard_normal(hs.shape))
    return QuantizedObservation(sign_quantize(hs), s, float(snr_db), seed)
