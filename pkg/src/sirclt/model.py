"""Entry distributions, signature ensembles and the sampling discipline.

Every random quantity in the package is drawn from a Philox-4x64 counter
stream.  Entry ``(i, k)`` of trial ``trial`` consumes 64-bit words
``2j`` and ``2j + 1`` (``j = i*K + k``) of the stream keyed by
``(seed, trial)``, so a matrix is the same whichever way it is produced:
in one vectorised call, entry by entry, or split across workers.

Words become uniforms on 53 bits.  Gaussian entries use Box-Muller on the
two uniforms of the entry:

* complex:  ``sqrt(-log u1) * exp(2*pi*i*u2)``  (E|v|^2 = 1, E v^2 = 0)
* real:     ``sqrt(-2 log u1) * cos(2*pi*u2)``

QPSK and Rademacher signs come from the top bit of each word.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "DIST_KINDS",
    "EntryDist",
    "ModelParams",
    "Ensemble",
    "RngStream",
    "sample_entry",
    "sample_ensemble",
    "philox_words",
]

DIST_KINDS = ("complex-gaussian", "qpsk", "real-gaussian", "rademacher")

# kind -> (E|v|^4, is_complex, E v^2, lattice scale^2)
_DIST_TABLE = {
    "complex-gaussian": (2.0, True, 0.0, 1.0),
    "qpsk": (1.0, True, 0.0, 0.5),
    "real-gaussian": (3.0, False, 1.0, 1.0),
    "rademacher": (1.0, False, 1.0, 1.0),
}

_U53 = 2.0**-53


@dataclass(frozen=True)
class EntryDist:
    """Law of the raw signature entries ``v_ik``.

    All kinds are centred with unit second absolute moment.  ``scale2`` is
    the squared factor between the stored lattice values and the actual
    entries (QPSK is stored as ``±1±i`` with ``scale2 = 1/2``) so that
    unit-modulus identities hold exactly in floating point.
    """

    kind: str = "complex-gaussian"

    def __post_init__(self):
        if self.kind not in _DIST_TABLE:
            raise ValueError(f"unknown entry distribution {self.kind!r}; "
                             f"expected one of {DIST_KINDS}")

    @property
    def fourth_moment(self) -> float:
        return _DIST_TABLE[self.kind][0]

    @property
    def is_complex(self) -> bool:
        return _DIST_TABLE[self.kind][1]

    @property
    def second_moment_sq(self) -> float:
        return _DIST_TABLE[self.kind][2]

    @property
    def scale2(self) -> float:
        return _DIST_TABLE[self.kind][3]


@dataclass(frozen=True)
class ModelParams:
    c: float
    sigma2: float
    dist: EntryDist = field(default_factory=EntryDist)
    m_stages: int = 1

    def __post_init__(self):
        if not self.c > 0:
            raise ValueError("ratio c must be positive")
        if self.sigma2 < 0:
            raise ValueError("sigma2 must be nonnegative")
        if self.m_stages < 1:
            raise ValueError("m_stages must be >= 1")


def philox_words(seed: int, trial: int, start: int, count: int) -> np.ndarray:
    """Words ``start .. start+count-1`` of the stream keyed by (seed, trial)."""
    key = np.array([seed, trial], dtype=np.uint64)
    block, offset = divmod(start, 4)
    gen = np.random.Philox(key=key, counter=np.array([block, 0, 0, 0], dtype=np.uint64))
    return gen.random_raw(offset + count)[offset:]


class RngStream:
    """Cursor over the (seed, trial) stream, positioned at an entry index."""

    def __init__(self, seed: int, trial: int = 0, index: int = 0):
        self.seed = int(seed)
        self.trial = int(trial)
        self.index = int(index)

    def take(self) -> tuple[int, int]:
        w = philox_words(self.seed, self.trial, 2 * self.index, 2)
        self.index += 1
        return int(w[0]), int(w[1])


def _lattice(kind: str, w: np.ndarray) -> np.ndarray:
    """Map word pairs (last axis) to lattice values for ``kind``."""
    w1, w2 = w[..., 0], w[..., 1]
    if kind in ("complex-gaussian", "real-gaussian"):
        u1 = ((w1 >> np.uint64(11)).astype(np.float64) + 1.0) * _U53
        u2 = (w2 >> np.uint64(11)).astype(np.float64) * _U53
        theta = 2.0 * np.pi * u2
        if kind == "complex-gaussian":
            r = np.sqrt(-np.log(u1))
            return r * np.cos(theta) + 1j * (r * np.sin(theta))
        return np.sqrt(-2.0 * np.log(u1)) * np.cos(theta)
    sign1 = 1.0 - 2.0 * (w1 >> np.uint64(63)).astype(np.float64)
    if kind == "rademacher":
        return sign1
    sign2 = 1.0 - 2.0 * (w2 >> np.uint64(63)).astype(np.float64)
    return sign1 + 1j * sign2


def sample_entry(dist: EntryDist, stream: RngStream) -> complex:
    """One draw of ``v`` from ``dist``, advancing ``stream`` by one entry."""
    w = np.array(stream.take(), dtype=np.uint64)
    return complex(np.sqrt(dist.scale2) * _lattice(dist.kind, w))


@dataclass(frozen=True, eq=False)
class Ensemble:
    """Signature matrix ``S = V * sqrt(scale2 / N)`` and user powers ``P``.

    ``V`` holds lattice values (see :class:`EntryDist`); column ``k`` of
    ``S`` is the signature ``s_k``.
    """

    N: int
    K: int
    V: np.ndarray
    P: np.ndarray
    dist: EntryDist
    seed: int | None = None
    trial: int | None = None

    def __post_init__(self):
        object.__setattr__(self, "S", self.V * np.sqrt(self.dist.scale2 / self.N))
        self.V.setflags(write=False)
        self.S.setflags(write=False)

    @property
    def c_N(self) -> float:
        return self.N / self.K

    @property
    def unit_powers(self) -> bool:
        return bool(np.all(self.P == 1.0))

    def column_norms2(self) -> np.ndarray:
        """``||s_k||^2``; exact for unit-modulus lattices."""
        return self.dist.scale2 * np.sum(_abs2(self.V), axis=0) / self.N


def _abs2(x: np.ndarray) -> np.ndarray:
    if np.iscomplexobj(x):
        return x.real**2 + x.imag**2
    return x * x


def sample_ensemble(N: int, K: int, powers=None, dist: EntryDist | str = "complex-gaussian",
                    seed: int = 0, trial: int = 0) -> Ensemble:
    """Draw the signature ensemble of trial ``trial`` under ``seed``.

    Pure function of its arguments; entry ``(i, k)`` equals
    ``sample_entry(dist, RngStream(seed, trial, i*K + k))``.
    """
    if N < 1 or K < 1:
        raise ValueError("N and K must be positive")
    if isinstance(dist, str):
        dist = EntryDist(dist)
    if powers is None:
        P = np.ones(K)
    else:
        P = np.asarray(powers, dtype=float)
        if P.shape != (K,):
            raise ValueError(f"powers must have length K={K}")
        if np.any(P <= 0) or not np.all(np.isfinite(P)):
            raise ValueError("powers must be positive and finite")
        P = P.copy()
    w = philox_words(seed, trial, 0, 2 * N * K).reshape(N, K, 2)
    V = _lattice(dist.kind, w)
    P.setflags(write=False)
    return Ensemble(N=N, K=K, V=V, P=P, dist=dist, seed=seed, trial=trial)
