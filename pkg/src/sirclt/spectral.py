"""Polynomial linear spectral statistics of ``A = c_N S P S*``.

Eigenvalue statistics ``sum_i lambda_i^r - N M_r(c_N)`` are computed from
traces for ``r <= 2`` and from a Hermitian eigensolver otherwise.
Eigenvector-weighted statistics ``sqrt(N)(x* A^r x - M_r(c_N))`` only need
matrix-vector products.

Degrees are measured on the scaled matrix ``A``.  The unscaled Gram
``H = S S*`` has ``x* H^r x = c_N^-r x* A^r x``, so the ``h_u``-moment
convention is recovered by dividing by ``c_N**r``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .errors import EigFailure, XNotSpread
from .model import Ensemble, _abs2, philox_words
from .moments import mp_moment
from .receivers import apply_interference

__all__ = [
    "LssSample",
    "eigenvalues",
    "lss_eigenvalue",
    "lss_eigenvector",
    "lss_sample",
    "quadratic_form_moments",
    "uniform_x",
    "random_x",
    "SPREAD_CONSTANT",
]

SPREAD_CONSTANT = 5.0


@dataclass(frozen=True)
class LssSample:
    kind: str
    degrees: tuple
    values: tuple
    N: int
    K: int
    c_N: float
    x_choice: str | None = None


def _weighted(E: Ensemble) -> np.ndarray:
    return E.S if E.unit_powers else E.S * np.sqrt(E.P)


def _small_gram(X: np.ndarray) -> np.ndarray:
    """``X X*`` or ``X* X``, whichever is smaller (same nonzero spectrum)."""
    N, K = X.shape
    G = X @ X.conj().T if N <= K else X.conj().T @ X
    return 0.5 * (G + G.conj().T)


def eigenvalues(E: Ensemble) -> np.ndarray:
    """Ascending eigenvalues of ``A = c_N S P S*`` (length N)."""
    X = _weighted(E)
    A = E.c_N * (X @ X.conj().T)
    A = 0.5 * (A + A.conj().T)
    try:
        lam, U = scipy.linalg.eigh(A)
    except (np.linalg.LinAlgError, ValueError) as exc:
        raise EigFailure(str(exc)) from exc
    norm = max(np.abs(lam).max(), np.finfo(float).tiny)
    resid = np.abs(A @ U - U * lam).max()
    if not np.all(np.isfinite(lam)) or resid > 1e-10 * norm:
        raise EigFailure(f"eigensolver residual {resid:.3g} exceeds 1e-10 ||A||")
    return lam


def _trace_power(E: Ensemble, r: int) -> float:
    if r == 1:
        if E.unit_powers:
            # exact for lattice entries: integer sums times a power of two
            return float(E.dist.scale2 * np.sum(_abs2(E.V)) / E.K)
        return float(E.c_N * np.sum(E.P * E.column_norms2()))
    if r == 2:
        G = _small_gram(_weighted(E))
        return float(E.c_N**2 * np.sum(_abs2(G)))
    return float(np.sum(eigenvalues(E) ** r))


def lss_eigenvalue(E: Ensemble, r: int, via: str = "trace") -> float:
    """``sum_i lambda_i^r - N M_r(c_N)``.

    ``via="trace"`` uses traces for ``r <= 2``; ``via="eig"`` always goes
    through the eigenvalues.
    """
    if r < 1:
        raise ValueError("degree must be >= 1")
    if via == "eig":
        tr = float(np.sum(eigenvalues(E) ** r))
    elif via == "trace":
        tr = _trace_power(E, r)
    else:
        raise ValueError(f"unknown route {via!r}")
    return tr - E.N * mp_moment(r, E.c_N)


def uniform_x(N: int) -> np.ndarray:
    return np.full(N, 1.0 / np.sqrt(N), dtype=complex)


def random_x(E: Ensemble) -> np.ndarray:
    """Random complex unit vector drawn from the trial's stream past the matrix words."""
    w = philox_words(E.seed or 0, E.trial or 0, 2 * E.N * E.K, 2 * E.N).reshape(E.N, 2)
    u1 = ((w[:, 0] >> np.uint64(11)).astype(float) + 1.0) * 2.0**-53
    u2 = (w[:, 1] >> np.uint64(11)).astype(float) * 2.0**-53
    z = np.sqrt(-np.log(u1)) * np.exp(2j * np.pi * u2)
    return z / np.linalg.norm(z)


def _check_x(x: np.ndarray, N: int):
    x = np.asarray(x, dtype=complex)
    if x.shape != (N,):
        raise ValueError(f"x must have length N={N}")
    if abs(np.linalg.norm(x) - 1.0) > 1e-10:
        raise ValueError("x must be a unit vector")
    if np.abs(x).max() > SPREAD_CONSTANT / np.sqrt(N):
        raise XNotSpread(f"max|x_i| = {np.abs(x).max():.3g} > {SPREAD_CONSTANT}/sqrt(N); "
                         "the eigenvector CLT does not apply")
    return x


def _apply_A(E: Ensemble):
    X = _weighted(E)
    XH = X.conj().T
    return lambda v: E.c_N * (X @ (XH @ v))


def lss_eigenvector(E: Ensemble, x: np.ndarray, r: int) -> float:
    """``sqrt(N) (x* A^r x - M_r(c_N))`` by repeated products with ``A``."""
    if r < 1:
        raise ValueError("degree must be >= 1")
    x = _check_x(x, E.N)
    apply = _apply_A(E)
    half = r // 2
    u = x
    for _ in range(half):
        u = apply(u)
    if r % 2:
        q = np.vdot(u, apply(u))
    else:
        q = np.vdot(u, u)
    return float(np.sqrt(E.N) * (q.real - mp_moment(r, E.c_N)))


def lss_sample(E: Ensemble, degrees, kind: str = "eigenvalue", x=None,
               x_choice: str = "uniform") -> LssSample:
    degrees = tuple(int(r) for r in degrees)
    if kind == "eigenvalue":
        vals = tuple(lss_eigenvalue(E, r) for r in degrees)
        x_choice = None
    elif kind == "eigenvector":
        if x is None:
            x = uniform_x(E.N) if x_choice == "uniform" else random_x(E)
        vals = tuple(lss_eigenvector(E, x, r) for r in degrees)
    else:
        raise ValueError(f"unknown kind {kind!r}")
    if not all(np.isfinite(vals)):
        raise FloatingPointError("non-finite statistic")
    return LssSample(kind, degrees, vals, E.N, E.K, E.c_N, x_choice)


def quadratic_form_moments(E: Ensemble, k: int, degrees, sigma2: float) -> np.ndarray:
    """``sqrt(N) (s_k* R_k^d s_k - Tr(R_k^d)/N)`` for each ``d`` in ``degrees``."""
    degrees = [int(d) for d in degrees]
    if any(d < 0 for d in degrees):
        raise ValueError("degrees must be nonnegative")
    s = E.S[:, k]
    apply = apply_interference(E, k, sigma2)
    keep = np.arange(E.K) != k
    others = (E.S * np.sqrt(E.P))[:, keep]
    mu = np.zeros(E.N)
    if others.shape[1]:
        ev = scipy.linalg.eigvalsh(_small_gram(others))
        mu[: ev.size] = np.clip(ev, 0.0, None)
    spec = mu + sigma2
    out = np.empty(len(degrees))
    top = max(degrees, default=0)
    powers = {0: s}
    for d in range(1, top + 1):
        powers[d] = apply(powers[d - 1])
    n2 = float(E.column_norms2()[k])
    for i, d in enumerate(degrees):
        q = n2 if d == 0 else float(np.real(np.vdot(s, powers[d])))
        out[i] = np.sqrt(E.N) * (q - np.sum(spec**d) / E.N)
    return out
