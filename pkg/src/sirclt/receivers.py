"""Finite-N linear receivers: matched filter, MMSE and multistage Wiener.

User indices are 0-based.  ``R_k`` is the interference-plus-noise matrix
``sum_{j != k} p_j s_j s_j* + sigma2 I`` seen by user ``k``; it is applied
as an operator (two thin matrix products) unless an explicit solve is
needed.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, Union

import numpy as np
import scipy.linalg

from .errors import DegenerateKrylov, SolveFailure, ZeroReceiver, ZeroSignature
from .formulas import hankel_system
from .model import Ensemble

__all__ = [
    "SirResult",
    "interference_matrix",
    "apply_interference",
    "mf_sir",
    "mf_sir_all",
    "mmse_sir",
    "krylov_basis",
    "msw_sir",
    "msw_weights",
    "generic_sir",
    "msw_fluctuation",
    "mf_sum_statistic",
    "mf_mi_statistic",
]

_PIVOT_TOL = 1e-12
_KRYLOV_TOL = 1e-12


@dataclass(frozen=True)
class SirResult:
    user: int
    receiver: str
    value: float
    m: int | None = None


def _check_user(E: Ensemble, k: int):
    if not 0 <= k < E.K:
        raise IndexError(f"user {k} out of range for K={E.K}")


def _others(E: Ensemble, k: int):
    keep = np.arange(E.K) != k
    return E.S[:, keep], E.P[keep]


def interference_matrix(E: Ensemble, k: int, sigma2: float) -> np.ndarray:
    _check_user(E, k)
    Sk, Pk = _others(E, k)
    R = (Sk * Pk) @ Sk.conj().T
    R[np.diag_indices(E.N)] += sigma2
    return 0.5 * (R + R.conj().T)


def apply_interference(E: Ensemble, k: int, sigma2: float) -> Callable[[np.ndarray], np.ndarray]:
    """Matrix-free ``x -> R_k x`` for vectors or column blocks."""
    _check_user(E, k)
    Sk, Pk = _others(E, k)
    SkH = Sk.conj().T

    def apply(x):
        y = SkH @ x
        y = (Pk[:, None] * y) if y.ndim == 2 else Pk * y
        return Sk @ y + sigma2 * x

    return apply


def _quad(x, y) -> float:
    return float(np.real(np.vdot(x, y)))


def mf_sir(E: Ensemble, k: int, sigma2: float) -> SirResult:
    """``p_k (s_k* s_k)^2 / (s_k* R_k s_k)``."""
    _check_user(E, k)
    s = E.S[:, k]
    n2 = _quad(s, s)
    if n2 == 0.0:
        raise ZeroSignature(f"signature of user {k} is zero")
    Sk, Pk = _others(E, k)
    proj = Sk.conj().T @ s
    den = sigma2 * n2 + float(np.sum(Pk * np.abs(proj) ** 2))
    return SirResult(k, "mf", E.P[k] * n2**2 / den, 1)


def mf_sir_all(E: Ensemble, sigma2: float) -> np.ndarray:
    """Matched-filter SIR of every user from one Gram matrix."""
    G = E.S.conj().T @ E.S
    n2 = np.real(np.diag(G)).copy()
    if np.any(n2 == 0.0):
        raise ZeroSignature("a signature is zero")
    interf = (np.abs(G) ** 2) @ E.P - E.P * n2**2
    return E.P * n2**2 / (sigma2 * n2 + interf)


def _chol(M: np.ndarray, what: str):
    try:
        L = np.linalg.cholesky(M)
    except np.linalg.LinAlgError as exc:
        raise SolveFailure(f"{what}: Cholesky breakdown") from exc
    piv = np.real(np.diag(L)) ** 2
    if piv.min() < _PIVOT_TOL * np.real(np.diag(M)).max():
        raise SolveFailure(f"{what}: relative pivot {piv.min() / np.real(np.diag(M)).max():.3g}")
    return L


def mmse_sir(E: Ensemble, k: int, sigma2: float) -> SirResult:
    """``p_k s_k* R_k^{-1} s_k`` via a Cholesky solve."""
    if not sigma2 > 0:
        raise SolveFailure("MMSE requires sigma2 > 0")
    R = interference_matrix(E, k, sigma2)
    L = _chol(R, "MMSE")
    s = E.S[:, k]
    y = scipy.linalg.solve_triangular(L, s, lower=True)
    return SirResult(k, "mmse", E.P[k] * _quad(y, y))


Operator = Union[np.ndarray, Callable[[np.ndarray], np.ndarray]]


def krylov_basis(R: Operator, s: np.ndarray, m: int) -> np.ndarray:
    """Orthonormal basis of ``span{s, R s, ..., R^{m-1} s}``.

    Modified Gram-Schmidt with one full re-orthogonalisation pass.  Raises
    :class:`DegenerateKrylov` (carrying the basis found so far) when a new
    direction is below ``1e-12`` of the vector it came from.
    """
    apply = R if callable(R) else (lambda x: R @ x)
    s = np.asarray(s)
    if m < 1 or m > s.shape[0]:
        raise ValueError(f"need 1 <= m <= N, got m={m}")
    norm = np.linalg.norm(s)
    if norm == 0.0:
        raise ZeroSignature("Krylov seed vector is zero")
    Q = np.zeros((s.shape[0], m), dtype=np.result_type(s, complex))
    Q[:, 0] = s / norm
    for j in range(1, m):
        w = apply(Q[:, j - 1])
        w_norm = np.linalg.norm(w)
        for _ in range(2):
            for i in range(j):
                w = w - Q[:, i] * np.vdot(Q[:, i], w)
        r = np.linalg.norm(w)
        if r <= _KRYLOV_TOL * w_norm:
            raise DegenerateKrylov(f"Krylov rank {j} < {m}", basis=Q[:, :j].copy(), rank=j)
        Q[:, j] = w / r
    return Q


def _raw_krylov(apply, s, m):
    cols = [s]
    for _ in range(1, m):
        cols.append(apply(cols[-1]))
    return np.stack(cols, axis=1)


def _projected_sir(apply, A, s, p):
    RA = apply(A)
    M = A.conj().T @ RA
    M = 0.5 * (M + M.conj().T)
    v = A.conj().T @ s
    L = _chol(M, "MSW")
    y = scipy.linalg.solve_triangular(L, v, lower=True)
    return p * _quad(y, y)


def msw_sir(E: Ensemble, k: int, m: int, sigma2: float, basis: str = "orthonormal") -> SirResult:
    """Multistage Wiener SIR ``p s* A (A* R A)^{-1} A* s`` on the m-step Krylov space.

    ``basis="raw"`` uses the columns ``R^j s`` directly (ill-conditioned for
    large m; meant for cross-checks).  When the Krylov space saturates
    before ``m`` the reduced space is used and ``result.m`` reports it.
    """
    if m < 1:
        raise ValueError("m must be >= 1")
    if not sigma2 > 0:
        raise SolveFailure("MSW requires sigma2 > 0")
    apply = apply_interference(E, k, sigma2)
    s = E.S[:, k]
    if _quad(s, s) == 0.0:
        raise ZeroSignature(f"signature of user {k} is zero")
    if basis == "raw":
        A = _raw_krylov(apply, s, m)
    elif basis == "orthonormal":
        try:
            A = krylov_basis(apply, s, m)
        except DegenerateKrylov as exc:
            A = exc.basis
    else:
        raise ValueError(f"unknown basis {basis!r}")
    return SirResult(k, "msw", _projected_sir(apply, A, s, E.P[k]), A.shape[1])


def msw_weights(E: Ensemble, k: int, m: int, sigma2: float) -> np.ndarray:
    """Receiver vector ``A (A* R A)^{-1} A* s`` of the m-stage filter."""
    apply = apply_interference(E, k, sigma2)
    s = E.S[:, k]
    try:
        A = krylov_basis(apply, s, m)
    except DegenerateKrylov as exc:
        A = exc.basis
    M = A.conj().T @ apply(A)
    M = 0.5 * (M + M.conj().T)
    return A @ scipy.linalg.cho_solve((_chol(M, "MSW"), True), A.conj().T @ s)


def generic_sir(E: Ensemble, k: int, cvec: np.ndarray, sigma2: float) -> float:
    """Output SIR of an arbitrary linear receiver ``cvec`` for user ``k``."""
    _check_user(E, k)
    cvec = np.asarray(cvec)
    if not np.any(cvec):
        raise ZeroReceiver("receiver vector is zero")
    proj = np.abs(E.S.conj().T @ cvec) ** 2
    interf = float(np.sum(E.P * proj) - E.P[k] * proj[k])
    return float(E.P[k] * proj[k] / (sigma2 * _quad(cvec, cvec) + interf))


@lru_cache(maxsize=256)
def _sir_limit(m, c, sigma2):
    return hankel_system(m, c, sigma2).sir_limit


def msw_fluctuation(E: Ensemble, k: int, m: int, sigma2: float, ratio: float | None = None) -> float:
    """``sqrt(N) (beta_km - b.B^-1 b)`` with the limit taken at ``ratio`` (default ``c_N``)."""
    if not E.unit_powers:
        raise ValueError("fluctuation centring assumes unit powers")
    c = E.c_N if ratio is None else float(ratio)
    beta = mf_sir(E, k, sigma2).value if m == 1 else msw_sir(E, k, m, sigma2).value
    return float(np.sqrt(E.N) * (beta - _sir_limit(m, c, float(sigma2))))


def _mf_centre(E, sigma2):
    if not E.unit_powers:
        raise ValueError("matched-filter sums assume unit powers")
    return 1.0 / (sigma2 + 1.0 / E.c_N)


def mf_sum_statistic(E: Ensemble, sigma2: float) -> float:
    """``sum_k (beta_k - 1/a1)`` with ``a1 = sigma2 + 1/c_N``."""
    if E.K == 0:
        return 0.0
    centre = _mf_centre(E, sigma2)
    return float(np.sum(mf_sir_all(E, sigma2) - centre))


def mf_mi_statistic(E: Ensemble, sigma2: float) -> float:
    """``sum_k (log(1 + beta_k) - log(1 + 1/a1))``."""
    if E.K == 0:
        return 0.0
    centre = _mf_centre(E, sigma2)
    return float(np.sum(np.log1p(mf_sir_all(E, sigma2)) - np.log1p(centre)))
