"""Companion Stieltjes transform of the MP law and circle quadrature.

``mbar(z)`` is the Stieltjes transform of the limiting spectral law of the
K x K companion ``c_N S* S``.  It is the root of

    z*m**2 + (z + 1 - c)*m + 1 = 0

that behaves like ``-1/z`` at infinity.  Writing the discriminant as
``(z - a)(z - b)`` with ``a, b`` the support edges, the product
``sqrt(z - a) * sqrt(z - b)`` of principal roots is analytic off ``[a, b]``
and selects exactly that branch everywhere, including the real axis
outside the support.

Integrals over closed curves use the trapezoid rule on circles, which
converges geometrically for integrands analytic in an annulus around the
circle.
"""
from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Callable

import numpy as np

from .errors import BranchFailure, NonConvergent, SingularDerivative
from .moments import mp_support

__all__ = [
    "ContourSpec",
    "default_contours",
    "mp_stieltjes",
    "mp_stieltjes_derivative",
    "contour_integrate",
    "double_contour_integrate",
]

DEFAULT_NODES = 512
_BRANCH_TOL = 1e-10


def _mbar(z, c):
    a, b, _ = mp_support(c)
    z = np.asarray(z, dtype=complex)
    sq = np.sqrt(z - a) * np.sqrt(z - b)
    p = -(z + 1.0 - c)
    d_minus = p - sq
    d_plus = p + sq
    # stable quadratic root: m = 2/d_minus == d_plus/(2z), pick the
    # expression without cancellation
    with np.errstate(divide="ignore", invalid="ignore"):
        return np.where(np.abs(d_minus) >= np.abs(d_plus), 2.0 / d_minus, d_plus / (2.0 * z))


def mp_stieltjes(z, c):
    """Companion Stieltjes transform ``mbar(z)`` for ratio ``c`` (T = I).

    Accepts scalars or arrays.  Raises :class:`BranchFailure` for points on
    the spectral cut ``[a, b]`` (or at the pole ``z = 0`` when ``c < 1``),
    and if the computed root ever violates ``Im m * Im z > 0``.
    """
    a, b, _ = mp_support(c)
    za = np.asarray(z, dtype=complex)
    on_cut = (np.abs(za.imag) <= _BRANCH_TOL * np.maximum(1.0, np.abs(za))) & \
        (za.real >= a - _BRANCH_TOL) & (za.real <= b + _BRANCH_TOL)
    if c < 1:
        on_cut |= np.abs(za) <= _BRANCH_TOL
    if np.any(on_cut):
        raise BranchFailure(f"z on the support [{a:.6g}, {b:.6g}] of the MP law")
    m = _mbar(za, c)
    bad = (za.imag * m.imag < -_BRANCH_TOL * np.abs(m) * np.abs(za.imag)) | ~np.isfinite(m)
    if np.any(bad):
        raise BranchFailure("root violates the Stieltjes branch condition")
    return m if np.ndim(z) else complex(m)


def mp_stieltjes_derivative(z, c):
    """``mbar'(z) = mbar^2 / (1 - c mbar^2/(1 + mbar)^2)``."""
    m = np.asarray(mp_stieltjes(z, c))
    den = 1.0 - c * m**2 / (1.0 + m) ** 2
    if np.any(np.abs(den) < 1e-12):
        raise SingularDerivative("derivative denominator vanishes")
    out = m**2 / den
    return out if np.ndim(z) else complex(out)


@dataclass(frozen=True)
class ContourSpec:
    center: complex
    radius: float
    nodes: int = DEFAULT_NODES

    def __post_init__(self):
        if not self.radius > 0:
            raise ValueError("radius must be positive")
        if self.nodes < 16:
            raise ValueError("need at least 16 nodes")

    def encloses(self, lo: float, hi: float) -> bool:
        ctr = complex(self.center)
        return abs(lo - ctr) < self.radius and abs(hi - ctr) < self.radius

    def scaled(self, factor: float) -> "ContourSpec":
        return replace(self, radius=self.radius * factor)

    def points(self, nodes: int | None = None):
        """Nodes ``z_j`` and weights ``dz_j`` (positive orientation)."""
        n = self.nodes if nodes is None else nodes
        e = np.exp(2j * np.pi * np.arange(n) / n)
        z = self.center + self.radius * e
        dz = 2j * np.pi * self.radius * e / n
        return z, dz


def default_contours(c, nodes: int = DEFAULT_NODES) -> tuple[ContourSpec, ContourSpec]:
    """Disjoint (inner, outer) circles about the MP support and the origin.

    Centre is the middle of the support.  Radii are 1.25 and 1.6 support
    half-widths, raised when needed so that both circles keep the origin
    inside with a 15% margin and the outer one stays 28% beyond the inner.
    """
    a, b, _ = mp_support(c)
    center = 0.5 * (a + b)
    hw = 0.5 * (b - a)
    r_in = max(1.25 * hw, 1.15 * center)
    r_out = max(1.6 * hw, 1.28 * r_in)
    return ContourSpec(center, r_in, nodes), ContourSpec(center, r_out, nodes)


def _trapezoid(f, spec, n):
    z, dz = spec.points(n)
    return np.sum(f(z) * dz)


def contour_integrate(f: Callable, spec: ContourSpec, tol: float = 1e-10):
    """Trapezoid approximation of the closed integral of ``f`` over ``spec``.

    ``f`` must accept an array of nodes.  Returns ``(value, err)`` where
    ``err`` is the change between ``nodes`` and ``2*nodes``; raises
    :class:`NonConvergent` when ``err > tol * max(1, |value|)``.
    """
    coarse = _trapezoid(f, spec, spec.nodes)
    fine = _trapezoid(f, spec, 2 * spec.nodes)
    err = abs(fine - coarse)
    if not np.isfinite(fine) or err > tol * max(1.0, abs(fine)):
        raise NonConvergent(f"contour integral changed by {err:.3g} on node doubling",
                            value=complex(fine), error=err)
    return complex(fine), float(err)


def _double_trapezoid(f, inner, outer, n1, n2):
    z1, d1 = inner.points(n1)
    z2, d2 = outer.points(n2)
    vals = f(z1[:, None], z2[None, :])
    return np.sum(np.sum(vals * d2[None, :], axis=1) * d1)


def double_contour_integrate(f: Callable, inner: ContourSpec, outer: ContourSpec,
                             tol: float = 1e-10):
    """Iterated trapezoid rule for a double closed integral.

    ``f(z1, z2)`` is called with broadcastable arrays of shape ``(n1, 1)``
    and ``(1, n2)``; ``z1`` runs over ``inner`` and ``z2`` over ``outer``.
    Returns ``(value, err)`` like :func:`contour_integrate`.
    """
    if inner.radius >= outer.radius:
        raise ValueError("inner radius must be smaller than outer radius")
    coarse = _double_trapezoid(f, inner, outer, inner.nodes, outer.nodes)
    fine = _double_trapezoid(f, inner, outer, 2 * inner.nodes, 2 * outer.nodes)
    err = abs(fine - coarse)
    if not np.isfinite(fine) or err > tol * max(1.0, abs(fine)):
        raise NonConvergent(f"double contour integral changed by {err:.3g} on node doubling",
                            value=complex(fine), error=err)
    return complex(fine), float(err)
