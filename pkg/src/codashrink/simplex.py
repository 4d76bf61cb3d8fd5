"""Simplex and clr-plane geometry.

Compositions are plain 1-D float arrays whose parts are nonnegative and sum
to one.  Interior compositions (all parts strictly positive) form a vector
space under perturbation and powering; the clr map is an isometry from that
space onto the zero-sum plane, where Aitchison distance is ordinary
Euclidean distance.

A part counts as zero only when it is exactly ``0.0``.  Nothing in this
module thresholds small values.
"""
from __future__ import annotations

import numpy as np
from numpy.typing import ArrayLike

from .errors import (
    BoundaryPoint,
    DegenerateInput,
    DimensionError,
    InvalidParameter,
    InvalidWeight,
    NotInTangentPlane,
)

__all__ = [
    "SUM_TOL",
    "as_composition",
    "is_interior",
    "uniform",
    "closure",
    "clr",
    "clr_inv",
    "perturb",
    "perturb_inv",
    "power",
    "power_transform",
    "generalized_power_transform",
    "m_geodesic_point",
    "e_geodesic_point",
    "aitchison_distance_sq",
    "aitchison_distance_sq_pairwise",
    "weighted_euclidean_sq",
    "boxcox_limit_residual",
]

SUM_TOL = 1e-12


def _vector(x: ArrayLike, name: str = "x") -> np.ndarray:
    arr = np.asarray(x, dtype=float)
    if arr.ndim != 1:
        raise DimensionError(f"{name} must be one-dimensional, got shape {arr.shape}")
    if arr.shape[0] < 2:
        raise DegenerateInput(f"{name} needs at least 2 parts, got {arr.shape[0]}")
    if not np.all(np.isfinite(arr)):
        raise InvalidParameter(f"{name} has non-finite entries")
    return arr


def _same_length(a: np.ndarray, b: np.ndarray) -> None:
    if a.shape != b.shape:
        raise DimensionError(f"length mismatch: {a.shape[0]} vs {b.shape[0]}")


def as_composition(x: ArrayLike, name: str = "q") -> np.ndarray:
    """Validate that `x` is a point of the closed simplex and return it as floats.

    Raises
    ------
    InvalidParameter
        Negative parts, or a sum further than ``SUM_TOL`` from one.  Inputs
        are never renormalized here; call :func:`closure` explicitly.
    """
    q = _vector(x, name)
    if np.any(q < 0):
        raise InvalidParameter(f"{name} has negative parts")
    total = q.sum()
    if abs(total - 1.0) > SUM_TOL:
        raise InvalidParameter(f"{name} sums to {total!r}, not 1 (tolerance {SUM_TOL})")
    return q


def is_interior(q: ArrayLike) -> bool:
    return bool(np.all(np.asarray(q) > 0))


def _interior(x: ArrayLike, name: str = "q") -> np.ndarray:
    q = as_composition(x, name)
    if not np.all(q > 0):
        raise BoundaryPoint(f"{name} has zero parts at {np.flatnonzero(q == 0).tolist()}")
    return q


def uniform(D: int) -> np.ndarray:
    """The barycentre (maximum-entropy composition) of the D-part simplex."""
    if D < 2:
        raise DegenerateInput("D must be at least 2")
    return np.full(D, 1.0 / D)


def closure(x: ArrayLike) -> np.ndarray:
    """Rescale nonnegative parts to unit sum.

    Works along the last axis, so a 2-D array is closed row by row.

    Examples
    --------
    >>> closure([1, 2, 3])
    array([0.16666667, 0.33333333, 0.5       ])
    """
    arr = np.asarray(x, dtype=float)
    if arr.ndim == 0 or arr.shape[-1] < 2:
        raise DegenerateInput("closure needs at least 2 parts")
    if not np.all(np.isfinite(arr)):
        raise InvalidParameter("non-finite entries")
    if np.any(arr < 0):
        raise InvalidParameter("closure needs nonnegative parts")
    total = arr.sum(axis=-1, keepdims=True)
    if np.any(total == 0):
        raise DegenerateInput("cannot close an all-zero vector")
    return arr / total


def _log_softmax_close(logits: np.ndarray) -> np.ndarray:
    # max-shift keeps exp() finite for large log-ratios
    shifted = logits - logits.max(axis=-1, keepdims=True)
    w = np.exp(shifted)
    return w / w.sum(axis=-1, keepdims=True)


def clr(q: ArrayLike) -> np.ndarray:
    """Centred log-ratio transform, ``log(q_j / g(q))`` with g the geometric mean.

    Accepts a single composition or a 2-D array of compositions (one per row).
    Rows only need strictly positive parts; they are not required to be closed,
    since clr is scale invariant.

    Raises
    ------
    BoundaryPoint
        If any part is zero.
    """
    arr = np.asarray(q, dtype=float)
    if arr.ndim == 1:
        arr = _vector(arr, "q")
    elif arr.ndim != 2:
        raise DimensionError("clr expects a vector or a 2-D array")
    if np.any(arr < 0):
        raise InvalidParameter("clr needs nonnegative parts")
    if np.any(arr == 0):
        raise BoundaryPoint("clr is undefined on the boundary of the simplex")
    logq = np.log(arr)
    return logq - logq.mean(axis=-1, keepdims=True)


def clr_inv(v: ArrayLike) -> np.ndarray:
    """Map a zero-sum vector back to the interior of the simplex."""
    v = _vector(v, "v")
    if abs(v.sum()) > SUM_TOL * max(1.0, np.abs(v).sum()):
        raise NotInTangentPlane(f"clr coordinates sum to {v.sum()!r}")
    return _log_softmax_close(v)


def perturb(p: ArrayLike, q: ArrayLike) -> np.ndarray:
    """Simplex addition: ``closure(p * q)``."""
    p = _interior(p, "p")
    q = _interior(q, "q")
    _same_length(p, q)
    return _log_softmax_close(np.log(p) + np.log(q))


def perturb_inv(p: ArrayLike, q: ArrayLike) -> np.ndarray:
    """Simplex subtraction: ``closure(p / q)``."""
    p = _interior(p, "p")
    q = _interior(q, "q")
    _same_length(p, q)
    return _log_softmax_close(np.log(p) - np.log(q))


def power_transform(q: ArrayLike, beta: float) -> np.ndarray:
    """Closed power transform ``q_i**beta / sum_k q_k**beta``.

    ``beta = 1`` is the identity, ``beta = 0`` collapses onto the uniform
    composition, and ``beta -> 0`` approaches log-ratio geometry.
    """
    q = _interior(q)
    beta = float(beta)
    if not np.isfinite(beta):
        raise InvalidParameter("beta must be finite")
    return _log_softmax_close(beta * np.log(q))


def power(a: float, q: ArrayLike) -> np.ndarray:
    """Simplex scalar multiplication, ``a (.) q``.  Same map as :func:`power_transform`."""
    return power_transform(q, a)


def generalized_power_transform(q: ArrayLike, tau: ArrayLike, beta: float) -> np.ndarray:
    """Weighted geometric mean of `tau` and `q`, closed.

    Part i is proportional to ``tau_i**(1 - beta) * q_i**beta``.  For a uniform
    `tau` this reduces to :func:`power_transform`.
    """
    q = _interior(q, "q")
    tau = _interior(tau, "tau")
    _same_length(q, tau)
    beta = float(beta)
    if not np.isfinite(beta):
        raise InvalidParameter("beta must be finite")
    return _log_softmax_close((1.0 - beta) * np.log(tau) + beta * np.log(q))


def _geodesic_weight(lam: float, allow_extrapolation: bool) -> float:
    lam = float(lam)
    if not np.isfinite(lam):
        raise InvalidParameter("lambda must be finite")
    if allow_extrapolation:
        return lam
    return min(max(lam, 0.0), 1.0)


def m_geodesic_point(
    tau: ArrayLike, q: ArrayLike, lam: float, *, allow_extrapolation: bool = False
) -> np.ndarray:
    """Point ``lam * tau + (1 - lam) * q`` on the mixture geodesic.

    `lam` is clipped to [0, 1] unless `allow_extrapolation` is set.
    """
    tau = as_composition(tau, "tau")
    q = as_composition(q, "q")
    _same_length(tau, q)
    lam = _geodesic_weight(lam, allow_extrapolation)
    out = lam * tau + (1.0 - lam) * q
    if np.any(out < 0):
        raise InvalidParameter(f"lambda={lam} leaves the simplex")
    return out


def e_geodesic_point(
    tau: ArrayLike, q: ArrayLike, lam: float, *, allow_extrapolation: bool = False
) -> np.ndarray:
    """Point ``lam (.) tau (+) (1 - lam) (.) q`` on the exponential geodesic.

    Straight in clr coordinates; identical to
    ``generalized_power_transform(q, tau, 1 - lam)``.
    """
    lam = _geodesic_weight(lam, allow_extrapolation)
    return generalized_power_transform(q, tau, 1.0 - lam)


def aitchison_distance_sq(p: ArrayLike, q: ArrayLike) -> float:
    """Squared Aitchison distance, computed as squared Euclidean distance of clr images."""
    p = _interior(p, "p")
    q = _interior(q, "q")
    _same_length(p, q)
    d = clr(p) - clr(q)
    return float(d @ d)


def aitchison_distance_sq_pairwise(p: ArrayLike, q: ArrayLike) -> float:
    """Squared Aitchison distance from all pairwise log-ratios.

    ``(1/D) * sum_{i<j} (log(p_i/p_j) - log(q_i/q_j))**2``; agrees with
    :func:`aitchison_distance_sq` up to rounding.
    """
    p = _interior(p, "p")
    q = _interior(q, "q")
    _same_length(p, q)
    r = np.log(p) - np.log(q)
    diff = r[:, None] - r[None, :]
    iu = np.triu_indices(r.shape[0], k=1)
    return float(np.sum(diff[iu] ** 2) / r.shape[0])


def weighted_euclidean_sq(p: ArrayLike, q: ArrayLike, w: ArrayLike = 1.0) -> float:
    """``sum_j w_j (p_j - q_j)**2`` with strictly positive weights."""
    p = _vector(p, "p")
    q = _vector(q, "q")
    _same_length(p, q)
    w = np.broadcast_to(np.asarray(w, dtype=float), p.shape)
    if np.any(~np.isfinite(w)) or np.any(w <= 0):
        raise InvalidWeight("weights must be finite and strictly positive")
    d = p - q
    return float(np.sum(w * d * d))


def boxcox_limit_residual(p: ArrayLike, q: ArrayLike, beta: float) -> float:
    """Gap between the rescaled power-transformed distance and the Aitchison distance.

    Returns ``|D**2 / beta**2 * ||f_beta(p) - f_beta(q)||**2 - d_A**2(p, q)|``,
    which tends to zero as ``beta -> 0``.
    """
    beta = float(beta)
    if not beta > 0:
        raise InvalidParameter("beta must be strictly positive")
    p = _interior(p, "p")
    q = _interior(q, "q")
    _same_length(p, q)
    D = p.shape[0]
    scaled = weighted_euclidean_sq(power_transform(p, beta), power_transform(q, beta), D * D)
    return abs(scaled / beta**2 - aitchison_distance_sq(p, q))
