"""Empirical, mixture-shrinkage and exponential-shrinkage estimators.

Two ways of pulling the observed point ``q_hat = n / sum(n)`` towards a
target ``tau``:

* mixture (classical) shrinkage moves along the straight segment between
  them, ``lam * tau + (1 - lam) * q_hat``.  Its weight minimizes the plug-in
  quadratic risk on the simplex.
* exponential shrinkage moves along the clr-straight path,
  ``closure(tau**(1 - beta) * q_hat**beta)``.  Its weight minimizes the
  expected squared Aitchison distance, with the mean and variance of
  ``clr(q_hat)`` approximated by a second/first order Taylor expansion.

Exponential shrinkage cannot touch zero counts, so it operates on the
nonzero parts of a sample and leaves the zeros in place.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import Literal

import numpy as np
from numpy.typing import ArrayLike

from .errors import (
    BoundaryPoint,
    DegenerateInput,
    DimensionError,
    InsufficientData,
    InvalidParameter,
)
from .infogeo import as_counts, as_dirichlet
from .simplex import (
    _interior,
    aitchison_distance_sq,
    as_composition,
    clr,
    closure,
    generalized_power_transform,
    uniform,
)

__all__ = [
    "DeltaMoments",
    "ShrinkResult",
    "NonzeroProjection",
    "empirical_estimate",
    "shrinkage_estimate",
    "alpha_to_lambda_tau",
    "optimal_lambda",
    "sq_error_loss",
    "risk_m_curve",
    "shrink",
    "project_nonzero",
    "exp_shrinkage_estimate",
    "delta_clr_mean",
    "delta_clr_var",
    "delta_moments",
    "aitchison_loss",
    "risk_e_curve",
    "optimal_lambda_e",
    "optimal_beta",
    "exp_shrink",
]

VarianceForm = Literal["delta", "printed"]


@dataclass(frozen=True)
class DeltaMoments:
    """Taylor approximations of the per-part mean and variance of ``clr(q_hat)``.

    `q_ref` is the composition the expansion was taken at (the truth, or a
    plug-in for it) and `n` the multinomial sample size.
    """

    mean: np.ndarray
    variance: np.ndarray
    n: int
    q_ref: np.ndarray
    variance_clamped: bool = False
    form: str = "delta"


@dataclass(frozen=True)
class ShrinkResult:
    estimate: np.ndarray
    weight: float
    weight_was_clamped: bool
    target: np.ndarray
    kind: Literal["mixture", "exponential"]
    raw_weight: float | None = None


@dataclass(frozen=True)
class NonzeroProjection:
    """Restriction of a count vector to its positive parts."""

    support: np.ndarray
    reduced: np.ndarray
    original_dim: int

    def restrict(self, x: ArrayLike) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if x.shape != (self.original_dim,):
            raise DimensionError(f"expected length {self.original_dim}, got {x.shape}")
        return x[self.support]

    def embed(self, reduced_values: ArrayLike) -> np.ndarray:
        """Place support-level values back into a length-D vector of zeros."""
        v = np.asarray(reduced_values, dtype=float)
        if v.shape != self.support.shape:
            raise DimensionError("value count does not match the support size")
        out = np.zeros(self.original_dim)
        out[self.support] = v
        return out


def _counts_with_total(n: ArrayLike, minimum: int = 1) -> np.ndarray:
    n = as_counts(n)
    total = int(n.sum())
    if total == 0:
        raise DegenerateInput("all counts are zero")
    if total < minimum:
        raise InsufficientData(f"need a total count of at least {minimum}, got {total}")
    return n


def _target(tau: ArrayLike | None, D: int) -> np.ndarray:
    if tau is None:
        return uniform(D)
    tau = as_composition(tau, "tau")
    if tau.shape[0] != D:
        raise DimensionError(f"target has {tau.shape[0]} parts, data have {D}")
    return tau


def _unit_weight(value: float, name: str) -> float:
    value = float(value)
    if not 0.0 <= value <= 1.0:
        raise InvalidParameter(f"{name} must lie in [0, 1], got {value}")
    return value


def _clamp01(x: float) -> float:
    return min(max(x, 0.0), 1.0)


def empirical_estimate(n: ArrayLike) -> np.ndarray:
    """The observed point ``n / sum(n)``; may lie on the boundary."""
    return closure(_counts_with_total(n))


def shrinkage_estimate(n: ArrayLike, tau: ArrayLike | None, lam: float) -> ShrinkResult:
    """Convex combination ``lam * tau + (1 - lam) * q_hat`` for a fixed `lam`."""
    q_hat = empirical_estimate(n)
    tau = _target(tau, q_hat.shape[0])
    lam = _unit_weight(lam, "lambda")
    est = lam * tau + (1.0 - lam) * q_hat
    return ShrinkResult(est, lam, False, tau, "mixture", lam)


def alpha_to_lambda_tau(alpha: ArrayLike, n_total: int) -> tuple[float, np.ndarray]:
    """Translate Dirichlet pseudocounts into a shrinkage weight and target."""
    a = as_dirichlet(alpha)
    n_total = int(n_total)
    if n_total < 1:
        raise DegenerateInput("n_total must be at least 1")
    a0 = a.sum()
    return float(a0 / (n_total + a0)), a / a0


def _plugin_variances(n: np.ndarray) -> np.ndarray:
    total = n.sum()
    q_hat = n / total
    return q_hat * (1.0 - q_hat) / (total - 1.0)


def optimal_lambda(n: ArrayLike, tau: ArrayLike | None = None, *, clamp: bool = True) -> float:
    """Analytic risk-minimizing mixture weight.

    ``sum_j var(q_hat_j) / sum_j (tau_j - q_hat_j)**2`` with
    ``var(q_hat_j)`` estimated by ``q_hat_j (1 - q_hat_j) / (n - 1)``.  When
    the observed point already equals the target the weight is 1.

    Raises
    ------
    InsufficientData
        If the total count is below 2.
    """
    n = _counts_with_total(n, minimum=2)
    q_hat = n / n.sum()
    tau = _target(tau, n.shape[0])
    num = _plugin_variances(n).sum()
    den = float(np.sum((tau - q_hat) ** 2))
    raw = 1.0 if den == 0.0 else float(num / den)
    return _clamp01(raw) if clamp else raw


def sq_error_loss(est: ArrayLike, truth: ArrayLike) -> float:
    est = np.asarray(est, dtype=float)
    truth = np.asarray(truth, dtype=float)
    if est.shape != truth.shape:
        raise DimensionError("estimate and truth differ in length")
    d = est - truth
    return float(d @ d)


def risk_m_curve(n: ArrayLike, tau: ArrayLike | None, lambdas: ArrayLike) -> np.ndarray:
    """Unbiased plug-in quadratic risk of mixture shrinkage on a grid of weights.

    The squared bias ``sum (tau - q)**2`` is estimated by
    ``sum (tau - q_hat)**2 - sum var(q_hat)``, which makes :func:`optimal_lambda`
    the exact minimizer of this curve.
    """
    n = _counts_with_total(n, minimum=2)
    q_hat = n / n.sum()
    tau = _target(tau, n.shape[0])
    lambdas = np.asarray(lambdas, dtype=float)
    var_sum = _plugin_variances(n).sum()
    bias_sq = np.sum((tau - q_hat) ** 2) - var_sum
    return (1.0 - lambdas) ** 2 * var_sum + lambdas**2 * bias_sq


def shrink(n: ArrayLike, tau: ArrayLike | None = None, lam: float | str = "auto") -> ShrinkResult:
    """Mixture shrinkage with either a fixed weight or the analytic optimum."""
    if isinstance(lam, str):
        if lam != "auto":
            raise InvalidParameter(f"lambda must be a number or 'auto', got {lam!r}")
        raw = optimal_lambda(n, tau, clamp=False)
        used = _clamp01(raw)
        res = shrinkage_estimate(n, tau, used)
        return ShrinkResult(res.estimate, used, used != raw, res.target, "mixture", raw)
    return shrinkage_estimate(n, tau, lam)


def project_nonzero(n: ArrayLike) -> NonzeroProjection:
    n = as_counts(n)
    support = np.flatnonzero(n > 0)
    if support.size == 0:
        raise DegenerateInput("all counts are zero")
    return NonzeroProjection(support, n[support], n.shape[0])


def _support_target(proj: NonzeroProjection, tau: ArrayLike | None) -> np.ndarray:
    k = proj.support.size
    if tau is None:
        return uniform(k) if k >= 2 else np.ones(1)
    tau_s = proj.restrict(_target(tau, proj.original_dim))
    if np.any(tau_s <= 0):
        raise BoundaryPoint("target vanishes on an observed part")
    return tau_s / tau_s.sum()


def exp_shrinkage_estimate(n: ArrayLike, tau: ArrayLike | None, beta: float) -> ShrinkResult:
    """Generalized power transform of the observed point towards `tau` on its support.

    Zero counts stay exactly zero; the target is restricted to the observed
    parts and re-closed there.
    """
    beta = _unit_weight(beta, "beta")
    proj = project_nonzero(n)
    tau_s = _support_target(proj, tau)
    tau_full = _target(tau, proj.original_dim)
    if proj.support.size == 1:
        return ShrinkResult(proj.embed([1.0]), beta, False, tau_full, "exponential", beta)
    est_s = generalized_power_transform(closure(proj.reduced), tau_s, beta)
    return ShrinkResult(proj.embed(est_s), beta, False, tau_full, "exponential", beta)


def _moment_args(q: ArrayLike, n_total: int) -> tuple[np.ndarray, int, np.ndarray]:
    q = _interior(q)
    n_total = int(n_total)
    if n_total < 1:
        raise DegenerateInput("n_total must be at least 1")
    return q, n_total, (1.0 - q) / (q * n_total)


def delta_clr_mean(q: ArrayLike, n_total: int) -> np.ndarray:
    """Second-order approximation of ``E clr_j(q_hat)`` for multinomial sampling at `q`."""
    q, n_total, r = _moment_args(q, n_total)
    D = q.shape[0]
    return clr(q) - r / 2.0 + r.sum() / (2.0 * D)


def _delta_var_raw(q: np.ndarray, n_total: int, r: np.ndarray, form: VarianceForm) -> np.ndarray:
    D = q.shape[0]
    if form == "delta":
        # gradient of clr_j is (1[j=k] - 1/D) / q_k; the q-weighted gradient
        # sums to zero, so only the diagonal of the multinomial covariance survives
        return ((1.0 - 2.0 / D) / q + np.sum(1.0 / q) / D**2) / n_total
    if form == "printed":
        return (
            (1.0 - 2.0 / D) * r
            + r.sum() / D**2
            - (3.0 - 7.0 / D + 4.0 / D**2) / n_total
        )
    raise InvalidParameter(f"unknown variance form {form!r}")


def delta_clr_var(
    q: ArrayLike, n_total: int, *, form: VarianceForm = "delta", clamp: bool = True
) -> np.ndarray:
    """First-order (delta method) approximation of ``var clr_j(q_hat)``.

    Parameters
    ----------
    form : {"delta", "printed"}
        ``"delta"`` is the exact first-order expansion,
        ``((1 - 2/D) / q_j + sum_k 1/(D**2 q_k)) / n``.  ``"printed"`` is the
        closed form that circulates with a sign slip in the off-diagonal
        gradient; it equals ``"delta"`` minus ``4 (1 - 1/D)**2 / n`` and
        reaches zero (e.g. ``q = (1/2, 1/4, 1/4)``), where rounding can leave
        it slightly negative.  It is kept for comparison only.
    clamp : bool
        Clip negative values at zero.
    """
    q, n_total, r = _moment_args(q, n_total)
    v = _delta_var_raw(q, n_total, r, form)
    return np.maximum(v, 0.0) if clamp else v


def delta_moments(q: ArrayLike, n_total: int, *, form: VarianceForm = "delta") -> DeltaMoments:
    q, n_total, r = _moment_args(q, n_total)
    raw = _delta_var_raw(q, n_total, r, form)
    clamped = bool(np.any(raw < 0))
    return DeltaMoments(
        mean=delta_clr_mean(q, n_total),
        variance=np.maximum(raw, 0.0),
        n=n_total,
        q_ref=q,
        variance_clamped=clamped,
        form=form,
    )


def aitchison_loss(est: ArrayLike, truth: ArrayLike) -> float:
    """Squared Aitchison distance between estimate and truth."""
    return aitchison_distance_sq(est, truth)


def _e_terms(moments: DeltaMoments, tau: ArrayLike, truth: ArrayLike):
    tau = _interior(tau, "tau")
    truth = _interior(truth, "truth")
    D = moments.mean.shape[0]
    if tau.shape[0] != D or truth.shape[0] != D:
        raise DimensionError("moments, target and truth must share one dimension")
    a = clr(tau) - moments.mean
    b = moments.mean - clr(truth)
    return moments.variance, a, b


def risk_e_curve(
    moments: DeltaMoments, tau: ArrayLike, truth: ArrayLike, lambdas: ArrayLike
) -> np.ndarray:
    """Approximate expected squared Aitchison loss of exponential shrinkage.

    ``(1 - lam)**2 sum V_j + sum (lam a_j + b_j)**2`` with
    ``a_j = clr_j(tau) - E_j`` and ``b_j = E_j - clr_j(truth)``.
    """
    V, a, b = _e_terms(moments, tau, truth)
    lam = np.asarray(lambdas, dtype=float)[..., None]
    return ((1.0 - lam[..., 0]) ** 2) * V.sum() + np.sum((lam * a + b) ** 2, axis=-1)


def _lambda_e_raw(moments: DeltaMoments, tau: ArrayLike, truth: ArrayLike) -> float:
    V, a, b = _e_terms(moments, tau, truth)
    den = float(np.sum(V + a * a))
    if den == 0.0:
        return 0.0
    return float((V.sum() - np.sum(a * b)) / den)


def optimal_lambda_e(
    moments: DeltaMoments, tau: ArrayLike, truth: ArrayLike, *, clamp: bool = True
) -> float:
    """Minimizer of :func:`risk_e_curve` in closed form, ``[sum V - sum a b] / sum (V + a**2)``.

    A vanishing denominator yields 0.
    """
    raw = _lambda_e_raw(moments, tau, truth)
    return _clamp01(raw) if clamp else raw


def optimal_beta(
    n: ArrayLike | int,
    tau: ArrayLike,
    plug_in: ArrayLike,
    *,
    form: VarianceForm = "delta",
    clamp: bool = True,
) -> float:
    """Optimal power ``1 - lambda_min`` for exponential shrinkage.

    Parameters
    ----------
    n : array_like or int
        Counts on the support (only their total enters) or the total itself.
    tau, plug_in : array_like
        Target and stand-in for the true parameter, both interior and of the
        same (support) dimension.
    """
    n_total = int(np.sum(as_counts(n))) if np.ndim(n) else int(n)
    moments = delta_moments(plug_in, n_total, form=form)
    lam = optimal_lambda_e(moments, tau, plug_in, clamp=clamp)
    return 1.0 - lam


def exp_shrink(
    n: ArrayLike,
    tau: ArrayLike | None = None,
    beta: float | str = "auto",
    *,
    form: VarianceForm = "delta",
) -> ShrinkResult:
    """Exponential shrinkage of a count vector, optionally with an optimized power.

    With ``beta="auto"`` the sample is projected onto its nonzero parts, the
    target is re-closed there, and the optimal power is evaluated with the
    mixture-shrinkage estimate of the projected counts (using its own optimal
    weight) standing in for the unknown truth.
    """
    if not isinstance(beta, str):
        return exp_shrinkage_estimate(n, tau, beta)
    if beta != "auto":
        raise InvalidParameter(f"beta must be a number or 'auto', got {beta!r}")

    counts = _counts_with_total(n)
    proj = project_nonzero(counts)
    tau_full = _target(tau, proj.original_dim)
    if proj.support.size < 2 or counts.sum() < 2:
        warnings.warn(
            "fewer than 2 observed parts or counts; returning the empirical estimate",
            RuntimeWarning,
            stacklevel=2,
        )
        return ShrinkResult(closure(counts), 1.0, False, tau_full, "exponential", 1.0)

    tau_s = _support_target(proj, tau)
    # reduced counts are all positive, so the plug-in is interior for any weight
    plug_in = shrink(proj.reduced, tau_s, "auto").estimate
    raw_beta = optimal_beta(proj.reduced, tau_s, plug_in, form=form, clamp=False)
    used = _clamp01(raw_beta)
    est = exp_shrinkage_estimate(counts, tau, used)
    return ShrinkResult(est.estimate, used, used != raw_beta, tau_full, "exponential", raw_beta)
