"""Categorical / multinomial exponential family in dual coordinates.

The exponential coordinates ``theta`` are log-ratios against the last part
(alr of the parameter), the expectation coordinates ``eta`` are the first
``D - 1`` probabilities.  ``psi`` (free energy) and ``phi`` (negative entropy)
are the Legendre-dual potentials.  Every density here is returned on the log
scale; the base measure on ``theta`` is fixed to 1.
"""
from __future__ import annotations

import numpy as np
from numpy.typing import ArrayLike
from scipy.special import gammaln, logsumexp

from .errors import (
    BoundaryPoint,
    DegenerateInput,
    DimensionError,
    ImpossibleOutcome,
    InfiniteDivergence,
    InvalidParameter,
)
from .simplex import _interior, as_composition, closure, generalized_power_transform

__all__ = [
    "as_counts",
    "as_dirichlet",
    "theta_of",
    "eta_of",
    "q_of_theta",
    "psi",
    "phi",
    "kl_divergence",
    "legendre_identity_residual",
    "log_multinomial_coeff",
    "log_multinomial_pmf",
    "log_poisson_pmf",
    "poisson_factorization_residual",
    "method_of_types_residual",
    "log_mv_beta",
    "log_marginal_likelihood",
    "posterior_log_density",
    "posterior_log_density_reparam",
    "mixture_posterior_params",
    "exponential_posterior_params",
]


def as_counts(n: ArrayLike, name: str = "n") -> np.ndarray:
    """Validate a count vector: D >= 2 nonnegative integer-valued entries."""
    arr = np.asarray(n)
    if arr.ndim != 1:
        raise DimensionError(f"{name} must be one-dimensional")
    if arr.shape[0] < 2:
        raise DegenerateInput(f"{name} needs at least 2 parts, got {arr.shape[0]}")
    farr = arr.astype(float)
    if not np.all(np.isfinite(farr)) or np.any(farr < 0):
        raise InvalidParameter(f"{name} must be finite and nonnegative")
    if np.any(farr != np.round(farr)):
        raise InvalidParameter(f"{name} must be integer valued")
    return farr.astype(np.int64)


def as_dirichlet(alpha: ArrayLike) -> np.ndarray:
    a = np.asarray(alpha, dtype=float)
    if a.ndim != 1 or a.shape[0] < 2:
        raise DegenerateInput("alpha needs at least 2 parts")
    if not np.all(np.isfinite(a)) or np.any(a <= 0):
        raise InvalidParameter("Dirichlet parameters must be strictly positive")
    return a


def theta_of(q: ArrayLike) -> np.ndarray:
    """Exponential coordinates ``log(q_j / q_D)``, j < D."""
    q = _interior(q)
    logq = np.log(q)
    return logq[:-1] - logq[-1]


def eta_of(q: ArrayLike) -> np.ndarray:
    """Expectation coordinates: the first D - 1 parts."""
    return as_composition(q)[:-1].copy()


def _theta(theta: ArrayLike) -> np.ndarray:
    t = np.asarray(theta, dtype=float)
    if t.ndim == 0 or t.shape[-1] < 1:
        raise DegenerateInput("theta needs at least one coordinate")
    if not np.all(np.isfinite(t)):
        raise InvalidParameter("theta must be finite")
    return t


def _with_reference(t: np.ndarray) -> np.ndarray:
    zeros = np.zeros(t.shape[:-1] + (1,))
    return np.concatenate([t, zeros], axis=-1)


def q_of_theta(theta: ArrayLike) -> np.ndarray:
    """Inverse of :func:`theta_of`; vectorized over leading axes."""
    full = _with_reference(_theta(theta))
    full = full - full.max(axis=-1, keepdims=True)
    w = np.exp(full)
    return w / w.sum(axis=-1, keepdims=True)


def psi(theta: ArrayLike):
    """Free energy ``log(1 + sum_k exp(theta_k))``, equal to ``-log q_D``."""
    out = logsumexp(_with_reference(_theta(theta)), axis=-1)
    return float(out) if np.ndim(out) == 0 else out


def phi(eta: ArrayLike) -> float:
    """Negative Shannon entropy in expectation coordinates."""
    e = np.asarray(eta, dtype=float)
    if e.ndim != 1 or e.shape[0] < 1:
        raise DegenerateInput("eta needs at least one coordinate")
    rest = 1.0 - e.sum()
    if np.any(e <= 0) or not rest > 0:
        raise BoundaryPoint("eta must lie strictly inside the simplex")
    return float(np.sum(e * np.log(e)) + rest * np.log(rest))


def kl_divergence(p: ArrayLike, q: ArrayLike) -> float:
    """``sum_j p_j log(p_j / q_j)`` with the convention ``0 log 0 = 0``."""
    p = as_composition(p, "p")
    q = as_composition(q, "q")
    if p.shape != q.shape:
        raise DimensionError("p and q differ in length")
    support = p > 0
    if np.any(q[support] == 0):
        raise InfiniteDivergence("q vanishes where p is positive")
    ps, qs = p[support], q[support]
    return float(max(np.sum(ps * (np.log(ps) - np.log(qs))), 0.0))


def legendre_identity_residual(p: ArrayLike, q: ArrayLike) -> float:
    """``|phi(eta_p) + psi(theta_q) - theta_q . eta_p - KL(p || q)|``."""
    p = _interior(p, "p")
    q = _interior(q, "q")
    eta_p = p[:-1]
    theta_q = theta_of(q)
    lhs = phi(eta_p) + psi(theta_q) - float(theta_q @ eta_p)
    return abs(lhs - kl_divergence(p, q))


def log_multinomial_coeff(n: ArrayLike) -> float:
    """``log(n! / prod_j n_j!)``."""
    n = as_counts(n)
    return float(gammaln(n.sum() + 1.0) - gammaln(n + 1.0).sum())


def log_multinomial_pmf(n: ArrayLike, q: ArrayLike, *, strict: bool = True) -> float:
    """Multinomial log-probability of counts `n` under parameter `q`.

    Raises :class:`ImpossibleOutcome` when a positive count sits on a zero
    probability, unless ``strict=False`` in which case ``-inf`` is returned.
    """
    n = as_counts(n)
    q = as_composition(q)
    if n.shape != q.shape:
        raise DimensionError("counts and composition differ in length")
    observed = n > 0
    if np.any(q[observed] == 0):
        if strict:
            raise ImpossibleOutcome("positive count on a zero-probability part")
        return -np.inf
    return log_multinomial_coeff(n) + float(np.sum(n[observed] * np.log(q[observed])))


def log_poisson_pmf(k, lam):
    k = np.asarray(k, dtype=float)
    lam = np.asarray(lam, dtype=float)
    return k * np.log(lam) - lam - gammaln(k + 1.0)


def poisson_factorization_residual(n: ArrayLike, lam: ArrayLike) -> float:
    """Check that independent Poissons = Poisson(total) x Multinomial(total, closure(lam)).

    Returns the absolute difference of the two sides on the log scale.
    """
    n = as_counts(n)
    lam = np.asarray(lam, dtype=float)
    if lam.shape != n.shape:
        raise DimensionError("counts and rates differ in length")
    if not np.all(np.isfinite(lam)) or np.any(lam <= 0):
        raise InvalidParameter("Poisson rates must be strictly positive")
    joint = float(np.sum(log_poisson_pmf(n, lam)))
    total = float(log_poisson_pmf(n.sum(), lam.sum()))
    return abs(joint - total - log_multinomial_pmf(n, closure(lam)))


def method_of_types_residual(n: ArrayLike, q: ArrayLike) -> float:
    """Compare the sequence log-probability with ``n phi(eta_hat) - n KL(q_hat || q)``."""
    n = as_counts(n)
    if np.any(n == 0):
        raise BoundaryPoint("observed point has zero parts")
    q = _interior(q)
    total = n.sum()
    q_hat = n / total
    sequence_logp = log_multinomial_pmf(n, q) - log_multinomial_coeff(n)
    rhs = total * phi(q_hat[:-1]) - total * kl_divergence(q_hat, q)
    return abs(sequence_logp - rhs)


def log_mv_beta(alpha: ArrayLike) -> float:
    """Log of the multivariate beta function ``prod Gamma(a_k) / Gamma(sum a_k)``."""
    a = as_dirichlet(alpha)
    return float(gammaln(a).sum() - gammaln(a.sum()))


def log_marginal_likelihood(n: ArrayLike, alpha: ArrayLike) -> float:
    """Sequence-level Dirichlet-multinomial evidence ``log B(n + alpha) - log B(alpha)``.

    The multinomial coefficient is not included.
    """
    n = as_counts(n)
    a = as_dirichlet(alpha)
    if n.shape != a.shape:
        raise DimensionError("counts and alpha differ in length")
    return log_mv_beta(n + a) - log_mv_beta(a)


def posterior_log_density(theta: ArrayLike, n: ArrayLike, alpha: ArrayLike):
    """Log posterior density over ``theta`` for counts `n` under a Dirichlet(alpha) prior.

    `theta` may carry leading batch axes; the last axis has length D - 1.
    """
    t = _theta(theta)
    n = as_counts(n)
    a = as_dirichlet(alpha)
    if n.shape != a.shape or t.shape[-1] != n.shape[0] - 1:
        raise DimensionError("theta, counts and alpha are inconsistent")
    post = n + a
    out = t @ post[:-1] - post.sum() * psi(t) - log_mv_beta(post)
    return float(out) if np.ndim(out) == 0 else out


def posterior_log_density_reparam(theta: ArrayLike, scale: float, center: ArrayLike):
    """Posterior over ``theta`` with Dirichlet parameters ``scale * center``.

    Covers both the arithmetic (``n_hat``, shrinkage estimate) and geometric
    (``n_tilde``, exponential shrinkage estimate) parametrizations.
    """
    t = _theta(theta)
    center = _interior(center, "center")
    scale = float(scale)
    if not scale > 0:
        raise InvalidParameter("scale must be positive")
    if t.shape[-1] != center.shape[0] - 1:
        raise DimensionError("theta and center are inconsistent")
    out = scale * (t @ center[:-1] - psi(t)) - log_mv_beta(scale * center)
    return float(out) if np.ndim(out) == 0 else out


def mixture_posterior_params(n: ArrayLike, alpha: ArrayLike) -> tuple[float, np.ndarray]:
    """``(n + sum(alpha), (n + alpha) / (n + sum(alpha)))``."""
    n = as_counts(n)
    a = as_dirichlet(alpha)
    post = n + a
    scale = float(post.sum())
    return scale, post / scale


def exponential_posterior_params(
    n: ArrayLike, tau: ArrayLike, beta: float
) -> tuple[float, np.ndarray]:
    """``(sum_k tau_k**(1-beta) n_k**beta, generalized power transform of closure(n))``.

    Needs strictly positive counts; project onto the nonzero parts first.
    """
    n = as_counts(n)
    if np.any(n == 0):
        raise BoundaryPoint("exponential reparametrization needs positive counts")
    tau = _interior(tau, "tau")
    scale = float(np.sum(tau ** (1.0 - beta) * n.astype(float) ** beta))
    return scale, generalized_power_transform(closure(n), tau, beta)
