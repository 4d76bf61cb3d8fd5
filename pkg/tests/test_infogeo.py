import itertools
import math

import numpy as np
import pytest
from scipy import integrate

from codashrink.errors import BoundaryPoint, ImpossibleOutcome, InfiniteDivergence
from codashrink.infogeo import (
    as_counts,
    exponential_posterior_params,
    kl_divergence,
    legendre_identity_residual,
    log_marginal_likelihood,
    log_multinomial_coeff,
    log_multinomial_pmf,
    log_mv_beta,
    method_of_types_residual,
    mixture_posterior_params,
    phi,
    poisson_factorization_residual,
    posterior_log_density,
    posterior_log_density_reparam,
    psi,
    q_of_theta,
    theta_of,
)
from codashrink.simplex import closure, uniform

from helpers import random_interior

LN2 = math.log(2)
Q = np.array([0.5, 0.25, 0.25])


def test_theta_examples(rng):
    np.testing.assert_allclose(theta_of(uniform(3)), [0, 0], atol=1e-15)
    np.testing.assert_allclose(theta_of(Q), [LN2, 0], atol=1e-15)
    np.testing.assert_allclose(q_of_theta([0, 0]), uniform(3), atol=1e-15)
    np.testing.assert_allclose(q_of_theta([LN2, 0]), Q, atol=1e-15)
    for _ in range(50):
        q = random_interior(rng, int(rng.integers(2, 9)))
        np.testing.assert_allclose(q_of_theta(theta_of(q)), q, rtol=1e-12)
    with pytest.raises(BoundaryPoint):
        theta_of([1.0, 0.0])


def test_q_of_theta_does_not_overflow():
    q = q_of_theta([700.0, 0.0])
    assert np.all(np.isfinite(q))
    assert q[0] == pytest.approx(1.0)
    assert psi([700.0, 0.0]) == pytest.approx(700.0)


def test_psi_examples():
    assert psi([0, 0]) == pytest.approx(math.log(3), abs=1e-15)
    assert psi(theta_of(Q)) == pytest.approx(math.log(4), abs=1e-15)


def test_psi_gradient_is_eta(rng):
    h = 1e-6
    for _ in range(20):
        D = int(rng.integers(2, 8))
        q = random_interior(rng, D)
        t = theta_of(q)
        grad = np.array(
            [(psi(t + h * e) - psi(t - h * e)) / (2 * h) for e in np.eye(D - 1)]
        )
        np.testing.assert_allclose(grad, q[:-1], atol=1e-6)


def test_phi_examples(rng):
    assert phi(uniform(3)[:-1]) == pytest.approx(-math.log(3), abs=1e-15)
    assert phi(Q[:-1]) == pytest.approx(-1.5 * LN2, abs=1e-15)
    assert phi(Q[:-1]) == pytest.approx(-1.039721, abs=1e-6)
    for _ in range(50):
        assert phi(random_interior(rng, 5)[:-1]) < 0
    with pytest.raises(BoundaryPoint):
        phi([0.5, 0.5])


def test_kl_examples():
    assert kl_divergence(Q, Q) == 0
    expected = 0.5 * math.log(1.5) + 0.5 * math.log(0.75)
    assert kl_divergence(Q, uniform(3)) == pytest.approx(expected, abs=1e-15)
    assert expected == pytest.approx(0.058891, abs=1e-6)
    assert kl_divergence([1, 0, 0], uniform(3)) == pytest.approx(math.log(3), abs=1e-15)
    with pytest.raises(InfiniteDivergence):
        kl_divergence([0.5, 0.5], [1.0, 0.0])


def test_legendre_identity(rng):
    # hand-evaluated terms for Q against uniform
    assert phi(Q[:-1]) + psi([0, 0]) - 0 == pytest.approx(kl_divergence(Q, uniform(3)), abs=1e-14)
    assert legendre_identity_residual(Q, uniform(3)) < 1e-12
    worst = 0.0
    for _ in range(1000):
        D = int(rng.integers(2, 11))
        p, q = random_interior(rng, D), random_interior(rng, D)
        worst = max(worst, legendre_identity_residual(p, q), legendre_identity_residual(q, q))
    assert worst < 1e-10


def test_log_multinomial_coeff():
    assert log_multinomial_coeff([1, 2, 3]) == pytest.approx(math.log(60), abs=1e-12)
    assert log_multinomial_coeff([7, 0, 0]) == pytest.approx(0, abs=1e-12)
    assert log_multinomial_coeff([1, 1]) == pytest.approx(LN2, abs=1e-12)


def test_log_multinomial_pmf_examples():
    assert log_multinomial_pmf([1, 0], [0.3, 0.7]) == pytest.approx(math.log(0.3), abs=1e-14)
    assert log_multinomial_pmf([1, 2, 3], closure([1, 2, 3])) == pytest.approx(
        math.log(60 / 432), abs=1e-12
    )
    assert math.log(60 / 432) == pytest.approx(-1.974081, abs=1e-6)
    with pytest.raises(ImpossibleOutcome):
        log_multinomial_pmf([1, 1], [1.0, 0.0])
    assert log_multinomial_pmf([1, 1], [1.0, 0.0], strict=False) == -np.inf


@pytest.mark.parametrize("q", [[0.3, 0.7], [0.2, 0.5, 0.3]])
@pytest.mark.parametrize("total", [1, 2, 5])
def test_multinomial_normalizes_brute_force(q, total):
    D = len(q)
    s = sum(
        math.exp(log_multinomial_pmf(n, q))
        for n in itertools.product(range(total + 1), repeat=D)
        if sum(n) == total
    )
    assert s == pytest.approx(1.0, abs=1e-12)


def test_poisson_factorization(rng):
    assert poisson_factorization_residual([1, 2, 3], [2, 3, 5]) < 1e-12
    assert poisson_factorization_residual([0, 0, 0], [1.5, 0.2, 4]) < 1e-12
    worst = 0.0
    for _ in range(1000):
        D = int(rng.integers(2, 9))
        lam = rng.gamma(2.0, 5.0, size=D) + 1e-3
        n = rng.poisson(lam)
        worst = max(worst, poisson_factorization_residual(n, lam))
    assert worst < 1e-9


def test_method_of_types(rng):
    assert method_of_types_residual([1, 2, 3], uniform(3)) < 1e-10
    n = np.array([1, 2, 3])
    q_hat = closure(n)
    assert method_of_types_residual(n, q_hat) < 1e-12
    seq = log_multinomial_pmf(n, q_hat) - log_multinomial_coeff(n)
    assert seq == pytest.approx(6 * phi(q_hat[:-1]), abs=1e-12)
    worst = 0.0
    for _ in range(500):
        D = int(rng.integers(2, 7))
        n = rng.integers(1, 50, size=D)
        worst = max(worst, method_of_types_residual(n, random_interior(rng, D)))
    assert worst < 1e-9
    with pytest.raises(BoundaryPoint):
        method_of_types_residual([0, 2, 3], uniform(3))


def test_log_mv_beta():
    assert log_mv_beta([1, 1, 1]) == pytest.approx(-LN2, abs=1e-14)
    assert log_mv_beta([1, 1]) == pytest.approx(0, abs=1e-14)
    assert log_mv_beta([2, 2]) == pytest.approx(math.log(1 / 6), abs=1e-14)
    assert log_mv_beta([0.5, 0.5]) == pytest.approx(math.log(math.pi), abs=1e-14)


def test_log_marginal_likelihood():
    assert log_marginal_likelihood([1, 1], [1, 1]) == pytest.approx(math.log(1 / 6), abs=1e-14)
    assert log_marginal_likelihood([0, 0, 0], [0.3, 1, 2]) == pytest.approx(0, abs=1e-14)
    for alpha in ([1, 1], [0.5, 2.5]):
        s = sum(
            math.exp(log_marginal_likelihood([k, 3 - k], alpha) + log_multinomial_coeff([k, 3 - k]))
            for k in range(4)
        )
        assert s == pytest.approx(1.0, abs=1e-12)


@pytest.mark.parametrize("n,alpha", [([3, 1], [2, 2]), ([0, 5], [0.5, 0.5]), ([10, 4], [1, 3])])
def test_posterior_integrates_to_one(n, alpha):
    val, err = integrate.quad(lambda t: math.exp(posterior_log_density([t], n, alpha)), -np.inf, np.inf)
    assert val == pytest.approx(1.0, abs=1e-6)


def test_posterior_argmax_grid_search():
    n, alpha = [3, 1], [2, 2]
    # the exponent's stationary point is eta = (n + alpha) / (n + sum(alpha))
    guess = math.log(5 / 3)
    grid = np.linspace(guess - 6, guess + 6, 2001)
    dens = posterior_log_density(grid[:, None], n, alpha)
    t_best = grid[np.argmax(dens)]
    q1 = q_of_theta([t_best])[0]
    step_q = 12 / 2000 * 0.25  # dq/dtheta = q(1-q) <= 1/4
    assert q1 == pytest.approx(5 / 8, abs=step_q)


def test_reparametrizations_agree(rng):
    for _ in range(1000):
        D = int(rng.integers(2, 11))
        n = rng.integers(0, 40, size=D)
        alpha = rng.uniform(0.1, 5, size=D)
        theta = rng.normal(0, 2, size=D - 1)
        scale, center = mixture_posterior_params(n, alpha)
        a = posterior_log_density(theta, n, alpha)
        b = posterior_log_density_reparam(theta, scale, center)
        assert abs(a - b) < 1e-9 * max(1.0, abs(a))


def test_exponential_reparametrization_normalizes():
    n, tau, beta = np.array([7, 2]), np.array([0.5, 0.5]), 0.6
    scale, center = exponential_posterior_params(n, tau, beta)
    assert scale == pytest.approx(sum(0.5**0.4 * n**0.6))
    np.testing.assert_allclose(scale * center, tau ** (1 - beta) * n**beta, rtol=1e-12)
    val, _ = integrate.quad(
        lambda t: math.exp(posterior_log_density_reparam([t], scale, center)), -np.inf, np.inf
    )
    assert val == pytest.approx(1.0, abs=1e-6)


def test_reparam_symmetric_normalizer():
    # scale 1, uniform(2) center: exponent is (t - 2 psi(t)) / 2, normalizer log pi
    t = 0.7
    expected = 0.5 * t - psi([t]) - math.log(math.pi)
    assert posterior_log_density_reparam([t], 1.0, [0.5, 0.5]) == pytest.approx(expected, abs=1e-14)


def test_as_counts_rejects_fractional():
    with pytest.raises(ValueError):
        as_counts([1.5, 2])
