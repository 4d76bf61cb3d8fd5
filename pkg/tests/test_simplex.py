import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from codashrink.errors import (
    BoundaryPoint,
    DegenerateInput,
    DimensionError,
    InvalidParameter,
    InvalidWeight,
    NotInTangentPlane,
)
from codashrink.infogeo import theta_of
from codashrink.simplex import (
    aitchison_distance_sq,
    aitchison_distance_sq_pairwise,
    as_composition,
    boxcox_limit_residual,
    closure,
    clr,
    clr_inv,
    e_geodesic_point,
    generalized_power_transform,
    is_interior,
    m_geodesic_point,
    perturb,
    perturb_inv,
    power,
    power_transform,
    uniform,
    weighted_euclidean_sq,
)

from helpers import random_interior

LN2 = math.log(2)
Q = np.array([0.5, 0.25, 0.25])

positive_parts = arrays(
    float,
    st.integers(2, 8),
    elements=st.floats(1e-3, 1e3, allow_nan=False, allow_infinity=False),
)


def test_closure_examples():
    np.testing.assert_allclose(closure([1, 2, 3]), [1 / 6, 1 / 3, 1 / 2], rtol=0, atol=1e-15)
    np.testing.assert_array_equal(closure([0.2, 0.3, 0.5]), [0.2, 0.3, 0.5])
    with pytest.raises(DegenerateInput):
        closure([0, 0, 0])
    with pytest.raises(DegenerateInput):
        closure([1.0])
    with pytest.raises(InvalidParameter):
        closure([1, -1, 2])


def test_closure_keeps_zero_pattern():
    out = closure([0, 3, 1e-300])
    assert out[0] == 0 and out[2] > 0


@given(positive_parts)
def test_closure_idempotent(x):
    c = closure(x)
    np.testing.assert_allclose(closure(c), c, rtol=1e-14, atol=0)
    assert abs(c.sum() - 1) < 1e-12


def test_as_composition_rejects_unclosed():
    with pytest.raises(InvalidParameter):
        as_composition([0.5, 0.6])
    assert is_interior([0.5, 0.5]) and not is_interior([1.0, 0.0])


def test_clr_examples():
    np.testing.assert_allclose(clr(uniform(3)), 0, atol=1e-15)
    np.testing.assert_allclose(clr(Q), [2 / 3 * LN2, -LN2 / 3, -LN2 / 3], atol=1e-15)
    np.testing.assert_allclose(clr(Q), [0.462098, -0.231049, -0.231049], atol=1e-6)
    with pytest.raises(BoundaryPoint):
        clr([0.5, 0.5, 0.0])


def test_clr_rows():
    m = np.array([Q, uniform(3)])
    np.testing.assert_allclose(clr(m), np.vstack([clr(Q), clr(uniform(3))]))


def test_clr_inv_examples():
    np.testing.assert_allclose(clr_inv([0, 0, 0]), uniform(3), atol=1e-15)
    e = math.e
    np.testing.assert_allclose(clr_inv([1, -1]), [e / (e + 1 / e), (1 / e) / (e + 1 / e)], atol=1e-15)
    np.testing.assert_allclose(clr_inv([1, -1]), [0.880797, 0.119203], atol=1e-6)
    with pytest.raises(NotInTangentPlane):
        clr_inv([1.0, 0.0])


@given(positive_parts)
def test_clr_roundtrip(x):
    q = closure(x)
    v = clr(q)
    assert abs(v.sum()) < 1e-12 * max(1, np.abs(v).sum())
    np.testing.assert_allclose(clr_inv(v), q, rtol=1e-12, atol=1e-15)


def test_perturb_examples():
    np.testing.assert_allclose(perturb(Q, uniform(3)), Q, atol=1e-15)
    np.testing.assert_allclose(perturb(Q, [0.25, 0.25, 0.5]), [0.4, 0.2, 0.4], atol=1e-15)
    inv = closure(1 / Q)
    np.testing.assert_allclose(perturb(Q, inv), uniform(3), atol=1e-15)
    np.testing.assert_allclose(perturb_inv(Q, Q), uniform(3), atol=1e-15)
    with pytest.raises(BoundaryPoint):
        perturb([1.0, 0.0], [0.5, 0.5])
    with pytest.raises(DimensionError):
        perturb(Q, [0.5, 0.5])


def test_power_examples():
    np.testing.assert_allclose(power(1, Q), Q, atol=1e-15)
    np.testing.assert_allclose(power(0, Q), uniform(3), atol=1e-15)
    np.testing.assert_allclose(power(2, Q), [2 / 3, 1 / 6, 1 / 6], atol=1e-15)
    np.testing.assert_allclose(power_transform(Q, 2), power(2, Q))
    with pytest.raises(BoundaryPoint):
        power(2, [1.0, 0.0])


def test_vector_space_axioms(rng):
    for _ in range(200):
        D = int(rng.integers(2, 11))
        p, q, r = (random_interior(rng, D) for _ in range(3))
        a, b = rng.uniform(0, 2, size=2)
        np.testing.assert_allclose(perturb(p, q), perturb(q, p), rtol=1e-10)
        np.testing.assert_allclose(perturb(perturb(p, q), r), perturb(p, perturb(q, r)), rtol=1e-10)
        np.testing.assert_allclose(power(a, power(b, q)), power(a * b, q), rtol=1e-10)
        np.testing.assert_allclose(
            power_transform(power_transform(q, a), b), power_transform(q, a * b), rtol=1e-10
        )


def test_generalized_power_endpoints(rng):
    q, tau = random_interior(rng, 5), random_interior(rng, 5)
    np.testing.assert_allclose(generalized_power_transform(q, tau, 1), q, rtol=1e-13)
    np.testing.assert_allclose(generalized_power_transform(q, tau, 0), tau, rtol=1e-13)
    np.testing.assert_allclose(generalized_power_transform(q, q, 0.37), q, rtol=1e-13)
    np.testing.assert_allclose(
        generalized_power_transform(q, uniform(5), 0.3), power_transform(q, 0.3), rtol=1e-13
    )


def test_m_geodesic_examples():
    q = closure([1, 2, 3])
    tau = uniform(3)
    np.testing.assert_array_equal(m_geodesic_point(tau, q, 0), q)
    np.testing.assert_array_equal(m_geodesic_point(tau, q, 1), tau)
    np.testing.assert_allclose(m_geodesic_point(tau, q, 1 / 3), [2 / 9, 3 / 9, 4 / 9], atol=1e-15)
    np.testing.assert_array_equal(m_geodesic_point(q, q, 0.5), q)


def test_geodesic_clamps_unless_extrapolating():
    q, tau = np.array([0.2, 0.8]), np.array([0.5, 0.5])
    np.testing.assert_array_equal(m_geodesic_point(tau, q, 1.5), tau)
    np.testing.assert_allclose(m_geodesic_point(tau, q, 1.5, allow_extrapolation=True), [0.65, 0.35])
    np.testing.assert_allclose(e_geodesic_point(tau, q, -1), q)
    out = e_geodesic_point(tau, q, -1, allow_extrapolation=True)
    np.testing.assert_allclose(clr(out), 2 * clr(q) - clr(tau), atol=1e-12)


def test_e_geodesic_examples():
    tau = uniform(3)
    np.testing.assert_allclose(e_geodesic_point(tau, Q, 0), Q, atol=1e-15)
    np.testing.assert_allclose(e_geodesic_point(tau, Q, 1), tau, atol=1e-15)
    s = np.sqrt(Q)
    np.testing.assert_allclose(e_geodesic_point(tau, Q, 0.5), s / s.sum(), atol=1e-15)
    np.testing.assert_allclose(e_geodesic_point(tau, Q, 0.5), [0.414214, 0.292893, 0.292893], atol=1e-6)


def test_e_geodesic_linear_in_theta_and_clr(rng):
    for _ in range(100):
        tau, q = random_interior(rng, 5), random_interior(rng, 5)
        lam = rng.uniform()
        pt = e_geodesic_point(tau, q, lam)
        np.testing.assert_allclose(
            theta_of(pt), lam * theta_of(tau) + (1 - lam) * theta_of(q), atol=1e-10
        )
        np.testing.assert_allclose(clr(pt), lam * clr(tau) + (1 - lam) * clr(q), atol=1e-10)


def test_aitchison_examples():
    assert aitchison_distance_sq(Q, Q) == 0
    expected = 2 * LN2**2 / 3
    assert aitchison_distance_sq(Q, uniform(3)) == pytest.approx(expected, abs=1e-14)
    assert aitchison_distance_sq_pairwise(Q, uniform(3)) == pytest.approx(expected, abs=1e-14)
    assert expected == pytest.approx(0.320303, abs=1e-6)
    with pytest.raises(BoundaryPoint):
        aitchison_distance_sq([1.0, 0.0], [0.5, 0.5])


def test_aitchison_dual_forms(rng):
    for _ in range(300):
        D = int(rng.integers(2, 11))
        p, q = random_interior(rng, D), random_interior(rng, D)
        d1, d2 = aitchison_distance_sq(p, q), aitchison_distance_sq_pairwise(p, q)
        assert abs(d1 - d2) < 1e-10
        assert d1 >= 0
        assert aitchison_distance_sq(q, p) == pytest.approx(d1, rel=1e-12)


def test_weighted_euclidean():
    assert weighted_euclidean_sq(Q, Q, 2.0) == 0
    assert weighted_euclidean_sq([1, 0], [0, 1]) == 2
    assert weighted_euclidean_sq([1, 0], [0, 1], [1, 3]) == 4
    with pytest.raises(InvalidWeight):
        weighted_euclidean_sq([1, 0], [0, 1], [1, 0])
    with pytest.raises(InvalidWeight):
        weighted_euclidean_sq([1, 0], [0, 1], -1)


def test_boxcox_limit(rng):
    p, q = random_interior(rng, 5, 0.05), random_interior(rng, 5, 0.05)
    assert boxcox_limit_residual(p, p, 0.3) == pytest.approx(0, abs=1e-14)
    res = [boxcox_limit_residual(p, q, b) for b in (1e-1, 1e-2, 1e-3, 1e-4)]
    assert all(a > b for a, b in zip(res, res[1:]))
    assert res[2] / aitchison_distance_sq(p, q) < 1e-2
    with pytest.raises(InvalidParameter):
        boxcox_limit_residual(p, q, 0)


@settings(max_examples=50)
@given(positive_parts, st.floats(0.01, 1.0))
def test_e_geodesic_equals_gpower(x, lam):
    q = closure(x)
    tau = uniform(q.shape[0])
    np.testing.assert_allclose(
        e_geodesic_point(tau, q, lam), generalized_power_transform(q, tau, 1 - lam), rtol=1e-12
    )
    m = m_geodesic_point(tau, q, lam)
    assert np.all(m >= np.minimum(tau, q) - 1e-15) and np.all(m <= np.maximum(tau, q) + 1e-15)
