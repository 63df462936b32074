import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from blocklewis.grouped import GroupedMatrix, leverage_scores
from blocklewis.instances import random_grouped
from blocklewis.solvers import (
    BlwWeights,
    averaging_blw,
    averaging_potential,
    beta_weights,
    blw_convert,
    certify_overestimate,
    compute_weights,
    contraction_iterations,
    contractive_blw,
    fixed_point_blw,
    inner_blw,
    is_rounding,
    overestimate_profile,
    psi_map,
)


def singletons(a, p):
    return GroupedMatrix(a, [[j] for j in range(len(a))], 2.0, p)


def ln_dist(u, v):
    return float(np.max(np.abs(np.log(u / v))))


def certificate_by_definition(g, lam, w):
    """Direct evaluation with explicit inverses, one group at a time."""
    p = g.outer_p
    d = w * g.expand(lam) ** (1 - 2 / p)
    m = g.a.T @ (d[:, None] * g.a)
    minv = np.linalg.inv(m)
    best = 0.0
    for i, grp in enumerate(g.groups):
        q = g.inner_p[i]
        acc = 0.0
        for j in grp:
            tau = d[j] * g.a[j] @ minv @ g.a[j]
            acc += (tau / w[j]) ** (q / 2)
        best = max(best, acc ** (2 / q) / lam[i])
    return best


def test_psi_identity_p2(rng):
    g = singletons(np.eye(2), 2.0)
    for _ in range(3):
        np.testing.assert_allclose(psi_map(g, np.exp(rng.standard_normal(2))), [1, 1])


def test_psi_rejects_bad_input():
    g = singletons(np.eye(2), 4.0)
    with pytest.raises(ValueError):
        psi_map(g, np.ones(2))
    with pytest.raises(ValueError):
        psi_map(singletons(np.eye(2), 1.0), np.array([1.0, 0.0]))


def test_psi_equals_beta_power(rng):
    g = random_grouped(rng, 12, 3, 3, p=1.3)
    b = np.exp(rng.standard_normal(g.m))
    v = g.expand(b) ** (1 - 2 / g.outer_p)
    np.testing.assert_allclose(psi_map(g, b), beta_weights(g, v) ** g.outer_p, rtol=1e-12)


def test_psi_homogeneity(rng):
    g = random_grouped(rng, 10, 3, 2, p=1.0)
    b = np.exp(rng.standard_normal(g.m))
    np.testing.assert_allclose(psi_map(g, 3.0 * b), 3.0 ** 0.5 * psi_map(g, b), rtol=1e-10)


@pytest.mark.parametrize("p", [0.5, 1.0, 1.5, 3.0])
def test_psi_contracts_twice(rng, p):
    g = random_grouped(rng, 10, 3, 1, p=p)
    u = np.exp(rng.standard_normal(g.m))
    v = 2.7 * u * np.exp(0.3 * rng.standard_normal(g.m))
    f = abs(p / 2 - 1)
    d0 = ln_dist(u, v)
    d2 = ln_dist(psi_map(g, psi_map(g, u)), psi_map(g, psi_map(g, v)))
    assert d2 <= f * f * d0 + 1e-9


def test_fixed_point_oracle(rng):
    g = random_grouped(rng, 12, 3, 3, p=1.0)
    b = np.full(g.m, g.n / g.m)
    for _ in range(200):
        b = psi_map(g, b)
    np.testing.assert_allclose(psi_map(g, b), b, rtol=1e-10)
    np.testing.assert_allclose(fixed_point_blw(g).b, b, rtol=1e-10)


def test_contraction_iteration_count():
    assert contraction_iterations(1024, 16, 1.0, 0.1) == 6
    assert contraction_iterations(10, 16, 1.0, 0.1) == 1
    assert contraction_iterations(1024, 16, 2.0, 0.1) == 1


def test_contractive_identity():
    out = contractive_blw(singletons(np.eye(4), 1.0))
    np.testing.assert_allclose(out.b, 1.1 * np.ones(4), rtol=1e-12)
    assert out.b.sum() == pytest.approx(1.1 * 4)


def test_contractive_brackets_oracle(rng):
    g = random_grouped(rng, 60, 5, 1, p=1.5)
    out = contractive_blw(g)
    assert np.all(out.b >= fixed_point_blw(g).b - 1e-9)
    # Groups whose exact weight sits below the 1/m floor are capped by the
    # floored fixed point, not the exact one.
    floored = fixed_point_blw(g, floor=1 / g.m)
    assert np.all(out.b <= 1.1 * floored.b * (1 + 1e-6))
    above = floored.b > 1 / g.m
    assert above.any()
    assert np.all(out.b[above] <= 1.1 * fixed_point_blw(g).b[above] * (1 + 1e-6))


def test_contractive_floor_and_residual(rng):
    g = random_grouped(rng, 60, 4, 3, p=0.8)
    out = contractive_blw(g)
    assert np.all(out.b >= 1.1 / g.m * (1 - 1e-12))
    unscaled = out.b / 1.1
    floored = np.maximum(psi_map(g, unscaled), 1 / g.m)
    assert ln_dist(unscaled, floored) <= math.log(1.1) + math.log(1.1)


def test_contractive_general_inner_flagged(rng):
    g = random_grouped(rng, 12, 2, 3, p=1.0, inner_p=3.0)
    out = contractive_blw(g)
    assert not out.certified_regime
    cert = blw_convert(g, out)
    assert any("guaranteed" in note for note in cert.notes)


def test_averaging_identity():
    out = averaging_blw(singletons(np.eye(3), 3.0))
    np.testing.assert_allclose(out.b, 1.5 * np.ones(3), rtol=1e-12)


def test_averaging_potential(rng):
    g = random_grouped(rng, 40, 4, 1, p=3.0)
    out = averaging_blw(g)
    phi = averaging_potential(g, out.b / 1.5)
    assert np.all(phi <= math.log(g.m * g.n / g.n) / out.iterations + 1e-9)


def test_averaging_certificate(rng):
    g = random_grouped(rng, 40, 4, 1, p=4.0)
    cert = blw_convert(g, averaging_blw(g))
    assert g.n * (1 - 1e-9) <= cert.f_star <= 1.5 * g.n * (1 + 1e-6)


def test_averaging_rejects():
    with pytest.raises(ValueError):
        averaging_blw(singletons(np.eye(2), 1.0))
    with pytest.raises(ValueError):
        averaging_blw(GroupedMatrix(np.eye(2), [[0, 1]], 3.0, 2.0))


def test_averaging_custom_overlev(rng):
    g = random_grouped(rng, 30, 3, 2, p=3.0)
    doubled = averaging_blw(g, overlev=lambda mat: 2 * leverage_scores(mat).tau)
    assert doubled.nu == pytest.approx(2 * g.n)
    assert doubled.bound == pytest.approx(3 * g.n)


def test_inner_singletons_reduce_to_leverage(rng):
    a = rng.standard_normal((7, 3))
    weights, inner = inner_blw(GroupedMatrix(a, [[j] for j in range(7)], 2.0, 2.0))
    assert weights.iterations == 1
    np.testing.assert_allclose(weights.b, leverage_scores(a).tau, rtol=1e-12)


def test_inner_identity_symmetric():
    g = GroupedMatrix.uniform(np.eye(4), 2, inner_p=4.0, outer_p=2.0)
    weights, inner = inner_blw(g)
    np.testing.assert_allclose(inner.u, 0.5)
    cert = blw_convert(g, weights, inner)
    assert cert.f_star <= 4 * g.n
    assert cert.rounding_ok


def test_inner_certificate(rng):
    g = random_grouped(rng, 30, 3, 5, p=2.0, inner_p=6.0)
    weights, inner = inner_blw(g)
    cert = blw_convert(g, weights, inner)
    scale = 5 ** (1 / weights.iterations)
    assert cert.f_star <= scale * weights.nu * (1 + 1e-6)
    np.testing.assert_allclose(g.group_sum(inner.u), 1.0, atol=1e-10)
    assert cert.rounding_ok


def test_inner_mixed_exponents(rng):
    g = GroupedMatrix.uniform(rng.standard_normal((12, 3)), 3, inner_p=[2, 4, 2, 3], outer_p=2)
    weights, inner = inner_blw(g)
    rows_p2 = np.concatenate([g.groups[0], g.groups[2]])
    np.testing.assert_allclose(inner.u[rows_p2], 1 / 3)
    cert = blw_convert(g, weights, inner)
    assert cert.f_star <= 3 ** (1 / weights.iterations) * g.n * (1 + 1e-6)


def test_inner_rejects():
    with pytest.raises(ValueError):
        inner_blw(GroupedMatrix(np.eye(2), [[0, 1]], 4.0, 1.0))
    with pytest.raises(ValueError):
        inner_blw(GroupedMatrix(np.eye(2), [[0, 1]], 1.5, 2.0))


def test_convert_requires_inner(rng):
    g = GroupedMatrix.uniform(np.eye(4), 2, 4.0, 2.0)
    weights, _ = inner_blw(g)
    with pytest.raises(ValueError):
        blw_convert(g, weights)


def test_convert_identity():
    for p in (1.0, 2.0, 3.0):
        g = singletons(np.eye(3), p)
        cert = blw_convert(g, BlwWeights(np.ones(3), "user", 0, p))
        np.testing.assert_allclose(cert.lam, 1 / 3)
        np.testing.assert_allclose(cert.w, 1.0)
        assert cert.f_star == pytest.approx(3.0)
        np.testing.assert_allclose(cert.alpha_p, 3 ** (p / 2) / 3, rtol=1e-12)


def test_alpha_at_exact_weights(rng):
    g = random_grouped(rng, 50, 5, 1, p=1.0)
    cert = blw_convert(g, fixed_point_blw(g))
    assert cert.alpha_p.sum() == pytest.approx(g.n ** 0.5, rel=1e-8)
    assert cert.f_star == pytest.approx(g.n, rel=1e-8)


def test_certificate_matches_definition(rng):
    g = random_grouped(rng, 24, 3, 4, p=1.5, inner_p=3.0)
    lam = rng.dirichlet(np.ones(g.m))
    w = np.exp(rng.standard_normal(g.k))
    assert certify_overestimate(g, lam, w) == pytest.approx(
        certificate_by_definition(g, lam, w), rel=1e-9)


def test_certificate_identity_and_lewis(rng):
    assert certify_overestimate(singletons(np.eye(5), 1.0), np.full(5, 0.2), np.ones(5)) \
        == pytest.approx(5.0)
    g = random_grouped(rng, 30, 3, 1, p=1.0)
    b = fixed_point_blw(g).b
    assert certify_overestimate(g, b / b.sum(), np.ones(g.k)) == pytest.approx(g.n, rel=1e-8)


def test_certificate_rescaling(rng):
    g = random_grouped(rng, 20, 3, 2, p=1.0)
    lam = rng.dirichlet(np.ones(g.m))
    w = np.exp(rng.standard_normal(g.k))
    base = certify_overestimate(g, lam, w)
    for c in (0.5, 2.0, 10.0):
        assert c * certify_overestimate(g, lam, c * w) == pytest.approx(base, rel=1e-10)


def test_certificate_zero_measure(rng):
    g = random_grouped(rng, 6, 2, 2, p=1.0)
    lam = np.array([0.0, 0.5, 0.5])
    assert math.isinf(certify_overestimate(g, lam, np.ones(6)))
    with pytest.raises(ValueError):
        certify_overestimate(g, np.array([0.2, 0.2, 0.2]), np.ones(6))


def test_rounding_condition():
    g = GroupedMatrix.uniform(np.ones((4, 1)), 2, inner_p=[4.0, 1.0])
    assert is_rounding(g, np.array([2 ** -0.5, 2 ** -0.5, 1.0, 1.0]))
    assert not is_rounding(g, np.ones(4))


def test_beta_examples(rng):
    g = singletons(np.eye(3), 1.0)
    np.testing.assert_allclose(beta_weights(g, np.ones(3)), 1.0)
    g = random_grouped(rng, 40, 4, 2, p=1.0)
    b = fixed_point_blw(g).b
    v = g.expand(b) ** (1 - 2 / g.outer_p)
    assert np.sum(beta_weights(g, v) ** g.outer_p) == pytest.approx(g.n, rel=1e-8)


def test_zero_group_gets_floor(rng):
    a = rng.standard_normal((6, 2))
    a[2:4] = 0
    g = GroupedMatrix.uniform(a, 2, 2.0, 3.0)
    out = averaging_blw(g)
    assert out.b[1] >= 1 / g.m
    cert = blw_convert(g, out)
    assert np.isfinite(cert.f_star)


def test_compute_weights_dispatch(rng):
    g = random_grouped(rng, 12, 2, 2, p=1.0)
    assert compute_weights(g)[0].algorithm == "contractive"
    assert compute_weights(g.with_exponents(outer_p=5.0))[0].algorithm == "averaging"
    assert compute_weights(g.with_exponents(inner_p=3.0, outer_p=2.0))[0].algorithm == "inner"
    with pytest.raises(ValueError, match="inner exponent"):
        compute_weights(g.with_exponents(inner_p=3.0, outer_p=1.0))


# Properties

seeds = st.integers(0, 2 ** 32 - 1)


@given(seeds, st.sampled_from([0.5, 1.0, 1.5, 3.0, 3.9]))
def test_contraction_property(seed, p):
    rng = np.random.default_rng(seed)
    g = random_grouped(rng, 12, 3, 2, p=p)
    u = np.exp(2 * rng.standard_normal(g.m))
    v = np.exp(2 * rng.standard_normal(g.m))
    assert ln_dist(psi_map(g, u), psi_map(g, v)) <= abs(p / 2 - 1) * ln_dist(u, v) + 1e-9


@given(seeds, st.sampled_from(["contractive", "averaging", "inner"]))
def test_certificate_invariants(seed, alg):
    rng = np.random.default_rng(seed)
    p, inner_p = {"contractive": (1.2, 2.0), "averaging": (3.0, 2.0), "inner": (2.0, 4.0)}[alg]
    g = random_grouped(rng, 18, 3, 3, p=p, inner_p=inner_p)
    weights, inner = compute_weights(g, alg)
    cert = blw_convert(g, weights, inner)
    assert np.all(weights.b > 0)
    assert cert.lam.sum() == pytest.approx(1.0, abs=1e-12)
    assert cert.f_star <= weights.bound * (1 + 1e-6)
    assert cert.alpha_p.sum() <= cert.f_star ** (p / 2) * (1 + 1e-9)
    profile = overestimate_profile(g, cert.lam, cert.w)
    assert cert.f_star >= profile.max() * (1 - 1e-12)


@given(seeds)
def test_permutation_equivariance(seed):
    rng = np.random.default_rng(seed)
    g = random_grouped(rng, 15, 3, 3, p=1.0)
    perm = rng.permutation(g.m)
    g_perm = GroupedMatrix(g.a, [g.groups[i] for i in perm], g.inner_p[perm], g.outer_p)
    np.testing.assert_allclose(contractive_blw(g_perm).b, contractive_blw(g).b[perm], rtol=1e-9)
