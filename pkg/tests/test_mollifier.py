import json

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from numpy.polynomial import polynomial as P

from cuspmorrey.mollifier import (
    L_MAX,
    MollifierKernel,
    build_kernel_1d,
    bump,
    gauss_rule,
    kernel_moment,
    oracle_moment,
    tensor_kernel_eval,
)

# Moment l+1 of the l-kernel from the adaptive longdouble oracle (128-node
# panels), cross-checked against scipy.integrate.quad to ~3e-12.
# l=0 is b/∫b, symmetric about 3/4, so its first moment is exactly 0.75.
FROZEN_NEXT_MOMENT = {
    0: 0.75,
    1: -0.5608393590637416,
    2: 0.41846316459183125,
    3: -0.3116890149978654,
    4: 0.23183031855262884,
    5: -0.17222794291684007,
}


@pytest.fixture(scope="module")
def kernels():
    return {l: build_kernel_1d(l) for l in range(L_MAX + 1)}


@pytest.mark.parametrize("l", range(6))
def test_moments_against_oracle(kernels, l):
    k = kernels[l]
    assert abs(oracle_moment(k, 0) - 1) <= 1e-10
    for j in range(1, l + 1):
        assert abs(oracle_moment(k, j)) <= 1e-8
    assert abs(kernel_moment(k, 0) - 1) <= 1e-10


@pytest.mark.parametrize("l", range(6))
def test_next_moment_nonzero(kernels, l):
    got = oracle_moment(kernels[l], l + 1)
    assert got == pytest.approx(FROZEN_NEXT_MOMENT[l], abs=1e-9)
    assert abs(got) > 0.1


def test_l0_is_normalized_bump(kernels):
    t = np.linspace(0.51, 0.99, 7)
    t_nodes, w = gauss_rule(64)
    mass = np.sum(w * bump(t_nodes))
    np.testing.assert_allclose(kernels[0](t), bump(t) / mass, rtol=1e-13)


def test_support(kernels):
    for k in kernels.values():
        vals = k(np.array([0.4, 0.5, 1.0, 1.2, -3.0]))
        assert np.all(vals == 0)


def test_refuses_high_order():
    with pytest.raises(ValueError, match="condition number"):
        build_kernel_1d(7)
    with pytest.raises(ValueError):
        build_kernel_1d(-1)


def test_monomial_basis_refused_above_three():
    build_kernel_1d(3, basis="monomial")
    with pytest.raises(ValueError, match="monomial"):
        build_kernel_1d(4, basis="monomial")


def test_monomial_and_legendre_agree():
    a = build_kernel_1d(3, basis="legendre")
    b = build_kernel_1d(3, basis="monomial")
    t = np.linspace(0.55, 0.95, 9)
    np.testing.assert_allclose(a(t), b(t), rtol=1e-9, atol=1e-9)


@pytest.mark.parametrize("l", range(6))
@pytest.mark.parametrize("s", [1.0, 2.0**-5, 2.0**-10])
def test_polynomial_annihilation(kernels, l, s):
    rng = np.random.default_rng(l)
    k = kernels[l]
    q = rng.normal(size=l + 1)
    t = np.asarray(k.nodes, dtype=np.longdouble)
    w = np.asarray(k.weights, dtype=np.longdouble) * k.evaluate(t, dtype=np.longdouble)
    for x in (-0.7, 0.0, 1.3):
        got = float(np.sum(w * P.polyval(x - s * t, q)))
        assert got == pytest.approx(P.polyval(x, q), abs=1e-8)


@pytest.mark.parametrize("l,q", [(0, 8), (2, 8), (3, 8), (2, 16), (5, 16), (5, 24)])
def test_discrete_rule_exact(kernels, l, q):
    nodes, w = kernels[l].discrete_rule(q)
    assert nodes.size == q
    for j in range(l + 1):
        assert np.sum(w * nodes**j) == pytest.approx(float(j == 0), abs=1e-10)


def test_discrete_rule_refuses_too_few_nodes(kernels):
    with pytest.raises(ValueError, match="vanishing moments"):
        kernels[5].discrete_rule(8)


def test_tensor_kernel(kernels):
    k = kernels[2]
    z = np.array([0.75, 0.75])
    assert tensor_kernel_eval([k, k], z) == pytest.approx(float(k(0.75)) ** 2)
    assert tensor_kernel_eval([k, k], np.array([0.5, 0.75])) == 0
    assert tensor_kernel_eval([k, k], np.array([0.8, 0.3])) == 0
    with pytest.raises(ValueError):
        tensor_kernel_eval([k], z)


def test_tensor_integral_is_one(kernels):
    k1, k2 = kernels[2], kernels[3]
    # product of the two independent 1-d oracles
    assert oracle_moment(k1, 0) * oracle_moment(k2, 0) == pytest.approx(1.0, abs=1e-9)
    t, w = gauss_rule(64)
    Z = np.stack(np.meshgrid(t, t, indexing="ij"), axis=-1)
    W = np.outer(w, w)
    assert np.sum(W * tensor_kernel_eval([k1, k2], Z)) == pytest.approx(1.0, abs=1e-9)


def test_json_round_trip(kernels):
    k = kernels[5]
    back = MollifierKernel.from_dict(json.loads(json.dumps(k.to_dict())))
    t = np.linspace(0.5, 1.0, 33)
    np.testing.assert_array_equal(back(t), k(t))
    assert back.digest() == k.digest()
    assert kernels[4].digest() != k.digest()


def test_fd_derivatives_bounded_and_vanish_at_ends(kernels):
    k = kernels[3]
    h = 1e-3
    t = np.arange(0.5 - 5 * h, 1.0 + 5 * h, h)
    v = k(t)
    for order in (1, 2, 3):
        v = np.diff(v) / h
        assert np.all(np.isfinite(v))
        assert np.max(np.abs(v[:3])) < 1e-6 and np.max(np.abs(v[-3:])) < 1e-6


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 5), st.floats(0.0, 1.0, allow_nan=False))
def test_vanishes_outside_support_property(l, u):
    k = build_kernel_1d(l)
    assert k(np.array([0.5 - u, 1.0 + u]))[0] == 0
    assert k(np.array([1.0 + u]))[0] == 0
