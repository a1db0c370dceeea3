import json

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from cuspmorrey.fields import GridField, function_catalog, make_test_function
from cuspmorrey.geometry import GammaMetric, cusp_domain, sample_pairs
from cuspmorrey.norms import (
    WeightSpec,
    ball_quantity,
    campanato_seminorm,
    default_centers,
    default_radii,
    holder_ratio_fit,
    morrey_norm,
    multi_indices,
    sobolev_morrey_norm,
    weight_eval,
    weight_transform_gamma,
    write_profile_csv,
)

M1 = GammaMetric(1.0)
M_HALF = GammaMetric(0.5)


def square(fun, n=64):
    return GridField.on_box(fun, [0, 0], [1, 1], (n, n))


ONE = square(lambda p: np.ones(p.shape[:-1]))
CUSP = cusp_domain(0.5, W=[[-1.0, 1.0]], a=-2.0)


def cusp_field(fun, n=96):
    return GridField.on_box(fun, [-1, -2], [1, 0], (n, n), CUSP.contains)


def test_weight_examples():
    assert weight_transform_gamma(WeightSpec.power(2), 0.5) == WeightSpec.power(1)
    assert weight_transform_gamma(WeightSpec.power(1.7), 1.0) == WeightSpec.power(1.7)
    tab = WeightSpec.tabulated([0.01, 0.1, 1.0], [1e-4, 0.02, 1.0])
    assert weight_eval(tab, 4.0) == 1.0
    assert weight_eval(WeightSpec.power(2), 0.5) == 0.25
    assert weight_eval(WeightSpec.power(2), 3.0) == 1.0
    with pytest.raises(ValueError):
        weight_eval(WeightSpec.power(1), 0.0)
    with pytest.raises(ValueError):
        WeightSpec.power(-1)
    with pytest.raises(ValueError):
        WeightSpec.tabulated([0.1, 0.2], [0.0, 1.0])


@settings(max_examples=100, deadline=None)
@given(st.floats(0, 5), st.floats(0.05, 1.0))
def test_power_transform_exact(lam, gamma):
    t = WeightSpec.power(lam).transform_gamma(gamma)
    assert t.kind == "power" and t.lam == gamma * lam


@settings(max_examples=100, deadline=None)
@given(st.floats(1e-4, 10.0), st.floats(0.1, 1.0))
def test_tabulated_transform(r, gamma):
    tab = WeightSpec.tabulated([1e-3, 0.05, 0.3, 1.0], [1e-5, 3e-3, 0.2, 1.0])
    got = float(tab.transform_gamma(gamma)(r))
    assert got == pytest.approx(float(tab(r**gamma)), rel=1e-9)
    assert got > 0


def test_weight_json():
    for w in (WeightSpec.power(1.5), WeightSpec.tabulated([0.1, 1.0], [0.3, 1.0])):
        assert WeightSpec.from_dict(json.loads(json.dumps(w.to_dict()))) == w


def test_morrey_examples():
    C = np.vstack([default_centers(ONE), [[0.5, 0.5]]])
    est = morrey_norm(ONE, 1, WeightSpec.power(1), M1, centers=C)
    assert est.value == pytest.approx(2.0, rel=1e-12)
    np.testing.assert_array_equal(est.argmax_center, [0.5, 0.5])
    assert est.argmax_radius == 0.5
    assert morrey_norm(ONE, 1, WeightSpec.power(0), M1).value == pytest.approx(1.0, rel=1e-12)
    zero = square(lambda p: np.zeros(p.shape[:-1]))
    assert morrey_norm(zero, 2, WeightSpec.power(1), M1).value == 0
    with pytest.raises(ValueError):
        morrey_norm(ONE, 1, WeightSpec.power(1), M1, centers=np.zeros((0, 2)))


@pytest.mark.parametrize("kind", ["morrey", "campanato"])
@pytest.mark.parametrize("p", [1, 2])
def test_witness_reproduces_value(kind, p):
    f = cusp_field(lambda x: np.sin(2 * x[..., 0]) + x[..., 1] ** 2)
    w = WeightSpec.power(1.5)
    est = (morrey_norm if kind == "morrey" else campanato_seminorm)(f, p, w, M_HALF)
    again = ball_quantity(f, p, w, M_HALF, est.argmax_center, est.argmax_radius, kind)
    assert again == pytest.approx(est.value, rel=1e-9)


def test_ties_break_lexicographically():
    est = morrey_norm(ONE, 1, WeightSpec.power(0), M1, radii=[5.0, 10.0])
    # every centre attains |Ω| at both radii; the first centre and radius win
    np.testing.assert_array_equal(est.argmax_center, ONE.masked_points()[0])
    assert est.argmax_radius == 5.0


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_sup_monotone_under_refinement(seed):
    rng = np.random.default_rng(seed)
    f = cusp_field(lambda x: np.cos(3 * x[..., 0]) * x[..., 1], n=48)
    w = WeightSpec.power(1.0)
    C = default_centers(f)
    R = default_radii(f, M_HALF)
    sub_c = C[np.sort(rng.choice(len(C), size=len(C) // 3, replace=False))]
    sub_r = R[np.sort(rng.choice(len(R), size=len(R) // 2, replace=False))]
    for fn in (morrey_norm, campanato_seminorm):
        small = fn(f, 2, w, M_HALF, centers=sub_c, radii=sub_r).value
        assert fn(f, 2, w, M_HALF, centers=C, radii=sub_r).value >= small
        assert fn(f, 2, w, M_HALF, centers=sub_c, radii=R).value >= small


def test_campanato_constant_and_shift():
    w = WeightSpec.power(3)
    c = square(lambda p: np.full(p.shape[:-1], 4.2), n=32)
    assert campanato_seminorm(c, 1, w, M1).value == pytest.approx(0, abs=1e-12)
    x2 = square(lambda p: p[..., 1], n=32)
    for p in (1, 2):
        base = campanato_seminorm(x2, p, w, M1)
        assert base.value > 0 and np.isfinite(base.value)
        for shift in (1.0, -17.5, 1e3):
            moved = campanato_seminorm(x2.with_values(x2.values + shift), p, w, M1)
            assert moved.value == pytest.approx(base.value, rel=1e-12)


def test_campanato_paths_agree():
    f = cusp_field(lambda x: np.exp(x[..., 1]) * x[..., 0], n=48)
    w = WeightSpec.power(1.0)
    sat = campanato_seminorm(f, 2, w, M_HALF, method="sat")
    direct = campanato_seminorm(f, 2, w, M_HALF, centers=default_centers(f), method="direct")
    assert sat.value == pytest.approx(direct.value, rel=1e-9)


def test_campanato_jump_grows_under_refinement():
    w = WeightSpec.power(3)  # λ = 3 > n_γ = 2
    vals = []
    for n in (32, 64, 128):
        jump = square(lambda p: (p[..., 0] > 0.4).astype(float), n=n)
        vals.append(campanato_seminorm(jump, 1, w, M1).value)
    assert vals[1] > 1.5 * vals[0] and vals[2] > 1.5 * vals[1]


@pytest.mark.parametrize("p", [1, 2])
def test_campanato_at_most_twice_morrey(p):
    w = WeightSpec.power(1.0)
    for t in function_catalog():
        f = cusp_field(t, n=48)
        assert campanato_seminorm(f, p, w, M_HALF).value <= 2 * morrey_norm(f, p, w, M_HALF).value * (1 + 1e-12)


def test_sobolev_examples():
    w0 = WeightSpec.power(0)
    assert sobolev_morrey_norm(ONE, 1, 1, w0, M1).value == pytest.approx(morrey_norm(ONE, 1, w0, M1).value, abs=1e-9)
    x1 = square(lambda p: p[..., 0])
    est = sobolev_morrey_norm(x1, 1, 1, w0, M1)
    assert set(est.terms) == {(0, 0), (1, 0), (0, 1)}
    assert est.terms[(0, 0)].value == pytest.approx(0.5, abs=1e-9)  # ∫ x1 over the square
    assert est.terms[(1, 0)].value == pytest.approx(1.0, abs=1e-9)
    assert est.terms[(0, 1)].value == pytest.approx(0.0, abs=1e-9)
    assert est.value == pytest.approx(1.5, abs=1e-9)
    with pytest.raises(ValueError):
        sobolev_morrey_norm(x1, 5, 1, w0, M1)


def test_sobolev_triangle_inequality():
    rng = np.random.default_rng(0)
    w = WeightSpec.power(1.5)
    cat = function_catalog()
    for _ in range(5):
        a, b = rng.choice(len(cat), 2, replace=False)
        f, g = cusp_field(cat[a], 48), cusp_field(cat[b], 48)
        fg = f.with_values(f.values + g.values)
        lhs = sobolev_morrey_norm(fg, 2, 2, w, M1).value
        rhs = sobolev_morrey_norm(f, 2, 2, w, M1).value + sobolev_morrey_norm(g, 2, 2, w, M1).value
        assert lhs <= rhs * (1 + 1e-12)


def test_multi_indices():
    assert multi_indices(2, 1) == [(0, 0), (1, 0), (0, 1)]
    assert len(multi_indices(2, 2)) == 6
    assert len(multi_indices(3, 2)) == 10


def _pairs(n=4000, anchors=None, scales=(1e-4, 0.3)):
    rng = np.random.default_rng(1)
    return sample_pairs(CUSP.contains, [-1, -2], [1, 0], n, rng, M_HALF, scales, anchors=anchors)


def test_holder_fit_gamma_power():
    x0 = np.array([0.0, -0.5])
    f = make_test_function({"kind": "gamma_power", "center": x0.tolist(), "exponent": 0.4, "gamma": 0.5})
    X, Y = _pairs(anchors=[x0])
    fit = holder_ratio_fit(f, M_HALF, X, Y, alphas=(0.3, 0.4))
    assert fit.exponent == pytest.approx(0.4, abs=0.05)
    assert fit.sup_ratio[0.4] <= 1 + 1e-12  # |d^β - e^β| <= |d - e|^β


def test_holder_fit_vertical_coordinate():
    f = make_test_function({"kind": "polynomial", "terms": [[[0, 1], 1.0]]})
    X, Y = _pairs()
    fit = holder_ratio_fit(f, M_HALF, X, Y, alphas=(1.0,))
    assert fit.exponent == pytest.approx(1.0, abs=0.05)
    assert fit.sup_ratio[1.0] <= 1 + 1e-12


def test_holder_fit_constant_and_degenerate():
    f = make_test_function({"kind": "polynomial", "terms": [[[0, 0], 3.0]]})
    X, Y = _pairs()
    fit = holder_ratio_fit(f, M_HALF, X, Y, alphas=(0.2, 0.9))
    assert all(v == 0 for v in fit.sup_ratio.values()) and fit.constant
    with pytest.raises(ValueError, match="degenerate"):
        holder_ratio_fit(f, M_HALF, X[:500], Y[:500])
    Xn, Yn = _pairs(scales=(0.1, 0.3))
    with pytest.raises(ValueError, match="decades"):
        holder_ratio_fit(f, M_HALF, Xn, Yn)


def test_profile_csv(tmp_path):
    est = morrey_norm(ONE, 1, WeightSpec.power(1), M1)
    write_profile_csv(tmp_path / "p.csv", est)
    rows = (tmp_path / "p.csv").read_text().splitlines()
    assert rows[0] == "r,sup_over_centers" and len(rows) == est.radius_count + 1
    json.dumps(est.to_dict())
