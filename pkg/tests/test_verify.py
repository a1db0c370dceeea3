import json
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from cuspmorrey.extension import ExtensionConfig, ExtensionWarning
from cuspmorrey.fields import function_catalog, make_test_function
from cuspmorrey.geometry import GammaMetric, box_domain, catalog_domains, cusp_domain
from cuspmorrey.verify import (
    HypothesisError,
    Refinement,
    _PoincareField,
    _ball_stats,
    _lemma_one,
    _region,
    barozzi_exponent,
    campanato_exponent,
    check_campanato_embedding,
    check_daprato,
    check_extension_corollary,
    check_geometric_lemma,
    check_morrey_campanato_equivalence,
    check_sobolev_morrey_embedding,
    classical_limits,
    corollary_exponent,
    daprato_eta,
    daprato_exponent,
    n_gamma,
    poincare_ratio,
    sample_lemma_configs,
    sobolev_morrey_exponent,
)

SQUARE = box_domain([0, 0], [1, 1], 1.0)
SQUARE_HALF = box_domain([0, 0], [1, 1], 0.5)
CUSP = cusp_domain(0.5, W=[[-1.0, 1.0]], a=-2.0)
CAT = {f.name: f for f in function_catalog()}
QUICK = Refinement(pairs=2000, resolution=32)


def gamma_power(beta, center=(0.0, -1.0), gamma=0.5):
    return make_test_function({"kind": "gamma_power", "center": list(center), "exponent": beta, "gamma": gamma})


# exponent arithmetic, oracle values computed by hand


def test_exponent_examples():
    assert n_gamma(2, 0.5) == 3
    assert campanato_exponent(2, 0.5, 1, 3.5) == pytest.approx(0.5)
    assert sobolev_morrey_exponent(2, 0.5, 2, 4, 1) == pytest.approx(0.75)
    assert barozzi_exponent(2, 0.5, 1, 4, 2, 0.05) == pytest.approx(0.70)
    assert daprato_eta(2, 0.5) == pytest.approx(0.5)
    assert daprato_eta(2, 1.0) == pytest.approx(1.0)
    assert daprato_exponent(2, 1.0, 2, 1) == pytest.approx(0.5)
    assert corollary_exponent(2, 0.5, 2, 2, 1.5) == pytest.approx(0.375)
    for p in (3, 4, 7.5):
        assert corollary_exponent(2, 1.0, 1, p, 0) == pytest.approx(1 - 2 / p)


def test_classical_limits_exact():
    lim = classical_limits(values={"n": 2, "l": 1, "p": 4, "lam": 1})
    assert all(row["exact"] for row in lim.values())
    assert lim["campanato"]["value"] == "-1/4"
    assert lim["sobolev_morrey"]["value"] == "3/4"
    assert lim["daprato_eta"]["at_gamma_1"] == "1"
    assert lim["corollary"]["value"] == lim["corollary"]["classical_value"] == "3/4"


@settings(max_examples=60, deadline=None)
@given(st.integers(1, 4), st.integers(1, 4), st.floats(1, 10), st.floats(0, 6), st.floats(0.05, 1.0))
def test_corollary_is_embedding_of_extension(n, l, p, lam, gamma):
    # the corollary is the γ = 1 embedding applied with l -> [γl], λ -> γλ
    m = math.floor(gamma * l + 1e-12)
    assert corollary_exponent(n, gamma, l, p, lam) == pytest.approx(sobolev_morrey_exponent(n, 1.0, m, p, gamma * lam))


@settings(max_examples=60, deadline=None)
@given(st.integers(1, 4), st.integers(1, 4), st.floats(1, 10), st.floats(0, 6))
def test_gamma_one_reduction_numeric(n, l, p, lam):
    assert campanato_exponent(n, 1.0, p, lam) == pytest.approx((lam - n) / p)
    assert sobolev_morrey_exponent(n, 1.0, l, p, lam) == pytest.approx(l + (lam - n) / p)
    assert daprato_eta(n, 1.0) == pytest.approx(1.0)


# hypothesis gates


@settings(max_examples=30, deadline=None)
@given(st.floats(0.2, 1.0), st.floats(0.01, 1.0))
def test_campanato_gate(gamma, frac):
    dom = cusp_domain(gamma, W=[[-1, 1]], a=-2)
    lam = frac * n_gamma(2, gamma)
    with pytest.raises(HypothesisError, match="λ > n_γ"):
        check_campanato_embedding(dom, CAT["x1"], 1, lam)


def test_gates_record_inequality():
    with pytest.raises(HypothesisError, match="0 < λ < n_γ"):
        check_morrey_campanato_equivalence(CUSP, function_catalog(), 2, 3.0)
    with pytest.raises(HypothesisError, match=r"γ\(l \+ \(λ - n_γ\)/p\) < 1"):
        check_sobolev_morrey_embedding(CUSP, CAT["x1"], 2, 2, 3.0)
    with pytest.raises(HypothesisError, match="pl > n_γ - λ"):
        check_sobolev_morrey_embedding(CUSP, CAT["x1"], 1, 1, 0.5)
    with pytest.raises(HypothesisError, match="parallelepiped"):
        check_sobolev_morrey_embedding(CUSP, CAT["x1"], 1, 4, 2.0, mode="barozzi")
    with pytest.raises(HypothesisError, match=r"l \+ \(λ - n_γ\)/p ≤ 1"):
        check_sobolev_morrey_embedding(SQUARE_HALF, CAT["x1"], 2, 4, 2.0, mode="barozzi")
    with pytest.raises(HypothesisError, match="Ω convex"):
        check_daprato(CUSP, CAT["x1"], 2, 1.0)
    # unit square read with γ = 1/2: η = 1/2 and pη = 1 is not > n_γ - λ = 2
    with pytest.raises(HypothesisError, match="pη > n_γ - λ"):
        check_daprato(SQUARE_HALF, CAT["x1"], 2, 1.0)
    with pytest.raises(HypothesisError, match="pη̃ > n_γ - λ"):
        check_daprato(CUSP, CAT["x1"], 2, 0.5, eta_tilde=0.5)
    cfg = ExtensionConfig(l=1, A=8.0, box_lo=(-0.25, -0.5), box_hi=(0.25, 0.0), shape=(8, 8))
    with pytest.raises(HypothesisError, match=r"p\[γl\] > n - γλ"):
        check_extension_corollary(CUSP, CAT["x1"], 1, 2, 1.5, cfg)
    with pytest.raises(HypothesisError, match=r"\[γl\] \+ \(γλ - n\)/p < 1"):
        check_extension_corollary(CUSP, CAT["x1"], 2, 2, 4.5, cfg)


def test_unbounded_needs_window():
    dom, _ = catalog_domains()["outer_cusp_0.5"]
    with pytest.raises(ValueError, match="window"):
        _region(dom)
    contains, lo, hi = _region(dom, ([-1, -2], [1, 1]))
    np.testing.assert_array_equal(lo, [-1, -2])
    np.testing.assert_array_equal(hi, [1, 1])


# embedding checks


def test_campanato_gamma_power_exponent():
    rep = check_campanato_embedding(CUSP, gamma_power(0.5), 1, 3.5, refine=QUICK)
    assert rep.predicted == pytest.approx(0.5)
    assert rep.passed
    assert rep.witnesses["fitted_exponent"] == pytest.approx(0.5, abs=0.05)
    assert rep.classical["campanato"]["exact"]


def test_campanato_constant_trivial():
    one = CAT["one"]
    rep = check_campanato_embedding(CUSP, one, 2, 4.0, refine=QUICK)
    assert rep.passed and rep.measured == 0
    assert all(lv["sup_quotient"] == 0 and lv["norm"] == 0 for lv in rep.levels)


def test_negative_control_campanato():
    # δ_γ-Hölder exponent 0.25 below the predicted α = 0.5
    rep = check_campanato_embedding(CUSP, gamma_power(0.25), 2, 4.0, refine=QUICK)
    assert not rep.passed
    assert rep.witnesses["growth"]["sup_quotient"] >= 2


def test_equivalence_bracket():
    rep = check_morrey_campanato_equivalence(CUSP, function_catalog(), 2, 1.0, resolution=32)
    lo, hi = rep.witnesses["bracket"]
    assert rep.passed and 1 / 50 <= lo <= hi <= 50
    # ‖f‖_{L^p} <= Morrey norm (φ = 1 at the largest radius) and the Campanato term is <= 2 Morrey
    assert 1 - 1e-9 <= lo and hi <= 3 + 1e-9
    assert rep.levels[1]["ratios"]["one"] == pytest.approx(1.0, abs=1e-9)
    with pytest.raises(ValueError, match="nonempty"):
        check_morrey_campanato_equivalence(CUSP, [], 2, 1.0)


def test_sobolev_segment_mode_filters_pairs():
    rep = check_sobolev_morrey_embedding(CUSP, CAT["wave"], 2, 4, 1.0, refine=QUICK)
    assert rep.predicted == pytest.approx(0.75) and rep.passed
    pair = rep.witnesses["pair"]
    x, y = np.array(pair["x"]), np.array(pair["y"])
    seg = x + np.linspace(0, 1, 64)[:, None] * (y - x)
    assert np.all(CUSP.contains(seg))
    assert pair["distance"] == pytest.approx(float(np.linalg.norm(x - y)))


def test_sobolev_linear_trivial():
    lin = make_test_function({"kind": "polynomial", "terms": [[[1, 0], 2.0], [[0, 1], -1.0]]})
    rep = check_sobolev_morrey_embedding(CUSP, lin, 2, 4, 1.0, refine=QUICK)
    assert rep.passed and math.isfinite(rep.measured)


def test_barozzi_mode():
    rep = check_sobolev_morrey_embedding(SQUARE_HALF, CAT["sin*cos"], 1, 4, 2.0, mode="barozzi", refine=QUICK)
    assert rep.predicted == pytest.approx(0.70)
    assert rep.passed and rep.witnesses["distance_form"] == "additive"
    edge = check_sobolev_morrey_embedding(SQUARE_HALF, CAT["x1"], 1, 4, 3.0, mode="barozzi", refine=QUICK)
    assert any("boundary case" in f for f in edge.flags)


def test_daprato_unit_square():
    rep = check_daprato(SQUARE, CAT["x1"], 2, 1.0, refine=QUICK)
    assert rep.predicted == pytest.approx(0.5) and rep.passed
    assert rep.classical["daprato_eta"]["exact"]


def test_daprato_variant_on_cusp():
    eta = poincare_ratio(CUSP, function_catalog(), 2, resolution=64).eta_fit
    rep = check_daprato(CUSP, CAT["x2"], 2, 2.5, eta_tilde=eta, refine=QUICK)
    assert rep.params["mode"] == "variant"
    assert rep.predicted == pytest.approx(eta + (2.5 - 3) / 2)
    assert rep.passed


# Poincaré


def test_poincare_full_square_example():
    m = GammaMetric(1.0, 2)
    pf = _PoincareField(CAT["x1"], _region(SQUARE), 128, m)
    st_ = _ball_stats(pf, np.array([0.5, 0.5]), 10.0, 1.0, 1, True)
    # ∫|x1 - 1/2| = 1/4 (midpoint rule is exact: the kink sits on a cell edge)
    assert st_["lhs"] == pytest.approx(0.25, abs=1e-12)
    assert st_["bound"] == pytest.approx(2 * math.sqrt(math.pi), abs=1e-12)
    assert st_["diameter"] == pytest.approx(math.sqrt(2), abs=1e-12)
    const = _PoincareField(CAT["one"], _region(SQUARE), 16, m)
    assert _ball_stats(const, np.array([0.5, 0.5]), 0.2, 1.0, 1, True) == "zero"


def test_poincare_convex_zero_violations():
    rep = poincare_ratio(SQUARE, function_catalog(), 1, resolution=64, samples=200)
    assert rep.convex and rep.samples == 200
    assert rep.violations == 0 and rep.max_convex_ratio < 1
    assert rep.skipped > 0  # constant members are skipped
    assert rep.eta_fit == pytest.approx(1.0, abs=0.1)


def test_poincare_cusp_fit():
    rep = poincare_ratio(CUSP, function_catalog(), 2, resolution=64)
    assert not rep.convex and math.isfinite(rep.eta_fit)
    assert rep.as_check().passed


# geometric lemma


def test_lemma_enumeration_oracle():
    flat, _ = catalog_domains()["flat"]
    # ρ ranges over (0.2, 0.4): h = 1 and no k >= 4 meets G̃_k
    res = _lemma_one(flat, np.array([0.0, 0.3]), 0.1, np.zeros(2), flat.lip)
    assert res["h"] == 1 and res["ks"] == []
    # ρ over (-0.05, 0.15): h = 2, every k >= 5 meets G̃_k
    res = _lemma_one(flat, np.array([0.0, 0.05]), 0.1, np.zeros(2), flat.lip)
    assert res["h"] == 2 and res["ks"][0] == 5 and res["truncated"]
    assert res["gap"] == pytest.approx(2.0**-5, rel=1e-8)
    assert _lemma_one(flat, np.array([0.0, -1.0]), 0.1, np.zeros(2), flat.lip) is None


def test_lemma_bounds_examples():
    # Lip = 1, γ = 1/2, r = 1/4: ½(2r + (2r)^γ)
    assert 0.5 * (2 * 0.25 + 0.5**0.5) == pytest.approx(0.6036, abs=1e-4)
    flat, _ = catalog_domains()["flat"]
    x, r, eta = sample_lemma_configs(flat, 200, np.random.default_rng(3))
    rep = check_geometric_lemma(flat, x, r, eta)
    assert rep.passed and rep.witnesses["tested"] > 150
    # flat, γ = 1: the gap is at most ½(2r + 0) <= 2r
    rows = np.array(rep.plot)
    assert np.all(rows[:, 1] * (rows[:, 0] + rows[:, 0]) <= 2 * rows[:, 0] * (1 + 1e-12))


@pytest.mark.parametrize("name", ["outer_cusp_0.5", "inner_cusp_0.5"])
def test_lemma_on_cusps(name):
    dom, _ = catalog_domains()[name]
    x, r, eta = sample_lemma_configs(dom, 150, np.random.default_rng(1))
    rep = check_geometric_lemma(dom, x, r, eta)
    assert rep.passed
    assert rep.witnesses["violations_proof"] == 0 and math.isfinite(rep.witnesses["S"])
    assert rep.predicted == pytest.approx(0.5 * (2 + 2**0.5))


def test_lemma_eta_bound():
    flat, _ = catalog_domains()["flat"]
    with pytest.raises(HypothesisError, match="|η| < E"):
        check_geometric_lemma(flat, [[0, 0.1]], [0.1], [[2.0, 0.0]], E=1.0)


# extension corollary


CORO_DOM = cusp_domain(0.5, W=[[-1.0, 1.0]], a=-6.0)
CORO_CFG = ExtensionConfig(l=2, A=8.0, box_lo=(-0.25, -0.5), box_hi=(0.25, 0.0), shape=(16, 16))


@pytest.mark.parametrize("name", ["x1", "x1*x2", "bump"])
def test_corollary_catalog(name):
    with pytest.warns(ExtensionWarning):
        rep = check_extension_corollary(CORO_DOM, CAT[name], 2, 2, 1.5, CORO_CFG, refine=QUICK)
    assert rep.predicted == pytest.approx(0.375)
    assert rep.witnesses["restriction_exact"] and rep.passed
    assert rep.classical["corollary"]["exact"]


def test_corollary_negative_control():
    neg = gamma_power(0.25, gamma=1.0)
    with pytest.warns(ExtensionWarning):
        rep = check_extension_corollary(CORO_DOM, neg, 2, 2, 1.5, CORO_CFG, refine=QUICK)
    assert not rep.passed
    assert rep.witnesses["growth"]["sup_quotient"] >= 2


def test_report_json_deterministic():
    a = check_daprato(SQUARE, CAT["wave"], 2, 1.0, refine=QUICK).to_dict()
    b = check_daprato(SQUARE, CAT["wave"], 2, 1.0, refine=QUICK).to_dict()
    assert json.dumps(a, sort_keys=True) == json.dumps(b, sort_keys=True)
    assert a["params"]["eta"] == pytest.approx(1.0)
