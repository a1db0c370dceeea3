"""Empirical checks of the embedding, equivalence, Poincaré, geometric and
extension statements.

Every check refuses to run outside the hypothesis region of its statement
and raises :class:`HypothesisError` naming the violated inequality.  A
"finite constant" is tested by stability: the check is repeated on a
refined level (4x the pairs, the smallest pair scale divided by 1000, the
norm grid refined 2x) and passes when the sampled constant, the raw
Hölder quotient and the norm each grow by less than 2x.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import sympy
from scipy.spatial import ConvexHull, QhullError

from .extension import ExtensionConfig, _exact_derivatives, extend_atlas, extend_elementary
from .fields import GridField, TestFunction, eval_field, finite_diff_derivative
from .geometry import (
    Atlas,
    ElementaryDomain,
    GammaMetric,
    atlas_contains,
    dyadic_layer,
    is_box_domain,
    is_convex_domain,
    sample_pairs,
    segment_inside,
    unit_ball_volume,
)
from .norms import (
    WeightSpec,
    _BallSums,
    campanato_seminorm,
    holder_ratio_fit,
    morrey_norm,
    multi_indices,
    sobolev_morrey_norm,
)

__all__ = [
    "CheckReport",
    "HypothesisError",
    "Refinement",
    "n_gamma",
    "campanato_exponent",
    "sobolev_morrey_exponent",
    "barozzi_exponent",
    "daprato_eta",
    "daprato_exponent",
    "corollary_exponent",
    "classical_limits",
    "check_campanato_embedding",
    "check_morrey_campanato_equivalence",
    "check_sobolev_morrey_embedding",
    "check_daprato",
    "PoincareReport",
    "poincare_ratio",
    "check_geometric_lemma",
    "sample_lemma_configs",
    "check_extension_corollary",
]

SEGMENT_POINTS = 64
BAROZZI_EPS = 0.05
EQUIVALENCE_C0 = 50.0
LEMMA_K_SPAN = 30


class HypothesisError(ValueError):
    """Raised when parameters fall outside a statement's hypothesis region."""

    def __init__(self, inequality, values):
        self.inequality = inequality
        self.values = dict(values)
        shown = ", ".join(f"{k}={v:.6g}" if isinstance(v, float) else f"{k}={v}" for k, v in self.values.items())
        super().__init__(f"hypothesis violated: {inequality} ({shown})")


@dataclass
class CheckReport:
    """Outcome of one check.

    For exponent checks ``passed`` is the stability verdict at
    ``tolerance`` (the allowed growth factor); for inequality checks it
    means no sample violated the inequality.
    """

    check_id: str
    params: dict
    predicted: float
    measured: float
    passed: bool
    tolerance: float
    witnesses: dict = field(default_factory=dict)
    hypotheses: list = field(default_factory=list)
    classical: dict = field(default_factory=dict)
    levels: list = field(default_factory=list)
    flags: list = field(default_factory=list)
    plot: list = field(default_factory=list, repr=False)
    plot_columns: tuple = ("distance", "oscillation")

    def to_dict(self):
        return _jsonable({
            "check_id": self.check_id,
            "params": self.params,
            "predicted": self.predicted,
            "measured": self.measured,
            "passed": bool(self.passed),
            "tolerance": self.tolerance,
            "witnesses": self.witnesses,
            "hypotheses": self.hypotheses,
            "classical": self.classical,
            "levels": self.levels,
            "flags": self.flags,
        })


def _jsonable(v):
    if isinstance(v, dict):
        return {str(k): _jsonable(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    if isinstance(v, np.ndarray):
        return [_jsonable(x) for x in v.tolist()]
    if isinstance(v, (np.bool_, bool)):
        return bool(v)
    if isinstance(v, (np.integer,)):
        return int(v)
    if isinstance(v, (float, np.floating)):
        v = float(v)
        return v if math.isfinite(v) else repr(v)
    return v


# ---------------------------------------------------------------------------
# exponent formulas (numeric or symbolic)


def n_gamma(n, gamma):
    return (n - 1) / gamma + 1


def campanato_exponent(n, gamma, p, lam):
    return (lam - n_gamma(n, gamma)) / p


def sobolev_morrey_exponent(n, gamma, l, p, lam):
    return gamma * (l + (lam - n_gamma(n, gamma)) / p)


def barozzi_exponent(n, gamma, l, p, lam, eps=0.0):
    return l + (lam - n_gamma(n, gamma)) / p - eps


def daprato_eta(n, gamma):
    ng = n_gamma(n, gamma)
    return ng / n + n - ng


def daprato_exponent(n, gamma, p, lam, eta=None):
    if eta is None:
        eta = daprato_eta(n, gamma)
    return eta + (lam - n_gamma(n, gamma)) / p


def _floor(v):
    return sympy.floor(v) if isinstance(v, sympy.Basic) else math.floor(v + 1e-12)


def corollary_exponent(n, gamma, l, p, lam):
    return _floor(gamma * l) + (gamma * lam - n) / p


_SYM = {
    "n": sympy.Symbol("n", positive=True, integer=True),
    "l": sympy.Symbol("l", positive=True, integer=True),
    "p": sympy.Symbol("p", positive=True),
    "lam": sympy.Symbol("lambda", positive=True),
}

_CLASSICAL = {
    "campanato": (lambda s, g: campanato_exponent(s["n"], g, s["p"], s["lam"]),
                  lambda s: (s["lam"] - s["n"]) / s["p"]),
    "sobolev_morrey": (lambda s, g: sobolev_morrey_exponent(s["n"], g, s["l"], s["p"], s["lam"]),
                       lambda s: s["l"] + (s["lam"] - s["n"]) / s["p"]),
    "barozzi": (lambda s, g: barozzi_exponent(s["n"], g, s["l"], s["p"], s["lam"]),
                lambda s: s["l"] + (s["lam"] - s["n"]) / s["p"]),
    "daprato_eta": (lambda s, g: daprato_eta(s["n"], g), lambda s: sympy.Integer(1)),
    "daprato": (lambda s, g: daprato_exponent(s["n"], g, s["p"], s["lam"]),
                lambda s: 1 + (s["lam"] - s["n"]) / s["p"]),
    "corollary": (lambda s, g: corollary_exponent(s["n"], g, s["l"], s["p"], s["lam"]),
                  lambda s: s["l"] + (s["lam"] - s["n"]) / s["p"]),
}


def classical_limits(names=None, values=None):
    """Symbolic γ = 1 reduction of each exponent formula.

    Returns ``name -> {"at_gamma_1", "classical", "exact"}`` with the
    formulas as strings.  With ``values`` (a dict over n, l, p, lam) the
    formulas are also evaluated in exact rationals and compared.
    """
    names = list(_CLASSICAL) if names is None else list(names)
    out = {}
    for nm in names:
        formula, classical = _CLASSICAL[nm]
        at1 = sympy.simplify(formula(_SYM, sympy.Integer(1)))
        ref = sympy.simplify(classical(_SYM))
        row = {"at_gamma_1": str(at1), "classical": str(ref), "exact": bool(sympy.simplify(at1 - ref) == 0)}
        if values is not None:
            sub = {s: sympy.nsimplify(values[k]) for k, s in _SYM.items() if k in values}
            a, b = at1.subs(sub), ref.subs(sub)
            row["value"] = str(sympy.nsimplify(a))
            row["classical_value"] = str(sympy.nsimplify(b))
            row["exact"] = row["exact"] and bool(sympy.simplify(a - b) == 0)
        out[nm] = row
    return out


def _require(ok, inequality, **values):
    if not ok:
        raise HypothesisError(inequality, values)
    return inequality


# ---------------------------------------------------------------------------
# regions and sampling


@dataclass(frozen=True)
class Refinement:
    """Two-level refinement schedule for stability checks."""

    pairs: int = 4000
    scales: tuple = (1e-3, 1.0)
    resolution: int = 48
    pair_factor: int = 4
    scale_factor: float = 1000.0
    grid_factor: int = 2
    growth: float = 2.0
    seed: int = 0

    def level(self, i):
        smin = self.scales[0] / self.scale_factor**i
        return self.pairs * self.pair_factor**i, (smin, self.scales[1]), self.resolution * self.grid_factor**i

    def to_dict(self):
        return {k: (list(v) if isinstance(v, tuple) else v) for k, v in self.__dict__.items()}

    @classmethod
    def from_dict(cls, d):
        d = dict(d)
        if "scales" in d:
            d["scales"] = tuple(d["scales"])
        return cls(**d)


def _region(dom, window=None):
    """(contains, lo, hi) of the bounded part of Ω used for sampling."""
    if isinstance(dom, Atlas):
        lo, hi = dom.bounding_box()
        contains = lambda x: atlas_contains(dom, x)  # noqa: E731
    else:
        contains = dom.contains
        lo = np.append(dom.W[:, 0], dom.a)
        hi = np.append(dom.W[:, 1], np.inf)
        if np.isinf(hi[-1]):
            hi[-1] = float(np.max(dom.phi(_corners(dom.W)))) if np.all(np.isfinite(dom.W)) else np.inf
    if window is not None:
        wlo, whi = (np.asarray(v, dtype=float) for v in window)
        lo, hi = np.maximum(lo, wlo), np.minimum(hi, whi)
    lo, hi = np.asarray(lo, float), np.asarray(hi, float)
    if not (np.all(np.isfinite(lo)) and np.all(np.isfinite(hi))):
        raise ValueError("unbounded domain: pass a window box (lo, hi)")
    return contains, lo, hi


def _corners(W):
    W = np.asarray(W, dtype=float)
    grids = np.meshgrid(*[np.linspace(a, b, 65) for a, b in W], indexing="ij")
    return np.stack(grids, -1).reshape(-1, W.shape[0])


def _iso_shape(lo, hi, N):
    ext = np.asarray(hi) - np.asarray(lo)
    return tuple(int(math.ceil(e * N / ext.min() - 1e-9)) for e in ext)


def _grid(f, contains, lo, hi, N):
    return GridField.on_box(f, lo, hi, _iso_shape(lo, hi, N), contains)


def _eval(f, X):
    return eval_field(f, X) if isinstance(f, GridField) else np.asarray(f(X), dtype=float)


def _default_anchors(f, contains):
    if isinstance(f, TestFunction) and f.kind == "gamma_power":
        c = np.asarray(f.params.get("center", [0.0] * f.n), dtype=float)
        if bool(contains(c[None])[0]):
            return [c]
    return None


def _pairs(contains, lo, hi, count, scales, metric, rng, anchors, keep=None):
    if keep is None:
        return sample_pairs(contains, lo, hi, count, rng, metric, scales, anchors=anchors)
    xs, ys, have = [], [], 0
    for _ in range(50):
        X, Y = sample_pairs(contains, lo, hi, 2 * (count - have) + 256, rng, metric, scales, anchors=anchors)
        ok = keep(X, Y)
        xs.append(X[ok])
        ys.append(Y[ok])
        have += int(ok.sum())
        anchors = None  # anchor ladders only once
        if have >= count:
            break
    return np.concatenate(xs)[:count], np.concatenate(ys)[:count]


def _growth(a, b):
    if a == 0:
        return 1.0 if b == 0 else math.inf
    return b / a


def _stability(f, norm_fn, form, alpha, metric, region, refine, anchors=None, keep=None):
    """Run both refinement levels of an oscillation-ratio check."""
    contains, lo, hi = region
    levels = []
    for i in range(2):
        count, scales, N = refine.level(i)
        rng = np.random.default_rng([refine.seed, i])
        X, Y = _pairs(contains, lo, hi, count, scales, metric, rng, anchors, keep)
        fit = holder_ratio_fit(f, metric, X, Y, alphas=(alpha,), form=form, min_pairs=min(1000, len(X)))
        q = fit.sup_ratio[float(alpha)]
        d = _distance(form, metric, X, Y)
        osc = np.abs(_eval(f, X) - _eval(f, Y))
        keep_d = d > 0
        j = int(np.argmax(np.where(keep_d, osc / np.where(keep_d, d, 1.0) ** alpha, -1.0)))
        wit = {"x": X[j].tolist(), "y": Y[j].tolist(), "distance": float(d[j]), "oscillation": float(osc[j])}
        norm = float(norm_fn(N))
        if norm == 0:
            cstar = 0.0 if q == 0 else math.inf
        else:
            cstar = q / norm
        levels.append({"level": i, "pairs": len(X), "min_scale": scales[0], "resolution": N,
                       "sup_quotient": q, "norm": norm, "c_star": cstar,
                       "fitted_exponent": fit.exponent, "witness": wit, "_fit": fit})
    g = {k: _growth(levels[0][k], levels[1][k]) for k in ("c_star", "sup_quotient", "norm")}
    stable = all(v < refine.growth for v in g.values()) and math.isfinite(levels[1]["c_star"])
    return levels, g, stable


def _finish(check_id, params, predicted, levels, growth, stable, refine, hyps, classical, flags, form, metric):
    top = levels[1]
    fit = top.pop("_fit")
    levels[0].pop("_fit")
    return CheckReport(
        check_id, params, float(predicted), float(top["c_star"]), bool(stable), refine.growth,
        witnesses={"growth": growth, "fitted_exponent": top["fitted_exponent"], "distance_form": form,
                   "metric_gamma": metric.gamma, "pair": top["witness"]},
        hypotheses=hyps, classical=classical, levels=levels, flags=flags,
        plot=[(float(d), float(o)) for d, o in zip(fit.bin_delta, fit.bin_envelope)],
    )


def _distance(form, metric, X, Y):
    if form == "euclidean":
        return np.linalg.norm(X - Y, axis=-1)
    if form == "additive":
        return metric.additive_distance(X, Y)
    return metric.distance(X, Y)


def _params(**kw):
    return {k: (v if not isinstance(v, np.ndarray) else v.tolist()) for k, v in kw.items()}


def _dom_gamma(dom, gamma):
    return float(dom.gamma if gamma is None else gamma)


# ---------------------------------------------------------------------------
# Campanato embedding and Morrey-Campanato equivalence


def check_campanato_embedding(dom, f, p, lam, gamma=None, window=None, refine=Refinement(), anchors=None):
    """sup |f(x)-f(y)| / (|f|_Campanato (|x̄-ȳ|^γ + |x_n-y_n|)^α), α = (λ - n_γ)/p."""
    g = _dom_gamma(dom, gamma)
    n = dom.n
    ng = n_gamma(n, g)
    hyps = [_require(lam > ng, "λ > n_γ", lam=lam, n_gamma=ng)]
    alpha = campanato_exponent(n, g, p, lam)
    m = GammaMetric(g, n)
    region = _region(dom, window)
    w = WeightSpec.power(lam)

    def norm_fn(N):
        return campanato_seminorm(_grid(f, *region, N), p, w, m).value

    anchors = _default_anchors(f, region[0]) if anchors is None else anchors
    levels, growth, stable = _stability(f, norm_fn, "additive", alpha, m, region, refine, anchors)
    params = _params(gamma=g, n=n, p=p, lam=lam, n_gamma=ng, function=getattr(f, "name", "field"))
    cl = classical_limits(["campanato"], {"n": n, "p": p, "lam": lam})
    return _finish("campanato_embedding", params, alpha, levels, growth, stable, refine, hyps, cl, [],
                   "additive", m)


def check_morrey_campanato_equivalence(dom, family, p, lam, gamma=None, window=None, C0=EQUIVALENCE_C0,
                                       resolution=48, grid_factor=2):
    """Bracket of (‖f‖_{L^p} + |f|_Campanato) / ‖f‖_Morrey over a family.

    Evaluated at two grid levels; passes when both brackets lie in
    [1/C0, C0] and the refined bracket is no wider than 2x the coarse one
    at either end.
    """
    family = list(family)
    if not family:
        raise ValueError("equivalence check needs a nonempty family")
    g = _dom_gamma(dom, gamma)
    n = dom.n
    ng = n_gamma(n, g)
    hyps = [_require(0 < lam < ng, "0 < λ < n_γ", lam=lam, n_gamma=ng)]
    m = GammaMetric(g, n)
    region = _region(dom, window)
    w = WeightSpec.power(lam)
    levels = []
    for i, N in enumerate((resolution, resolution * grid_factor)):
        rows, skipped = {}, []
        for j, f in enumerate(family):
            name = getattr(f, "name", f"f{j}")
            fg = _grid(f, *region, N)
            mor = morrey_norm(fg, p, w, m).value
            if mor == 0:
                skipped.append(name)
                continue
            lp = float(np.sum(np.abs(fg.values[fg.mask]) ** p) * fg.cell_volume) ** (1 / p)
            sem = campanato_seminorm(fg, p, w, m).value
            rows[name] = (lp + sem) / mor
        if not rows:
            raise ValueError("every family member has zero Morrey norm")
        levels.append({"level": i, "resolution": N, "ratios": rows, "skipped": skipped,
                       "bracket": [min(rows.values()), max(rows.values())]})
    (lo0, hi0), (lo1, hi1) = levels[0]["bracket"], levels[1]["bracket"]
    inside = all(1 / C0 <= b[0] and b[1] <= C0 for b in (levels[0]["bracket"], levels[1]["bracket"]))
    stable = hi1 <= 2 * hi0 and lo1 >= lo0 / 2
    params = _params(gamma=g, n=n, p=p, lam=lam, n_gamma=ng, C0=C0, family=[getattr(f, "name", "") for f in family])
    return CheckReport(
        "morrey_campanato_equivalence", params, C0, hi1 / lo1, inside and stable, C0,
        witnesses={"bracket": [lo1, hi1], "coarse_bracket": [lo0, hi0], "inside": inside, "stable": stable},
        hypotheses=hyps, levels=levels,
        plot=[(float(N["resolution"]), float(N["bracket"][0]), float(N["bracket"][1])) for N in levels],
        plot_columns=("resolution", "bracket_min", "bracket_max"),
    )


# ---------------------------------------------------------------------------
# Sobolev-Morrey embedding (segment and Barozzi modes)


def _sm_norm(f, l, p, w, m, region):
    alphas = multi_indices(m.n, l)

    def norm_fn(N):
        fg = _grid(f, *region, N)
        der = _exact_derivatives(f, fg, alphas) if isinstance(f, TestFunction) else None
        return sobolev_morrey_norm(fg, l, p, w, m, alphas=alphas, derivatives=der).value

    return norm_fn


def check_sobolev_morrey_embedding(dom, f, l, p, lam, gamma=None, mode="segment", eps=BAROZZI_EPS,
                                   window=None, refine=Refinement(), anchors=None):
    """Hölder quotient against ‖f‖_{W^{l,λ}_{p,γ}}.

    ``mode="segment"``: exponent γ(l + (λ - n_γ)/p), Euclidean distance,
    pairs kept only when the sampled segment lies in Ω.
    ``mode="barozzi"``: Ω a box, all pairs, additive distance, exponent
    l + (λ - n_γ)/p - eps.
    """
    g = _dom_gamma(dom, gamma)
    n = dom.n
    ng = n_gamma(n, g)
    m = GammaMetric(g, n)
    hyps = [_require(p * l > ng - lam, "pl > n_γ - λ", p=p, l=l, lam=lam, n_gamma=ng)]
    flags = []
    region = _region(dom, window)
    if mode == "segment":
        alpha = sobolev_morrey_exponent(n, g, l, p, lam)
        hyps.append(_require(alpha < 1, "γ(l + (λ - n_γ)/p) < 1", exponent=alpha))
        form, sample_metric = "euclidean", GammaMetric(1.0, n)
        contains = region[0]
        keep = lambda X, Y: segment_inside(contains, X, Y, SEGMENT_POINTS)  # noqa: E731
        cl = classical_limits(["sobolev_morrey"], {"n": n, "l": l, "p": p, "lam": lam})
    elif mode == "barozzi":
        if not (isinstance(dom, ElementaryDomain) and is_box_domain(dom)):
            raise HypothesisError("Ω is a parallelepiped", {"domain": type(dom).__name__})
        base = barozzi_exponent(n, g, l, p, lam)
        hyps.append(_require(base <= 1 + 1e-12, "l + (λ - n_γ)/p ≤ 1", exponent=base))
        if abs(base - 1) <= 1e-12:
            flags.append("boundary case l + (λ - n_γ)/p = 1")
        alpha = base - eps
        form, sample_metric, keep = "additive", m, None
        cl = classical_limits(["barozzi"], {"n": n, "l": l, "p": p, "lam": lam})
    else:
        raise ValueError(f"unknown mode {mode!r}")
    norm_fn = _sm_norm(f, l, p, WeightSpec.power(lam), m, region)
    anchors = _default_anchors(f, region[0]) if anchors is None else anchors
    levels, growth, stable = _stability(f, norm_fn, form, alpha, sample_metric, region, refine, anchors, keep)
    params = _params(gamma=g, n=n, l=l, p=p, lam=lam, n_gamma=ng, mode=mode,
                     eps=eps if mode == "barozzi" else None, function=getattr(f, "name", "field"))
    return _finish(f"sobolev_morrey_{mode}", params, alpha, levels, growth, stable, refine, hyps, cl, flags,
                   form, sample_metric)


# ---------------------------------------------------------------------------
# Da Prato type embeddings


def check_daprato(dom, f, p, lam, gamma=None, eta_tilde=None, tau=1.0, window=None, refine=Refinement(),
                  anchors=None, certified=False):
    """Hölder quotient against ‖f‖_{W^{1,λ}_{p,γ}} in the additive distance.

    Without ``eta_tilde`` the domain must be convex and the exponent is
    η + (λ - n_γ)/p with η = n_γ/n + n - n_γ.  With ``eta_tilde`` (a
    Poincaré exponent measured by :func:`poincare_ratio`, or declared by
    ``certified``) the exponent is η̃ + (λ - n_γ)/p.
    """
    g = _dom_gamma(dom, gamma)
    n = dom.n
    ng = n_gamma(n, g)
    m = GammaMetric(g, n)
    if eta_tilde is None:
        if not (isinstance(dom, ElementaryDomain) and is_convex_domain(dom)):
            raise HypothesisError("Ω convex", {"domain": type(dom).__name__})
        eta, mode, sym = daprato_eta(n, g), "convex", "pη > n_γ - λ"
    else:
        eta, mode, sym = float(eta_tilde), "variant", "pη̃ > n_γ - λ"
    hyps = [_require(p * eta > ng - lam, sym, p=p, eta=eta, lam=lam, n_gamma=ng)]
    alpha = eta + (lam - ng) / p
    hyps.append(_require(alpha > 0, "exponent > 0", exponent=alpha))
    region = _region(dom, window)
    norm_fn = _sm_norm(f, 1, p, WeightSpec.power(lam), m, region)
    anchors = _default_anchors(f, region[0]) if anchors is None else anchors
    levels, growth, stable = _stability(f, norm_fn, "additive", alpha, m, region, refine, anchors)
    params = _params(gamma=g, n=n, p=p, lam=lam, n_gamma=ng, eta=eta, tau=tau, mode=mode,
                     function=getattr(f, "name", "field"))
    cl = classical_limits(["daprato_eta", "daprato"], {"n": n, "p": p, "lam": lam})
    flags = ["eta_tilde declared, not measured"] if certified else []
    return _finish(f"daprato_{mode}", params, alpha, levels, growth, stable, refine, hyps, cl, flags,
                   "additive", m)


# ---------------------------------------------------------------------------
# Poincaré ratios


@dataclass
class PoincareReport:
    """Mean-oscillation / gradient ratios on balls Ω ∩ B_γ(x, r).

    ``eta_fit`` is the slope of log(sup over family and centres) against
    log r, an empirical lower bound of the best exponent.  In convex mode
    ``violations`` counts samples breaking the explicit convex constant.
    """

    eta_fit: float
    radii: np.ndarray
    sup_ratio: np.ndarray
    samples: int
    skipped: int
    convex: bool
    violations: int
    max_convex_ratio: float
    rows: list = field(default_factory=list, repr=False)
    example: dict = field(default_factory=dict)

    def to_dict(self):
        return _jsonable({
            "eta_fit": self.eta_fit,
            "radii": self.radii,
            "sup_ratio": self.sup_ratio,
            "samples": self.samples,
            "skipped": self.skipped,
            "convex": self.convex,
            "violations": self.violations,
            "max_convex_ratio": self.max_convex_ratio,
        })

    def as_check(self, params=None):
        passed = (self.violations == 0) if self.convex else math.isfinite(self.eta_fit)
        return CheckReport(
            "poincare", dict(params or {}), math.nan if not self.convex else 1.0,
            self.max_convex_ratio if self.convex else self.eta_fit, passed, 0.0,
            witnesses={"eta_fit": self.eta_fit, "samples": self.samples, "skipped": self.skipped,
                       "violations": self.violations},
            plot=[(float(r), float(s)) for r, s in zip(self.radii, self.sup_ratio)],
            plot_columns=("radius", "sup_ratio"),
        )


def _hull_diameter(pts):
    if len(pts) < 2:
        return 0.0
    try:
        pts = pts[ConvexHull(pts).vertices]
    except (QhullError, ValueError):
        pass  # degenerate (collinear) sets: use all points
    if len(pts) > 4000:
        pts = pts[:: math.ceil(len(pts) / 4000)]
    diff = pts[:, None, :] - pts[None, :, :]
    return float(np.sqrt(np.max(np.sum(diff * diff, axis=-1))))


class _PoincareField:
    """Grid values, |∇f| and ball selections for one function."""

    def __init__(self, f, region, N, m):
        self.fg = _grid(f, *region, N)
        grads = []
        for i in range(m.n):
            a = tuple(int(j == i) for j in range(m.n))
            d = f.derivative(a) if isinstance(f, TestFunction) else None
            if d is not None:
                grads.append(np.where(self.fg.mask, d(self.fg.points()), 0.0))
            else:
                fd = finite_diff_derivative(self.fg, a)
                grads.append(np.where(fd.mask, fd.values, 0.0))
        self.grad = np.sqrt(sum(gi * gi for gi in grads))
        self.balls = _BallSums(self.fg, m, [])
        self.h = self.fg.spacing

    def ball(self, c, r):
        return self.balls.selection(np.asarray(c, dtype=float), r)

    def corners(self, sel):
        pts = self.fg.points()[sel]
        offs = np.stack(np.meshgrid(*[[-0.5, 0.5]] * pts.shape[-1], indexing="ij"), -1).reshape(-1, pts.shape[-1])
        return (pts[:, None, :] + offs[None] * self.h).reshape(-1, pts.shape[-1])


def _ball_stats(pf, c, r, tau, p, convex):
    sel = pf.ball(c, r)
    cnt = int(sel.sum())
    if cnt == 0:
        return None
    v = pf.fg.values[sel]
    mean = float(np.mean(v))
    osc = float(np.mean(np.abs(v - mean)))
    sel_t = sel if tau == 1 else pf.ball(c, tau * r)
    gmean = float(np.mean(pf.grad[sel_t] ** p)) ** (1 / p)
    if gmean == 0:
        return "zero"
    out = {"ratio": osc / gmean}
    if convex:
        vol = pf.fg.cell_volume
        n = pf.fg.n
        meas = cnt * vol
        d = _hull_diameter(pf.corners(sel))
        lhs = (float(np.sum(np.abs(v - mean) ** p)) * vol) ** (1 / p)
        grad_lp = (float(np.sum(pf.grad[sel] ** p)) * vol) ** (1 / p)
        bound = (unit_ball_volume(n) / meas) ** (1 - 1 / n) * d**n * grad_lp
        out.update(lhs=lhs, bound=bound, measure=meas, diameter=d)
    return out


def poincare_ratio(dom, family, p, centers=None, radii=None, tau=1.0, gamma=None, window=None, resolution=128,
                   samples=1000, seed=0, convex=None):
    """Poincaré ratios over a centre x radius table and random (x, r, f) samples.

    The table (``centers`` x ``radii``, defaulting to 32 random masked
    nodes and 10 geometric radii) feeds the η̃ fit.  In convex mode
    ``samples`` random triples are tested against
    ‖f - f_B‖_{L^p(B)} ≤ (ω_n/|B|)^(1-1/n) d^n ‖∇f‖_{L^p(B)} with d the
    diameter of the discrete ball.  Zero-gradient balls are skipped.
    """
    family = list(family)
    if not family:
        raise ValueError("poincare_ratio needs a nonempty family")
    g = _dom_gamma(dom, gamma)
    m = GammaMetric(g, dom.n)
    if convex is None:
        convex = isinstance(dom, ElementaryDomain) and is_convex_domain(dom)
    region = _region(dom, window)
    rng = np.random.default_rng(seed)
    pfs = [_PoincareField(f, region, resolution, m) for f in family]
    nodes = pfs[0].fg.masked_points()
    ext = region[2] - region[1]
    hmax = float(np.max(pfs[0].h))
    if centers is None:
        centers = nodes[np.sort(rng.choice(len(nodes), size=min(32, len(nodes)), replace=False))]
    if radii is None:
        rmin = max(4 * hmax, (4 * hmax) ** g)
        rmax = min(0.25 * float(ext[-1]), 0.25 * float(np.min(ext[:-1])) ** g)
        radii = np.geomspace(rmin, max(rmax, 2 * rmin), 10)
    radii = np.asarray(radii, dtype=float)
    sup = np.zeros(len(radii))
    skipped = 0
    rows = []
    for j, r in enumerate(radii):
        for pf in pfs:
            for c in centers:
                st = _ball_stats(pf, c, r, tau, p, False)
                if st == "zero":
                    skipped += 1
                elif st is not None:
                    sup[j] = max(sup[j], st["ratio"])
    pos = sup > 0
    eta = float(np.polyfit(np.log(radii[pos]), np.log(sup[pos]), 1)[0]) if pos.sum() >= 2 else math.nan
    violations, worst, count = 0, 0.0, 0
    if convex:
        rlo, rhi = radii.min(), max(radii.max(), float(np.max(ext)))
        draws = 0
        while count < samples:
            draws += 1
            if draws > 20 * samples:
                raise RuntimeError("too many skipped Poincaré samples")
            k = int(rng.integers(len(pfs)))
            c = nodes[int(rng.integers(len(nodes)))]
            r = float(np.exp(rng.uniform(math.log(rlo), math.log(rhi))))
            st = _ball_stats(pfs[k], c, r, 1.0, p, True)
            if st == "zero":
                skipped += 1
                continue
            if st is None:
                continue
            count += 1
            q = st["lhs"] / st["bound"]
            worst = max(worst, q)
            violations += int(q > 1 + 1e-12)
            rows.append((r, st["lhs"], st["bound"]))
    else:
        count = len(radii) * len(centers) * len(pfs)
    return PoincareReport(eta, radii, sup, count, skipped, bool(convex), violations, worst, rows)


# ---------------------------------------------------------------------------
# geometric lemma


def sample_lemma_configs(dom, count, rng, xbar_range=(-1.0, 1.0), height=(-1.0, 1.5), radii=(1e-3, 0.5), E=1.0):
    """Random (x, r, η): x̄ uniform, r log-uniform, x_n = φ(x̄) + t r, |η| < E.

    ``height`` bounds t, so t < 1 puts the centre column across the graph.
    """
    n = dom.n
    xbar = rng.uniform(xbar_range[0], xbar_range[1], size=(count, n - 1))
    r = np.exp(rng.uniform(math.log(radii[0]), math.log(radii[1]), size=count))
    t = rng.uniform(height[0], height[1], size=count)
    x = np.concatenate([xbar, (dom.phi(xbar) + t * r)[:, None]], axis=1)
    eta = rng.normal(size=(count, n))
    eta *= (E * rng.uniform(0, 1, size=count) ** (1 / n) / np.linalg.norm(eta, axis=1))[:, None]
    return x, r, eta


def _xbar_samples(dom, xbar, r, count):
    """Points of the horizontal part of B_1(x, r) (a cube), with the cusp centre if inside."""
    k = xbar.size
    if k == 1:
        s = xbar[0] + r * np.linspace(-1, 1, count)[1:-1, None]
    else:
        s = xbar + r * np.random.default_rng(0).uniform(-1, 1, size=(count, k))
    c = getattr(dom.phi, "center", None)
    if c is not None and np.all(np.abs(np.asarray(c) - xbar) < r):
        s = np.vstack([s, np.asarray(c, dtype=float)[None]])
    return s


def _lemma_one(dom, x, r, eta, lip, xcount=129, rcount=8):
    g = dom.gamma
    xbar, xn = x[:-1], float(x[-1])
    S = _xbar_samples(dom, xbar, r, xcount)
    phi = dom.phi(S)
    rho_max = xn + r - float(phi.min())
    rho_min = xn - r - float(phi.max())
    if rho_max <= 0:
        return None  # the ball misses G
    h = int(dyadic_layer(rho_max))
    ks = []
    k = h + 3
    while k <= h + 3 + LEMMA_K_SPAN:
        if 2.0 ** (-k - 2) < rho_max and rho_min < 2.0 ** (-k + 1):
            ks.append(k)
        k += 1
    if not ks:
        return {"h": h, "ks": [], "gap": 0.0, "diam": 0.0, "truncated": False}
    gap = max(abs(2.0 ** (-(h + 3)) - 2.0 ** (-k)) for k in ks)
    pts = []
    for k in ks:
        lo_r, hi_r = 2.0 ** (-k - 2), 2.0 ** (-k + 1)
        rhos = np.geomspace(lo_r, hi_r, rcount + 1)[1:]
        Y = np.concatenate([np.repeat(S, len(rhos), axis=0),
                            (np.repeat(phi, len(rhos)) + np.tile(rhos, len(S)))[:, None]], axis=1)
        Y = Y[np.abs(Y[:, -1] - xn) < r]
        if len(Y):
            shift = np.append(2.0 ** (-k / g) * eta[:-1], 2.0 ** (-k) * eta[-1])
            pts.append(Y - shift)
    diam = _hull_diameter(np.concatenate(pts)) if pts else 0.0
    return {"h": h, "ks": ks, "gap": gap, "diam": diam, "truncated": rho_min <= 0}


def check_geometric_lemma(dom, x, r, eta, E=1.0):
    """Dyadic-gap inequality and diameter constant over configurations.

    For each (x, r, η) the ρ-range of the box B_1(x, r) gives h (the
    least layer met) and every k ≥ h+3 with B_1(x, r) ∩ G̃_k ≠ ∅ (capped
    at h+3+30 when the ball reaches Ω).  Asserted per configuration:

        gap ≤ ½(2r + Lip (2r)^γ)   and   gap ≤ ½(2 + Lip 2^γ)(r + r^γ).

    S is the largest diam(∪_k (B ∩ G̃_k - (2^(-k/γ) η̄, 2^(-k) η_n))) / (r + r^γ).
    """
    x, r, eta = np.atleast_2d(x), np.atleast_1d(r).astype(float), np.atleast_2d(eta)
    g, lip = dom.gamma, float(dom.lip)
    if np.any(np.linalg.norm(eta, axis=1) >= E):
        raise HypothesisError("|η| < E", {"E": E, "max_eta": float(np.linalg.norm(eta, axis=1).max())})
    proof_c = 0.5 * (2 + lip * 2**g)
    vacuous = missed = sharp_viol = proof_viol = 0
    worst_sharp = worst_proof = S = 0.0
    rows = []
    witness = {}
    for xi, ri, ei in zip(x, r, eta):
        res = _lemma_one(dom, xi, float(ri), ei, lip)
        if res is None:
            missed += 1
            continue
        if not res["ks"]:
            vacuous += 1
            continue
        unit = ri + ri**g
        sharp = 0.5 * (2 * ri + lip * (2 * ri) ** g)
        q_sharp = res["gap"] / sharp
        q_proof = res["gap"] / (proof_c * unit)
        sharp_viol += int(q_sharp > 1 + 1e-12)
        proof_viol += int(q_proof > 1 + 1e-12)
        if q_proof > worst_proof:
            witness = {"x": xi.tolist(), "r": float(ri), "eta": ei.tolist(), "h": res["h"],
                       "ks": [res["ks"][0], res["ks"][-1]], "gap": res["gap"]}
        worst_sharp = max(worst_sharp, q_sharp)
        worst_proof = max(worst_proof, q_proof)
        S = max(S, res["diam"] / unit)
        rows.append((float(ri), res["gap"] / unit, res["diam"] / unit))
    tested = len(rows)
    passed = sharp_viol == 0 and proof_viol == 0 and math.isfinite(S)
    params = _params(gamma=g, n=dom.n, lip=lip, E=E, configs=len(r))
    return CheckReport(
        "geometric_lemma", params, proof_c, worst_proof * proof_c, passed, 0.0,
        witnesses={"worst": witness, "S": S, "tested": tested, "vacuous": vacuous, "missed_G": missed,
                   "violations_sharp": sharp_viol, "violations_proof": proof_viol,
                   "max_gap_over_sharp": worst_sharp, "max_gap_over_proof": worst_proof},
        hypotheses=["B_1(x, r) ∩ G ≠ ∅ (configurations missing G are counted, not tested)"],
        plot=rows, plot_columns=("r", "gap_per_unit", "diameter_per_unit"),
    )


# ---------------------------------------------------------------------------
# extension corollary


def check_extension_corollary(dom, f, l, p, lam, cfg, window=None, refine=Refinement(), anchors=None,
                              atlas_report=None):
    """Euclidean Hölder quotient on all pairs of Ω, exponent [γl] + (γλ - n)/p.

    f is first extended with ``cfg`` (``dom`` an ElementaryDomain or an
    Atlas) and Tf = f is checked bit-for-bit on the Ω nodes of the output
    grid; the quotient is then sampled from f on Ω with the norm
    ‖f‖_{W^{l,λ}_{p,1}(Ω)}.
    """
    g = float(dom.gamma)
    n = dom.n
    target = math.floor(g * l + 1e-12)
    alpha = corollary_exponent(n, g, l, p, lam)
    hyps = [
        _require(lam > 0, "λ > 0", lam=lam),
        _require(p * target > n - g * lam, "p[γl] > n - γλ", p=p, floor_gamma_l=target, n=n, gamma_lam=g * lam),
        _require(alpha < 1, "[γl] + (γλ - n)/p < 1", exponent=alpha),
    ]
    if cfg.l != l:
        cfg = ExtensionConfig.from_dict({**cfg.to_dict(), "l": l})
    if isinstance(dom, Atlas):
        res = extend_atlas(dom, f, cfg, atlas_report)
    else:
        res = extend_elementary(dom, f, cfg)
    om = res.omega & res.field.mask
    exact = _eval(f, res.field.points()[om])
    restriction = bool(np.array_equal(res.field.values[om], exact))
    m1 = GammaMetric(1.0, n)
    region = _region(dom, window)
    norm_fn = _sm_norm(f, l, p, WeightSpec.power(lam), m1, region)
    anchors = _default_anchors(f, region[0]) if anchors is None else anchors
    levels, growth, stable = _stability(f, norm_fn, "euclidean", alpha, m1, region, refine, anchors)
    params = _params(gamma=g, n=n, l=l, p=p, lam=lam, floor_gamma_l=target, gamma_lam=g * lam,
                     function=getattr(f, "name", "field"), extension=cfg.to_dict())
    cl = classical_limits(["corollary"], {"n": n, "l": l, "p": p, "lam": lam})
    rep = _finish("extension_corollary", params, alpha, levels, growth, stable and restriction, refine, hyps,
                  cl, list(res.flags), "euclidean", m1)
    rep.witnesses.update(restriction_exact=restriction, omega_nodes=int(om.sum()),
                         kernel_hash=res.provenance.get("kernel_hash"), A=res.provenance.get("A"))
    return rep
