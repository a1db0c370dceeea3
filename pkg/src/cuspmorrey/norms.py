"""Discrete Morrey, Campanato and Sobolev–Morrey norms, and Hölder fits.

All suprema are taken over finite sets of centres and radii, so every
value is a lower bound of the continuum norm that can only grow under
refinement of the sets.  For n = 2 the γ-balls are boxes and ball sums are
read from summed-area tables kept in extended precision; other cases sum
directly.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from itertools import product

import numpy as np

from .fields import GridField, eval_field, finite_diff_derivative

__all__ = [
    "WeightSpec",
    "weight_eval",
    "weight_transform_gamma",
    "NormEstimate",
    "default_centers",
    "default_radii",
    "morrey_norm",
    "campanato_seminorm",
    "sobolev_morrey_norm",
    "ball_quantity",
    "multi_indices",
    "HolderFit",
    "holder_ratio_fit",
    "write_profile_csv",
]

MAX_CENTERS = 10_000
DIRECT_MAX_CENTERS = 2_000
_LD = np.longdouble


@dataclass(frozen=True)
class WeightSpec:
    """Morrey weight φ with φ(r) = 1 for r > 1.

    ``power(lam)`` is min(r**lam, 1).  ``tabulated(r, phi)`` interpolates
    log φ linearly in log r (and extrapolates the first segment below the
    table); values for r > 1 are forced to 1.
    """

    kind: str
    lam: float = 0.0
    radii: tuple = ()
    values: tuple = ()

    def __post_init__(self):
        if self.kind == "power":
            if self.lam < 0:
                raise ValueError("power weight needs lambda >= 0")
        elif self.kind == "custom":
            r = np.asarray(self.radii, dtype=float)
            v = np.asarray(self.values, dtype=float)
            if r.size < 2 or r.shape != v.shape:
                raise ValueError("tabulated weight needs >= 2 matching samples")
            if np.any(r <= 0) or np.any(np.diff(r) <= 0):
                raise ValueError("tabulated radii must be positive and increasing")
            if np.any(v <= 0):
                raise ValueError("weight values must be positive")
        else:
            raise ValueError(f"unknown weight kind {self.kind!r}")

    @classmethod
    def power(cls, lam):
        return cls("power", float(lam))

    @classmethod
    def tabulated(cls, radii, values):
        return cls("custom", 0.0, tuple(float(r) for r in radii), tuple(float(v) for v in values))

    def __call__(self, r):
        r = np.asarray(r, dtype=float)
        if np.any(r <= 0):
            raise ValueError("weight is defined for r > 0 only")
        if self.kind == "power":
            return np.minimum(r**self.lam, 1.0)
        lr = np.log(np.asarray(self.radii))
        lv = np.log(np.asarray(self.values))
        x = np.log(r)
        y = np.interp(x, lr, lv)
        slope0 = (lv[1] - lv[0]) / (lr[1] - lr[0])
        y = np.where(x < lr[0], lv[0] + slope0 * (x - lr[0]), y)
        return np.where(r > 1, 1.0, np.exp(y))

    def transform_gamma(self, gamma):
        """φ_γ(r) = φ(r**γ); power(λ) becomes power(γλ)."""
        if not 0 < gamma <= 1:
            raise ValueError("gamma must lie in (0, 1]")
        if self.kind == "power":
            return WeightSpec.power(gamma * self.lam)
        # log-linear tables stay log-linear under r -> r**(1/gamma)
        return WeightSpec.tabulated([r ** (1 / gamma) for r in self.radii], self.values)

    def to_dict(self):
        if self.kind == "power":
            return {"kind": "power", "lambda": self.lam}
        return {"kind": "custom", "radii": list(self.radii), "values": list(self.values)}

    @classmethod
    def from_dict(cls, d):
        if d.get("kind") == "power":
            return cls.power(d["lambda"])
        if d.get("kind") == "custom":
            return cls.tabulated(d["radii"], d["values"])
        raise ValueError(f"bad weight spec {d!r}")


def weight_eval(w, r):
    return w(r)


def weight_transform_gamma(w, gamma):
    return w.transform_gamma(gamma)


@dataclass
class NormEstimate:
    value: float
    argmax_center: np.ndarray | None
    argmax_radius: float | None
    center_count: int
    radius_count: int
    kind: str = ""
    radii: np.ndarray | None = field(default=None, repr=False)
    profile: np.ndarray | None = field(default=None, repr=False)
    terms: dict = field(default_factory=dict, repr=False)

    def to_dict(self):
        d = {
            "kind": self.kind,
            "value": self.value,
            "argmax_center": None if self.argmax_center is None else list(map(float, self.argmax_center)),
            "argmax_radius": self.argmax_radius,
            "center_count": self.center_count,
            "radius_count": self.radius_count,
        }
        if self.radii is not None:
            d["radii"] = [float(r) for r in self.radii]
            d["profile"] = [float(v) for v in self.profile]
        if self.terms:
            d["terms"] = {",".join(map(str, a)): t.value for a, t in self.terms.items()}
        return d


def write_profile_csv(path, est):
    """Per-radius maxima over centres (plot-ready)."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["r", "sup_over_centers"])
        for r, v in zip(est.radii, est.profile):
            w.writerow([repr(float(r)), repr(float(v))])


# ---------------------------------------------------------------------------
# centre and radius grids


def default_centers(f, max_centers=MAX_CENTERS):
    """Masked nodes in lexicographic order, thinned by a fixed stride."""
    pts = f.masked_points()
    if len(pts) > max_centers:
        stride = math.ceil(len(pts) / max_centers)
        pts = pts[::stride]
    return pts


def _diameter(f, m):
    lo, hi = f.masked_points().min(axis=0), f.masked_points().max(axis=0)
    ext = hi - lo
    euclid = float(np.linalg.norm(ext))
    delta = float(max(np.linalg.norm(ext[:-1]) ** m.gamma, ext[-1]))
    return max(euclid, delta, float(np.max(f.spacing)))


def default_radii(f, m, per_octave=4, r_min=None, r_max=None):
    """Geometric radii r_min * 2**(j/per_octave) up to 2 diam Ω."""
    if r_min is None:
        r_min = 4 * float(np.max(f.spacing))
    if r_max is None:
        r_max = 2 * _diameter(f, m)
    count = int(math.floor(per_octave * math.log2(r_max / r_min))) + 1
    return r_min * 2.0 ** (np.arange(max(count, 1)) / per_octave)


def _prep(f, m, centers, radii, max_centers=MAX_CENTERS):
    if not isinstance(f, GridField):
        raise TypeError("norms are computed from GridField samples")
    if f.n != m.n:
        raise ValueError("metric and field dimensions differ")
    C = default_centers(f, max_centers) if centers is None else np.atleast_2d(np.asarray(centers, dtype=float))
    if len(C) == 0:
        raise ValueError("empty center set")
    C = C[np.lexsort(C.T[::-1])]  # lexicographic order for deterministic tie-breaks
    R = default_radii(f, m) if radii is None else np.sort(np.asarray(radii, dtype=float).ravel())
    if len(R) == 0 or np.any(R <= 0):
        raise ValueError("radii must be positive and nonempty")
    return C, R


# ---------------------------------------------------------------------------
# ball sums


class _BallSums:
    """Sums of several per-node arrays over γ-balls intersected with the mask."""

    def __init__(self, f, m, arrays):
        self.f, self.m = f, m
        self.axes = f.axes()
        self.arrays = [np.where(f.mask, a, 0.0) for a in arrays]
        self.count = f.mask.astype(float)
        self.box = m.n == 2
        if self.box:
            self.tables = [self._sat(a) for a in self.arrays + [self.count]]

    @staticmethod
    def _sat(a):
        s = np.asarray(a, dtype=_LD)
        for ax in range(s.ndim):
            s = np.cumsum(s, axis=ax)
        return np.pad(s, [(1, 0)] * s.ndim)

    def index_boxes(self, C, r):
        hw = self.m.ball_halfwidths(r)
        lo = np.stack([np.searchsorted(self.axes[a], C[:, a] - hw[a], side="right") for a in range(self.m.n)], axis=1)
        hi = np.stack([np.searchsorted(self.axes[a], C[:, a] + hw[a], side="left") for a in range(self.m.n)], axis=1)
        return lo, np.maximum(hi, lo)

    def sums(self, C, r):
        """Per-centre sums of each array and of the cell count (in long double)."""
        lo, hi = self.index_boxes(C, r)
        if self.box:
            out = []
            for T in self.tables:
                acc = np.zeros(len(C), dtype=_LD)
                for corner in product((0, 1), repeat=self.m.n):
                    idx = tuple(np.where(c, hi[:, a], lo[:, a]) for a, c in enumerate(corner))
                    sign = (-1) ** (self.m.n - sum(corner))
                    acc += sign * T[idx]
                out.append(acc)
            return out
        out = [np.zeros(len(C), dtype=_LD) for _ in range(len(self.arrays) + 1)]
        for i in range(len(C)):
            sel = self.selection(C[i], r, lo[i], hi[i])
            for k, a in enumerate(self.arrays + [self.count]):
                out[k][i] = np.sum(a[sel], dtype=_LD)
        return out

    def selection(self, c, r, lo=None, hi=None):
        if lo is None:
            lo, hi = self.index_boxes(c[None], r)
            lo, hi = lo[0], hi[0]
        sl = tuple(slice(int(a), int(b)) for a, b in zip(lo, hi))
        sel = np.zeros(self.f.shape, dtype=bool)
        local = self.f.mask[sl].copy()
        if not self.box and local.size:
            pts = np.stack(np.meshgrid(*[ax[s] for ax, s in zip(self.axes, sl)], indexing="ij"), axis=-1)
            local &= self.m.ball_contains(c, r, pts)
        sel[sl] = local
        return sel


def _argmax(Q, C, R):
    flat = int(np.argmax(Q))  # first maximum in (centre, radius) order
    i, j = divmod(flat, Q.shape[1])
    return float(Q[i, j]), C[i].copy(), float(R[j])


def _finish(kind, Q, C, R):
    value, c, r = _argmax(Q, C, R)
    return NormEstimate(value, c, r, len(C), len(R), kind, R, Q.max(axis=0))


def morrey_norm(f, p, w, m, dom=None, centers=None, radii=None):
    """sup_x sup_r ( φ(r)^-1 ∫_{B_γ(x,r) ∩ Ω} |f|^p )^(1/p) over the given sets.

    ``f`` is a GridField whose mask represents Ω; ``dom`` (optional) is
    used only to check that the centres lie in Ω.
    """
    C, R = _prep(f, m, centers, radii)
    if dom is not None and not np.all(dom.contains(C)):
        raise ValueError("centers must lie in the domain")
    bs = _BallSums(f, m, [np.abs(f.values) ** p])
    vol = f.cell_volume
    Q = np.zeros((len(C), len(R)))
    for j, r in enumerate(R):
        s, _ = bs.sums(C, r)
        Q[:, j] = (np.maximum(s.astype(float), 0.0) * vol / w(r)) ** (1 / p)
    return _finish("morrey", Q, C, R)


def _campanato_direct(f, p, w, m, C, R):
    bs = _BallSums(f, m, [])
    vol = f.cell_volume
    Q = np.zeros((len(C), len(R)))
    cache = {}
    for j, r in enumerate(R):
        lo, hi = bs.index_boxes(C, r)
        for i in range(len(C)):
            key = (tuple(lo[i]), tuple(hi[i])) if bs.box else None
            if key is not None and key in cache:
                integral = cache[key]
            else:
                sel = bs.selection(C[i], r, lo[i], hi[i])
                v = f.values[sel]
                if v.size == 0:
                    integral = 0.0
                else:
                    mean = float(np.sum(v, dtype=_LD) / v.size)
                    integral = float(np.sum(np.abs(v - mean) ** p, dtype=_LD)) * vol
                if key is not None:
                    cache[key] = integral
            Q[i, j] = (integral / w(r)) ** (1 / p)
    return Q


def campanato_seminorm(f, p, w, m, dom=None, centers=None, radii=None, method="auto"):
    """sup ( φ(r)^-1 ∫_{B∩Ω} |f - mean_{B∩Ω} f|^p )^(1/p); empty balls are skipped.

    ``p = 2`` on n = 2 uses summed-area tables of f and f² (after removing
    the global mean); other cases sum directly, with at most
    ``DIRECT_MAX_CENTERS`` default centres.
    """
    if method == "auto":
        method = "sat" if (p == 2 and m.n == 2) else "direct"
    C, R = _prep(f, m, centers, radii, MAX_CENTERS if method == "sat" else DIRECT_MAX_CENTERS)
    if dom is not None and not np.all(dom.contains(C)):
        raise ValueError("centers must lie in the domain")
    if method == "direct":
        return _finish("campanato", _campanato_direct(f, p, w, m, C, R), C, R)
    if p != 2:
        raise ValueError("the summed-area path needs p = 2")
    g = f.values - float(np.sum(f.values[f.mask], dtype=_LD) / f.mask.sum())
    bs = _BallSums(f, m, [g, g * g])
    vol = f.cell_volume
    Q = np.zeros((len(C), len(R)))
    for j, r in enumerate(R):
        s1, s2, s0 = bs.sums(C, r)
        nz = s0 > 0
        var = np.zeros(len(C), dtype=_LD)
        var[nz] = s2[nz] - s1[nz] ** 2 / s0[nz]
        Q[:, j] = (np.maximum(var.astype(float), 0.0) * vol / w(r)) ** 0.5
    return _finish("campanato", Q, C, R)


def ball_quantity(f, p, w, m, center, r, kind="morrey"):
    """Direct (non-tabulated) value of one Morrey or Campanato ball quantity."""
    bs = _BallSums(f, m, [])
    sel = bs.selection(np.asarray(center, dtype=float), r)
    v = f.values[sel]
    if v.size == 0:
        return 0.0
    if kind == "campanato":
        v = v - v.mean()
    return (float(np.sum(np.abs(v) ** p, dtype=_LD)) * f.cell_volume / float(w(r))) ** (1 / p)


def multi_indices(n, l):
    """All α ∈ N^n with |α| <= l, by degree then lexicographically."""
    out = []
    for deg in range(l + 1):
        out.extend(a for a in product(range(deg + 1), repeat=n) if sum(a) == deg)
    return sorted(out, key=lambda a: (sum(a), tuple(-x for x in a)))


def sobolev_morrey_norm(f, l, p, w, m, dom=None, centers=None, radii=None, alphas=None, derivatives=None):
    """sum_{|α| <= l} of the Morrey norm of D^α f.

    Derivatives come from ``derivatives[α]`` (GridFields, e.g. sampled
    closed forms) when given, otherwise from finite differences.  All terms
    share the centre and radius sets so the sum is subadditive in f.  The
    witnesses reported are those of the largest term.
    """
    if l > 4:
        raise ValueError("l <= 4 is supported")
    C, R = _prep(f, m, centers, radii)
    alphas = multi_indices(f.n, l) if alphas is None else [tuple(a) for a in alphas]
    terms = {}
    for a in alphas:
        if derivatives is not None and a in derivatives:
            d = derivatives[a]
        elif sum(a) == 0:
            d = f
        else:
            d = finite_diff_derivative(f, a)
        terms[a] = morrey_norm(d, p, w, m, dom, C, R)
    total = float(sum(t.value for t in terms.values()))
    top = max(terms.values(), key=lambda t: t.value)
    return NormEstimate(total, top.argmax_center, top.argmax_radius, len(C), len(R), "sobolev_morrey", R,
                        np.sum([t.profile for t in terms.values()], axis=0), terms)


# ---------------------------------------------------------------------------
# Hölder ratios


@dataclass
class HolderFit:
    sup_ratio: dict
    exponent: float
    intercept: float
    bin_delta: np.ndarray
    bin_envelope: np.ndarray
    n_pairs: int
    constant: bool = False

    def to_dict(self):
        return {
            "sup_ratio": {repr(float(a)): float(v) for a, v in self.sup_ratio.items()},
            "exponent": self.exponent,
            "intercept": self.intercept,
            "n_pairs": self.n_pairs,
            "constant": self.constant,
        }


def _values(f, X):
    return eval_field(f, X) if isinstance(f, GridField) else np.asarray(f(X), dtype=float)


def holder_ratio_fit(f, m, X, Y, alphas=(), form="max", min_pairs=1000, min_decades=2.0):
    """Hölder quotients over point pairs and an envelope exponent fit.

    ``form="max"`` uses δ_γ, ``form="additive"`` uses |x̄-ȳ|**γ + |x_n-y_n|
    and ``form="euclidean"`` uses |x - y|.
    The exponent is the least-squares slope of log(max |f(x)-f(y)|) against
    log δ over dyadic δ bins, each bin represented by its maximising pair.
    """
    X, Y = np.asarray(X, dtype=float), np.asarray(Y, dtype=float)
    if form == "max":
        d = m.distance(X, Y)
    elif form == "additive":
        d = m.additive_distance(X, Y)
    elif form == "euclidean":
        d = np.linalg.norm(X - Y, axis=-1)
    else:
        raise ValueError(f"unknown distance form {form!r}")
    keep = d > 0
    X, Y, d = X[keep], Y[keep], d[keep]
    if len(d) < min_pairs:
        raise ValueError(f"degenerate pair set: {len(d)} pairs, need {min_pairs}")
    if math.log10(d.max() / d.min()) < min_decades - 1e-9:
        raise ValueError(f"degenerate pair set: distances span {math.log10(d.max() / d.min()):.2f} decades")
    osc = np.abs(_values(f, X) - _values(f, Y))
    sup = {float(a): float(np.max(osc / d**a)) for a in alphas}
    bins = np.floor(np.log2(d)).astype(int)
    bd, be = [], []
    for b in np.unique(bins):
        idx = np.flatnonzero(bins == b)
        k = idx[np.argmax(osc[idx])]
        bd.append(d[k])
        be.append(osc[k])
    bd, be = np.array(bd), np.array(be)
    pos = be > 0
    if pos.sum() < 2:
        return HolderFit(sup, math.nan, math.nan, bd, be, len(d), constant=bool(np.all(osc == 0)))
    slope, intercept = np.polyfit(np.log(bd[pos]), np.log(be[pos]), 1)
    return HolderFit(sup, float(slope), float(intercept), bd, be, len(d))
