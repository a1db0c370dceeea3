"""Anisotropic metric, elementary Hölder domains, cusps and atlases.

Points are arrays whose last axis has length ``n``; ``x[..., :-1]`` is the
horizontal part ``x̄`` and ``x[..., -1]`` the vertical coordinate ``x_n``.
All predicates and distances are vectorized over leading axes.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.special import gamma as gamma_fn

__all__ = [
    "GammaMetric",
    "hnorm",
    "delta_gamma",
    "gamma_ball_measure",
    "unit_ball_volume",
    "Boundary",
    "Flat",
    "Affine",
    "PowerCusp",
    "Wedge",
    "Perturbed",
    "Sampled",
    "ElementaryDomain",
    "domain_contains",
    "rho_signed_distance",
    "layer_index",
    "dyadic_layer",
    "Cusp",
    "cusp_contains",
    "MeasureEstimate",
    "ball_intersection_measure",
    "MeasureFit",
    "fit_measure_exponent",
    "Chart",
    "Atlas",
    "AtlasReport",
    "atlas_validate",
    "chart_localize",
    "chart_globalize",
    "atlas_contains",
    "sample_domain_points",
    "sample_pairs",
    "segment_inside",
    "cusp_domain",
    "catalog_domains",
    "box_domain",
    "is_box_domain",
    "is_convex_domain",
    "triangle_atlas",
    "write_measure_csv",
]

MIN_RESOLUTION = 16


def unit_ball_volume(d):
    """Lebesgue measure of the unit ball in R^d."""
    return math.pi ** (d / 2) / gamma_fn(d / 2 + 1)


def hnorm(v):
    """Euclidean norm over the last axis without underflow for tiny entries."""
    v = np.asarray(v, dtype=float)
    if v.shape[-1] == 1:
        return np.abs(v[..., 0])
    scale = np.max(np.abs(v), axis=-1)
    safe = np.where(scale > 0, scale, 1.0)
    return scale * np.linalg.norm(v / safe[..., None], axis=-1)


@dataclass(frozen=True)
class GammaMetric:
    """delta_gamma(x, y) = max(|x̄ - ȳ|**gamma, |x_n - y_n|) on R^n."""

    gamma: float
    n: int = 2

    def __post_init__(self):
        if not 0 < self.gamma <= 1:
            raise ValueError(f"gamma must lie in (0, 1], got {self.gamma}")
        if int(self.n) != self.n or self.n < 2:
            raise ValueError(f"dimension must be an integer >= 2, got {self.n}")

    @property
    def n_gamma(self):
        return (self.n - 1) / self.gamma + 1

    def _check(self, x):
        x = np.asarray(x, dtype=float)
        if x.shape[-1] != self.n:
            raise ValueError(f"points of dimension {x.shape[-1]} given to a metric on R^{self.n}")
        return x

    def distance(self, x, y):
        x, y = self._check(x), self._check(y)
        horiz = hnorm(x[..., :-1] - y[..., :-1])
        return np.maximum(horiz**self.gamma, np.abs(x[..., -1] - y[..., -1]))

    def additive_distance(self, x, y):
        """The equivalent form |x̄ - ȳ|**gamma + |x_n - y_n|."""
        x, y = self._check(x), self._check(y)
        horiz = hnorm(x[..., :-1] - y[..., :-1])
        return horiz**self.gamma + np.abs(x[..., -1] - y[..., -1])

    def ball_measure(self, r):
        if np.any(np.asarray(r) <= 0):
            raise ValueError("radius must be positive")
        return 2 * unit_ball_volume(self.n - 1) * np.asarray(r, dtype=float) ** self.n_gamma

    def ball_contains(self, center, r, y, closed=False):
        d = self.distance(center, y)
        return d <= r if closed else d < r

    def ball_halfwidths(self, r):
        """Half side lengths of the bounding box of B_gamma(x, r)."""
        return np.array([r ** (1 / self.gamma)] * (self.n - 1) + [r], dtype=float)


def delta_gamma(x, y, m):
    return m.distance(x, y)


def gamma_ball_measure(m, r):
    """|B_gamma(x, r)| = 2 omega_{n-1} r**n_gamma."""
    return m.ball_measure(r)


# ---------------------------------------------------------------------------
# boundary functions


class Boundary:
    """A boundary function φ: R^{n-1} -> R with a known Hölder bound."""

    kind = "abstract"

    def __call__(self, xbar):
        raise NotImplementedError

    def holder_constant(self, gamma, diam=math.inf):
        """Upper bound for Lip_gamma φ on a set of the given diameter."""
        raise NotImplementedError

    def to_dict(self):
        raise NotImplementedError

    @staticmethod
    def from_dict(d):
        kinds = {c.kind: c for c in (Flat, Affine, PowerCusp, Wedge, Perturbed, Sampled)}
        try:
            cls = kinds[d["kind"]]
        except KeyError:
            raise ValueError(f"unknown boundary kind {d.get('kind')!r}") from None
        return cls._from_dict(d)


def _norm_bar(xbar, center=None):
    xbar = np.asarray(xbar, dtype=float)
    if center is not None:
        xbar = xbar - np.asarray(center, dtype=float)
    return hnorm(xbar)


@dataclass(frozen=True)
class Flat(Boundary):
    level: float = 0.0
    kind = "flat"

    def __call__(self, xbar):
        return np.full(np.asarray(xbar).shape[:-1], float(self.level))

    def holder_constant(self, gamma, diam=math.inf):
        return 0.0

    def to_dict(self):
        return {"kind": self.kind, "level": self.level}

    @classmethod
    def _from_dict(cls, d):
        return cls(float(d.get("level", 0.0)))


@dataclass(frozen=True)
class Affine(Boundary):
    level: float = 0.0
    slope: tuple = (0.0,)
    kind = "affine"

    def __call__(self, xbar):
        return self.level + np.asarray(xbar, dtype=float) @ np.asarray(self.slope, dtype=float)

    def holder_constant(self, gamma, diam=math.inf):
        s = float(np.linalg.norm(self.slope))
        if s == 0:
            return 0.0
        if gamma == 1:
            return s
        # s*t <= s * diam**(1-gamma) * t**gamma for t <= diam
        return s * diam ** (1 - gamma)

    def to_dict(self):
        return {"kind": self.kind, "level": self.level, "slope": list(self.slope)}

    @classmethod
    def _from_dict(cls, d):
        return cls(float(d.get("level", 0.0)), tuple(float(s) for s in d["slope"]))


@dataclass(frozen=True)
class PowerCusp(Boundary):
    """φ(x̄) = level + sign * opening * |x̄ - center|**exponent.

    ``sign = -1`` puts the domain below an upward spike (outer cusp),
    ``sign = +1`` puts the spike in the complement (inner cusp).
    """

    level: float = 0.0
    opening: float = 1.0
    exponent: float = 0.5
    sign: int = -1
    center: tuple = (0.0,)
    kind = "power_cusp"

    def __call__(self, xbar):
        return self.level + self.sign * self.opening * _norm_bar(xbar, self.center) ** self.exponent

    def holder_constant(self, gamma, diam=math.inf):
        e = self.exponent
        if e < gamma:
            return math.inf
        if e == gamma:
            # ||a|**e - |b|**e| <= |a - b|**e for e <= 1
            return abs(self.opening)
        if e <= 1:
            return abs(self.opening) * diam ** (e - gamma)
        return math.inf

    def to_dict(self):
        return {
            "kind": self.kind,
            "level": self.level,
            "opening": self.opening,
            "exponent": self.exponent,
            "sign": self.sign,
            "center": list(self.center),
        }

    @classmethod
    def _from_dict(cls, d):
        return cls(
            float(d.get("level", 0.0)),
            float(d.get("opening", 1.0)),
            float(d.get("exponent", 0.5)),
            int(d.get("sign", -1)),
            tuple(float(c) for c in d.get("center", (0.0,))),
        )


@dataclass(frozen=True)
class Wedge(PowerCusp):
    """Lipschitz wedge ``level + sign * opening * |x̄ - center|``."""

    exponent: float = 1.0
    kind = "wedge"

    def to_dict(self):
        d = super().to_dict()
        del d["exponent"]
        return d

    @classmethod
    def _from_dict(cls, d):
        return cls(
            level=float(d.get("level", 0.0)),
            opening=float(d.get("opening", 1.0)),
            sign=int(d.get("sign", -1)),
            center=tuple(float(c) for c in d.get("center", (0.0,))),
        )


@dataclass(frozen=True)
class Perturbed(Boundary):
    """A base boundary plus a Gaussian bump ``amplitude * exp(-|x̄-c|²/width²)``."""

    base: Boundary = field(default_factory=Flat)
    amplitude: float = 0.1
    width: float = 0.25
    center: tuple = (0.0,)
    kind = "perturbed"

    def __call__(self, xbar):
        s = _norm_bar(xbar, self.center) / self.width
        return self.base(xbar) + self.amplitude * np.exp(-(s**2))

    def holder_constant(self, gamma, diam=math.inf):
        a = abs(self.amplitude)
        lip = a * math.sqrt(2) * math.exp(-0.5) / self.width
        # min(lip * t, a) <= lip**gamma * a**(1 - gamma) * t**gamma
        bump = lip**gamma * a ** (1 - gamma)
        return self.base.holder_constant(gamma, diam) + bump

    def to_dict(self):
        return {
            "kind": self.kind,
            "base": self.base.to_dict(),
            "amplitude": self.amplitude,
            "width": self.width,
            "center": list(self.center),
        }

    @classmethod
    def _from_dict(cls, d):
        return cls(
            Boundary.from_dict(d["base"]),
            float(d["amplitude"]),
            float(d["width"]),
            tuple(float(c) for c in d.get("center", (0.0,))),
        )


class Sampled(Boundary):
    """Piecewise-linear interpolation of user samples (n = 2 only).

    The declared Hölder constant is checked against all sampled difference
    quotients; a violation by more than 1% is rejected.
    """

    kind = "sampled"

    def __init__(self, xs, values, lip, gamma):
        xs = np.asarray(xs, dtype=float)
        values = np.asarray(values, dtype=float)
        if xs.ndim != 1 or xs.shape != values.shape or xs.size < 2:
            raise ValueError("samples must be two matching 1-d arrays of length >= 2")
        if np.any(np.diff(xs) <= 0):
            raise ValueError("sample abscissae must be strictly increasing")
        self.xs, self.values, self.lip, self.gamma = xs, values, float(lip), float(gamma)
        observed = self.sampled_quotient(gamma)
        if observed > 1.01 * self.lip:
            raise ValueError(
                f"declared Lip_gamma {self.lip:g} violated by sampled quotient {observed:g}"
            )

    def sampled_quotient(self, gamma):
        dx = np.abs(self.xs[:, None] - self.xs[None, :])
        dv = np.abs(self.values[:, None] - self.values[None, :])
        off = dx > 0
        return float(np.max(dv[off] / dx[off] ** gamma))

    def __call__(self, xbar):
        xbar = np.asarray(xbar, dtype=float)
        if xbar.shape[-1] != 1:
            raise ValueError("sampled boundaries support n = 2 only")
        return np.interp(xbar[..., 0], self.xs, self.values)

    def holder_constant(self, gamma, diam=math.inf):
        if gamma == self.gamma:
            return self.lip
        return self.sampled_quotient(gamma)

    def to_dict(self):
        return {
            "kind": self.kind,
            "xs": self.xs.tolist(),
            "values": self.values.tolist(),
            "lip": self.lip,
            "gamma": self.gamma,
        }

    @classmethod
    def _from_dict(cls, d):
        return cls(d["xs"], d["values"], d["lip"], d["gamma"])


# ---------------------------------------------------------------------------
# elementary domains


def _as_box(W):
    box = np.asarray(W, dtype=float).reshape(-1, 2)
    if np.any(box[:, 0] >= box[:, 1]):
        raise ValueError("W must be a box with lo < hi on every axis")
    return box


@dataclass(frozen=True)
class ElementaryDomain:
    """Ω = {x : x̄ ∈ W, a < x_n < φ(x̄)} with φ Hölder of exponent gamma.

    Attributes
    ----------
    gamma : float
        Hölder exponent of the boundary.
    phi : Boundary
        Boundary function.
    W : array, shape (n-1, 2)
        Box of admissible x̄ (entries may be infinite).
    a : float
        Lower bound; ``-inf`` for the unbounded case.
    lip : float, optional
        Declared Lip_gamma φ; defaults to the boundary's closed-form bound.
    delta_margin : float
        Gap with φ > a + delta_margin.
    """

    gamma: float
    phi: Boundary
    W: np.ndarray
    a: float = -math.inf
    lip: float | None = None
    delta_margin: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "W", _as_box(self.W))
        if not 0 < self.gamma <= 1:
            raise ValueError("gamma must lie in (0, 1]")
        if self.lip is None:
            object.__setattr__(self, "lip", float(self.phi.holder_constant(self.gamma, self.w_diameter)))

    @property
    def n(self):
        return self.W.shape[0] + 1

    @property
    def metric(self):
        return GammaMetric(self.gamma, self.n)

    @property
    def w_diameter(self):
        return float(np.linalg.norm(self.W[:, 1] - self.W[:, 0]))

    def in_w(self, xbar):
        xbar = np.asarray(xbar, dtype=float)
        return np.all((xbar > self.W[:, 0]) & (xbar < self.W[:, 1]), axis=-1)

    def contains(self, x):
        x = np.asarray(x, dtype=float)
        if x.shape[-1] != self.n:
            raise ValueError(f"point dimension {x.shape[-1]} does not match domain dimension {self.n}")
        xbar, xn = x[..., :-1], x[..., -1]
        inside_w = self.in_w(xbar)
        phi = self.phi(xbar)
        return inside_w & (xn > self.a) & (xn < phi)

    def rho(self, x):
        """Vertical signed distance ``x_n - φ(x̄)``; positive in the complement."""
        x = np.asarray(x, dtype=float)
        return x[..., -1] - self.phi(x[..., :-1])

    def validate(self, n_samples=2000, seed=0):
        """Sampled check of the Hölder bound and the margin φ > a + δ.

        Returns a dict with the observed quotient, the minimum gap and two
        pass flags.  Infinite W sides are sampled on [-10, 10].
        """
        rng = np.random.default_rng(seed)
        lo = np.where(np.isfinite(self.W[:, 0]), self.W[:, 0], -10.0)
        hi = np.where(np.isfinite(self.W[:, 1]), self.W[:, 1], 10.0)
        xs = rng.uniform(lo, hi, size=(n_samples, self.n - 1))
        ys = rng.uniform(lo, hi, size=(n_samples, self.n - 1))
        # include close pairs so small-scale quotients are exercised
        close = xs + rng.normal(scale=1e-3, size=xs.shape) * (hi - lo)
        ys = np.concatenate([ys, np.clip(close, lo, hi)])
        xs = np.concatenate([xs, xs])
        d = np.linalg.norm(xs - ys, axis=-1)
        keep = d > 0
        q = np.abs(self.phi(xs) - self.phi(ys))[keep] / d[keep] ** self.gamma
        quotient = float(q.max()) if q.size else 0.0
        gap = float(np.min(self.phi(xs)) - self.a) if math.isfinite(self.a) else math.inf
        return {
            "holder_quotient": quotient,
            "holder_ok": quotient <= self.lip * (1 + 1e-9) + 1e-12,
            "min_gap": gap,
            "margin_ok": gap > self.delta_margin,
        }

    def to_dict(self):
        return {
            "gamma": self.gamma,
            "phi": self.phi.to_dict(),
            "W": [[_enc(v) for v in row] for row in self.W.tolist()],
            "a": _enc(self.a),
            "lip": self.lip,
            "delta_margin": self.delta_margin,
        }

    @classmethod
    def from_dict(cls, d):
        return cls(
            float(d["gamma"]),
            Boundary.from_dict(d["phi"]),
            np.array([[_dec(v) for v in row] for row in d["W"]], dtype=float),
            _dec(d.get("a", "-inf")),
            None if d.get("lip") is None else float(d["lip"]),
            float(d.get("delta_margin", 0.0)),
        )


def _enc(v):
    v = float(v)
    if math.isinf(v):
        return "inf" if v > 0 else "-inf"
    return v


def _dec(v):
    return float(v)


def domain_contains(dom, x):
    return dom.contains(x)


def rho_signed_distance(dom, x):
    x = np.asarray(x, dtype=float)
    if not np.all(dom.in_w(x[..., :-1])):
        raise ValueError("x̄ lies outside W")
    return dom.rho(x)


def dyadic_layer(rho):
    """Integer k with 2**(-k-1) < rho <= 2**(-k), computed exactly.

    ``rho`` must be positive; uses the binary exponent so that dyadic
    endpoints are assigned without rounding ambiguity.
    """
    rho = np.asarray(rho, dtype=float)
    if np.any(rho <= 0):
        raise ValueError("dyadic layers are defined for rho > 0 only")
    mant, expo = np.frexp(rho)  # rho = mant * 2**expo, mant in [0.5, 1)
    return np.where(mant == 0.5, 1 - expo, -expo).astype(int)


def layer_index(dom, x):
    """Layer k of a point of the complement, or ``None`` for points of Ω̄."""
    r = float(dom.rho(np.asarray(x, dtype=float)))
    if r <= 0:
        return None
    return int(dyadic_layer(r))


# ---------------------------------------------------------------------------
# cusps


@dataclass(frozen=True)
class Cusp:
    """C_gamma(x, h, M) = {y : x_n - h < y_n < x_n - M |ȳ - x̄|**gamma}."""

    vertex: np.ndarray
    height: float
    opening: float
    gamma: float

    def __post_init__(self):
        object.__setattr__(self, "vertex", np.asarray(self.vertex, dtype=float))
        if self.height <= 0:
            raise ValueError("cusp height must be positive")
        if self.opening < 0:
            raise ValueError("cusp opening must be nonnegative")

    @property
    def n(self):
        return self.vertex.size

    def contains(self, y):
        y = np.asarray(y, dtype=float)
        v = self.vertex
        horiz = hnorm(y[..., :-1] - v[:-1])
        yn = y[..., -1]
        return (v[-1] - self.height < yn) & (yn < v[-1] - self.opening * horiz**self.gamma)

    def measure(self):
        """Closed form ω_{n-1} T**(n-1) h γ/(n-1+γ), T = (h/M)**(1/γ)."""
        n, h, M, g = self.n, self.height, self.opening, self.gamma
        if M == 0:
            return math.inf
        T = (h / M) ** (1 / g)
        return unit_ball_volume(n - 1) * T ** (n - 1) * h * g / (n - 1 + g)

    def sample(self, count, rng):
        """Uniform samples by rejection from the bounding box."""
        n, h, M, g = self.n, self.height, self.opening, self.gamma
        T = (h / max(M, 1e-300)) ** (1 / g) if M > 0 else 1e6
        lo = np.concatenate([self.vertex[:-1] - T, [self.vertex[-1] - h]])
        hi = np.concatenate([self.vertex[:-1] + T, [self.vertex[-1]]])
        out = []
        have = 0
        while have < count:
            batch = rng.uniform(lo, hi, size=(max(2 * (count - have), 1024), n))
            batch = batch[self.contains(batch)]
            out.append(batch)
            have += len(batch)
        return np.concatenate(out)[:count]


def cusp_contains(c, y):
    return c.contains(y)


# ---------------------------------------------------------------------------
# measure estimation


@dataclass(frozen=True)
class MeasureEstimate:
    value: float
    error: float
    method: str
    resolution: int


def _box_cells_measure(indicator, lo, hi, N):
    """Cell counting on the box [lo, hi] with one bisection of boundary cells."""
    n = lo.size
    h = (hi - lo) / N
    axes = [np.linspace(lo[i], hi[i], N + 1) for i in range(n)]
    corners = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1)
    ind = indicator(corners)
    cell_all = np.ones((N,) * n, dtype=bool)
    cell_any = np.zeros((N,) * n, dtype=bool)
    for offs in np.ndindex(*(2,) * n):
        sl = tuple(slice(o, o + N) for o in offs)
        cell_all &= ind[sl]
        cell_any |= ind[sl]
    vol = float(np.prod(h))
    full = int(cell_all.sum())
    mixed = np.argwhere(cell_any & ~cell_all)
    if mixed.size == 0:
        return full * vol, 0.0
    # sub-lattice {0, 1/2, 1}^n of every mixed cell plus subcell centres
    base = lo + mixed * h  # (M, n)
    sub = np.array(list(np.ndindex(*(3,) * n)), dtype=float) * 0.5  # (3^n, n)
    pts = base[:, None, :] + sub[None, :, :] * h
    sub_ind = indicator(pts).reshape((-1,) + (3,) * n)
    centres_off = (np.array(list(np.ndindex(*(2,) * n)), dtype=float) + 0.5) * 0.5
    cen_ind = indicator(base[:, None, :] + centres_off[None] * h).reshape((-1,) + (2,) * n)
    sub_all = np.ones((len(mixed),) + (2,) * n, dtype=bool)
    sub_any = np.zeros_like(sub_all)
    for offs in np.ndindex(*(2,) * n):
        sl = (slice(None),) + tuple(slice(o, o + 2) for o in offs)
        sub_all &= sub_ind[sl]
        sub_any |= sub_ind[sl]
    sub_mixed = sub_any & ~sub_all
    subvol = vol / 2**n
    count = sub_all.sum() + (sub_mixed & cen_ind).sum()
    value = full * vol + float(count) * subvol
    error = 0.5 * float(sub_mixed.sum()) * subvol
    return value, error


def ball_intersection_measure(dom, x, r, m=None, resolution=256, method="cells", seed=0, samples=200_000):
    """Estimate |B_gamma(x, r) ∩ Ω| with an error bar.

    ``method="cells"`` counts cells of a ``resolution**n`` grid on the
    ball's bounding box and bisects boundary cells once; the error is half
    the volume of sub-cells that remain ambiguous.  ``method="mc"`` uses
    ``samples`` uniform points from a seeded generator and reports one
    standard error.
    """
    if m is None:
        m = dom.metric
    x = np.asarray(x, dtype=float)
    if not r > 0 or not math.isfinite(r):
        raise ValueError(f"degenerate radius {r!r}")
    half = m.ball_halfwidths(r)
    lo, hi = x - half, x + half
    horizontal_is_box = m.n == 2

    def indicator(pts):
        inside = dom.contains(pts)
        if not horizontal_is_box:
            horiz = hnorm(pts[..., :-1] - x[:-1])
            inside &= horiz <= half[0]
        return inside

    if method == "cells":
        if resolution < MIN_RESOLUTION:
            raise ValueError(f"resolution {resolution} below the minimum {MIN_RESOLUTION}")
        value, error = _box_cells_measure(indicator, lo, hi, int(resolution))
        return MeasureEstimate(value, error, "cells", int(resolution))
    if method == "mc":
        if samples < 1000:
            raise ValueError("Monte Carlo estimate needs at least 1000 samples")
        rng = np.random.default_rng(seed)
        pts = rng.uniform(lo, hi, size=(int(samples), m.n))
        frac = float(indicator(pts).mean())
        box = float(np.prod(hi - lo))
        return MeasureEstimate(frac * box, box * math.sqrt(frac * (1 - frac) / samples), "mc", int(samples))
    raise ValueError(f"unknown method {method!r}")


@dataclass
class MeasureFit:
    slope: float
    intercept: float
    radii: np.ndarray
    measures: np.ndarray
    errors: np.ndarray

    def rows(self):
        return [(float(r), float(v), float(e)) for r, v, e in zip(self.radii, self.measures, self.errors)]


def fit_measure_exponent(dom, x, radii, m=None, resolution=256, method="cells"):
    """Least-squares slope of log |B_gamma(x, r) ∩ Ω| against log r."""
    radii = np.asarray(radii, dtype=float)
    if radii.size < 8:
        raise ValueError("need at least 8 radii")
    if radii.max() / radii.min() < 100 * (1 - 1e-12):
        raise ValueError("radii must span at least two decades")
    est = [ball_intersection_measure(dom, x, float(r), m, resolution, method) for r in radii]
    vals = np.array([e.value for e in est])
    errs = np.array([e.error for e in est])
    if np.any(vals <= 0):
        bad = radii[vals <= 0]
        raise ValueError(f"zero measure at radii {bad.tolist()}; is x outside the closure of Ω?")
    slope, intercept = np.polyfit(np.log(radii), np.log(vals), 1)
    return MeasureFit(float(slope), float(intercept), radii, vals, errs)


def write_measure_csv(path, rows, x=None):
    """Write ``(x, r, measure, error)`` rows."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["x", "r", "measure", "error"])
        xs = "" if x is None else " ".join(repr(float(v)) for v in np.ravel(x))
        for r, v, e in rows:
            w.writerow([xs, repr(r), repr(v), repr(e)])


# ---------------------------------------------------------------------------
# atlases


@dataclass(frozen=True)
class Chart:
    """A cuboid chart: chart coordinates ``y = R x + t`` map V onto Π(lo, hi).

    ``boundary=None`` marks a full cuboid (V ⊂ Ω); otherwise
    λ(Ω ∩ V) = {ȳ ∈ Π(lo̅, hi̅), lo_n < y_n < boundary(ȳ)}.
    """

    lo: np.ndarray
    hi: np.ndarray
    rotation: np.ndarray
    translation: np.ndarray
    boundary: Boundary | None = None

    def __post_init__(self):
        for name in ("lo", "hi", "translation"):
            object.__setattr__(self, name, np.asarray(getattr(self, name), dtype=float))
        object.__setattr__(self, "rotation", np.asarray(self.rotation, dtype=float))

    @property
    def n(self):
        return self.lo.size

    @property
    def is_full(self):
        return self.boundary is None

    def to_chart(self, x):
        return np.asarray(x, dtype=float) @ self.rotation.T + self.translation

    def from_chart(self, y):
        return (np.asarray(y, dtype=float) - self.translation) @ self.rotation

    def in_cuboid(self, y, margin=0.0):
        y = np.asarray(y, dtype=float)
        return np.all((y > self.lo + margin) & (y < self.hi - margin), axis=-1)

    def chart_contains(self, y):
        """Membership of chart points in H_j (requires y in the cuboid)."""
        y = np.asarray(y, dtype=float)
        inside = self.in_cuboid(y)
        if self.is_full:
            return inside
        return inside & (y[..., -1] < self.boundary(y[..., :-1]))

    def elementary(self, gamma):
        """H_j as an ElementaryDomain in chart coordinates."""
        if self.is_full:
            raise ValueError("a full cuboid chart has no boundary function")
        W = np.stack([self.lo[:-1], self.hi[:-1]], axis=1)
        return ElementaryDomain(gamma, self.boundary, W, a=float(self.lo[-1]))

    def diameter(self):
        return float(np.linalg.norm(self.hi - self.lo))

    def to_dict(self):
        return {
            "lo": self.lo.tolist(),
            "hi": self.hi.tolist(),
            "rotation": self.rotation.tolist(),
            "translation": self.translation.tolist(),
            "boundary": None if self.boundary is None else self.boundary.to_dict(),
        }

    @classmethod
    def from_dict(cls, d):
        b = d.get("boundary")
        return cls(d["lo"], d["hi"], d["rotation"], d["translation"], None if b is None else Boundary.from_dict(b))


@dataclass(frozen=True)
class Atlas:
    d: float
    charts: tuple
    gamma: float = 1.0
    M: float = 1.0

    @property
    def s(self):
        return len(self.charts)

    @property
    def n(self):
        return self.charts[0].n

    def bounding_box(self):
        pts = []
        for c in self.charts:
            corners = np.array(list(np.ndindex(*(2,) * c.n)), dtype=float)
            ys = c.lo + corners * (c.hi - c.lo)
            pts.append(c.from_chart(ys))
        pts = np.concatenate(pts)
        return pts.min(axis=0), pts.max(axis=0)

    def to_dict(self):
        return {"d": self.d, "gamma": self.gamma, "M": self.M, "charts": [c.to_dict() for c in self.charts]}

    @classmethod
    def from_dict(cls, d):
        return cls(float(d["d"]), tuple(Chart.from_dict(c) for c in d["charts"]), float(d.get("gamma", 1.0)), float(d.get("M", 1.0)))


def atlas_contains(atlas, x):
    """Ω as read off the charts: x ∈ Ω iff some chart cuboid holds x and says so."""
    x = np.asarray(x, dtype=float)
    out = np.zeros(x.shape[:-1], dtype=bool)
    for c in atlas.charts:
        out |= c.chart_contains(c.to_chart(x))
    return out


def chart_localize(atlas, j, x):
    """Chart coordinates λ_j(x); raises if x is not in V_j."""
    c = atlas.charts[j]
    y = c.to_chart(x)
    if not np.all(c.in_cuboid(y)):
        raise ValueError(f"point outside the cuboid of chart {j}")
    return y


def chart_globalize(atlas, j, y):
    return atlas.charts[j].from_chart(y)


STRUCTURAL = ("margin", "core_nonempty", "isometry", "classification", "holder", "finite_multiplicity")
COVERING = ("meets_omega", "covered", "consistent")


@dataclass
class AtlasReport:
    """Per-condition verdicts of ``atlas_validate``.

    ``passed`` aggregates the structural chart conditions (margins, chart
    classification, Hölder bounds, multiplicity); ``covering_ok`` aggregates
    Ω ∩ (V_j)_d ≠ ∅, Ω ⊂ ∪ (V_j)_d and chart agreement on overlaps.  A
    single elementary chart can satisfy the first but never the second,
    since H_j reaches the bottom face of its cuboid.
    """

    passed: bool
    covering_ok: bool
    conditions: dict
    multiplicity: int
    diameter: float
    per_chart: list

    def to_dict(self):
        return {
            "passed": self.passed,
            "covering_ok": self.covering_ok,
            "conditions": self.conditions,
            "multiplicity": self.multiplicity,
            "diameter": self.diameter,
            "per_chart": self.per_chart,
        }


def atlas_validate(atlas, resolution=200, n_holder=2000, seed=0, omega=None):
    """Check every atlas condition; failures are reported, never raised.

    ``omega`` is an optional global membership predicate for Ω; by default
    Ω is read off the charts and the charts are additionally checked for
    agreement on their overlaps.
    """
    rng = np.random.default_rng(seed)
    d = atlas.d
    per_chart = []
    conditions = {}
    lo, hi = atlas.bounding_box()
    axes = [np.linspace(lo[i], hi[i], resolution) for i in range(atlas.n)]
    pts = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, atlas.n)
    contains = omega if omega is not None else (lambda p: atlas_contains(atlas, p))
    in_omega = contains(pts)

    in_cube = []
    in_core = []
    votes_in = np.zeros(len(pts), dtype=int)
    votes_out = np.zeros(len(pts), dtype=int)
    for j, c in enumerate(atlas.charts):
        info = {"chart": j}
        info["margin"] = bool(np.all((c.lo > 0) & (c.lo + d < c.hi)))
        info["core_nonempty"] = bool(np.all(c.hi - c.lo > 2 * d))
        info["isometry"] = bool(np.allclose(c.rotation @ c.rotation.T, np.eye(c.n), atol=1e-12))
        y = c.to_chart(pts)
        cube = c.in_cuboid(y)
        core = c.in_cuboid(y, margin=d)
        in_cube.append(cube)
        in_core.append(core)
        mem = c.chart_contains(y)
        votes_in += cube & mem
        votes_out += cube & ~mem
        info["meets_omega"] = bool(np.any(core & in_omega))
        if c.is_full:
            info["kind"] = "full"
            info["classification"] = bool(np.all(in_omega[cube])) if omega is not None else True
        else:
            info["kind"] = "elementary"
            wl, wh = c.lo[:-1], c.hi[:-1]
            xs = rng.uniform(wl, wh, size=(n_holder, c.n - 1))
            ys = np.concatenate([rng.uniform(wl, wh, size=(n_holder, c.n - 1)),
                                 np.clip(xs + rng.normal(scale=1e-3, size=xs.shape), wl, wh)])
            xs = np.concatenate([xs, xs])
            phx = c.boundary(xs)
            gap = float(np.min(phx) - c.lo[-1])
            info["boundary_gap"] = gap
            info["classification"] = bool(gap > d and np.max(phx) < c.hi[-1])
            dist = np.linalg.norm(xs - ys, axis=-1)
            keep = dist > 0
            q = float(np.max(np.abs(phx - c.boundary(ys))[keep] / dist[keep] ** atlas.gamma))
            info["holder_quotient"] = q
            info["holder"] = bool(q <= atlas.M * (1 + 1e-9))
            if omega is not None:
                info["agrees_with_omega"] = bool(np.all(mem[cube] == in_omega[cube]))
        per_chart.append(info)

    in_cube = np.array(in_cube)
    in_core = np.array(in_core)
    multiplicity = int(in_cube.sum(axis=0).max())
    conditions["margin"] = all(p["margin"] for p in per_chart)
    conditions["core_nonempty"] = all(p["core_nonempty"] for p in per_chart)
    conditions["isometry"] = all(p["isometry"] for p in per_chart)
    conditions["classification"] = all(p["classification"] for p in per_chart)
    conditions["holder"] = all(p.get("holder", True) for p in per_chart)
    conditions["meets_omega"] = all(p["meets_omega"] for p in per_chart)
    conditions["covered"] = bool(np.all(in_core.any(axis=0)[in_omega]))
    conditions["consistent"] = bool(not np.any((votes_in > 0) & (votes_out > 0)))
    conditions["finite_multiplicity"] = multiplicity < math.inf
    diameter = max(c.diameter() for c in atlas.charts)
    return AtlasReport(
        all(conditions[c] for c in STRUCTURAL),
        all(conditions[c] for c in COVERING),
        conditions,
        multiplicity,
        diameter,
        per_chart,
    )


# ---------------------------------------------------------------------------
# sampling


def sample_domain_points(contains, lo, hi, count, rng):
    """Rejection-sample ``count`` points of a region inside the box [lo, hi]."""
    lo, hi = np.asarray(lo, dtype=float), np.asarray(hi, dtype=float)
    out, have, tries = [], 0, 0
    while have < count:
        batch = rng.uniform(lo, hi, size=(max(4 * (count - have), 256), lo.size))
        batch = batch[contains(batch)]
        out.append(batch)
        have += len(batch)
        tries += 1
        if tries > 200 and have == 0:
            raise ValueError("region has no sampled points inside the box")
    return np.concatenate(out)[:count]


def sample_pairs(contains, lo, hi, count, rng, metric, scales=(1e-3, 1.0), anchors=None,
                 anchor_fraction=0.25, directions=8):
    """Point pairs in a region with metric separation log-uniform over ``scales``.

    Each pair is built from a base point and a displacement of exact
    ``metric`` size ``s``: either vertical of length s with a horizontal
    part of length <= s**(1/gamma), or horizontal of length s**(1/gamma)
    with a vertical part <= s.  A fraction of the pairs uses ``anchors`` as
    base points on a geometric ladder of scales (so envelope fits see the
    anchor at every scale).  Pairs whose second point leaves the region are
    redrawn.
    """
    lo, hi = np.asarray(lo, dtype=float), np.asarray(hi, dtype=float)
    n = lo.size
    g = metric.gamma
    smin, smax = float(scales[0]), float(scales[1])
    xs, ys = [], []
    need_anchor = 0
    if anchors is not None and len(anchors):
        anchors = np.atleast_2d(np.asarray(anchors, dtype=float))
        need_anchor = int(count * anchor_fraction)
        ladder = np.geomspace(smin, smax, max(need_anchor // (len(anchors) * directions), 2))
        ax, ay = [], []
        for a in anchors:
            for s in ladder:
                for _ in range(directions):
                    ax.append(a)
                    ay.append(a + _displacement(rng, s, g, n, 1)[0])
        ax, ay = np.array(ax), np.array(ay)
        ok = contains(ay)
        xs.append(ax[ok])
        ys.append(ay[ok])
    have = sum(len(v) for v in xs)
    guard = 0
    while have < count:
        m = max(2 * (count - have), 256)
        base = sample_domain_points(contains, lo, hi, m, rng)
        s = np.exp(rng.uniform(math.log(smin), math.log(smax), size=m))
        other = base + _displacement(rng, s, g, n, m)
        ok = contains(other)
        xs.append(base[ok])
        ys.append(other[ok])
        have += int(ok.sum())
        guard += 1
        if guard > 500:
            raise ValueError("could not place pairs inside the region")
    X = np.concatenate(xs)[:count]
    Y = np.concatenate(ys)[:count]
    return X, Y


def _displacement(rng, s, g, n, m):
    s = np.broadcast_to(np.asarray(s, dtype=float), (m,))
    horiz_dir = rng.normal(size=(m, n - 1))
    horiz_dir /= np.linalg.norm(horiz_dir, axis=1, keepdims=True)
    vertical_sign = rng.choice([-1.0, 1.0], size=m)
    u = rng.uniform(0, 1, size=m)
    vertical_major = rng.uniform(size=m) < 0.5
    hlen = np.where(vertical_major, u * s ** (1 / g), s ** (1 / g))
    vlen = np.where(vertical_major, s, u * s)
    out = np.empty((m, n))
    out[:, :-1] = horiz_dir * hlen[:, None]
    out[:, -1] = vertical_sign * vlen
    return out


def segment_inside(contains, X, Y, points=64):
    """True where the sampled segment [x, y] (``points`` points) lies in the region."""
    X, Y = np.asarray(X, dtype=float), np.asarray(Y, dtype=float)
    t = np.linspace(0.0, 1.0, points)
    seg = X[:, None, :] + t[None, :, None] * (Y - X)[:, None, :]
    return np.all(contains(seg), axis=1)


# ---------------------------------------------------------------------------
# catalogs


def cusp_domain(gamma=0.5, opening=1.0, n=2, sign=-1, W=None, a=-math.inf, level=0.0):
    """{x_n < level + sign * opening * |x̄|**gamma}; ``sign=-1`` is the outer cusp."""
    if W is None:
        W = [[-math.inf, math.inf]] * (n - 1)
    phi = PowerCusp(level, opening, gamma, sign, (0.0,) * (n - 1))
    return ElementaryDomain(gamma, phi, W, a)


def box_domain(lo, hi, gamma=1.0):
    """The open box (lo, hi) as an elementary domain with a flat top."""
    lo, hi = np.asarray(lo, dtype=float), np.asarray(hi, dtype=float)
    W = np.stack([lo[:-1], hi[:-1]], axis=1)
    return ElementaryDomain(gamma, Flat(float(hi[-1])), W, float(lo[-1]))


def is_box_domain(dom):
    """True for a bounded elementary domain with a flat top (a parallelepiped)."""
    return isinstance(dom.phi, Flat) and bool(np.all(np.isfinite(dom.W))) and math.isfinite(dom.a)


def is_convex_domain(dom):
    """Sufficient test: the boundary function is concave and W is a box."""
    phi = dom.phi
    if isinstance(phi, (Flat, Affine)):
        return True
    return isinstance(phi, PowerCusp) and phi.sign < 0 and phi.exponent == 1


def catalog_domains(n=2):
    """Named elementary domains with W = R^{n-1} and a = -inf.

    Each entry maps to ``(domain, vertex)`` where ``vertex`` is a boundary
    point used for cusp and measure-exponent checks.
    """
    z = (0.0,) * (n - 1)
    inf_w = [[-math.inf, math.inf]] * (n - 1)
    out = {
        "flat": ElementaryDomain(1.0, Flat(0.0), inf_w),
        "affine": ElementaryDomain(1.0, Affine(0.0, (0.5,) * (n - 1)), inf_w),
        "outer_cusp_0.5": cusp_domain(0.5, 1.0, n, -1),
        "inner_cusp_0.5": cusp_domain(0.5, 1.0, n, +1),
        "outer_cusp_0.667": cusp_domain(2 / 3, 1.0, n, -1),
        "wedge": ElementaryDomain(1.0, Wedge(0.0, 1.0, sign=-1, center=z), inf_w),
        "bump": ElementaryDomain(1.0, Perturbed(Flat(0.0), 0.2, 0.3, z), inf_w),
    }
    result = {}
    for name, dom in out.items():
        vertex = np.zeros(n)
        vertex[-1] = float(dom.phi(np.zeros((1, n - 1)))[0])
        result[name] = (dom, vertex)
    return result


def _rot2(angle):
    c, s = math.cos(angle), math.sin(angle)
    return np.array([[c, s], [-s, c]])


def triangle_atlas(side=1.0, d=0.05, strip=0.05, overshoot=0.2):
    """Three wedge charts covering an equilateral triangle (a Lipschitz domain).

    Chart j is centred on vertex j with its x_n axis along the outward
    bisector; in chart coordinates the triangle is the subgraph of
    ``-sqrt(3)|t - t0|`` above an interior cut parallel to the opposite
    edge.  Returns ``(atlas, contains)`` where ``contains`` is the exact
    membership predicate of the triangle.
    """
    h = side * math.sqrt(3) / 2
    verts = np.array([[0.0, 0.0], [side, 0.0], [side / 2, h]])
    centroid = verts.mean(axis=0)
    slope = math.sqrt(3)
    depth = h - strip * side  # stop short of the opposite edge
    w = (depth - d) / slope * 0.999  # keep φ > lo_n + d on W
    charts = []
    for v in verts:
        out = v - centroid
        out /= np.linalg.norm(out)
        tang = np.array([out[1], -out[0]])
        R = np.stack([tang, out])  # rows: t-axis, n-axis
        lo_local = np.array([-w, -depth])
        hi_local = np.array([w, overshoot * side])
        shift = 1.0 - lo_local  # make all chart coordinates positive
        translation = shift - R @ v
        lo = lo_local + shift
        hi = hi_local + shift
        tip = shift  # the vertex in chart coordinates
        phi = Wedge(level=float(tip[1]), opening=slope, sign=-1, center=(float(tip[0]),))
        charts.append(Chart(lo, hi, R, translation, phi))
    atlas = Atlas(d, tuple(charts), gamma=1.0, M=slope)

    normals = []
    for i in range(3):
        p, q = verts[i], verts[(i + 1) % 3]
        e = q - p
        nrm = np.array([e[1], -e[0]]) / np.linalg.norm(e)
        if np.dot(centroid - p, nrm) > 0:
            nrm = -nrm
        normals.append((p, nrm))

    def contains(x):
        x = np.asarray(x, dtype=float)
        inside = np.ones(x.shape[:-1], dtype=bool)
        for p, nrm in normals:
            inside &= (x - p) @ nrm < 0
        return inside

    return atlas, contains
