"""Grid-sampled functions on masked regions and closed-form test functions.

Grids are cell centred: a box ``[lo, hi]`` split into ``shape`` cells has
nodes at the cell centres, so region predicates and the midpoint rule use
the same points.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import sympy
from scipy.special import comb
from sympy.parsing.sympy_parser import parse_expr, standard_transformations

from .geometry import GammaMetric, hnorm

__all__ = [
    "GridField",
    "TestFunction",
    "IntegralResult",
    "eval_field",
    "finite_diff_derivative",
    "integrate_region",
    "make_test_function",
    "function_catalog",
    "write_field",
    "read_field",
    "rle_encode",
    "rle_decode",
    "DEFAULT_L_MAX",
]

DEFAULT_L_MAX = 6
MAX_FD_ORDER = 4


@dataclass(frozen=True)
class GridField:
    """Scalar samples on a uniform grid with a mask of valid nodes.

    Node ``i`` sits at ``origin + i * spacing``.  Values off the mask are
    carried but never read.
    """

    origin: np.ndarray
    spacing: np.ndarray
    values: np.ndarray
    mask: np.ndarray

    def __post_init__(self):
        values = np.array(self.values, dtype=float)
        mask = np.array(self.mask, dtype=bool)
        origin = np.array(self.origin, dtype=float).reshape(-1)
        spacing = np.array(self.spacing, dtype=float).reshape(-1)
        if values.shape != mask.shape:
            raise ValueError("values and mask shapes differ")
        if origin.size != values.ndim or spacing.size != values.ndim:
            raise ValueError("origin/spacing length must equal the grid dimension")
        if np.any(spacing <= 0):
            raise ValueError("spacing must be positive")
        if not mask.any():
            raise ValueError("mask is empty")
        if not np.all(np.isfinite(values[mask])):
            raise ValueError("values must be finite on the mask")
        values[~mask] = 0.0
        for name, arr in (("values", values), ("mask", mask), ("origin", origin), ("spacing", spacing)):
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    @property
    def n(self):
        return self.values.ndim

    @property
    def shape(self):
        return self.values.shape

    @property
    def cell_volume(self):
        return float(np.prod(self.spacing))

    def axes(self):
        return [self.origin[i] + self.spacing[i] * np.arange(self.shape[i]) for i in range(self.n)]

    def points(self):
        return np.stack(np.meshgrid(*self.axes(), indexing="ij"), axis=-1)

    def masked_points(self):
        return self.points()[self.mask]

    def bounds(self):
        """Box ``[lo, hi]`` whose cells have these nodes as centres."""
        lo = self.origin - 0.5 * self.spacing
        return lo, lo + self.spacing * np.array(self.shape)

    def with_values(self, values, mask=None):
        return GridField(self.origin, self.spacing, values, self.mask if mask is None else mask)

    @classmethod
    def on_box(cls, fun, lo, hi, shape, region=None):
        """Sample ``fun`` at the cell centres of ``[lo, hi]`` split into ``shape`` cells.

        ``region`` is an optional predicate on points; nodes outside it are
        masked out and ``fun`` is not evaluated there.
        """
        lo, hi = np.asarray(lo, dtype=float), np.asarray(hi, dtype=float)
        shape = tuple(int(s) for s in np.broadcast_to(shape, lo.shape))
        spacing = (hi - lo) / np.array(shape)
        origin = lo + 0.5 * spacing
        axes = [origin[i] + spacing[i] * np.arange(shape[i]) for i in range(lo.size)]
        pts = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1)
        mask = np.ones(shape, dtype=bool) if region is None else np.asarray(region(pts), dtype=bool)
        values = np.zeros(shape)
        if mask.any():
            values[mask] = np.asarray(fun(pts[mask]), dtype=float)
        return cls(origin, spacing, values, mask)


# ---------------------------------------------------------------------------
# test functions


def _symbols(n):
    return sympy.symbols(" ".join(f"x{i + 1}" for i in range(n)), real=True)


@dataclass(frozen=True)
class TestFunction:
    """Closed-form function of a catalog kind.

    ``kind`` is one of ``polynomial``, ``gamma_power``, ``smooth_bump`` or
    ``expression``; ``params`` holds the JSON spec it was built from.
    Polynomials and expressions carry a sympy form so exact derivatives
    are available.
    """

    __test__ = False  # not a pytest class

    kind: str
    n: int
    params: dict
    expr: object = field(default=None, repr=False, compare=False)
    _fun: object = field(default=None, repr=False, compare=False)
    _deriv: object = field(default=None, repr=False, compare=False)

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        if x.shape[-1] != self.n:
            raise ValueError(f"point dimension {x.shape[-1]} does not match {self.n}")
        return self._fun(x)

    def evaluate(self, x, dtype=float):
        """Values in ``dtype``; sympy-backed kinds evaluate natively in it."""
        if self.expr is None:
            return self(np.asarray(x, dtype=float)).astype(dtype)
        x = np.asarray(x, dtype=dtype)
        if x.shape[-1] != self.n:
            raise ValueError(f"point dimension {x.shape[-1]} does not match {self.n}")
        return self._fun(x, dtype)

    @property
    def name(self):
        return self.params.get("name", self.kind)

    def derivative(self, alpha):
        """Closed-form D^alpha as a callable, or ``None`` if not smooth."""
        if self._deriv is not None:
            return self._deriv(alpha)
        if self.expr is None:
            return None
        syms = _symbols(self.n)
        d = self.expr
        for s, k in zip(syms, alpha):
            if k:
                d = sympy.diff(d, s, int(k))
        return _lambdify(syms, d)

    def to_dict(self):
        return dict(self.params)


def _lambdify(syms, expr):
    f = sympy.lambdify(syms, expr, modules=["numpy"])

    def fun(x, dtype=float):
        x = np.asarray(x, dtype=dtype)
        out = f(*[x[..., i] for i in range(x.shape[-1])])
        return np.broadcast_to(np.asarray(out, dtype=dtype), x.shape[:-1]).copy()

    return fun


def _parse_expression(text, n):
    syms = _symbols(n)
    local = {str(s): s for s in syms}
    if n == 2:
        local.update({"x": syms[0], "y": syms[1]})
    try:
        expr = parse_expr(text, local_dict=local, transformations=standard_transformations)
    except Exception as exc:  # sympy raises a zoo of types
        raise ValueError(f"cannot parse expression {text!r}: {exc}") from None
    extra = {str(s) for s in expr.free_symbols} - {str(s) for s in syms}
    if extra:
        raise ValueError(f"expression uses unknown variables {sorted(extra)}")
    return expr


def make_test_function(spec, n=2, l_max=DEFAULT_L_MAX):
    """Build a TestFunction from a JSON-style spec.

    Examples of specs::

        {"kind": "polynomial", "terms": [[[1, 0], 1.0], [[0, 1], 2.0]]}
        {"kind": "gamma_power", "center": [0, 0], "exponent": 0.4, "gamma": 0.5}
        {"kind": "smooth_bump", "center": [0, -0.5], "radius": 0.3}
        {"kind": "expression", "expr": "sin(2*x1)*cos(x2)"}
    """
    if not isinstance(spec, dict) or "kind" not in spec:
        raise ValueError("test function spec must be a dict with a 'kind'")
    kind = spec["kind"]
    n = int(spec.get("n", n))
    params = dict(spec)
    params["n"] = n
    syms = _symbols(n)
    if kind == "polynomial":
        terms = spec.get("terms")
        if not terms:
            raise ValueError("polynomial needs a nonempty 'terms' list")
        expr = sympy.Integer(0)
        degree = 0
        for exps, coef in terms:
            exps = [int(e) for e in exps]
            if len(exps) != n or min(exps) < 0:
                raise ValueError(f"bad exponent tuple {exps}")
            degree = max(degree, sum(exps))
            expr += sympy.Float(coef, 17) * sympy.Mul(*[s**e for s, e in zip(syms, exps)])
        if degree > l_max:
            raise ValueError(f"polynomial degree {degree} exceeds l_max={l_max}")
        params["degree"] = degree
        return TestFunction(kind, n, params, expr, _lambdify(syms, expr))
    if kind == "expression":
        expr = _parse_expression(str(spec["expr"]), n)
        return TestFunction(kind, n, params, expr, _lambdify(syms, expr))
    if kind == "gamma_power":
        beta = float(spec["exponent"])
        if not beta > 0:
            raise ValueError("gamma_power exponent must be positive")
        m = GammaMetric(float(spec.get("gamma", 1.0)), n)
        c = np.asarray(spec.get("center", [0.0] * n), dtype=float)
        scale = float(spec.get("scale", 1.0))
        return TestFunction(kind, n, params, None, lambda x: scale * m.distance(x, c) ** beta)
    if kind == "smooth_bump":
        c = np.asarray(spec.get("center", [0.0] * n), dtype=float)
        R = float(spec["radius"])
        if not R > 0:
            raise ValueError("smooth_bump radius must be positive")

        def bump(x):
            s2 = (hnorm(x - c) / R) ** 2
            out = np.zeros(np.shape(s2))
            inside = s2 < 1
            out[inside] = np.exp(1 - 1 / (1 - s2[inside]))
            return out

        # derivatives: differentiate the formula valid on the open support
        inner = sympy.exp(1 - 1 / (1 - sum(((s - float(ci)) / R) ** 2 for s, ci in zip(syms, c))))

        def deriv(alpha):
            d = inner
            for s, k in zip(syms, alpha):
                if k:
                    d = sympy.diff(d, s, int(k))
            g = _lambdify(syms, d)

            def fun(x):
                x = np.asarray(x, dtype=float)
                out = np.zeros(x.shape[:-1])
                inside = (hnorm(x - c) / R) ** 2 < 1
                out[inside] = g(x[inside])
                return out

            return fun

        return TestFunction(kind, n, params, None, bump, deriv)
    raise ValueError(f"unknown test function kind {kind!r}")


def function_catalog(n=2):
    """Ten smooth functions with bounded derivatives on bounded windows."""
    if n != 2:
        raise ValueError("the function catalog is defined for n = 2")
    specs = [
        {"name": "one", "kind": "polynomial", "terms": [[[0, 0], 1.0]]},
        {"name": "x1", "kind": "polynomial", "terms": [[[1, 0], 1.0]]},
        {"name": "x2", "kind": "polynomial", "terms": [[[0, 1], 1.0]]},
        {"name": "x1^2", "kind": "polynomial", "terms": [[[2, 0], 1.0]]},
        {"name": "x1*x2", "kind": "polynomial", "terms": [[[1, 1], 1.0]]},
        {"name": "x2^2+x1", "kind": "polynomial", "terms": [[[0, 2], 1.0], [[1, 0], 1.0]]},
        {"name": "sin*cos", "kind": "expression", "expr": "sin(2*x1)*cos(x2)"},
        {"name": "exp", "kind": "expression", "expr": "exp(x2/2)*(1 + x1)"},
        {"name": "bump", "kind": "smooth_bump", "center": [0.3, -0.5], "radius": 0.4},
        {"name": "wave", "kind": "expression", "expr": "cos(3*x1 + x2)"},
    ]
    return [make_test_function(s, n) for s in specs]


# ---------------------------------------------------------------------------
# evaluation


def _lagrange4(t):
    # weights for nodes at offsets -1, 0, 1, 2
    return np.stack(
        [
            -t * (t - 1) * (t - 2) / 6,
            (t + 1) * (t - 1) * (t - 2) / 2,
            -(t + 1) * t * (t - 2) / 2,
            (t + 1) * t * (t - 1) / 6,
        ],
        axis=-1,
    )


def eval_field(f, x, scheme="multilinear"):
    """Evaluate a GridField (by interpolation) or a closed-form function.

    Grid interpolation is exact at nodes.  Every stencil node with nonzero
    weight must be masked; otherwise the query lies outside the masked hull
    and raises.
    """
    if not isinstance(f, GridField):
        return f(x)
    x = np.asarray(x, dtype=float)
    scalar = x.ndim == 1
    x = np.atleast_2d(x)
    if x.shape[-1] != f.n:
        raise ValueError("query dimension does not match the grid")
    s = (x - f.origin) / f.spacing
    # snap node queries so interpolation weights are exactly 0 or 1 there
    near = np.rint(s)
    s = np.where(np.abs(s - near) < 1e-9, near, s)
    shape = np.array(f.shape)
    tol = 1e-9
    if np.any(s < -tol) or np.any(s > shape - 1 + tol):
        raise ValueError("query outside the grid")
    if scheme == "nearest":
        idx = np.clip(np.rint(s).astype(int), 0, shape - 1)
        ok = f.mask[tuple(idx.T)]
        if not np.all(ok):
            raise ValueError("query outside the masked hull")
        out = f.values[tuple(idx.T)]
    elif scheme in ("multilinear", "cubic"):
        if scheme == "multilinear":
            lo_off, width = 0, 2
            i0 = np.clip(np.floor(s).astype(int), 0, np.maximum(shape - 2, 0))
        else:
            if np.any(shape < 4):
                raise ValueError("cubic interpolation needs at least 4 nodes per axis")
            lo_off, width = -1, 4
            i0 = np.clip(np.floor(s).astype(int), 1, shape - 3)
        t = s - i0
        out = np.zeros(len(x))
        ok = np.ones(len(x), dtype=bool)
        for offs in np.ndindex(*(width,) * f.n):
            idx = i0 + np.array(offs) + lo_off
            w = np.ones(len(x))
            for a in range(f.n):
                if scheme == "multilinear":
                    w = w * (t[:, a] if offs[a] else 1 - t[:, a])
                else:
                    w = w * _lagrange4(t[:, a])[:, offs[a]]
            # only nodes that carry weight need to be masked
            ok &= f.mask[tuple(idx.T)] | (w == 0)
            out += w * f.values[tuple(idx.T)]
        if not np.all(ok):
            raise ValueError("query outside the masked hull")
    else:
        raise ValueError(f"unknown scheme {scheme!r}")
    return out[0] if scalar else out


# ---------------------------------------------------------------------------
# finite differences

_CENTRAL = {
    1: ([-1, 1], [-0.5, 0.5]),
    2: ([-1, 0, 1], [1.0, -2.0, 1.0]),
    3: ([-2, -1, 1, 2], [-0.5, 1.0, -1.0, 0.5]),
    4: ([-2, -1, 0, 1, 2], [1.0, -4.0, 6.0, -4.0, 1.0]),
}


def _one_sided(k, sign):
    offs = [sign * j for j in range(k + 1)]
    # forward: Δ^k f(x) = sum_j (-1)^(k-j) C(k,j) f(x + j h); backward mirrors it
    coef = [(-1) ** (k - j) * comb(k, j, exact=True) * (1 if sign > 0 else (-1) ** k) for j in range(k + 1)]
    return offs, [float(c) for c in coef]


def _shift(arr, off, axis, fill):
    out = np.full_like(arr, fill)
    n = arr.shape[axis]
    src = [slice(None)] * arr.ndim
    dst = [slice(None)] * arr.ndim
    if off >= 0:
        src[axis], dst[axis] = slice(off, n), slice(0, n - off)
    else:
        src[axis], dst[axis] = slice(0, n + off), slice(-off, n)
    out[tuple(dst)] = arr[tuple(src)]
    return out


def _apply_stencil(values, mask, axis, offs, coef, h, order):
    ok = mask.copy()
    acc = np.zeros_like(values)
    for o, c in zip(offs, coef):
        ok &= _shift(mask, o, axis, False)
        acc += c * _shift(values, o, axis, 0.0)
    return acc / h**order, ok


def _derivative_1d(values, mask, axis, order, h):
    offs, coef = _CENTRAL[order]
    central, c_ok = _apply_stencil(values, mask, axis, offs, coef, h, order)
    fwd, f_ok = _apply_stencil(values, mask, axis, *_one_sided(order, +1), h, order)
    bwd, b_ok = _apply_stencil(values, mask, axis, *_one_sided(order, -1), h, order)
    out = np.where(c_ok, central, np.where(f_ok, fwd, bwd))
    return out, c_ok | f_ok | b_ok


def finite_diff_derivative(f, alpha):
    """D^alpha of a GridField by axis-wise differences.

    Second-order central stencils where the mask admits them, first-order
    one-sided differences otherwise; the result mask marks nodes where some
    stencil applied on every differentiated axis.
    """
    alpha = tuple(int(a) for a in alpha)
    if len(alpha) != f.n or min(alpha) < 0:
        raise ValueError(f"bad multi-index {alpha}")
    if sum(alpha) > MAX_FD_ORDER:
        raise ValueError(f"|alpha| = {sum(alpha)} exceeds {MAX_FD_ORDER}")
    values, mask = np.array(f.values), np.array(f.mask)
    for axis, k in enumerate(alpha):
        if k == 0:
            continue
        values, mask = _derivative_1d(values, mask, axis, k, f.spacing[axis])
        if not mask.any():
            raise ValueError(f"no stencil for alpha={alpha} fits inside the mask")
    return GridField(f.origin, f.spacing, np.where(mask, values, 0.0), mask)


# ---------------------------------------------------------------------------
# integration


@dataclass(frozen=True)
class IntegralResult:
    value: float
    empty: bool
    n_cells: int


def integrate_region(f, p=1.0, region=None):
    """Midpoint-rule integral of |f|**p over masked cells whose centres satisfy ``region``."""
    if p < 1:
        raise ValueError("p must be >= 1")
    sel = np.array(f.mask)
    if region is not None:
        sel &= np.asarray(region(f.points()), dtype=bool)
    count = int(sel.sum())
    if count == 0:
        return IntegralResult(0.0, True, 0)
    vals = np.abs(f.values[sel]) ** p
    return IntegralResult(math.fsum(vals.tolist()) * f.cell_volume, False, count)


# ---------------------------------------------------------------------------
# file format


def rle_encode(mask):
    """Run lengths of a flattened boolean array, starting with a False run."""
    flat = np.asarray(mask, dtype=bool).ravel()
    change = np.flatnonzero(np.diff(flat.astype(np.int8))) + 1
    bounds = np.concatenate([[0], change, [flat.size]])
    runs = np.diff(bounds).tolist()
    if flat.size and flat[0]:
        runs = [0] + runs
    return runs


def rle_decode(runs, size):
    out = np.zeros(size, dtype=bool)
    pos, val = 0, False
    for r in runs:
        out[pos : pos + r] = val
        pos += r
        val = not val
    if pos != size:
        raise ValueError("run lengths do not match the field size")
    return out


def write_field(path, f, extra=None):
    """Write ``<path>.bin`` (little-endian float64, C order) and ``<path>.json``."""
    path = Path(path)
    header = {
        "format": "cuspmorrey-field-1",
        "dtype": "<f8",
        "order": "C",
        "origin": f.origin.tolist(),
        "spacing": f.spacing.tolist(),
        "extents": list(f.shape),
        "mask_rle": rle_encode(f.mask),
    }
    if extra:
        header["extra"] = extra
    f.values.astype("<f8").tofile(path.with_suffix(".bin"))
    path.with_suffix(".json").write_text(json.dumps(header, indent=1, sort_keys=True))
    return path.with_suffix(".bin"), path.with_suffix(".json")


def read_field(path):
    path = Path(path)
    header = json.loads(path.with_suffix(".json").read_text())
    shape = tuple(header["extents"])
    values = np.fromfile(path.with_suffix(".bin"), dtype=header.get("dtype", "<f8"))
    if values.size != int(np.prod(shape)):
        raise ValueError("binary size does not match the header extents")
    mask = rle_decode(header["mask_rle"], values.size).reshape(shape)
    return GridField(header["origin"], header["spacing"], values.reshape(shape), mask)
