"""Extension across a Hölder boundary by dyadic layers of shifted mollifications.

For an elementary domain Ω = {x̄ ∈ W, a < x_n < φ(x̄)} the complement above
the graph is cut into layers G_k = {2^(-k-1) < ρ ≤ 2^(-k)}, ρ = x_n - φ(x̄).
On each layer the function is replaced by a mollified translate pushed
down into Ω,

    f_k(x) = ∫ f(x̄ - 2^(-k/γ) z̄, x_n - A 2^(-k) z_n) ω(z) dz,

with ω a tensor kernel on (1/2, 1)^n with l vanishing moments, and

    Tf = f on Ω,   Tf = Σ_k ψ_k f_k outside,

where ψ_k = θ(2^k ρ) - θ(2^(k+1) ρ).  At a point at most two ψ_k are
nonzero, so the sum is evaluated exactly.

Shifted samples are formed and summed in extended precision: the kernel
weights have large alternating mass and, with the default A, the samples
sit far below the point being extended.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field as dc_field, replace
from functools import lru_cache

import numpy as np
from numpy.polynomial import legendre

from .fields import GridField, TestFunction, eval_field, finite_diff_derivative
from .geometry import Atlas, ElementaryDomain, GammaMetric, atlas_contains, dyadic_layer
from .mollifier import build_kernel_1d
from .norms import WeightSpec, multi_indices, sobolev_morrey_norm

__all__ = [
    "theta",
    "theta_prime",
    "smoothstep",
    "LayerPartition",
    "build_layer_partition",
    "ScalingFit",
    "psi_derivative_scaling_check",
    "ExtensionConfig",
    "ExtensionWarning",
    "ShiftedSupportError",
    "SupportCheck",
    "shift_offsets",
    "f_k_eval",
    "shifted_support_check",
    "ExtensionResult",
    "extend_elementary",
    "atlas_cutoffs",
    "extend_atlas",
    "check_index_bound",
    "OperatorNormReport",
    "operator_norm_estimate",
    "default_A",
]

_LD = np.longdouble
THETA_NODES = 64
MIN_Q = 8
_CHUNK_SAMPLES = 1 << 19


class ExtensionWarning(UserWarning):
    pass


class ShiftedSupportError(RuntimeError):
    """A shifted quadrature node left the domain where ψ_k is nonzero."""


# ---------------------------------------------------------------------------
# transition function


def _beta(s):
    # nodes can round onto s = 2 when t is within an ulp of 2; exp(-inf) = 0 there
    with np.errstate(divide="ignore"):
        return np.exp(-1.0 / ((s - 1.0) * (2.0 - s)))


_GX, _GW = legendre.leggauss(THETA_NODES)
_THETA_MASS = 0.5 * float(np.sum(_GW * _beta(1.5 + 0.5 * _GX)))


def theta(t):
    """Smooth step with θ = 1 on t ≤ 1 and θ = 0 on t ≥ 2."""
    t = np.asarray(t, dtype=float)
    out = np.where(t <= 1.0, 1.0, 0.0)
    mid = (t > 1.0) & (t < 2.0)
    if np.any(mid):
        tm = t[mid]
        half = 0.5 * (2.0 - tm)
        s = tm[:, None] + half[:, None] * (_GX + 1.0)
        out[mid] = half * np.sum(_GW * _beta(s), axis=1) / _THETA_MASS
    return out


def theta_prime(t):
    t = np.asarray(t, dtype=float)
    out = np.zeros_like(t)
    mid = (t > 1.0) & (t < 2.0)
    out[mid] = -_beta(t[mid]) / _THETA_MASS
    return out


def smoothstep(t):
    """C^∞ step: 0 for t ≤ 0, 1 for t ≥ 1."""
    return 1.0 - theta(1.0 + np.asarray(t, dtype=float))


# ---------------------------------------------------------------------------
# layer partition


def _smoothing_rule(m, count):
    x, w = legendre.leggauss(count)
    w = w * (1 - x**2) ** 2
    w = w / w.sum()
    grids = np.meshgrid(*([x] * m), indexing="ij")
    wgrids = np.meshgrid(*([w] * m), indexing="ij")
    U = np.stack([g.ravel() for g in grids], axis=-1)
    return U, np.prod(np.stack([g.ravel() for g in wgrids], axis=-1), axis=-1)


@dataclass(frozen=True)
class LayerPartition:
    """ψ_k = Θ_k - Θ_(k+1) with Θ_k = θ(2^k ρ_k).

    Without smoothing ρ_k = ρ for every k.  With ``smooth_eps`` set, ρ_k
    uses φ averaged over x̄-boxes of half-width ``smooth_eps * 2^(-k/γ)``;
    the sum still telescopes, over a window of five layers.

    Attributes
    ----------
    dom : ElementaryDomain
    k_range : (int, int) or None
        Inclusive layer range; ``None`` keeps every layer.
    smooth_eps : float or None
    flags : tuple of str
        Problems found when the partition was built for an evaluation box.
    """

    dom: ElementaryDomain
    k_range: tuple | None = None
    smooth_eps: float | None = None
    smooth_nodes: int = 6
    flags: tuple = ()

    def __post_init__(self):
        if self.k_range is not None:
            lo, hi = (int(k) for k in self.k_range)
            if lo > hi:
                raise ValueError("k_range must have k_min <= k_max")
            object.__setattr__(self, "k_range", (lo, hi))
        if self.smooth_eps is not None:
            eps = float(self.smooth_eps)
            if not eps > 0 or self.dom.lip * eps**self.dom.gamma > 0.75:
                raise ValueError("smooth_eps must satisfy 0 < Lip * eps**gamma <= 3/4")

    @property
    def window(self):
        return (-2, 2) if self.smooth_eps else (0, 1)

    def rho_k(self, x, k):
        x = np.asarray(x, dtype=float)
        if not self.smooth_eps:
            return self.dom.rho(x)
        k = np.broadcast_to(np.asarray(k), x.shape[:-1])
        U, w = _smoothing_rule(self.dom.n - 1, self.smooth_nodes)
        h = self.smooth_eps * np.exp2(-k / self.dom.gamma)
        xbar = x[..., None, :-1] + h[..., None, None] * U
        phi = np.sum(self.dom.phi(xbar) * w, axis=-1)
        return x[..., -1] - phi

    def big_theta(self, x, k):
        k = np.asarray(k)
        return theta(np.ldexp(self.rho_k(x, k), k))

    def _in_range(self, k):
        if self.k_range is None:
            return np.ones(np.shape(k), dtype=bool)
        return (k >= self.k_range[0]) & (k <= self.k_range[1])

    def psi(self, k, x):
        """ψ_k at points ``x`` for one integer ``k``."""
        x = np.asarray(x, dtype=float)
        k = np.full(x.shape[:-1], int(k))
        out = self.big_theta(x, k) - self.big_theta(x, k + 1)
        return np.where(self._in_range(k), out, 0.0)

    def active(self, x):
        """Layers that can be nonzero at each point and their ψ values.

        Returns ``(ks, vals)`` of shape (N, m); rows of points with ρ ≤ 0
        hold zeros.
        """
        x = np.atleast_2d(np.asarray(x, dtype=float))
        rho = self.dom.rho(x)
        pos = rho > 0
        lo, hi = self.window
        k0 = np.zeros(len(x), dtype=int)
        k0[pos] = dyadic_layer(rho[pos])
        ks = k0[:, None] + np.arange(lo, hi + 1)
        vals = np.zeros(ks.shape)
        if np.any(pos):
            kk = np.concatenate([ks[pos], ks[pos][:, -1:] + 1], axis=1)
            xx = np.broadcast_to(x[pos][:, None, :], kk.shape + (x.shape[-1],))
            T = self.big_theta(xx, kk)
            v = T[:, :-1] - T[:, 1:]
            vals[pos] = np.where(self._in_range(ks[pos]), v, 0.0)
        return ks, vals

    def total(self, x):
        return self.active(x)[1].sum(axis=1)

    def covered(self, x):
        """True where the k-range holds every active layer (Σψ_k = 1)."""
        x = np.atleast_2d(np.asarray(x, dtype=float))
        rho = self.dom.rho(x)
        ok = rho > 0
        if self.k_range is None:
            return ok
        k0 = np.zeros(len(x), dtype=int)
        k0[ok] = dyadic_layer(rho[ok])
        lo, hi = self.window
        return ok & (k0 + lo >= self.k_range[0]) & (k0 + hi <= self.k_range[1])


def build_layer_partition(dom, k_range=None, eval_box=None, smooth_eps=None, resolution=64):
    """Partition for ``dom``; with ``eval_box`` the k-range is checked.

    A k-range that misses layers needed at complement points of the box
    is flagged (and warned about), not refused.
    """
    part = LayerPartition(dom, k_range, smooth_eps)
    if eval_box is None or part.k_range is None:
        return part
    lo, hi = (np.asarray(v, dtype=float) for v in eval_box)
    axes = [np.linspace(l_, h_, resolution) for l_, h_ in zip(lo, hi)]
    X = np.stack(np.meshgrid(*axes, indexing="ij"), -1).reshape(-1, dom.n)
    X = X[dom.in_w(X[:, :-1]) & (dom.rho(X) > 0)]
    flags = []
    if len(X):
        k0 = dyadic_layer(dom.rho(X))
        wlo, whi = part.window
        if k0.min() + wlo < part.k_range[0]:
            flags.append(f"k_min={part.k_range[0]} too large: box needs layer {k0.min() + wlo}")
        if k0.max() + whi > part.k_range[1]:
            flags.append(f"k_max={part.k_range[1]} too small: box needs layer {k0.max() + whi}")
    for msg in flags:
        warnings.warn(msg, ExtensionWarning, stacklevel=2)
    return replace(part, flags=tuple(flags))


# ---------------------------------------------------------------------------
# derivative scaling of ψ_k


@dataclass
class ScalingFit:
    alpha: tuple
    ks: list
    sup: list
    slope: float
    expected: float
    flags: list = dc_field(default_factory=list)

    @property
    def relative_error(self):
        if self.expected == 0:
            return abs(self.slope)
        return abs(self.slope - self.expected) / self.expected

    def to_dict(self):
        return {
            "alpha": list(self.alpha),
            "ks": list(self.ks),
            "sup": list(self.sup),
            "slope": self.slope,
            "expected": self.expected,
            "relative_error": self.relative_error,
            "flags": list(self.flags),
        }


def _fd_nested(fun, X, alpha, h):
    # nested central differences, one axis at a time
    pts = [(X, 1.0)]
    for i, order in enumerate(alpha):
        for _ in range(order):
            e = np.zeros_like(X)
            e[:, i] = h[i]
            pts = [(p + s * e, c * s / (2 * h[i])) for p, c in pts for s in (1.0, -1.0)]
    return sum(c * fun(p) for p, c in pts), np.stack([p for p, _ in pts])


def psi_derivative_scaling_check(part, alpha, ks=range(2, 9), n_per_k=256, seed=0,
                                 xbar_mode="scaled", center=None, h_rel=1e-3):
    """Finite-difference sup of |D^α ψ_k| per k and its log2 slope.

    Sample points use the same uniform variates at every k: ρ runs over
    the support (2^(-k-1), 2^(-k+1)) and, in ``"scaled"`` mode, |x̄ - c|
    over [1, 2] 2^(-k/γ) so that the cusp geometry is seen at its own
    scale.  ``"fixed"`` mode samples x̄ in the finite part of W.
    """
    dom = part.dom
    g, n = dom.gamma, dom.n
    alpha = tuple(int(a) for a in alpha)
    c = np.zeros(n - 1) if center is None else np.asarray(center, dtype=float)
    rng = np.random.default_rng(seed)
    u_rho = rng.uniform(0.0, 1.0, n_per_k)
    u_rad = rng.uniform(1.0, 2.0, n_per_k)
    direc = rng.normal(size=(n_per_k, n - 1))
    direc /= np.linalg.norm(direc, axis=1, keepdims=True)
    u_fix = rng.uniform(0.0, 1.0, (n_per_k, n - 1))
    ks = [int(k) for k in ks]
    sups, flags = [], []
    for k in ks:
        if xbar_mode == "scaled":
            xbar = c + direc * (u_rad * 2.0 ** (-k / g))[:, None]
        else:
            lo = np.where(np.isfinite(dom.W[:, 0]), dom.W[:, 0], -1.0)
            hi = np.where(np.isfinite(dom.W[:, 1]), dom.W[:, 1], 1.0)
            xbar = lo + u_fix * (hi - lo)
        rho = 2.0 ** (-k - 1) * 4.0**u_rho
        X = np.concatenate([xbar, (dom.phi(xbar) + rho)[:, None]], axis=1)
        base = np.array([h_rel * 2.0 ** (-k / g)] * (n - 1) + [h_rel * 2.0**-k])
        vals = np.full(n_per_k, np.nan)
        todo = np.ones(n_per_k, dtype=bool)
        h = np.repeat(base[None], n_per_k, axis=0)
        for _ in range(6):
            if not todo.any():
                break
            d, P = _fd_nested(lambda p: part.psi(k, p), X[todo], alpha, h[todo].T)
            # stencil must stay in the complement and on one side of the axis
            side = np.sign(P[..., :-1] - c)
            ok = np.all(dom.rho(P) > 0, axis=0) & np.all(dom.in_w(P[..., :-1]), axis=0)
            ok &= np.all(side == side[:1], axis=(0, 2))
            idx = np.flatnonzero(todo)
            vals[idx[ok]] = np.abs(d[ok])
            todo[idx[ok]] = False
            h[todo] *= 0.5
        if todo.any():
            flags.append(f"k={k}: {int(todo.sum())} samples dropped, stencil leaves the layer")
        elif not np.allclose(h, base):
            flags.append(f"k={k}: stencil shrunk for some samples")
        sups.append(float(np.nanmax(vals)) if np.isfinite(vals).any() else 0.0)
    expected = sum(alpha[:-1]) / g + alpha[-1]
    good = np.array(sups) > 0
    if good.sum() >= 2:
        slope = float(np.polyfit(np.array(ks)[good], np.log2(np.array(sups)[good]), 1)[0])
    else:
        slope = 0.0
    return ScalingFit(alpha, ks, sups, slope, expected, flags)


# ---------------------------------------------------------------------------
# configuration and shifted mollification


def default_A(M, n):
    return 200.0 * (1.0 + M * n)


@dataclass(frozen=True)
class ExtensionConfig:
    """Parameters of the extension operator.

    Attributes
    ----------
    l : int
        Vanishing moments of the kernel (smoothness order of the input).
    A : float or None
        Vertical shift constant; ``None`` means 200 (1 + M n).
    Q : int
        Gauss nodes per axis of the tensor quadrature.
    k_range : (int, int) or None
    box_lo, box_hi, shape :
        Output grid (cell centred).
    scheme : str
        Interpolation scheme when f is a GridField.
    smooth_eps : float or None
        Optional x̄-smoothing of ρ inside ψ_k.
    """

    l: int = 2
    A: float | None = None
    Q: int = 16
    k_range: tuple | None = None
    box_lo: tuple | None = None
    box_hi: tuple | None = None
    shape: tuple | None = None
    scheme: str = "multilinear"
    smooth_eps: float | None = None

    def __post_init__(self):
        if int(self.Q) < MIN_Q:
            raise ValueError(f"Q must be at least {MIN_Q}")
        if int(self.l) < 0:
            raise ValueError("l must be nonnegative")
        if self.A is not None and not float(self.A) > 0:
            raise ValueError("A must be positive")

    def resolved_A(self, M, n):
        A0 = default_A(M, n)
        if self.A is None:
            return A0
        if float(self.A) < A0:
            warnings.warn(
                f"A={self.A} is below the default 200(1+Mn)={A0:g}; soundness rests on the shifted-support check",
                ExtensionWarning,
                stacklevel=3,
            )
        return float(self.A)

    def grid(self):
        if self.box_lo is None or self.box_hi is None or self.shape is None:
            raise ValueError("ExtensionConfig needs box_lo, box_hi and shape for grid output")
        return np.asarray(self.box_lo, float), np.asarray(self.box_hi, float), tuple(int(s) for s in self.shape)

    def to_dict(self):
        return {
            "l": self.l,
            "A": self.A,
            "Q": self.Q,
            "k_range": None if self.k_range is None else list(self.k_range),
            "box_lo": None if self.box_lo is None else list(self.box_lo),
            "box_hi": None if self.box_hi is None else list(self.box_hi),
            "shape": None if self.shape is None else list(self.shape),
            "scheme": self.scheme,
            "smooth_eps": self.smooth_eps,
        }

    @classmethod
    def from_dict(cls, d):
        d = dict(d)
        for key in ("k_range", "box_lo", "box_hi", "shape"):
            if d.get(key) is not None:
                d[key] = tuple(d[key])
        return cls(**d)


@lru_cache(maxsize=16)
def _rule(l, Q):
    kern = build_kernel_1d(l)
    nodes, w = kern.discrete_rule(Q, dtype=_LD)
    return kern, nodes, w


def shift_offsets(k, gamma, A, n, l, Q):
    """Offsets (2^(-k/γ) z̄, A 2^(-k) z_n) and tensor weights, long double."""
    _, nodes, w = _rule(int(l), int(Q))
    grids = np.meshgrid(*([nodes] * n), indexing="ij")
    Z = np.stack([g.ravel() for g in grids], axis=-1)
    wg = np.meshgrid(*([w] * n), indexing="ij")
    W = np.prod(np.stack([g.ravel() for g in wg], axis=-1), axis=-1)
    scale = np.empty(n, dtype=_LD)
    scale[:-1] = np.exp2(_LD(-k) / _LD(gamma))
    scale[-1] = _LD(A) * np.exp2(_LD(-k))
    return Z * scale, W


def _evaluator(f, scheme):
    if isinstance(f, TestFunction):
        return lambda Y: f.evaluate(Y, dtype=_LD)
    if isinstance(f, GridField):
        return lambda Y: np.asarray(eval_field(f, np.asarray(Y, dtype=float), scheme), dtype=_LD)
    return lambda Y: np.asarray(f(np.asarray(Y, dtype=float)), dtype=_LD)


def _float_evaluator(f, scheme):
    if isinstance(f, GridField):
        return lambda X: eval_field(f, X, scheme)
    return lambda X: np.asarray(f(X), dtype=float)


def _layer_values(X, S, W, evaluate, valid, k):
    """Σ_i W_i f(X - S_i) for all rows of X, chunked, long double."""
    n = X.shape[1]
    out = np.empty(len(X), dtype=_LD)
    chunk = max(1, _CHUNK_SAMPLES // len(W))
    for s in range(0, len(X), chunk):
        Y = X[s : s + chunk, None, :].astype(_LD) - S[None]
        flat = Y.reshape(-1, n)
        bad = ~valid(flat)
        if bad.any():
            row = s + int(np.flatnonzero(bad)[0]) // len(W)
            raise ShiftedSupportError(
                f"layer k={k}: shifted node of x={X[row].tolist()} lies outside the domain "
                f"({int(bad.sum())} of {bad.size} nodes); A too small or x outside supp ψ_k"
            )
        out[s : s + chunk] = np.sum(evaluate(flat).reshape(len(Y), -1) * W, axis=1)
    return out


def _dom_valid(dom):
    return lambda Y: dom.contains(np.asarray(Y, dtype=float))


def f_k_eval(dom, f, k, x, cfg=None):
    """Shifted mollification f_k at points ``x`` (float result).

    Raises ShiftedSupportError when a quadrature node leaves Ω.
    """
    cfg = cfg or ExtensionConfig()
    x = np.atleast_2d(np.asarray(x, dtype=float))
    A = cfg.resolved_A(dom.lip, dom.n)
    S, W = shift_offsets(int(k), dom.gamma, A, dom.n, cfg.l, cfg.Q)
    out = _layer_values(x, S, W, _evaluator(f, cfg.scheme), _dom_valid(dom), int(k))
    return out.astype(float)


@dataclass
class SupportCheck:
    ok: np.ndarray
    margin: np.ndarray
    precondition: np.ndarray
    outside: np.ndarray

    def to_dict(self):
        return {
            "ok": bool(np.all(self.ok)),
            "min_margin": float(np.min(self.margin)),
            "precondition_violations": int(np.sum(~self.precondition)),
            "outside_nodes": int(np.sum(self.outside)),
        }


def shifted_support_check(dom, k, x, cfg=None):
    """Do all shifted nodes of (k, x) land in Ω?

    ``margin`` is the smallest of φ(ȳ) - y_n and y_n - a over the shifted
    nodes y.  Points with ρ outside [2^(-k-2), 2^(-k+1)] violate the
    precondition and are reported as not ok.
    """
    cfg = cfg or ExtensionConfig()
    x = np.atleast_2d(np.asarray(x, dtype=float))
    A = cfg.resolved_A(dom.lip, dom.n)
    S, _ = shift_offsets(int(k), dom.gamma, A, dom.n, cfg.l, cfg.Q)
    Y = (x[:, None, :].astype(_LD) - S[None]).astype(float)
    gap = np.minimum(-dom.rho(Y), Y[..., -1] - dom.a)
    inside = dom.contains(Y)
    rho = dom.rho(x)
    pre = (rho >= 2.0 ** (-k - 2)) & (rho <= 2.0 ** (-k + 1))
    outside = (~inside).sum(axis=1)
    ok = pre & (outside == 0)
    return SupportCheck(ok, gap.min(axis=1), pre, outside)


# ---------------------------------------------------------------------------
# the operator on an elementary domain


@dataclass
class ExtensionResult:
    """Output of an extension run.

    ``field`` carries Tf; its mask marks nodes where Tf is defined.
    ``omega`` marks nodes of Ω, ``tail`` complement nodes where the
    k-range truncates the partition, ``depth`` the lowest x_n reached by
    a shifted node (NaN where no shift was used).
    """

    field: GridField
    omega: np.ndarray
    tail: np.ndarray
    depth: np.ndarray
    provenance: dict
    flags: list = dc_field(default_factory=list)


def _grid_nodes(lo, hi, shape):
    spacing = (hi - lo) / np.asarray(shape)
    origin = lo + 0.5 * spacing
    axes = [origin[i] + spacing[i] * np.arange(shape[i]) for i in range(len(shape))]
    return origin, spacing, np.stack(np.meshgrid(*axes, indexing="ij"), -1)


def _elementary_sum(part, X, evaluate, valid, A, cfg, values, depth):
    """Add Σ ψ_k f_k into ``values`` for the rows X (all with ρ > 0)."""
    dom = part.dom
    ks, psis = part.active(X)
    used = set()
    for k in np.unique(ks[psis != 0]):
        rows, cols = np.nonzero((ks == k) & (psis != 0))
        S, W = shift_offsets(int(k), dom.gamma, A, dom.n, cfg.l, cfg.Q)
        fk = _layer_values(X[rows], S, W, evaluate, valid, int(k))
        np.add.at(values, rows, psis[rows, cols].astype(_LD) * fk)
        low = X[rows, -1] - float(S[:, -1].max())
        np.fmin.at(depth, rows, low)
        used.add(int(k))
    return used


def extend_elementary(dom, f, cfg, part=None):
    """Tf on the output grid of ``cfg``.

    Ω nodes get f itself; complement nodes above the graph get the
    two-layer sum.  Nodes with x̄ ∉ W or x_n ≤ a are left unmasked.
    """
    lo, hi, shape = cfg.grid()
    A = cfg.resolved_A(dom.lip, dom.n)
    if part is None:
        part = build_layer_partition(dom, cfg.k_range, (lo, hi), cfg.smooth_eps)
    origin, spacing, P = _grid_nodes(lo, hi, shape)
    X = P.reshape(-1, dom.n)
    evaluate = _evaluator(f, cfg.scheme)
    in_w = dom.in_w(X[:, :-1]) & (X[:, -1] > dom.a)
    rho = dom.rho(X)
    omega = in_w & (rho < 0)
    closure = in_w & (rho <= 0)
    layer = in_w & (rho > 0)
    values = np.zeros(len(X), dtype=_LD)
    depth = np.full(len(X), np.nan)
    used = set()
    if layer.any():
        idx = np.flatnonzero(layer)
        sub = np.zeros(len(idx), dtype=_LD)
        dsub = np.full(len(idx), np.inf)
        used = _elementary_sum(part, X[idx], evaluate, _dom_valid(dom), A, cfg, sub, dsub)
        values[idx] = sub
        depth[idx] = np.where(np.isfinite(dsub), dsub, np.nan)
    tail = layer & ~part.covered(X)
    out = np.where(in_w, values.astype(float), 0.0)
    if closure.any():
        # f itself, in working precision, so the restriction is exact
        out[closure] = _float_evaluator(f, cfg.scheme)(X[closure])
    out = out.reshape(shape)
    field_ = GridField(origin, spacing, out, in_w.reshape(shape))
    kern = _rule(cfg.l, cfg.Q)[0]
    prov = {
        "operator": "elementary",
        "A": A,
        "A_default": default_A(dom.lip, dom.n),
        "Q": cfg.Q,
        "l": cfg.l,
        "k_range": None if part.k_range is None else list(part.k_range),
        "layers_used": sorted(used),
        "kernel_hash": kern.digest(),
        "box_lo": lo.tolist(),
        "box_hi": hi.tolist(),
        "shape": list(shape),
        "scheme": cfg.scheme,
        "smooth_eps": cfg.smooth_eps,
        "n_omega": int(omega.sum()),
        "n_layer": int(layer.sum()),
        "n_tail": int(tail.sum()),
    }
    return ExtensionResult(field_, omega.reshape(shape), tail.reshape(shape), depth.reshape(shape),
                           prov, list(part.flags))


# ---------------------------------------------------------------------------
# atlas pasting


def atlas_cutoffs(atlas, s0=0.5):
    """Cutoffs ψ_j = η_j / sqrt(N(Σ η_i²)) with tensor smoothstep η_j.

    η_j rises from 0 on ∂V_j to 1 at depth d, so Σ η_j² ≥ 1 on the d-cores
    and, when the cores cover Ω, Σ ψ_j² = 1 on Ω.  N(g) = g + s0 θ(1 + g/s0)
    equals g for g ≥ s0 and stays positive, which keeps ψ_j smooth where
    the cores end.
    """
    d = atlas.d

    def eta(j, x):
        c = atlas.charts[j]
        y = c.to_chart(x)
        t = np.minimum((y - c.lo) / d, (c.hi - y) / d)
        return np.prod(smoothstep(t), axis=-1)

    def psi(j, x):
        g = sum(eta(i, x) ** 2 for i in range(atlas.s))
        return eta(j, x) / np.sqrt(g + s0 * theta(1.0 + g / s0))

    return psi, eta


def extend_atlas(atlas, f, cfg, report=None):
    """Tf = Σ_j ψ_j T_j(f ψ_j) on the output grid of ``cfg``.

    Each T_j acts in chart coordinates on the chart's elementary domain,
    with fψ_j extended by zero outside V_j; a shifted node inside V_j but
    above the chart graph is a hard error.  ``report`` (an AtlasReport)
    must have passed, including the covering conditions.
    """
    if report is not None and not (report.passed and report.covering_ok):
        raise ValueError("atlas_validate must pass (structure and covering) before extension")
    lo, hi, shape = cfg.grid()
    n, g = atlas.n, atlas.gamma
    A = cfg.resolved_A(atlas.M, n)
    psi, _ = atlas_cutoffs(atlas)
    origin, spacing, P = _grid_nodes(lo, hi, shape)
    X = P.reshape(-1, n)
    evaluate = _evaluator(f, cfg.scheme)
    total = np.zeros(len(X), dtype=_LD)
    depth = np.full(len(X), np.nan)
    flags, used = [], set()
    k_min = None if cfg.k_range is None else cfg.k_range[0]
    for j, chart in enumerate(atlas.charts):
        pj = psi(j, X)
        act = pj > 0
        if not act.any():
            continue
        Xa = X[act]
        Ya = chart.to_chart(Xa)
        vals = np.zeros(len(Xa), dtype=_LD)
        if chart.is_full:
            # V_j ⊂ Ω: T_j is the identity on the cuboid
            total[act] += pj[act].astype(_LD) * evaluate(Xa.astype(_LD)) * pj[act]
            continue
        dom_j = chart.elementary(g)
        part = LayerPartition(dom_j, cfg.k_range, cfg.smooth_eps)
        inside = chart.chart_contains(Ya) | (dom_j.rho(Ya) <= 0)

        def g_eval(Yc, j=j, chart=chart):
            Yc = np.asarray(Yc, dtype=_LD)
            xs = chart.from_chart(Yc.astype(float))
            w = psi(j, xs)
            out = np.zeros(len(Yc), dtype=_LD)
            nz = w > 0
            if nz.any():
                out[nz] = evaluate(xs[nz].astype(_LD)) * w[nz]
            return out

        def valid(Yc, chart=chart, dom_j=dom_j):
            Yf = np.asarray(Yc, dtype=float)
            # inside the open cuboid the node must be below the graph
            return ~chart.in_cuboid(Yf) | (dom_j.rho(Yf) < 0)

        if inside.any():
            vals[inside] = g_eval(Ya[inside])
        lay = ~inside
        if lay.any():
            sub = np.zeros(int(lay.sum()), dtype=_LD)
            dsub = np.full(int(lay.sum()), np.inf)
            used |= _elementary_sum(part, Ya[lay], g_eval, valid, A, cfg, sub, dsub)
            vals[lay] = sub
            finite = np.isfinite(dsub)
            dl = np.full(len(dsub), np.nan)
            dl[finite] = dsub[finite]
            idx = np.flatnonzero(act)[lay]
            depth[idx] = np.fmin(depth[idx], dl)
        total[act] += pj[act].astype(_LD) * vals
        depth_needed = A * 2.0 ** (-(k_min if k_min is not None else min(used or {0})))
        if depth_needed > chart.hi[-1] - chart.lo[-1]:
            flags.append(
                f"chart {j}: shift depth A*2^(-k_min)={depth_needed:.3g} exceeds the chart height "
                f"{chart.hi[-1] - chart.lo[-1]:.3g}; deep samples see the zero extension"
            )
    omega = atlas_contains(atlas, X)
    out = GridField(origin, spacing, total.astype(float).reshape(shape), np.ones(shape, dtype=bool))
    kern = _rule(cfg.l, cfg.Q)[0]
    prov = {
        "operator": "atlas",
        "charts": atlas.s,
        "A": A,
        "A_default": default_A(atlas.M, n),
        "Q": cfg.Q,
        "l": cfg.l,
        "k_range": None if cfg.k_range is None else list(cfg.k_range),
        "layers_used": sorted(used),
        "kernel_hash": kern.digest(),
        "box_lo": lo.tolist(),
        "box_hi": hi.tolist(),
        "shape": list(shape),
        "n_omega": int(omega.sum()),
    }
    for msg in flags:
        warnings.warn(msg, ExtensionWarning, stacklevel=2)
    return ExtensionResult(out, omega.reshape(shape), np.zeros(shape, dtype=bool), depth.reshape(shape),
                           prov, flags)


# ---------------------------------------------------------------------------
# operator norm


def check_index_bound(alpha, gamma, l):
    """Refuse D^α of Tf unless |ᾱ| + γ α_n ≤ γ l."""
    alpha = tuple(int(a) for a in alpha)
    lhs = sum(alpha[:-1]) + gamma * alpha[-1]
    if lhs > gamma * l + 1e-12:
        raise ValueError(
            f"multi-index {alpha} violates |ᾱ| + γ α_n ≤ γ l ({lhs:g} > {gamma * l:g})"
        )
    return True


@dataclass
class OperatorNormReport:
    names: list
    resolutions: list
    ratios: dict  # name -> list over resolutions
    numerators: dict
    denominators: dict
    target_order: int
    max_ratio: float
    variation: dict  # name -> (max - min) / min

    @property
    def max_variation(self):
        return max(self.variation.values()) if self.variation else 0.0

    def to_dict(self):
        return {
            "names": self.names,
            "resolutions": self.resolutions,
            "ratios": self.ratios,
            "numerators": self.numerators,
            "denominators": self.denominators,
            "target_order": self.target_order,
            "max_ratio": self.max_ratio,
            "variation": self.variation,
            "max_variation": self.max_variation,
        }


def _exact_derivatives(f, grid, alphas):
    if not isinstance(f, TestFunction) or f.derivative(alphas[0]) is None:
        return None
    pts = grid.points()
    return {a: grid.with_values(f.derivative(a)(pts)) for a in alphas}


def operator_norm_estimate(dom, family, l, p, w, cfg, omega_box, resolutions=(128, 192, 256),
                           centers=None, radii=None):
    """Ratio ‖Tf‖_{W^{[γl],φ_γ}_{p,1}(box)} / ‖f‖_{W^{l,φ}_{p,1}(Ω)} per f.

    Both norms use the Euclidean metric.  The output box comes from
    ``cfg`` with N cells per axis; Ω is sampled on ``omega_box`` with
    square cells, N along its shortest side, so that the smallest radius
    resolves the same scale everywhere.  Derivatives of f are exact
    when f has a sympy form; derivatives of Tf are finite differences.
    """
    family = list(family)
    if not family:
        raise ValueError("operator norm needs a nonempty family")
    g = dom.gamma
    target = int(math.floor(g * l + 1e-12))
    m1 = GammaMetric(1.0, dom.n)
    wg = w.transform_gamma(g)
    alphas_t = multi_indices(dom.n, target)
    for a in alphas_t:
        check_index_bound(a, g, l)
    alphas_f = multi_indices(dom.n, l)
    names = [getattr(f, "name", f"f{i}") for i, f in enumerate(family)]
    ratios = {nm: [] for nm in names}
    nums = {nm: [] for nm in names}
    dens = {nm: [] for nm in names}
    olo, ohi = (np.asarray(v, float) for v in omega_box)
    ext = ohi - olo
    for N in resolutions:
        shape = (int(N),) * dom.n
        cfg_n = replace(cfg, shape=shape)
        # isotropic cells, N of them along the shortest side of the Ω box
        oshape = tuple(int(math.ceil(e * N / ext.min() - 1e-9)) for e in ext)
        for nm, f in zip(names, family):
            fg = GridField.on_box(f, olo, ohi, oshape, dom.contains)
            den = sobolev_morrey_norm(fg, l, p, w, m1, centers=centers, radii=radii,
                                      alphas=alphas_f, derivatives=_exact_derivatives(f, fg, alphas_f)).value
            if den == 0:
                raise ValueError(f"zero denominator for {nm}; exclude constant-zero functions")
            res = extend_elementary(dom, f, cfg_n)
            num = sobolev_morrey_norm(res.field, target, p, wg, m1, centers=centers, radii=radii,
                                      alphas=alphas_t).value
            nums[nm].append(num)
            dens[nm].append(den)
            ratios[nm].append(num / den)
    variation = {nm: (max(r) - min(r)) / min(r) for nm, r in ratios.items()}
    max_ratio = max(max(r) for r in ratios.values())
    return OperatorNormReport(names, list(resolutions), ratios, nums, dens, target, max_ratio, variation)
