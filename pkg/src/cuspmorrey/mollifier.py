"""Smooth kernels on (1/2, 1) with unit mass and vanishing moments.

The kernel is a bump ``b(t) = exp(-1/((t - 1/2)(1 - t)))`` modulated by a
polynomial ``P`` of degree ``l`` chosen so that

    int omega = 1,    int t**k omega(t) dt = 0  for k = 1..l.

Equivalently ``int q(t) omega(t) dt = q(0)`` for every polynomial ``q`` of
degree at most ``l``, which is how the moment system is posed: in a Legendre
basis of the variable ``u = 4t - 3`` the Gram matrix of ``b`` is symmetric
positive definite and the right-hand side is ``L_k(-3)``.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field

import numpy as np
from numpy.polynomial import legendre

__all__ = [
    "MollifierKernel",
    "build_kernel_1d",
    "bump",
    "kernel_moment",
    "oracle_moment",
    "tensor_kernel_eval",
    "gauss_rule",
]

L_MAX = 6
MONOMIAL_L_MAX = 3
PRODUCTION_NODES = 64
DISCRETE_TOL = 1e-10
# b is rescaled so that its maximum (at t = 3/4) equals one.
_BUMP_SHIFT = 16.0


def bump(t, dtype=float):
    """Rescaled C^inf bump on (1/2, 1), zero elsewhere."""
    t = np.asarray(t, dtype=dtype)
    out = np.zeros_like(t)
    inside = (t > 0.5) & (t < 1.0)
    ti = t[inside]
    out[inside] = np.exp(_BUMP_SHIFT - 1 / ((ti - 0.5) * (1 - ti)))
    return out


def gauss_rule(n, lo=0.5, hi=1.0):
    """Gauss-Legendre nodes and weights on ``(lo, hi)``."""
    x, w = legendre.leggauss(n)
    half = 0.5 * (hi - lo)
    return lo + half * (x + 1.0), half * w


_LD = np.longdouble


def _to_u(t):
    return 4 * np.asarray(t, dtype=_LD) - 3


def _solve_modulation(l, nodes, weights, basis):
    # Gram matrix and residuals in extended precision; |omega| integrates to
    # roughly 10**l, so plain double loses the 1e-10 moment accuracy at l >= 4.
    nodes = np.asarray(nodes, dtype=_LD)
    bw = np.asarray(weights, dtype=_LD) * bump(nodes, dtype=_LD)
    if basis == "legendre":
        V = legendre.legvander(_to_u(nodes), l)  # (N, l+1)
        rhs = legendre.legvander(np.array([-3], dtype=_LD), l)[0]
    elif basis == "monomial":
        if l > MONOMIAL_L_MAX:
            raise ValueError(
                f"monomial basis is refused above l={MONOMIAL_L_MAX} (conditioning)"
            )
        V = np.vander(nodes, l + 1, increasing=True)
        rhs = np.zeros(l + 1, dtype=_LD)
        rhs[0] = 1
    else:
        raise ValueError(f"unknown basis {basis!r}")
    gram = (V * bw[:, None]).T @ V
    cond = float(np.linalg.cond(gram.astype(float)))
    coeffs = _solve_ld(gram, rhs)
    for _ in range(2):
        coeffs = coeffs - _solve_ld(gram, gram @ coeffs - rhs)
    return coeffs, cond


def _solve_ld(A, b):
    # Gaussian elimination with partial pivoting; LAPACK has no long double
    A = np.array(A, dtype=_LD)
    x = np.array(b, dtype=_LD)
    n = len(x)
    for i in range(n):
        piv = i + int(np.argmax(np.abs(A[i:, i])))
        A[[i, piv]] = A[[piv, i]]
        x[[i, piv]] = x[[piv, i]]
        f = A[i + 1 :, i] / A[i, i]
        A[i + 1 :] -= f[:, None] * A[i]
        x[i + 1 :] -= f * x[i]
    for i in range(n - 1, -1, -1):
        x[i] = (x[i] - A[i, i + 1 :] @ x[i + 1 :]) / A[i, i]
    return x


@dataclass(frozen=True)
class MollifierKernel:
    """One-dimensional kernel ``omega = b * P`` supported in (1/2, 1).

    Attributes
    ----------
    l : int
        Number of vanishing moments (orders 1..l).
    coeffs : ndarray
        Coefficients of ``P`` in the chosen basis.
    basis : str
        ``"legendre"`` (in ``u = 4t - 3``) or ``"monomial"`` (in ``t``).
    nodes, weights : ndarray
        Production quadrature rule on (1/2, 1).
    condition : float
        Condition number of the moment system that was solved.
    """

    l: int
    coeffs: np.ndarray
    basis: str
    nodes: np.ndarray = field(repr=False)
    weights: np.ndarray = field(repr=False)
    condition: float = float("nan")

    def modulation(self, t):
        t = np.asarray(t, dtype=_LD)
        if self.basis == "legendre":
            return legendre.legval(_to_u(t), self.coeffs)
        return np.polynomial.polynomial.polyval(t, self.coeffs)

    def evaluate(self, t, dtype=float):
        """Kernel values, computed in extended precision and cast to ``dtype``."""
        t = np.asarray(t, dtype=_LD)
        return (bump(t, dtype=_LD) * self.modulation(t)).astype(dtype)

    def __call__(self, t):
        return self.evaluate(t)

    def discrete_rule(self, q, dtype=float):
        """Q-node rule whose discrete moments 0..l are exact to rounding.

        The modulation is re-solved against the Q-node moments of ``b`` so
        that ``sum(w * t**k) == delta_k0`` holds for the discrete rule
        itself; this is what makes mollified translates reproduce
        polynomials exactly even with few nodes.
        """
        if q == len(self.nodes):
            w = self.weights.astype(_LD) * self.evaluate(self.nodes, dtype=_LD)
            return self.nodes.astype(dtype), w.astype(dtype)
        nodes, weights = gauss_rule(q)
        coeffs, _ = _solve_modulation(self.l, nodes, weights, self.basis)
        other = MollifierKernel(self.l, coeffs, self.basis, nodes, weights)
        w = weights.astype(_LD) * other.evaluate(nodes, dtype=_LD)
        # with few nodes only a handful carry bump weight; refuse if the
        # discrete moment system could not be met
        err = max(abs(np.sum(w * nodes**j) - (j == 0)) for j in range(self.l + 1))
        if err > DISCRETE_TOL:
            raise ValueError(
                f"{q} nodes cannot reproduce {self.l} vanishing moments (moment error {err:.1e})"
            )
        return nodes.astype(dtype), w.astype(dtype)

    def to_dict(self):
        return {
            "l": self.l,
            "basis": self.basis,
            # extended-precision coefficients survive the round trip as strings
            "coeffs": [_ld_str(c) for c in self.coeffs],
            "nodes": [float(t) for t in self.nodes],
            "weights": [float(w) for w in self.weights],
            "condition": self.condition,
        }

    @classmethod
    def from_dict(cls, d):
        return cls(
            int(d["l"]),
            np.array([_LD(str(c)) for c in d["coeffs"]], dtype=_LD),
            d["basis"],
            np.asarray(d["nodes"], dtype=float),
            np.asarray(d["weights"], dtype=float),
            float(d.get("condition", float("nan"))),
        )

    def digest(self):
        """Short content hash used for provenance records."""
        payload = json.dumps(
            {"l": self.l, "basis": self.basis, "coeffs": [_ld_str(c) for c in self.coeffs]},
            sort_keys=True,
        )
        return hashlib.sha256(payload.encode()).hexdigest()[:16]


def _ld_str(x):
    return np.format_float_scientific(_LD(x), precision=21, unique=False)


def build_kernel_1d(l, basis="legendre", n_nodes=PRODUCTION_NODES):
    """Build the kernel with ``l`` vanishing moments.

    Raises
    ------
    ValueError
        If ``l`` is outside ``0..6``; the message carries the condition
        number the system would have had.
    """
    l = int(l)
    if l < 0:
        raise ValueError("l must be nonnegative")
    nodes, weights = gauss_rule(n_nodes)
    if l > L_MAX:
        _, cond = _solve_modulation(l, nodes, weights, "legendre")
        raise ValueError(
            f"l={l} exceeds the supported maximum {L_MAX}; moment system condition number {cond:.3e}"
        )
    coeffs, cond = _solve_modulation(l, nodes, weights, basis)
    return MollifierKernel(l, coeffs, basis, nodes, weights, cond)


def kernel_moment(kernel, j):
    """Production-rule value of ``int t**j omega(t) dt``."""
    t = np.asarray(kernel.nodes, dtype=_LD)
    terms = np.asarray(kernel.weights, dtype=_LD) * kernel.evaluate(t, dtype=_LD) * t ** int(j)
    return float(np.sum(terms))


def _gauss_panel(fun, lo, hi, n):
    t, w = gauss_rule(n, lo, hi)
    return np.sum(np.asarray(w, dtype=_LD) * fun(t))


def oracle_moment(kernel, j, n_nodes=128, atol=1e-14, max_depth=12):
    """Adaptive-bisection Gauss quadrature of ``int t**j omega(t) dt``.

    Independent of the production rule: panels of ``n_nodes`` Gauss points
    are bisected until the two-panel sum agrees with the one-panel value to
    ``atol``.
    """
    j = int(j)

    def fun(t):
        t = np.asarray(t, dtype=_LD)
        return kernel.evaluate(t, dtype=_LD) * t**j

    def recurse(lo, hi, whole, depth):
        mid = 0.5 * (lo + hi)
        left = _gauss_panel(fun, lo, mid, n_nodes)
        right = _gauss_panel(fun, mid, hi, n_nodes)
        if depth >= max_depth or abs(left + right - whole) <= atol:
            return left + right
        return recurse(lo, mid, left, depth + 1) + recurse(mid, hi, right, depth + 1)

    return float(recurse(0.5, 1.0, _gauss_panel(fun, 0.5, 1.0, n_nodes), 0))


def tensor_kernel_eval(kernels, z):
    """Evaluate ``omega(z) = prod_i omega_i(z_i)`` for points ``z[..., i]``."""
    z = np.asarray(z, dtype=float)
    if z.shape[-1] != len(kernels):
        raise ValueError(f"point dimension {z.shape[-1]} does not match {len(kernels)} kernels")
    out = np.ones(z.shape[:-1])
    for i, k in enumerate(kernels):
        out = out * k(z[..., i])
    return out
