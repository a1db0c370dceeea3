"""
Kernels with vanishing moments
==============================

The extension operator averages f against a kernel supported in (1/2, 1)
with unit mass and l vanishing moments, so that polynomials of degree l
pass through unchanged.
"""

import numpy as np

from cuspmorrey.mollifier import build_kernel_1d, kernel_moment, oracle_moment

for l in range(6):
    k = build_kernel_1d(l)
    moments = [oracle_moment(k, j) for j in range(l + 2)]
    print(f"l={l}  mass-1={moments[0] - 1:+.1e}  max|m_1..m_l|={max(map(abs, moments[1:l + 1]), default=0):.1e}"
          f"  m_(l+1)={moments[-1]:+.4f}  hash={k.digest()}")

# the production quadrature and the adaptive oracle agree
k = build_kernel_1d(3)
print("production vs oracle, j=4:", kernel_moment(k, 4), oracle_moment(k, 4))

# shifting a cubic by s*t and averaging gives the cubic back
t = np.asarray(k.nodes, dtype=np.longdouble)
w = np.asarray(k.weights, dtype=np.longdouble) * k.evaluate(t, dtype=np.longdouble)
q = np.poly1d([1.0, -2.0, 0.5, 3.0])
for s in (1.0, 2.0**-5, 2.0**-10):
    print(f"s={s:<10g} average={float(np.sum(w * q(0.4 - s * t))):.12f}  q(0.4)={q(0.4):.12f}")
