"""
Balls of the anisotropic metric on a cusp
=========================================

The outer cusp {x2 < -|x1|**(1/2)} is the model C^{0,1/2} domain.  Its
natural balls are boxes of half-widths r**2 (horizontal) and r (vertical),
so their measure scales like r**3 rather than r**2.
"""

import numpy as np

from cuspmorrey.geometry import GammaMetric, ball_intersection_measure, cusp_domain, fit_measure_exponent

dom = cusp_domain(0.5)
m = GammaMetric(0.5)
print("effective dimension n_gamma =", m.n_gamma)

# away from the boundary the ball lies inside and the measure is 4 r^3
est = ball_intersection_measure(dom, np.array([0.0, -5.0]), 0.3, m, resolution=256)
print("interior ball:", est.value, "closed form:", 4 * 0.3**3)

# at the vertex only the part under the spike survives: 2 r^3 / 3
est = ball_intersection_measure(dom, np.zeros(2), 0.25, m, resolution=256)
print("vertex ball:  ", est.value, "+/-", est.error, "closed form:", 2 * 0.25**3 / 3)

# the log-log slope over two decades recovers n_gamma
fit = fit_measure_exponent(dom, np.zeros(2), np.geomspace(1e-3, 1e-1, 12), m)
print("fitted exponent at the vertex:", round(fit.slope, 4))

# gamma = 1 boxes see the same thin spike: the vertex measure is still
# (2/3) r^3, far below any lower bound of the form M r^2
fit1 = fit_measure_exponent(dom, np.zeros(2), np.geomspace(1e-2, 1.0, 12), GammaMetric(1.0), resolution=512)
print("slope with gamma = 1 boxes:", round(fit1.slope, 4))
