"""
Poincaré ratios and the dyadic-gap lemma
========================================

On convex sets the mean oscillation is controlled by the gradient with an
explicit constant.  On the cusp the fitted power of r that controls it
plays the role of the Poincaré exponent.  The geometric lemma bounds how
far apart the boundary layers met by a small ball can be.
"""

import numpy as np

from cuspmorrey.fields import function_catalog
from cuspmorrey.geometry import box_domain, catalog_domains, cusp_domain
from cuspmorrey.verify import check_geometric_lemma, poincare_ratio, sample_lemma_configs

square = box_domain([0, 0], [1, 1], 1.0)
rep = poincare_ratio(square, function_catalog(), 2, samples=300, resolution=64)
print(f"unit square: {rep.samples} samples, {rep.violations} violations, max ratio {rep.max_convex_ratio:.3f}, "
      f"fitted exponent {rep.eta_fit:.3f}")

rep = poincare_ratio(cusp_domain(0.5, W=[[-1, 1]], a=-2), function_catalog(), 2, resolution=64)
print(f"cusp: fitted exponent {rep.eta_fit:.3f}")

for name in ("outer_cusp_0.5", "outer_cusp_0.667"):
    dom = catalog_domains()[name][0]
    x, r, eta = sample_lemma_configs(dom, 300, np.random.default_rng(0))
    lem = check_geometric_lemma(dom, x, r, eta)
    w = lem.witnesses
    print(f"{name}: constant {lem.predicted:.3f}, {w['tested']} configs, violations {w['violations_proof']}, "
          f"diameter constant S = {w['S']:.3f}")
