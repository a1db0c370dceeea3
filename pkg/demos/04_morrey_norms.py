"""
Morrey and Campanato quantities on a grid
=========================================

Norms are suprema over centres and radii of weighted local averages.
For lambda below n_gamma the Morrey norm and the L^p norm plus the
Campanato seminorm are comparable.
"""

from cuspmorrey.fields import function_catalog
from cuspmorrey.geometry import GammaMetric, cusp_domain
from cuspmorrey.norms import WeightSpec, campanato_seminorm, morrey_norm
from cuspmorrey.verify import _grid, _region, check_morrey_campanato_equivalence

dom = cusp_domain(0.5, W=[[-1.0, 1.0]], a=-2.0)
m = GammaMetric(0.5)
contains, lo, hi = _region(dom, None)
w = WeightSpec.power(1.0)
for f in function_catalog()[:4]:
    g = _grid(f, contains, lo, hi, 48)
    mo, ca = morrey_norm(g, 2, w, m), campanato_seminorm(g, 2, w, m)
    print(f"{f.name:10s} morrey={mo.value:.4f} (r*={mo.argmax_radius:.3g})  campanato={ca.value:.4f}")

rep = check_morrey_campanato_equivalence(dom, function_catalog(), 2, 1.0, resolution=32)
print("ratio bracket, coarse:", rep.witnesses["coarse_bracket"], " refined:", rep.witnesses["bracket"])
