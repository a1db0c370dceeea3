"""
Hölder embeddings and their exponents
=====================================

Each embedding predicts a Hölder exponent from (n, gamma, l, p, lambda).
The checks sample pairs, measure |f(x) - f(y)| / dist**alpha and ask that
its supremum stays bounded as pairs get denser and closer.
"""

import warnings

from cuspmorrey.extension import ExtensionConfig
from cuspmorrey.fields import function_catalog, make_test_function
from cuspmorrey.geometry import box_domain, cusp_domain
from cuspmorrey.verify import (
    HypothesisError,
    Refinement,
    check_campanato_embedding,
    check_extension_corollary,
    check_sobolev_morrey_embedding,
    classical_limits,
)

cusp = cusp_domain(0.5, W=[[-1.0, 1.0]], a=-2.0)
quick = Refinement(pairs=2000, resolution=32)
cat = {f.name: f for f in function_catalog()}


def gp(beta):
    return make_test_function({"kind": "gamma_power", "center": [0.0, -1.0], "exponent": beta, "gamma": 0.5})


for beta in (0.5, 0.25):
    rep = check_campanato_embedding(cusp, gp(beta), 1 if beta == 0.5 else 2, 3.5 if beta == 0.5 else 4.0,
                                    refine=quick)
    print(f"Campanato, gamma_power {beta}: predicted {rep.predicted}, growth {rep.witnesses['growth']}, "
          f"passed={rep.passed}")

try:
    check_campanato_embedding(cusp, cat["x1"], 1, 2.0)
except HypothesisError as exc:
    print("refused:", exc)

rep = check_sobolev_morrey_embedding(cusp, cat["wave"], 2, 4, 1.0, refine=quick)
print("Sobolev-Morrey (segment pairs): exponent", rep.predicted, "passed", rep.passed)
rep = check_sobolev_morrey_embedding(box_domain([0, 0], [1, 1], 0.5), cat["sin*cos"], 1, 4, 2.0, mode="barozzi",
                                     refine=quick)
print("Sobolev-Morrey (parallelepiped, all pairs): exponent", rep.predicted, "passed", rep.passed)

cfg = ExtensionConfig(l=2, A=8.0, box_lo=(-0.25, -0.5), box_hi=(0.25, 0.0), shape=(16, 16))
with warnings.catch_warnings():
    warnings.simplefilter("ignore")
    rep = check_extension_corollary(cusp_domain(0.5, W=[[-1.0, 1.0]], a=-6.0), cat["x1*x2"], 2, 2, 1.5, cfg,
                                    refine=quick)
print("via extension: exponent", rep.predicted, "restriction exact", rep.witnesses["restriction_exact"],
      "passed", rep.passed)

for name, row in classical_limits().items():
    print(f"{name:15s} at gamma=1: {row['at_gamma_1']}  classical: {row['classical']}  exact={row['exact']}")
