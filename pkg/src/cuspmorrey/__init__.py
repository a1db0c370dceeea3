"""Numerical checks of embedding and extension theorems for Sobolev-Morrey
spaces on domains with Hölder (cusp-type) boundaries.

Submodules: ``geometry`` (anisotropic metric, domains, measures, atlases),
``fields`` (grid functions and test functions), ``norms`` (Morrey,
Campanato, Sobolev-Morrey estimators), ``mollifier`` (vanishing-moment
kernels), ``extension`` (the layered extension operator), ``verify``
(theorem checks) and ``cli`` (config-driven runner).
"""

__version__ = "0.1.0"
