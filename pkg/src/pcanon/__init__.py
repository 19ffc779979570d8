"""p-canonical bases of Hecke algebras and antispherical modules.

The package computes the p-canonical basis of the Hecke algebra of a
crystallographic Coxeter system (and of its antispherical modules) by
modelling the diagrammatic Hecke category inside a localised matrix
category, where every object is a list of group elements and every
morphism an honest matrix of rational functions in the simple roots.

Entry points:

* CoxeterSystem - groups from generalized Cartan matrices.
* HeckeAlgebra / AntisphericalModule - exact v-adic linear algebra,
  Kazhdan-Lusztig bases, bar involution.
* run_main / run_simple (pcanon.pipeline, pcanon.intersection) - the
  two p-canonical algorithms.
* pcanon.cli - the command-line front end (installed as `pcanon`).
"""

from .coxeter import CoxeterSystem, CoxElt, PRESETS
from .ratfunc import LaurentPoly, MultiPoly, RatFunc, ORing
from . import errors

__version__ = '0.1.0'

__all__ = [
    'CoxeterSystem', 'CoxElt', 'PRESETS',
    'LaurentPoly', 'MultiPoly', 'RatFunc', 'ORing',
    'errors', '__version__',
]
