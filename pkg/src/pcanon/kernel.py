"""Kernel selector: compiled extension when available, pure Python otherwise.

Set PCANON_PURE_KERNEL=1 in the environment to force the pure-Python
twin (the benchmark and the twin-agreement tests use this).  The chosen
backend's name is exposed as BACKEND.
"""

import os

__all__ = [
    'BACKEND', 'NBITS', 'FIELD_MASK',
    'poly_add', 'poly_sub', 'poly_neg', 'poly_scale', 'poly_mul',
    'poly_mul_term', 'poly_div_linear', 'poly_div_exact',
    'poly_subst', 'poly_eval_ones',
    'mat_rank_mod_p', 'mat_rank_field',
]

if os.environ.get('PCANON_PURE_KERNEL'):
    from . import _kernel_py as _impl
    BACKEND = 'pure'
else:
    try:
        from . import _kernel as _impl  # type: ignore[attr-defined]
        BACKEND = 'compiled'
    except ImportError:
        from . import _kernel_py as _impl
        BACKEND = 'pure'

NBITS = _impl.NBITS
FIELD_MASK = _impl.FIELD_MASK
poly_add = _impl.poly_add
poly_sub = _impl.poly_sub
poly_neg = _impl.poly_neg
poly_scale = _impl.poly_scale
poly_mul = _impl.poly_mul
poly_mul_term = _impl.poly_mul_term
poly_div_linear = _impl.poly_div_linear
poly_div_exact = _impl.poly_div_exact
poly_subst = _impl.poly_subst
poly_eval_ones = _impl.poly_eval_ones
mat_rank_mod_p = _impl.mat_rank_mod_p
mat_rank_field = _impl.mat_rank_field
