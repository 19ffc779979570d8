"""Pure-Python polynomial and matrix kernels.

Polynomials are dicts mapping a packed exponent key to a nonzero
rational coefficient.  A key packs one 16-bit field per variable,
variable i occupying bits [16*i, 16*i+16).  Monomial multiplication is
then integer addition of keys, and plain integer comparison of keys is
a monomial order (lex with the last variable most significant), which
is all the exact-division routines need.

Coefficients are opaque: anything with exact +, -, *, / and truthiness
works (gmpy2.mpq in practice, fractions.Fraction as fallback).

This module has a compiled twin, pcanon._kernel, generated from
_kernel.pyx.  The two must stay behaviourally identical; the test suite
compares them on random inputs.
"""

NBITS = 16
FIELD_MASK = (1 << NBITS) - 1

__all__ = [
    'NBITS', 'FIELD_MASK',
    'poly_add', 'poly_sub', 'poly_neg', 'poly_scale', 'poly_mul',
    'poly_mul_term', 'poly_div_linear', 'poly_div_exact',
    'poly_subst', 'poly_eval_ones',
    'mat_rank_mod_p', 'mat_rank_field',
]


def poly_add(a, b):
    """Sum of two polynomial dicts."""
    if len(b) > len(a):
        a, b = b, a
    out = dict(a)
    for k, c in b.items():
        s = out.get(k)
        if s is None:
            out[k] = c
        else:
            s = s + c
            if s:
                out[k] = s
            else:
                del out[k]
    return out


def poly_neg(a):
    """Negation of a polynomial dict."""
    return {k: -c for k, c in a.items()}


def poly_sub(a, b):
    """Difference a - b of two polynomial dicts."""
    out = dict(a)
    for k, c in b.items():
        s = out.get(k)
        if s is None:
            out[k] = -c
        else:
            s = s - c
            if s:
                out[k] = s
            else:
                del out[k]
    return out


def poly_scale(a, c):
    """Product of a polynomial dict with a scalar."""
    if not c:
        return {}
    return {k: v * c for k, v in a.items()}


def poly_mul_term(a, key, c):
    """Product of a polynomial dict with the monomial c * x^key."""
    if not c:
        return {}
    return {k + key: v * c for k, v in a.items()}


def poly_mul(a, b):
    """Product of two polynomial dicts."""
    if not a or not b:
        return {}
    if len(b) > len(a):
        a, b = b, a
    out = {}
    for kb, cb in b.items():
        for ka, ca in a.items():
            k = ka + kb
            c = ca * cb
            s = out.get(k)
            if s is None:
                out[k] = c
            else:
                s = s + c
                if s:
                    out[k] = s
                else:
                    del out[k]
    return out


def poly_div_linear(num, shift, pivot_coeff, rest):
    """Exact division of num by the linear form
    pivot_coeff * x_j + rest, where shift = NBITS*j and rest is a tuple
    of (key, coeff) terms not involving x_j.  Returns the quotient dict,
    or None when the division is not exact.

    Works by peeling monomials of maximal x_j-degree: the quotient terms
    at x_j-degree e-1 are exactly the work terms at degree e divided by
    pivot_coeff * x_j, and subtracting their product with the divisor
    only feeds lower x_j-degrees.
    """
    if not num:
        return {}
    pivot_key = 1 << shift
    work = dict(num)
    quot = {}
    while work:
        emax = 0
        for k in work:
            e = (k >> shift) & FIELD_MASK
            if e > emax:
                emax = e
        if emax == 0:
            return None
        level = [k for k in work if ((k >> shift) & FIELD_MASK) == emax]
        for k in level:
            qk = k - pivot_key
            qc = work.pop(k) / pivot_coeff
            quot[qk] = qc
            for rk, rc in rest:
                kk = qk + rk
                s = work.get(kk)
                t = qc * rc
                if s is None:
                    work[kk] = -t
                else:
                    s = s - t
                    if s:
                        work[kk] = s
                    else:
                        del work[kk]
    return quot


def poly_div_exact(num, den, nvars):
    """Exact division of num by an arbitrary polynomial dict den.
    Returns the quotient dict, or None when the division is not exact.

    Uses the packed-key integer order as monomial order: the leading
    work term must be divisible by the leading den term at every step,
    which characterizes exact divisibility.
    """
    if not num:
        return {}
    if not den:
        raise ZeroDivisionError('polynomial division by zero')
    dlead = max(den)
    dc = den[dlead]
    dtail = [(k, c) for k, c in den.items() if k != dlead]
    work = dict(num)
    quot = {}
    while work:
        wlead = max(work)
        qk = wlead - dlead
        if qk < 0:
            return None
        shift = 0
        for _ in range(nvars):
            if ((qk >> shift) & FIELD_MASK) + ((dlead >> shift) & FIELD_MASK) \
                    != (wlead >> shift) & FIELD_MASK:
                return None
            shift += NBITS
        qc = work.pop(wlead) / dc
        quot[qk] = qc
        for rk, rc in dtail:
            kk = qk + rk
            s = work.get(kk)
            t = qc * rc
            if s is None:
                work[kk] = -t
            else:
                s = s - t
                if s:
                    work[kk] = s
                else:
                    del work[kk]
    return quot


def poly_subst(a, nvars, forms):
    """Substitute forms[i] (a polynomial dict) for variable i in a.
    Powers of each form are cached per call.
    """
    if not a:
        return {}
    pows = [[None] for _ in range(nvars)]  # pows[i][e], e >= 1 filled lazily
    out = {}
    for k, c in a.items():
        term = None  # None means the constant 1
        shift = 0
        for i in range(nvars):
            e = (k >> shift) & FIELD_MASK
            shift += NBITS
            if e:
                pi = pows[i]
                while len(pi) <= e:
                    if len(pi) == 1:
                        pi.append(forms[i])
                    else:
                        pi.append(poly_mul(pi[-1], forms[i]))
                fe = pi[e]
                term = dict(fe) if term is None else poly_mul(term, fe)
        if term is None:
            s = out.get(k)
            if s is None:
                out[k] = c
            else:
                s = s + c
                if s:
                    out[k] = s
                else:
                    del out[k]
        else:
            for tk, tc in term.items():
                cc = tc * c
                s = out.get(tk)
                if s is None:
                    out[tk] = cc
                else:
                    s = s + cc
                    if s:
                        out[tk] = s
                    else:
                        del out[tk]
    return out


def poly_eval_ones(a):
    """Value of the polynomial at all variables equal to 1 (coefficient
    sum); returns 0 (int) for the zero polynomial.
    """
    tot = 0
    for c in a.values():
        tot = tot + c
    return tot


def mat_rank_mod_p(rows, ncols, p):
    """Rank over F_p of an integer matrix given as a list of row lists."""
    rows = [[x % p for x in r] for r in rows]
    rank = 0
    col = 0
    nrows = len(rows)
    while rank < nrows and col < ncols:
        piv = -1
        for i in range(rank, nrows):
            if rows[i][col]:
                piv = i
                break
        if piv < 0:
            col += 1
            continue
        rows[rank], rows[piv] = rows[piv], rows[rank]
        inv = pow(rows[rank][col], -1, p)
        rr = rows[rank]
        for j in range(col, ncols):
            rr[j] = rr[j] * inv % p
        for i in range(nrows):
            if i != rank and rows[i][col]:
                f = rows[i][col]
                ri = rows[i]
                for j in range(col, ncols):
                    ri[j] = (ri[j] - f * rr[j]) % p
        rank += 1
        col += 1
    return rank


def mat_rank_field(rows, ncols):
    """Rank of a matrix of exact field scalars (rationals)."""
    rows = [list(r) for r in rows]
    rank = 0
    col = 0
    nrows = len(rows)
    while rank < nrows and col < ncols:
        piv = -1
        for i in range(rank, nrows):
            if rows[i][col]:
                piv = i
                break
        if piv < 0:
            col += 1
            continue
        rows[rank], rows[piv] = rows[piv], rows[rank]
        pv = rows[rank][col]
        rr = rows[rank]
        for i in range(nrows):
            if i != rank and rows[i][col]:
                f = rows[i][col] / pv
                ri = rows[i]
                for j in range(col, ncols):
                    ri[j] = ri[j] - f * rr[j]
        rank += 1
        col += 1
    return rank
