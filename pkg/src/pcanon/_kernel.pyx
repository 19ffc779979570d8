# cython: language_level=3, boundscheck=False, wraparound=False
"""Compiled twin of pcanon._kernel_py.

Same algorithms, same dict-of-packed-key representation; Cython only
removes interpreter overhead from the inner loops.  Exponent keys stay
Python ints (they exceed 64 bits beyond four variables), coefficients
stay opaque exact rationals.  Behaviour must match _kernel_py exactly;
the test suite cross-checks the two on random inputs.
"""

NBITS = 16
FIELD_MASK = (1 << NBITS) - 1

cdef int _NBITS = 16
cdef long _FIELD_MASK = (1 << 16) - 1


cpdef dict poly_add(dict a, dict b):
    """Sum of two polynomial dicts."""
    cdef dict out
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


cpdef dict poly_neg(dict a):
    """Negation of a polynomial dict."""
    cdef dict out = {}
    for k, c in a.items():
        out[k] = -c
    return out


cpdef dict poly_sub(dict a, dict b):
    """Difference a - b of two polynomial dicts."""
    cdef dict out = dict(a)
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


cpdef dict poly_scale(dict a, c):
    """Product of a polynomial dict with a scalar."""
    cdef dict out = {}
    if not c:
        return out
    for k, v in a.items():
        out[k] = v * c
    return out


cpdef dict poly_mul_term(dict a, key, c):
    """Product of a polynomial dict with the monomial c * x^key."""
    cdef dict out = {}
    if not c:
        return out
    for k, v in a.items():
        out[k + key] = v * c
    return out


cpdef dict poly_mul(dict a, dict b):
    """Product of two polynomial dicts."""
    cdef dict out = {}
    if not a or not b:
        return out
    if len(b) > len(a):
        a, b = b, a
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


cpdef poly_div_linear(dict num, int shift, pivot_coeff, tuple rest):
    """Exact division by pivot_coeff * x_j + rest (shift = NBITS*j, rest
    free of x_j).  Quotient dict, or None when not exact.
    """
    cdef dict work, quot
    cdef list level
    cdef long e, emax
    if not num:
        return {}
    # object shift: a C int 1 << shift is undefined from the third variable on
    pivot_key = (<object>1) << shift
    work = dict(num)
    quot = {}
    while work:
        emax = 0
        for k in work:
            e = (k >> shift) & _FIELD_MASK
            if e > emax:
                emax = e
        if emax == 0:
            return None
        level = []
        for k in work:
            if ((k >> shift) & _FIELD_MASK) == emax:
                level.append(k)
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


cpdef poly_div_exact(dict num, dict den, int nvars):
    """Exact division of num by den; quotient dict or None."""
    cdef dict work, quot
    cdef list dtail
    cdef int i, shift
    if not num:
        return {}
    if not den:
        raise ZeroDivisionError('polynomial division by zero')
    dlead = max(den)
    dc = den[dlead]
    dtail = []
    for k, c in den.items():
        if k != dlead:
            dtail.append((k, c))
    work = dict(num)
    quot = {}
    while work:
        wlead = max(work)
        qk = wlead - dlead
        if qk < 0:
            return None
        shift = 0
        for i in range(nvars):
            if ((qk >> shift) & _FIELD_MASK) + ((dlead >> shift) & _FIELD_MASK) \
                    != (wlead >> shift) & _FIELD_MASK:
                return None
            shift += _NBITS
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


cpdef dict poly_subst(dict a, int nvars, list forms):
    """Substitute forms[i] for variable i in a, with per-call power cache."""
    cdef dict out = {}
    cdef dict term, fe
    cdef list pows, pi
    cdef int i, shift
    cdef long e
    if not a:
        return out
    pows = [[None] for _ in range(nvars)]
    for k, c in a.items():
        term = None
        shift = 0
        for i in range(nvars):
            e = (k >> shift) & _FIELD_MASK
            shift += _NBITS
            if e:
                pi = pows[i]
                while len(pi) <= e:
                    if len(pi) == 1:
                        pi.append(forms[i])
                    else:
                        pi.append(poly_mul(pi[len(pi) - 1], forms[i]))
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


cpdef poly_eval_ones(dict a):
    """Coefficient sum (value at all variables = 1)."""
    tot = 0
    for c in a.values():
        tot = tot + c
    return tot


cpdef int mat_rank_mod_p(list rows, int ncols, long p):
    """Rank over F_p of an integer matrix given as a list of row lists."""
    cdef list mat = []
    cdef list r, rr, ri
    cdef int nrows, rank, col, i, j, piv
    for r in rows:
        mat.append([x % p for x in r])
    nrows = len(mat)
    rank = 0
    col = 0
    while rank < nrows and col < ncols:
        piv = -1
        for i in range(rank, nrows):
            if (<list>mat[i])[col]:
                piv = i
                break
        if piv < 0:
            col += 1
            continue
        mat[rank], mat[piv] = mat[piv], mat[rank]
        rr = <list>mat[rank]
        inv = pow(rr[col], -1, p)
        for j in range(col, ncols):
            rr[j] = rr[j] * inv % p
        for i in range(nrows):
            if i != rank:
                ri = <list>mat[i]
                if ri[col]:
                    f = ri[col]
                    for j in range(col, ncols):
                        ri[j] = (ri[j] - f * rr[j]) % p
        rank += 1
        col += 1
    return rank


cpdef int mat_rank_field(list rows, int ncols):
    """Rank of a matrix of exact field scalars (rationals)."""
    cdef list mat = []
    cdef list rr, ri
    cdef int nrows, rank, col, i, j, piv
    for r in rows:
        mat.append(list(r))
    nrows = len(mat)
    rank = 0
    col = 0
    while rank < nrows and col < ncols:
        piv = -1
        for i in range(rank, nrows):
            if (<list>mat[i])[col]:
                piv = i
                break
        if piv < 0:
            col += 1
            continue
        mat[rank], mat[piv] = mat[piv], mat[rank]
        rr = <list>mat[rank]
        pv = rr[col]
        for i in range(nrows):
            if i != rank:
                ri = <list>mat[i]
                if ri[col]:
                    f = ri[col] / pv
                    for j in range(col, ncols):
                        ri[j] = ri[j] - f * rr[j]
        rank += 1
        col += 1
    return rank
