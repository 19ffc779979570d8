"""The standard category: framed matrices of rational functions.

An object is a finite sequence (frame) of group elements.  A morphism
from frame D to frame C is a C x D matrix of rational functions subject
to the structural rule: the (i, j) entry may be nonzero only when
C[i] == D[j].  Composition is matrix multiplication (the structural
rule makes frame bookkeeping exact), and the monoidal structure is the
twisted tensor product

    (f (x) g)[(i1,i2),(j1,j2)] = f[i1][j1] * (cod_f[i1] . g[i2][j2]),

where a group element acts on a rational function by substituting
w(alpha_j) for alpha_j.  Only the right factor gets twisted, by the row
frame element of the left factor.

The antispherical action of a word morphism on a framed matrix is the
same contraction with three changes: frames multiply against minimal
coset representatives, positions whose evaluation would leave the
minimal representatives die (both children at once, when the next
letter exits through the parabolic), and every twisted entry is pushed
through the parabolic projection pi_I.  With I empty it reduces exactly
to the twisted tensor product, which is how the translation steps use
it.

Morphisms carry an integer degree; degrees add under composition and
tensor.  Entries of a degree-d morphism between word-like objects are
homogeneous of v-degree d + (cod word length) - (dom word length),
with the roots sitting in degree 2 (validate_degrees checks this when
asked).
"""

from .errors import FrameMismatch, MixedSystems, PCanonError
from .ratfunc import RatFunc

__all__ = ['StdMor', 'anti_act_object', 'anti_act_morphism', 'lambda_frames']


def lambda_frames(system, word):
    """The frame of the localised Bott-Samelson object of a word:
    iterated doubling, every subexpression evaluation in binary order
    (last letter least significant)."""
    frames = [system.id]
    for u in word:
        nxt = []
        for f in frames:
            nxt.append(f)
            nxt.append(f.times_gen(u))
        frames = nxt
    return tuple(frames)


class StdMor:
    """A framed matrix of rational functions.

    cols[j] is the sparse column {row index: RatFunc}; dom and cod are
    tuples of CoxElt; deg is the grading degree.
    """

    __slots__ = ('dom', 'cod', 'cols', 'deg', 'n')

    def __init__(self, dom, cod, cols, deg, _check=True):
        self.dom = tuple(dom)
        self.cod = tuple(cod)
        self.cols = cols
        self.deg = deg
        sys = self.dom[0].sys if self.dom else (self.cod[0].sys if self.cod else None)
        self.n = sys.n if sys is not None else 0
        if _check:
            self._check_structural()

    def _check_structural(self):
        for x in self.dom:
            for y in self.cod:
                if x.sys is not y.sys:
                    raise MixedSystems('frames from different systems')
        if len(self.cols) != len(self.dom):
            raise PCanonError('column count does not match domain frame')
        for j, col in enumerate(self.cols):
            for i, val in col.items():
                if not 0 <= i < len(self.cod):
                    raise PCanonError('row index out of range')
                if val and self.cod[i] is not self.dom[j]:
                    raise PCanonError(
                        'structural rule violated at (%d, %d): %r != %r'
                        % (i, j, self.cod[i], self.dom[j]))

    # -- constructors --------------------------------------------------------

    @classmethod
    def zero(cls, dom, cod, deg=0):
        return cls(dom, cod, [{} for _ in dom], deg, _check=False)

    @classmethod
    def identity(cls, frames):
        frames = tuple(frames)
        n = frames[0].sys.n if frames else 0
        cols = [{i: RatFunc.const(n, 1)} for i in range(len(frames))]
        return cls(frames, frames, cols, 0, _check=False)

    @classmethod
    def from_entries(cls, dom, cod, entries, deg):
        """entries: {(row, col): RatFunc}"""
        cols = [{} for _ in dom]
        for (i, j), val in entries.items():
            if val:
                cols[j][i] = val
        return cls(dom, cod, cols, deg)

    # -- access ----------------------------------------------------------------

    def entry(self, i, j):
        return self.cols[j].get(i)

    def nnz(self):
        return sum(len(c) for c in self.cols)

    def is_zero(self):
        return all(not c for c in self.cols)

    def __eq__(self, other):
        if not isinstance(other, StdMor):
            return NotImplemented
        if self.dom != other.dom or self.cod != other.cod:
            return False
        for ca, cb in zip(self.cols, other.cols):
            if set(ca) != set(cb):
                keys = set(ca) | set(cb)
            else:
                keys = ca.keys()
            for i in keys:
                va = ca.get(i)
                vb = cb.get(i)
                if va is None:
                    if vb:
                        return False
                elif vb is None:
                    if va:
                        return False
                elif not (va == vb):
                    return False
        return True

    def __repr__(self):
        return 'StdMor(%d x %d, deg %d, %d entries)' % (
            len(self.cod), len(self.dom), self.deg, self.nnz())

    # -- arithmetic --------------------------------------------------------------

    def _frames_match(self, other):
        if self.dom != other.dom or self.cod != other.cod:
            raise FrameMismatch('frame mismatch in matrix sum')

    def __add__(self, other):
        self._frames_match(other)
        if self.deg != other.deg and not (self.is_zero() or other.is_zero()):
            raise PCanonError('adding morphisms of different degrees')
        cols = []
        for ca, cb in zip(self.cols, other.cols):
            col = dict(ca)
            for i, v in cb.items():
                cur = col.get(i)
                s = v if cur is None else cur + v
                if s:
                    col[i] = s
                else:
                    col.pop(i, None)
            cols.append(col)
        deg = other.deg if self.is_zero() else self.deg
        return StdMor(self.dom, self.cod, cols, deg, _check=False)

    def __neg__(self):
        cols = [{i: -v for i, v in c.items()} for c in self.cols]
        return StdMor(self.dom, self.cod, cols, self.deg, _check=False)

    def __sub__(self, other):
        return self + (-other)

    def scale(self, c):
        """Multiply every entry by a RatFunc or constant."""
        if not isinstance(c, RatFunc):
            c = RatFunc.const(self.n, c)
        if c.is_zero():
            return StdMor.zero(self.dom, self.cod, self.deg)
        cols = [{i: v * c for i, v in col.items()} for col in self.cols]
        return StdMor(self.dom, self.cod, cols, self.deg, _check=False)

    def compose(self, other):
        """self . other (apply other first)."""
        if other.cod != self.dom:
            raise FrameMismatch(
                'composition frame mismatch: %r vs %r' % (self.dom, other.cod))
        cols = []
        for j in range(len(other.dom)):
            acc = {}
            for k, g in other.cols[j].items():
                if not g:
                    continue
                for i, f in self.cols[k].items():
                    prod = f * g
                    if not prod:
                        continue
                    cur = acc.get(i)
                    s = prod if cur is None else cur + prod
                    if s:
                        acc[i] = s
                    else:
                        acc.pop(i, None)
            cols.append(acc)
        return StdMor(other.dom, self.cod, cols, self.deg + other.deg,
                      _check=False)

    def tensor(self, other):
        """Twisted tensor product, self outer."""
        dom = tuple(a * b for a in self.dom for b in other.dom)
        cod = tuple(a * b for a in self.cod for b in other.cod)
        nr2 = len(other.cod)
        nc2 = len(other.dom)
        twisted = {}  # row frame element of self -> twisted other-cols
        cols = [{} for _ in dom]
        for j1 in range(len(self.dom)):
            for i1, f in self.cols[j1].items():
                b = self.cod[i1]
                tw = twisted.get(i1)
                if tw is None:
                    tw = [{r: val.twist(b.mat) for r, val in col.items()}
                          for col in other.cols]
                    twisted[i1] = tw
                for j2 in range(nc2):
                    outcol = cols[j1 * nc2 + j2]
                    for i2, g in tw[j2].items():
                        prod = f * g
                        if prod:
                            outcol[i1 * nr2 + i2] = prod
        return StdMor(dom, cod, cols, self.deg + other.deg, _check=False)

    # -- localisation-quotient and degree checks ------------------------------------

    def loc_quotient(self, w):
        """Kill frame entries strictly Bruhat-below w on both sides."""
        sys = w.sys
        keep_r = [i for i, f in enumerate(self.cod)
                  if f is w or not sys.bruhat_leq(f, w)]
        keep_c = [j for j, f in enumerate(self.dom)
                  if f is w or not sys.bruhat_leq(f, w)]
        return self.submatrix(keep_r, keep_c)

    def submatrix(self, rows, colsel):
        rmap = {i: k for k, i in enumerate(rows)}
        cols = []
        for j in colsel:
            col = {}
            for i, v in self.cols[j].items():
                k = rmap.get(i)
                if k is not None and v:
                    col[k] = v
            cols.append(col)
        return StdMor(tuple(self.dom[j] for j in colsel),
                      tuple(self.cod[i] for i in rows),
                      cols, self.deg, _check=False)

    def validate_degrees(self, wordlen_dom, wordlen_cod):
        """Check every entry is homogeneous of v-degree
        deg + wordlen_cod - wordlen_dom."""
        want = self.deg + wordlen_cod - wordlen_dom
        for col in self.cols:
            for v in col.values():
                got = v.homogeneous_v_degree()
                if got is not None and got != want:
                    raise PCanonError(
                        'entry of v-degree %s where %d expected' % (got, want))

    # -- endomorphism inversion -------------------------------------------------------

    def inverse_endo(self):
        """Inverse of a frame-endomorphism, blockwise per frame element.

        Blocks are the index classes with equal frame element; each is
        inverted by adjugate over the rational function field.  Raises
        SolveFailure when a block is singular.
        """
        from .errors import SolveFailure
        if self.dom != self.cod:
            raise FrameMismatch('inverse of a non-endomorphism')
        n = len(self.dom)
        blocks = {}
        for i, f in enumerate(self.dom):
            blocks.setdefault(f, []).append(i)
        cols = [{} for _ in range(n)]
        for f, idx in blocks.items():
            k = len(idx)
            block = [[self.entry(idx[i], idx[j]) or RatFunc.zero(self.n)
                      for j in range(k)] for i in range(k)]
            det = _det(block, self.n)
            if det.is_zero():
                raise SolveFailure('singular block at frame %r' % (f,))
            inv_det = det.reciprocal()
            sign_row = 1
            for i in range(k):
                for j in range(k):
                    minor = [[block[r][c] for c in range(k) if c != i]
                             for r in range(k) if r != j]
                    cof = _det(minor, self.n) if k > 1 else RatFunc.const(self.n, 1)
                    if (i + j) % 2:
                        cof = -cof
                    val = cof * inv_det
                    if val:
                        cols[idx[j]][idx[i]] = val
        return StdMor(self.dom, self.cod, cols, -self.deg, _check=False)


def _det(block, nvars):
    k = len(block)
    if k == 0:
        return RatFunc.const(nvars, 1)
    if k == 1:
        return block[0][0]
    if k == 2:
        return block[0][0] * block[1][1] - block[0][1] * block[1][0]
    out = RatFunc.zero(nvars)
    for i in range(k):
        piv = block[i][0]
        if piv.is_zero():
            continue
        minor = [row[1:] for r, row in enumerate(block) if r != i]
        term = piv * _det(minor, nvars)
        if i % 2:
            term = -term
        out = out + term
    return out


# ---------------------------------------------------------------------------
# The antispherical action

def anti_act_object(system, ivars, x, word):
    """Surviving positions of x . Lambda(word) in the antispherical
    world: list of (position, frame element).  A step whose letter
    exits through the parabolic kills both children of a position.
    With ivars empty this is every position (the plain tensor frame).
    """
    if ivars:
        system.check_minimal_rep(x, ivars)
    survivors = [(0, x)]
    for u in word:
        nxt = []
        for p, g in survivors:
            kind, _t = system.parabolic_step(g, u, ivars)
            if kind == 'exit':
                continue
            nxt.append((2 * p, g))
            nxt.append((2 * p + 1, g.times_gen(u)))
        survivors = nxt
    return survivors


def anti_act_morphism(F, dom_word, cod_word, wmor, ivars):
    """The action of a word morphism on a framed matrix.

    F is a StdMor whose frames are minimal representatives; wmor is the
    localised matrix of a word morphism dom_word -> cod_word.  The
    result's entry at ((i, p), (j, q)) is
    F[i][j] * pi_I(twist by F.cod[i] of wmor[p][q]), running over the
    surviving positions p (of cod_word against F.cod[i]) and q (of
    dom_word against F.dom[j]).  With ivars empty and F an identity
    this is exactly F (x) wmor.
    """
    sys = F.dom[0].sys if F.dom else F.cod[0].sys
    row_surv = [anti_act_object(sys, ivars, b, cod_word) for b in F.cod]
    col_surv = [anti_act_object(sys, ivars, b, dom_word) for b in F.dom]
    row_off = []
    off = 0
    for sv in row_surv:
        row_off.append(off)
        off += len(sv)
    cod = tuple(f for sv in row_surv for (_p, f) in sv)
    col_off = []
    off = 0
    for sv in col_surv:
        col_off.append(off)
        off += len(sv)
    dom = tuple(f for sv in col_surv for (_q, f) in sv)
    cols = [{} for _ in dom]
    iv = sorted(ivars)
    twist_cache = {}
    for j in range(len(F.dom)):
        for i, fij in F.cols[j].items():
            if not fij:
                continue
            b = F.cod[i]
            key = i
            tw = twist_cache.get(key)
            if tw is None:
                tw = {}
                twist_cache[key] = tw
            for qi, (q, _qf) in enumerate(col_surv[j]):
                outcol = cols[col_off[j] + qi]
                src = wmor.cols[q]
                for pi, (p, _pf) in enumerate(row_surv[i]):
                    base = src.get(p)
                    if base is None or not base:
                        continue
                    tkey = (p, q)
                    val = tw.get(tkey)
                    if val is None:
                        val = base.twist(b.mat)
                        if iv:
                            val = val.kill_vars(iv)
                        tw[tkey] = val
                    if not val:
                        continue
                    prod = fij * val
                    if prod:
                        outcol[row_off[i] + pi] = prod
    return StdMor(dom, cod, cols, F.deg + wmor.deg, _check=False)
