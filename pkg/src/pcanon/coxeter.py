"""Crystallographic Coxeter systems from generalized Cartan matrices.

A system is built from an n x n GCM A = (a_st): integer entries,
a_ss = 2, off-diagonal entries nonpositive, and a_st = 0 iff a_ts = 0.
The group acts on the adjoint realisation X = Z^n with the simple roots
as the standard basis and coroot pairings read off the rows of A:
the reflection s sends alpha_j to alpha_j - a_sj alpha_s.  An element
is stored as its integer matrix in the alpha-basis together with the
matrix of its inverse (so both left and right descent sets are sign
tests on columns), its length, and its lexicographically least reduced
word.  Elements are interned per system: one Python object per group
element, so identity comparison is equality.

Words are tuples of 0-based generator indices throughout; the text form
joins 1-based indices with dots ("1.2.1"), with "e" for the identity.

>>> W = CoxeterSystem.preset('A2')
>>> s, t = W.gen(0), W.gen(1)
>>> (s * t * s) == (t * s * t)
True
>>> (s * t * s).word
(0, 1, 0)
>>> sorted(w.word for w in W.elements_up_to(3))
[(), (0,), (0, 1), (0, 1, 0), (1,), (1, 0)]
"""

from itertools import permutations

from .errors import InvalidGCM, MixedSystems, NoBraidRelation, NotMinimalRep, PCanonError

__all__ = [
    'CoxeterSystem', 'CoxElt', 'PRESETS', 'format_word', 'parse_word',
]

# Coxeter matrix entries: m_st, with 0 standing for infinity.
_PRODUCT_TO_ORDER = {0: 2, 1: 3, 2: 4, 3: 6}

PRESETS = {
    'A1': ((2,),),
    'A2': ((2, -1), (-1, 2)),
    'A3': ((2, -1, 0), (-1, 2, -1), (0, -1, 2)),
    'A4': ((2, -1, 0, 0), (-1, 2, -1, 0), (0, -1, 2, -1), (0, 0, -1, 2)),
    'B2': ((2, -2), (-1, 2)),
    'B3': ((2, -1, 0), (-1, 2, -1), (0, -2, 2)),
    'C3': ((2, -1, 0), (-1, 2, -2), (0, -1, 2)),
    'D4': ((2, -1, 0, 0), (-1, 2, -1, -1), (0, -1, 2, 0), (0, -1, 0, 2)),
    'G2': ((2, -1), (-3, 2)),
    'A~1': ((2, -2), (-2, 2)),
    'A~2': ((2, -1, -1), (-1, 2, -1), (-1, -1, 2)),
}


def format_word(word):
    """Dotted 1-based text form of a word tuple; 'e' for the identity."""
    if not word:
        return 'e'
    return '.'.join(str(i + 1) for i in word)


def parse_word(text, rank):
    """Inverse of format_word."""
    text = text.strip()
    if text in ('e', ''):
        return ()
    out = []
    for tok in text.split('.'):
        i = int(tok) - 1
        if not 0 <= i < rank:
            raise PCanonError('generator index %s out of range' % (tok,))
        out.append(i)
    return tuple(out)


class CoxElt:
    """One group element: interned, so == is identity comparison.

    mat is the matrix of the element acting on the root lattice in the
    alpha-basis (columns are images of simple roots); inv is the matrix
    of the inverse element.  word is the lexicographically least
    reduced expression.
    """

    __slots__ = ('sys', 'mat', 'inv', 'word', 'length')

    def __init__(self, system, mat, inv, word):
        self.sys = system
        self.mat = mat
        self.inv = inv
        self.word = word
        self.length = len(word)

    def __repr__(self):
        return format_word(self.word)

    def __mul__(self, other):
        if isinstance(other, CoxElt):
            if other.sys is not self.sys:
                raise MixedSystems('elements of different systems')
            return self.sys._from_mat(
                _mat_mul(self.mat, other.mat), _mat_mul(other.inv, self.inv))
        raise TypeError('expected CoxElt')

    def times_gen(self, s):
        """self * s for a generator index s."""
        return self.sys._mul_gen_right(self, s)

    def gen_times(self, s):
        """s * self for a generator index s."""
        return self.sys._mul_gen_left(self, s)

    def inverse(self):
        return self.sys._from_mat(self.inv, self.mat)

    def act_root(self, coords):
        """Image of the linear form with the given alpha-coordinates."""
        n = self.sys.n
        return tuple(sum(self.mat[i][j] * coords[j] for j in range(n))
                     for i in range(n))

    def has_right_descent(self, s):
        """True iff self * s is shorter, i.e. self(alpha_s) < 0."""
        return all(row[s] <= 0 for row in self.mat)

    def has_left_descent(self, s):
        """True iff s * self is shorter, i.e. self^-1(alpha_s) < 0."""
        return all(row[s] <= 0 for row in self.inv)

    def right_descents(self):
        return [s for s in range(self.sys.n) if self.has_right_descent(s)]

    def left_descents(self):
        return [s for s in range(self.sys.n) if self.has_left_descent(s)]

    def sort_key(self):
        return (self.length, self.word)


def _mat_mul(a, b):
    n = len(a)
    return tuple(
        tuple(sum(a[i][k] * b[k][j] for k in range(n)) for j in range(n))
        for i in range(n))


def _identity_mat(n):
    return tuple(tuple(1 if i == j else 0 for j in range(n))
                 for i in range(n))


class CoxeterSystem:
    """A crystallographic Coxeter system with interned elements."""

    def __init__(self, gcm):
        gcm = tuple(tuple(int(x) for x in row) for row in gcm)
        n = len(gcm)
        if any(len(row) != n for row in gcm):
            raise InvalidGCM('matrix is not square')
        for i in range(n):
            if gcm[i][i] != 2:
                raise InvalidGCM('diagonal entry a_%d%d != 2' % (i, i))
            for j in range(n):
                if i != j:
                    if gcm[i][j] > 0:
                        raise InvalidGCM('positive off-diagonal entry')
                    if (gcm[i][j] == 0) != (gcm[j][i] == 0):
                        raise InvalidGCM('zero pattern is not symmetric')
        self.gcm = gcm
        self.n = n
        # Coxeter matrix: order of st, 0 meaning infinity.
        self.m = tuple(
            tuple(1 if i == j else
                  _PRODUCT_TO_ORDER.get(gcm[i][j] * gcm[j][i], 0)
                  for j in range(n))
            for i in range(n))
        # Reflection matrices: s sends alpha_j to alpha_j - a_sj alpha_s.
        self._gen_mats = []
        for s in range(n):
            mat = [[1 if i == j else 0 for j in range(n)] for i in range(n)]
            for j in range(n):
                mat[s][j] -= gcm[s][j]
            self._gen_mats.append(tuple(tuple(row) for row in mat))
        self._intern = {}
        ident = _identity_mat(n)
        self.id = CoxElt(self, ident, ident, ())
        self._intern[ident] = self.id
        self._gens = [self._from_mat(self._gen_mats[s], self._gen_mats[s])
                      for s in range(n)]
        self._levels = [[self.id]]  # elements grouped by length, lex-sorted
        self._min_reps = {}
        self._autos = None

    @classmethod
    def preset(cls, name):
        if name not in PRESETS:
            raise PCanonError('unknown preset %r (have %s)'
                              % (name, ', '.join(sorted(PRESETS))))
        return cls(PRESETS[name])

    def gen(self, s):
        return self._gens[s]

    # -- element construction -----------------------------------------------

    def _from_mat(self, mat, inv):
        elt = self._intern.get(mat)
        if elt is not None:
            return elt
        # Lexicographically least reduced word: smallest left descent
        # first, then recurse on the rest.
        s = -1
        for j in range(self.n):
            if all(row[j] <= 0 for row in inv):
                s = j
                break
        if s < 0:
            raise PCanonError('element with no left descent is not identity')
        rest = self._from_mat(_mat_mul(self._gen_mats[s], mat),
                              _mat_mul(inv, self._gen_mats[s]))
        elt = CoxElt(self, mat, inv, (s,) + rest.word)
        self._intern[mat] = elt
        return elt

    def _mul_gen_right(self, w, s):
        return self._from_mat(_mat_mul(w.mat, self._gen_mats[s]),
                              _mat_mul(self._gen_mats[s], w.inv))

    def _mul_gen_left(self, w, s):
        return self._from_mat(_mat_mul(self._gen_mats[s], w.mat),
                              _mat_mul(w.inv, self._gen_mats[s]))

    def element(self, word):
        """The element of a (not necessarily reduced) word."""
        w = self.id
        for s in word:
            w = w.times_gen(s)
        return w

    # -- enumeration ----------------------------------------------------------

    def elements_of_length(self, k):
        """All elements of length k, lex-sorted by word."""
        while len(self._levels) <= k:
            prev = self._levels[-1]
            if not prev:
                return []
            new = {}
            for w in prev:
                for s in range(self.n):
                    if not w.has_right_descent(s):
                        ws = w.times_gen(s)
                        new[ws.word] = ws
            self._levels.append([new[k2] for k2 in sorted(new)])
        return list(self._levels[k])

    def elements_up_to(self, k):
        """All elements of length <= k, length-major, lex within length."""
        out = []
        for j in range(k + 1):
            level = self.elements_of_length(j)
            if not level and j > 0:
                break
            out.extend(level)
        return out

    def is_finite(self, probe=64):
        """Crude finiteness check: enumeration stops growing."""
        j = 0
        while True:
            level = self.elements_of_length(j)
            if not level:
                return True
            if j >= probe:
                return False
            j += 1

    # -- Bruhat order ---------------------------------------------------------

    def bruhat_leq(self, x, w):
        """x <= w in Bruhat order (greedy right-subword matching)."""
        if x.length > w.length:
            return False
        u = x
        for s in reversed(w.word):
            if u is self.id:
                return True
            if u.has_right_descent(s):
                u = u.times_gen(s)
        return u is self.id

    def bruhat_interval_below(self, w):
        """All x <= w, length-major lex order."""
        return [x for x in self.elements_up_to(w.length)
                if self.bruhat_leq(x, w)]

    # -- parabolic quotients ---------------------------------------------------

    def is_minimal_rep(self, w, ivars):
        """Is w minimal in its coset W_I w (no left descent in I)?"""
        return not any(w.has_left_descent(t) for t in ivars)

    def check_minimal_rep(self, w, ivars):
        if not self.is_minimal_rep(w, ivars):
            raise NotMinimalRep('%r has a left descent in I' % (w,))

    def minimal_reps_up_to(self, k, ivars):
        return [w for w in self.elements_up_to(k)
                if self.is_minimal_rep(w, ivars)]

    def parabolic_step(self, x, s, ivars):
        """Deodhar's trichotomy for x in the quotient and a generator s.

        Returns ('descend', None) when xs < x (stays minimal),
        ('ascend', None) when xs > x stays minimal, and ('exit', t) when
        xs = tx for t in I, i.e. x(alpha_s) is the simple root alpha_t.
        """
        beta = tuple(row[s] for row in x.mat)
        if all(c <= 0 for c in beta):
            return ('descend', None)
        for t in ivars:
            if beta == tuple(1 if i == t else 0 for i in range(self.n)):
                return ('exit', t)
        return ('ascend', None)

    # -- roots -----------------------------------------------------------------

    def positive_roots_up_to(self, k):
        """All positive roots w(alpha_s) for w of length <= k, sorted."""
        seen = set()
        for w in self.elements_up_to(k):
            for s in range(self.n):
                beta = tuple(row[s] for row in w.mat)
                if all(c >= 0 for c in beta):
                    seen.add(beta)
        return sorted(seen)

    def dihedral_positive_roots(self, s, t):
        """The positive roots of the rank-2 subsystem <s,t>, sorted;
        raises NoBraidRelation for infinite order."""
        m = self.m[s][t]
        if m == 0:
            raise NoBraidRelation('m(%d,%d) is infinite' % (s, t))
        roots = set()
        # prefixes of the two alternating words hit every positive root
        for start in (s, t):
            w = self.id
            for i in range(m):
                u = start if i % 2 == 0 else (t if start == s else s)
                beta = tuple(row[u] for row in w.mat)
                if all(c >= 0 for c in beta):
                    roots.add(beta)
                w = w.times_gen(u)
        return sorted(roots)

    # -- star operations ---------------------------------------------------------

    def coset_min_right(self, w, s, t):
        """The minimal element of w<s,t>, reached by stripping right
        descents in {s,t}."""
        u = w
        while True:
            if u.has_right_descent(s):
                u = u.times_gen(s)
            elif u.has_right_descent(t):
                u = u.times_gen(t)
            else:
                return u

    def star_right(self, w, s, t):
        """The right star involution for the pair {s,t}: position k in
        its coset string goes to position m-k in the same chain.
        Returns None when w is not in the domain (k = 0 or k = m).
        """
        m = self.m[s][t]
        if m == 0:
            raise NoBraidRelation('m(%d,%d) is infinite' % (s, t))
        base = self.coset_min_right(w, s, t)
        k = w.length - base.length
        if k == 0 or k == m:
            return None
        # which chain: the first letter of the alternating word
        rem = base.inverse() * w
        first = s if rem.has_left_descent(s) else t
        out = base
        u = first
        for _ in range(m - k):
            out = out.times_gen(u)
            u = t if u == s else s
        return out

    def star_left(self, w, s, t):
        """The left star involution: right star on the inverse."""
        out = self.star_right(w.inverse(), s, t)
        return None if out is None else out.inverse()

    # -- diagram automorphisms -----------------------------------------------------

    def diagram_automorphisms(self):
        """All nontrivial GCM-preserving generator permutations."""
        if self._autos is None:
            autos = []
            for perm in permutations(range(self.n)):
                if all(self.gcm[perm[i]][perm[j]] == self.gcm[i][j]
                       for i in range(self.n) for j in range(self.n)):
                    if any(perm[i] != i for i in range(self.n)):
                        autos.append(perm)
            self._autos = autos
        return list(self._autos)

    def apply_automorphism(self, perm, w):
        return self.element(tuple(perm[s] for s in w.word))
