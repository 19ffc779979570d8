"""Tables of p-canonical basis data.

A completed run, whichever algorithm produced it, is a table of columns:
for each processed element w, the coefficients pm_{x,w} expressing the
p-canonical basis element in the (0-)canonical basis,

    pb_w = sum_x pm_{x,w} b_x        (pm_{x,w} in Z>=0[v, v^-1]).

In the antispherical case the elements are minimal coset representatives
and b_x means the 0-canonical basis of the module.  Only nonzero entries
are stored.  Every entry carries a provenance tag recording how it was
obtained, one of:

    'computed'           a local intersection form rank (or a peeled
                         idempotent count) was actually computed,
    'inverse-symmetry'   transported from the column of w^-1,
    'diagram-symmetry'   transported along a diagram automorphism,
    'bound-forced'       pinned by known values without any rank,
    'known-zero'         reserved for explicit zeroes (entries are
                         normally just omitted).

Insertion validates the invariants every algorithm must satisfy:
pm_{w,w} = 1, x <= w in Bruhat order, all coefficients nonnegative
integers, every entry invariant under the bar involution.
"""

from .errors import NegativeCoefficient, PCanonError
from .ratfunc import LaurentPoly, graded_rank_string

PROVENANCES = ('computed', 'inverse-symmetry', 'diagram-symmetry',
               'bound-forced', 'known-zero')


def element_sort_key(w):
    return (w.length, w.sort_key())


class PCanTable:
    """Columns of pm_{x,w}, keyed by w, with per-entry provenance."""

    def __init__(self, system, p, ivars=()):
        self.system = system
        self.p = p
        self.ivars = tuple(sorted(ivars))
        self.columns = {}
        self.provenance = {}

    def has_column(self, w):
        return w in self.columns

    def add_column(self, w, col, provenance):
        """Insert the column of w.

        col maps x -> LaurentPoly; provenance is a single tag or a map
        x -> tag.  Zero entries are dropped.  Raises on any violated
        invariant rather than storing a bad column.
        """
        if w in self.columns:
            raise PCanonError('column of %s inserted twice' % (w.word,))
        clean = {}
        for x, c in col.items():
            if not c:
                continue
            if any(a < 0 for _, a in c.items()):
                raise NegativeCoefficient(
                    'pm_{%s,%s} = %s has a negative coefficient'
                    % (x.word, w.word, c))
            if not c.is_bar_invariant():
                raise PCanonError(
                    'pm_{%s,%s} = %s is not bar-invariant' % (x.word, w.word, c))
            if not self.system.bruhat_leq(x, w):
                raise PCanonError(
                    'pm_{%s,%s} nonzero but %s is not below %s in Bruhat order'
                    % (x.word, w.word, x.word, w.word))
            clean[x] = c
        if clean.get(w) != LaurentPoly.one():
            raise PCanonError('pm_{w,w} != 1 for w = %s' % (w.word,))
        self.columns[w] = clean
        for x in clean:
            tag = provenance if isinstance(provenance, str) else provenance[x]
            if tag not in PROVENANCES:
                raise PCanonError('unknown provenance tag %r' % (tag,))
            self.provenance[(x, w)] = tag

    def entry(self, x, w):
        return self.columns[w].get(x, LaurentPoly.zero())

    def elements(self):
        return sorted(self.columns, key=element_sort_key)

    def rows(self):
        """Deterministic (w, x, poly, provenance) stream, length-major."""
        for w in self.elements():
            col = self.columns[w]
            for x in sorted(col, key=element_sort_key):
                yield w, x, col[x], self.provenance[(x, w)]

    def is_identity(self):
        return all(col == {w: LaurentPoly.one()}
                   for w, col in self.columns.items())

    def same_values(self, other):
        """Column-by-column equality, ignoring provenance."""
        return self.columns == other.columns

    def diff(self, other):
        """Human-readable list of differing entries (empty if equal)."""
        out = []
        words = sorted(set(self.columns) | set(other.columns),
                       key=element_sort_key)
        for w in words:
            a = self.columns.get(w)
            b = other.columns.get(w)
            if a is None or b is None:
                out.append('column %s present in only one table'
                           % _token(w))
                continue
            for x in sorted(set(a) | set(b), key=element_sort_key):
                pa, pb = a.get(x, LaurentPoly.zero()), b.get(x, LaurentPoly.zero())
                if pa != pb:
                    out.append('pm_{%s,%s}: %s != %s'
                               % (_token(x), _token(w),
                                  graded_rank_string(pa) or '0',
                                  graded_rank_string(pb) or '0'))
        return out


def _token(w):
    from .coxeter import format_word
    return format_word(w.word)
