"""Exact arithmetic: Laurent polynomials in v, and rational functions in
the simple roots with factored denominators.

Two coefficient worlds live here.

* LaurentPoly: elements of Z[v, v^-1], used for Hecke-algebra
  coefficients, characters, and graded multiplicities.  The bar
  involution is v -> v^-1.

* MultiPoly / RatFunc: the ring R = Z[alpha_1..alpha_n] of polynomial
  functions on the (adjoint) realisation, graded with deg(alpha_i) = 2,
  and its localisation at the linear forms we invert.  A RatFunc keeps
  its denominator as a multiset of factors rather than an expanded
  polynomial, which avoids multivariate gcd entirely: cancellation is
  exact trial division of the numerator by each factor.  Denominator
  factors are roots (integer linear forms) in every situation the theory
  promises, and the strict inverse raises DivisionByNonRoot otherwise;
  a general primitive polynomial factor is still representable so that
  fraction-free linear algebra can pass through intermediate values
  exactly.

Rational coefficients are gmpy2.mpq when available, fractions.Fraction
otherwise.  MultiPoly stores {packed exponent key: coefficient}; see
pcanon.kernel for the packing.

>>> one = MultiPoly.const(2, 1)
>>> a = MultiPoly.variable(2, 0)
>>> b = MultiPoly.variable(2, 1)
>>> (a + b) * (a - b) == a * a - b * b
True
>>> r = RatFunc(a * a - b * b, {}, 2) / RatFunc.from_root(2, (1, -1))
>>> r == RatFunc(a + b, {}, 2)
True
"""

from fractions import Fraction

from . import kernel
from .errors import (
    DivisionByNonRoot,
    NotConstant,
    NotInRI,
    Overflow,
    PCanonError,
)

try:
    from gmpy2 import mpq as QQ
    HAVE_GMPY2 = True
except ImportError:  # pragma: no cover - exercised only without gmpy2
    QQ = Fraction
    HAVE_GMPY2 = False

NBITS = kernel.NBITS
FIELD_MASK = kernel.FIELD_MASK

__all__ = [
    'QQ', 'HAVE_GMPY2', 'LaurentPoly', 'MultiPoly', 'RatFunc', 'ORing',
    'pack_exponents', 'unpack_exponents', 'normalize_linear',
    'ratfunc_from_text', 'graded_rank_string',
]


# ---------------------------------------------------------------------------
# Laurent polynomials in v

class LaurentPoly:
    """An element of Z[v, v^-1] as {degree: nonzero int coefficient}."""

    __slots__ = ('c',)

    def __init__(self, coeffs=None):
        self.c = {}
        if coeffs:
            for d, x in coeffs.items():
                if not isinstance(x, int):
                    raise TypeError('Laurent coefficients must be int')
                if x:
                    self.c[d] = x

    @classmethod
    def zero(cls):
        return cls()

    @classmethod
    def v(cls, d=1, coeff=1):
        """The monomial coeff * v^d."""
        return cls({d: coeff})

    @classmethod
    def one(cls):
        return cls({0: 1})

    def is_zero(self):
        return not self.c

    def __bool__(self):
        return bool(self.c)

    def __eq__(self, other):
        if isinstance(other, int):
            return self.c == ({0: other} if other else {})
        return isinstance(other, LaurentPoly) and self.c == other.c

    def __hash__(self):
        return hash(frozenset(self.c.items()))

    def __add__(self, other):
        if isinstance(other, int):
            other = LaurentPoly({0: other})
        out = dict(self.c)
        for d, x in other.c.items():
            s = out.get(d, 0) + x
            if s:
                out[d] = s
            else:
                out.pop(d, None)
        r = LaurentPoly()
        r.c = out
        return r

    def __neg__(self):
        r = LaurentPoly()
        r.c = {d: -x for d, x in self.c.items()}
        return r

    def __sub__(self, other):
        return self + (-other if isinstance(other, LaurentPoly)
                       else LaurentPoly({0: -other}))

    def __mul__(self, other):
        if isinstance(other, int):
            if not other:
                return LaurentPoly()
            r = LaurentPoly()
            r.c = {d: x * other for d, x in self.c.items()}
            return r
        out = {}
        for d1, x1 in self.c.items():
            for d2, x2 in other.c.items():
                d = d1 + d2
                s = out.get(d, 0) + x1 * x2
                if s:
                    out[d] = s
                else:
                    del out[d]
        r = LaurentPoly()
        r.c = out
        return r

    __rmul__ = __mul__

    def shift(self, d):
        """Multiply by v^d."""
        r = LaurentPoly()
        r.c = {k + d: x for k, x in self.c.items()}
        return r

    def bar(self):
        """The bar involution v -> v^-1."""
        r = LaurentPoly()
        r.c = {-d: x for d, x in self.c.items()}
        return r

    def is_bar_invariant(self):
        return all(self.c.get(-d, 0) == x for d, x in self.c.items())

    def coeff(self, d):
        return self.c.get(d, 0)

    def positive_part(self):
        """The part with strictly positive degrees."""
        r = LaurentPoly()
        r.c = {d: x for d, x in self.c.items() if d > 0}
        return r

    def min_degree(self):
        return min(self.c) if self.c else None

    def max_degree(self):
        return max(self.c) if self.c else None

    def eval_one(self):
        """Value at v = 1."""
        return sum(self.c.values())

    def items(self):
        return sorted(self.c.items())

    def __repr__(self):
        if not self.c:
            return '0'
        parts = []
        for d, x in sorted(self.c.items()):
            if d == 0:
                parts.append(str(x))
            else:
                mono = 'v' if d == 1 else 'v^%d' % d
                if x == 1:
                    parts.append(mono)
                elif x == -1:
                    parts.append('-' + mono)
                else:
                    parts.append('%d*%s' % (x, mono))
        s = '+'.join(parts)
        return s.replace('+-', '-')


def graded_rank_string(poly):
    """Render a LaurentPoly as sorted 'degree:coeff' pairs, for tables."""
    return ' '.join('%d:%d' % (d, x) for d, x in poly.items())


# ---------------------------------------------------------------------------
# The coefficient ring O = Z_(p)

class ORing:
    """Z localised at a prime p, or Q itself when p = 0.

    Holds the valuation tests the algorithms need: membership (no p in
    the denominator) and unit-ness (membership with no p in the
    numerator either).
    """

    __slots__ = ('p',)

    def __init__(self, p):
        if p < 0 or p == 1 or (p > 1 and any(p % q == 0 for q in range(2, int(p ** 0.5) + 1))):
            raise PCanonError('p must be 0 or a prime, got %r' % (p,))
        self.p = p

    def in_O(self, q):
        """Is the rational q in Z_(p)?"""
        if self.p == 0:
            return True
        return q.denominator % self.p != 0

    def is_unit(self, q):
        """Is the rational q a unit of Z_(p)?"""
        if not q:
            return False
        if self.p == 0:
            return True
        return q.denominator % self.p != 0 and q.numerator % self.p != 0

    def residue(self, q):
        """The image of q in F_p (p > 0 only); q must lie in Z_(p)."""
        if self.p == 0:
            raise PCanonError('no residue map for p = 0')
        den = int(q.denominator) % self.p
        if den == 0:
            raise PCanonError('rational %s not in Z_(%d)' % (q, self.p))
        return int(q.numerator) % self.p * pow(den, -1, self.p) % self.p


# ---------------------------------------------------------------------------
# Multivariate polynomials over Q

def pack_exponents(exps):
    """Pack an exponent tuple into a key; see pcanon.kernel."""
    key = 0
    shift = 0
    for e in exps:
        if e < 0 or e > FIELD_MASK:
            raise Overflow('exponent %d out of field range' % (e,))
        key |= e << shift
        shift += NBITS
    return key


def unpack_exponents(key, nvars):
    """Inverse of pack_exponents."""
    return tuple((key >> (NBITS * i)) & FIELD_MASK for i in range(nvars))


class MultiPoly:
    """A polynomial in Q[alpha_1..alpha_n], {packed key: coefficient}."""

    __slots__ = ('n', 'd')

    def __init__(self, nvars, coeffs=None):
        self.n = nvars
        self.d = coeffs if coeffs is not None else {}

    @classmethod
    def zero(cls, nvars):
        return cls(nvars)

    @classmethod
    def const(cls, nvars, c):
        c = QQ(c)
        return cls(nvars, {0: c} if c else {})

    @classmethod
    def variable(cls, nvars, i):
        return cls(nvars, {1 << (NBITS * i): QQ(1)})

    @classmethod
    def from_linear(cls, coords):
        """The linear form sum coords[i] * alpha_i."""
        d = {}
        for i, c in enumerate(coords):
            if c:
                d[1 << (NBITS * i)] = QQ(c)
        return cls(len(coords), d)

    def copy(self):
        return MultiPoly(self.n, dict(self.d))

    def is_zero(self):
        return not self.d

    def __bool__(self):
        return bool(self.d)

    def is_constant(self):
        return not self.d or (len(self.d) == 1 and 0 in self.d)

    def constant_value(self):
        if not self.d:
            return QQ(0)
        if len(self.d) == 1 and 0 in self.d:
            return self.d[0]
        raise NotConstant('polynomial %s is not constant' % (self,))

    def _chk(self, other):
        if self.n != other.n:
            raise PCanonError('mixing polynomials in %d and %d variables'
                              % (self.n, other.n))

    def __add__(self, other):
        self._chk(other)
        return MultiPoly(self.n, kernel.poly_add(self.d, other.d))

    def __sub__(self, other):
        self._chk(other)
        return MultiPoly(self.n, kernel.poly_sub(self.d, other.d))

    def __neg__(self):
        return MultiPoly(self.n, kernel.poly_neg(self.d))

    def __mul__(self, other):
        if isinstance(other, MultiPoly):
            self._chk(other)
            return MultiPoly(self.n, kernel.poly_mul(self.d, other.d))
        return MultiPoly(self.n, kernel.poly_scale(self.d, QQ(other)))

    __rmul__ = __mul__

    def __eq__(self, other):
        return (isinstance(other, MultiPoly) and self.n == other.n
                and self.d == other.d)

    def __hash__(self):
        return hash((self.n, frozenset(self.d.items())))

    def key(self):
        """A canonical hashable form."""
        return tuple(sorted(self.d.items()))

    def total_degree(self):
        """Maximal total degree, or -1 for the zero polynomial."""
        best = -1
        for k in self.d:
            t = sum(unpack_exponents(k, self.n))
            if t > best:
                best = t
        return best

    def homogeneous_degree(self):
        """Common total degree of all monomials, or None if inhomogeneous;
        -1 for zero."""
        deg = None
        for k in self.d:
            t = sum(unpack_exponents(k, self.n))
            if deg is None:
                deg = t
            elif deg != t:
                return None
        return -1 if deg is None else deg

    def divide_exact(self, other):
        """self / other when exact, else None."""
        self._chk(other)
        q = kernel.poly_div_exact(self.d, other.d, self.n)
        return None if q is None else MultiPoly(self.n, q)

    def divide_linear(self, coords):
        """self / (linear form) when exact, else None."""
        j = -1
        for i in range(len(coords) - 1, -1, -1):
            if coords[i]:
                j = i
                break
        if j < 0:
            raise ZeroDivisionError('division by the zero form')
        rest = tuple((1 << (NBITS * i), QQ(c))
                     for i, c in enumerate(coords) if c and i != j)
        q = kernel.poly_div_linear(self.d, NBITS * j, QQ(coords[j]), rest)
        return None if q is None else MultiPoly(self.n, q)

    def subst(self, forms):
        """Substitute forms[i] (MultiPoly) for variable i."""
        return MultiPoly(self.n,
                         kernel.poly_subst(self.d, self.n,
                                           [f.d for f in forms]))

    def twist(self, mat):
        """Apply the ring map alpha_j -> w(alpha_j) for the integer
        matrix mat (tuple of row tuples) of w: variable j goes to the
        linear form given by column j."""
        n = self.n
        forms = [MultiPoly.from_linear(tuple(mat[i][j] for i in range(n)))
                 for j in range(n)]
        return self.subst(forms)

    def kill_vars(self, ivars):
        """Set the variables with indices in ivars to zero."""
        out = {}
        for k, c in self.d.items():
            if any((k >> (NBITS * i)) & FIELD_MASK for i in ivars):
                continue
            out[k] = c
        return MultiPoly(self.n, out)

    def eval_ones(self):
        """Exact value at alpha_i = 1 for all i."""
        tot = QQ(0)
        for c in self.d.values():
            tot += c
        return tot

    def eval_at(self, point):
        """Exact value at alpha_i = point[i] (rationals)."""
        tot = QQ(0)
        for k, c in self.d.items():
            term = c
            i = 0
            while k:
                e = k & FIELD_MASK
                if e:
                    term = term * point[i] ** e
                k >>= NBITS
                i += 1
            tot += term
        return tot

    def primitive(self):
        """Return (scalar, primitive poly) with integer coprime
        coefficients and positive leading (max key) coefficient, such
        that self = scalar * primitive."""
        if not self.d:
            return QQ(1), self
        from math import gcd
        num_g = 0
        den_l = 1
        for c in self.d.values():
            num_g = gcd(num_g, int(c.numerator))
            den_l = den_l // gcd(den_l, int(c.denominator)) * int(c.denominator)
        scale = QQ(num_g, den_l)
        if self.d[max(self.d)] < 0:
            scale = -scale
        inv = 1 / scale
        prim = MultiPoly(self.n, {k: c * inv for k, c in self.d.items()})
        return scale, prim

    def __repr__(self):
        return poly_to_text(self)


def normalize_linear(coords):
    """Sign-normalize an integer linear form: first nonzero coefficient
    positive.  Returns (sign, normalized tuple)."""
    for c in coords:
        if c > 0:
            return 1, tuple(coords)
        if c < 0:
            return -1, tuple(-x for x in coords)
    raise ZeroDivisionError('zero linear form')


# ---------------------------------------------------------------------------
# Rational functions with factored denominators

def _root_key(coords):
    return ('r',) + tuple(coords)

def _poly_key(poly):
    return ('p', poly.key())


class RatFunc:
    """num / prod(factors), factors kept as a multiset.

    den maps a factor key to its multiplicity.  Keys are either
    ('r', c1..cn) for the linear form sum c_i alpha_i (sign-normalized,
    integer coords) or ('p', items) for a primitive non-linear
    polynomial.  The numerator is kept non-divisible by every factor.
    """

    __slots__ = ('num', 'den', 'n')

    def __init__(self, num, den, nvars, _canonical=False):
        self.num = num
        self.den = dict(den)
        self.n = nvars
        if num.n != nvars:
            raise PCanonError('numerator variable count mismatch')
        if not _canonical:
            self._reduce()

    # -- constructors ------------------------------------------------------

    @classmethod
    def zero(cls, nvars):
        return cls(MultiPoly.zero(nvars), {}, nvars, _canonical=True)

    @classmethod
    def const(cls, nvars, c):
        return cls(MultiPoly.const(nvars, c), {}, nvars, _canonical=True)

    @classmethod
    def from_poly(cls, poly):
        return cls(poly, {}, poly.n, _canonical=True)

    @classmethod
    def from_root(cls, nvars, coords):
        """The linear form of a root, as a polynomial."""
        return cls(MultiPoly.from_linear(coords), {}, nvars, _canonical=True)

    @classmethod
    def inverse_root(cls, nvars, coords):
        """1 / root."""
        sign, norm = normalize_linear(coords)
        num = MultiPoly.const(nvars, sign)
        return cls(num, {_root_key(norm): 1}, nvars, _canonical=True)

    # -- canonical form ----------------------------------------------------

    def _factor_poly(self, key):
        if key[0] == 'r':
            return MultiPoly.from_linear(key[1:])
        return MultiPoly(self.n, dict(key[1]))

    def _reduce(self):
        if self.num.is_zero():
            self.den = {}
            return
        for key in list(self.den):
            mult = self.den[key]
            while mult > 0:
                if key[0] == 'r':
                    q = self.num.divide_linear(key[1:])
                else:
                    q = self.num.divide_exact(self._factor_poly(key))
                if q is None:
                    break
                self.num = q
                mult -= 1
            if mult:
                self.den[key] = mult
            else:
                del self.den[key]

    # -- predicates --------------------------------------------------------

    def is_zero(self):
        return self.num.is_zero()

    def __bool__(self):
        return bool(self.num)

    def is_constant(self):
        return not self.den and self.num.is_constant()

    def as_constant(self):
        """The constant value; raises NotConstant otherwise."""
        if self.den:
            raise NotConstant('value %s has a denominator' % (self,))
        return self.num.constant_value()

    def o_scalar(self, oring):
        """(constant value, is a unit of O); raises NotConstant."""
        val = self.as_constant()
        return val, oring.is_unit(val)

    def den_poly(self):
        """The expanded denominator polynomial."""
        out = MultiPoly.const(self.n, 1)
        for key, mult in self.den.items():
            f = self._factor_poly(key)
            for _ in range(mult):
                out = out * f
        return out

    def homogeneous_v_degree(self):
        """v-degree (roots have degree 2) if homogeneous, else None;
        None for zero."""
        nd = self.num.homogeneous_degree()
        if nd is None or nd < 0:
            return None
        dd = 0
        for key, mult in self.den.items():
            f = self._factor_poly(key)
            h = f.homogeneous_degree()
            if h is None:
                return None
            dd += h * mult
        return 2 * (nd - dd)

    # -- arithmetic --------------------------------------------------------

    def _chk(self, other):
        if self.n != other.n:
            raise PCanonError('mixing rational functions over different rings')

    def __add__(self, other):
        if not isinstance(other, RatFunc):
            other = RatFunc.const(self.n, other)
        self._chk(other)
        if self.is_zero():
            return other
        if other.is_zero():
            return self
        lcm = dict(self.den)
        for key, mult in other.den.items():
            if lcm.get(key, 0) < mult:
                lcm[key] = mult
        a = self.num
        for key, mult in lcm.items():
            extra = mult - self.den.get(key, 0)
            f = self._factor_poly(key)
            for _ in range(extra):
                a = a * f
        b = other.num
        for key, mult in lcm.items():
            extra = mult - other.den.get(key, 0)
            f = self._factor_poly(key)
            for _ in range(extra):
                b = b * f
        return RatFunc(a + b, lcm, self.n)

    def __neg__(self):
        return RatFunc(-self.num, self.den, self.n, _canonical=True)

    def __sub__(self, other):
        if not isinstance(other, RatFunc):
            other = RatFunc.const(self.n, other)
        return self + (-other)

    def __mul__(self, other):
        if not isinstance(other, RatFunc):
            if isinstance(other, MultiPoly):
                other = RatFunc.from_poly(other)
            else:
                c = QQ(other)
                if not c:
                    return RatFunc.zero(self.n)
                return RatFunc(self.num * c, self.den, self.n,
                               _canonical=True)
        self._chk(other)
        if self.is_zero() or other.is_zero():
            return RatFunc.zero(self.n)
        den = dict(self.den)
        for key, mult in other.den.items():
            den[key] = den.get(key, 0) + mult
        return RatFunc(self.num * other.num, den, self.n)

    __rmul__ = __mul__

    def reciprocal(self):
        """1 / self, factoring the numerator into den factors: linear
        numerators become root factors, general ones primitive
        polynomial factors."""
        if self.is_zero():
            raise ZeroDivisionError('reciprocal of zero')
        num = MultiPoly.const(self.n, 1)
        for key, mult in self.den.items():
            f = self._factor_poly(key)
            for _ in range(mult):
                num = num * f
        scale, prim = self.num.primitive()
        den = {}
        if prim.is_constant():
            scale = scale * prim.constant_value()
        elif prim.homogeneous_degree() == 1:
            coords = tuple(int(prim.d.get(1 << (NBITS * i), 0))
                           for i in range(self.n))
            sign, norm = normalize_linear(coords)
            if sign < 0:
                scale = -scale
            den[_root_key(norm)] = 1
        else:
            den[_poly_key(prim)] = 1
        return RatFunc(num * (1 / QQ(scale)), den, self.n)

    def reciprocal_strict(self, roots):
        """1 / self when the numerator is a unit times a product of the
        given roots; raises DivisionByNonRoot otherwise.

        roots is an iterable of positive-root coordinate tuples.
        """
        if self.is_zero():
            raise ZeroDivisionError('reciprocal of zero')
        den = {}
        num = self.num
        for coords in roots:
            sign, norm = normalize_linear(coords)
            while True:
                q = num.divide_linear(norm)
                if q is None:
                    break
                num = q
                den[_root_key(norm)] = den.get(_root_key(norm), 0) + 1
        if not num.is_constant():
            raise DivisionByNonRoot(
                'numerator %s is not a unit times roots' % (self.num,))
        c = num.constant_value()
        out = MultiPoly.const(self.n, 1 / QQ(c))
        for key, mult in self.den.items():
            f = self._factor_poly(key)
            for _ in range(mult):
                out = out * f
        return RatFunc(out, den, self.n)

    def __truediv__(self, other):
        if not isinstance(other, RatFunc):
            return self * (QQ(1) / QQ(other))
        return self * other.reciprocal()

    def __eq__(self, other):
        if not isinstance(other, RatFunc):
            other = RatFunc.const(self.n, other)
        if self.n != other.n:
            return False
        if self.den == other.den:
            return self.num == other.num
        return (self.num * other.den_poly()) == (other.num * self.den_poly())

    def __hash__(self):
        raise TypeError('RatFunc is not hashable; use .key()')

    def key(self):
        return (self.num.key(), tuple(sorted(self.den.items())))

    # -- ring maps ---------------------------------------------------------

    def twist(self, mat):
        """Apply w to a rational function: substitute alpha_j -> w(alpha_j)
        everywhere.  Root factors stay linear forms (roots again)."""
        n = self.n
        num = self.num.twist(mat)
        den = {}
        sign_flips = 0
        for key, mult in self.den.items():
            if key[0] == 'r':
                coords = key[1:]
                new = tuple(sum(mat[i][j] * coords[j] for j in range(n))
                            for i in range(n))
                sign, norm = normalize_linear(new)
                if sign < 0 and mult % 2:
                    sign_flips += 1
                nk = _root_key(norm)
                den[nk] = den.get(nk, 0) + mult
            else:
                f = self._factor_poly(key).twist(mat)
                scale, prim = f.primitive()
                num = num * (1 / QQ(scale)) ** mult if scale != 1 else num
                nk = _poly_key(prim)
                den[nk] = den.get(nk, 0) + mult
        if sign_flips % 2:
            num = -num
        return RatFunc(num, den, self.n)

    def eval_at(self, point):
        """Exact value at alpha_i = point[i].  The point must avoid the
        vanishing locus of the denominator; W-orbit points of all-ones
        do, because roots never vanish there."""
        val = self.num.eval_at(point)
        for key, mult in self.den.items():
            if key[0] == 'r':
                fac = QQ(0)
                for c, q in zip(key[1:], point):
                    fac += c * q
            else:
                fac = self._factor_poly(key).eval_at(point)
            if not fac:
                raise PCanonError('denominator vanishes at the '
                                  'evaluation point')
            val = val / fac ** mult
        return val

    def kill_vars(self, ivars):
        """The parabolic projection pi_I: set alpha_i = 0 for i in I.
        Denominator factors must survive (raises NotInRI otherwise).
        """
        if not ivars:
            return self
        num = self.num.kill_vars(ivars)
        den = {}
        scale = QQ(1)
        for key, mult in self.den.items():
            if key[0] == 'r':
                coords = list(key[1:])
                for i in ivars:
                    coords[i] = 0
                if not any(coords):
                    raise NotInRI('denominator root %s lies in the killed '
                                  'parabolic' % (key,))
                sign, norm = normalize_linear(coords)
                if sign < 0 and mult % 2:
                    scale = -scale
                nk = _root_key(norm)
                den[nk] = den.get(nk, 0) + mult
            else:
                f = self._factor_poly(key).kill_vars(ivars)
                if f.is_zero():
                    raise NotInRI('denominator factor %s vanishes on the '
                                  'killed parabolic' % (key,))
                if f.is_constant():
                    scale = scale / f.constant_value() ** mult
                else:
                    s, prim = f.primitive()
                    scale = scale / QQ(s) ** mult
                    nk = _poly_key(prim)
                    den[nk] = den.get(nk, 0) + mult
        return RatFunc(num * scale, den, self.n)

    def eval_ones(self):
        """Exact value at all alpha_i = 1; denominator factors must not
        vanish there (roots never do)."""
        val = self.num.eval_ones()
        for key, mult in self.den.items():
            fv = self._factor_poly(key).eval_ones()
            if not fv:
                raise PCanonError('denominator %s vanishes at ones' % (key,))
            val = val / fv ** mult
        return val

    def __repr__(self):
        return ratfunc_to_text(self)


# ---------------------------------------------------------------------------
# Text form: serialization for checkpoints and braid-matrix files.
#
# Grammar (whitespace-free output, whitespace-tolerant input):
#   expr   := term (('+'|'-') term)*
#   term   := factor (('*'|'/') factor)*
#   factor := atom ('^' integer)?
#   atom   := integer | variable | '(' expr ')' | '-' atom
#   variable := 'a' 1-based-index
# Rational constants appear as integer/integer.

def poly_to_text(poly):
    if poly.is_zero():
        return '0'
    parts = []
    for k in sorted(poly.d, reverse=True):
        c = poly.d[k]
        exps = unpack_exponents(k, poly.n)
        vs = []
        for i, e in enumerate(exps):
            if e == 1:
                vs.append('a%d' % (i + 1))
            elif e > 1:
                vs.append('a%d^%d' % (i + 1, e))
        body = '*'.join(vs)
        cnum, cden = int(c.numerator), int(c.denominator)
        if not body:
            cs = str(cnum) if cden == 1 else '%d/%d' % (cnum, cden)
            parts.append(cs)
            continue
        if cnum == 1 and cden == 1:
            parts.append(body)
        elif cnum == -1 and cden == 1:
            parts.append('-' + body)
        elif cden == 1:
            parts.append('%d*%s' % (cnum, body))
        else:
            parts.append('%d*%s/%d' % (cnum, body, cden))
    out = '+'.join(parts).replace('+-', '-')
    return out


def ratfunc_to_text(r):
    num = poly_to_text(r.num)
    if not r.den:
        return num
    dparts = []
    for key in sorted(r.den):
        if key[0] == 'r':
            f = poly_to_text(MultiPoly.from_linear(key[1:]))
        else:
            f = poly_to_text(MultiPoly(r.n, dict(key[1])))
        # one factor per multiplicity unit: repeated division rebuilds the
        # factored denominator exactly on reparse
        dparts.extend(['(%s)' % f] * r.den[key])
    ns = num if ('+' not in num and '-' not in num.lstrip('-')) else '(%s)' % num
    # join with '/' so left-to-right parsing keeps every factor below the bar
    return '%s/%s' % (ns, '/'.join(dparts))


class _Parser:
    """Recursive-descent parser for the text grammar above."""

    def __init__(self, text, nvars):
        self.t = text
        self.i = 0
        self.n = nvars

    def _ws(self):
        while self.i < len(self.t) and self.t[self.i].isspace():
            self.i += 1

    def peek(self):
        self._ws()
        return self.t[self.i] if self.i < len(self.t) else ''

    def parse(self):
        r = self.expr()
        self._ws()
        if self.i != len(self.t):
            raise PCanonError('trailing junk in %r at %d' % (self.t, self.i))
        return r

    def expr(self):
        r = self.term()
        while True:
            c = self.peek()
            if c == '+':
                self.i += 1
                r = r + self.term()
            elif c == '-':
                self.i += 1
                r = r - self.term()
            else:
                return r

    def term(self):
        r = self.factor()
        while True:
            c = self.peek()
            if c == '*':
                self.i += 1
                r = r * self.factor()
            elif c == '/':
                self.i += 1
                r = r / self.factor()
            else:
                return r

    def factor(self):
        r = self.atom()
        if self.peek() == '^':
            self.i += 1
            e = self.integer()
            if e < 0:
                raise PCanonError('negative exponent in %r' % (self.t,))
            out = RatFunc.const(self.n, 1)
            for _ in range(e):
                out = out * r
            return out
        return r

    def atom(self):
        c = self.peek()
        if c == '-':
            # unary minus binds looser than '^': -a1^2 means -(a1^2)
            self.i += 1
            return -self.factor()
        if c == '(':
            self.i += 1
            r = self.expr()
            if self.peek() != ')':
                raise PCanonError('unbalanced parens in %r' % (self.t,))
            self.i += 1
            return r
        if c == 'a':
            self.i += 1
            idx = self.integer()
            if not 1 <= idx <= self.n:
                raise PCanonError('variable a%d out of range' % (idx,))
            return RatFunc.from_poly(MultiPoly.variable(self.n, idx - 1))
        if c.isdigit():
            return RatFunc.const(self.n, self.integer())
        raise PCanonError('cannot parse %r at position %d' % (self.t, self.i))

    def integer(self):
        self._ws()
        j = self.i
        while j < len(self.t) and self.t[j].isdigit():
            j += 1
        if j == self.i:
            raise PCanonError('expected integer in %r at %d' % (self.t, self.i))
        val = int(self.t[self.i:j])
        self.i = j
        return val


def ratfunc_from_text(text, nvars):
    """Parse the text grammar back into a RatFunc."""
    return _Parser(text, nvars).parse()


# ---------------------------------------------------------------------------
# Exact matrix rank

def matrix_rank(rows, p):
    """Rank of a dense matrix of rationals, over F_p (entries are
    reduced and must lie in Z_(p)) or over Q when p = 0.

    rows is a list of equal-length lists of ints/rationals.
    """
    if not rows or not rows[0]:
        return 0
    ncols = len(rows[0])
    if p:
        oring = ORing(p)
        mat = [[oring.residue(QQ(x)) for x in row] for row in rows]
    else:
        mat = [[QQ(x) for x in row] for row in rows]
    rank = 0
    for c in range(ncols):
        piv = -1
        for i in range(rank, len(mat)):
            if mat[i][c]:
                piv = i
                break
        if piv < 0:
            continue
        mat[rank], mat[piv] = mat[piv], mat[rank]
        top = mat[rank]
        if p:
            inv = pow(top[c], -1, p)
            for i in range(rank + 1, len(mat)):
                f = mat[i][c]
                if f:
                    fi = f * inv % p
                    mat[i] = [(a - fi * b) % p for a, b in zip(mat[i], top)]
        else:
            for i in range(rank + 1, len(mat)):
                f = mat[i][c]
                if f:
                    fi = f / top[c]
                    mat[i] = [a - fi * b for a, b in zip(mat[i], top)]
        rank += 1
        if rank == len(mat):
            break
    return rank
