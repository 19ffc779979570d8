"""The main algorithm: a model of the Hecke category, element by element.

For each group element w (in a length-compatible order) the pipeline
keeps a standard object T_w modelling the indecomposable B_w, inclusion
and projection maps i_{w,s}, p_{w,s} into the translated object
T_{ws}.B_s for every right descent s, and truncated light leaves in and
out of T_w.  A new element is built from its descents in five steps:

  translate    act the stored leaves of ws by B_s,
  reduce       peel every lower summand of T_{ws}.B_s off the identity
               wherever the local intersection form has a p-unit,
  split        column-echelon the surviving idempotent into p, i,
  braid        glue the splittings of the different descents through
               the 2m-valent braid matrices,
  truncate     conjugate the translated leaves into T_w and prune them
               to an O-independent set per local quotient.

The peel multiset gives the p-canonical column of w.  Three independent
bookkeeping routes (peels, graded ranks of the kept leaves, Hecke
algebra arithmetic on the already-known columns) must agree exactly, or
the run aborts; see _finish_element.

The same code drives the antispherical module: parabolic data enters
only through the exit-killing action (stdcat.anti_act_morphism) and the
module's own character arithmetic.
"""

import hashlib
import logging
import os
from concurrent.futures import ThreadPoolExecutor
from math import gcd

from .coxeter import format_word, parse_word
from .errors import (CharacterMismatch, CorruptCheckpoint, MissingDependency,
                     NonConstantEntry, NotConstant, NoUnitPivot, PCanonError,
                     VersionMismatch)
from .hecke import AntisphericalModule, HeckeAlgebra, elt_add, elt_scale
from .localisation import BSMor, BraidMatrixStore, one_colour_generators
from .ratfunc import (LaurentPoly, ORing, QQ, RatFunc, graded_rank_string,
                      matrix_rank, ratfunc_from_text, ratfunc_to_text)
from .stdcat import StdMor, anti_act_morphism
from .tables import PCanTable, element_sort_key

log = logging.getLogger('pcanon.pipeline')

CHECKPOINT_MAGIC = 'pcanon-element 1'
RUNSTAMP_MAGIC = 'pcanon-run 1'


class ElementData:
    """Everything the pipeline keeps for one finished element.

    frames is the standard sequence T_w (its last entry is w itself);
    incl[s]: T_w -> T_{ws}.B_s and proj[s]: T_{ws}.B_s -> T_w for every
    right descent s, with proj[s] o incl[s] = id; ups[x] and downs[x]
    are the kept truncated light leaves T_x -> T_w and T_w -> T_x;
    character[x] is the p-canonical coefficient pm_{x,w}.
    """

    __slots__ = ('w', 'frames', 's0', 'incl', 'proj', 'ups', 'downs',
                 'character')

    def __init__(self, w, frames, s0, incl, proj, ups, downs, character):
        self.w = w
        self.frames = tuple(frames)
        self.s0 = s0
        self.incl = incl
        self.proj = proj
        self.ups = ups
        self.downs = downs
        self.character = character


class PipelineState:
    """Completed elements of a run, downward closed in Bruhat order."""

    def __init__(self):
        self.completed = {}

    def get(self, w):
        dat = self.completed.get(w)
        if dat is None:
            raise MissingDependency('element %s needed before it was built'
                                    % format_word(w.word))
        return dat

    def register(self, dat):
        self.completed[dat.w] = dat


class MainPipeline:
    """One run of the main algorithm; see run_main for the entry point."""

    def __init__(self, system, p, ivars=(), store=None):
        self.system = system
        self.oring = ORing(p)
        self.p = p
        self.ivars = tuple(sorted(ivars))
        for t in self.ivars:
            if not 0 <= t < system.n:
                raise PCanonError('parabolic generator %d out of range' % (t,))
        self.store = store if store is not None else BraidMatrixStore(system)
        self.hecke = HeckeAlgebra(system)
        self.module = (AntisphericalModule(system, self.ivars)
                       if self.ivars else None)
        self.state = PipelineState()
        self.table = PCanTable(system, p, self.ivars)
        self._idmors = {}
        self._steps = {}
        self._seed_identity()

    # -- small helpers -------------------------------------------------------

    def _act(self, F, dom_word, cod_word, wmor):
        return anti_act_morphism(F, dom_word, cod_word, wmor, self.ivars)

    def _idmor(self, word):
        got = self._idmors.get(word)
        if got is None:
            got = BSMor.identity(self.system, word).mor
            self._idmors[word] = got
        return got

    def _in_quotient(self, x):
        return not self.ivars or self.system.is_minimal_rep(x, self.ivars)

    def _col_times_gen(self, col, s):
        """Canonical coordinates of (column) * b_s, in the right module."""
        if self.module is not None:
            return self.module.can_mult_gen(col, s)
        return self.hecke.can_mult_gen(col, s)

    def _h_poly(self, y, x):
        if self.module is not None:
            return self.module.h_poly(y, x)
        return self.hecke.h_poly(y, x)

    def _seed_identity(self):
        e = self.system.id
        frames = (e,)
        ident = StdMor.identity(frames)
        dat = ElementData(e, frames, None, {}, {},
                          {e: [ident]}, {e: [ident]},
                          {e: LaurentPoly.one()})
        self.state.register(dat)
        self.table.add_column(e, dat.character, 'computed')

    # -- translate -----------------------------------------------------------

    def _descent_steps(self, x, s):
        """The four reusable composites through T_x.B_s for a descent s
        of x: down to T_x (degree -1), down to T_xs (degree 0), and
        their mirrors out of T_x and T_xs."""
        key = (x, s)
        got = self._steps.get(key)
        if got is not None:
            return got
        dat = self.state.get(x)
        xs = x.times_gen(s)
        datxs = self.state.get(xs)
        g = one_colour_generators(self.system, s)
        idm = self._idmor((s,))
        idxs = StdMor.identity(datxs.frames)
        iB = self._act(dat.incl[s], (s,), (s,), idm)
        pB = self._act(dat.proj[s], (s,), (s,), idm)
        merge = self._act(idxs, (s, s), (s,), g['merge'].mor)
        split = self._act(idxs, (s,), (s, s), g['split'].mor)
        cap = self._act(idxs, (s, s), (), g['cap'].mor)
        cup = self._act(idxs, (), (s, s), g['cup'].mor)
        d0 = dat.proj[s].compose(merge).compose(iB)
        d1 = cap.compose(iB)
        d0up = pB.compose(split).compose(dat.incl[s])
        d1up = pB.compose(cup)
        got = (d0, d1, d0up, d1up)
        self._steps[key] = got
        return got

    def _translate(self, w, s):
        """Act the leaves of ws by B_s; returns (big frames, ups, downs)
        collated per target slot, in the light-leaves listing order."""
        ws = w.times_gen(s)
        dat = self.state.get(ws)
        idm = self._idmor((s,))
        g = one_colour_generators(self.system, s)
        big = self._act(StdMor.identity(dat.frames), (s,), (s,), idm)
        ups, downs = {}, {}
        for x in sorted(set(dat.downs) | set(dat.ups), key=element_sort_key):
            xs = x.times_gen(s)
            ascend = xs.length > x.length
            take_xs = ascend and (x == ws or self._in_quotient(xs))
            for a in dat.downs.get(x, ()):
                if ascend:
                    downs.setdefault(x, []).append(
                        self._act(a, (s,), (), g['enddot'].mor))
                    if take_xs:
                        aB = self._act(a, (s,), (s,), idm)
                        if x == ws:
                            downs.setdefault(w, []).append(aB)
                        else:
                            downs.setdefault(xs, []).append(
                                self.state.get(xs).proj[s].compose(aB))
                else:
                    d0, d1, _, _ = self._descent_steps(x, s)
                    aB = self._act(a, (s,), (s,), idm)
                    downs.setdefault(x, []).append(d0.compose(aB))
                    downs.setdefault(xs, []).append(d1.compose(aB))
            for b in dat.ups.get(x, ()):
                if ascend:
                    ups.setdefault(x, []).append(
                        self._act(b, (), (s,), g['startdot'].mor))
                    if take_xs:
                        bB = self._act(b, (s,), (s,), idm)
                        if x == ws:
                            ups.setdefault(w, []).append(bB)
                        else:
                            ups.setdefault(xs, []).append(
                                bB.compose(self.state.get(xs).incl[s]))
                else:
                    _, _, d0up, d1up = self._descent_steps(x, s)
                    bB = self._act(b, (s,), (s,), idm)
                    ups.setdefault(x, []).append(bB.compose(d0up))
                    ups.setdefault(xs, []).append(bB.compose(d1up))
        return big.dom, ups, downs

    # -- reduce --------------------------------------------------------------

    def _form_entry(self, out_row, e_col):
        """One local intersection form entry: a constant in O."""
        val = None
        for k, c in e_col.items():
            o = out_row.get(k)
            if o is not None:
                val = o * c if val is None else val + o * c
        if val is None or not val:
            return 0
        try:
            q = val.as_constant()
        except NotConstant as exc:
            raise NonConstantEntry(
                'local intersection form entry is not constant: %s' % (exc,))
        if not self.oring.in_O(q):
            raise NonConstantEntry(
                'local intersection form entry %s is not in O' % (q,))
        return q

    def _reduce(self, w, big, ups, downs):
        """Peel lower summands off the identity of T_{ws}.B_s; returns
        the reduced idempotent and the peel multiset {(x, d): count}."""
        E = StdMor.identity(big)
        peeled = {}
        slots = sorted((x for x in ups if x != w),
                       key=lambda x: (-x.length, x.word))
        for x in slots:
            ins_all = ups.get(x) or []
            outs_all = downs.get(x) or []
            if not ins_all or not outs_all:
                continue
            last = None  # index of the x-frame in T_x: always the end
            degs = sorted({u.deg for u in ins_all}
                          & {-o.deg for o in outs_all},
                          key=lambda d: (abs(d), d))
            for d in degs:
                ins = [u for u in ins_all if u.deg == d]
                outs = [o for o in outs_all if o.deg == -d]
                while True:
                    e_cols = []
                    for u in ins:
                        col = u.cols[len(u.dom) - 1]
                        acc = {}
                        for l, c in col.items():
                            for k, e in E.cols[l].items():
                                prev = acc.get(k)
                                acc[k] = e * c if prev is None else prev + e * c
                        e_cols.append(acc)
                    rows = []
                    for o in outs:
                        row = {}
                        for j, colj in enumerate(o.cols):
                            v = colj.get(len(o.cod) - 1)
                            if v is not None and v:
                                row[j] = v
                        rows.append(row)
                    M = [[self._form_entry(row, ec) for ec in e_cols]
                         for row in rows]
                    if matrix_rank(M, self.p) == 0:
                        break
                    pivot = None
                    for i, row in enumerate(M):
                        for j, q in enumerate(row):
                            if self.oring.is_unit(q):
                                pivot = (i, j)
                                break
                        if pivot:
                            break
                    if pivot is None:
                        raise NoUnitPivot(
                            'nonzero local form at %s degree %d has no '
                            'O-unit entry' % (format_word(x.word), d))
                    i, j = pivot
                    C = outs[i].compose(E).compose(ins[j])
                    Cinv = C.inverse_endo()
                    A = E.compose(ins[j])
                    B = outs[i].compose(E)
                    E = E - A.compose(Cinv).compose(B)
                    peeled[(x, d)] = peeled.get((x, d), 0) + 1
        if not E.compose(E) == E:
            raise PCanonError('reduced endomorphism at %s is not idempotent'
                              % format_word(w.word))
        return E, peeled

    # -- split ---------------------------------------------------------------

    def _split(self, E, w):
        """Reduced column echelon of the idempotent: T_w, i, p with
        p o i = id and i o p = E, verified exactly."""
        big = E.dom
        n = len(big)
        basis = []  # (pivot row, column dict), pivot rows increasing
        for j in range(n):
            v = dict(E.cols[j])
            for pr, b in basis:
                c = v.get(pr)
                if c is not None and c:
                    for i, bv in b.items():
                        cur = v.get(i)
                        nv = (-(c * bv)) if cur is None else cur - c * bv
                        if nv:
                            v[i] = nv
                        elif cur is not None:
                            del v[i]
            v = {i: c for i, c in v.items() if c}
            if not v:
                continue
            pr = min(v)
            inv = v[pr].reciprocal()
            v = {i: c * inv for i, c in v.items()}
            for k, (pr2, b2) in enumerate(basis):
                c = b2.get(pr)
                if c is not None and c:
                    nb = dict(b2)
                    for i, bv in v.items():
                        cur = nb.get(i)
                        nv = (-(c * bv)) if cur is None else cur - c * bv
                        if nv:
                            nb[i] = nv
                        elif cur is not None:
                            del nb[i]
                    basis[k] = (pr2, nb)
            basis.append((pr, v))
            basis.sort(key=lambda t: t[0])
        pivots = [pr for pr, _ in basis]
        frames = tuple(big[pr] for pr in pivots)
        i_mor = StdMor(frames, big, [dict(b) for _, b in basis], 0)
        p_mor = E.submatrix(pivots, range(n))
        ident = StdMor.identity(frames)
        if not p_mor.compose(i_mor) == ident:
            raise PCanonError('idempotent splitting failed p o i = id at %s'
                              % format_word(w.word))
        if not i_mor.compose(p_mor) == E:
            raise PCanonError('idempotent splitting failed i o p = E at %s'
                              % format_word(w.word))
        if frames[-1] is not w:
            raise PCanonError('top frame of T_%s is not the element itself'
                              % format_word(w.word))
        return frames, i_mor, p_mor

    # -- braiding ------------------------------------------------------------

    def _tower_up(self, w, a, b, i_raw):
        """Inclusion chain from T_w^a up the a-side of the {a,b} coset:
        the composite into T_x . (alternating word ending in a)."""
        cur = i_raw
        word = (a,)
        x = w.times_gen(a)
        u = b
        while x.has_right_descent(a) or x.has_right_descent(b):
            step = self._act(self.state.get(x).incl[u], word, word,
                             self._idmor(word))
            cur = step.compose(cur)
            x = x.times_gen(u)
            word = (u,) + word
            u = a if u == b else b
        return cur, x, word

    def _tower_down(self, w, b, a, p_raw):
        """Projection chain down the b-side, from T_x . (alternating
        word ending in b) back to T_w^b."""
        chain = []
        y = w
        v = b
        while y.has_right_descent(a) or y.has_right_descent(b):
            chain.append((y, v))
            y = y.times_gen(v)
            v = a if v == b else b
        cur = None
        word = tuple(u for _, u in reversed(chain))
        for k in range(len(chain) - 1, -1, -1):
            yk, vk = chain[k]
            word = word[1:]
            if yk is w:
                step = p_raw
            else:
                step = self._act(self.state.get(yk).proj[vk], word, word,
                                 self._idmor(word))
            cur = step if cur is None else step.compose(cur)
        return cur

    def _zig(self, w, a, b, raw):
        """The change of splitting phi_{a,b}: T_w^a -> T_w^b, through
        the braid matrix over the minimal coset element."""
        up, x, worda = self._tower_up(w, a, b, raw[a][1])
        braid = self.store.braid(worda[0], worda[1])
        if braid.dom_word != worda:
            raise PCanonError('braid word mismatch: %s vs %s'
                              % (format_word(braid.dom_word),
                                 format_word(worda)))
        wordb = braid.cod_word
        mid = self._act(StdMor.identity(self.state.get(x).frames),
                        worda, wordb, braid.mor)
        down = self._tower_down(w, b, a, raw[b][2])
        return down.compose(mid).compose(up)

    def _braiding(self, w, descents, s0, raw):
        """Final inclusions and projections for every descent, glued to
        the chosen splitting T_w = T_w^{s0}."""
        frames = raw[s0][0]
        incl, proj = {}, {}
        ident = StdMor.identity(frames)
        for s in descents:
            if s == s0:
                incl[s], proj[s] = raw[s][1], raw[s][2]
            else:
                phi = self._zig(w, s0, s, raw)
                ihp = self._zig(w, s, s0, raw)
                if not ihp.compose(phi) == ident:
                    raise PCanonError(
                        'phi_{%d,%d} o phi_{%d,%d} != id at %s'
                        % (s + 1, s0 + 1, s0 + 1, s + 1, format_word(w.word)))
                if not phi.compose(ihp) == StdMor.identity(raw[s][0]):
                    raise PCanonError(
                        'phi_{%d,%d} o phi_{%d,%d} != id at %s'
                        % (s0 + 1, s + 1, s + 1, s0 + 1, format_word(w.word)))
                incl[s] = raw[s][1].compose(phi)
                proj[s] = ihp.compose(raw[s][2])
            if not proj[s].compose(incl[s]) == ident:
                raise PCanonError('p o i != id for descent %d at %s'
                                  % (s + 1, format_word(w.word)))
        return frames, incl, proj

    # -- truncate and prune --------------------------------------------------

    def _quotient_vector(self, mor, x, up):
        """The loc_quotient image of a truncated leaf as a sparse vector
        keyed by the surviving index of the big side."""
        q = mor.loc_quotient(x)
        if up:
            if len(q.dom) != 1:
                raise PCanonError('quotient of an up leaf is not a column')
            return dict(q.cols[0]), q.cod
        if len(q.cod) != 1:
            raise PCanonError('quotient of a down leaf is not a row')
        vec = {}
        for j, col in enumerate(q.cols):
            c = col.get(0)
            if c is not None and c:
                vec[j] = c
        return vec, q.dom

    def _val_p(self, q):
        """p-adic valuation of a rational number, p prime."""
        p = self.p
        n, d = int(q.numerator), int(q.denominator)
        if n == 0:
            return 0
        v = 0
        while n % p == 0:
            n //= p
            v += 1
        if v:
            return v
        while d % p == 0:
            d //= p
            v -= 1
        return v

    def _dep_in_o(self, c):
        """Is a dependency coefficient p-integral?  The content of the
        numerator must carry at least the p-valuation of the denominator
        content; at p = 0 every coefficient qualifies."""
        if not self.p:
            return True
        num_val = min(self._val_p(q) for q in c.num.d.values())
        den_val = 0
        for key, mult in c.den.items():
            if key[0] == 'r':
                g = 0
                for a in key[1:]:
                    g = gcd(g, abs(a))
                den_val += mult * self._val_p(QQ(g))
            else:
                den_val += mult * min(self._val_p(q)
                                      for q in dict(key[1]).values())
        return num_val >= den_val

    def _prune(self, w, x, candidates, up):
        """Keep the candidates whose local quotient images are not
        O-combinations of the already-kept images.

        An exact echelon over the rational function field detects linear
        dependence; a dependent image is dropped only when its (unique)
        expression over the kept pivots is p-integral.  A dependent
        image needing 1/p stays: it carries new O-lattice content even
        though it spans nothing new rationally.  Kept counts are audited
        against the character afterwards, so over-keeping cannot pass
        silently.
        """
        order = sorted(range(len(candidates)),
                       key=lambda k: (candidates[k].deg, k))
        kept = []
        echelon = []  # (pivot, vec normalized, expr over kept indices)
        for k in order:
            mor = candidates[k]
            vec, _ = self._quotient_vector(mor, x, up)
            coeffs = {}
            for pr, b, expr in echelon:
                c = vec.get(pr)
                if c is not None and c:
                    for i, bv in b.items():
                        cur = vec.get(i)
                        nv = (-(c * bv)) if cur is None else cur - c * bv
                        if nv:
                            vec[i] = nv
                        elif cur is not None:
                            del vec[i]
                    for i, ev in expr.items():
                        coeffs[i] = coeffs.get(i, RatFunc.zero(ev.n)) + c * ev
            vec = {i: c for i, c in vec.items() if c}
            if vec:
                pr = min(vec)
                inv = vec[pr].reciprocal()
                nvec = {i: c * inv for i, c in vec.items()}
                nexpr = {len(kept): inv}
                # keep the echelon reduced so dependency coefficients of
                # later candidates can be read off directly
                for idx, (pr2, b2, expr2) in enumerate(echelon):
                    c = b2.get(pr)
                    if c is not None and c:
                        nb = dict(b2)
                        for i, bv in nvec.items():
                            cur = nb.get(i)
                            nv = (-(c * bv)) if cur is None else cur - c * bv
                            if nv:
                                nb[i] = nv
                            elif cur is not None:
                                del nb[i]
                        ne = dict(expr2)
                        for i, ev in nexpr.items():
                            ne[i] = ne.get(i, RatFunc.zero(ev.n)) - c * ev
                        echelon[idx] = (pr2, nb, ne)
                echelon.append((pr, nvec, nexpr))
                kept.append(mor)
            elif not all(self._dep_in_o(c) for c in coeffs.values() if c):
                kept.append(mor)
        return kept

    def _truncate_and_prune(self, w, per_s0, incl0, proj0):
        big, ups, downs, peeled = per_s0
        kept_ups, kept_downs = {}, {}
        for x in sorted(ups, key=element_sort_key):
            if x is w:
                cand_up = [proj0.compose(u).compose(incl0) for u in ups[x]]
                cand_down = [proj0.compose(d0).compose(incl0)
                             for d0 in downs[x]]
            else:
                cand_up = [proj0.compose(u) for u in ups[x]]
                cand_down = [d0.compose(incl0) for d0 in downs[x]]
            ku = self._prune(w, x, cand_up, True)
            kd = self._prune(w, x, cand_down, False)
            if ku:
                kept_ups[x] = ku
            if kd:
                kept_downs[x] = kd
        return kept_ups, kept_downs

    # -- character bookkeeping -----------------------------------------------

    def _graded_count(self, mors):
        c = {}
        for m in mors:
            c[m.deg] = c.get(m.deg, 0) + 1
        return LaurentPoly(c)

    def _finish_element(self, w, descents, peels, kept_ups, kept_downs,
                        frames):
        """All character cross-checks; returns the column of w.

        The claimed column comes from Remark 4.1 for every descent s:
        pm_{.,ws}*b_s minus the peeled columns.  All descents must give
        the same answer.  The graded counts of the kept leaves must then
        match sum_z pm_{z,w} h_{x,z} in both directions, and the frame
        multiset of T_w must be that character evaluated at v = 1.
        """
        column = None
        for s in descents:
            ws = w.times_gen(s)
            coords = self._col_times_gen(self.table.columns[ws], s)
            claimed = dict(coords)
            for (x, d), cnt in peels[s].items():
                poly = LaurentPoly({d: -cnt})
                claimed = elt_add(claimed,
                                  elt_scale(self.table.columns[x], poly))
            if column is None:
                column = claimed
            elif column != claimed:
                raise CharacterMismatch(
                    'descents %d and %d disagree on the column of %s'
                    % (descents[0] + 1, s + 1, format_word(w.word)))
        for x, poly in column.items():
            if any(c < 0 for _, c in poly.items()):
                raise CharacterMismatch(
                    'negative peel bookkeeping at %s in the column of %s'
                    % (format_word(x.word), format_word(w.word)))
        if column.get(w) != LaurentPoly.one():
            raise CharacterMismatch('pm_{w,w} != 1 at %s'
                                    % format_word(w.word))
        # graded ranks of the kept leaves: sum_z pm_{z,w} h_{x,z} per slot
        slots = set(kept_ups) | set(kept_downs)
        for x in sorted(slots, key=element_sort_key):
            want = LaurentPoly.zero()
            for z, poly in column.items():
                h = self._h_poly(x, z)
                if h:
                    want = want + poly * h
            got_up = self._graded_count(kept_ups.get(x, ()))
            got_down = self._graded_count(kept_downs.get(x, ()))
            if got_up != want or got_down != want:
                raise CharacterMismatch(
                    'kept leaves at %s have graded rank %s/%s, character '
                    'arithmetic gives %s (element %s)'
                    % (format_word(x.word), got_up, got_down, want,
                       format_word(w.word)))
        # Remark 3.5: the frame multiset is the v = 1 shadow
        want_frames = {}
        for z, poly in column.items():
            mult = poly.eval_one()
            for y in self.system.bruhat_interval_below(z):
                if not self._in_quotient(y):
                    continue
                h = self._h_poly(y, z)
                if h:
                    n = mult * h.eval_one()
                    if n:
                        want_frames[y] = want_frames.get(y, 0) + n
        got_frames = {}
        for f in frames:
            got_frames[f] = got_frames.get(f, 0) + 1
        if got_frames != want_frames:
            raise CharacterMismatch(
                'frame multiset of T_%s does not match the character'
                % format_word(w.word))
        return column

    # -- per-element driver ----------------------------------------------------

    def _compute_element(self, w):
        descents = sorted(s for s in range(self.system.n)
                          if w.has_right_descent(s))
        s0 = descents[0]
        raw = {}
        translated = {}
        peels = {}
        for s in descents:
            big, ups, downs = self._translate(w, s)
            E, peeled = self._reduce(w, big, ups, downs)
            raw[s] = self._split(E, w)
            translated[s] = (big, ups, downs, peeled)
            peels[s] = peeled
        frames, incl, proj = self._braiding(w, descents, s0, raw)
        kept_ups, kept_downs = self._truncate_and_prune(
            w, translated[s0], incl[s0], proj[s0])
        column = self._finish_element(w, descents, peels, kept_ups,
                                      kept_downs, frames)
        dat = ElementData(w, frames, s0, incl, proj, kept_ups, kept_downs,
                          column)
        if log.isEnabledFor(logging.INFO):
            log.info('element %s: |T_w| = %d, big = %d, coeff bits = %d',
                     format_word(w.word), len(frames),
                     len(translated[s0][0]), _peak_coeff_bits(dat))
        return dat

    def register(self, dat):
        self.state.register(dat)
        if not self.table.has_column(dat.w):
            self.table.add_column(dat.w, dat.character, 'computed')


def _peak_coeff_bits(dat):
    """Largest numerator/denominator coefficient, in bits, over the
    stored matrices; the paper's footnote-9 growth measure."""
    best = 0
    mors = list(dat.incl.values()) + list(dat.proj.values())
    for group in (dat.ups, dat.downs):
        for l in group.values():
            mors.extend(l)
    for m in mors:
        for col in m.cols:
            for v in col.values():
                for c in v.num.d.values():
                    best = max(best, int(c.numerator).bit_length(),
                               int(c.denominator).bit_length())
    return best


# ---------------------------------------------------------------------------
# Checkpointing: one versioned text file per element, hash-sealed

def _mor_lines(mor, out):
    nnz = sum(len(c) for c in mor.cols)
    out.append('mor %d %d %d %d' % (mor.deg, len(mor.cod), len(mor.dom), nnz))
    out.append('dom ' + ' '.join(format_word(f.word) for f in mor.dom))
    out.append('cod ' + ' '.join(format_word(f.word) for f in mor.cod))
    for j, col in enumerate(mor.cols):
        for i in sorted(col):
            out.append('e %d %d %s' % (i, j, ratfunc_to_text(col[i])))


class _Cursor:
    def __init__(self, lines):
        self.lines = lines
        self.k = 0

    def next(self, tag=None):
        if self.k >= len(self.lines):
            raise CorruptCheckpoint('unexpected end of checkpoint file')
        line = self.lines[self.k]
        self.k += 1
        if tag is not None and not line.startswith(tag + ' ') and line != tag:
            raise CorruptCheckpoint('expected %r line, got %r' % (tag, line))
        return line


def _parse_mor(cur, system):
    head = cur.next('mor').split()
    deg, nrows, ncols, nnz = (int(t) for t in head[1:])
    dom_line = cur.next('dom').split()[1:]
    cod_line = cur.next('cod').split()[1:]
    if len(dom_line) != ncols or len(cod_line) != nrows:
        raise CorruptCheckpoint('frame count mismatch in checkpoint')
    dom = tuple(system.element(parse_word(t, system.n)) for t in dom_line)
    cod = tuple(system.element(parse_word(t, system.n)) for t in cod_line)
    cols = [{} for _ in dom]
    for _ in range(nnz):
        parts = cur.next('e').split(' ', 3)
        i, j = int(parts[1]), int(parts[2])
        cols[j][i] = ratfunc_from_text(parts[3], system.n)
    try:
        return StdMor(dom, cod, cols, deg)
    except PCanonError as exc:
        raise CorruptCheckpoint('bad morphism in checkpoint: %s' % (exc,))


def element_to_text(dat):
    """Deterministic text serialization of ElementData, hash-sealed."""
    out = [CHECKPOINT_MAGIC]
    out.append('w ' + format_word(dat.w.word))
    out.append('s0 %s' % ('-' if dat.s0 is None else str(dat.s0 + 1)))
    out.append('frames ' + ' '.join(format_word(f.word) for f in dat.frames))
    descents = sorted(dat.incl)
    out.append('descents %d' % len(descents))
    for s in descents:
        out.append('descent %d' % (s + 1))
        _mor_lines(dat.incl[s], out)
        _mor_lines(dat.proj[s], out)
    slots = sorted(set(dat.ups) | set(dat.downs), key=element_sort_key)
    out.append('slots %d' % len(slots))
    for x in slots:
        ups = dat.ups.get(x, [])
        downs = dat.downs.get(x, [])
        out.append('slot %s %d %d' % (format_word(x.word), len(ups),
                                      len(downs)))
        for m in ups:
            _mor_lines(m, out)
        for m in downs:
            _mor_lines(m, out)
    chars = sorted(dat.character, key=element_sort_key)
    out.append('character %d' % len(chars))
    for x in chars:
        out.append('char %s %s' % (format_word(x.word),
                                   graded_rank_string(dat.character[x])))
    body = '\n'.join(out)
    seal = hashlib.sha256(body.encode('ascii')).hexdigest()
    return body + '\nsha256 ' + seal + '\n'


def element_from_text(text, system):
    lines = text.splitlines()
    if not lines or lines[0] != CHECKPOINT_MAGIC:
        raise VersionMismatch('unknown checkpoint version: %r'
                              % (lines[0] if lines else ''))
    if not lines[-1].startswith('sha256 '):
        raise CorruptCheckpoint('checkpoint is not sealed')
    body = '\n'.join(lines[:-1])
    seal = lines[-1].split()[1]
    if hashlib.sha256(body.encode('ascii')).hexdigest() != seal:
        raise CorruptCheckpoint('checkpoint hash mismatch')
    cur = _Cursor(lines[1:-1])
    w = system.element(parse_word(cur.next('w').split()[1], system.n))
    s0_tok = cur.next('s0').split()[1]
    s0 = None if s0_tok == '-' else int(s0_tok) - 1
    frames = tuple(system.element(parse_word(t, system.n))
                   for t in cur.next('frames').split()[1:])
    incl, proj = {}, {}
    for _ in range(int(cur.next('descents').split()[1])):
        s = int(cur.next('descent').split()[1]) - 1
        incl[s] = _parse_mor(cur, system)
        proj[s] = _parse_mor(cur, system)
    ups, downs = {}, {}
    for _ in range(int(cur.next('slots').split()[1])):
        parts = cur.next('slot').split()
        x = system.element(parse_word(parts[1], system.n))
        nu, nd = int(parts[2]), int(parts[3])
        if nu:
            ups[x] = [_parse_mor(cur, system) for _ in range(nu)]
        if nd:
            downs[x] = [_parse_mor(cur, system) for _ in range(nd)]
    character = {}
    for _ in range(int(cur.next('character').split()[1])):
        parts = cur.next('char').split()
        x = system.element(parse_word(parts[1], system.n))
        character[x] = LaurentPoly(
            {int(a): int(b) for a, b in (t.split(':') for t in parts[2:])})
    return ElementData(w, frames, s0, incl, proj, ups, downs, character)


def _checkpoint_path(directory, w):
    return os.path.join(directory, 'elem_%03d_%s.txt'
                        % (w.length, format_word(w.word)))


def save_element(directory, dat):
    path = _checkpoint_path(directory, dat.w)
    tmp = path + '.tmp'
    with open(tmp, 'w') as fh:
        fh.write(element_to_text(dat))
    os.replace(tmp, path)


def load_element(directory, w, system):
    """The checkpointed ElementData for w, or None if absent."""
    path = _checkpoint_path(directory, w)
    if not os.path.exists(path):
        return None
    with open(path) as fh:
        text = fh.read()
    dat = element_from_text(text, system)
    if dat.w is not w:
        raise CorruptCheckpoint('checkpoint %s holds a different element'
                                % path)
    return dat


def _run_stamp(system, p, ivars):
    rows = ' '.join(str(c) for row in system.gcm for c in row)
    return '%s\ngcm %d %s\np %d\nparabolic %s\n' % (
        RUNSTAMP_MAGIC, system.n, rows, p,
        '-' if not ivars else '.'.join(str(t + 1) for t in sorted(ivars)))


def check_run_stamp(directory, system, p, ivars):
    """Create or verify the run-identity stamp of a checkpoint dir."""
    os.makedirs(directory, exist_ok=True)
    path = os.path.join(directory, 'run.txt')
    stamp = _run_stamp(system, p, ivars)
    if os.path.exists(path):
        with open(path) as fh:
            found = fh.read()
        if found != stamp:
            raise VersionMismatch(
                'checkpoint directory %s belongs to a different run'
                % directory)
    else:
        with open(path, 'w') as fh:
            fh.write(stamp)


# ---------------------------------------------------------------------------
# Entry point

def plan_elements(system, ivars, length_limit, words):
    """The ordered element list of a run: a downward-closed set, length
    bands ascending, lexicographic within a band."""
    if words is not None:
        targets = []
        for word in words:
            w = system.element(word)
            if ivars:
                system.check_minimal_rep(w, ivars)
            targets.append(w)
        needed = set()
        for t in targets:
            for x in system.bruhat_interval_below(t):
                if not ivars or system.is_minimal_rep(x, ivars):
                    needed.add(x)
        return sorted(needed, key=element_sort_key)
    if length_limit is None:
        raise PCanonError('a length limit or an explicit word list '
                          'is required')
    if ivars:
        return system.minimal_reps_up_to(length_limit, ivars)
    return system.elements_up_to(length_limit)


def run_main(system, p, ivars=(), length_limit=None, words=None, store=None,
             checkpoint_dir=None, threads=1, stop_after_length=None):
    """Run the main pipeline; returns the table of p-canonical columns.

    words, when given, is a list of generator-index tuples and overrides
    the length limit (their full lower Bruhat cones are processed).
    checkpoint_dir makes the run resumable: completed elements are
    reloaded instead of recomputed, bitwise identically.
    stop_after_length ends the run early after that length band (used
    to exercise checkpoint resumption).
    """
    pipe = MainPipeline(system, p, ivars=ivars, store=store)
    plan = plan_elements(system, pipe.ivars, length_limit, words)
    if checkpoint_dir:
        check_run_stamp(checkpoint_dir, system, p, pipe.ivars)
    todo = []
    loading = checkpoint_dir is not None
    for w in plan:
        if w.length == 0:
            continue
        if loading:
            dat = load_element(checkpoint_dir, w, system)
            if dat is not None:
                pipe.register(dat)
                continue
            loading = False
        todo.append(w)
    bands = {}
    for w in todo:
        bands.setdefault(w.length, []).append(w)
    if threads > 1 and plan:
        # intern every element the workers can touch up front, so the
        # per-system element cache is never written concurrently
        system.elements_up_to(max(w.length for w in plan))
    for length in sorted(bands):
        if stop_after_length is not None and length > stop_after_length:
            break
        band = bands[length]
        if threads > 1 and len(band) > 1:
            with ThreadPoolExecutor(max_workers=threads) as pool:
                results = list(pool.map(pipe._compute_element, band))
        else:
            results = [pipe._compute_element(w) for w in band]
        for dat in results:
            pipe.register(dat)
            if checkpoint_dir:
                save_element(checkpoint_dir, dat)
    return pipe.table
