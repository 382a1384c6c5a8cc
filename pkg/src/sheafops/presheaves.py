"""Presheaves on finite sites and the plus-construction.

Presheaves live on an explicit open lattice (materialized for Alexandrov
sites).  The sheaf condition is the equalizer condition over coverings;
sheafification is the plus-functor applied twice, with the covering colimit
evaluated at a finest covering (the reduced product of all declared
families, which refines every covering of a finite site).
"""

from __future__ import annotations

import itertools
from typing import Callable, Dict, FrozenSet, Iterable, List, Optional, Sequence, Tuple

from .linalg import Field, Matrix, QQ
from .sheaves import SheafError, StalkSheaf
from .sites import FiniteSite, Open, SiteError, materialize_lattice, minimal_open_cover

Family = Tuple[Open, ...]


def _canonical_family(members: Iterable[Open]) -> Family:
    return tuple(sorted(set(members), key=lambda s: (len(s), sorted(s))))


def site_opens(site: FiniteSite) -> List[Open]:
    if site.lazy_lattice:
        return list(materialize_lattice(site))
    return list(site.lattice)


def checkable_covers(site: FiniteSite, u: Open) -> List[Family]:
    """Covering families the workbench checks the sheaf condition against.

    For extensional systems: all declared families plus the reduced finest
    cover.  For intensional (full Alexandrov) systems, which have
    exponentially many coverings, the minimal-open cover and the identity
    cover; the sheaf condition for all remaining union-covers follows and is
    exercised separately by the law suite.
    """
    if site.coverings.union_predicate:
        fams = [_canonical_family([u])] if u else []
        fams.append(_canonical_family(minimal_open_cover(site, u)) if u else ())
        return sorted(set(fams))
    fams = [_canonical_family(f) for f in site.coverings.declared(u)]
    fams.append(finest_covering(site, u))
    return sorted(set(fams))


def finest_covering(site: FiniteSite, u: Open) -> Family:
    """A covering of u refining every covering (maximum of the preorder).

    The reduced meet-product of every declared family of every open
    containing u; reduction keeps only maximal members, which is a mutually
    refining (hence colimit-equivalent) subfamily.
    """
    if site.coverings.union_predicate:
        return _canonical_family(minimal_open_cover(site, u)) if u else ()
    if not u:
        return ()
    current: List[Open] = [u]
    for w, fams in sorted(site.coverings.covers.items(), key=lambda kv: (len(kv[0]), sorted(kv[0]))):
        if not u <= w:
            continue
        for fam in fams:
            met = {a & v for a in current for v in fam}
            current = _reduce_to_maximal(met)
    return _canonical_family(current)


def _reduce_to_maximal(members: Iterable[Open]) -> List[Open]:
    ms = [m for m in set(members) if m]
    out = []
    for m in ms:
        if not any(m < n for n in ms):
            out.append(m)
    return out if out else [frozenset()]


class Presheaf:
    """A functor on the open lattice with exact restriction matrices."""

    def __init__(
        self,
        site: FiniteSite,
        dims: Dict[Open, int],
        restricts: Dict[Tuple[Open, Open], Matrix],
        field: Field = QQ,
        opens: Optional[List[Open]] = None,
        validate: bool = True,
    ):
        self.site = site
        self.field = field
        self.opens = opens if opens is not None else site_opens(site)
        self.dims = {u: int(dims.get(u, 0)) for u in self.opens}
        self._restricts: Dict[Tuple[Open, Open], Matrix] = {}
        for (u, v), m in restricts.items():
            if m.shape != (self.dims[v], self.dims[u]):
                raise SheafError(f"restriction shape mismatch {set(u)} -> {set(v)}")
            self._restricts[(u, v)] = m
        self._complete()
        if validate:
            self.validate()

    def _complete(self):
        order = sorted(self.opens, key=lambda s: (-len(s), sorted(s)))
        for u in order:
            for v in order:
                if v < u and (u, v) not in self._restricts:
                    mid = [w for w in order if v < w < u]
                    filled = False
                    for w in mid:
                        if (u, w) in self._restricts and (w, v) in self._restricts:
                            self._restricts[(u, v)] = (
                                self._restricts[(w, v)] * self._restricts[(u, w)]
                            )
                            filled = True
                            break
                    if not filled:
                        if self.dims[u] == 0 or self.dims[v] == 0:
                            self._restricts[(u, v)] = Matrix.zero(
                                self.dims[v], self.dims[u], self.field
                            )
                        else:
                            raise SheafError(
                                f"missing restriction {set(u)} -> {set(v)}"
                            )

    def validate(self):
        for u in self.opens:
            for w in self.opens:
                for v in self.opens:
                    if v < w < u:
                        if self.restrict(w, v) * self.restrict(u, w) != self.restrict(u, v):
                            raise SheafError(
                                f"restriction functoriality fails {set(u)} -> {set(w)} -> {set(v)}"
                            )

    def value(self, u: Open) -> int:
        return self.dims[u]

    def restrict(self, u: Open, v: Open) -> Matrix:
        if u == v:
            return Matrix.identity(self.dims[u], self.field)
        return self._restricts[(u, v)]

    # -- equalizer over a family ------------------------------------------

    def family_space(self, fam: Family) -> "FamilySpace":
        return FamilySpace(self, fam)

    def family_map(self, u: Open, fam: Family) -> Matrix:
        """The canonical map F(U) -> F(S) by componentwise restriction."""
        fs = FamilySpace(self, fam)
        field = self.field
        raw = Matrix.zero(fs.total, self.dims[u], field)
        for v in fam:
            r = self.restrict(u, v)
            for i in range(r.rows):
                raw.data[fs.offsets[v] + i] = list(r.data[i])
        return fs.basis.solve(raw)

    def __repr__(self):
        return f"Presheaf({len(self.opens)} opens)"


class FamilySpace:
    """F(S): compatible families over the members of S."""

    def __init__(self, F: Presheaf, fam: Family):
        self.F = F
        self.fam = fam
        self.offsets: Dict[Open, int] = {}
        n = 0
        for v in fam:
            self.offsets[v] = n
            n += F.dims[v]
        self.total = n
        field = F.field
        rows: List[List] = []
        for v, w in itertools.combinations(fam, 2):
            meet = v & w
            rv, rw = F.restrict(v, meet), F.restrict(w, meet)
            for i in range(rv.rows):
                row = [field.zero] * n
                for j in range(rv.cols):
                    row[self.offsets[v] + j] = rv.data[i][j]
                for j in range(rw.cols):
                    row[self.offsets[w] + j] = row[self.offsets[w] + j] - rw.data[i][j]
                rows.append(row)
        if rows:
            self.basis = Matrix(len(rows), n, rows, field).kernel()
        else:
            self.basis = Matrix.identity(n, field)

    @property
    def dim(self) -> int:
        return self.basis.cols

    def refinement_map(self, finer: "FamilySpace") -> Matrix:
        """The canonical map F(S) -> F(S') when S' refines S."""
        F = self.F
        field = F.field
        parents: Dict[Open, Open] = {}
        for w in finer.fam:
            for v in self.fam:
                if w <= v:
                    parents[w] = v
                    break
            else:
                raise SheafError("family does not refine the source family")
        raw = Matrix.zero(finer.total, self.basis.cols, field)
        for w in finer.fam:
            v = parents[w]
            r = F.restrict(v, w)
            comp = self.basis.submatrix(
                range(self.offsets[v], self.offsets[v] + F.dims[v]),
                range(self.basis.cols),
            )
            block = r * comp
            for i in range(block.rows):
                raw.data[finer.offsets[w] + i] = list(block.data[i])
        return finer.basis.solve(raw)


class PresheafMorphism:
    def __init__(
        self,
        source: Presheaf,
        target: Presheaf,
        components: Dict[Open, Matrix],
        validate: bool = True,
    ):
        self.source = source
        self.target = target
        self.components = {}
        for u in source.opens:
            m = components.get(u)
            if m is None:
                m = Matrix.zero(target.dims[u], source.dims[u], source.field)
            if m.shape != (target.dims[u], source.dims[u]):
                raise SheafError(f"component shape mismatch at {set(u)}")
            self.components[u] = m
        if validate:
            self.validate()

    def validate(self):
        for u in self.source.opens:
            for v in self.source.opens:
                if v < u:
                    lhs = self.components[v] * self.source.restrict(u, v)
                    rhs = self.target.restrict(u, v) * self.components[u]
                    if lhs != rhs:
                        raise SheafError(f"naturality fails {set(u)} -> {set(v)}")

    def compose(self, other: "PresheafMorphism") -> "PresheafMorphism":
        return PresheafMorphism(
            other.source,
            self.target,
            {u: self.components[u] * other.components[u] for u in self.components},
            validate=False,
        )

    @staticmethod
    def identity(F: Presheaf) -> "PresheafMorphism":
        return PresheafMorphism(
            F, F, {u: Matrix.identity(F.dims[u], F.field) for u in F.opens}, validate=False
        )

    def is_isomorphism(self) -> bool:
        return all(m.is_invertible() for m in self.components.values())


# -- sheaf condition -------------------------------------------------------


def check_sheaf(F: Presheaf) -> Tuple[str, Optional[str]]:
    """Classify a presheaf as "sheaf", "separated" or "neither".

    Returns the classification and a witness description for the first
    failure of the stronger condition.
    """
    separated = True
    glueing = True
    witness = None
    site = F.site
    for u in F.opens:
        for fam in checkable_covers(site, u):
            fmap = F.family_map(u, fam)
            inj = fmap.kernel().cols == 0
            iso = inj and fmap.rank() == fmap.rows
            if not inj and separated:
                separated = False
                witness = witness or f"not separated at U={sorted(u)} with family {[sorted(v) for v in fam]}"
            if not iso and glueing:
                glueing = False
                witness = witness or f"gluing fails at U={sorted(u)} with family {[sorted(v) for v in fam]}"
    if separated and glueing:
        return "sheaf", None
    if separated:
        return "separated", witness
    return "neither", witness


def pairwise_glue_check(F: Presheaf) -> bool:
    """Exactness of 0 -> F(U+V) -> F(U) x F(V) -> F(U cap V) for all pairs.

    Requires F(empty) = 0; for finite coverings this two-open condition
    already forces the full sheaf condition (a tested implication).
    """
    if F.dims[frozenset()] != 0:
        return False
    for u, v in itertools.combinations(F.opens, 2):
        join, meet = u | v, u & v
        a = F.restrict(join, u).vstack(F.restrict(join, v))
        b = F.restrict(u, meet).hstack(-F.restrict(v, meet))
        if a.kernel().cols != 0:
            return False
        if not (b * a).is_zero():
            return False
        if a.rank() != b.kernel().cols:
            return False
    return True


# -- plus construction -----------------------------------------------------


def plus_functor(F: Presheaf) -> Tuple[Presheaf, PresheafMorphism]:
    """F^+ with the canonical map F -> F^+.

    F^+(U) is the covering colimit evaluated at the finest covering of U;
    on sites where every covering is refined by the finest one, this is the
    exact value of the filtered colimit.
    """
    site = F.site
    spaces = {u: F.family_space(finest_covering(site, u)) for u in F.opens}
    dims = {u: spaces[u].dim for u in F.opens}
    restricts: Dict[Tuple[Open, Open], Matrix] = {}
    for u in F.opens:
        for v in F.opens:
            if v < u:
                # restrict a compatible family over S*(U) to one over S*(V)
                restricts[(u, v)] = _family_restriction(F, spaces[u], spaces[v])
    plus = Presheaf(site, dims, restricts, F.field, opens=F.opens, validate=False)
    unit = PresheafMorphism(
        F, plus, {u: F.family_map(u, spaces[u].fam) for u in F.opens}, validate=False
    )
    return plus, unit


def _family_restriction(F: Presheaf, su: FamilySpace, sv: FamilySpace) -> Matrix:
    """Map F(S*(U)) -> F(S*(V)) for V <= U: each member of S*(V) lies in a
    member of S*(U) after meeting with V, by construction of the finest
    covers."""
    field = F.field
    raw = Matrix.zero(sv.total, su.basis.cols, field)
    for w in sv.fam:
        parent = None
        for p in su.fam:
            if w <= p:
                parent = p
                break
        if parent is None:
            raise SheafError(
                f"finest cover member {set(w)} has no parent; coverings are inconsistent"
            )
        r = F.restrict(parent, w)
        comp = su.basis.submatrix(
            range(su.offsets[parent], su.offsets[parent] + F.dims[parent]),
            range(su.basis.cols),
        )
        block = r * comp
        for i in range(block.rows):
            raw.data[sv.offsets[w] + i] = list(block.data[i])
    return sv.basis.solve(raw)


def plus_morphism(phi: PresheafMorphism, Fp: Presheaf, Gp: Presheaf) -> PresheafMorphism:
    """The induced morphism F^+ -> G^+."""
    F, G = phi.source, phi.target
    comps = {}
    for u in F.opens:
        fam = finest_covering(F.site, u)
        fsF, fsG = F.family_space(fam), G.family_space(fam)
        raw = Matrix.zero(fsG.total, fsF.basis.cols, F.field)
        for v in fam:
            block = phi.components[v] * fsF.basis.submatrix(
                range(fsF.offsets[v], fsF.offsets[v] + F.dims[v]), range(fsF.basis.cols)
            )
            for i in range(block.rows):
                raw.data[fsG.offsets[v] + i] = list(block.data[i])
        comps[u] = fsG.basis.solve(raw)
    return PresheafMorphism(Fp, Gp, comps, validate=False)


def sheafify(F: Presheaf) -> Tuple[Presheaf, PresheafMorphism]:
    """F^{++} with the unit F -> F^{++}."""
    p1, u1 = plus_functor(F)
    p2, u2 = plus_functor(p1)
    return p2, u2.compose(u1)


# -- presheaf-level abelian operations ------------------------------------


def presheaf_kernel(phi: PresheafMorphism) -> Tuple[Presheaf, PresheafMorphism]:
    F = phi.source
    bases = {u: phi.components[u].kernel() for u in F.opens}
    dims = {u: bases[u].cols for u in F.opens}
    restricts = {}
    for u in F.opens:
        for v in F.opens:
            if v < u and dims[u] and dims[v]:
                restricts[(u, v)] = bases[v].solve(F.restrict(u, v) * bases[u])
    K = Presheaf(F.site, dims, restricts, F.field, opens=F.opens, validate=False)
    return K, PresheafMorphism(K, F, bases, validate=False)


def presheaf_cokernel(phi: PresheafMorphism) -> Tuple[Presheaf, PresheafMorphism]:
    G = phi.target
    projs = {u: phi.components[u].cokernel_projection() for u in G.opens}
    dims = {u: projs[u].rows for u in G.opens}
    restricts = {}
    for u in G.opens:
        for v in G.opens:
            if v < u and dims[u] and dims[v]:
                section = projs[u].solve(Matrix.identity(dims[u], G.field))
                restricts[(u, v)] = projs[v] * G.restrict(u, v) * section
    C = Presheaf(G.site, dims, restricts, G.field, opens=G.opens, validate=False)
    return C, PresheafMorphism(G, C, projs, validate=False)


def presheaf_direct_sum(F: Presheaf, G: Presheaf) -> Presheaf:
    dims = {u: F.dims[u] + G.dims[u] for u in F.opens}
    restricts = {}
    for u in F.opens:
        for v in F.opens:
            if v < u:
                restricts[(u, v)] = Matrix.block_diag(
                    [F.restrict(u, v), G.restrict(u, v)], F.field
                )
    return Presheaf(F.site, dims, restricts, F.field, opens=F.opens, validate=False)


class PresheafHomSpace:
    """The space of presheaf morphisms F -> G."""

    def __init__(self, F: Presheaf, G: Presheaf):
        self.F, self.G = F, G
        field = F.field
        self.offsets: Dict[Open, int] = {}
        n = 0
        for u in F.opens:
            self.offsets[u] = n
            n += F.dims[u] * G.dims[u]
        self.total = n
        rows: List[List] = []
        for u in F.opens:
            for v in F.opens:
                if v < u:
                    fm, gm = F.restrict(u, v), G.restrict(u, v)
                    for i in range(G.dims[v]):
                        for j in range(F.dims[u]):
                            row = [field.zero] * n
                            for k in range(F.dims[v]):
                                idx = self.offsets[v] + i * F.dims[v] + k
                                row[idx] = row[idx] + fm.data[k][j]
                            for k in range(G.dims[u]):
                                idx = self.offsets[u] + k * F.dims[u] + j
                                row[idx] = row[idx] - gm.data[i][k]
                            rows.append(row)
        if rows:
            self.basis = Matrix(len(rows), n, rows, field).kernel()
        else:
            self.basis = Matrix.identity(n, field)

    @property
    def dim(self) -> int:
        return self.basis.cols

    def morphism_from_vector(self, coeffs: Sequence) -> PresheafMorphism:
        col = Matrix.column(list(coeffs), self.F.field)
        vec = self.basis * col
        comps = {}
        for u in self.F.opens:
            f, g = self.F.dims[u], self.G.dims[u]
            o = self.offsets[u]
            comps[u] = Matrix(
                g,
                f,
                [[vec.data[o + i * f + j][0] for j in range(f)] for i in range(g)],
                self.F.field,
            )
        return PresheafMorphism(self.F, self.G, comps, validate=True)


def is_epimorphism_presheaf(phi: PresheafMorphism) -> bool:
    """The covering criterion for epimorphisms of sheaves.

    For each open U there must be a covering S such that every section of
    the target over U lifts through phi after restriction to each member.
    """
    F, G = phi.source, phi.target
    site = F.site
    for u in F.opens:
        found = False
        for fam in checkable_covers(site, u):
            ok = True
            for v in fam:
                res = G.restrict(u, v)
                # res(G(U)) must lie inside im(phi_v)
                stacked = phi.components[v].hstack(res)
                if stacked.rank() != phi.components[v].rank():
                    ok = False
                    break
            if ok:
                found = True
                break
        if not found:
            return False
    return True


# -- conversions between stalk sheaves and presheaves ---------------------


def from_stalks(F: StalkSheaf, opens: Optional[List[Open]] = None) -> Presheaf:
    """The open-assignment U -> Gamma(U; F) of a stalk sheaf."""
    site = F.site
    opens = opens if opens is not None else site_opens(site)
    spaces = {u: F.sections(u) for u in opens}
    dims = {u: spaces[u].dim for u in opens}
    restricts = {}
    for u in opens:
        for v in opens:
            if v < u:
                restricts[(u, v)] = spaces[u].restriction_to(spaces[v])
    return Presheaf(site, dims, restricts, F.field, opens=opens, validate=False)


def to_stalks(F: Presheaf) -> StalkSheaf:
    """Stalk functor of a sheaf-presheaf on an Alexandrov site: the stalk at
    x is the value on the minimal open around x."""
    site = F.site
    if site.backing is None:
        raise SheafError("to_stalks needs a poset-backed site")
    poset = site.backing
    dims = {x: F.dims[poset.min_open(x)] for x in poset.points}
    comaps = {}
    for x, y in poset.strict_pairs():
        comaps[(x, y)] = F.restrict(poset.min_open(x), poset.min_open(y))
    return StalkSheaf(site, dims, comaps, F.field, validate=False)
