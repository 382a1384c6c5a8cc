"""The six non-derived operations and their canonical comparison maps.

Everything is computed on stalk sheaves over poset-backed sites: direct
and inverse images along point maps, proper direct image through the
largest relatively compact open, local sections and restriction along a
locally closed set, and the canonical morphisms of the projection formula,
base change and Hom-pushforward, each constructed explicitly and then
tested for invertibility.
"""

from __future__ import annotations

import itertools
from typing import Dict, FrozenSet, List, Optional, Tuple

from .linalg import Matrix
from .sheaves import (
    HomSpace,
    SectionSpace,
    SheafError,
    SheafMorphism,
    StalkSheaf,
    constant_on,
    hom_sheaf,
    tensor_sheaf,
)
from .sites import FiniteSite, Open, SiteError, SiteMorphism


def solve_into(space: SectionSpace, raw: Matrix) -> Matrix:
    """Express raw coordinate columns in the basis of a section space."""
    return space.basis.solve(raw)


class DirectImage:
    """f_* F together with the section spaces presenting its stalks."""

    def __init__(self, f: SiteMorphism, F: StalkSheaf):
        if f.point_map is None:
            raise SheafError("direct images on stalk sheaves need a point map")
        self.f = f
        self.F = F
        tgt = f.target.backing
        self.spaces: Dict[str, SectionSpace] = {}
        for y in tgt.points:
            self.spaces[y] = F.sections(f.preimage(tgt.min_open(y)))
        dims = {y: self.spaces[y].dim for y in tgt.points}
        comaps = {}
        for y, z in tgt.strict_pairs():
            comaps[(y, z)] = self.spaces[y].restriction_to(self.spaces[z])
        self.sheaf = StalkSheaf(f.target, dims, comaps, F.field, validate=False)

    def morphism(self, phi: SheafMorphism, other: "DirectImage") -> SheafMorphism:
        """f_* of a morphism, from this pushforward to the pushforward of
        the morphism's target."""
        comps = {}
        for y, sp in self.spaces.items():
            tp = other.spaces[y]
            raw = Matrix.zero(tp.total, sp.basis.cols, self.F.field)
            for x in sp.points:
                block = phi.components[x] * sp.stalk_component(x)
                for i in range(block.rows):
                    raw.data[tp.offsets[x] + i] = list(block.data[i])
            comps[y] = solve_into(tp, raw)
        return SheafMorphism(self.sheaf, other.sheaf, comps, validate=False)


def direct_image(f: SiteMorphism, F: StalkSheaf) -> StalkSheaf:
    return DirectImage(f, F).sheaf


def inverse_image(f: SiteMorphism, G: StalkSheaf) -> StalkSheaf:
    """f^{-1} G by the stalk fast path: stalk at x is the stalk at f(x)."""
    if f.point_map is None:
        raise SheafError("inverse images on stalk sheaves need a point map")
    src = f.source.backing
    dims = {x: G.dims[f.apply(x)] for x in src.points}
    comaps = {}
    for x, y in src.strict_pairs():
        comaps[(x, y)] = G.comap(f.apply(x), f.apply(y))
    return StalkSheaf(f.source, dims, comaps, G.field, validate=False)


def inverse_image_morphism(f: SiteMorphism, phi: SheafMorphism) -> SheafMorphism:
    S = inverse_image(f, phi.source)
    T = inverse_image(f, phi.target)
    comps = {x: phi.components[f.apply(x)] for x in f.source.backing.points}
    return SheafMorphism(S, T, comps, validate=False)


# -- adjunction (f^{-1}, f_*) ---------------------------------------------


class AdjunctionWitness:
    def __init__(self, unit: SheafMorphism, counit: SheafMorphism, bijective: bool, triangles: bool):
        self.unit = unit
        self.counit = counit
        self.bijective = bijective
        self.triangles = triangles

    @property
    def ok(self) -> bool:
        return self.bijective and self.triangles


def adjunction_unit(f: SiteMorphism, G: StalkSheaf, push: Optional[DirectImage] = None) -> SheafMorphism:
    """G -> f_* f^{-1} G."""
    pull = inverse_image(f, G)
    push = push or DirectImage(f, pull)
    tgt = f.target.backing
    comps = {}
    for y in tgt.points:
        sp = push.spaces[y]
        raw = Matrix.zero(sp.total, G.dims[y], G.field)
        for x in sp.points:
            block = G.comap(y, f.apply(x))
            for i in range(block.rows):
                raw.data[sp.offsets[x] + i] = list(block.data[i])
        comps[y] = solve_into(sp, raw)
    return SheafMorphism(G, push.sheaf, comps, validate=True)


def adjunction_counit(f: SiteMorphism, F: StalkSheaf, push: Optional[DirectImage] = None) -> SheafMorphism:
    """f^{-1} f_* F -> F."""
    push = push or DirectImage(f, F)
    pullback = inverse_image(f, push.sheaf)
    comps = {}
    for x in f.source.backing.points:
        sp = push.spaces[f.apply(x)]
        comps[x] = sp.stalk_component(x)
    return SheafMorphism(pullback, F, comps, validate=True)


def adjunction_unit_counit(f: SiteMorphism, F: StalkSheaf, G: StalkSheaf) -> AdjunctionWitness:
    """Unit, counit, the Hom bijection and both triangle identities."""
    pull_G = inverse_image(f, G)
    push_F = DirectImage(f, F)
    unit = adjunction_unit(f, G)
    counit = adjunction_counit(f, F, push_F)

    # Hom(f^{-1}G, F) -> Hom(G, f_*F): phi |-> f_*(phi) o unit
    hom_src = HomSpace(pull_G, F)
    hom_tgt = HomSpace(G, push_F.sheaf)
    push_pull_G = DirectImage(f, pull_G)
    cols = []
    for phi in hom_src.basis_morphisms():
        pushed = push_pull_G.morphism(phi, push_F)
        transported = pushed.compose(unit)
        cols.append(hom_tgt.vector_from_morphism(transported))
    if cols:
        forward = cols[0]
        for c in cols[1:]:
            forward = forward.hstack(c)
    else:
        forward = Matrix.zero(hom_tgt.dim, 0, F.field)
    bijective = (
        hom_src.dim == hom_tgt.dim and (forward.rank() == hom_src.dim if hom_src.dim else True)
    )

    # triangles: (counit f^{-1}) o (f^{-1} unit) = id and (f_* counit) o (unit f_*) = id
    pulled_unit = inverse_image_morphism(f, unit)
    counit_for_G = adjunction_counit(f, pull_G, push_pull_G)
    tri1 = counit_for_G.compose(pulled_unit)
    t1 = all(
        tri1.components[x] == Matrix.identity(pull_G.dims[x], F.field)
        for x in f.source.backing.points
    )
    push_pull_push = DirectImage(f, inverse_image(f, push_F.sheaf))
    pushed_counit = push_pull_push.morphism(counit, push_F)
    unit_for_push = adjunction_unit(f, push_F.sheaf, push_pull_push)
    tri2 = pushed_counit.compose(unit_for_push)
    t2 = all(
        tri2.components[y] == Matrix.identity(push_F.sheaf.dims[y], F.field)
        for y in f.target.backing.points
    )
    return AdjunctionWitness(unit, counit, bijective, t1 and t2)


# -- proper direct image ---------------------------------------------------


class ProperDirectImage:
    """f_!! F = f_*(F tensor k_{U*}) with U* the largest relatively compact
    open of the source; comes with the canonical monomorphism into f_* F."""

    def __init__(self, f: SiteMorphism, F: StalkSheaf):
        self.f = f
        self.F = F
        self.ustar = f.source.largest_rel_compact()
        self.cutoff = constant_on(f.source, self.ustar, F.field)
        self.supported = tensor_sheaf(F, self.cutoff)
        self.push = DirectImage(f, self.supported)
        self.sheaf = self.push.sheaf

    def compare_to_direct(self) -> SheafMorphism:
        """The canonical map f_!!F -> f_*F (a monomorphism)."""
        f, F = self.f, self.F
        plain = DirectImage(f, F)
        comps = {}
        for y, sp in self.push.spaces.items():
            tp = plain.spaces[y]
            raw = Matrix.zero(tp.total, sp.basis.cols, F.field)
            for x in sp.points:
                if x in self.ustar:
                    block = sp.stalk_component(x)
                    for i in range(block.rows):
                        raw.data[tp.offsets[x] + i] = list(block.data[i])
            comps[y] = solve_into(tp, raw)
        return SheafMorphism(self.sheaf, plain.sheaf, comps, validate=True)


def proper_direct_image(f: SiteMorphism, F: StalkSheaf) -> StalkSheaf:
    return ProperDirectImage(f, F).sheaf


def proper_direct_image_colimit_oracle(f: SiteMorphism, F: StalkSheaf) -> Dict[str, int]:
    """Brute-force stalk dimensions of f_!!F as the directed colimit of
    f_*(F_U) over all relatively compact opens U.

    Computes the coequalizer presentation of the colimit instead of using
    the greatest element; retained as an independent oracle.
    """
    field = F.field
    rels = f.source.rel_compact_opens()
    tgt = f.target.backing
    out = {}
    for y in tgt.points:
        base = f.preimage(tgt.min_open(y))
        spaces = []
        for u in rels:
            cut = constant_on(f.source, u, field)
            spaces.append((u, tensor_sheaf(F, cut).sections(base)))
        total = sum(sp.dim for _, sp in spaces)
        offsets = []
        n = 0
        for _, sp in spaces:
            offsets.append(n)
            n += sp.dim
        rows: List[List] = []
        # relations: for u <= v, iota_u - iota_v o (transition) = 0 on generators of u
        for i, (u, su) in enumerate(spaces):
            for j, (v, sv) in enumerate(spaces):
                if u < v:
                    cu = constant_on(f.source, u, field)
                    cv = constant_on(f.source, v, field)
                    fu = tensor_sheaf(F, cu)
                    fv = tensor_sheaf(F, cv)
                    # transition F_u -> F_v over the base subset
                    raw = Matrix.zero(sv.total, su.basis.cols, field)
                    for x in su.points:
                        if x in u:
                            block = su.stalk_component(x)
                            for r in range(block.rows):
                                raw.data[sv.offsets[x] + r] = list(block.data[r])
                    trans = solve_into(sv, raw)
                    for g in range(su.dim):
                        row = [field.zero] * total
                        row[offsets[i] + g] = field.one
                        for r in range(sv.dim):
                            row[offsets[j] + r] = row[offsets[j] + r] - trans.data[r][g]
                        rows.append(row)
        if rows:
            rel_mat = Matrix(len(rows), total, rows, field).transpose()
            out[y] = total - rel_mat.rank()
        else:
            out[y] = total
    return out


# -- local sections and restriction along locally closed sets -------------


def gamma_Z(site: FiniteSite, z, F: StalkSheaf) -> StalkSheaf:
    """Sections supported on a locally closed set: Hom(k_Z, F)."""
    kz = constant_on(site, z, F.field)
    return hom_sheaf(kz, F).sheaf


def restrict_Z(site: FiniteSite, z, F: StalkSheaf) -> StalkSheaf:
    """F restricted-and-extended along a locally closed set: F tensor k_Z."""
    kz = constant_on(site, z, F.field)
    return tensor_sheaf(F, kz)


def open_complement_sequence(
    site: FiniteSite, u: Open, F: StalkSheaf
) -> Tuple[SheafMorphism, SheafMorphism]:
    """The exact pair F_U -> F -> F_{X\\U} for an open U."""
    if site.backing is None:
        raise SheafError("needs a poset-backed site")
    u = frozenset(u)
    comp = frozenset(site.backing.points) - u
    fu = restrict_Z(site, u, F)
    fs = restrict_Z(site, comp, F)
    field = F.field
    inc = {}
    prj = {}
    for x in site.backing.points:
        d = F.dims[x]
        if x in u:
            inc[x] = Matrix.identity(d, field)
            prj[x] = Matrix.zero(0, d, field)
        else:
            inc[x] = Matrix.zero(d, 0, field)
            prj[x] = Matrix.identity(d, field)
    return (
        SheafMorphism(fu, F, inc, validate=True),
        SheafMorphism(F, fs, prj, validate=True),
    )


# -- canonical comparison maps --------------------------------------------


class CanonicalMap:
    def __init__(self, morphism: Optional[SheafMorphism], iso: Optional[bool], note: str = ""):
        self.morphism = morphism
        self.iso = iso
        self.note = note


def projection_formula_map(f: SiteMorphism, F: StalkSheaf, G: StalkSheaf) -> CanonicalMap:
    """f_!!F tensor G -> f_!!(F tensor f^{-1}G)."""
    field = F.field
    pdi = ProperDirectImage(f, F)
    lhs = tensor_sheaf(pdi.sheaf, G)
    FG = tensor_sheaf(F, inverse_image(f, G))
    pdi_fg = ProperDirectImage(f, FG)
    rhs = pdi_fg.sheaf
    tgt = f.target.backing
    comps = {}
    for y in tgt.points:
        sp = pdi.push.spaces[y]  # sections of F (x) k_U* over the fiber open
        tp = pdi_fg.push.spaces[y]  # sections of F (x) f^{-1}G (x) k_U*
        gdim = G.dims[y]
        raw = Matrix.zero(tp.total, sp.dim * gdim, field)
        for x in sp.points:
            fdim = F.dims[x]
            udim = pdi.cutoff.dims[x]
            if udim == 0:
                continue
            sblock = sp.stalk_component(x)  # (fdim*udim) x sp.dim
            gmap = G.comap(y, f.apply(x))  # G_y -> G_{f(x)}
            gfx = G.dims[f.apply(x)]
            # target stalk layout: ((F (x) f^{-1}G) (x) k_U*) = fdim*gfx*udim
            for a in range(fdim):
                for b in range(gfx):
                    trow = tp.offsets[x] + (a * gfx + b) * udim
                    for si in range(sp.dim):
                        for gj in range(gdim):
                            raw.data[trow][si * gdim + gj] = (
                                raw.data[trow][si * gdim + gj]
                                + sblock.data[a * udim][si] * gmap.data[b][gj]
                            )
        comps[y] = solve_into(tp, raw)
    morphism = SheafMorphism(lhs, rhs, comps, validate=True)
    iso = all(m.is_invertible() for m in comps.values())
    return CanonicalMap(morphism, iso)


def base_change_map(
    f: SiteMorphism,
    g: SiteMorphism,
    fp: SiteMorphism,
    gp: SiteMorphism,
    F: StalkSheaf,
) -> CanonicalMap:
    """g^{-1} f_!! F -> f'_!! g'^{-1} F over a cartesian square.

    Constructible in the finite model when g' pulls relatively compact
    opens back to relatively compact opens; otherwise the map has no
    finite-model presentation and the check reports that instead.
    """
    field = F.field
    pdi = ProperDirectImage(f, F)
    lhs = inverse_image(g, pdi.sheaf)
    Fp = inverse_image(gp, F)
    pdi_p = ProperDirectImage(fp, Fp)
    rhs = pdi_p.sheaf
    pre_ustar = gp.preimage(pdi.ustar)
    if not pre_ustar <= pdi_p.ustar:
        return CanonicalMap(
            None, None, "pullback of the compact support exceeds the model's support family"
        )
    comps = {}
    for yp in fp.target.backing.points:
        y = g.apply(yp)
        sp = pdi.push.spaces[y]
        tp = pdi_p.push.spaces[yp]
        raw = Matrix.zero(tp.total, sp.dim, field)
        for xp in tp.points:
            if pdi_p.cutoff.dims[xp] == 0:
                continue
            x = gp.apply(xp)
            if pdi.cutoff.dims.get(x, 0) == 0 or xp not in pre_ustar:
                continue
            block = sp.stalk_component(x)
            for i in range(block.rows):
                raw.data[tp.offsets[xp] + i] = list(block.data[i])
        comps[yp] = solve_into(tp, raw)
    morphism = SheafMorphism(lhs, rhs, comps, validate=True)
    iso = all(m.is_invertible() for m in comps.values())
    return CanonicalMap(morphism, iso)


def hom_pushforward_map(f: SiteMorphism, G: StalkSheaf, F: StalkSheaf) -> CanonicalMap:
    """f_!! Hom(f^{-1}G, F) -> Hom(G, f_!!F)."""
    field = F.field
    pull_G = inverse_image(f, G)
    H = hom_sheaf(pull_G, F)
    pdi_h = ProperDirectImage(f, H.sheaf)
    lhs = pdi_h.sheaf
    pdi_f = ProperDirectImage(f, F)
    HT = hom_sheaf(G, pdi_f.sheaf)
    rhs = HT.sheaf
    tgt = f.target.backing
    comps = {}
    for y in tgt.points:
        sp = pdi_h.push.spaces[y]
        ht = HT.spaces[y]
        raw = Matrix.zero(ht.total, sp.dim, field)
        for col in range(sp.dim):
            # decode the section: per x, coefficients in the hom-space at x
            for yy in ht.points:  # yy >= y in the target
                gdim = G.dims[yy]
                s2 = pdi_f.push.spaces[yy]
                # build psi_yy : G_yy -> (f_!!F)_yy for this basis section
                raw2 = Matrix.zero(s2.total, gdim, field)
                for x in s2.points:
                    if pdi_f.cutoff.dims[x] == 0:
                        continue
                    if x not in sp.offsets:
                        continue
                    hspace = H.spaces[x]
                    hcut = pdi_h.cutoff.dims[x]
                    if hcut == 0:
                        continue
                    hvec = [
                        sp.basis.data[sp.offsets[x] + i][col] for i in range(H.sheaf.dims[x])
                    ]
                    # evaluate the hom-family at the point x itself
                    ev = _evaluate_hom_at_base(hspace, hvec, pull_G, F, x)
                    gres = G.comap(yy, f.apply(x))
                    block = ev * gres
                    for i in range(block.rows):
                        for j in range(gdim):
                            raw2.data[s2.offsets[x] + i][j] = (
                                raw2.data[s2.offsets[x] + i][j] + block.data[i][j]
                            )
                psi = solve_into(s2, raw2)
                fdim_yy = G.dims[yy]
                for i in range(psi.rows):
                    for j in range(fdim_yy):
                        raw.data[ht.offsets[yy] + i * fdim_yy + j][col] = psi.data[i][j]
        comps[y] = solve_into_hom(ht, raw)
    morphism = SheafMorphism(lhs, rhs, comps, validate=True)
    iso = all(m.is_invertible() for m in comps.values())
    return CanonicalMap(morphism, iso)


def _evaluate_hom_at_base(hspace: HomSpace, coeffs, S: StalkSheaf, T: StalkSheaf, x: str) -> Matrix:
    """Evaluate a hom-family (by basis coefficients) at its base point."""
    field = S.field
    col = Matrix.column(list(coeffs), field)
    vec = hspace.basis * col
    f, g = S.dims[x], T.dims[x]
    o = hspace.offsets[x]
    return Matrix(g, f, [[vec.data[o + i * f + j][0] for j in range(f)] for i in range(g)], field)


def solve_into_hom(hspace: HomSpace, raw: Matrix) -> Matrix:
    return hspace.basis.solve(raw)


# -- quasi-injectivity -----------------------------------------------------


def is_quasi_injective(F: StalkSheaf) -> bool:
    """Restriction between sections over nested relatively compact opens is
    always surjective."""
    rels = F.site.rel_compact_opens()
    spaces = {u: F.sections(u) for u in rels}
    for u in rels:
        for v in rels:
            if v < u:
                r = spaces[u].restriction_to(spaces[v])
                if r.rank() != spaces[v].dim:
                    return False
    return True


def isomorphism_comparison(phi: SheafMorphism) -> bool:
    """A morphism is an isomorphism iff every component is invertible."""
    return all(m.is_invertible() for m in phi.components.values())


# -- presheaf-level formulas -----------------------------------------------


def direct_image_openwise(f: SiteMorphism, F: StalkSheaf):
    """f_* F on the explicit target lattice: f_*F(V) = F(f^t(V))."""
    from .presheaves import Presheaf, site_opens

    opens = site_opens(f.target)
    spaces = {v: F.sections(f.lattice_map(v)) for v in opens}
    dims = {v: spaces[v].dim for v in opens}
    restricts = {}
    for v in opens:
        for w in opens:
            if w < v:
                restricts[(v, w)] = spaces[v].restriction_to(spaces[w])
    pre = Presheaf(f.target, dims, restricts, F.field, opens=opens, validate=False)
    return pre, spaces


def direct_image_openwise_agreement(f: SiteMorphism, F: StalkSheaf) -> bool:
    """The openwise formula is already a sheaf and the canonical evaluation
    map to the stalk fast path is an isomorphism on every open."""
    from .presheaves import check_sheaf

    pre, spaces = direct_image_openwise(f, F)
    if check_sheaf(pre)[0] != "sheaf":
        return False
    push = DirectImage(f, F)
    for v in pre.opens:
        tp = push.sheaf.sections(v)
        raw = Matrix.zero(tp.total, pre.dims[v], F.field)
        for y in tp.points:
            block = spaces[v].restriction_to(push.spaces[y])
            for i in range(block.rows):
                raw.data[tp.offsets[y] + i] = list(block.data[i])
        comp = tp.basis.solve(raw)
        if comp.rows != comp.cols or not comp.is_invertible():
            return False
    return True


def minimal_target_open(f: SiteMorphism, u: Open) -> Open:
    """The minimal W in the target lattice with u <= f^t(W): the index poset
    of the Kan colimit is intersection-closed, so its minimum exists."""
    tgt = f.target.backing
    w = frozenset()
    for x in u:
        w = w | tgt.min_open(f.apply(x))
    return w


def inverse_image_kan(f: SiteMorphism, G: StalkSheaf):
    """The Kan-extension presheaf f^{<-}G(U) = colim_{U <= f^t(W)} G(W)
    (attained at the minimal such W) and its sheafification."""
    from .presheaves import Presheaf, plus_functor, site_opens

    opens = site_opens(f.source)
    wof = {u: minimal_target_open(f, u) for u in opens}
    spaces = {w: G.sections(w) for w in set(wof.values())}
    dims = {u: spaces[wof[u]].dim for u in opens}
    restricts = {}
    for u in opens:
        for v in opens:
            if v < u:
                restricts[(u, v)] = spaces[wof[u]].restriction_to(spaces[wof[v]])
    kan = Presheaf(f.source, dims, restricts, G.field, opens=opens, validate=False)
    p1, _ = plus_functor(kan)
    p2, _ = plus_functor(p1)
    return kan, p2, wof, spaces


def inverse_image_kan_agreement(f: SiteMorphism, G: StalkSheaf) -> bool:
    """The sheafified Kan extension agrees with the stalk fast path through
    the canonical comparison (evaluation at stalks)."""
    from .presheaves import (
        Presheaf,
        PresheafMorphism,
        plus_functor,
        plus_morphism,
        site_opens,
    )

    fast = inverse_image(f, G)
    opens = site_opens(f.source)
    fspaces = {u: fast.sections(u) for u in opens}
    dims = {u: fspaces[u].dim for u in opens}
    restricts = {}
    for u in opens:
        for v in opens:
            if v < u:
                restricts[(u, v)] = fspaces[u].restriction_to(fspaces[v])
    target = Presheaf(f.source, dims, restricts, G.field, opens=opens, validate=False)
    kan, _, wof, spaces = inverse_image_kan(f, G)
    comps = {}
    for u in opens:
        sp = fspaces[u]
        raw = Matrix.zero(sp.total, kan.dims[u], G.field)
        for x in sp.points:
            blk = spaces[wof[u]].stalk_component(f.apply(x))
            for i in range(blk.rows):
                raw.data[sp.offsets[x] + i] = list(blk.data[i])
        comps[u] = sp.basis.solve(raw)
    kappa = PresheafMorphism(kan, target, comps, validate=True)
    k1p, _ = plus_functor(kan)
    t1p, tu1 = plus_functor(target)
    k1 = plus_morphism(kappa, k1p, t1p)
    k2p, _ = plus_functor(k1p)
    t2p, tu2 = plus_functor(t1p)
    k2 = plus_morphism(k1, k2p, t2p)
    unit = tu2.compose(tu1)
    if not unit.is_isomorphism():
        return False
    for u in opens:
        m = unit.components[u].solve(
            Matrix.identity(target.dims[u], G.field)
        ) * k2.components[u]
        if m.rows != m.cols or not m.is_invertible():
            return False
    return True
