"""Lattice presheaves: sheaf condition, plus construction, epi criterion."""

import random

import pytest

from sheafops.linalg import Matrix, QQ
from sheafops.models import (
    circle_model,
    coarse_interval_identity_only,
    interval_model,
    sierpinski_model,
)
from sheafops.presheaves import (
    Presheaf,
    PresheafMorphism,
    check_sheaf,
    from_stalks,
    is_epimorphism_presheaf,
    pairwise_glue_check,
    plus_functor,
    presheaf_direct_sum,
    sheafify,
    site_opens,
    to_stalks,
)
from sheafops.sheaves import SheafError, constant_sheaf, random_sheaf


def _constant_everywhere(site):
    """Value k on every open, including the empty one: not even separated."""
    opens = site_opens(site)
    dims = {u: 1 for u in opens}
    restricts = {}
    for u in opens:
        for v in opens:
            if v < u:
                restricts[(u, v)] = Matrix.identity(1, QQ)
    return Presheaf(site, dims, restricts, QQ)


class _Segment:
    """Face poset of a single 1-simplex: two vertices under one edge."""

    def __init__(self):
        from sheafops.sites import PosetSpace, build_alexandrov_site

        self.poset = PosetSpace(
            ["v0", "v1", "e"], [("v0", "e"), ("v1", "e")]
        )
        self.site = build_alexandrov_site(self.poset)


def _interval_opens(m):
    poset = m.poset
    star0 = poset.min_open("v0")
    star1 = poset.min_open("v1")
    edge = star0 & star1
    return star0, star1, edge, m.site.top


def test_sections_presheaf_of_sheaf_is_sheaf():
    site = circle_model().site
    F = random_sheaf(site, 3, max_dim=2)
    P = from_stalks(F)
    kind, witness = check_sheaf(P)
    assert kind == "sheaf" and witness is None
    assert pairwise_glue_check(P)


def test_constant_presheaf_with_empty_value_is_not_separated():
    site = sierpinski_model().site
    P = _constant_everywhere(site)
    kind, witness = check_sheaf(P)
    assert kind == "neither"
    assert "not separated" in witness
    assert not pairwise_glue_check(P)


def test_separated_but_no_gluing():
    m = _Segment()
    star0, star1, edge, top = _interval_opens(m)
    empty = frozenset()
    dims = {top: 0, star0: 1, star1: 1, edge: 1, empty: 0}
    restricts = {
        (star0, edge): Matrix.identity(1, QQ),
        (star1, edge): Matrix.identity(1, QQ),
    }
    P = Presheaf(m.site, dims, restricts, QQ)
    kind, witness = check_sheaf(P)
    assert kind == "separated"
    assert "gluing fails" in witness


def test_sheafify_produces_sheaf_and_fixes_sheaves():
    site = sierpinski_model().site
    P = _constant_everywhere(site)
    S, unit = sheafify(P)
    assert check_sheaf(S)[0] == "sheaf"
    assert S.dims[frozenset()] == 0
    # on a presheaf that is already a sheaf the unit is an isomorphism
    Q = from_stalks(constant_sheaf(site, QQ))
    Q2, unit2 = sheafify(Q)
    assert unit2.is_isomorphism()


def test_plus_functor_unit_naturality():
    m = _Segment()
    star0, star1, edge, top = _interval_opens(m)
    empty = frozenset()
    dims = {top: 0, star0: 1, star1: 1, edge: 1, empty: 0}
    restricts = {
        (star0, edge): Matrix.identity(1, QQ),
        (star1, edge): Matrix.identity(1, QQ),
    }
    P = Presheaf(m.site, dims, restricts, QQ)
    plus, unit = plus_functor(P)
    unit.validate()
    # the separated presheaf gains the missing glued sections over the top
    assert plus.dims[top] == 1


def test_pairwise_glue_iff_sheaf_with_zero_empty_value():
    site = circle_model().site
    rng = random.Random(7)
    from sheafops.laws import random_presheaf

    for _ in range(10):
        P = random_presheaf(site, rng, QQ, max_dim=2)
        lhs = pairwise_glue_check(P)
        rhs = check_sheaf(P)[0] == "sheaf" and P.dims[frozenset()] == 0
        assert lhs == rhs


def _extension_by_zero_presheaf(m, star, edge):
    """k on the open star, zero beyond it, as a lattice presheaf."""
    star0, star1, _, top = _interval_opens(m)
    other = star1 if star == star0 else star0
    dims = {top: 0, star: 1, other: 0, edge: 1, frozenset(): 0}
    restricts = {(star, edge): Matrix.identity(1, QQ)}
    return Presheaf(m.site, dims, restricts, QQ)


def test_epi_criterion_depends_on_coverings():
    m = _Segment()
    star0, star1, edge, top = _interval_opens(m)
    P0 = _extension_by_zero_presheaf(m, star0, edge)
    P1 = _extension_by_zero_presheaf(m, star1, edge)
    S = presheaf_direct_sum(P0, P1)
    T = from_stalks(constant_sheaf(m.site, QQ))
    comps = {
        star0: Matrix.from_rows([[1]], QQ),
        star1: Matrix.from_rows([[1]], QQ),
        edge: Matrix.from_rows([[1, 1]], QQ),
    }
    phi = PresheafMorphism(S, T, comps)
    # not surjective on sections over the whole interval ...
    assert phi.components[top].rank() == 0 and T.dims[top] == 1
    # ... but epi by local surjectivity over the two-star covering
    assert is_epimorphism_presheaf(phi)

    from sheafops.sites import CoveringSystem, OpenLattice, coarse_subsite, materialize_lattice

    lat = OpenLattice(materialize_lattice(m.site))
    coarse, rho, basis = coarse_subsite(
        m.site, lat, CoveringSystem.identity_only(lat)
    )
    pairs = {(u, v): S.restrict(u, v) for u in S.opens for v in S.opens if v < u}
    S_c = Presheaf(coarse, S.dims, pairs, QQ)
    pairs_t = {(u, v): T.restrict(u, v) for u in T.opens for v in T.opens if v < u}
    T_c = Presheaf(coarse, T.dims, pairs_t, QQ)
    phi_c = PresheafMorphism(S_c, T_c, comps)
    # with identity-only coverings the criterion degenerates to objectwise
    assert not is_epimorphism_presheaf(phi_c)


def test_stalk_conversions_roundtrip():
    site = circle_model().site
    F = random_sheaf(site, 9, max_dim=2)
    P = from_stalks(F)
    G = to_stalks(P)
    assert G.dims == F.dims
    G.validate()
