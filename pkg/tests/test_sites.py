"""Posets, Alexandrov sites, covering systems and site morphisms."""

import pytest

from sheafops.models import (
    coarse_circle_basis,
    coarse_interval_nonbasis,
    crafted_gt_failure,
    circle_model,
    half_open_interval_model,
    interval_model,
    point_model,
    sierpinski_model,
    to_point,
    point_embedding,
)
from sheafops.sites import (
    CoveringSystem,
    FiniteSite,
    OpenLattice,
    PosetSpace,
    SiteError,
    SiteMorphism,
    build_alexandrov_site,
    coarse_subsite,
    fiber_product_site,
    materialize_lattice,
    validate_gt_axioms,
)


def test_poset_closure_operators():
    p = PosetSpace(["a", "b", "c"], [("a", "b"), ("b", "c")])
    assert p.min_open("a") == frozenset({"a", "b", "c"})
    assert p.down_closure(["c"]) == frozenset({"a", "b", "c"})
    assert p.is_open({"b", "c"})
    assert not p.is_open({"a"})
    assert p.is_closed({"a"})
    assert p.height() == 2


def test_poset_rejects_cycles():
    with pytest.raises(SiteError):
        PosetSpace(["a", "b"], [("a", "b"), ("b", "a")])


def test_lattice_validation():
    with pytest.raises(SiteError):
        OpenLattice([frozenset(), frozenset({"a"}), frozenset({"b"})])


def test_full_covering_gt_axioms_on_alexandrov_site():
    site = sierpinski_model().site
    assert validate_gt_axioms(site).ok


def test_crafted_failure_has_gt1_witness():
    rep = validate_gt_axioms(crafted_gt_failure())
    assert not rep.ok
    ax, msg = rep.failures()[0]
    assert ax == "GT1"
    assert "identity family missing" in msg


def test_coarse_subsite_basis_flag():
    coarse, rho, basis = coarse_circle_basis()
    assert basis
    coarse2, rho2, basis2 = coarse_interval_nonbasis()
    assert not basis2


def test_coarse_subsite_rejects_bad_sublattice():
    m = interval_model()
    lat = OpenLattice([frozenset(), m.site.top])
    bad = CoveringSystem(covers={m.site.top: [frozenset([frozenset({"v0"})])]})
    with pytest.raises(SiteError):
        coarse_subsite(m.site, lat, bad)


def test_monotone_point_map_passes_ft_validation():
    m = interval_model()
    f = to_point(m, point_model())
    # preimage preserves intersections and coverings by construction
    assert f.lattice_map(frozenset({"pt"})) == m.site.top


def test_non_monotone_point_map_rejected():
    s = sierpinski_model()
    i = interval_model()
    with pytest.raises(SiteError):
        SiteMorphism(s.site, i.site, point_map={"p": "v0,v1", "q": "v2"})


def test_relative_compactness_with_ambient():
    m = half_open_interval_model()
    site = m.site
    ustar = site.largest_rel_compact()
    assert ustar == frozenset({"c0", "e0"})
    # opens touching e1 escape into the ambient point b
    assert not site.rel_compact_leq(site.top, site.top)


def test_relative_compactness_without_ambient_everything_compact():
    site = circle_model().site
    assert site.largest_rel_compact() == site.top


def test_fiber_product_square_is_cartesian():
    m = sierpinski_model()
    pt = point_model()
    f = to_point(m, pt)
    g = SiteMorphism(pt.site, pt.site, point_map={"pt": "pt"})
    site, fp, gp = fiber_product_site(f, g)
    assert len(site.top) == len(m.site.top)
    for x in site.backing.points:
        assert gp.apply(x) in m.site.top


def test_materialized_lattice_members_are_up_sets():
    site = sierpinski_model().site
    lat = materialize_lattice(site)
    assert set(lat) == {frozenset(), frozenset({"q"}), frozenset({"p", "q"})}


def test_covering_refinement_saturation():
    site = circle_model().site
    u = site.top
    mins = [site.backing.min_open(x) for x in u]
    assert site.is_cover(u, mins)
    assert not site.is_cover(u, mins[:1])
