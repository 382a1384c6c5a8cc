"""The six operations on stalk sheaves: concrete examples and agreements."""

import random

from sheafops.homological import coskyscraper
from sheafops.linalg import QQ
from sheafops.models import (
    circle_model,
    half_open_interval_model,
    interval_model,
    point_model,
    sierpinski_model,
    point_embedding,
    to_point,
)
from sheafops.operations import (
    ProperDirectImage,
    adjunction_unit_counit,
    base_change_map,
    direct_image,
    direct_image_openwise_agreement,
    gamma_Z,
    hom_pushforward_map,
    inverse_image,
    inverse_image_kan_agreement,
    is_quasi_injective,
    open_complement_sequence,
    projection_formula_map,
    proper_direct_image,
    proper_direct_image_colimit_oracle,
    restrict_Z,
)
from sheafops.sheaves import (
    constant_sheaf,
    constant_on,
    exactness_witness,
    is_monomorphism,
    random_sheaf,
    zero_sheaf,
)
from sheafops.sites import SiteMorphism, fiber_product_site


def test_direct_image_to_point_computes_global_sections():
    m = circle_model()
    a = to_point(m)
    k = constant_sheaf(m.site, QQ)
    assert direct_image(a, k).dims == {"pt": 1}
    F = random_sheaf(m.site, 4, max_dim=2)
    assert direct_image(a, F).dims["pt"] == F.sections(m.site.top).dim


def test_inverse_image_from_point_is_constant():
    m = interval_model()
    a = to_point(m)
    G = constant_sheaf(point_model().site, QQ, dim=3)
    pull = inverse_image(a, G)
    assert all(d == 3 for d in pull.dims.values())
    for x, y in m.poset.strict_pairs():
        assert pull.comap(x, y).is_invertible()


def test_adjunction_holds_with_certificates():
    m = interval_model()
    f = to_point(m)
    F = random_sheaf(m.site, 5, max_dim=2)
    G = random_sheaf(point_model().site, 6, max_dim=2)
    w = adjunction_unit_counit(f, F, G)
    assert w.bijective and w.triangles and w.ok


def test_gamma_Z_with_closed_support_on_sierpinski():
    site = sierpinski_model().site
    k = constant_sheaf(site, QQ)
    g = gamma_Z(site, {"p"}, k)
    # a global section of k supported on the closed point must vanish
    assert g.dims == {"p": 0, "q": 0}
    # supported sections of the extension by zero of the open point
    kq = constant_on(site, {"q"}, QQ)
    gq = gamma_Z(site, {"q"}, kq)
    assert gq.dims["p"] == 1


def test_open_complement_sequence_is_exact():
    site = circle_model().site
    F = random_sheaf(site, 8, max_dim=2)
    u = site.backing.min_open("v0")
    inc, prj = open_complement_sequence(site, u, F)
    assert is_monomorphism(inc)
    assert exactness_witness(inc, prj)


def test_proper_image_sees_only_relatively_compact_support():
    m = half_open_interval_model()
    a = to_point(m)
    k = constant_sheaf(m.site, QQ)
    assert m.site.largest_rel_compact() == frozenset({"c0", "e0"})
    assert direct_image(a, k).dims == {"pt": 1}
    assert proper_direct_image(a, k).dims == {"pt": 0}
    p = ProperDirectImage(a, k)
    assert is_monomorphism(p.compare_to_direct())


def test_proper_image_matches_colimit_oracle():
    m = half_open_interval_model()
    a = to_point(m)
    for seed in (1, 2, 3):
        F = random_sheaf(m.site, seed, max_dim=2)
        assert proper_direct_image(a, F).dims == proper_direct_image_colimit_oracle(a, F)


def test_quasi_injective_examples():
    site = circle_model().site
    assert is_quasi_injective(coskyscraper(site, "v0", 1, QQ))
    assert is_quasi_injective(zero_sheaf(site, QQ))
    assert not is_quasi_injective(constant_sheaf(site, QQ))


def test_projection_formula_and_hom_pushforward():
    m = interval_model()
    f = to_point(m)
    F = random_sheaf(m.site, 2, max_dim=2)
    G = random_sheaf(point_model().site, 3, max_dim=2)
    pf = projection_formula_map(f, F, G)
    assert pf.iso
    hp = hom_pushforward_map(f, G, F)
    assert hp.iso


def test_base_change_over_cartesian_square():
    m = sierpinski_model()
    pt = point_model()
    f = to_point(m, pt)
    g = SiteMorphism(pt.site, pt.site, point_map={"pt": "pt"})
    site, fp, gp = fiber_product_site(f, g)
    F = random_sheaf(m.site, 7, max_dim=2)
    bc = base_change_map(f, g, fp, gp, F)
    assert bc.iso


def test_openwise_and_kan_formulas_agree_with_stalk_path():
    m = interval_model()
    maps = [to_point(m), point_embedding(m, "v1"), point_embedding(m, "v0")]
    for f in maps:
        F = random_sheaf(f.source, 11, max_dim=2)
        G = random_sheaf(f.target, 12, max_dim=2)
        assert direct_image_openwise_agreement(f, F)
        assert inverse_image_kan_agreement(f, G)


def test_restrict_Z_stalks():
    site = sierpinski_model().site
    F = constant_sheaf(site, QQ, dim=2)
    r = restrict_Z(site, {"q"}, F)
    assert r.dims == {"p": 0, "q": 2}
