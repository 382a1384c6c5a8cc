"""Stalk sheaves: sections, abelian structure, hom and tensor."""

import random

import pytest

from sheafops.linalg import GF, Matrix, QQ
from sheafops.models import circle_model, interval_model, sierpinski_model
from sheafops.sheaves import (
    HomSpace,
    SheafError,
    SheafMorphism,
    StalkSheaf,
    cokernel_sheaf,
    constant_on,
    constant_sheaf,
    direct_sum,
    exactness_witness,
    hom_sheaf,
    image_sheaf,
    kernel_sheaf,
    is_monomorphism,
    random_morphism,
    random_sheaf,
    sections_dim_identity_holds,
    tensor_sheaf,
    zero_sheaf,
)


def test_stalk_functor_completion_and_validation():
    site = interval_model().site
    poset = site.backing
    k = constant_sheaf(site, QQ)
    for x, y in poset.strict_pairs():
        assert k.comap(x, y) == Matrix.identity(1, QQ)


def test_nonfunctorial_data_rejected():
    p = sierpinski_model().site
    bad = {("p", "q"): Matrix.from_rows([[2]], QQ)}
    F = StalkSheaf(p, {"p": 1, "q": 1}, bad, QQ)  # a single edge: fine
    assert F.comap("p", "q") == Matrix.from_rows([[2]], QQ)
    from sheafops.sites import PosetSpace, build_alexandrov_site

    chain = build_alexandrov_site(PosetSpace(["a", "b", "c"], [("a", "b"), ("b", "c")]))
    full = {
        ("a", "b"): Matrix.identity(1, QQ),
        ("b", "c"): Matrix.identity(1, QQ),
        ("a", "c"): Matrix.from_rows([[3]], QQ),
    }
    with pytest.raises(SheafError):
        StalkSheaf(chain, {"a": 1, "b": 1, "c": 1}, full, QQ, validate=True)


def test_sections_are_limits():
    m = circle_model().site
    k = constant_sheaf(m, QQ)
    assert k.sections(m.top).dim == 1
    two_stars = m.backing.min_open("v0") | m.backing.min_open("v2")
    # two vertex stars on the triangle circle overlap in one edge
    assert k.sections(two_stars).dim == 1
    disjointish = frozenset({"v0", "v2"})
    assert k.sections(disjointish).dim == 2


def test_sections_dim_identity():
    site = circle_model().site
    F = random_sheaf(site, 11, max_dim=2)
    assert sections_dim_identity_holds(F, site.top)


def test_kernel_image_cokernel_compose_exactly():
    site = interval_model().site
    rng = random.Random(5)
    F = random_sheaf(site, 1, max_dim=2)
    G = random_sheaf(site, 2, max_dim=2)
    phi = random_morphism(F, G, rng)
    K, ki = kernel_sheaf(phi)
    I, ii = image_sheaf(phi)
    C, cp = cokernel_sheaf(phi)
    assert is_monomorphism(ki)
    assert exactness_witness(ki, phi)
    assert exactness_witness(ii, cp)
    for x in site.backing.points:
        assert K.dims[x] + I.dims[x] == F.dims[x]
        assert I.dims[x] + C.dims[x] == G.dims[x]


def test_hom_space_counts_natural_transformations():
    site = sierpinski_model().site
    k = constant_sheaf(site, QQ)
    kq = constant_on(site, {"q"}, QQ)
    # Hom(k_U, F) = Gamma(U; F): over the open point q the constant sheaf
    # has a one-dimensional section space, while maps out of k_X into the
    # extension by zero must vanish by naturality along p <= q.
    assert HomSpace(kq, k).dim == 1
    assert HomSpace(k, kq).dim == 0
    assert HomSpace(k, k).dim == 1


def test_tensor_and_hom_sheaf_stalks():
    site = sierpinski_model().site
    F = constant_on(site, {"q"}, QQ)
    G = constant_sheaf(site, QQ, dim=2)
    T = tensor_sheaf(F, G)
    assert T.dims == {"p": 0, "q": 2}
    H = hom_sheaf(F, G).sheaf
    # Hom(k_U, G) has sections over V = Hom(G(V cap U)) computed by descent
    assert H.dims["q"] == 2


def test_direct_sum_projectors():
    site = interval_model().site
    F = constant_sheaf(site, QQ)
    G = constant_on(site, {"v1"}, QQ)
    S, iF, iG = direct_sum(F, G)
    for x in site.backing.points:
        assert S.dims[x] == F.dims[x] + G.dims[x]
    assert is_monomorphism(iF) and is_monomorphism(iG)


def test_zero_sheaf_and_fields():
    site = sierpinski_model().site
    z = zero_sheaf(site, GF(3))
    assert z.is_zero()
    k3 = constant_sheaf(site, GF(3))
    assert k3.field == GF(3)


def test_random_sheaf_is_deterministic_and_functorial():
    site = circle_model().site
    F1 = random_sheaf(site, 42, max_dim=2)
    F2 = random_sheaf(site, 42, max_dim=2)
    assert F1.dims == F2.dims
    for x, y in site.backing.strict_pairs():
        assert F1.comap(x, y) == F2.comap(x, y)
    F1.validate()
