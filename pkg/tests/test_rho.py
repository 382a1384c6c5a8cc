"""The coarse-subsite rho layer: direct, inverse, shriek and their laws."""

import random

from sheafops.linalg import Matrix, QQ
from sheafops.models import coarse_variants
from sheafops.presheaves import Presheaf, site_opens
from sheafops.rho import (
    rho_direct,
    rho_hom_formula_check,
    rho_identity_direct,
    rho_inverse,
    rho_inverse_agreement,
    rho_shriek_adjunction_check,
    rho_shriek_colimit_comparison,
    rho_shriek_exactness,
    rho_shriek_identity,
    rho_tensor_compatibility,
)
from sheafops.sheaves import constant_sheaf, random_sheaf
from sheafops.laws import random_ses


def _variants():
    return coarse_variants()


def test_rho_direct_computes_coarse_sections():
    coarse, rho, basis = _variants()["circle-basis"]
    k = constant_sheaf(rho.source, QQ)
    G = rho_direct(rho, k).presheaf
    assert G.dims[rho.source.top] == 1
    assert G.dims[frozenset()] == 0


def test_rho_inverse_recovers_sheaf_on_basis():
    coarse, rho, basis = _variants()["circle-basis"]
    assert basis
    for seed in (1, 2, 3):
        F = random_sheaf(rho.source, seed, max_dim=2)
        rep = rho_identity_direct(rho, F)
        assert rep.ok and rep.iso


def test_rho_shriek_identity_on_basis():
    coarse, rho, basis = _variants()["circle-basis"]
    for seed in (4, 5):
        F = random_sheaf(rho.source, seed, max_dim=2)
        rep = rho_shriek_identity(rho, F)
        assert rep.ok and rep.iso


def test_rho_adjunction_with_triangles():
    coarse, rho, basis = _variants()["circle-basis"]
    F = random_sheaf(rho.source, 6, max_dim=2)
    G = rho_direct(rho, random_sheaf(rho.source, 7, max_dim=2)).presheaf
    rep = rho_shriek_adjunction_check(rho, F, G)
    assert rep.performed and rep.bijective
    assert rep.triangle_unit and rep.triangle_counit


def test_rho_adjunction_skips_non_basis_sublattice():
    coarse, rho, basis = _variants()["interval-nonbasis"]
    assert not basis
    F = constant_sheaf(rho.source, QQ)
    G = rho_direct(rho, F).presheaf
    rep = rho_shriek_adjunction_check(rho, F, G)
    assert not rep.performed
    assert "not a basis" in rep.note


def test_rho_adjunction_skips_non_descent_target():
    # identity-only designated coverings admit coarse presheaves that do
    # not glue from minimal opens; the check must refuse, not assert
    coarse, rho, basis = _variants()["interval-identity-only"]
    assert basis
    opens = site_opens(coarse)
    dims = {u: 1 for u in opens}
    restricts = {
        (u, v): Matrix.identity(1, QQ) for u in opens for v in opens if v < u
    }
    G = Presheaf(coarse, dims, restricts, QQ)
    F = constant_sheaf(rho.source, QQ)
    rep = rho_shriek_adjunction_check(rho, F, G)
    assert not rep.performed
    assert "does not glue" in rep.note


def test_rho_shriek_preserves_short_exact_sequences():
    coarse, rho, basis = _variants()["circle-basis"]
    rng = random.Random(8)
    for _ in range(3):
        A, a, B, b, C = random_ses(rho.source, rng, QQ)
        rep = rho_shriek_exactness(rho, a, b)
        assert rep.ok and rep.iso


def test_rho_hom_and_tensor_formulas():
    coarse, rho, basis = _variants()["circle-basis"]
    F = random_sheaf(rho.source, 9, max_dim=2)
    G = rho_direct(rho, random_sheaf(rho.source, 10, max_dim=2)).presheaf
    for rep in rho_hom_formula_check(rho, F, G):
        assert rep.ok and (rep.iso or not rep.certified)
    H = random_sheaf(rho.source, 11, max_dim=2)
    rep = rho_tensor_compatibility(rho, F, H)
    assert rep.ok and rep.iso


def test_rho_inverse_kan_agreement_all_variants():
    for name, (coarse, rho, basis) in _variants().items():
        G = rho_direct(rho, random_sheaf(rho.source, 12, max_dim=2)).presheaf
        assert rho_inverse_agreement(rho, G), name


def test_rho_shriek_colimit_comparison_reports_table():
    coarse, rho, basis = _variants()["circle-basis"]
    u = rho.source.backing.min_open("v0")
    out = rho_shriek_colimit_comparison(rho, u)
    assert set(out) == {"vstar", "table", "agree"}
    assert out["agree"] in (True, False)
