"""Simplicial complexes, face posets, stratifications, chain oracle."""

import pytest

from sheafops.homological import cohomology_table
from sheafops.linalg import GF, Matrix, QQ
from sheafops.models import circle_model, rp2_model, sphere_model
from sheafops.simplicial import (
    SimplicialComplex,
    SimplicialError,
    Stratification,
    constructible_from_stratification,
    face_poset,
    is_constructible,
    parse_complex,
    serialize_complex,
    simplicial_cohomology_dims,
    simplicial_homology_dims,
    star_cover_is_cover,
    vertex_star_cover,
)


def test_axiom_violations_carry_witnesses():
    with pytest.raises(SimplicialError, match="S1 violation"):
        SimplicialComplex(["a"], [["a", "b"]])
    with pytest.raises(SimplicialError, match="S2 violation"):
        SimplicialComplex(["a", "b"], [["a"], ["a", "b"]])
    with pytest.raises(SimplicialError, match="S3 violation: vertex b"):
        SimplicialComplex(["a", "b"], [["a"]])


def test_parse_complex_reports_position_of_malformed_json():
    with pytest.raises(SimplicialError, match="line 1"):
        parse_complex('{"simplices": [[')
    with pytest.raises(SimplicialError, match="simplices"):
        parse_complex('{"vertices": []}')


def test_serialize_parse_roundtrip():
    K = circle_model().complex
    K2 = parse_complex(serialize_complex(K))
    assert K2.simplices == K.simplices and K2.vertices == K.vertices


def test_face_poset_of_single_edge():
    K = SimplicialComplex(["a", "b"], [["a"], ["b"], ["a", "b"]])
    fp = face_poset(K)
    assert len(fp.poset.points) == 3
    assert fp.poset.min_open("a") == frozenset({"a", "a,b"})


def test_vertex_star_cover_covers():
    for m in (circle_model(), sphere_model()):
        fp = m.face
        assert star_cover_is_cover(fp)
        assert len(vertex_star_cover(fp)) == len(m.complex.vertices)


def test_constant_stratification_gives_constant_sheaf():
    m = circle_model()
    pts = set(m.poset.points)
    strat = Stratification(m.face, {"all": pts}, {"all": 1})
    F = constructible_from_stratification(strat)
    assert cohomology_table(F) == [1, 1]
    assert is_constructible(F, strat)


def test_rank_two_monodromy_kills_cohomology():
    m = circle_model()
    pts = set(m.poset.points)
    rot = Matrix.from_rows([[0, -1], [1, 0]], QQ)
    trans = {(x, y): Matrix.identity(2, QQ) for x, y in m.poset.hasse_pairs()}
    trans[("v0", "v0,v1")] = rot
    strat = Stratification(m.face, {"all": pts}, {"all": 2}, trans)
    F = constructible_from_stratification(strat)
    # the rotation has no eigenvalue 1: no invariants, and chi = 0
    assert F.sections(m.site.top).dim == 0
    assert cohomology_table(F) == [0]


def test_arc_decomposition_of_the_circle():
    m = circle_model()
    pts = set(m.poset.points)
    u = {"v0,v1"}
    strat = Stratification(m.face, {"U": u, "S": pts - u}, {"U": 1, "S": 1})
    F = constructible_from_stratification(strat)
    # k_U + k_S for an open edge U and the closed complementary arc S
    assert cohomology_table(F) == [1, 1]
    assert is_constructible(F, strat)


def test_non_locally_constant_stratum_rejected():
    m = circle_model()
    pts = set(m.poset.points)
    trans = {(x, y): Matrix.identity(1, QQ) for x, y in m.poset.hasse_pairs()}
    trans[("v0", "v0,v1")] = Matrix.zero(1, 1, QQ)
    strat = Stratification(m.face, {"all": pts}, {"all": 1}, trans)
    with pytest.raises(SimplicialError, match="locally constant"):
        constructible_from_stratification(strat)


def test_chain_oracle_tables():
    assert simplicial_homology_dims(circle_model().complex) == [1, 1]
    assert simplicial_homology_dims(sphere_model().complex) == [1, 0, 1]
    assert simplicial_homology_dims(rp2_model().complex, GF(2)) == [1, 1, 1]
    assert simplicial_homology_dims(rp2_model().complex) == [1, 0, 0]
    for m in (circle_model(), sphere_model()):
        K = m.complex
        assert simplicial_cohomology_dims(K) == simplicial_homology_dims(K)
