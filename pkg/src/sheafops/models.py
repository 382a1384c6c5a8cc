"""The shipped model corpus: spaces, morphisms and coarse-site variants.

Every acceptance check runs against these models: the interval, the
half-open interval (an ambient pair with a non-trivial relatively compact
family), the Sierpinski space, the circle, the 2-sphere, the torus
(7-vertex triangulation), the real projective plane (6-vertex
triangulation), the product circle x circle, and three coarse-site
variants (a basis subsite with designated coverings, a non-basis subsite,
and an identity-only subsite), plus one crafted covering system that
fails the GT axioms with a witness.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Dict, List, Optional, Tuple

from .linalg import Field, QQ
from .simplicial import FacePoset, SimplicialComplex, face_poset
from .sites import (
    CoveringSystem,
    FiniteSite,
    Open,
    OpenLattice,
    PosetSpace,
    SiteMorphism,
    build_alexandrov_site,
    coarse_subsite,
    materialize_lattice,
)


@dataclass
class Model:
    name: str
    site: FiniteSite
    complex: Optional[SimplicialComplex] = None
    face: Optional[FacePoset] = None

    @property
    def poset(self) -> PosetSpace:
        return self.site.backing

    @property
    def simplex_of(self) -> Optional[Dict[str, Tuple[str, ...]]]:
        return self.face.simplex_of if self.face is not None else None


def _simplicial_model(name: str, simplices) -> Model:
    K = SimplicialComplex(sorted({v for s in simplices for v in s}), simplices)
    fp = face_poset(K)
    return Model(name, fp.site, K, fp)


def point_model() -> Model:
    return Model("pt", build_alexandrov_site(PosetSpace(["pt"], [])))


def interval_model() -> Model:
    """A closed interval: the path complex v0 - v1 - v2."""
    return _simplicial_model(
        "interval", [["v0"], ["v1"], ["v2"], ["v0", "v1"], ["v1", "v2"]]
    )


def half_open_interval_model() -> Model:
    """A half-open interval inside a closed ambient interval.

    The space is {c0 < e0 > v1 < e1}; the ambient poset adds the missing
    endpoint b < e1, so opens meeting e1 are not relatively compact and
    U* = {c0, e0}.
    """
    points = ["c0", "e0", "v1", "e1"]
    rel = [("c0", "e0"), ("v1", "e0"), ("v1", "e1")]
    amb = PosetSpace(points + ["b"], rel + [("b", "e1")])
    site = build_alexandrov_site(
        PosetSpace(points, rel), ambient=(amb, {p: p for p in points})
    )
    return Model("half-open-interval", site)


def sierpinski_model() -> Model:
    """Two points p < q: opens are {}, {q}, {p, q}."""
    return Model("sierpinski", build_alexandrov_site(PosetSpace(["p", "q"], [("p", "q")])))


def circle_model() -> Model:
    """The triangle circle: 3 vertices, 3 edges, face poset of 6 points."""
    return _simplicial_model(
        "circle",
        [["v0"], ["v1"], ["v2"], ["v0", "v1"], ["v1", "v2"], ["v0", "v2"]],
    )


def sphere_model() -> Model:
    """The boundary of the tetrahedron: a triangulated 2-sphere."""
    verts = ["a", "b", "c", "d"]
    simplices = [[v] for v in verts]
    import itertools

    for k in (2, 3):
        simplices += [list(s) for s in itertools.combinations(verts, k)]
    return _simplicial_model("sphere", simplices)


def torus_model() -> Model:
    """The 7-vertex triangulated torus: triangles {i, i+1, i+3} and
    {i, i+2, i+3} mod 7."""
    verts = [f"t{i}" for i in range(7)]
    simplices = [[v] for v in verts]
    edges = set()
    tris = []
    for i in range(7):
        for a, b, c in ((i, (i + 1) % 7, (i + 3) % 7), (i, (i + 2) % 7, (i + 3) % 7)):
            tri = sorted({f"t{a}", f"t{b}", f"t{c}"})
            tris.append(tri)
            for x in tri:
                for y in tri:
                    if x < y:
                        edges.add((x, y))
    simplices += [list(e) for e in sorted(edges)]
    simplices += tris
    return _simplicial_model("torus", simplices)


def rp2_model() -> Model:
    """The 6-vertex triangulated real projective plane."""
    tris = [
        "125", "126", "134", "136", "145",
        "234", "235", "246", "356", "456",
    ]
    verts = [f"r{i}" for i in range(1, 7)]
    simplices = [[v] for v in verts]
    edges = set()
    faces = []
    for t in tris:
        tri = sorted(f"r{c}" for c in t)
        faces.append(tri)
        for x in tri:
            for y in tri:
                if x < y:
                    edges.add((x, y))
    simplices += [list(e) for e in sorted(edges)]
    simplices += faces
    return _simplicial_model("rp2", simplices)


def circle_times_circle_model() -> Model:
    """The product of two circle face posets (a cellular torus model)."""
    c = circle_model()
    prod = c.poset.product(c.poset)
    return Model("circle-x-circle", build_alexandrov_site(prod))


def shipped_models() -> Dict[str, Model]:
    models = [
        point_model(),
        interval_model(),
        half_open_interval_model(),
        sierpinski_model(),
        circle_model(),
        sphere_model(),
        torus_model(),
        rp2_model(),
        circle_times_circle_model(),
    ]
    return {m.name: m for m in models}


# -- shipped morphisms -----------------------------------------------------


@dataclass
class ShippedMorphism:
    name: str
    morphism: SiteMorphism
    # f^! factorization steps understood by upper_shriek, or None
    factorization: Optional[list] = None


def to_point(model: Model, pt: Optional[Model] = None) -> SiteMorphism:
    pt = pt or point_model()
    return SiteMorphism(model.site, pt.site, point_map={x: "pt" for x in model.poset.points})


def point_embedding(model: Model, x: str, pt: Optional[Model] = None) -> SiteMorphism:
    pt = pt or point_model()
    return SiteMorphism(pt.site, model.site, point_map={"pt": x})


def shipped_morphisms(field: Field = QQ) -> Dict[str, ShippedMorphism]:
    from .homological import DualizingComplex

    pt = point_model()
    circle = circle_model()
    interval = interval_model()
    out = {}

    def ship(name: str, mor: SiteMorphism, steps: list) -> None:
        mor.shriek_factorization = steps
        out[name] = ShippedMorphism(name, mor, steps)

    a = to_point(circle, pt)
    omega = DualizingComplex(circle.site, circle.simplex_of, field)
    ship("circle-to-point", a, [("projection", a, SiteMorphism.identity(circle.site), omega)])

    b = to_point(interval, pt)
    omega_i = DualizingComplex(interval.site, interval.simplex_of, field)
    ship("interval-to-point", b, [("projection", b, SiteMorphism.identity(interval.site), omega_i)])

    i_int = point_embedding(interval, "v1", pt)
    ship("interior-vertex", i_int, [("closed", i_int)])
    i_end = point_embedding(interval, "v0", pt)
    ship("endpoint-vertex", i_end, [("closed", i_end)])
    return out


# -- coarse-site variants --------------------------------------------------


def _min_open_coverings(site: FiniteSite, lattice: OpenLattice) -> CoveringSystem:
    """Designated coverings: the identity family and the minimal-open family
    of every member."""
    poset = site.backing
    covers = {}
    for w in lattice:
        fams = [frozenset([w])] if w else [frozenset()]
        if w:
            fams.append(frozenset(poset.min_open(x) for x in w))
        covers[w] = fams
    return CoveringSystem(covers=covers)


def coarse_circle_basis() -> Tuple[FiniteSite, SiteMorphism, bool]:
    """Basis coarse variant: the full circle lattice with designated
    identity + minimal-open coverings."""
    m = circle_model()
    lat = OpenLattice(materialize_lattice(m.site))
    return coarse_subsite(m.site, lat, _min_open_coverings(m.site, lat))


def coarse_interval_nonbasis() -> Tuple[FiniteSite, SiteMorphism, bool]:
    """Non-basis coarse variant on the interval: only {}, U_v1 and X."""
    m = interval_model()
    poset = m.poset
    lat = OpenLattice([frozenset(), poset.min_open("v1"), m.site.top])
    return coarse_subsite(m.site, lat, CoveringSystem.identity_only(lat))


def coarse_interval_identity_only() -> Tuple[FiniteSite, SiteMorphism, bool]:
    """Basis lattice with identity-only coverings: coarse sheaves need not
    satisfy fine descent (used for the counit-failure example)."""
    m = interval_model()
    lat = OpenLattice(materialize_lattice(m.site))
    return coarse_subsite(m.site, lat, CoveringSystem.identity_only(lat))


def coarse_variants() -> Dict[str, Tuple[FiniteSite, SiteMorphism, bool]]:
    return {
        "circle-basis": coarse_circle_basis(),
        "interval-nonbasis": coarse_interval_nonbasis(),
        "interval-identity-only": coarse_interval_identity_only(),
    }


def crafted_gt_failure() -> FiniteSite:
    """A covering system that violates GT1: some opens declare no family at
    all, so the identity cover is not recognized there."""
    m = interval_model()
    lat = OpenLattice(materialize_lattice(m.site))
    top = m.site.top
    mins = frozenset(m.poset.min_open(x) for x in top)
    covers = {top: [frozenset([top]), mins]}
    return FiniteSite(lat, CoveringSystem(covers=covers))
