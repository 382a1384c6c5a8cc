"""Simplicial complexes, face posets, star covers and the chain oracle.

The appendix machinery in finite form: abstract simplicial complexes with
the four axioms (S1 simplices are finite non-empty vertex subsets, S2 face
closure, S3 vertex membership, S4 local finiteness), their face posets as
Alexandrov sites (opens are unions of open stars), stratifications with
locally constant pieces, and an independent boundary-matrix oracle for
simplicial homology and cohomology used to cross-check every sheaf-side
cohomology computation.
"""

from __future__ import annotations

import itertools
import json
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

from .linalg import Field, Matrix, QQ
from .sheaves import SheafError, StalkSheaf
from .sites import (
    FiniteSite,
    Open,
    PosetSpace,
    SiteError,
    build_alexandrov_site,
)


class SimplicialError(ValueError):
    pass


Simplex = Tuple[str, ...]


def _canon(sigma: Iterable[str]) -> Simplex:
    return tuple(sorted(set(sigma)))


class SimplicialComplex:
    """An abstract simplicial complex validated against axioms S1-S4."""

    def __init__(self, vertices: Sequence[str], simplices: Iterable[Iterable[str]]):
        self.vertices: List[str] = sorted(set(str(v) for v in vertices))
        self.simplices: List[Simplex] = sorted(
            {_canon(s) for s in simplices}, key=lambda s: (len(s), s)
        )
        self.validate()

    def validate(self):
        vset = set(self.vertices)
        sset = set(self.simplices)
        for s in self.simplices:
            if not s:
                raise SimplicialError("S1 violation: empty simplex")
            extra = set(s) - vset
            if extra:
                raise SimplicialError(
                    f"S1 violation: simplex {set(s)} uses unknown vertices {extra}"
                )
            for k in range(1, len(s)):
                for face in itertools.combinations(s, k):
                    if face not in sset:
                        raise SimplicialError(
                            f"S2 violation: face {set(face)} of {set(s)} is missing"
                        )
        for v in self.vertices:
            if (v,) not in sset:
                raise SimplicialError(f"S3 violation: vertex {v} is not a simplex")
        # S4 (local finiteness) is automatic for a finite complex but still
        # validated: every vertex belongs to finitely many simplices.
        for v in self.vertices:
            if sum(1 for s in self.simplices if v in s) < 1:
                raise SimplicialError(f"S4 violation: vertex {v} lies in no simplex")

    @property
    def dimension(self) -> int:
        return max((len(s) - 1 for s in self.simplices), default=-1)

    def simplices_of_dim(self, k: int) -> List[Simplex]:
        return [s for s in self.simplices if len(s) == k + 1]

    def __repr__(self):
        return f"SimplicialComplex({len(self.vertices)} vertices, {len(self.simplices)} simplices)"


def parse_complex(source) -> SimplicialComplex:
    """Read a ``.cplx.json`` document: {"vertices": [...], "simplices": [[...]]}.

    ``source`` may be a path, a JSON string, or an already-decoded dict.
    Errors carry position (from the JSON decoder) or the offending simplex.
    """
    if isinstance(source, dict):
        doc = source
    else:
        text = None
        try:
            with open(source, "r", encoding="utf-8") as fh:
                text = fh.read()
        except (OSError, TypeError):
            text = str(source)
        try:
            doc = json.loads(text)
        except json.JSONDecodeError as e:
            raise SimplicialError(
                f"malformed complex file at line {e.lineno}, column {e.colno}: {e.msg}"
            ) from None
    if not isinstance(doc, dict) or "simplices" not in doc:
        raise SimplicialError('complex document needs a "simplices" list')
    simplices = [_canon(s) for s in doc["simplices"]]
    vertices = doc.get("vertices")
    if vertices is None:
        vertices = sorted({v for s in simplices for v in s})
    return SimplicialComplex(vertices, simplices)


def serialize_complex(K: SimplicialComplex) -> str:
    doc = {"vertices": list(K.vertices), "simplices": [list(s) for s in K.simplices]}
    return json.dumps(doc, indent=2, sort_keys=True) + "\n"


# -- face poset and stars --------------------------------------------------


def simplex_point(sigma: Iterable[str]) -> str:
    """The face-poset point name of a simplex."""
    return ",".join(_canon(sigma))


class FacePoset:
    """The face poset of a complex with its Alexandrov site."""

    def __init__(self, K: SimplicialComplex):
        self.complex = K
        points = [simplex_point(s) for s in K.simplices]
        leq = [
            (simplex_point(s), simplex_point(t))
            for s in K.simplices
            for t in K.simplices
            if set(s) <= set(t)
        ]
        self.poset = PosetSpace(points, leq)
        self.site = build_alexandrov_site(self.poset)
        self.simplex_of: Dict[str, Simplex] = {
            simplex_point(s): s for s in K.simplices
        }


def face_poset(K: SimplicialComplex) -> FacePoset:
    return FacePoset(K)


def open_star(fp: FacePoset, sigma: Iterable[str]) -> Open:
    """U(sigma): all simplices having sigma as a face (an up-set)."""
    p = simplex_point(sigma)
    if p not in self_points(fp):
        raise SimplicialError(f"{set(_canon(sigma))} is not a simplex")
    return fp.poset.min_open(p)


def self_points(fp: FacePoset):
    return set(fp.poset.points)


def vertex_star_cover(fp: FacePoset) -> List[Open]:
    """The covering of the space by open stars of vertices."""
    return [open_star(fp, (v,)) for v in fp.complex.vertices]


def star_cover_is_cover(fp: FacePoset) -> bool:
    u = frozenset()
    for s in vertex_star_cover(fp):
        u = u | s
    return u == fp.site.top


# -- stratifications -------------------------------------------------------


class Stratification:
    """A labeled partition of the face poset with per-stratum stalk data.

    ``strata``: label -> set of points; ``dims``: label -> stalk dimension;
    ``transitions``: maps along Hasse edges, keyed by the edge ``(x, y)``
    or by the stratum pair ``(label_x, label_y)``.  Intra-stratum edges
    default to the identity (locally constant pieces).
    """

    def __init__(
        self,
        fp: FacePoset,
        strata: Dict[str, Iterable[str]],
        dims: Dict[str, int],
        transitions: Optional[Dict[Tuple[str, str], Matrix]] = None,
        field: Field = QQ,
    ):
        self.fp = fp
        self.strata = {lab: frozenset(pts) for lab, pts in strata.items()}
        self.dims = dict(dims)
        self.transitions = dict(transitions or {})
        self.field = field
        covered = frozenset().union(*self.strata.values()) if self.strata else frozenset()
        pts = set(fp.poset.points)
        if covered != pts:
            raise SimplicialError("strata do not partition the face poset")
        if sum(len(s) for s in self.strata.values()) != len(pts):
            raise SimplicialError("strata overlap")
        self.label_of = {p: lab for lab, s in self.strata.items() for p in s}

    def transition(self, x: str, y: str) -> Matrix:
        lx, ly = self.label_of[x], self.label_of[y]
        if (x, y) in self.transitions:
            return self.transitions[(x, y)]
        if (lx, ly) in self.transitions:
            return self.transitions[(lx, ly)]
        if lx == ly:
            return Matrix.identity(self.dims[lx], self.field)
        return Matrix.zero(self.dims[ly], self.dims[lx], self.field)


def constructible_from_stratification(strat: Stratification) -> StalkSheaf:
    """The stalk sheaf of a stratification; validated functorial and
    locally constant (invertible comaps) on each stratum."""
    fp = strat.fp
    poset = fp.poset
    dims = {p: strat.dims[strat.label_of[p]] for p in poset.points}
    comaps = {}
    for x, y in poset.hasse_pairs():
        comaps[(x, y)] = strat.transition(x, y)
    F = StalkSheaf(fp.site, dims, comaps, strat.field, validate=True)
    for x, y in poset.strict_pairs():
        if strat.label_of[x] == strat.label_of[y] and not F.comap(x, y).is_invertible():
            raise SimplicialError(
                f"stratum {strat.label_of[x]} is not locally constant along {x} <= {y}"
            )
    return F


def is_constructible(F: StalkSheaf, strat: Stratification) -> bool:
    """Locally constant on each stratum: intra-stratum comaps invertible."""
    for x, y in F.poset.strict_pairs():
        if strat.label_of[x] == strat.label_of[y]:
            m = F.comap(x, y)
            if m.rows != m.cols or not m.is_invertible():
                return False
    return True


# -- the independent chain oracle ------------------------------------------


def boundary_matrix(K: SimplicialComplex, k: int, field: Field = QQ) -> Matrix:
    """d_k: C_k -> C_{k-1} with the sorted-vertex orientation and the sign
    (-1)^i for removing the i-th vertex."""
    rows = K.simplices_of_dim(k - 1)
    cols = K.simplices_of_dim(k)
    idx = {s: i for i, s in enumerate(rows)}
    m = Matrix.zero(len(rows), len(cols), field)
    for j, s in enumerate(cols):
        sign = field.one
        for i in range(len(s)):
            face = s[:i] + s[i + 1 :]
            if face:
                m.data[idx[face]][j] = sign
            sign = -sign
    return m


def simplicial_homology_dims(K: SimplicialComplex, field: Field = QQ) -> List[int]:
    """dim H_k for k = 0..dim(K), via boundary matrices only."""
    n = K.dimension
    out = []
    for k in range(n + 1):
        dk = boundary_matrix(K, k, field)
        dk1 = boundary_matrix(K, k + 1, field) if k < n else Matrix.zero(
            len(K.simplices_of_dim(k)), 0, field
        )
        cycles = dk.kernel().cols if dk.rows else len(K.simplices_of_dim(k))
        out.append(cycles - dk1.rank())
    return out


def simplicial_cohomology_dims(K: SimplicialComplex, field: Field = QQ) -> List[int]:
    """dim H^k via the transposed (cochain) complex."""
    n = K.dimension
    out = []
    for k in range(n + 1):
        delta_k = boundary_matrix(K, k + 1, field).transpose() if k < n else Matrix.zero(
            0, len(K.simplices_of_dim(k)), field
        )
        delta_km1 = boundary_matrix(K, k, field).transpose()
        cocycles = delta_k.kernel().cols if delta_k.rows else len(K.simplices_of_dim(k))
        out.append(cocycles - delta_km1.rank())
    return out
