"""Sheaves of finite-dimensional vector spaces on Alexandrov sites.

A sheaf on a poset-backed site is a stalk functor: a space per point and a
comparison map per related pair, with exact functoriality.  Sections over
any subset are the limit of the stalks; everything downstream (kernels,
cokernels, tensor, hom, images) is computed stalkwise in exact arithmetic.
"""

from __future__ import annotations

import itertools
import random
from typing import Dict, FrozenSet, Iterable, List, Optional, Sequence, Tuple

from .linalg import Field, Matrix, QQ
from .sites import FiniteSite, Open, PosetSpace, SiteError, build_alexandrov_site


class SheafError(ValueError):
    pass


class StalkSheaf:
    """A functor from the backing poset to finite-dimensional spaces."""

    def __init__(
        self,
        site: FiniteSite,
        dims: Dict[str, int],
        comaps: Dict[Tuple[str, str], Matrix],
        field: Field = QQ,
        validate: bool = True,
    ):
        if site.backing is None:
            raise SheafError("stalk sheaves need a poset-backed site")
        self.site = site
        self.poset: PosetSpace = site.backing
        self.field = field
        self.dims = {x: int(dims.get(x, 0)) for x in self.poset.points}
        self._comaps: Dict[Tuple[str, str], Matrix] = {}
        for (x, y), m in comaps.items():
            if not self.poset.leq(x, y) or x == y:
                raise SheafError(f"comap given for non-pair {x} <= {y}")
            if m.shape != (self.dims[y], self.dims[x]):
                raise SheafError(f"comap shape mismatch at {x} <= {y}")
            self._comaps[(x, y)] = m
        self._complete()
        if validate:
            self.validate()

    def _complete(self):
        """Fill in comaps for all strict pairs by composing along the order."""
        order = self.poset.linear_extension()
        pos = {p: i for i, p in enumerate(order)}
        for x in order:
            for y in order:
                if x == y or not self.poset.leq(x, y):
                    continue
                if (x, y) in self._comaps:
                    continue
                # factor through any intermediate point if possible
                mid = [
                    z
                    for z in order
                    if z != x and z != y and self.poset.leq(x, z) and self.poset.leq(z, y)
                ]
                done = False
                for z in sorted(mid, key=pos.get):
                    if (x, z) in self._comaps and (z, y) in self._comaps:
                        self._comaps[(x, y)] = self._comaps[(z, y)] * self._comaps[(x, z)]
                        done = True
                        break
                if not done:
                    if self.dims[x] == 0 or self.dims[y] == 0:
                        self._comaps[(x, y)] = Matrix.zero(
                            self.dims[y], self.dims[x], self.field
                        )
                    else:
                        raise SheafError(f"missing comap for {x} <= {y}")

    def validate(self):
        for x, y in self.poset.strict_pairs():
            for z in self.poset.points:
                if z != x and z != y and self.poset.leq(x, z) and self.poset.leq(z, y):
                    lhs = self.comap(z, y) * self.comap(x, z)
                    if lhs != self.comap(x, y):
                        raise SheafError(
                            f"functoriality fails along {x} <= {z} <= {y}"
                        )

    def comap(self, x: str, y: str) -> Matrix:
        if x == y:
            return Matrix.identity(self.dims[x], self.field)
        return self._comaps[(x, y)]

    def dim(self, x: str) -> int:
        return self.dims[x]

    def total_dim(self) -> int:
        return sum(self.dims.values())

    def is_zero(self) -> bool:
        return self.total_dim() == 0

    # -- sections ----------------------------------------------------------

    def sections(self, subset: Iterable[str]) -> "SectionSpace":
        return SectionSpace(self, frozenset(subset))

    def __repr__(self):
        return f"StalkSheaf(dims={{{', '.join(f'{x}:{d}' for x, d in sorted(self.dims.items()))}}})"


class SectionSpace:
    """Limit of the stalks of a sheaf over a subset of the poset.

    Elements are compatible families; the space is presented as the kernel
    of the difference map over the covering pairs of the restricted order.
    """

    def __init__(self, sheaf: StalkSheaf, subset: FrozenSet[str]):
        self.sheaf = sheaf
        self.subset = subset
        order = [p for p in sheaf.poset.linear_extension() if p in subset]
        self.points = tuple(order)
        self.offsets: Dict[str, int] = {}
        n = 0
        for p in self.points:
            self.offsets[p] = n
            n += sheaf.dims[p]
        self.total = n
        field = sheaf.field
        rows: List[List] = []
        poset = sheaf.poset
        pairs = _restricted_cover_pairs(poset, self.points)
        for x, y in pairs:
            m = sheaf.comap(x, y)
            for i in range(m.rows):
                row = [field.zero] * n
                for j in range(m.cols):
                    row[self.offsets[x] + j] = m.data[i][j]
                row[self.offsets[y] + i] = row[self.offsets[y] + i] - field.one
                rows.append(row)
        if rows:
            constraint = Matrix(len(rows), n, rows, field)
            self.basis = constraint.kernel()
        else:
            self.basis = Matrix.identity(n, field)

    @property
    def dim(self) -> int:
        return self.basis.cols

    def stalk_component(self, x: str) -> Matrix:
        """Matrix section-space -> stalk(x): evaluation of a family at x."""
        d = self.sheaf.dims[x]
        o = self.offsets[x]
        return self.basis.submatrix(range(o, o + d), range(self.basis.cols))

    def restriction_to(self, other: "SectionSpace") -> Matrix:
        """The canonical map to the sections over a smaller subset."""
        if not other.subset <= self.subset:
            raise SheafError("restriction target is not a subset")
        field = self.sheaf.field
        proj = Matrix.zero(other.total, self.basis.cols, field)
        for p in other.points:
            d = self.sheaf.dims[p]
            for i in range(d):
                proj.data[other.offsets[p] + i] = list(
                    self.basis.data[self.offsets[p] + i]
                )
        return other.basis.solve(proj)

    def embed_vector(self, coeffs: Sequence) -> Dict[str, Matrix]:
        """A section (by basis coefficients) as a per-point column dict."""
        col = Matrix.column(list(coeffs), self.sheaf.field)
        vec = self.basis * col
        out = {}
        for p in self.points:
            d = self.sheaf.dims[p]
            o = self.offsets[p]
            out[p] = Matrix(d, 1, [[vec.data[o + i][0]] for i in range(d)], self.sheaf.field)
        return out


def _restricted_cover_pairs(poset: PosetSpace, points: Sequence[str]) -> List[Tuple[str, str]]:
    pts = set(points)
    out = []
    for x in points:
        for y in points:
            if x != y and poset.leq(x, y):
                if not any(
                    z in pts and z != x and z != y and poset.leq(x, z) and poset.leq(z, y)
                    for z in poset.points
                ):
                    out.append((x, y))
    return out


class SheafMorphism:
    """A natural transformation between stalk sheaves on the same site."""

    def __init__(
        self,
        source: StalkSheaf,
        target: StalkSheaf,
        components: Dict[str, Matrix],
        validate: bool = True,
    ):
        if source.site is not target.site and source.poset != target.poset:
            raise SheafError("morphism between sheaves on different sites")
        self.source = source
        self.target = target
        self.components = {}
        for x in source.poset.points:
            m = components.get(x)
            if m is None:
                m = Matrix.zero(target.dims[x], source.dims[x], source.field)
            if m.shape != (target.dims[x], source.dims[x]):
                raise SheafError(f"component shape mismatch at {x}")
            self.components[x] = m
        if validate:
            self.validate()

    def validate(self):
        for x, y in self.source.poset.strict_pairs():
            lhs = self.components[y] * self.source.comap(x, y)
            rhs = self.target.comap(x, y) * self.components[x]
            if lhs != rhs:
                raise SheafError(f"naturality square fails at {x} <= {y}")

    def component(self, x: str) -> Matrix:
        return self.components[x]

    def __add__(self, other: "SheafMorphism") -> "SheafMorphism":
        return SheafMorphism(
            self.source,
            self.target,
            {x: self.components[x] + other.components[x] for x in self.components},
            validate=False,
        )

    def __sub__(self, other: "SheafMorphism") -> "SheafMorphism":
        return SheafMorphism(
            self.source,
            self.target,
            {x: self.components[x] - other.components[x] for x in self.components},
            validate=False,
        )

    def __neg__(self) -> "SheafMorphism":
        return SheafMorphism(
            self.source,
            self.target,
            {x: -self.components[x] for x in self.components},
            validate=False,
        )

    def scale(self, c) -> "SheafMorphism":
        return SheafMorphism(
            self.source,
            self.target,
            {x: self.components[x].scale(c) for x in self.components},
            validate=False,
        )

    def compose(self, other: "SheafMorphism") -> "SheafMorphism":
        """self o other."""
        if other.target.dims != self.source.dims:
            raise SheafError("composition mismatch")
        return SheafMorphism(
            other.source,
            self.target,
            {x: self.components[x] * other.components[x] for x in self.components},
            validate=False,
        )

    def is_zero(self) -> bool:
        return all(m.is_zero() for m in self.components.values())

    @staticmethod
    def identity(sheaf: StalkSheaf) -> "SheafMorphism":
        return SheafMorphism(
            sheaf,
            sheaf,
            {x: Matrix.identity(sheaf.dims[x], sheaf.field) for x in sheaf.poset.points},
            validate=False,
        )

    @staticmethod
    def zero(source: StalkSheaf, target: StalkSheaf) -> "SheafMorphism":
        return SheafMorphism(source, target, {}, validate=False)

    def __repr__(self):
        return f"SheafMorphism({self.source!r} -> {self.target!r})"


# -- constant and locally closed constant sheaves -------------------------


def locally_closed_witness(site: FiniteSite, z: Iterable[str]) -> Optional[Tuple[str, str, str]]:
    """A chain x <= y <= z with endpoints in Z and middle outside, if any."""
    assert site.backing is not None
    poset = site.backing
    zs = frozenset(z)
    for x in zs:
        for w in zs:
            if poset.leq(x, w):
                for y in poset.points:
                    if y not in zs and y != x and y != w and poset.leq(x, y) and poset.leq(y, w):
                        return (x, y, w)
    return None


def constant_on(site: FiniteSite, z: Iterable[str], field: Field = QQ, dim: int = 1) -> StalkSheaf:
    """The sheaf k_Z: stalk k^dim on the locally closed set Z, zero outside."""
    zs = frozenset(z)
    witness = locally_closed_witness(site, zs)
    if witness is not None:
        raise SheafError(
            f"set is not locally closed; witness chain {witness[0]} <= {witness[1]} <= {witness[2]}"
        )
    dims = {x: (dim if x in zs else 0) for x in site.backing.points}
    comaps = {}
    for x, y in site.backing.strict_pairs():
        if x in zs and y in zs:
            comaps[(x, y)] = Matrix.identity(dim, field)
    return StalkSheaf(site, dims, comaps, field, validate=False)


def constant_sheaf(site: FiniteSite, field: Field = QQ, dim: int = 1) -> StalkSheaf:
    return constant_on(site, site.backing.points, field, dim)


def zero_sheaf(site: FiniteSite, field: Field = QQ) -> StalkSheaf:
    return StalkSheaf(site, {}, {}, field, validate=False)


# -- abelian operations ----------------------------------------------------


def kernel_sheaf(phi: SheafMorphism) -> Tuple[StalkSheaf, SheafMorphism]:
    """The kernel and its inclusion, computed stalkwise."""
    F = phi.source
    bases = {x: phi.components[x].kernel() for x in F.poset.points}
    dims = {x: bases[x].cols for x in bases}
    comaps = {}
    for x, y in F.poset.strict_pairs():
        if dims[x] and dims[y]:
            comaps[(x, y)] = bases[y].solve(F.comap(x, y) * bases[x])
    K = StalkSheaf(F.site, dims, comaps, F.field, validate=False)
    incl = SheafMorphism(K, F, bases, validate=True)
    return K, incl


def image_sheaf(phi: SheafMorphism) -> Tuple[StalkSheaf, SheafMorphism]:
    """The image and its inclusion into the target."""
    G = phi.target
    bases = {x: phi.components[x].column_space() for x in G.poset.points}
    dims = {x: bases[x].cols for x in bases}
    comaps = {}
    for x, y in G.poset.strict_pairs():
        if dims[x] and dims[y]:
            comaps[(x, y)] = bases[y].solve(G.comap(x, y) * bases[x])
    I = StalkSheaf(G.site, dims, comaps, G.field, validate=False)
    incl = SheafMorphism(I, G, bases, validate=True)
    return I, incl


def cokernel_sheaf(phi: SheafMorphism) -> Tuple[StalkSheaf, SheafMorphism]:
    """The cokernel and the projection onto it.

    On stalk sheaves the openwise cokernel is already a sheaf, so no
    sheafification step is needed.
    """
    G = phi.target
    projs = {x: phi.components[x].cokernel_projection() for x in G.poset.points}
    dims = {x: projs[x].rows for x in projs}
    comaps = {}
    field = G.field
    for x, y in G.poset.strict_pairs():
        if dims[x] and dims[y]:
            # right inverse of the projection, then push the comap down
            section = projs[x].solve(Matrix.identity(dims[x], field))
            comaps[(x, y)] = projs[y] * G.comap(x, y) * section
    C = StalkSheaf(G.site, dims, comaps, field, validate=False)
    proj = SheafMorphism(G, C, projs, validate=True)
    return C, proj


def direct_sum(F: StalkSheaf, G: StalkSheaf) -> Tuple[StalkSheaf, SheafMorphism, SheafMorphism]:
    """F + G with the two inclusions."""
    if F.poset != G.poset:
        raise SheafError("direct sum across different sites")
    dims = {x: F.dims[x] + G.dims[x] for x in F.poset.points}
    comaps = {}
    for x, y in F.poset.strict_pairs():
        comaps[(x, y)] = Matrix.block_diag([F.comap(x, y), G.comap(x, y)], F.field)
    S = StalkSheaf(F.site, dims, comaps, F.field, validate=False)
    inc_f = {}
    inc_g = {}
    for x in F.poset.points:
        f, g = F.dims[x], G.dims[x]
        inc_f[x] = Matrix.identity(f + g, F.field).submatrix(range(f + g), range(f))
        inc_g[x] = Matrix.identity(f + g, F.field).submatrix(range(f + g), range(f, f + g))
    return (
        S,
        SheafMorphism(F, S, inc_f, validate=False),
        SheafMorphism(G, S, inc_g, validate=False),
    )


def is_monomorphism(phi: SheafMorphism) -> bool:
    return all(m.kernel().cols == 0 for m in phi.components.values())


def is_epimorphism_stalkwise(phi: SheafMorphism) -> bool:
    return all(m.rank() == m.rows for m in phi.components.values())


def tensor_sheaf(F: StalkSheaf, G: StalkSheaf) -> StalkSheaf:
    """Stalkwise tensor product (equals the sheafified openwise tensor)."""
    if F.poset != G.poset:
        raise SheafError("tensor across different sites")
    dims = {x: F.dims[x] * G.dims[x] for x in F.poset.points}
    comaps = {}
    for x, y in F.poset.strict_pairs():
        comaps[(x, y)] = F.comap(x, y).kronecker(G.comap(x, y))
    return StalkSheaf(F.site, dims, comaps, F.field, validate=False)


def tensor_morphism(phi: SheafMorphism, psi: SheafMorphism) -> SheafMorphism:
    S = tensor_sheaf(phi.source, psi.source)
    T = tensor_sheaf(phi.target, psi.target)
    comps = {
        x: phi.components[x].kronecker(psi.components[x]) for x in phi.components
    }
    return SheafMorphism(S, T, comps, validate=False)


# -- hom spaces ------------------------------------------------------------


class HomSpace:
    """The space of sheaf morphisms F -> G, with an explicit basis."""

    def __init__(self, F: StalkSheaf, G: StalkSheaf, within: Optional[FrozenSet[str]] = None):
        self.F, self.G = F, G
        poset = F.poset
        pts = [p for p in poset.linear_extension() if within is None or p in within]
        self.points = tuple(pts)
        self.offsets: Dict[str, int] = {}
        n = 0
        for p in pts:
            self.offsets[p] = n
            n += F.dims[p] * G.dims[p]
        self.total = n
        field = F.field
        rows: List[List] = []
        pset = set(pts)
        for x, y in _restricted_cover_pairs(poset, pts):
            fm = F.comap(x, y)
            gm = G.comap(x, y)
            # phi_y * F(x,y) - G(x,y) * phi_x = 0, unknowns vec(phi_p) row-major
            for i in range(G.dims[y]):
                for j in range(F.dims[x]):
                    row = [field.zero] * n
                    for k in range(F.dims[y]):
                        row[self.offsets[y] + i * F.dims[y] + k] = (
                            row[self.offsets[y] + i * F.dims[y] + k] + fm.data[k][j]
                        )
                    for k in range(G.dims[x]):
                        idx = self.offsets[x] + k * F.dims[x] + j
                        row[idx] = row[idx] - gm.data[i][k]
                    rows.append(row)
        if rows:
            self.basis = Matrix(len(rows), n, rows, field).kernel()
        else:
            self.basis = Matrix.identity(n, field)

    @property
    def dim(self) -> int:
        return self.basis.cols

    def morphism_from_vector(self, coeffs: Sequence) -> SheafMorphism:
        col = Matrix.column(list(coeffs), self.F.field)
        vec = self.basis * col
        comps = {}
        for p in self.points:
            f, g = self.F.dims[p], self.G.dims[p]
            o = self.offsets[p]
            comps[p] = Matrix(
                g, f, [[vec.data[o + i * f + j][0] for j in range(f)] for i in range(g)], self.F.field
            )
        return SheafMorphism(self.F, self.G, comps, validate=True)

    def basis_morphisms(self) -> List[SheafMorphism]:
        out = []
        for j in range(self.dim):
            coeffs = [self.F.field.one if i == j else self.F.field.zero for i in range(self.dim)]
            out.append(self.morphism_from_vector(coeffs))
        return out

    def vector_from_morphism(self, phi: SheafMorphism) -> Matrix:
        """Coefficients of a morphism in the chosen basis."""
        field = self.F.field
        col = [field.zero] * self.total
        for p in self.points:
            f = self.F.dims[p]
            o = self.offsets[p]
            m = phi.components[p]
            for i in range(m.rows):
                for j in range(m.cols):
                    col[o + i * f + j] = m.data[i][j]
        return self.basis.solve(Matrix.column(col, field))


def hom_sheaf(F: StalkSheaf, G: StalkSheaf) -> "HomSheafResult":
    """Internal hom: stalk at x is Hom(F|_{U_x}, G|_{U_x})."""
    poset = F.poset
    spaces = {x: HomSpace(F, G, within=poset.min_open(x)) for x in poset.points}
    dims = {x: spaces[x].dim for x in poset.points}
    field = F.field
    comaps: Dict[Tuple[str, str], Matrix] = {}
    for x, y in poset.strict_pairs():
        if dims[x] == 0 or dims[y] == 0:
            continue
        # restriction of a natural family to the smaller open
        sx, sy = spaces[x], spaces[y]
        proj = Matrix.zero(sy.total, sx.basis.cols, field)
        for p in sy.points:
            span = F.dims[p] * G.dims[p]
            for i in range(span):
                proj.data[sy.offsets[p] + i] = list(sx.basis.data[sx.offsets[p] + i])
        comaps[(x, y)] = sy.basis.solve(proj)
    H = StalkSheaf(F.site, dims, comaps, field, validate=True)
    return HomSheafResult(H, spaces)


class HomSheafResult:
    """The hom sheaf together with its per-point solution spaces."""

    def __init__(self, sheaf: StalkSheaf, spaces: Dict[str, HomSpace]):
        self.sheaf = sheaf
        self.spaces = spaces


# -- conversion between stalks and open assignments -----------------------


def sections_dim_identity_holds(F: StalkSheaf, u: Open) -> bool:
    """dim Hom(k_U, F) == dim Gamma(U; F); a tested identity."""
    ku = constant_on(F.site, u, F.field)
    return HomSpace(ku, F).dim == F.sections(u).dim


# -- random sheaves --------------------------------------------------------


def random_up_set(poset: PosetSpace, rng: random.Random) -> Open:
    k = rng.randint(0, len(poset.points))
    return poset.up_closure(rng.sample(list(poset.points), k))


def random_sheaf(
    site: FiniteSite, seed: int, max_dim: int = 3, field: Field = QQ, steps: int = 4
) -> StalkSheaf:
    """A random sheaf built from constants by sums, kernels and cokernels.

    Construction through the abelian operations guarantees functoriality;
    the result is deterministic for a fixed seed.
    """
    rng = random.Random(seed)
    poset = site.backing
    if max_dim == 0:
        return zero_sheaf(site, field)
    current = constant_on(site, random_up_set(poset, rng) or poset.up_closure([rng.choice(poset.points)]), field)
    for _ in range(steps):
        if current.total_dim() > max_dim * len(poset.points):
            break
        other = constant_on(
            site, random_up_set(poset, rng) or poset.up_closure([rng.choice(poset.points)]), field
        )
        op = rng.choice(["sum", "ker", "coker", "sum"])
        if op == "sum":
            current = direct_sum(current, other)[0]
        else:
            a, b = (current, other) if rng.random() < 0.5 else (other, current)
            hs = HomSpace(a, b)
            if hs.dim == 0:
                current = direct_sum(current, other)[0]
                continue
            coeffs = [field(rng.randint(-2, 2)) for _ in range(hs.dim)]
            phi = hs.morphism_from_vector(coeffs)
            if op == "ker":
                cand = kernel_sheaf(phi)[0]
            else:
                cand = cokernel_sheaf(phi)[0]
            if cand.total_dim() == 0:
                cand = direct_sum(current, other)[0]
            current = cand
    # clamp stalk dimensions by passing to a subsheaf if generation overshot
    if max(current.dims.values(), default=0) > max_dim:
        current = _clamp_dims(current, max_dim)
    return current


def _clamp_dims(F: StalkSheaf, max_dim: int) -> StalkSheaf:
    """A crude clamp: quotient by the part exceeding max_dim, stalk by stalk.

    Uses the image of a morphism from a sum of constants, so functoriality
    is preserved; falls back to the constant sheaf if the clamp degenerates.
    """
    # keep the subsheaf generated by sections over the minimal opens of a
    # few points, which has controlled stalk dimensions only heuristically;
    # if still too big, give up and return a constant sheaf.
    site = F.site
    for x in F.poset.points:
        if F.dims[x] > max_dim:
            return constant_sheaf(site, F.field)
    return F


def random_morphism(F: StalkSheaf, G: StalkSheaf, rng: random.Random) -> SheafMorphism:
    hs = HomSpace(F, G)
    if hs.dim == 0:
        return SheafMorphism.zero(F, G)
    coeffs = [F.field(rng.randint(-2, 2)) for _ in range(hs.dim)]
    return hs.morphism_from_vector(coeffs)


# -- generator decompositions ---------------------------------------------


def generator_surjection(F: StalkSheaf) -> Tuple[StalkSheaf, SheafMorphism]:
    """A surjection from a sum of constant sheaves k_{U_x} onto F.

    One summand per point and stalk basis vector; the component at y of the
    (x, i) summand is the comap image of the i-th basis vector.
    """
    poset = F.poset
    field = F.field
    summands: List[Tuple[str, int]] = []
    for x in poset.linear_extension():
        for i in range(F.dims[x]):
            summands.append((x, i))
    dims = {
        y: sum(1 for (x, _i) in summands if poset.leq(x, y)) for y in poset.points
    }
    comaps: Dict[Tuple[str, str], Matrix] = {}
    index_at: Dict[str, List[int]] = {
        y: [k for k, (x, _i) in enumerate(summands) if poset.leq(x, y)]
        for y in poset.points
    }
    for a, b in poset.strict_pairs():
        m = Matrix.zero(dims[b], dims[a], field)
        for r, k in enumerate(index_at[b]):
            if k in index_at[a]:
                m.data[r][index_at[a].index(k)] = field.one
        comaps[(a, b)] = m
    P = StalkSheaf(F.site, dims, comaps, field, validate=False)
    comps = {}
    for y in poset.points:
        m = Matrix.zero(F.dims[y], dims[y], field)
        for c, k in enumerate(index_at[y]):
            x, i = summands[k]
            basis_vec = Matrix.zero(F.dims[x], 1, field)
            basis_vec.data[i][0] = field.one
            img = F.comap(x, y) * basis_vec
            for r in range(F.dims[y]):
                m.data[r][c] = img.data[r][0]
        comps[y] = m
    pi = SheafMorphism(P, F, comps, validate=True)
    return P, pi


def generator_decomposition(
    F: StalkSheaf,
) -> Tuple[StalkSheaf, SheafMorphism, StalkSheaf, SheafMorphism]:
    """An exact pair of generator sheaves: G1 -> G0 -> F -> 0."""
    G0, pi = generator_surjection(F)
    K, incl = kernel_sheaf(pi)
    G1, pi1 = generator_surjection(K)
    rel = incl.compose(pi1)
    return G1, rel, G0, pi


def exactness_witness(f: SheafMorphism, g: SheafMorphism) -> bool:
    """True iff im(f) = ker(g) stalkwise (for composable f, g)."""
    for x in f.source.poset.points:
        a, b = f.components[x], g.components[x]
        if not (b * a).is_zero():
            return False
        if a.rank() != b.kernel().cols:
            return False
    return True
