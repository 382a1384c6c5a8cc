"""File formats and report rendering.

All on-disk formats are JSON with exact-string scalars; no floats appear
in any file, so replay is bit-exact.

``.site.json``::

    {
      "points": ["a", "b"],
      "leq": [["a", "b"]],                  # Hasse pairs suffice; any
                                            # generating relation works
      "sublattice": [[], ["b"], ["a","b"]], # optional: coarse subsite opens
      "coverings": {"2": [[2], [1, 2]]},    # optional: open index ->
                                            # families of open indices
      "ambient": {"points": [...], "leq": [...], "embedding": {"a": "a"}}
    }

Opens inside ``coverings`` are referenced by index into the declared
``sublattice`` list.  When a sublattice is declared without coverings the
identity-only system is used.

``.sheaf.json``::

    {
      "site": <path or inline .site.json document>,
      "field": "q" | "fp:<p>",
      "representation": "stalks" | "opens",
      "dims": {"x": 2, ...},                # keyed by point, or by open
      "maps": {"x<=y": [["3/7", "0"], ...]} # row-major exact strings;
                                            # opens keyed "U>=V"
    }

Opens are written as their sorted points joined by ``|`` (point names may
contain commas, e.g. face-poset points).  Stalk maps are the comaps along
Hasse pairs; open maps are the restrictions along covering pairs of the
lattice.  Missing composites are filled functorially.

``.cplx.json`` is handled by :mod:`sheafops.simplicial`.

Report schema (the machine-readable side of ``emit_report``)::

    {
      "version": 1,
      "command": "...",
      "field": "q",
      "seed": 0,
      "columns": ["space", "sheaf", "field", "dims"],
      "rows": [{"space": "circle", ...}]
    }

The text side is a comma-delimited table: one header line with the column
names, then one line per row (e.g. ``circle, constant, q, [1, 1]``).
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass
from typing import Dict, List, Optional, Tuple, Union

from .linalg import GF, Field, Matrix, QQ
from .presheaves import Presheaf
from .sheaves import StalkSheaf
from .sites import (
    CoveringSystem,
    FiniteSite,
    Open,
    OpenLattice,
    PosetSpace,
    SiteError,
    SiteMorphism,
    build_alexandrov_site,
)


class FormatError(ValueError):
    pass


def load_document(source) -> dict:
    """A path, a JSON string, or an already-decoded dict."""
    if isinstance(source, dict):
        return source
    text = None
    if isinstance(source, (str, os.PathLike)) and os.path.exists(str(source)):
        with open(source, "r", encoding="utf-8") as fh:
            text = fh.read()
    else:
        text = str(source)
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as e:
        raise FormatError(
            f"malformed JSON at line {e.lineno}, column {e.colno}: {e.msg}"
        ) from None
    if not isinstance(doc, dict):
        raise FormatError("top-level JSON value must be an object")
    return doc


# -- fields ----------------------------------------------------------------


def parse_field(spec: Optional[str]) -> Field:
    """"q" (or empty) for the rationals, "fp:<p>" for a prime field."""
    spec = (spec or os.environ.get("SIXOPS_FIELD") or "q").strip().lower()
    if spec in ("q", "qq", "rational"):
        return QQ
    if spec.startswith("fp:"):
        try:
            p = int(spec[3:])
        except ValueError:
            raise FormatError(f"bad field spec {spec!r}") from None
        try:
            return GF(p)
        except ValueError as e:
            raise FormatError(str(e)) from None
    raise FormatError(f"unknown field spec {spec!r} (use q or fp:<p>)")


def field_name(field: Field) -> str:
    return "q" if field.characteristic == 0 else f"fp:{field.characteristic}"


# -- sites -----------------------------------------------------------------


@dataclass
class ParsedSite:
    """A fine Alexandrov site plus the optional declared coarse subsite."""

    site: FiniteSite
    coarse: Optional[FiniteSite] = None
    rho: Optional[SiteMorphism] = None
    basis: Optional[bool] = None

    @property
    def effective(self) -> FiniteSite:
        return self.coarse if self.coarse is not None else self.site


def parse_site(source) -> ParsedSite:
    doc = load_document(source)
    for key in ("points", "leq"):
        if key not in doc:
            raise FormatError(f'site document needs a "{key}" list')
    points = [str(p) for p in doc["points"]]
    leq = [(str(a), str(b)) for a, b in doc["leq"]]
    ambient = None
    if doc.get("ambient"):
        a = doc["ambient"]
        apos = PosetSpace([str(p) for p in a["points"]], [(str(x), str(y)) for x, y in a["leq"]])
        ambient = (apos, {str(k): str(v) for k, v in a["embedding"].items()})
    try:
        poset = PosetSpace(points, leq)
        site = build_alexandrov_site(poset, ambient=ambient)
    except SiteError as e:
        raise FormatError(f"bad site data: {e}") from None
    if "sublattice" not in doc:
        return ParsedSite(site)
    opens = [frozenset(str(p) for p in o) for o in doc["sublattice"]]
    for o in opens:
        if not site.member(o):
            raise FormatError(f"sublattice member {sorted(o)} is not an open")
    try:
        lat = OpenLattice(opens)
    except SiteError as e:
        raise FormatError(f"bad sublattice: {e}") from None
    if doc.get("coverings"):
        covers: Dict[Open, List] = {}
        for key, fams in doc["coverings"].items():
            try:
                u = opens[int(key)]
                covers[u] = [frozenset(opens[int(j)] for j in fam) for fam in fams]
            except (ValueError, IndexError):
                raise FormatError(f"bad covering reference under key {key!r}") from None
        coverings = CoveringSystem(covers=covers)
    else:
        coverings = CoveringSystem.identity_only(lat)
    coarse = FiniteSite(lat, coverings)
    rho = SiteMorphism(site, coarse, lattice_map=lambda v: v, validate=False)
    basis = all(poset.min_open(x) in lat.opens for x in site.top)
    return ParsedSite(site, coarse, rho, basis)


def _canonical_opens(lat: OpenLattice) -> List[Open]:
    return sorted(lat.opens, key=lambda o: (len(o), sorted(o)))


def serialize_site(parsed: Union[ParsedSite, FiniteSite]) -> str:
    if isinstance(parsed, FiniteSite):
        parsed = ParsedSite(parsed)
    site = parsed.site
    poset = site.backing
    doc: dict = {
        "points": sorted(poset.points),
        "leq": sorted([list(p) for p in poset.hasse_pairs()]),
    }
    if site.ambient is not None:
        apos, emb = site.ambient
        doc["ambient"] = {
            "points": sorted(apos.points),
            "leq": sorted([list(p) for p in apos.hasse_pairs()]),
            "embedding": {k: emb[k] for k in sorted(emb)},
        }
    if parsed.coarse is not None:
        opens = _canonical_opens(parsed.coarse.lattice)
        index = {o: i for i, o in enumerate(opens)}
        doc["sublattice"] = [sorted(o) for o in opens]
        cov = parsed.coarse.coverings
        if not cov.union_predicate:
            doc["coverings"] = {
                str(index[u]): sorted(
                    [sorted(index[v] for v in fam) for fam in fams]
                )
                for u, fams in sorted(cov.covers.items(), key=lambda kv: index[kv[0]])
            }
    return json.dumps(doc, indent=2, sort_keys=True) + "\n"


# -- sheaves ---------------------------------------------------------------


def open_key(u: Open) -> str:
    return "|".join(sorted(u))


def parse_open_key(key: str) -> Open:
    return frozenset(p for p in key.split("|") if p)


def _parse_matrix(entries, rows: int, cols: int, field: Field, where: str) -> Matrix:
    if len(entries) != rows or any(len(r) != cols for r in entries):
        raise FormatError(f"matrix under {where!r} is not {rows}x{cols}")
    try:
        data = [[field.parse(str(e)) for e in row] for row in entries]
    except (ValueError, ZeroDivisionError) as e:
        raise FormatError(f"bad scalar under {where!r}: {e}") from None
    return Matrix(rows, cols, data, field)


def parse_sheaf(source, parsed_site: Optional[ParsedSite] = None
                ) -> Tuple[Union[StalkSheaf, Presheaf], ParsedSite, Field]:
    """Returns (sheaf, its parsed site, its field).

    ``representation: stalks`` yields a StalkSheaf on the fine site;
    ``representation: opens`` yields a Presheaf on the declared coarse
    site (or the materialized fine lattice when none is declared).
    """
    doc = load_document(source)
    for key in ("site", "representation", "dims"):
        if key not in doc:
            raise FormatError(f'sheaf document needs "{key}"')
    if parsed_site is None:
        parsed_site = parse_site(doc["site"])
    field = parse_field(doc.get("field"))
    rep = doc["representation"]
    maps = doc.get("maps", {})
    if rep == "stalks":
        poset = parsed_site.site.backing
        dims = {str(k): int(v) for k, v in doc["dims"].items()}
        unknown = set(dims) - set(poset.points)
        if unknown:
            raise FormatError(f"dims given for unknown points {sorted(unknown)}")
        comaps = {}
        for key, entries in maps.items():
            if "<=" not in key:
                raise FormatError(f"stalk map key {key!r} must look like x<=y")
            x, y = key.split("<=", 1)
            if not poset.leq(x, y):
                raise FormatError(f"map key {key!r}: {x} <= {y} does not hold")
            comaps[(x, y)] = _parse_matrix(
                entries, dims.get(y, 0), dims.get(x, 0), field, key
            )
        return StalkSheaf(parsed_site.site, dims, comaps, field), parsed_site, field
    if rep == "opens":
        from .presheaves import site_opens

        target = parsed_site.effective
        opens = site_opens(target)
        by_key = {open_key(u): u for u in opens}
        dims = {}
        for k, v in doc["dims"].items():
            if k not in by_key:
                raise FormatError(f"dims given for unknown open {k!r}")
            dims[by_key[k]] = int(v)
        restricts = {}
        for key, entries in maps.items():
            if ">=" not in key:
                raise FormatError(f"open map key {key!r} must look like U>=V")
            uk, vk = key.split(">=", 1)
            if uk not in by_key or vk not in by_key:
                raise FormatError(f"map key {key!r} references unknown opens")
            u, v = by_key[uk], by_key[vk]
            if not v < u:
                raise FormatError(f"map key {key!r}: not a strict inclusion")
            restricts[(u, v)] = _parse_matrix(
                entries, dims.get(v, 0), dims.get(u, 0), field, key
            )
        pre = Presheaf(target, dims, restricts, field, opens=opens, validate=True)
        return pre, parsed_site, field
    raise FormatError(f'unknown representation {rep!r} (use "stalks" or "opens")')


def _format_matrix(m: Matrix, field: Field) -> List[List[str]]:
    return [[field.format(e) for e in row] for row in m.data]


def serialize_sheaf(
    F: Union[StalkSheaf, Presheaf],
    parsed_site: Optional[ParsedSite] = None,
    site_ref: Optional[str] = None,
) -> str:
    """Canonical sheaf document; ``site_ref`` may replace the inline site."""
    if isinstance(F, StalkSheaf):
        parsed = parsed_site or ParsedSite(F.site)
        poset = F.site.backing
        doc = {
            "representation": "stalks",
            "field": field_name(F.field),
            "dims": {x: F.dims[x] for x in sorted(poset.points)},
            "maps": {
                f"{x}<={y}": _format_matrix(F.comap(x, y), F.field)
                for x, y in sorted(poset.hasse_pairs())
            },
        }
    else:
        parsed = parsed_site or ParsedSite(F.site) if F.site.backing else parsed_site
        if parsed is None:
            raise FormatError("serializing an opens-sheaf needs its parsed site")
        order = sorted(F.opens, key=lambda o: (len(o), sorted(o)))
        doc = {
            "representation": "opens",
            "field": field_name(F.field),
            "dims": {open_key(u): F.dims[u] for u in order},
            "maps": {
                f"{open_key(u)}>={open_key(v)}": _format_matrix(
                    F.restrict(u, v), F.field
                )
                for u in order
                for v in order
                if v < u
            },
        }
    doc["site"] = site_ref if site_ref is not None else json.loads(serialize_site(parsed))
    return json.dumps(doc, indent=2, sort_keys=True) + "\n"


# -- reports ---------------------------------------------------------------

REPORT_VERSION = 1


def render_text(columns: List[str], rows: List[dict]) -> str:
    lines = [", ".join(columns)]
    for row in rows:
        lines.append(", ".join(str(row.get(c, "")) for c in columns))
    return "\n".join(lines) + "\n"


def render_json(payload: dict) -> str:
    return json.dumps(payload, indent=2, sort_keys=True) + "\n"


def emit_report(
    columns: List[str],
    rows: List[dict],
    fmt: str = "text",
    path: Optional[str] = None,
    **meta,
) -> str:
    """Render a report and optionally write it to ``path``."""
    if fmt == "json":
        payload = {"version": REPORT_VERSION, "columns": columns, "rows": rows}
        payload.update(meta)
        text = render_json(payload)
    elif fmt == "text":
        text = render_text(columns, rows)
    else:
        raise FormatError(f"unknown report format {fmt!r} (use text or json)")
    if path:
        try:
            with open(path, "w", encoding="utf-8") as fh:
                fh.write(text)
        except OSError as e:
            raise FormatError(f"cannot write report to {path}: {e}") from None
    return text
