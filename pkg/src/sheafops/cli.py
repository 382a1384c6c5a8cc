"""The workbench command line.

Verbs: validate, cohomology, verify, rho, shriek, dual, lct, report.
Global flags: --field q|fp:<p> (default from SIXOPS_FIELD), --seed,
--trials, --format text|json.  Exit codes: 0 success, 1 asserted-law or
validation failure, 2 input error.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from typing import List, Optional

from .homological import (
    cech_cohomology,
    derived_sections,
    is_lct,
)
from .io import (
    FormatError,
    emit_report,
    field_name,
    parse_field,
    parse_sheaf,
    parse_site,
)
from .linalg import QQ, Field
from .models import (
    coarse_variants,
    point_model,
    shipped_models,
    to_point,
)
from .operations import ProperDirectImage, proper_direct_image_colimit_oracle
from .presheaves import check_sheaf
from .rho import (
    rho_direct,
    rho_inverse,
    rho_inverse_agreement,
    rho_shriek,
    rho_shriek_identity,
    rho_identity_direct,
)
from .sheaves import constant_sheaf, random_sheaf, is_monomorphism
from .simplicial import (
    SimplicialError,
    parse_complex,
    face_poset,
    simplicial_cohomology_dims,
    simplicial_homology_dims,
    vertex_star_cover,
)
from .sites import SiteError, materialize_lattice, validate_gt_axioms

EXIT_OK, EXIT_FAIL, EXIT_INPUT = 0, 1, 2


def _table(args, columns, rows, **meta):
    text = emit_report(columns, rows, fmt=args.format, **meta)
    sys.stdout.write(text)


def _model_site(args, name: str):
    models = shipped_models()
    if name not in models:
        raise FormatError(
            f"unknown model {name!r}; shipped: {', '.join(sorted(models))}"
        )
    return models[name]


# -- validate --------------------------------------------------------------


def cmd_validate(args) -> int:
    rows = []
    worst = EXIT_OK
    for path in args.files:
        kind = "site" if path.endswith(".site.json") else (
            "complex" if path.endswith(".cplx.json") else (
                "sheaf" if path.endswith(".sheaf.json") else "unknown"))
        try:
            if kind == "site":
                parsed = parse_site(path)
                target = parsed.coarse if parsed.coarse is not None else parsed.site
                rep = validate_gt_axioms(target)
                if rep.ok:
                    note = "GT1-GT4 hold"
                    if parsed.coarse is not None:
                        note += f"; basis={parsed.basis}"
                    rows.append({"file": path, "kind": kind, "status": "ok", "detail": note})
                else:
                    ax, msg = rep.failures()[0]
                    rows.append({"file": path, "kind": kind, "status": "fail",
                                 "detail": f"{ax}: {msg}"})
                    worst = max(worst, EXIT_FAIL)
            elif kind == "complex":
                K = parse_complex(path)
                fp = face_poset(K)
                rows.append({"file": path, "kind": kind, "status": "ok",
                             "detail": f"{len(K.vertices)} vertices, {len(K.simplices)} simplices, dim {K.dimension}"})
            elif kind == "sheaf":
                F, parsed, field = parse_sheaf(path)
                detail = f"field {field_name(field)}"
                if hasattr(F, "opens"):
                    cls, wit = check_sheaf(F)
                    detail += f"; classification: {cls}"
                    if cls != "sheaf":
                        detail += f" ({wit})"
                rows.append({"file": path, "kind": kind, "status": "ok", "detail": detail})
            else:
                rows.append({"file": path, "kind": kind, "status": "error",
                             "detail": "unrecognized extension (.site.json/.cplx.json/.sheaf.json)"})
                worst = max(worst, EXIT_INPUT)
        except (FormatError, SimplicialError, SiteError, OSError) as e:
            rows.append({"file": path, "kind": kind, "status": "error", "detail": str(e)})
            worst = max(worst, EXIT_INPUT)
    _table(args, ["file", "kind", "status", "detail"], rows, command="validate")
    return worst


# -- cohomology ------------------------------------------------------------


def _cohomology_rows(args, field: Field) -> List[dict]:
    rows = []
    if args.complex:
        K = parse_complex(args.complex)
        fp = face_poset(K)
        site, face, name = fp.site, fp, args.complex
        cplx = K
    else:
        m = _model_site(args, args.space)
        site, face, name, cplx = m.site, m.face, m.name, m.complex
    if args.sheaf:
        F, _, field = parse_sheaf(args.sheaf)
        sheaf_name = args.sheaf
    else:
        F = constant_sheaf(site, field)
        sheaf_name = "constant"
    dims = derived_sections(site.top, F)
    top = max(dims, default=0)
    table = [dims.get(k, 0) for k in range(top + 1)]
    note = ""
    if face is not None:
        cech = cech_cohomology(F, vertex_star_cover(face))
        cech_t = [cech.get(k, 0) for k in range(top + 1)]
        note = "cech agrees" if cech_t == table else f"cech DISAGREES: {cech_t}"
        if cplx is not None and sheaf_name == "constant":
            oracle = simplicial_cohomology_dims(cplx, field)
            oracle += [0] * (top + 1 - len(oracle))
            note += "; simplicial oracle agrees" if oracle[: top + 1] == table else (
                f"; simplicial oracle DISAGREES: {oracle}")
    rows.append({"space": name, "sheaf": sheaf_name, "field": field_name(field),
                 "dims": table, "note": note})
    return rows


def cmd_cohomology(args) -> int:
    field = parse_field(args.field)
    rows = _cohomology_rows(args, field)
    _table(args, ["space", "sheaf", "field", "dims", "note"], rows, command="cohomology")
    return EXIT_FAIL if any("DISAGREES" in r["note"] for r in rows) else EXIT_OK


# -- verify ----------------------------------------------------------------


def cmd_verify(args) -> int:
    from .laws import LawError, law_names, run_law_suite

    field = parse_field(args.field)
    try:
        reports = run_law_suite(
            names=args.law or None, seed=args.seed, field=field, trials=args.trials
        )
    except LawError as e:
        sys.stderr.write(f"error: {e}\n")
        return EXIT_INPUT
    rows = [r.row() for r in reports]
    if args.format == "json":
        _table(args, ["law", "mode", "status", "trials", "passed", "failed", "note"],
               [r.payload() for r in reports], command="verify",
               seed=args.seed, field=field_name(field))
    else:
        _table(args, ["law", "status", "trials", "passed", "failed", "note"], rows,
               command="verify")
    return EXIT_OK if all(r.ok for r in reports) else EXIT_FAIL


# -- rho -------------------------------------------------------------------


def _rho_variant(args):
    variants = coarse_variants()
    if args.site:
        parsed = parse_site(args.site)
        if parsed.coarse is None:
            raise FormatError("site file declares no sublattice")
        return args.site, parsed.coarse, parsed.rho, parsed.basis
    if args.variant not in variants:
        raise FormatError(
            f"unknown variant {args.variant!r}; shipped: {', '.join(sorted(variants))}"
        )
    coarse, rho, basis = variants[args.variant]
    return args.variant, coarse, rho, basis


def cmd_rho(args) -> int:
    field = parse_field(args.field)
    name, coarse, rho, basis = _rho_variant(args)
    rows = []
    fail = False
    if args.rho_op == "laws":
        args.law = [n for n in ("rho-identities", "rho-adjunction", "rho-exactness",
                                "rho-hom-formulas", "rho-tensor", "rho-kan-agreement")]
        return cmd_verify(args)
    for t in range(args.trials or 3):
        F = random_sheaf(rho.source, args.seed * 1000 + t, max_dim=2, field=field)
        if args.rho_op == "direct":
            rd = rho_direct(rho, F)
            rows.append({"variant": name, "trial": t, "op": "rho_*",
                         "result": rd.classification,
                         "note": f"sections over {len(rd.presheaf.opens)} coarse opens"})
        elif args.rho_op == "inverse":
            G = rho_direct(rho, F).presheaf
            back = rho_inverse(rho, G)
            agree = rho_inverse_agreement(rho, G)
            rep = rho_identity_direct(rho, F)
            status = "iso" if (rep.certified and rep.iso) else ("report" if not rep.certified else "FAIL")
            fail = fail or status == "FAIL" or not agree
            rows.append({"variant": name, "trial": t, "op": "rho^{-1}rho_*",
                         "result": status,
                         "note": f"kan-agreement={agree}; {rep.note}"})
        elif args.rho_op == "shriek":
            rep = rho_shriek_identity(rho, F)
            status = "iso" if (rep.certified and rep.iso) else ("report" if not rep.certified else "FAIL")
            fail = fail or status == "FAIL"
            rows.append({"variant": name, "trial": t, "op": "rho^{-1}rho_!",
                         "result": status, "note": rep.note})
        else:
            raise FormatError(f"unknown rho operation {args.rho_op!r}")
    _table(args, ["variant", "trial", "op", "result", "note"], rows,
           command=f"rho {args.rho_op}", seed=args.seed, field=field_name(field))
    return EXIT_FAIL if fail else EXIT_OK


# -- shriek ----------------------------------------------------------------


def cmd_shriek(args) -> int:
    field = parse_field(args.field)
    m = _model_site(args, args.space)
    pt = point_model()
    f = to_point(m, pt)
    rows = []
    fail = False
    for t in range(args.trials or 3):
        F = random_sheaf(m.site, args.seed * 1000 + t, max_dim=2, field=field)
        pdi = ProperDirectImage(f, F)
        mono = is_monomorphism(pdi.compare_to_direct())
        oracle = proper_direct_image_colimit_oracle(f, F)
        formula = {y: pdi.sheaf.dims[y] for y in oracle}
        ok = mono and formula == oracle
        fail = fail or not ok
        rows.append({
            "space": m.name, "trial": t,
            "ustar": "{" + ",".join(sorted(pdi.ustar)) + "}",
            "dims": formula[next(iter(formula))] if formula else 0,
            "oracle": oracle[next(iter(oracle))] if oracle else 0,
            "mono": mono, "status": "ok" if ok else "FAIL",
        })
    _table(args, ["space", "trial", "ustar", "dims", "oracle", "mono", "status"],
           rows, command="shriek", seed=args.seed, field=field_name(field))
    return EXIT_FAIL if fail else EXIT_OK


# -- dual ------------------------------------------------------------------


def cmd_dual(args) -> int:
    from .homological import DualizingComplex, sections_functor_complex

    field = parse_field(args.field)
    m = _model_site(args, args.space)
    if m.face is None:
        sys.stderr.write(f"error: model {m.name!r} carries no face-poset structure\n")
        return EXIT_INPUT
    omega = DualizingComplex(m.site, m.simplex_of, field)
    gamma = sections_functor_complex(omega.complex, m.site.top)
    hom = simplicial_homology_dims(m.complex, field)
    rows = []
    fail = False
    coh = gamma.cohomology_dims()
    for k, expected in enumerate(hom):
        got = coh.get(-k, 0)
        ok = got == expected
        fail = fail or not ok
        rows.append({"space": m.name, "degree": -k, "dim": got,
                     "homology_oracle": expected, "status": "ok" if ok else "FAIL"})
    _table(args, ["space", "degree", "dim", "homology_oracle", "status"], rows,
           command="dual", field=field_name(field))
    return EXIT_FAIL if fail else EXIT_OK


# -- lct -------------------------------------------------------------------


def cmd_lct(args) -> int:
    field = parse_field(args.field)
    if args.site:
        parsed = parse_site(args.site)
        site, name = parsed.site, args.site
    else:
        m = _model_site(args, args.space)
        site, name = m.site, m.name
    lat = materialize_lattice(site)
    rows = []
    for u in sorted(lat, key=lambda o: (len(o), sorted(o))):
        rows.append({"space": name,
                     "open": "{" + ",".join(sorted(u)) + "}",
                     "lct": is_lct(site, u, field)})
    _table(args, ["space", "open", "lct"], rows, command="lct", field=field_name(field))
    return EXIT_OK


# -- report ----------------------------------------------------------------

ORACLE_ROWS = [
    ("circle", "q"),
    ("sphere", "q"),
    ("torus", "q"),
    ("rp2", "fp:2"),
    ("rp2", "q"),
]


def _render_figure(path: str, space: str, fname: str, dims: List[int]) -> None:
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    fig, ax = plt.subplots(figsize=(4, 3))
    ax.bar(range(len(dims)), dims, color="#4878d0")
    ax.set_xticks(range(len(dims)))
    ax.set_xlabel("degree k")
    ax.set_ylabel("dim H^k")
    ax.set_title(f"{space} / {fname}")
    ax.set_yticks(range(0, max(dims, default=0) + 2))
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)


def cmd_report(args) -> int:
    from .laws import run_law_suite

    outdir = args.out
    os.makedirs(outdir, exist_ok=True)
    models = shipped_models()
    coh_rows = []
    figures = []
    for space, fspec in ORACLE_ROWS:
        field = parse_field(fspec)
        m = models[space]
        F = constant_sheaf(m.site, field)
        dims = derived_sections(m.site.top, F)
        top = max(dims, default=0)
        table = [dims.get(k, 0) for k in range(top + 1)]
        coh_rows.append({"space": space, "sheaf": "constant", "field": fspec,
                         "dims": table})
        figpath = os.path.join(outdir, f"{space}-{fspec.replace(':', '')}.png")
        _render_figure(figpath, space, fspec, table)
        figures.append(figpath)
    law_field = parse_field(args.field)
    reports = run_law_suite(seed=args.seed, field=law_field, trials=args.trials)
    law_rows = [r.row() for r in reports]
    ok = all(r.ok for r in reports)
    if args.format == "json":
        payload = {
            "version": 1,
            "command": "report",
            "seed": args.seed,
            "field": field_name(law_field),
            "cohomology": coh_rows,
            "laws": [r.payload() for r in reports],
            "figures": [os.path.basename(p) for p in figures],
        }
        text = json.dumps(payload, indent=2, sort_keys=True) + "\n"
        outpath = os.path.join(outdir, "report.json")
    else:
        text = emit_report(["space", "sheaf", "field", "dims"], coh_rows, fmt="text")
        text += "\n" + emit_report(
            ["law", "status", "trials", "passed", "failed", "note"], law_rows, fmt="text"
        )
        outpath = os.path.join(outdir, "report.txt")
    with open(outpath, "w", encoding="utf-8") as fh:
        fh.write(text)
    sys.stdout.write(text)
    sys.stdout.write(f"\nwrote {outpath} and {len(figures)} figures to {outdir}\n")
    return EXIT_OK if ok else EXIT_FAIL


# -- argument parsing ------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="sheafops",
        description="Six-operation sheaf calculus on finite sites, with exact linear algebra.",
    )
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--field", default=None, help="q or fp:<p> (default: SIXOPS_FIELD or q)")
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--trials", type=int, default=None)
    common.add_argument("--format", choices=("text", "json"), default="text")
    sub = p.add_subparsers(dest="verb", required=True)

    sp = sub.add_parser("validate", parents=[common], help="validate .site.json/.cplx.json/.sheaf.json files")
    sp.add_argument("files", nargs="+")
    sp.set_defaults(fn=cmd_validate)

    sp = sub.add_parser("cohomology", parents=[common], help="graded section cohomology with Cech and simplicial cross-checks")
    sp.add_argument("--space", default="circle", help="shipped model name")
    sp.add_argument("--complex", default=None, help=".cplx.json file instead of a shipped model")
    sp.add_argument("--sheaf", default=None, help=".sheaf.json file (default: constant sheaf)")
    sp.set_defaults(fn=cmd_cohomology)

    sp = sub.add_parser("verify", parents=[common], help="run the law suite")
    sp.add_argument("--law", action="append", default=None, help="law name (repeatable; default all)")
    sp.set_defaults(fn=cmd_verify)

    sp = sub.add_parser("rho", parents=[common], help="coarse-subsite comparison functors")
    sp.add_argument("rho_op", choices=("direct", "inverse", "shriek", "laws"))
    sp.add_argument("--variant", default="circle-basis", help="shipped coarse variant")
    sp.add_argument("--site", default=None, help=".site.json with a declared sublattice")
    sp.set_defaults(fn=cmd_rho, law=None)

    sp = sub.add_parser("shriek", parents=[common], help="proper direct image against the colimit oracle")
    sp.add_argument("--space", default="half-open-interval")
    sp.set_defaults(fn=cmd_shriek)

    sp = sub.add_parser("dual", parents=[common], help="dualizing complex versus simplicial homology")
    sp.add_argument("--space", default="circle")
    sp.set_defaults(fn=cmd_dual)

    sp = sub.add_parser("lct", parents=[common], help="locally cohomologically trivial opens")
    sp.add_argument("--space", default="interval")
    sp.add_argument("--site", default=None, help=".site.json file instead of a shipped model")
    sp.set_defaults(fn=cmd_lct)

    sp = sub.add_parser("report", parents=[common], help="cohomology tables, law summary and figures")
    sp.add_argument("--out", default=".", help="output directory for the report and figures")
    sp.set_defaults(fn=cmd_report)
    return p


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except FormatError as e:
        sys.stderr.write(f"error: {e}\n")
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
