"""Acceptance gate: the eleven criteria, asserted exactly.

Each criterion runs at desk scale (posets of at most 30 points, stalk
dimensions at most 4) against the shipped model corpus and the seeded law
suite; every isomorphism below is checked through a constructed canonical
map, never by dimension count.
"""

import json
import random
import subprocess
import sys

import pytest

from sheafops.io import render_json
from sheafops.laws import DEFAULT_TRIALS, random_presheaf, run_law_suite
from sheafops.linalg import QQ
from sheafops.models import half_open_interval_model, interval_model, sierpinski_model, to_point
from sheafops.presheaves import check_sheaf, pairwise_glue_check
from sheafops.sheaves import random_sheaf
from sheafops.sites import PosetSpace, build_alexandrov_site
from sheafops.homological import derived_projection_formula


@pytest.fixture(scope="module")
def suite():
    reports = run_law_suite(seed=0)
    return {r.law: r for r in reports}


def _passes(rep, trials=None):
    assert rep.mode == "asserted", rep.law
    assert rep.failed == 0, (rep.law, rep.counterexample)
    if trials is not None:
        assert rep.trials >= trials, rep.law
    assert rep.passed == rep.trials, rep.law


def test_criterion_1_gt_validation(suite):
    rep = suite["gt-axioms"]
    _passes(rep, trials=100)
    crafted = suite["gt-crafted-failure"]
    assert crafted.failed == 0
    assert "identity family missing" in crafted.note


def test_criterion_2_sheafification(suite):
    _passes(suite["sheafification"], trials=100)
    _passes(suite["sheafify-adjunction"], trials=50)
    _passes(suite["sheafify-exactness"], trials=50)


def test_criterion_3_pairwise_gluing_theorem():
    sites = [
        sierpinski_model().site,
        build_alexandrov_site(
            PosetSpace(["v0", "v1", "e"], [("v0", "e"), ("v1", "e")])
        ),
        interval_model().site,
    ]
    rng = random.Random(0)
    positives = attempts = 0
    while positives < 100:
        attempts += 1
        assert attempts < 5000, "two-open positives too rare"
        P = random_presheaf(sites[attempts % len(sites)], rng, QQ)
        if pairwise_glue_check(P):
            positives += 1
            kind, witness = check_sheaf(P)
            assert kind == "sheaf", witness


def test_criterion_4_adjunction(suite):
    _passes(suite["adjunction"], trials=50)


def test_criterion_5_cohomology_oracle(suite):
    rep = suite["cohomology-oracle"]
    assert rep.mode == "asserted" and rep.failed == 0
    # resolution, Cech-on-star-covers and the simplicial cochain oracle
    # all agree with the published tables
    from sheafops.laws import ORACLE_TABLE

    table = {(name, fspec): dims for name, fspec, dims in ORACLE_TABLE}
    assert table[("circle", "q")] == [1, 1]
    assert table[("torus", "q")] == [1, 2, 1]
    assert table[("rp2", "fp:2")] == [1, 1, 1]
    assert table[("rp2", "q")] == [1, 0, 0]
    assert rep.passed == len(table)


def test_criterion_6_derived_compatibilities(suite):
    for law in ("derived-projection-formula", "derived-base-change", "kunneth"):
        rep = suite[law]
        _passes(rep, trials=50)
    # uncertified instances report rather than assert: the projection to
    # the point from the half-open interval carries no properness
    # certificate, and the comparison must come back as a report
    m = half_open_interval_model()
    f = to_point(m)
    F = random_sheaf(m.site, 1, max_dim=2)
    from sheafops.models import point_model

    G = random_sheaf(point_model().site, 2, max_dim=2)
    rep = derived_projection_formula(f, F, G)
    assert not rep.certified
    assert rep.ok  # never an assertion failure


def test_criterion_7_duality(suite):
    verdier = run_law_suite(["verdier"], seed=0, trials=120)[0]
    _passes(verdier, trials=120)  # 30 instances per shipped factorized map
    examples = suite["duality-examples"]
    assert examples.failed == 0
    assert "interior" in examples.note and "endpoint" in examples.note
    _passes(suite["duality-unit"], trials=20)


def test_criterion_8_rho_layer(suite):
    _passes(suite["rho-identities"], trials=50)
    _passes(suite["rho-adjunction"], trials=20)
    _passes(suite["rho-exactness"], trials=30)


def test_criterion_9_quasi_injectivity(suite):
    _passes(suite["quasi-injective"], trials=50)


def test_criterion_10_resolution_bound(suite):
    rep = suite["resolution-bound"]
    _passes(rep, trials=200)


def _suite_payload(reports):
    return render_json({"rows": [r.row() for r in reports]})


def test_criterion_11_determinism(suite):
    first = _suite_payload([suite[name] for name in sorted(suite)])
    rerun = {r.law: r for r in run_law_suite(seed=0)}
    second = _suite_payload([rerun[name] for name in sorted(rerun)])
    assert first == second
    # across processes, through the command line, byte for byte
    cmd = [sys.executable, "-m", "sheafops.cli", "verify", "--trials", "5",
           "--seed", "0", "--format", "json"]
    out1 = subprocess.run(cmd, capture_output=True, text=True, check=True).stdout
    out2 = subprocess.run(cmd, capture_output=True, text=True, check=True).stdout
    assert out1 == out2
