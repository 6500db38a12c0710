import json
import os

import pytest

from walras_vi.economy import default_catalog
from walras_vi.harness import (
    GATED_THEOREMS,
    THEOREM_IDS,
    HarnessConfig,
    check_lemma_2_1,
    check_lemma_2_2,
    check_theorem_4_1,
    check_theorem_4_2,
    check_theorem_4_3,
    failure_events,
    gather_evidence,
    run_catalog,
    run_catalog_with_evidence,
    summary_table,
)

CATALOG = default_catalog()
CONFIG = HarnessConfig()


@pytest.fixture(scope="module")
def evidence():
    return {label: gather_evidence(f, CONFIG) for label, f in CATALOG.items()}


# ---------------------------------------------------------------------------
# L2_1 / L2_2


def test_existence_concluded_on_every_fixture(evidence):
    for label, fixture in CATALOG.items():
        result = check_lemma_2_1(fixture, CONFIG, evidence=evidence[label])
        assert result.conclusion_verified, label
        assert not result.vacuous
        assert result.details["solver_status"] == "converged", label


def test_uniqueness_verified_for_strictly_monotone_fixture(evidence):
    result = check_lemma_2_2(CATALOG["linear_identity"], CONFIG,
                             evidence=evidence["linear_identity"])
    assert not result.vacuous
    assert result.conclusion_verified
    assert result.details["uniqueness_probe"] is True


def test_uniqueness_vacuous_when_strictness_refuted(evidence):
    for label in ("scalar_negslope", "constant_field"):
        result = check_lemma_2_2(CATALOG[label], CONFIG, evidence=evidence[label])
        assert result.vacuous
        assert result.conclusion_verified  # vacuous pass, recorded as such
        assert result.premises_established[0]["verdict"] == "refuted"


# ---------------------------------------------------------------------------
# T4_1


def test_existence_iff_proper_quasi_consistency(evidence):
    # increasing field: nonempty dual set, checker holds
    r = check_theorem_4_1(CATALOG["scalar_posslope"], CONFIG,
                          evidence=evidence["scalar_posslope"])
    assert r.conclusion_verified
    assert r.details["minty"]["member_count"] > 0
    assert r.details["checker_verdict"] == "holds_on_samples"
    # decreasing field: refutation witness and empty dual set
    r = check_theorem_4_1(CATALOG["scalar_negslope"], CONFIG,
                          evidence=evidence["scalar_negslope"])
    assert r.conclusion_verified
    assert r.details["minty"]["member_count"] == 0
    assert r.details["checker_verdict"] == "refuted"
    # monotone field on the square
    r = check_theorem_4_1(CATALOG["linear_identity"], CONFIG,
                          evidence=evidence["linear_identity"])
    assert r.conclusion_verified
    assert r.details["minty"]["member_count"] > 0


# ---------------------------------------------------------------------------
# T4_2


def test_at_most_one_solution_under_strict_proper(evidence):
    r = check_theorem_4_2(CATALOG["scalar_posslope"], CONFIG,
                          evidence=evidence["scalar_posslope"])
    assert not r.vacuous
    assert r.conclusion_verified
    assert r.details["stampacchia"]["cluster_count"] == 1


def test_constant_field_contrapositive_face(evidence):
    r = check_theorem_4_2(CATALOG["constant_field"], CONFIG,
                          evidence=evidence["constant_field"])
    assert r.vacuous
    # the oracle still records the solution face as contrapositive evidence
    assert r.details["stampacchia"]["member_count"] > 10
    assert r.details["stampacchia"]["diameter"] >= 0.9


def test_negslope_contrapositive_three_clusters(evidence):
    r = check_theorem_4_2(CATALOG["scalar_negslope"], CONFIG,
                          evidence=evidence["scalar_negslope"])
    assert r.vacuous
    assert r.details["stampacchia"]["cluster_count"] == 3


# ---------------------------------------------------------------------------
# T4_3


def test_positive_equivalence_triple_all_true(evidence):
    for label in ("scalar_positive", "simplex_positive"):
        r = check_theorem_4_3(CATALOG[label], CONFIG, evidence=evidence[label])
        assert not r.vacuous
        triple = r.details["triple"]
        assert set(triple) == {"strict_proper_quasi_holds", "unique_minty",
                               "unique_stampacchia"}
        assert all(triple.values()), label
        assert r.conclusion_verified


def test_positive_equivalence_disagreement_is_surfaced_not_gated(evidence):
    # positive constant field: both solution sets are unique singletons but
    # an orthogonal segment refutes strict-proper quasimonotonicity, so the
    # triple disagrees; this is reported evidence, not a failure event
    r = check_theorem_4_3(CATALOG["constant_positive"], CONFIG,
                          evidence=evidence["constant_positive"])
    assert not r.vacuous
    triple = r.details["triple"]
    assert triple["strict_proper_quasi_holds"] is False
    assert triple["unique_minty"] is True
    assert triple["unique_stampacchia"] is True
    assert not r.conclusion_verified
    assert r.theorem_id not in GATED_THEOREMS


def test_positivity_gate_records_failing_premise(evidence):
    r = check_theorem_4_3(CATALOG["scalar_negslope"], CONFIG,
                          evidence=evidence["scalar_negslope"])
    assert r.vacuous
    assert r.premises_established[1]["verdict"] == "refuted"
    assert "triple" not in r.details


# ---------------------------------------------------------------------------
# catalog runs


def test_run_catalog_shape_and_gate():
    results = run_catalog()
    assert len(results) == 5 * len(CATALOG)
    assert failure_events(results) == []
    seen = {(r.fixture_label, r.theorem_id) for r in results}
    assert len(seen) == len(results)


def test_run_catalog_empty():
    assert run_catalog(catalog={}) == []


def test_run_catalog_single_fixture_has_five_results():
    single = {"linear_identity": CATALOG["linear_identity"]}
    results = run_catalog(catalog=single)
    assert [r.theorem_id for r in results] == list(THEOREM_IDS)


def test_summary_table_marks():
    results = run_catalog()
    table = summary_table(results)
    lines = table.splitlines()
    assert lines[0].split()[0] == "fixture"
    assert all(t in lines[0] for t in THEOREM_IDS)
    for label in CATALOG:
        assert any(line.startswith(label) for line in lines[1:])
    assert "vacuous" in table
    assert "✓" in table
    body = "\n".join(lines[1:])
    # only the non-gated equivalence triple may show a cross
    for line in lines[1:]:
        if "✗" in line:
            assert line.startswith(("constant_positive", "simplex_positive",
                                    "scalar_positive"))


def test_results_serialize_to_json():
    results = run_catalog(catalog={"scalar_posslope": CATALOG["scalar_posslope"]})
    payload = json.dumps([r.to_dict() for r in results])
    parsed = json.loads(payload)
    assert len(parsed) == 5
    assert parsed[0]["fixture"] == "scalar_posslope"


def test_threaded_run_matches_sequential():
    sequential = run_catalog()
    os.environ["WALRAS_VI_THREADS"] = "4"
    try:
        threaded = run_catalog()
    finally:
        del os.environ["WALRAS_VI_THREADS"]
    a = json.dumps([r.to_dict() for r in sequential], sort_keys=True)
    b = json.dumps([r.to_dict() for r in threaded], sort_keys=True)
    assert a == b


def test_config_validation():
    with pytest.raises(ValueError):
        HarnessConfig(grid_spacing=-0.1)
    with pytest.raises(ValueError):
        HarnessConfig(eps_strict=-1.0)
