import copy
import json

import pytest

from folner_density.certificates import require_valid, verify_all, verify_document
from folner_density.errors import CertificateError, ConfigError
from folner_density.runner import OPERATIONS, RunConfig, run, run_batch

# one cheap, successful configuration per operation
CASES = {
    "density": {"set": "evens"},
    "folner-check": {"n_values": [4, 8, 16, 32]},
    "product": {"A": "evens", "B": "odds", "window": [0, 10], "factor_A": [0, 4], "factor_B": [0, 4]},
    "delta": {"set": "multiples:3", "eps": "0", "candidates": [-3, 4]},
    "syndetic": {"set": "evens", "k": 2, "region": [0, 5], "pool": [0, 3]},
    "thick": {"set": {"kind": "runs"}, "probes": 3, "pool": [0, 20]},
    "pws": {"set": "evens", "k": 2, "probes": 4, "pool": [0, 10], "F_pool": [0, 3]},
    "embed": {"A": "evens", "B": {"kind": "runs"}, "probes": [[0, 2]], "pool": [0, 20]},
    "lemma overlap": {"E": [0, 12], "family": ["evens", "multiples:3", [[1], [2]]], "gamma": "1/6", "eps": "0"},
    "lemma delta-cover": {"C": "evens", "E": [0, 60], "P": [0, 30]},
    "lemma shift": {"U": [-10, 10], "V": [0, 10], "C": "multiples:3", "D": "evens"},
    "lemma chain": {"sets": ["evens", "multiples:3"], "E": [0, 60], "delta": "1/10"},
    "thm delta-cover": {"sets": ["evens", "multiples:3"], "eps": "0"},
    "thm roots": {"sets": ["multiples:3"], "k": 2, "window": [0, 10], "E": [0, 60]},
    "thm jin": {"A": "evens", "B": "evens", "X": "evens", "E": [0, 120]},
    "thm jin-pws": {"A": "evens", "B": "evens", "E": {"shape": "anchored", "n": 1008}},
    "thm pullback": {"C": "evens", "E": [0, 10]},
    "thm embed": {"sets": ["evens", "multiples:3"], "E": [0, 60]},
    "thm inverse-probe": {"set": {"kind": "runs"}},
    "counterexample": {"M": 1, "N": 1, "L": 4, "k": 3},
}


def produce(operation, params=None, **extra):
    cfg = RunConfig.from_dict({"operation": operation, "params": params or CASES[operation], **extra})
    # documents are verified as they would be read back from disk
    return json.loads(json.dumps(run(cfg)))


def test_every_operation_has_a_case():
    assert set(CASES) == set(OPERATIONS)


@pytest.mark.parametrize("operation", sorted(CASES))
def test_run_then_verify(operation):
    doc = produce(operation)
    assert doc["operation"] == operation
    assert doc["verdict"] == "success"
    assert doc["inputs"]["params"] == CASES[operation]
    report = verify_document(doc)
    assert report.accepted, report.reason
    assert all(row["failed"] == 0 for row in report.checks)


def test_headline_values():
    assert produce("density")["value"] == "1/2"
    assert produce("folner-check")["first_invariant_n"] == 16
    cover = produce("thm delta-cover")
    assert cover["r"] == 6 and cover["L"] == [[x] for x in range(6)]
    jin = produce("thm jin-pws")
    assert jin["k_bound"] == 4 and jin["F"] == [[0], [1]]
    ce = produce("counterexample")
    assert (ce["density_A"], ce["block_length"], ce["recurring_gap"]) == ("1/4", 7, 5)


def _tamper(doc, path, value):
    out = copy.deepcopy(doc)
    node = out
    for key in path[:-1]:
        node = node[key]
    node[path[-1]] = value
    return out


@pytest.mark.parametrize("operation,path,value", [
    ("density", ("estimates", 0, "value"), "1/3"),
    ("syndetic", ("certificate", "F"), [[0]]),
    ("lemma shift", ("count",), 0),
    ("lemma delta-cover", ("F",), [[0], [2]]),
    ("thm delta-cover", ("cover", "assignment", 1, 1), [3]),
    ("thm jin", ("factorizations", 0, "a"), [1]),
    ("counterexample", ("density_A",), "1/3"),
    ("thick", ("witnesses", 2, "x"), [3]),
])
def test_tampered_certificates_are_rejected(operation, path, value):
    doc = _tamper(produce(operation), path, value)
    report = verify_document(doc)
    assert not report.accepted
    assert report.reason
    with pytest.raises(CertificateError):
        require_valid(doc)


@pytest.mark.parametrize("operation,verdict", [
    ("density", "failure"),
    ("counterexample", "failure"),
    ("lemma delta-cover", "failure"),
    ("thm delta-cover", "failure"),
    ("thm jin", "inconclusive"),
    ("thm inverse-probe", "failure"),
])
def test_flipped_verdicts_are_rejected(operation, verdict):
    doc = _tamper(produce(operation), ("verdict",), verdict)
    report = verify_document(doc)
    assert not report.accepted
    assert report.reason == "check failed: verdict matches checks"


# covers that outgrow their size bound, or have none, must not verify as success
UNBOUNDED = {
    "thm delta-cover": {"sets": ["multiples:5"], "eps": "0", "P": [0, 30], "E": [0, 10]},
    "thm jin": {"A": "multiples:4", "B": "multiples:4", "X": "whole", "E": [0, 16], "window": [0, 64]},
    "lemma delta-cover": {"C": "evens", "E": [0, 10], "P": [-20, 10]},
}


@pytest.mark.parametrize("operation", sorted(UNBOUNDED))
def test_covers_beyond_their_bound_are_not_success(operation):
    doc = produce(operation, UNBOUNDED[operation])
    assert doc["verdict"] != "success"
    report = verify_document(doc)
    assert report.accepted, report.reason
    assert not verify_document(_tamper(doc, ("verdict",), "success")).accepted


def test_cover_with_a_translate_outside_E_is_inconclusive():
    doc = produce("lemma delta-cover", UNBOUNDED["lemma delta-cover"])
    assert doc["verdict"] == "inconclusive"
    assert doc["certified_bound"] is None
    assert doc["bound_holds"] is False


def test_malformed_documents_are_rejected():
    doc = produce("density")
    del doc["estimates"]
    report = verify_document(doc)
    assert not report.accepted
    assert report.reason.startswith("malformed certificate")
    assert not verify_document(["not", "a", "document"]).accepted
    assert not verify_document({"operation": "teleport", "verdict": "success"}).accepted
    assert not verify_document({"operation": "density", "verdict": "maybe", "inputs": {}}).accepted
    assert not verify_document({"operation": "density", "verdict": "error"}).accepted


def test_budget_exhaustion_is_inconclusive_and_replays():
    doc = produce("density", budgets={"search_budget": 5})
    assert doc["verdict"] == "inconclusive"
    assert "reason" in doc
    assert verify_document(doc).accepted
    doc = produce("syndetic", budgets={"search_budget": 3})
    assert doc["verdict"] == "inconclusive"
    assert verify_document(doc).accepted


def test_runs_are_deterministic():
    for operation in ("syndetic", "lemma chain", "thm roots"):
        first = json.dumps(produce(operation), sort_keys=True)
        assert first == json.dumps(produce(operation), sort_keys=True)


def test_verify_all_accepts_a_list():
    docs = [produce("density"), produce("counterexample")]
    assert [r.accepted for r in verify_all(docs)] == [True, True]
    assert verify_all(docs[0])[0].operation == "density"


def test_run_config_validation():
    with pytest.raises(ConfigError):
        RunConfig.from_dict({"operation": "teleport"})
    with pytest.raises(ConfigError):
        RunConfig.from_dict({"operation": "density", "colour": "blue"})
    with pytest.raises(ConfigError):
        RunConfig.from_dict({"operation": "density", "params": []})
    with pytest.raises(ConfigError):
        run(RunConfig.from_dict({"operation": "syndetic", "params": {"set": "evens"}}))


def test_batch_records_errors_and_keeps_going():
    docs = run_batch([
        {"operation": "density", "params": {"set": "evens"}},
        {"operation": "teleport"},
        {"operation": "syndetic", "params": {"set": "evens", "k": "two", "region": [0, 5]}},
    ])
    assert docs[0]["verdict"] == "success"
    assert docs[1]["verdict"] == "error" and docs[1]["error"]["type"] == "ConfigError"
    assert docs[2]["operation"] == "syndetic" and docs[2]["verdict"] == "error"


def test_named_sets_and_other_groups():
    doc = produce("density", {"set": "S", "n_values": [4]},
                  sets={"S": {"kind": "residue", "modulus": 2, "residues": [0]}},
                  group={"kind": "Zd", "d": 2})
    assert doc["value"] == "1/2"
    assert verify_document(doc).accepted
