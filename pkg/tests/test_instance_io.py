"""Instance JSON round-trips and loader validation."""

import json

import pytest

from secalloc import (
    ValidationError,
    eval_valuation,
    generate_instance,
    instance_from_json,
    instance_to_json,
    load_instance,
    save_instance,
)
from secalloc.harness import GeneratorParams


@pytest.mark.parametrize("family", ["additive", "xos_capped", "separable_linear", "unit_demand_const"])
def test_round_trip_preserves_values(tmp_path, family):
    inst = generate_instance(GeneratorParams(4, 3, family), seed=9)
    path = tmp_path / "inst.json"
    save_instance(inst, path)
    loaded = load_instance(path)
    assert instance_to_json(loaded) == instance_to_json(inst)
    assert loaded.family == family
    for spec_a, spec_b in zip(inst.specs, loaded.specs):
        for mask in range(1 << inst.m):
            bundle = {j for j in range(inst.m) if mask >> j & 1}
            assert eval_valuation(spec_a, bundle, inst.signals) == pytest.approx(
                eval_valuation(spec_b, bundle, loaded.signals), abs=0
            )


def base_doc():
    return {
        "n": 2,
        "m": 1,
        "signals": [0.5, 1.0],
        "agents": [
            {"type": "unit_demand", "weights": [{"coeffs": [1.0, 0.0], "const": 0.1}]},
            {"type": "unit_demand", "weights": [{"coeffs": [0.0, 1.0], "const": 0.2}]},
        ],
    }


def test_loader_rejects_nan_and_negative_entries():
    doc = base_doc()
    doc["signals"][0] = float("nan")
    with pytest.raises(ValidationError, match="finite"):
        instance_from_json(doc)

    doc = base_doc()
    doc["signals"][0] = -1.0
    with pytest.raises(ValidationError, match="nonnegative"):
        instance_from_json(doc)

    doc = base_doc()
    doc["agents"][0]["weights"][0]["coeffs"][0] = -2.0
    with pytest.raises(ValidationError, match="nonnegative"):
        instance_from_json(doc)

    doc = base_doc()
    doc["agents"][0]["weights"][0]["const"] = float("inf")
    with pytest.raises(ValidationError, match="finite"):
        instance_from_json(doc)


def test_loader_rejects_structural_mismatches():
    doc = base_doc()
    doc["signals"] = [0.5]
    with pytest.raises(ValidationError):
        instance_from_json(doc)

    doc = base_doc()
    doc["agents"][0]["type"] = "fancy"
    with pytest.raises(ValidationError, match="unknown type"):
        instance_from_json(doc)

    doc = base_doc()
    del doc["agents"][0]["weights"][0]
    with pytest.raises(ValidationError):
        instance_from_json(doc)

    doc = base_doc()
    del doc["m"]
    with pytest.raises(ValidationError, match="missing"):
        instance_from_json(doc)


def test_load_missing_file_and_bad_json(tmp_path):
    with pytest.raises(ValidationError, match="cannot read"):
        load_instance(tmp_path / "missing.json")
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    with pytest.raises(ValidationError, match="not valid JSON"):
        load_instance(bad)


def test_separable_round_trip_keeps_owner_structure(tmp_path):
    inst = generate_instance(GeneratorParams(3, 2, "separable_capped"), seed=1)
    path = tmp_path / "sep.json"
    save_instance(inst, path)
    loaded = load_instance(path)
    for i, spec in enumerate(loaded.specs):
        assert spec.agent == i
        doc = json.loads(path.read_text())
        assert doc["agents"][i]["type"] == "separable"
