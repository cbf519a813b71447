import json
import math
import warnings

import pytest

from nonoblivious.errors import DomainError, InstanceError
from nonoblivious.instances import CurvatureWarning, InstanceFile, generate, parse_instance, write_instance
from nonoblivious.objectives import exact_curvature, verify_monotone_submodular

MINIMAL = {
    "version": 1,
    "ground": {"n": 3},
    "matroid": {"kind": "uniform", "rank": 2},
    "objective": {"kind": "coverage", "weights": [1.0, 2.0], "sets": [[0], [1], [0, 1]]},
}


def encode(d):
    return json.dumps(d).encode()


def test_minimal_round_trip():
    inst = parse_instance(encode(MINIMAL))
    data = write_instance(inst)
    assert write_instance(parse_instance(data)) == data
    assert parse_instance(data) == inst
    assert inst.build_matroid().rank == 2
    assert inst.build_oracle().value(0b111) == 3.0


def test_round_trip_with_every_field():
    d = {
        **MINIMAL,
        "id": "full",
        "ground": {"n": 3, "labels": ["a", "b", "c"]},
        "matroid": {"kind": "partition", "parts": [0, 0, 1], "capacities": [1, 1]},
        "curvature": 1.0,
        "optimum": {"set": [1, 2], "value": 3.0},
    }
    data = write_instance(parse_instance(encode(d)))
    assert write_instance(parse_instance(data)) == data
    assert json.loads(data) == d


def test_explicit_matroid_downward_closure_failure_names_pair():
    d = {**MINIMAL, "matroid": {"kind": "explicit", "independent": [[], [0, 1]]}}
    with pytest.raises(InstanceError, match=r"downward closure.*\[0, 1\].*\[0\]"):
        parse_instance(encode(d))


def test_negative_weight_rejected_with_field_path():
    d = {**MINIMAL, "objective": {"kind": "coverage", "weights": [1.0, -2.0], "sets": [[0], [1], []]}}
    with pytest.raises(InstanceError, match=r"objective.*weights\[1\]"):
        parse_instance(encode(d))


def test_schema_errors_name_the_field():
    with pytest.raises(InstanceError, match="ground"):
        parse_instance(encode({**MINIMAL, "ground": {"n": "3"}}))
    with pytest.raises(InstanceError, match="version"):
        parse_instance(encode({**MINIMAL, "version": 7}))
    with pytest.raises(InstanceError, match="line 1 column"):
        parse_instance(b'{"version": 1,')
    with pytest.raises(InstanceError, match="objective.sets"):
        parse_instance(encode({**MINIMAL, "objective": {"kind": "coverage", "weights": [1.0], "sets": [[0]]}}))
    with pytest.raises(InstanceError, match="rank"):
        parse_instance(encode({**MINIMAL, "matroid": {"kind": "uniform", "rank": 9}}))


def test_non_submodular_table_rejected():
    d = {**MINIMAL, "ground": {"n": 2}, "objective": {"kind": "explicit", "values": [0, 1, 1, 3]}}
    with pytest.raises(InstanceError, match="submodular"):
        parse_instance(encode(d))


def test_declared_curvature_below_exact_warns():
    inst = generate("budget-additive", "uniform-matroid", 3, n=6, rank=2, curvature_cap=0.8)
    exact = exact_curvature(inst.build_oracle())
    assert exact > 0.5
    inst.curvature = 0.5
    with pytest.warns(CurvatureWarning):
        parsed = parse_instance(write_instance(inst))
    assert parsed.warnings
    inst.curvature = 1.0
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        parse_instance(write_instance(inst))


def test_generate_is_deterministic():
    for kind in ("random-coverage", "budget-additive", "rank-sum"):
        a = write_instance(generate(kind, "partition-matroid", 17, n=9, parts=3))
        b = write_instance(generate(kind, "partition-matroid", 17, n=9, parts=3))
        assert a == b
    assert write_instance(generate(seed=1)) != write_instance(generate(seed=2))


def test_generated_objectives_are_monotone_submodular():
    for seed in range(4):
        for kind in ("random-coverage", "budget-additive", "rank-sum"):
            inst = generate(kind, "uniform-matroid", seed, n=8, rank=3, curvature_cap=0.7 if seed % 2 else None)
            f = parse_instance(write_instance(inst)).build_oracle()
            assert verify_monotone_submodular(f).ok
            if seed % 2:
                assert exact_curvature(f) <= 0.7 + 1e-12


def test_density_one_coverage_is_indicator():
    inst = generate("random-coverage", "uniform-matroid", 0, n=5, rank=2, density=1.0)
    f = inst.build_oracle()
    total = f.value(1)
    assert all(f.value(A) == total for A in range(1, 32))
    assert exact_curvature(f) == 1.0


def test_infinite_budget_is_linear():
    inst = generate("budget-additive", "uniform-matroid", 0, n=6, rank=3, budget_factor=math.inf)
    assert inst.curvature == 0.0
    assert exact_curvature(inst.build_oracle()) == pytest.approx(0, abs=1e-12)


def test_partition_generator_rank():
    inst = generate("random-coverage", "partition-matroid", 5, n=10, parts=4, capacity=1)
    assert inst.build_matroid().rank == 4


def test_generate_rejects_infeasible_params():
    with pytest.raises(DomainError):
        generate(n=4, rank=5)
    with pytest.raises(DomainError):
        generate(matroid="partition-matroid", n=3, parts=4)
    with pytest.raises(DomainError):
        generate("budget-additive", n=20)
    with pytest.raises(DomainError):
        generate("mystery")


def test_instance_file_defaults():
    inst = InstanceFile(n=2, matroid={"kind": "uniform", "rank": 1},
                        objective={"kind": "explicit", "values": [0, 1, 1, 1]})
    assert parse_instance(write_instance(inst)) == inst
