"""Instance files: a matroid plus an objective, encoded as JSON.

Layout (keys sorted on write)::

    {
      "version": 1,
      "id": "cov-0007",                                   # optional
      "ground": {"n": 6, "labels": ["a", ...]},           # labels optional
      "matroid": {"kind": "uniform", "rank": 2}
               | {"kind": "partition", "parts": [...], "capacities": [...]}
               | {"kind": "explicit", "independent": [[0], [0, 1], ...]},
      "objective": {"kind": "coverage", "weights": [...], "sets": [[...], ...]}
                 | {"kind": "explicit", "values": [... 2^n values in bitmask order ...]},
      "curvature": 0.5,                                   # optional declared bound
      "optimum": {"set": [...], "value": 3.2}             # optional
    }
"""
from __future__ import annotations

import json
import math
import warnings
from dataclasses import dataclass, field
from typing import Any

import jsonschema
import numpy as np

from .bits import elements, to_mask
from .errors import DomainError, InstanceError, MatroidAxiomError
from .matroids import ExplicitMatroid, GroundSet, Matroid, PartitionMatroid, UniformMatroid
from .objectives import (
    CoverageInstance,
    CoverageOracle,
    ExplicitOracle,
    ValueOracle,
    budget_additive_table,
    exact_curvature,
    random_coverage,
    rank_sum_table,
)
from .seeding import derive_seed

VERSION = 1
CURVATURE_CHECK_MAX_N = 16

_int_list = {"type": "array", "items": {"type": "integer", "minimum": 0}}


def _tagged(variants: dict) -> dict:
    """Object schema keyed on ``kind``; each variant lists its required fields."""
    return {
        "type": "object",
        "required": ["kind"],
        "properties": {"kind": {"enum": sorted(variants)}},
        "allOf": [
            {
                "if": {"properties": {"kind": {"const": kind}}},
                "then": {
                    "properties": {"kind": {}, **props},
                    "required": sorted(props),
                    "additionalProperties": False,
                },
            }
            for kind, props in variants.items()
        ],
    }


SCHEMA = {
    "type": "object",
    "required": ["version", "ground", "matroid", "objective"],
    "additionalProperties": False,
    "properties": {
        "version": {"const": VERSION},
        "id": {"type": "string"},
        "ground": {
            "type": "object",
            "required": ["n"],
            "additionalProperties": False,
            "properties": {
                "n": {"type": "integer", "minimum": 1},
                "labels": {"type": "array", "items": {"type": "string"}},
            },
        },
        "matroid": _tagged({
            "uniform": {"rank": {"type": "integer", "minimum": 0}},
            "partition": {"parts": _int_list, "capacities": _int_list},
            "explicit": {"independent": {"type": "array", "items": _int_list}},
        }),
        "objective": _tagged({
            "coverage": {
                "weights": {"type": "array", "items": {"type": "number", "minimum": 0}},
                "sets": {"type": "array", "items": _int_list},
            },
            "explicit": {"values": {"type": "array", "items": {"type": "number", "minimum": 0}}},
        }),
        "curvature": {"type": "number", "minimum": 0, "maximum": 1},
        "optimum": {
            "type": "object",
            "required": ["set", "value"],
            "additionalProperties": False,
            "properties": {"set": _int_list, "value": {"type": "number"}},
        },
    },
}


class CurvatureWarning(UserWarning):
    """Declared curvature is below the exact curvature of the objective."""


@dataclass
class InstanceFile:
    n: int
    matroid: dict
    objective: dict
    labels: list[str] | None = None
    curvature: float | None = None
    optimum: dict | None = None
    id: str | None = None
    version: int = VERSION
    warnings: list[str] = field(default_factory=list, compare=False)

    @property
    def ground(self) -> GroundSet:
        return GroundSet(self.n, tuple(self.labels) if self.labels else None)

    def build_matroid(self) -> Matroid:
        d = self.matroid
        if d["kind"] == "uniform":
            return UniformMatroid(self.ground, d["rank"])
        if d["kind"] == "partition":
            return PartitionMatroid(self.ground, d["parts"], d["capacities"])
        return ExplicitMatroid(self.ground, [to_mask(s) for s in d["independent"]])

    def build_oracle(self, verify: bool = False) -> ValueOracle:
        d = self.objective
        if d["kind"] == "coverage":
            inst = CoverageInstance(tuple(float(w) for w in d["weights"]), tuple(tuple(s) for s in d["sets"]))
            return CoverageOracle(inst, self.ground)
        return ExplicitOracle(self.ground, d["values"], verify=verify)

    def to_dict(self) -> dict[str, Any]:
        out: dict[str, Any] = {"version": self.version, "ground": {"n": self.n}}
        if self.labels:
            out["ground"]["labels"] = list(self.labels)
        if self.id is not None:
            out["id"] = self.id
        out["matroid"] = self.matroid
        out["objective"] = self.objective
        if self.curvature is not None:
            out["curvature"] = self.curvature
        if self.optimum is not None:
            out["optimum"] = self.optimum
        return out


def write_instance(inst: InstanceFile) -> bytes:
    """Canonical encoding: one top-level key per line, keys sorted, compact values."""
    d = inst.to_dict()
    lines = [f"  {json.dumps(k)}: {json.dumps(d[k], sort_keys=True, separators=(', ', ': '))}" for k in sorted(d)]
    return ("{\n" + ",\n".join(lines) + "\n}\n").encode()


def _path(err: jsonschema.ValidationError) -> str:
    out = ""
    for p in err.absolute_path:
        out += f"[{p}]" if isinstance(p, int) else (f".{p}" if out else p)
    return out or "<root>"


def _semantic_checks(inst: InstanceFile):
    n = inst.n
    md, od = inst.matroid, inst.objective
    if inst.labels is not None and len(inst.labels) != n:
        raise InstanceError(f"ground.labels: expected {n} labels, got {len(inst.labels)}")
    if md["kind"] == "partition":
        if len(md["parts"]) != n:
            raise InstanceError(f"matroid.parts: expected {n} entries, got {len(md['parts'])}")
        bad = [p for p in md["parts"] if p >= len(md["capacities"])]
        if bad:
            raise InstanceError(f"matroid.parts: part id {bad[0]} has no capacity")
    elif md["kind"] == "uniform" and md["rank"] > n:
        raise InstanceError(f"matroid.rank: {md['rank']} exceeds n = {n}")
    elif md["kind"] == "explicit":
        for i, s in enumerate(md["independent"]):
            if any(e >= n for e in s):
                raise InstanceError(f"matroid.independent[{i}]: element id outside 0..{n - 1}")
    if od["kind"] == "coverage":
        if len(od["sets"]) != n:
            raise InstanceError(f"objective.sets: expected {n} sets, got {len(od['sets'])}")
        u = len(od["weights"])
        for i, s in enumerate(od["sets"]):
            if any(x >= u for x in s):
                raise InstanceError(f"objective.sets[{i}]: point id outside universe 0..{u - 1}")
    elif len(od["values"]) != 1 << n:
        raise InstanceError(f"objective.values: expected {1 << n} values, got {len(od['values'])}")
    if inst.optimum is not None and any(e >= n for e in inst.optimum["set"]):
        raise InstanceError("optimum.set: element id outside the ground set")


def parse_instance(data: bytes | str, validate: bool = True) -> InstanceFile:
    """Decode and validate an instance.

    Raises :class:`InstanceError` for malformed JSON, schema violations,
    explicit matroids that violate the axioms, and objectives that are not
    monotone submodular.  A declared curvature below the exact curvature
    (checked for n <= 16) is reported as a :class:`CurvatureWarning`.
    """
    if isinstance(data, bytes):
        data = data.decode()
    try:
        raw = json.loads(data)
    except json.JSONDecodeError as exc:
        raise InstanceError(f"line {exc.lineno} column {exc.colno}: {exc.msg}") from None
    try:
        jsonschema.validate(raw, SCHEMA)
    except jsonschema.ValidationError as exc:
        best = jsonschema.exceptions.best_match([exc]) or exc
        raise InstanceError(f"{_path(best)}: {best.message}") from None
    inst = InstanceFile(
        n=raw["ground"]["n"],
        labels=raw["ground"].get("labels"),
        matroid=raw["matroid"],
        objective=raw["objective"],
        curvature=raw.get("curvature"),
        optimum=raw.get("optimum"),
        id=raw.get("id"),
        version=raw["version"],
    )
    _semantic_checks(inst)
    if not validate:
        return inst
    try:
        inst.build_matroid()
    except MatroidAxiomError as exc:
        a, b = exc.witness if exc.witness else (0, 0)
        raise InstanceError(f"matroid: {exc} (pair {elements(a)}, {elements(b)})") from None
    except DomainError as exc:
        raise InstanceError(f"matroid: {exc}") from None
    try:
        f = inst.build_oracle(verify=True)
    except DomainError as exc:
        raise InstanceError(f"objective: {exc}") from None
    if inst.curvature is not None and inst.n <= CURVATURE_CHECK_MAX_N:
        exact = exact_curvature(f)
        if inst.curvature < exact - 1e-9:
            msg = f"declared curvature {inst.curvature} is below the exact curvature {exact:.6g}"
            inst.warnings.append(msg)
            warnings.warn(msg, CurvatureWarning, stacklevel=2)
    return inst


def load_instance(path, validate: bool = True) -> InstanceFile:
    with open(path, "rb") as fh:
        inst = parse_instance(fh.read(), validate=validate)
    if inst.id is None:
        from pathlib import Path

        inst.id = Path(path).stem
    return inst


# -- generation ------------------------------------------------------------------

OBJECTIVE_KINDS = ("random-coverage", "budget-additive", "rank-sum")
MATROID_KINDS = ("uniform-matroid", "partition-matroid")


def _floats(arr) -> list[float]:
    return [float(x) for x in arr]


def generate(objective: str = "random-coverage", matroid: str = "uniform-matroid", seed: int = 0, *,
             n: int = 10, rank: int = 3, parts: int | None = None, capacity: int | list[int] = 1,
             universe: int | None = None, density: float = 0.3, weight_law: str = "exponential",
             budget_factor: float = 0.5, curvature_cap: float | None = None,
             instance_id: str | None = None) -> InstanceFile:
    """Deterministic random instance.

    ``curvature_cap`` (in (0, 1)) adds a linear component so that the
    objective's curvature is at most the cap; the cap is then recorded as the
    declared curvature.
    """
    if n < 1:
        raise DomainError(f"n must be >= 1, got {n}")
    m_rng = np.random.default_rng(derive_seed(seed, "matroid"))
    o_rng = np.random.default_rng(derive_seed(seed, "objective"))

    if matroid == "uniform-matroid":
        if not 0 <= rank <= n:
            raise DomainError(f"rank {rank} infeasible for n = {n}")
        mfrag = {"kind": "uniform", "rank": int(rank)}
    elif matroid == "partition-matroid":
        k = parts if parts is not None else rank
        if not 1 <= k <= n:
            raise DomainError(f"{k} parts infeasible for n = {n}")
        caps = [capacity] * k if isinstance(capacity, int) else list(capacity)
        if len(caps) != k or any(c < 0 for c in caps):
            raise DomainError("capacities must be k non-negative integers")
        # every part gets at least one element
        assign = np.concatenate([np.arange(k), m_rng.integers(0, k, size=n - k)])
        m_rng.shuffle(assign)
        mfrag = {"kind": "partition", "parts": [int(p) for p in assign], "capacities": [int(c) for c in caps]}
    else:
        raise DomainError(f"unknown matroid kind {matroid!r}; choose from {', '.join(MATROID_KINDS)}")

    if objective == "random-coverage":
        cov = random_coverage(n, o_rng, universe=universe, density=density, weight_law=weight_law,
                              curvature_cap=curvature_cap)
        ofrag = {"kind": "coverage", "weights": list(cov.weights), "sets": [list(s) for s in cov.sets]}
    elif objective in ("budget-additive", "rank-sum"):
        if n > 16:
            raise DomainError(f"explicit objectives are limited to n <= 16, got {n}")
        if objective == "budget-additive":
            T = budget_additive_table(n, o_rng, budget_factor=budget_factor, curvature_cap=curvature_cap)
        else:
            T = rank_sum_table(n, o_rng, curvature_cap=curvature_cap)
        ofrag = {"kind": "explicit", "values": _floats(T)}
    else:
        raise DomainError(f"unknown objective kind {objective!r}; choose from {', '.join(OBJECTIVE_KINDS)}")

    declared = None
    if curvature_cap is not None and curvature_cap < 1:
        declared = float(curvature_cap)
    elif objective == "budget-additive" and math.isinf(budget_factor):
        declared = 0.0
    return InstanceFile(n=n, matroid=mfrag, objective=ofrag, curvature=declared, id=instance_id)
