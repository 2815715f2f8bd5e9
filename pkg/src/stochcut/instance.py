"""Problem data: items, cutting patterns, costs, capacity bounds and demand.

Patterns are held as an ``m x n`` matrix ``a`` (items by patterns), while the
instance file stores them one row per pattern. Trim loss is always derived
from lengths and patterns; a ``trim`` entry in a file is only cross-checked.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from functools import cached_property
from importlib import resources
from pathlib import Path

import jsonschema
import numpy as np

from .errors import InstanceError

PAPER_COST_FACTORS = {"holding": 0.01, "lost_sales": 1.0, "trim": 0.1}


def _frozen(values, dtype) -> np.ndarray:
    arr = np.array(values, dtype=dtype)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class ItemCatalog:
    lengths: np.ndarray

    @property
    def m(self) -> int:
        return len(self.lengths)


@dataclass(frozen=True, eq=False)
class PatternMatrix:
    a: np.ndarray
    object_length: int
    trim: np.ndarray

    @property
    def n(self) -> int:
        return self.a.shape[1]


@dataclass(frozen=True, eq=False)
class CostSpec:
    g: np.ndarray
    h_plus: np.ndarray
    h_minus: np.ndarray


@dataclass(frozen=True)
class CapacityBounds:
    s_max: int
    x_max: int


@dataclass(frozen=True, eq=False)
class DemandSpec:
    p: np.ndarray
    d_min: int
    d_max: int

    def validate(self) -> None:
        if self.p.ndim != 1 or len(self.p) == 0:
            raise InstanceError("demand p must be a non-empty vector")
        if np.any(self.p < 0) or not np.all(np.isfinite(self.p)):
            raise InstanceError("demand p has a negative or non-finite entry")
        total = math.fsum(self.p)
        if abs(total - 1.0) > 1e-12:
            raise InstanceError(f"demand p sums to {total!r}, expected 1")
        if not 0 <= self.d_min <= self.d_max:
            raise InstanceError(
                f"demand bounds must satisfy 0 <= d_min <= d_max, got {self.d_min}, {self.d_max}"
            )


@dataclass(frozen=True, eq=False)
class ProblemInstance:
    """Immutable, validated stochastic cutting stock instance."""

    catalog: ItemCatalog
    patterns: PatternMatrix
    costs: CostSpec
    bounds: CapacityBounds
    demand: DemandSpec
    name: str = field(default="")

    def __post_init__(self):
        _validate(self)

    # shorthands used throughout the simulator
    @property
    def m(self) -> int:
        return self.catalog.m

    @property
    def n(self) -> int:
        return self.patterns.n

    @property
    def a(self) -> np.ndarray:
        return self.patterns.a

    @property
    def s_max(self) -> int:
        return self.bounds.s_max

    @property
    def x_max(self) -> int:
        return self.bounds.x_max

    @cached_property
    def a_contig(self) -> np.ndarray:
        return np.ascontiguousarray(self.patterns.a, dtype=np.int64)

    def __eq__(self, other):
        if not isinstance(other, ProblemInstance):
            return NotImplemented
        return (
            self.patterns.object_length == other.patterns.object_length
            and self.bounds == other.bounds
            and self.demand.d_min == other.demand.d_min
            and self.demand.d_max == other.demand.d_max
            and _same(self.catalog.lengths, other.catalog.lengths)
            and _same(self.patterns.a, other.patterns.a)
            and _same(self.patterns.trim, other.patterns.trim)
            and _same(self.costs.g, other.costs.g)
            and _same(self.costs.h_plus, other.costs.h_plus)
            and _same(self.costs.h_minus, other.costs.h_minus)
            and _same(self.demand.p, other.demand.p)
        )

    __hash__ = None


def _same(x: np.ndarray, y: np.ndarray) -> bool:
    return x.shape == y.shape and bool(np.array_equal(x, y))


def compute_trim(patterns: PatternMatrix | np.ndarray, catalog: ItemCatalog | np.ndarray,
                 object_length: int | None = None) -> np.ndarray:
    """Trim loss ``object_length - sum_i a[i, j] * lengths[i]`` per pattern.

    ``patterns`` may be a :class:`PatternMatrix` or a raw ``m x n`` array, in
    which case ``object_length`` is required.
    """
    if isinstance(patterns, PatternMatrix):
        a = patterns.a
        object_length = patterns.object_length
    else:
        a = np.asarray(patterns)
        if object_length is None:
            raise TypeError("object_length is required with a raw pattern array")
    lengths = catalog.lengths if isinstance(catalog, ItemCatalog) else np.asarray(catalog)
    if a.ndim != 2 or a.shape[0] != len(lengths):
        raise InstanceError(
            f"pattern matrix has {a.shape[0] if a.ndim == 2 else '?'} rows for {len(lengths)} item types"
        )
    trim = int(object_length) - lengths.astype(np.int64) @ a.astype(np.int64)
    bad = np.flatnonzero(trim < 0)
    if bad.size:
        j = int(bad[0])
        raise InstanceError(
            f"pattern {j + 1} exceeds object length ({object_length - trim[j]} > {object_length})"
        )
    return trim.astype(np.int64)


def _validate(inst: ProblemInstance) -> None:
    lengths = inst.catalog.lengths
    m = len(lengths)
    if m < 1:
        raise InstanceError("at least one item type is required")
    if np.any(lengths <= 0):
        raise InstanceError("item lengths must be positive")
    L = inst.patterns.object_length
    if L <= 0:
        raise InstanceError("object length must be positive")
    too_long = np.flatnonzero(lengths > L)
    if too_long.size:
        raise InstanceError(f"item {int(too_long[0]) + 1} is longer than the stock object")
    a = inst.patterns.a
    if a.ndim != 2 or a.shape[0] != m or a.shape[1] < 1:
        raise InstanceError(f"pattern matrix must be {m} x n with n >= 1, got shape {a.shape}")
    if np.any(a < 0):
        raise InstanceError("pattern counts must be non-negative")
    empty = np.flatnonzero(a.sum(axis=0) == 0)
    if empty.size:
        raise InstanceError(f"pattern {int(empty[0]) + 1} cuts no items")
    trim = compute_trim(a, lengths, L)
    if not np.array_equal(trim, inst.patterns.trim):
        raise InstanceError("stored trim does not match lengths and patterns")
    n = a.shape[1]
    c = inst.costs
    for label, vec, size in (("g", c.g, n), ("h_plus", c.h_plus, m), ("h_minus", c.h_minus, m)):
        if vec.shape != (size,):
            raise InstanceError(f"cost vector {label} must have length {size}, got {vec.shape}")
        if np.any(vec < 0) or not np.all(np.isfinite(vec)):
            raise InstanceError(f"cost vector {label} must be finite and non-negative")
    if inst.bounds.s_max < 1 or inst.bounds.x_max < 1:
        raise InstanceError("s_max and x_max must be at least 1")
    inst.demand.validate()
    if len(inst.demand.p) != m:
        raise InstanceError(f"demand p has {len(inst.demand.p)} entries for {m} item types")


def build_instance(item_lengths, patterns_by_row, object_length: int, s_max: int, x_max: int,
                   p, d_min: int, d_max: int, *, g=None, h_plus=None, h_minus=None,
                   cost_factors: dict | None = None, name: str = "") -> ProblemInstance:
    """Assemble and validate an instance; explicit cost vectors beat factors."""
    lengths = _frozen(item_lengths, np.int64)
    rows = np.array(patterns_by_row, dtype=np.int64)
    if rows.ndim != 2 or rows.shape[1] != len(lengths):
        raise InstanceError(
            f"each pattern row must list {len(lengths)} counts, got shape {rows.shape}"
        )
    a = _frozen(rows.T, np.int64)
    trim = compute_trim(a, lengths, object_length)
    factors = dict(PAPER_COST_FACTORS)
    factors.update(cost_factors or {})
    if g is None:
        g = factors["trim"] * trim.astype(float)
    if h_plus is None:
        h_plus = factors["holding"] * lengths.astype(float)
    if h_minus is None:
        h_minus = factors["lost_sales"] * lengths.astype(float)
    return ProblemInstance(
        catalog=ItemCatalog(lengths),
        patterns=PatternMatrix(a, int(object_length), _frozen(trim, np.int64)),
        costs=CostSpec(_frozen(g, float), _frozen(h_plus, float), _frozen(h_minus, float)),
        bounds=CapacityBounds(int(s_max), int(x_max)),
        demand=DemandSpec(_frozen(p, float), int(d_min), int(d_max)),
        name=name,
    )


def _schema() -> dict:
    text = resources.files("stochcut").joinpath("data/instance.schema.json").read_text()
    return json.loads(text)


def instance_from_dict(doc: dict) -> ProblemInstance:
    try:
        jsonschema.validate(doc, _schema())
    except jsonschema.ValidationError as exc:
        where = "/".join(str(p) for p in exc.absolute_path) or "<root>"
        raise InstanceError(f"schema violation at {where}: {exc.message}") from None
    if "cost_factors" in doc and "costs" not in doc and not doc["cost_factors"]:
        raise InstanceError("cost_factors is empty")
    explicit = doc.get("costs", {})
    inst = build_instance(
        doc["item_lengths"], doc["patterns"], doc["object_length"], doc["s_max"], doc["x_max"],
        doc["demand"]["p"], doc["demand"]["d_min"], doc["demand"]["d_max"],
        g=explicit.get("g"), h_plus=explicit.get("h_plus"), h_minus=explicit.get("h_minus"),
        cost_factors=doc.get("cost_factors"), name=doc.get("name", ""),
    )
    if "trim" in doc:
        declared = np.asarray(doc["trim"], dtype=np.int64)
        computed = inst.patterns.trim
        if declared.shape != computed.shape:
            raise InstanceError(f"trim lists {declared.size} values for {computed.size} patterns")
        diff = np.flatnonzero(declared != computed)
        if diff.size:
            j = int(diff[0])
            raise InstanceError(
                f"pattern {j + 1}: declared trim {declared[j]} but computed trim is {computed[j]}"
            )
    return inst


def instance_to_dict(inst: ProblemInstance) -> dict:
    doc = {
        "object_length": inst.patterns.object_length,
        "item_lengths": inst.catalog.lengths.tolist(),
        "patterns": inst.a.T.tolist(),
        "trim": inst.patterns.trim.tolist(),
        "costs": {
            "g": inst.costs.g.tolist(),
            "h_plus": inst.costs.h_plus.tolist(),
            "h_minus": inst.costs.h_minus.tolist(),
        },
        "s_max": inst.s_max,
        "x_max": inst.x_max,
        "demand": {
            "p": inst.demand.p.tolist(),
            "d_min": inst.demand.d_min,
            "d_max": inst.demand.d_max,
        },
    }
    if inst.name:
        doc = {"name": inst.name, **doc}
    return doc


def load_instance(path) -> ProblemInstance:
    """Read and validate an instance file.

    ``builtin:paper`` is accepted in place of a path.
    """
    if str(path) == "builtin:paper":
        return default_paper_instance()
    path = Path(path)
    try:
        doc = json.loads(path.read_text())
    except FileNotFoundError:
        raise InstanceError(f"instance file not found: {path}") from None
    except json.JSONDecodeError as exc:
        raise InstanceError(f"parse error in {path}: {exc}") from None
    if not isinstance(doc, dict):
        raise InstanceError(f"parse error in {path}: top level must be an object")
    return instance_from_dict(doc)


def save_instance(inst: ProblemInstance, path) -> None:
    Path(path).write_text(json.dumps(instance_to_dict(inst), indent=2) + "\n")


def default_paper_instance() -> ProblemInstance:
    """The steel-bar dataset: 7 item types, 15 handcrafted patterns."""
    text = resources.files("stochcut").joinpath("data/paper_instance.json").read_text()
    return instance_from_dict(json.loads(text))
