"""Project file parsing and serialization.

A project file is a JSON object with the keys

    m                 task count
    omega_l, omega_s  row-major m-by-m DSMs
    omega_ls, omega_sl row-major m-by-m cross-team matrices
    interval_pmf      {"h": probability, ...}
    epsilon           improvement floor in (0, 1)
    cost_exponent_p   cost curvature, > 0
    initial_state     optional {"L": [...], "S": [...], "H": [...]}
    gamma             optional completion threshold

Unknown keys are rejected so that typos fail loudly. Serialization uses
Python's shortest round-trip float representation, so parse → dump → parse
is lossless.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import InvariantViolation, MalformedFile
from .model import DsmSet, FeedbackDistribution, ProjectState
from .optimize import CostModel

_REQUIRED_KEYS = (
    "m",
    "omega_l",
    "omega_s",
    "omega_ls",
    "omega_sl",
    "interval_pmf",
    "epsilon",
    "cost_exponent_p",
)
_OPTIONAL_KEYS = ("initial_state", "gamma")


@dataclass(frozen=True)
class ProjectDefaults:
    """Optional per-project conventions carried alongside the model."""

    initial_state: ProjectState | None = None
    gamma: float | None = None


@dataclass(frozen=True)
class ProjectFile:
    """Validated contents of a project file."""

    dsms: DsmSet
    dist: FeedbackDistribution
    cost: CostModel
    defaults: ProjectDefaults

    @property
    def m(self) -> int:
        return self.dsms.m

    @classmethod
    def load(cls, path: str | Path) -> "ProjectFile":
        path = Path(path)
        # unreadable paths stay OSError; MalformedFile means the content is wrong
        text = path.read_text(encoding="utf-8")
        try:
            obj = json.loads(text)
        except json.JSONDecodeError as exc:
            raise MalformedFile(f"{path}: invalid JSON: {exc}") from exc
        return cls.from_mapping(obj)

    @classmethod
    def from_mapping(cls, obj) -> "ProjectFile":
        if not isinstance(obj, dict):
            raise MalformedFile("top level must be a JSON object")
        for key in obj:
            if key not in _REQUIRED_KEYS and key not in _OPTIONAL_KEYS:
                raise MalformedFile(f"unknown key {key!r}")
        for key in _REQUIRED_KEYS:
            if key not in obj:
                raise MalformedFile(f"missing key {key!r}")
        m = obj["m"]
        if isinstance(m, bool) or not isinstance(m, int) or m < 1:
            raise InvariantViolation("m", "must be a positive integer")
        mats = {
            name: _matrix(obj[name], name, m)
            for name in ("omega_l", "omega_s", "omega_ls", "omega_sl")
        }
        dsms = DsmSet(mats["omega_l"], mats["omega_s"], mats["omega_ls"], mats["omega_sl"])
        dist = FeedbackDistribution(_pmf(obj["interval_pmf"]))
        epsilon = _number(obj["epsilon"], "epsilon")
        p = _number(obj["cost_exponent_p"], "cost_exponent_p")
        cost = CostModel.from_dsms(dsms, epsilon, p)
        initial = None
        if "initial_state" in obj:
            initial = _initial_state(obj["initial_state"], m)
        gamma = None
        if "gamma" in obj:
            gamma = _number(obj["gamma"], "gamma")
            if gamma < 0:
                raise InvariantViolation("gamma", "must be >= 0")
        return cls(dsms, dist, cost, ProjectDefaults(initial, gamma))

    def to_mapping(self) -> dict:
        d = self.dsms
        out = {
            "m": d.m,
            "omega_l": _listify(d.omega_l),
            "omega_s": _listify(d.omega_s),
            "omega_ls": _listify(d.omega_ls),
            "omega_sl": _listify(d.omega_sl),
            "interval_pmf": {str(h): float(p) for h, p in self.dist.pmf.items()},
            "epsilon": float(self.cost.epsilon),
            "cost_exponent_p": float(self.cost.p),
        }
        if self.defaults.initial_state is not None:
            s = self.defaults.initial_state
            out["initial_state"] = {
                "L": [float(v) for v in s.l],
                "S": [float(v) for v in s.s],
                "H": [float(v) for v in s.h],
            }
        if self.defaults.gamma is not None:
            out["gamma"] = float(self.defaults.gamma)
        return out

    def dump(self, path: str | Path) -> None:
        Path(path).write_text(serialize_project(self), encoding="utf-8")


def _number(value, field: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise InvariantViolation(field, "must be a number")
    return float(value)


def _matrix(value, field: str, m: int) -> np.ndarray:
    if not isinstance(value, list) or len(value) != m:
        raise InvariantViolation(field, f"must be a {m}x{m} row-major matrix")
    out = np.empty((m, m))
    for i, row in enumerate(value):
        if not isinstance(row, list) or len(row) != m:
            raise InvariantViolation(f"{field}[{i}]", f"must be a row of {m} numbers")
        for j, entry in enumerate(row):
            out[i, j] = _number(entry, f"{field}[{i}][{j}]")
    return out


def _pmf(value) -> dict[int, float]:
    if not isinstance(value, dict):
        raise InvariantViolation("interval_pmf", "must be an object mapping interval to probability")
    out = {}
    for key, prob in value.items():
        try:
            h = int(key)
        except (TypeError, ValueError):
            raise InvariantViolation("interval_pmf", f"interval {key!r} must be an integer") from None
        out[h] = _number(prob, f"interval_pmf[{key}]")
    return out


def _initial_state(value, m: int) -> ProjectState:
    if not isinstance(value, dict):
        raise InvariantViolation("initial_state", "must be an object with keys L, S, H")
    for key in value:
        if key not in ("L", "S", "H"):
            raise MalformedFile(f"unknown key 'initial_state.{key}'")
    parts = {}
    for key in ("L", "S", "H"):
        if key not in value:
            raise InvariantViolation(f"initial_state.{key}", "missing")
        vec = value[key]
        if not isinstance(vec, list) or len(vec) != m:
            raise InvariantViolation(f"initial_state.{key}", f"must be a list of {m} numbers")
        parts[key] = [_number(v, f"initial_state.{key}[{i}]") for i, v in enumerate(vec)]
    return ProjectState(parts["L"], parts["S"], parts["H"])


def _listify(mat: np.ndarray) -> list[list[float]]:
    return [[float(v) for v in row] for row in mat]


def parse_project(path: str | Path) -> tuple[DsmSet, FeedbackDistribution, CostModel, ProjectDefaults]:
    """Load and validate a project file; every domain invariant is checked
    here so downstream code can assume a consistent model."""
    pf = ProjectFile.load(path)
    return pf.dsms, pf.dist, pf.cost, pf.defaults


def serialize_project(pf: ProjectFile) -> str:
    """Canonical JSON text: sorted keys, lossless floats, trailing newline."""
    return json.dumps(pf.to_mapping(), indent=2, sort_keys=True) + "\n"
