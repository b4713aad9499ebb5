"""JSON scenario files and report serialization.

Matrices are row-major nested lists.  Floats are written with ``repr``
precision so a file round-trips bit-for-bit.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import numpy as np

from .model import LAWS, CostSpec, StochasticSystem, StochasticTerm, validate


class ScenarioError(ValueError):
    pass


@dataclass
class Scenario:
    system: StochasticSystem
    cost: CostSpec
    x0: np.ndarray
    horizon: int | None = None
    seed: int | None = None
    trials: int | None = None
    extras: dict = field(default_factory=dict)


def _matrix(value, where: str, shape=None) -> np.ndarray:
    if not isinstance(value, list) or not value or not all(isinstance(row, list) for row in value):
        raise ScenarioError(f"{where}: expected a non-empty 2-D array")
    widths = {len(row) for row in value}
    if len(widths) != 1:
        raise ScenarioError(f"{where}: rows have different lengths {sorted(widths)}")
    try:
        arr = np.array(value, dtype=float)
    except (TypeError, ValueError) as exc:
        raise ScenarioError(f"{where}: non-numeric entry ({exc})") from None
    if not np.all(np.isfinite(arr)):
        raise ScenarioError(f"{where}: non-finite entry")
    if shape is not None and arr.shape != shape:
        raise ScenarioError(f"{where}: shape {arr.shape}, expected {shape}")
    return arr


def _require(doc: dict, key: str):
    if key not in doc:
        raise ScenarioError(f"missing required field {key!r}")
    return doc[key]


def scenario_from_dict(doc: dict[str, Any]) -> Scenario:
    if not isinstance(doc, dict):
        raise ScenarioError("top level must be a JSON object")
    blocks = _require(doc, "blocks")
    if not isinstance(blocks, list) or not blocks:
        raise ScenarioError("blocks: expected a non-empty list of {'n':..,'m':..}")
    try:
        n_dims = [int(b["n"]) for b in blocks]
        m_dims = [int(b["m"]) for b in blocks]
    except (KeyError, TypeError, ValueError):
        raise ScenarioError("blocks: every entry needs integer 'n' and 'm'") from None
    if min(n_dims + m_dims) < 1:
        raise ScenarioError("blocks: dimensions must be >= 1")
    n, m = sum(n_dims), sum(m_dims)
    a_bar = _matrix(_require(doc, "a_bar"), "a_bar", (n, n))
    b_raw = _require(doc, "b_blocks")
    if not isinstance(b_raw, list) or len(b_raw) != len(blocks):
        raise ScenarioError(f"b_blocks: expected {len(blocks)} matrices")
    b_blocks = [_matrix(b, f"b_blocks[{i}]", (n_dims[i], m_dims[i])) for i, b in enumerate(b_raw)]
    terms = []
    for k, t in enumerate(doc.get("terms", [])):
        where = f"terms[{k}]"
        if not isinstance(t, dict):
            raise ScenarioError(f"{where}: expected an object")
        sub = t.get("subsystem")
        if not isinstance(sub, int) or not 0 <= sub < len(blocks):
            raise ScenarioError(f"{where}.subsystem: expected an integer in [0, {len(blocks) - 1}]")
        var = t.get("variance")
        if not isinstance(var, (int, float)) or var < 0:
            raise ScenarioError(f"{where}.variance: expected a nonnegative number")
        law = t.get("law", "gaussian")
        if law not in LAWS:
            raise ScenarioError(f"{where}.law: expected one of {LAWS}")
        terms.append(StochasticTerm(sub, _matrix(t.get("basis"), f"{where}.basis", (n, n)), float(var), law))
    sys = StochasticSystem.build(n_dims, m_dims, a_bar, b_blocks, terms)

    q_raw = doc.get("q", "identity")
    q = np.eye(n) if q_raw == "identity" else _matrix(q_raw, "q", (n, n))
    r_raw = doc.get("r_blocks", "identity")
    if r_raw == "identity":
        cost = CostSpec(q, np.eye(m))
    else:
        if not isinstance(r_raw, list) or len(r_raw) != len(blocks):
            raise ScenarioError(f"r_blocks: expected {len(blocks)} matrices or 'identity'")
        r_blocks = [_matrix(r, f"r_blocks[{i}]", (m_dims[i], m_dims[i])) for i, r in enumerate(r_raw)]
        cost = CostSpec.from_blocks(q, r_blocks)
    if "q_terminal" in doc:
        cost = CostSpec(cost.q, cost.r, _matrix(doc["q_terminal"], "q_terminal", (n, n)))

    x0_raw = doc.get("x0", [1.0] * n)
    try:
        x0 = np.array(x0_raw, dtype=float)
    except (TypeError, ValueError):
        raise ScenarioError("x0: expected a list of numbers") from None
    if x0.shape != (n,):
        raise ScenarioError(f"x0: length {x0.size}, expected {n}")

    problems = validate(sys, cost, "finite")
    if problems:
        raise ScenarioError("; ".join(problems))
    opt = {}
    for key in ("horizon", "seed", "trials"):
        if key in doc:
            if not isinstance(doc[key], int):
                raise ScenarioError(f"{key}: expected an integer")
            opt[key] = doc[key]
    return Scenario(sys, cost, x0, **opt)


def load_scenario(path) -> Scenario:
    text = Path(path).read_text()
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ScenarioError(f"{path}: invalid JSON at line {exc.lineno}, column {exc.colno}: {exc.msg}") from None
    try:
        return scenario_from_dict(doc)
    except ScenarioError as exc:
        raise ScenarioError(f"{path}: {exc}") from None


def _rows(a) -> list:
    return np.asarray(a, dtype=float).tolist()


def scenario_to_dict(sc: Scenario) -> dict[str, Any]:
    sys, cost = sc.system, sc.cost
    st = sys.structure
    doc: dict[str, Any] = {
        "blocks": [{"n": n, "m": m} for n, m in zip(st.state_dims, st.input_dims)],
        "a_bar": _rows(sys.a_bar),
        "b_blocks": [_rows(b) for b in sys.b_blocks],
        "terms": [
            {"subsystem": t.subsystem, "basis": _rows(t.basis), "variance": t.variance, "law": t.law}
            for t in sys.terms
        ],
        "q": _rows(cost.q),
        "r_blocks": [_rows(cost.r_block(st, i)) for i in range(st.N)],
        "x0": _rows(sc.x0),
    }
    if cost.q_terminal is not None:
        doc["q_terminal"] = _rows(cost.q_terminal)
    for key in ("horizon", "seed", "trials"):
        val = getattr(sc, key)
        if val is not None:
            doc[key] = val
    return doc


def dump_json(doc, path=None) -> str:
    text = json.dumps(doc, indent=2)
    if path is not None:
        Path(path).write_text(text + "\n")
    return text
