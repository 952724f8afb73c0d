"""JSON documents for instances, strategies and results.

Floats are written with Python's shortest round-trip representation, so
``read(write(x))`` reproduces every value bit for bit.  Modes are 1-based in
documents.
"""

from __future__ import annotations

import json
import os
import tempfile
from functools import lru_cache
from importlib import resources
from pathlib import Path
from typing import Optional, Union

import jsonschema
import numpy as np

from .model import SwitchingModel
from .strategy import Strategy, strategy_from_events
from .tree import Node, ScenarioTree, validate_tree

INSTANCE_FORMAT = "optswitch-instance"
STRATEGY_FORMAT = "optswitch-strategy"
Anchor = tuple[int, int]  # (node, 0-based mode)


class DocumentError(ValueError):
    """Malformed document: bad JSON, schema mismatch or inconsistent sizes."""


@lru_cache(maxsize=None)
def load_schema(name: str) -> dict:
    text = resources.files("optswitch").joinpath("schemas", f"{name}.schema.json").read_text()
    return json.loads(text)


def _parse(text: str, schema: str) -> dict:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise DocumentError(f"not valid JSON: {exc}") from None
    try:
        jsonschema.validate(doc, load_schema(schema))
    except jsonschema.ValidationError as exc:
        path = "/".join(str(p) for p in exc.absolute_path)
        raise DocumentError(f"schema violation at '{path}': {exc.message}") from None
    return doc


def _dump(doc: dict) -> str:
    return json.dumps(doc, indent=2, allow_nan=False) + "\n"


def _rows(arr: np.ndarray) -> list:
    return [[float(x) for x in row] for row in arr]


# ---------------------------------------------------------------- instances

def instance_to_dict(model: SwitchingModel, anchor: Optional[Anchor] = None,
                     name: Optional[str] = None, description: Optional[str] = None) -> dict:
    tree = model.tree
    doc: dict = {"format": INSTANCE_FORMAT, "version": 1}
    if name:
        doc["name"] = name
    if description:
        doc["description"] = description
    doc["tree"] = {
        "horizon": tree.horizon,
        "nodes": [
            {"id": nd.id, "time": nd.time, "parent": nd.parent, "branch_prob": float(nd.branch_prob)}
            for nd in tree.nodes
        ],
    }
    doc["model"] = {
        "num_modes": model.num_modes,
        "psi": _rows(model.psi),
        "gamma": [_rows(g) for g in model.gamma],
        "terminal": [{"node": int(v), "values": [float(x) for x in model.terminal[v]]}
                     for v in tree.leaves],
    }
    if anchor is not None:
        doc["anchor"] = {"node": int(anchor[0]), "mode": int(anchor[1]) + 1}
    return doc


def write_instance(model: SwitchingModel, anchor: Optional[Anchor] = None,
                   name: Optional[str] = None, description: Optional[str] = None) -> str:
    return _dump(instance_to_dict(model, anchor, name, description))


def _array(data, shape: tuple, what: str) -> np.ndarray:
    try:
        arr = np.array(data, dtype=float)
    except ValueError:
        raise DocumentError(f"{what} is ragged") from None
    if arr.shape != shape:
        raise DocumentError(f"{what} has shape {arr.shape}, expected {shape}")
    return arr


def read_instance(text: str) -> tuple[SwitchingModel, Optional[Anchor], dict]:
    """Parse an instance document; returns ``(model, anchor, document)``.

    The tree and model are not validated beyond what is needed to build the
    arrays.
    """
    doc = _parse(text, "instance")
    tnode = doc["tree"]
    tree = ScenarioTree(
        tnode["horizon"],
        tuple(Node(d["id"], d["time"], d["parent"], float(d["branch_prob"])) for d in tnode["nodes"]),
    )
    n = len(tree)
    mdoc = doc["model"]
    m = mdoc["num_modes"]
    psi = _array(mdoc["psi"], (n, m), "psi")
    gamma = _array(mdoc["gamma"], (n, m, m), "gamma")
    terminal = np.zeros((n, m))
    seen = set()
    for entry in mdoc["terminal"]:
        v = entry["node"]
        if v >= n:
            raise DocumentError(f"terminal entry for unknown node {v}")
        if v in seen:
            raise DocumentError(f"duplicate terminal entry for node {v}")
        seen.add(v)
        terminal[v] = _array(entry["values"], (m,), f"terminal values of node {v}")
    if not validate_tree(tree) and seen != set(int(v) for v in tree.leaves):
        raise DocumentError(
            f"terminal entries {sorted(seen)} do not match leaves {tree.leaves.tolist()}")

    anchor = None
    if "anchor" in doc:
        node, mode = doc["anchor"]["node"], doc["anchor"]["mode"]
        if node >= n or mode > m:
            raise DocumentError(f"anchor ({node}, {mode}) out of range")
        anchor = (node, mode - 1)
    return SwitchingModel(tree, psi, gamma, terminal), anchor, doc


# ---------------------------------------------------------------- strategies

def strategy_to_dict(strategy: Strategy) -> dict:
    return {
        "format": STRATEGY_FORMAT,
        "version": 1,
        "start": {"node": strategy.start_node, "mode": strategy.start_mode + 1},
        "events": events_to_list(strategy),
    }


def events_to_list(strategy: Strategy) -> list:
    return [{"node": v, "from": a + 1, "to": b + 1} for v, a, b in strategy.events()]


def read_strategy(text: str, model: SwitchingModel) -> Strategy:
    """Parse a strategy document against ``model``.

    Raises :class:`DocumentError` for malformed documents and
    :class:`~optswitch.strategy.InadmissibleStrategyError` for well-formed but
    inadmissible strategies.
    """
    doc = _parse(text, "strategy")
    n, m = len(model.tree), model.num_modes
    node, mode = doc["start"]["node"], doc["start"]["mode"]
    if node >= n or mode > m:
        raise DocumentError(f"start ({node}, {mode}) out of range")
    events = []
    for e in doc["events"]:
        if e["node"] >= n or e["from"] > m or e["to"] > m:
            raise DocumentError(f"event {e} out of range")
        events.append((e["node"], e["from"] - 1, e["to"] - 1))
    return strategy_from_events(model.tree, node, mode - 1, events, m)


def write_strategy(strategy: Strategy) -> str:
    return _dump(strategy_to_dict(strategy))


# ---------------------------------------------------------------- files

def read_text(path: Union[str, Path]) -> str:
    try:
        return Path(path).read_text()
    except OSError as exc:
        raise DocumentError(f"cannot read {path}: {exc.strerror}") from None


def write_atomic(path: Union[str, Path], text: str) -> None:
    path = Path(path)
    fd, tmp = tempfile.mkstemp(dir=path.parent or ".", prefix=f".{path.name}.")
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def dump_result(doc: dict) -> str:
    return _dump(doc)


def shipped_instances() -> list[str]:
    root = resources.files("optswitch").joinpath("instances")
    return sorted(p.name[: -len(".json")] for p in root.iterdir() if p.name.endswith(".json"))


def shipped_instance_text(name: str) -> str:
    return resources.files("optswitch").joinpath("instances", f"{name}.json").read_text()


def load_shipped(name: str) -> tuple[SwitchingModel, Optional[Anchor], dict]:
    return read_instance(shipped_instance_text(name))
