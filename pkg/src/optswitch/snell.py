"""Snell envelopes of adapted processes on a scenario tree."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .tree import VALUE_TOL, ScenarioTree, StoppingRule, expectation_field

EQ_TOL = 1e-9


@dataclass(frozen=True, eq=False)
class ProcessField:
    """An adapted real process: one value per node."""

    tree: ScenarioTree
    values: np.ndarray

    def __post_init__(self) -> None:
        values = np.asarray(self.values, dtype=float)
        if values.shape != (len(self.tree),):
            raise ValueError(f"expected {len(self.tree)} node values, got shape {values.shape}")
        if not np.all(np.isfinite(values)):
            raise ValueError("process values must be finite")
        object.__setattr__(self, "values", values)


def snell_envelope(U: ProcessField) -> ProcessField:
    """Backward recursion ``Z_T = U_T``, ``Z_t = max(U_t, E[Z_{t+1} | F_t])``."""
    tree = U.tree
    z = U.values.copy()
    for t in range(tree.horizon - 1, -1, -1):
        level = tree.levels[t]
        inner = level[[bool(tree.children[v]) for v in level]]
        if inner.size == 0:
            continue
        cont = _level_expectation(tree, z, inner)
        z[inner] = np.maximum(U.values[inner], cont)
    return ProcessField(tree, z)


def _level_expectation(tree: ScenarioTree, values: np.ndarray, nodes: np.ndarray) -> np.ndarray:
    out = np.zeros(len(nodes))
    for k, v in enumerate(nodes):
        acc = 0.0
        for c in tree.children[v]:
            acc += tree.probs[c] * values[c]
        out[k] = acc
    return out


def optimal_stopping_time(
    U: ProcessField, Z: ProcessField, anchor: int, eq_tol: float = EQ_TOL
) -> StoppingRule:
    """First node at or after ``anchor`` on each path where ``Z == U``.

    Ties stop.  The rule is total because ``Z = U`` at every leaf.
    """
    tree = U.tree
    stop = np.zeros(len(tree), dtype=bool)
    stack = [anchor]
    while stack:
        v = stack.pop()
        if abs(Z.values[v] - U.values[v]) <= eq_tol or tree.is_leaf(v):
            stop[v] = True
        else:
            stack.extend(tree.children[v])
    return StoppingRule(anchor, stop)


def expected_stopped_value(U: ProcessField, rule: StoppingRule) -> float:
    """``E[U_tau | F_anchor]`` summed over the stop atoms."""
    rel = U.tree.relative_measure(rule.anchor)
    return float(sum(rel[s] * U.values[s] for s in rule.stop_nodes(U.tree)))


def check_stopped_martingale(
    U: ProcessField, Z: ProcessField, anchor: int, tol: float = VALUE_TOL
) -> bool:
    """True iff ``Z`` has the martingale property strictly before the optimal stop."""
    tree = U.tree
    rule = optimal_stopping_time(U, Z, anchor)
    stack = [anchor]
    while stack:
        v = stack.pop()
        if rule.stop[v]:
            continue
        cont = 0.0
        for c in tree.children[v]:
            cont += tree.probs[c] * Z.values[c]
        if abs(Z.values[v] - cont) > tol:
            return False
        stack.extend(tree.children[v])
    return True


def is_supermartingale(Z: ProcessField, tol: float = VALUE_TOL) -> bool:
    cond = expectation_field(Z.tree, Z.values)
    inner = Z.tree.inner
    return bool(np.all(Z.values[inner] >= cond[inner] - tol))


def dominates(Z: ProcessField, U: ProcessField, tol: float = 0.0) -> bool:
    return bool(np.all(Z.values >= U.values - tol))
