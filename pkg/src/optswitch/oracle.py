"""Exhaustive certification on small instances.

Strategies are enumerated as per-node mode assignments, which correspond
one-to-one to canonical admissible controls; stopping times are enumerated as
stop-sets.  Nothing here calls the backward recursions.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from .model import SwitchingModel
from .snell import ProcessField
from .solver import ValueField
from .strategy import Strategy, evaluate, evaluate_assignments
from .tree import VALUE_TOL, ScenarioTree, StoppingRule

CHUNK = 1 << 15


@dataclass(frozen=True)
class EnumerationBudget:
    max_assignments: int = 10**7
    max_stopping_rules: int = 10**5
    max_horizon: int = 4
    max_modes: int = 3
    max_branching: int = 3


class BudgetExceededError(ValueError):
    def __init__(self, what: str, required: int, allowed: int):
        self.required = required
        self.allowed = allowed
        super().__init__(f"{what}: {required} needed, budget allows {allowed}")


def _check_limits(model: SwitchingModel, budget: EnumerationBudget) -> None:
    tree = model.tree
    branching = max((len(c) for c in tree.children), default=0)
    if tree.horizon > budget.max_horizon:
        raise BudgetExceededError("horizon", tree.horizon, budget.max_horizon)
    if model.num_modes > budget.max_modes:
        raise BudgetExceededError("modes", model.num_modes, budget.max_modes)
    if branching > budget.max_branching:
        raise BudgetExceededError("branching", branching, budget.max_branching)


def count_assignments(tree: ScenarioTree, start_node: int, num_modes: int) -> int:
    inner = [v for v in tree.subtree(start_node) if not tree.is_leaf(v)]
    return num_modes ** len(inner)


def enumerate_optimum(
    model: SwitchingModel,
    start_node: int,
    start_mode: int,
    budget: EnumerationBudget = EnumerationBudget(),
) -> tuple[float, Strategy]:
    """Best performance index over every adapted mode assignment from the start.

    Ties go to the lexicographically smallest assignment (inner nodes in id
    order).  The returned value is the index of the returned strategy as
    computed by :func:`~optswitch.strategy.evaluate`.
    """
    _check_limits(model, budget)
    tree = model.tree
    m = model.num_modes
    inner = np.array([v for v in tree.subtree(start_node) if not tree.is_leaf(v)], dtype=int)
    total = m ** len(inner)
    if total > budget.max_assignments:
        raise BudgetExceededError("mode assignments", total, budget.max_assignments)

    place = m ** np.arange(len(inner) - 1, -1, -1, dtype=np.int64)
    best_score, best_index = -np.inf, 0
    for lo in range(0, total, CHUNK):
        idx = np.arange(lo, min(lo + CHUNK, total), dtype=np.int64)
        modes = np.full((len(idx), len(tree)), -1, dtype=int)
        modes[:, inner] = (idx[:, None] // place[None, :]) % m
        scores = evaluate_assignments(model, start_node, start_mode, modes)
        k = int(np.argmax(scores))
        if scores[k] > best_score:
            best_score, best_index = float(scores[k]), int(idx[k])

    modes = np.full(len(tree), -1, dtype=int)
    modes[inner] = (best_index // place) % m
    strategy = Strategy(tree, start_node, start_mode, modes)
    return evaluate(strategy, model), strategy


def count_stopping_rules(tree: ScenarioTree, anchor: int) -> int:
    """Number of stopping times at or after ``anchor``: ``N(v) = 1 + prod N(child)``."""
    counts: dict[int, int] = {}
    for v in sorted(tree.subtree(anchor), key=lambda k: -tree.times[k]):
        kids = tree.children[v]
        counts[v] = 1 if not kids else 1 + int(np.prod([counts[c] for c in kids], dtype=object))
    return counts[anchor]


def iter_stop_sets(tree: ScenarioTree, node: int):
    """Every stop-set (antichain cutting all paths) of the subtree at ``node``."""
    yield (node,)
    kids = tree.children[node]
    if kids:
        for combo in itertools.product(*(list(iter_stop_sets(tree, c)) for c in kids)):
            yield tuple(v for part in combo for v in part)


def enumerate_stopping_optimum(
    U: ProcessField, anchor: int, budget: EnumerationBudget = EnumerationBudget()
) -> float:
    """Max of ``E[U_tau | F_anchor]`` over every stopping time at or after ``anchor``."""
    tree = U.tree
    count = count_stopping_rules(tree, anchor)
    if count > budget.max_stopping_rules:
        raise BudgetExceededError("stopping rules", count, budget.max_stopping_rules)
    best = -np.inf
    for stops in iter_stop_sets(tree, anchor):
        value = 0.0
        for path in tree.paths_from(anchor):
            hit = next(int(v) for v in path if v in stops)
            value += tree.relative_measure(anchor)[path[-1]] * U.values[hit]
        best = max(best, value)
    return float(best)


def stopping_rules(tree: ScenarioTree, anchor: int):
    for stops in iter_stop_sets(tree, anchor):
        yield StoppingRule.from_nodes(tree, anchor, stops)


def mixed_mode_snell_check(
    vf: ValueField,
    tau: StoppingRule,
    iota: np.ndarray,
    gain: str = "explicit",
    tol: float = VALUE_TOL,
) -> bool:
    """After ``tau``, is ``y_hat`` in mode ``iota[tau]`` the Snell envelope of
    the matching gain?

    ``gain="explicit"`` mixes ``u_hat``; ``gain="implicit"`` mixes
    ``u_implicit`` shifted by the accumulated running reward.  The envelope is
    recomputed by backward recursion on each stop node's subtree.
    """
    from .solver import accumulated_rewards

    model = vf.model
    tree = model.tree
    if gain == "explicit":
        gains = vf.u_hat
    elif gain == "implicit":
        gains = vf.u_implicit + accumulated_rewards(model)
    else:
        raise ValueError(f"unknown gain {gain!r}")

    for s in tau.stop_nodes(tree):
        j = int(iota[s])
        members = tree.subtree(s)
        z = {}
        for v in sorted(members, key=lambda k: -tree.times[k]):
            if tree.is_leaf(v):
                z[v] = gains[v, j]
            else:
                cont = sum(tree.probs[c] * z[c] for c in tree.children[v])
                z[v] = max(gains[v, j], cont)
        if any(abs(z[v] - vf.y_hat[v, j]) > tol for v in members):
            return False
    return True
