"""Backward induction for the coupled system of switching values.

``y[node, i]`` is the value of being in mode ``i`` at ``node`` before the
decision there.  The explicit scheme only looks one step ahead; the implicit
scheme resolves the coupled max at each node by fixed-point iteration.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np

from .model import SwitchingModel
from .snell import EQ_TOL, ProcessField, snell_envelope
from .strategy import Strategy, evaluate
from .tree import ScenarioTree


@dataclass(frozen=True, eq=False)
class ValueField:
    model: SwitchingModel
    y: np.ndarray           # value per (node, mode)
    u_implicit: np.ndarray  # best switch payoff now (terminal reward at leaves)
    u_hat: np.ndarray       # explicit gain, shifted by accumulated running reward
    y_hat: np.ndarray       # y shifted by accumulated running reward
    variant: str = "explicit"


class FixedPointError(RuntimeError):
    pass


def _children_expectation(tree: ScenarioTree, values: np.ndarray, nodes: np.ndarray) -> np.ndarray:
    out = np.zeros((len(nodes),) + values.shape[1:])
    for k, v in enumerate(nodes):
        for c in tree.children[v]:
            out[k] += tree.probs[c] * values[c]
    return out


def _inner_levels(tree: ScenarioTree):
    """Inner nodes of each time slice, from T-1 down to 0."""
    for t in range(tree.horizon - 1, -1, -1):
        level = tree.levels[t]
        yield level[[bool(tree.children[v]) for v in level]]


def _off_diagonal_max(cand: np.ndarray) -> np.ndarray:
    """``out[k, i] = max_{j != i} cand[k, i, j]``."""
    m = cand.shape[-1]
    masked = cand.copy()
    masked[:, np.arange(m), np.arange(m)] = -np.inf
    return masked.max(axis=2)


def backward_induction_explicit(model: SwitchingModel) -> ValueField:
    """Values from the one-step-ahead recursion.

    At each inner node and mode ``i``: the better of continuing in ``i``
    (running reward plus expected next value) and the best ``j != i`` reached by
    switching now and then continuing in ``j``.
    """
    model.check()
    tree = model.tree
    y = np.full((len(tree), model.num_modes), np.nan)
    y[tree.leaves] = model.terminal[tree.leaves]
    for nodes in _inner_levels(tree):
        cont = model.psi[nodes] + _children_expectation(tree, y, nodes)
        switch = _off_diagonal_max(-model.gamma[nodes] + cont[:, None, :])
        y[nodes] = np.maximum(switch, cont)
    return _assemble(model, y, "explicit")


def backward_induction_implicit(model: SwitchingModel) -> ValueField:
    """Values from the implicit recursion, solved node by node.

    The continuation values are fixed first; the coupled
    ``y_i = max(cont_i, max_{j != i}(y_j - gamma_ij))`` is then iterated from
    ``y = cont``.  Under the strict triangle condition the first pass already
    reaches the fixed point and the second confirms it.
    """
    model.check()
    tree = model.tree
    m = model.num_modes
    y = np.full((len(tree), m), np.nan)
    y[tree.leaves] = model.terminal[tree.leaves]
    for nodes in _inner_levels(tree):
        cont = model.psi[nodes] + _children_expectation(tree, y, nodes)
        cur = cont
        for _ in range(m):
            new = np.maximum(cont, _off_diagonal_max(-model.gamma[nodes] + cur[:, None, :]))
            if np.array_equal(new, cur):
                break
            cur = new
        else:
            raise FixedPointError(
                f"implicit recursion did not stabilize within {m} passes at time "
                f"{tree.times[nodes[0]]}")
        y[nodes] = cur
    return _assemble(model, y, "implicit")


def accumulated_rewards(model: SwitchingModel) -> np.ndarray:
    """Running reward summed over the strict ancestors of each node, per mode."""
    tree = model.tree
    cum = np.zeros((len(tree), model.num_modes))
    for level in tree.levels[1:]:
        parents = tree.parents[level]
        cum[level] = cum[parents] + model.psi[parents]
    return cum


def _assemble(model: SwitchingModel, y: np.ndarray, variant: str) -> ValueField:
    tree = model.tree
    inner, leaves = tree.inner, tree.leaves
    cum = accumulated_rewards(model)

    u = np.empty_like(y)
    u[leaves] = model.terminal[leaves]
    u[inner] = _off_diagonal_max(y[inner][:, None, :] - model.gamma[inner])

    y_hat = y + cum
    u_hat = np.empty_like(y)
    u_hat[leaves] = cum[leaves] + model.terminal[leaves]
    nxt = _children_expectation(tree, y_hat, inner)
    cand = -model.gamma[inner] - cum[inner][:, None, :] + nxt[:, None, :]
    u_hat[inner] = cum[inner] + _off_diagonal_max(cand)
    for arr in (y, u, y_hat, u_hat):
        arr.setflags(write=False)
    return ValueField(model, y, u, u_hat, y_hat, variant)


def extract_strategy(
    vf: ValueField, start_node: int, start_mode: int, eq_tol: float = EQ_TOL
) -> Strategy:
    """Optimal control from ``(start_node, start_mode)``.

    Along each path, stop in the active mode ``k`` at the first node where
    ``y[., k]`` meets the switch payoff ``u_implicit[., k]`` (ties stop), then
    switch to the smallest-index maximizer of ``y[., j] - gamma[., k, j]``.
    The new mode is first re-tested at the children: a second switch at the
    same node is never optimal under the strict triangle condition.  No
    switches are emitted at time T.
    """
    model = vf.model
    tree = model.tree
    modes = np.full(len(tree), -1, dtype=int)
    stack = [(start_node, start_mode)]
    while stack:
        v, k = stack.pop()
        if tree.is_leaf(v):
            continue
        if abs(vf.y[v, k] - vf.u_implicit[v, k]) <= eq_tol:
            payoff = vf.y[v] - model.gamma[v, k]
            payoff[k] = -np.inf
            k = int(np.argmax(payoff))
        modes[v] = k
        stack.extend((c, k) for c in tree.children[v])
    return Strategy(tree, start_node, start_mode, modes)


@dataclass(frozen=True)
class EquivalenceReport:
    explicit_vs_implicit: float
    snell_deviation: float
    verification_deviation: float

    @property
    def max_deviation(self) -> float:
        return max(self.explicit_vs_implicit, self.snell_deviation, self.verification_deviation)

    def to_dict(self) -> dict:
        return asdict(self)


def snell_deviation(vf: ValueField) -> float:
    """Largest gap between ``y_hat`` and the Snell envelope of ``u_hat``, over modes."""
    tree = vf.model.tree
    worst = 0.0
    for i in range(vf.model.num_modes):
        z = snell_envelope(ProcessField(tree, vf.u_hat[:, i])).values
        worst = max(worst, float(np.max(np.abs(z - vf.y_hat[:, i]))))
    return worst


def verification_deviation(vf: ValueField) -> float:
    """Largest ``|J(extracted strategy) - y|`` over every (node, mode) start."""
    worst = 0.0
    for v in range(len(vf.model.tree)):
        for i in range(vf.model.num_modes):
            j = evaluate(extract_strategy(vf, v, i), vf.model)
            worst = max(worst, float(abs(j - vf.y[v, i])))
    return worst


def equivalence_report(model: SwitchingModel) -> EquivalenceReport:
    explicit = backward_induction_explicit(model)
    implicit = backward_induction_implicit(model)
    return EquivalenceReport(
        explicit_vs_implicit=float(np.max(np.abs(explicit.y - implicit.y))),
        snell_deviation=snell_deviation(explicit),
        verification_deviation=verification_deviation(explicit),
    )
