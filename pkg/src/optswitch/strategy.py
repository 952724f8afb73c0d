"""Admissible switching controls and their performance index.

A control is stored canonically as the active mode at every node of the
anchor's subtree with time < T.  The ``(tau_n, iota_n)`` sequence form (a list
of stopping rules with per-node target modes) is an import/export view.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .model import InvalidModelError, SwitchingModel, validate_model
from .tree import ScenarioTree, StoppingRule, Violation, validate_stopping_rule

# one (tau_n, iota_n) pair: iota_n is read at the tau_n node of each path
RawSwitch = tuple[StoppingRule, np.ndarray]


@dataclass(frozen=True, eq=False)
class Strategy:
    tree: ScenarioTree = field(repr=False)
    start_node: int
    start_mode: int
    modes: np.ndarray = field(repr=False)  # -1 outside the subtree and at leaves

    def mode_at(self, node: int) -> int:
        return int(self.modes[node])

    def previous_mode(self, node: int) -> int:
        """Mode in force just before the decision at ``node``."""
        if node == self.start_node:
            return self.start_mode
        return int(self.modes[self.tree.parents[node]])

    def events(self) -> list[tuple[int, int, int]]:
        """Switches as ``(node, from_mode, to_mode)``, sorted by node id."""
        out = []
        for v in self.tree.subtree(self.start_node):
            if self.modes[v] >= 0 and self.modes[v] != self.previous_mode(v):
                out.append((int(v), self.previous_mode(v), int(self.modes[v])))
        return out

    def _path(self, leaf: int) -> np.ndarray:
        paths = self.tree.paths_from(self.start_node)
        row = np.flatnonzero(paths[:, -1] == leaf)
        if row.size == 0:
            raise ValueError(f"leaf {leaf} is not below node {self.start_node}")
        return paths[row[0]]

    def switch_nodes(self, leaf: int) -> list[int]:
        """Nodes where the path to ``leaf`` switches (the tau_n < T)."""
        path = self._path(leaf)
        prev, out = self.start_mode, []
        for v in path[:-1]:
            if self.modes[v] != prev:
                out.append(int(v))
            prev = self.modes[v]
        return out

    def num_switches(self, leaf: int) -> int:
        return len(self.switch_nodes(leaf))

    def last_mode(self, leaf: int) -> int:
        """Last mode switched to before T on the path to ``leaf``."""
        path = self._path(leaf)
        return self.start_mode if len(path) == 1 else int(self.modes[path[-2]])

    def equals(self, other: "Strategy") -> bool:
        return (
            self.start_node == other.start_node
            and self.start_mode == other.start_mode
            and np.array_equal(self.modes, other.modes)
        )

    def to_raw(self, num_modes: int) -> list[RawSwitch]:
        """Export as ``(tau_n, iota_n)``; paths with fewer switches are padded with
        ``tau_n = T`` and alternating modes."""
        tree = self.tree
        paths = tree.paths_from(self.start_node)
        per_path = [self.switch_nodes(int(p[-1])) for p in paths]
        count = max((len(s) for s in per_path), default=0)
        raw: list[RawSwitch] = []
        last = {int(p[-1]): self.start_mode for p in paths}
        for n in range(count):
            stop = np.zeros(len(tree), dtype=bool)
            iota = np.full(len(tree), -1, dtype=int)
            for path, sw in zip(paths, per_path):
                leaf = int(path[-1])
                if n < len(sw):
                    stop[sw[n]] = True
                    iota[sw[n]] = self.modes[sw[n]]
                    last[leaf] = int(self.modes[sw[n]])
                else:
                    stop[leaf] = True
                    iota[leaf] = next(k for k in range(num_modes) if k != last[leaf])
                    last[leaf] = int(iota[leaf])
            raw.append((StoppingRule(self.start_node, stop), iota))
        return raw


class InadmissibleStrategyError(ValueError):
    def __init__(self, violations):
        self.violations = list(violations)
        super().__init__("; ".join(str(v) for v in self.violations))


def check_admissibility(
    tree: ScenarioTree,
    raw: Sequence[RawSwitch],
    start_node: int,
    start_mode: int,
    num_modes: int,
) -> list[Violation]:
    """Check the admissibility conditions path by path.

    Measurability needs no check: ``iota_n`` is read at the ``tau_n`` node.
    """
    out: list[Violation] = []
    seen: set = set()

    def report(rule, message, node, modes=()):
        key = (rule, message, node)
        if key not in seen:
            seen.add(key)
            out.append(Violation(rule, message, node, modes))

    if not 0 <= start_mode < num_modes:
        report("mode-range", f"start mode {start_mode + 1} not in 1..{num_modes}", start_node)
    for n, (rule, iota) in enumerate(raw, start=1):
        if rule.anchor != start_node:
            report("anchor", f"tau_{n} anchored at {rule.anchor}, not at {start_node}", rule.anchor)
        for v in validate_stopping_rule(tree, rule):
            report("stopping-rule", f"tau_{n}: {v.message}", v.node)
    if out:
        return out

    T = tree.horizon
    times = tree.times
    for path in tree.paths_from(start_node):
        prev_node, prev_mode = start_node, start_mode
        for n, (rule, iota) in enumerate(raw, start=1):
            node = rule.stop_node_on_path(path)
            mode = int(iota[node])
            if times[node] < times[prev_node]:
                report("monotone", f"tau_{n} precedes tau_{n - 1}", node)
            if n >= 2 and node == prev_node and times[node] < T:
                report("double-switch", f"tau_{n - 1} = tau_{n} < T", node)
            if not 0 <= mode < num_modes:
                report("mode-range", f"iota_{n} = {mode + 1} not in 1..{num_modes}", node)
            elif mode == prev_mode:
                report("mode-repeat", f"iota_{n} = iota_{n - 1} = {mode + 1}", node, (mode,))
            prev_node, prev_mode = node, mode
    return out


def canonicalize(
    tree: ScenarioTree,
    raw: Sequence[RawSwitch],
    start_node: int,
    start_mode: int,
    num_modes: int,
) -> Strategy:
    """Per-node mode indicator of an admissible ``(tau_n, iota_n)`` sequence."""
    problems = check_admissibility(tree, raw, start_node, start_mode, num_modes)
    if problems:
        raise InadmissibleStrategyError(problems)
    T = tree.horizon
    modes = np.full(len(tree), -1, dtype=int)
    for path in tree.paths_from(start_node):
        switches = {}
        for rule, iota in raw:
            node = rule.stop_node_on_path(path)
            if tree.times[node] < T:
                switches[node] = int(iota[node])
        current = start_mode
        for v in path[:-1]:
            current = switches.get(int(v), current)
            modes[v] = current
    return Strategy(tree, start_node, start_mode, modes)


def strategy_from_events(
    tree: ScenarioTree,
    start_node: int,
    start_mode: int,
    events: Sequence[tuple[int, int, int]],
    num_modes: int,
) -> Strategy:
    """Build a strategy from ``(node, from_mode, to_mode)`` switch events.

    Events at time-T nodes are accepted and dropped.  Raises
    :class:`InadmissibleStrategyError` on a double switch, a mode repeat, or a
    ``from_mode`` that does not match the mode in force.
    """
    problems: list[Violation] = []
    sub = set(int(v) for v in tree.subtree(start_node))
    by_node: dict[int, list[tuple[int, int]]] = {}
    for node, a, b in events:
        if node not in sub:
            problems.append(Violation("event", f"event node not below start node {start_node}", node))
            continue
        by_node.setdefault(node, []).append((a, b))
    if problems:
        raise InadmissibleStrategyError(problems)

    paths = tree.paths_from(start_node)
    per_path: list[list[tuple[int, int, int]]] = []
    for path in paths:
        current = start_mode
        seq = []
        for v in path:
            for a, b in by_node.get(int(v), []):
                if a != current:
                    problems.append(Violation(
                        "event-from",
                        f"event says from mode {a + 1} but mode {current + 1} is active", int(v)))
                seq.append((int(v), a, b))
                current = b
        per_path.append(seq)
    if problems:
        raise InadmissibleStrategyError(sorted(set(problems), key=lambda x: (x.node, x.message)))

    count = max((len(s) for s in per_path), default=0)
    raw: list[RawSwitch] = []
    last = [start_mode] * len(paths)
    for n in range(count):
        stop = np.zeros(len(tree), dtype=bool)
        iota = np.full(len(tree), -1, dtype=int)
        for r, (path, seq) in enumerate(zip(paths, per_path)):
            if n < len(seq):
                node, _, b = seq[n]
                if stop[node] and iota[node] != b:
                    problems.append(Violation("event", "conflicting events at one node", node))
                stop[node] = True
                iota[node] = b
                last[r] = b
            else:
                leaf = int(path[-1])
                stop[leaf] = True
                iota[leaf] = next(k for k in range(num_modes) if k != last[r])
                last[r] = int(iota[leaf])
        raw.append((StoppingRule(start_node, stop), iota))
    if problems:
        raise InadmissibleStrategyError(problems)
    return canonicalize(tree, raw, start_node, start_mode, num_modes)


def _check_match(strategy: Strategy, model: SwitchingModel) -> None:
    if strategy.tree is not model.tree and strategy.tree != model.tree:
        raise ValueError("strategy and model live on different trees")


def evaluate(strategy: Strategy, model: SwitchingModel) -> float:
    """Performance index ``J(alpha; t, i)`` conditional on the start node's atom."""
    _check_match(strategy, model)
    return float(evaluate_assignments(
        model, strategy.start_node, strategy.start_mode, strategy.modes[None, :])[0])


def evaluate_assignments(
    model: SwitchingModel, start_node: int, start_mode: int, modes: np.ndarray
) -> np.ndarray:
    """Vectorized performance index for a batch of per-node mode assignments.

    ``modes`` has shape ``(K, nodes)``; only rows' entries at inner nodes of the
    start node's subtree are read.  Each row is evaluated with the same
    elementwise operations, so a row's result does not depend on ``K``.
    """
    tree = model.tree
    paths = tree.paths_from(start_node)
    rel = tree.relative_measure(start_node)
    modes = np.asarray(modes)
    K = modes.shape[0]
    total = np.zeros(K)
    for path in paths:
        prev = np.full(K, start_mode, dtype=int)
        acc = np.zeros(K)
        for v in path[:-1]:
            u = modes[:, v]
            acc = acc + model.psi[v, u] - model.gamma[v, prev, u]
            prev = u
        acc = acc + model.terminal[path[-1], prev]
        total = total + rel[path[-1]] * acc
    return total


def evaluate_raw(
    model: SwitchingModel, raw: Sequence[RawSwitch], start_node: int, start_mode: int
) -> float:
    """Performance index computed literally from the ``(tau_n, iota_n)`` sequence.

    Mode indicator, switch count and last mode are rebuilt per path from their
    definitions; this route shares nothing with the canonical form.
    """
    tree = model.tree
    T = tree.horizon
    t0 = int(tree.times[start_node])
    rel = tree.relative_measure(start_node)
    total = 0.0
    for path in tree.paths_from(start_node):
        taus = [t0] + [int(tree.times[rule.stop_node_on_path(path)]) for rule, _ in raw]
        nodes = [start_node] + [rule.stop_node_on_path(path) for rule, _ in raw]
        iotas = [start_mode] + [int(iota[node]) for (_, iota), node in zip(raw, nodes[1:])]
        taus.append(T)  # implicit padding

        def node_at(s):
            return int(path[s - t0])

        running = 0.0
        for s in range(t0, T):
            u = sum(iotas[n] for n in range(len(iotas)) if taus[n] <= s < taus[n + 1])
            running += model.psi[node_at(s), u]
        if t0 == T:
            last = start_mode
        else:
            last = sum(iotas[n] for n in range(len(iotas)) if taus[n] < T and taus[n + 1] == T)
        costs = 0.0
        for n in range(1, len(iotas)):
            if taus[n] < T:
                costs += model.gamma[node_at(taus[n]), iotas[n - 1], iotas[n]]
        payoff = running + model.terminal[int(path[-1]), last] - costs
        total += rel[path[-1]] * payoff
    return total


def negate_for_minimization(model: SwitchingModel, validate: bool = True) -> SwitchingModel:
    """Model whose maximization solves the minimization of the original index.

    Rewards and costs are all negated.  For any valid model with at least one
    pair of modes this flips ``gamma[i,j] + gamma[j,i]`` negative, so the
    negated costs violate the triangle condition; that is reported as an
    :class:`InvalidModelError` unless ``validate=False``.
    """
    negated = model.replace(psi=-model.psi, gamma=-model.gamma, terminal=-model.terminal)
    if validate:
        problems = validate_model(negated)
        if problems:
            raise InvalidModelError(
                [Violation("negated", "negated model violates the switching-cost assumption")]
                + problems)
    return negated
