"""Finite filtered probability spaces realized as scenario trees.

Time-``t`` nodes are the atoms of the sigma-algebra at time ``t``, so a
conditional expectation is a one-step probability-weighted sum over children
and an essential supremum is a per-node maximum.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Optional, Sequence

import numpy as np

PROB_TOL = 1e-12
VALUE_TOL = 1e-9


@dataclass(frozen=True)
class Violation:
    """One broken invariant, located at a node (and modes, when relevant).

    Modes are stored 0-based and printed 1-based.
    """

    rule: str
    message: str
    node: Optional[int] = None
    modes: tuple[int, ...] = ()

    def __str__(self) -> str:
        where = f"node {self.node}: " if self.node is not None else ""
        return f"[{self.rule}] {where}{self.message}"


@dataclass(frozen=True)
class Node:
    id: int
    time: int
    parent: Optional[int]
    branch_prob: float = 1.0


@dataclass(frozen=True)
class ScenarioTree:
    """Rooted tree of nodes over times ``0..horizon``.

    Construction never fails on bad data; call :func:`validate_tree` (or
    :meth:`check`) before using the derived arrays.
    """

    horizon: int
    nodes: tuple[Node, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "nodes", tuple(self.nodes))

    @classmethod
    def from_parents(
        cls,
        horizon: int,
        parents: Sequence[Optional[int]],
        probs: Optional[Sequence[float]] = None,
    ) -> "ScenarioTree":
        """Build a tree from a parent list; node times are inferred by depth."""
        n = len(parents)
        probs = [1.0] * n if probs is None else list(probs)
        times: list[int] = []
        for k, p in enumerate(parents):
            if p is None:
                times.append(0)
            elif 0 <= p < k:
                times.append(times[p] + 1)
            else:
                raise ValueError(f"parent of node {k} must precede it, got {p}")
        return cls(
            horizon,
            tuple(Node(k, times[k], parents[k], float(probs[k])) for k in range(n)),
        )

    def check(self) -> None:
        problems = validate_tree(self)
        if problems:
            raise InvalidTreeError(problems)

    # derived structure; valid trees only

    def __len__(self) -> int:
        return len(self.nodes)

    @property
    def root(self) -> int:
        return next(nd.id for nd in self.nodes if nd.parent is None)

    @cached_property
    def times(self) -> np.ndarray:
        return np.array([nd.time for nd in self.nodes], dtype=int)

    @cached_property
    def parents(self) -> np.ndarray:
        """Parent ids, ``-1`` at the root."""
        return np.array(
            [-1 if nd.parent is None else nd.parent for nd in self.nodes], dtype=int
        )

    @cached_property
    def probs(self) -> np.ndarray:
        return np.array([nd.branch_prob for nd in self.nodes], dtype=float)

    @cached_property
    def children(self) -> tuple[tuple[int, ...], ...]:
        kids: list[list[int]] = [[] for _ in self.nodes]
        for nd in self.nodes:
            if nd.parent is not None:
                kids[nd.parent].append(nd.id)
        return tuple(tuple(k) for k in kids)

    @cached_property
    def leaves(self) -> np.ndarray:
        return np.array([k for k, c in enumerate(self.children) if not c], dtype=int)

    @cached_property
    def inner(self) -> np.ndarray:
        return np.array([k for k, c in enumerate(self.children) if c], dtype=int)

    @cached_property
    def levels(self) -> tuple[np.ndarray, ...]:
        """Node ids grouped by time, ``levels[t]``."""
        return tuple(
            np.flatnonzero(self.times == t) for t in range(self.horizon + 1)
        )

    @cached_property
    def measure(self) -> np.ndarray:
        """Unconditional probability of every node (the atom's mass)."""
        out = np.empty(len(self.nodes))
        for level in self.levels:
            for k in level:
                p = self.parents[k]
                out[k] = 1.0 if p < 0 else out[p] * self.probs[k]
        return out

    def is_leaf(self, node: int) -> bool:
        return not self.children[node]

    def ancestors(self, node: int) -> list[int]:
        """Path from the root down to ``node`` inclusive."""
        path = [node]
        while self.parents[path[-1]] >= 0:
            path.append(int(self.parents[path[-1]]))
        return path[::-1]

    def subtree(self, node: int) -> np.ndarray:
        """All nodes at or below ``node``, in id order."""
        return self._subtree_info(node)[0]

    def relative_measure(self, node: int) -> np.ndarray:
        """Probability of every node conditional on ``node``; zero outside its subtree."""
        return self._subtree_info(node)[1]

    def paths_from(self, node: int) -> np.ndarray:
        """Node ids along every path from ``node`` to a leaf, shape (leaves, depth+1)."""
        return self._subtree_info(node)[2]

    def _subtree_info(self, node: int):
        cache = self.__dict__.setdefault("_subtree_cache", {})
        if node not in cache:
            members = [node]
            rel = np.zeros(len(self.nodes))
            rel[node] = 1.0
            paths: list[list[int]] = []
            stack = [[node]]
            while stack:
                path = stack.pop()
                kids = self.children[path[-1]]
                if not kids:
                    paths.append(path)
                for c in reversed(kids):
                    members.append(c)
                    rel[c] = rel[path[-1]] * self.probs[c]
                    stack.append(path + [c])
            paths.sort(key=lambda p: p[-1])
            cache[node] = (
                np.array(sorted(members), dtype=int),
                rel,
                np.array(paths, dtype=int),
            )
        return cache[node]


class InvalidTreeError(ValueError):
    def __init__(self, violations: Sequence[Violation]):
        self.violations = list(violations)
        super().__init__("; ".join(str(v) for v in self.violations))


def validate_tree(tree: ScenarioTree) -> list[Violation]:
    out: list[Violation] = []
    T = tree.horizon
    nodes = tree.nodes
    if not isinstance(T, (int, np.integer)) or T < 1:
        out.append(Violation("horizon", f"horizon must be an integer >= 1, got {T}"))
        return out
    if not nodes:
        out.append(Violation("root", "tree has no nodes"))
        return out
    for k, nd in enumerate(nodes):
        if nd.id != k:
            out.append(Violation("ids", f"node at position {k} has id {nd.id}", k))
    if out:
        return out

    roots = [nd.id for nd in nodes if nd.parent is None]
    if len(roots) != 1:
        out.append(Violation("root", f"expected exactly one root, found {len(roots)}"))
    for r in roots:
        if nodes[r].time != 0:
            out.append(Violation("root", f"root at time {nodes[r].time} != 0", r))
        if nodes[r].branch_prob != 1.0:
            out.append(Violation("root", "root branch_prob must be 1", r))

    n = len(nodes)
    kids: list[list[int]] = [[] for _ in nodes]
    for nd in nodes:
        p = nd.parent
        if p is None:
            continue
        if not (0 <= p < n) or p == nd.id:
            out.append(Violation("parent", f"unknown parent {p}", nd.id))
            continue
        kids[p].append(nd.id)
        if nd.time != nodes[p].time + 1:
            out.append(Violation(
                "time", f"time {nd.time} != parent time {nodes[p].time} + 1", nd.id))
        prob = nd.branch_prob
        if not np.isfinite(prob) or prob <= 0.0 or prob > 1.0:
            out.append(Violation("prob", f"branch_prob {prob} not in (0, 1]", nd.id))

    for nd in nodes:
        if not kids[nd.id]:
            if nd.time != T:
                out.append(Violation("leaf-time", f"leaf at time {nd.time} != T={T}", nd.id))
        else:
            total = sum(nodes[c].branch_prob for c in kids[nd.id])
            if abs(total - 1.0) > PROB_TOL:
                out.append(Violation("prob-sum", f"children probs sum {total!r} != 1", nd.id))
        if not 0 <= nd.time <= T:
            out.append(Violation("time", f"time {nd.time} outside 0..{T}", nd.id))
    if n < T + 1 and not any(v.rule == "leaf-time" for v in out):
        out.append(Violation("size", f"{n} nodes cannot span horizon {T}"))
    return out


def conditional_expectation(tree: ScenarioTree, values, node: int) -> float:
    """E[values at t+1 | atom ``node``]: the branch-probability-weighted child sum."""
    kids = tree.children[node]
    if not kids:
        raise ValueError(f"node {node} is a leaf: no children to condition on")
    total = 0.0
    for c in kids:
        total += tree.probs[c] * values[c]
    return total


def expectation_field(tree: ScenarioTree, values: np.ndarray) -> np.ndarray:
    """Apply the one-step conditional expectation at every inner node at once.

    ``values`` may carry trailing axes (e.g. one column per mode).  Leaf rows
    of the result are NaN.
    """
    values = np.asarray(values, dtype=float)
    out = np.zeros_like(values)
    nonroot = np.flatnonzero(tree.parents >= 0)
    weights = tree.probs[nonroot].reshape((-1,) + (1,) * (values.ndim - 1))
    np.add.at(out, tree.parents[nonroot], weights * values[nonroot])
    out[tree.leaves] = np.nan
    return out


def path_measure(tree: ScenarioTree, leaf: int) -> float:
    if tree.times[leaf] != tree.horizon or not tree.is_leaf(leaf):
        raise ValueError(f"node {leaf} is not a leaf at time T={tree.horizon}")
    p = 1.0
    for k in tree.ancestors(leaf)[1:]:
        p *= tree.probs[k]
    return p


@dataclass(frozen=True)
class StoppingRule:
    """A stopping time anchored at ``anchor``: per-node stop flags.

    Flags outside the anchor's subtree are ignored.  Per-node flags are
    adapted by construction.
    """

    anchor: int
    stop: np.ndarray = field(repr=False)

    def stop_nodes(self, tree: ScenarioTree) -> list[int]:
        """The first flagged node on every path below the anchor (one per atom of the stop event)."""
        out = []
        stack = [self.anchor]
        while stack:
            v = stack.pop()
            if self.stop[v]:
                out.append(v)
            else:
                stack.extend(tree.children[v])
        return sorted(out)

    def stop_node_on_path(self, path: Sequence[int]) -> Optional[int]:
        for v in path:
            if self.stop[v]:
                return int(v)
        return None

    @classmethod
    def from_nodes(cls, tree: ScenarioTree, anchor: int, nodes) -> "StoppingRule":
        stop = np.zeros(len(tree), dtype=bool)
        stop[list(nodes)] = True
        return cls(anchor, stop)


def validate_stopping_rule(tree: ScenarioTree, rule: StoppingRule) -> list[Violation]:
    """Exactly one flagged node on every anchor-to-leaf path."""
    out = []
    if len(rule.stop) != len(tree):
        return [Violation("stop-shape", f"{len(rule.stop)} flags for {len(tree)} nodes")]
    for path in tree.paths_from(rule.anchor):
        hits = [int(v) for v in path if rule.stop[v]]
        if len(hits) != 1:
            out.append(Violation(
                "stop-count", f"path to leaf {path[-1]} has {len(hits)} stops", int(path[-1])))
    return out
