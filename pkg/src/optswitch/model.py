"""Optimal switching problem data on a scenario tree.

Modes are indexed ``0..m-1`` in arrays and labelled ``1..m`` in messages and
documents.  Array layout:

* ``psi[node, i]``       running reward of mode ``i`` (rows at time T are stored but unused)
* ``gamma[node, i, j]``  cost of switching ``i -> j`` at ``node``; may be negative
* ``terminal[node, i]``  terminal reward; only leaf rows are meaningful

On a finite space every random variable is bounded, so the square
integrability the theory asks for holds automatically and is not checked.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .tree import ScenarioTree, Violation, validate_tree

STRICT_EPS = 1e-12


@dataclass(frozen=True, eq=False)
class SwitchingModel:
    tree: ScenarioTree
    psi: np.ndarray
    gamma: np.ndarray
    terminal: np.ndarray

    def __post_init__(self) -> None:
        for name in ("psi", "gamma", "terminal"):
            arr = np.array(getattr(self, name), dtype=float)
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    @property
    def num_modes(self) -> int:
        return self.psi.shape[1]

    @property
    def horizon(self) -> int:
        return self.tree.horizon

    def check(self) -> None:
        problems = validate_model(self)
        if problems:
            raise InvalidModelError(problems)

    def replace(self, **changes) -> "SwitchingModel":
        return replace(self, **changes)

    def __eq__(self, other) -> bool:
        if not isinstance(other, SwitchingModel):
            return NotImplemented
        return (
            self.tree == other.tree
            and np.array_equal(self.psi, other.psi)
            and np.array_equal(self.gamma, other.gamma)
            and np.array_equal(self.terminal, other.terminal)
        )

    __hash__ = None  # type: ignore[assignment]


class InvalidModelError(ValueError):
    def __init__(self, violations):
        self.violations = list(violations)
        super().__init__("; ".join(str(v) for v in self.violations))


def validate_model(model: SwitchingModel, strict_eps: float = STRICT_EPS) -> list[Violation]:
    """Shape/finiteness checks plus both switching-cost conditions at every node.

    Returns the tree's violations instead when the tree itself is invalid.
    """
    tree_problems = validate_tree(model.tree)
    if tree_problems:
        return tree_problems

    n = len(model.tree)
    psi, gamma, terminal = model.psi, model.gamma, model.terminal
    out: list[Violation] = []
    if psi.ndim != 2 or psi.shape[0] != n:
        return [Violation("shape", f"psi must have shape (nodes={n}, modes), got {psi.shape}")]
    m = psi.shape[1]
    if m < 2:
        out.append(Violation("modes", f"need at least 2 modes, got {m}"))
    if gamma.shape != (n, m, m):
        out.append(Violation("shape", f"gamma must have shape {(n, m, m)}, got {gamma.shape}"))
    if terminal.shape != (n, m):
        out.append(Violation("shape", f"terminal must have shape {(n, m)}, got {terminal.shape}"))
    if out:
        return out

    for name, arr in (("psi", psi), ("gamma", gamma), ("terminal", terminal)):
        bad = np.argwhere(~np.isfinite(arr))
        for idx in bad[:10]:
            out.append(Violation("finite", f"{name} entry {tuple(idx.tolist())} is not finite",
                                 int(idx[0])))
    if out:
        return out

    for v in range(n):
        g = gamma[v]
        for i in range(m):
            if g[i, i] != 0.0:
                out.append(Violation(
                    "no-cost-to-stay",
                    f"diagonal cost nonzero: gamma[{i + 1},{i + 1}] = {float(g[i, i])!r}",
                    v, (i,)))
        for i in range(m):
            for j in range(m):
                if j == i:
                    continue
                for k in range(m):
                    if k == j:
                        continue
                    lhs = g[i, k]
                    rhs = g[i, j] + g[j, k]
                    if not rhs - lhs > strict_eps:
                        out.append(Violation(
                            "triangle",
                            f"triangle not strict: gamma[{i + 1},{k + 1}] = {float(lhs)!r} < "
                            f"gamma[{i + 1},{j + 1}] + gamma[{j + 1},{k + 1}] = {float(rhs)!r} fails",
                            v, (i, j, k)))
    return out


def round_trip_margin(model: SwitchingModel) -> np.ndarray:
    """``gamma[i,j] + gamma[j,i]`` per node; strictly positive off the diagonal
    whenever the triangle condition holds (take ``k = i``)."""
    return model.gamma + np.swapaxes(model.gamma, 1, 2)


def forbid_switch_cost(model: SwitchingModel) -> float:
    """A finite cost large enough that paying it can never be optimal.

    Bound: ``2 * (max|terminal| + T*max|psi| + T*max|gamma|) + 1`` over the
    entries the objective can actually touch.  Note that placing this cost on
    ``i -> k`` for ``m >= 3`` may still break the triangle condition through a
    cheap intermediate mode; re-validate after editing costs.
    """
    tree = model.tree
    T = tree.horizon
    live = tree.times < T
    max_terminal = float(np.max(np.abs(model.terminal[tree.leaves]), initial=0.0))
    max_psi = float(np.max(np.abs(model.psi[live]), initial=0.0))
    max_gamma = float(np.max(np.abs(model.gamma), initial=0.0))
    return 2.0 * (max_terminal + T * max_psi + T * max_gamma) + 1.0


def scale_model(model: SwitchingModel, factor: float) -> SwitchingModel:
    return model.replace(
        psi=model.psi * factor, gamma=model.gamma * factor, terminal=model.terminal * factor
    )


def shift_rewards(model: SwitchingModel, c: float) -> SwitchingModel:
    """Add ``c`` to every running reward, all modes and times."""
    return model.replace(psi=model.psi + c)
