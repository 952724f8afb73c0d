"""Test-instance construction: fixed trees, worked examples, random models."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence, Union

import numpy as np

from .model import STRICT_EPS, SwitchingModel, validate_model
from .strategy import RawSwitch
from .tree import ScenarioTree, StoppingRule

MAX_RETRIES = 10_000


class GenerationError(ValueError):
    pass


# ---------------------------------------------------------------- trees

def chain_tree(horizon: int) -> ScenarioTree:
    """Deterministic filtration: one node per time."""
    return ScenarioTree.from_parents(horizon, [None] + list(range(horizon)))


def regular_tree(horizon: int, probs: Sequence[float]) -> ScenarioTree:
    """Every inner node has ``len(probs)`` children with the given branch probabilities."""
    parents: list[Optional[int]] = [None]
    branch = [1.0]
    frontier = [0]
    for _ in range(horizon):
        nxt = []
        for p in frontier:
            for q in probs:
                parents.append(p)
                branch.append(float(q))
                nxt.append(len(parents) - 1)
        frontier = nxt
    return ScenarioTree.from_parents(horizon, parents, branch)


def binomial_tree(horizon: int, p: float = 0.5) -> ScenarioTree:
    return regular_tree(horizon, (p, 1.0 - p))


def trinomial_tree(horizon: int, probs: Sequence[float] = (0.25, 0.5, 0.25)) -> ScenarioTree:
    return regular_tree(horizon, probs)


def random_tree(
    horizon: int,
    branching: Union[int, Sequence[int]],
    rng: np.random.Generator,
    random_branching: bool = False,
) -> ScenarioTree:
    """Tree with ``branching[t]`` children per time-t node (or 1..branching[t] drawn
    uniformly when ``random_branching``) and random positive branch probabilities."""
    widths = [branching] * horizon if np.isscalar(branching) else list(branching)
    if len(widths) != horizon:
        raise GenerationError(f"need {horizon} branching entries, got {len(widths)}")
    parents: list[Optional[int]] = [None]
    branch = [1.0]
    frontier = [0]
    for t in range(horizon):
        nxt = []
        for p in frontier:
            k = int(rng.integers(1, widths[t] + 1)) if random_branching else int(widths[t])
            w = rng.uniform(0.1, 1.0, size=k)
            w = w / w.sum() if k > 1 else np.ones(1)
            for q in w:
                parents.append(p)
                branch.append(float(q))
                nxt.append(len(parents) - 1)
        frontier = nxt
    return ScenarioTree.from_parents(horizon, parents, branch)


# ---------------------------------------------------------------- worked instances

def symmetric_instance(tree: ScenarioTree, c: float = 1.0, num_modes: int = 2,
                       cost: float = 1.0) -> SwitchingModel:
    """All modes earn ``c`` per step, no terminal reward, uniform positive costs:
    switching is strictly dominated."""
    n = len(tree)
    gamma = np.full((n, num_modes, num_modes), cost)
    gamma[:, np.arange(num_modes), np.arange(num_modes)] = 0.0
    return SwitchingModel(tree, np.full((n, num_modes), c), gamma, np.zeros((n, num_modes)))


def signed_cost_chain(gamma_12: float = 1.0, gamma_21: float = -0.5) -> SwitchingModel:
    """Two-period deterministic chain: mode 1 earns 0, mode 2 earns 2, no terminal
    reward; switching 1->2 costs ``gamma_12``, 2->1 pays ``-gamma_21``."""
    tree = chain_tree(2)
    psi = np.tile([0.0, 2.0], (3, 1))
    gamma = np.zeros((3, 2, 2))
    gamma[:, 0, 1] = gamma_12
    gamma[:, 1, 0] = gamma_21
    return SwitchingModel(tree, psi, gamma, np.zeros((3, 2)))


def switching_reward_instance(clamp: bool = False) -> SwitchingModel:
    """Plant with a mothballing grant.

    Binomial tree, T=2.  Mode 1 runs the plant and earns the margin
    ``price - 1`` (price 1 at the root, 2 up, 0.9 down).  Mode 2 is mothballed
    at an upkeep of 0.2 per step.  Mothballing pays a grant of 0.3 (cost -0.3);
    restarting costs 0.8.  In the down state the grant makes mothballing
    optimal; with the grant clamped to 0 (``clamp=True``) staying open is
    optimal instead.
    """
    tree = binomial_tree(2)
    price = np.array([1.0, 2.0, 0.9, 0.0, 0.0, 0.0, 0.0])
    psi = np.column_stack([price - 1.0, np.full(7, -0.2)])
    psi[3:] = 0.0
    gamma = np.zeros((7, 2, 2))
    gamma[:, 0, 1] = 0.0 if clamp else -0.3
    gamma[:, 1, 0] = 0.8
    return SwitchingModel(tree, psi, gamma, np.zeros((7, 2)))


def near_tie_instance(slack: float = 1e-6) -> SwitchingModel:
    """Chain with exact continue/switch ties and a round trip that is only
    ``slack`` short of free."""
    tree = chain_tree(2)
    psi = np.tile([0.0, 1.0], (3, 1))
    gamma = np.zeros((3, 2, 2))
    gamma[:, 0, 1] = 1.0
    gamma[:, 1, 0] = -1.0 + slack
    return SwitchingModel(tree, psi, gamma, np.zeros((3, 2)))


# ---------------------------------------------------------------- random models

@dataclass(frozen=True)
class GeneratorSpec:
    horizon: int = 2
    branching: Union[int, tuple[int, ...]] = 2
    num_modes: int = 2
    psi_range: tuple[float, float] = (-1.0, 1.0)
    terminal_range: tuple[float, float] = (-1.0, 1.0)
    gamma_range: tuple[float, float] = (-0.4, 1.5)
    seed: int = 0
    random_branching: bool = False

    def problems(self) -> list[str]:
        out = []
        if self.horizon < 1:
            out.append(f"horizon must be >= 1, got {self.horizon}")
        if self.num_modes < 2:
            out.append(f"need at least 2 modes, got {self.num_modes}")
        widths = [self.branching] if np.isscalar(self.branching) else list(self.branching)
        if any(int(b) < 1 for b in widths):
            out.append("branching must be >= 1")
        for name in ("psi_range", "terminal_range", "gamma_range"):
            lo, hi = getattr(self, name)
            if not (np.isfinite(lo) and np.isfinite(hi) and lo <= hi):
                out.append(f"{name} must be a finite interval, got {(lo, hi)}")
        lo, hi = self.gamma_range
        if hi <= 0:
            # gamma_ij + gamma_ji > 0 is impossible when every cost is <= 0
            out.append(f"gamma_range {self.gamma_range} cannot satisfy the strict "
                       "triangle condition: the upper end must be positive")
        return out


def _costs_ok(g: np.ndarray) -> bool:
    m = g.shape[0]
    for i in range(m):
        for j in range(m):
            if j == i:
                continue
            for k in range(m):
                if k != j and not g[i, j] + g[j, k] - g[i, k] > STRICT_EPS:
                    return False
    return True


def _draw_costs(rng: np.random.Generator, m: int, lo: float, hi: float,
                need_negative: bool = False) -> np.ndarray:
    for _ in range(MAX_RETRIES):
        g = rng.uniform(lo, hi, size=(m, m))
        np.fill_diagonal(g, 0.0)
        if _costs_ok(g) and (not need_negative or (g < 0).any()):
            return g
    raise GenerationError(
        f"no admissible cost matrix found in {MAX_RETRIES} draws from {(lo, hi)}")


def gen_instance(spec: GeneratorSpec) -> SwitchingModel:
    """Random model satisfying the switching-cost assumption, deterministic in ``spec.seed``.

    Costs are drawn per node by rejection sampling.  When the cost range
    reaches below zero at least one cost is negative.
    """
    problems = spec.problems()
    if problems:
        raise GenerationError("; ".join(problems))
    rng = np.random.default_rng(spec.seed)
    tree = random_tree(spec.horizon, spec.branching, rng, spec.random_branching)
    n, m = len(tree), spec.num_modes
    psi = rng.uniform(*spec.psi_range, size=(n, m))
    psi[tree.times == spec.horizon] = 0.0
    terminal = np.zeros((n, m))
    terminal[tree.leaves] = rng.uniform(*spec.terminal_range, size=(len(tree.leaves), m))
    lo, hi = spec.gamma_range
    gamma = np.stack([_draw_costs(rng, m, lo, hi) for _ in range(n)])
    if lo < 0 and not (gamma < 0).any():
        v = int(rng.integers(n))
        gamma[v] = _draw_costs(rng, m, lo, hi, need_negative=True)
    model = SwitchingModel(tree, psi, gamma, terminal)
    assert not validate_model(model)
    return model


def fuzz_instance(seed: int, max_assignments: int = 200_000, max_horizon: int = 4,
                  max_modes: int = 3, max_branching: int = 3,
                  gamma_range: tuple[float, float] = (-0.4, 1.5)) -> SwitchingModel:
    """Random small instance whose strategy space from the root has at most
    ``max_assignments`` elements; shape drawn from ``seed`` then retried."""
    rng = np.random.default_rng(seed)
    for attempt in range(MAX_RETRIES):
        spec = GeneratorSpec(
            horizon=int(rng.integers(1, max_horizon + 1)),
            branching=int(rng.integers(1, max_branching + 1)),
            num_modes=int(rng.integers(2, max_modes + 1)),
            gamma_range=gamma_range,
            seed=int(rng.integers(2**63)),
            random_branching=True,
        )
        model = gen_instance(spec)
        if spec.num_modes ** len(model.tree.inner) <= max_assignments:
            return model
    raise GenerationError(f"no instance within {max_assignments} assignments (seed {seed})")


def random_process(tree: ScenarioTree, rng: np.random.Generator, scale: float = 1.0) -> np.ndarray:
    return rng.normal(0.0, scale, size=len(tree))


def random_admissible_raw(
    tree: ScenarioTree, start_node: int, start_mode: int, num_modes: int,
    rng: np.random.Generator, max_switches: int = 4, switch_prob: float = 0.4,
    pad: bool = True,
) -> list[RawSwitch]:
    """Random admissible ``(tau_n, iota_n)`` sequence, built directly from its
    definition: ``tau_1`` may equal the start, each later ``tau_n`` lies strictly
    after ``tau_{n-1}`` unless both are at T, and each ``iota_n`` differs from
    ``iota_{n-1}``.  With ``pad`` one extra all-at-T entry is appended."""
    rounds = [switch_prob] * int(rng.integers(0, max_switches + 1))
    if pad:
        rounds.append(0.0)
    raw: list[RawSwitch] = []
    prev: Optional[RawSwitch] = None
    for prob in rounds:
        stop = np.zeros(len(tree), dtype=bool)
        iota = np.full(len(tree), -1, dtype=int)
        # (node, previous stop strictly above, mode in force)
        stack = [(start_node, prev is None, start_mode)]
        while stack:
            v, passed, mode = stack.pop()
            at_prev = prev is not None and bool(prev[0].stop[v])
            if at_prev:
                mode = int(prev[1][v])
            can_stop = passed or (at_prev and tree.is_leaf(v))
            if can_stop and (tree.is_leaf(v) or rng.random() < prob):
                stop[v] = True
                iota[v] = int(rng.choice([k for k in range(num_modes) if k != mode]))
            else:
                stack.extend((c, passed or at_prev, mode) for c in tree.children[v])
        prev = (StoppingRule(start_node, stop), iota)
        raw.append(prev)
    return raw
