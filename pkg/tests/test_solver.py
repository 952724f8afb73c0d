import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from optswitch.generators import (
    binomial_tree,
    chain_tree,
    fuzz_instance,
    near_tie_instance,
    signed_cost_chain,
    symmetric_instance,
)
from optswitch.model import InvalidModelError, forbid_switch_cost, scale_model, shift_rewards
from optswitch.solver import (
    accumulated_rewards,
    backward_induction_explicit,
    backward_induction_implicit,
    equivalence_report,
    extract_strategy,
)
from optswitch.strategy import evaluate


def test_symmetric_values(symmetric):
    vf = backward_induction_explicit(symmetric)
    tree = symmetric.tree
    expected = 1.5 * (tree.horizon - tree.times)
    assert np.allclose(vf.y, expected[:, None], atol=1e-12)
    assert np.array_equal(backward_induction_implicit(symmetric).y, vf.y)
    s = extract_strategy(vf, 0, 0)
    assert s.events() == []
    assert all(s.last_mode(leaf) == 0 for leaf in tree.leaves)
    # exact on the chain; p = 0.3 leaves last-bit rounding in the expectations
    assert equivalence_report(symmetric).max_deviation <= 1e-12


def test_signed_cost_chain_values(chain):
    vf = backward_induction_explicit(chain)
    assert vf.y[0].tolist() == [3.0, 4.0]
    assert vf.y[1].tolist() == [1.0, 2.0]
    assert vf.y[2].tolist() == [0.0, 0.0]
    assert backward_induction_implicit(chain).y.tolist() == vf.y.tolist()


def test_signed_cost_chain_strategies(chain):
    vf = backward_induction_explicit(chain)
    s1 = extract_strategy(vf, 0, 0)
    assert s1.events() == [(0, 0, 1)]
    assert evaluate(s1, chain) == 3.0
    s2 = extract_strategy(vf, 0, 1)
    assert s2.events() == []
    assert evaluate(s2, chain) == 4.0
    assert equivalence_report(chain).max_deviation < 1e-9


def test_forbidden_switch_is_never_used(chain):
    cost = forbid_switch_cost(chain)
    assert cost == 13.0
    forbidden = signed_cost_chain(gamma_12=cost)
    vf = backward_induction_explicit(forbidden)
    assert vf.y[0, 0] == 0.0
    assert extract_strategy(vf, 0, 0).events() == []


def test_invalid_model_rejected():
    bad = signed_cost_chain(gamma_12=0.4, gamma_21=-0.4)
    with pytest.raises(InvalidModelError):
        backward_induction_explicit(bad)
    with pytest.raises(InvalidModelError):
        backward_induction_implicit(bad)


def test_near_tie_is_exact():
    model = near_tie_instance()
    vf = backward_induction_explicit(model)
    assert vf.y[0].tolist() == [1.0, 2.0]
    s = extract_strategy(vf, 0, 0)
    assert evaluate(s, model) == 1.0
    assert equivalence_report(model).max_deviation < 1e-9


def test_value_field_is_read_only(chain):
    vf = backward_induction_explicit(chain)
    with pytest.raises(ValueError):
        vf.y[0, 0] = 1.0


def test_accumulated_rewards(chain):
    cum = accumulated_rewards(chain)
    assert cum.tolist() == [[0, 0], [0, 2], [0, 4]]


def test_gain_processes_on_chain(chain):
    vf = backward_induction_explicit(chain)
    # u_implicit at the root: switch into the other mode at once
    assert vf.u_implicit[0].tolist() == [3.0, 3.5]
    assert np.array_equal(vf.y_hat, vf.y + accumulated_rewards(chain))


seeds = st.integers(0, 2**32 - 1)


@settings(max_examples=40, deadline=None)
@given(seeds)
def test_explicit_matches_implicit(seed):
    model = fuzz_instance(seed, max_assignments=5000)
    a = backward_induction_explicit(model).y
    b = backward_induction_implicit(model).y
    assert np.max(np.abs(a - b)) < 1e-9


@settings(max_examples=30, deadline=None)
@given(seeds)
def test_report_within_tolerance(seed):
    report = equivalence_report(fuzz_instance(seed, max_assignments=2000))
    assert report.max_deviation < 1e-9


@settings(max_examples=30, deadline=None)
@given(seeds, st.sampled_from([0.5, 3.0]))
def test_scaling(seed, factor):
    model = fuzz_instance(seed, max_assignments=2000)
    y = backward_induction_explicit(model).y
    scaled = backward_induction_explicit(scale_model(model, factor)).y
    assert np.max(np.abs(scaled - factor * y)) < 1e-9


@settings(max_examples=30, deadline=None)
@given(seeds)
def test_reward_shift(seed):
    model = fuzz_instance(seed, max_assignments=2000)
    tree = model.tree
    y = backward_induction_explicit(model).y
    shifted = backward_induction_explicit(shift_rewards(model, 1.0)).y
    assert np.max(np.abs(shifted - y - (tree.horizon - tree.times)[:, None])) < 1e-9


@settings(max_examples=30, deadline=None)
@given(seeds)
def test_values_dominate_switching(seed):
    model = fuzz_instance(seed, max_assignments=2000)
    vf = backward_induction_explicit(model)
    assert (vf.y >= vf.u_implicit - 1e-12).all()


def test_binomial_with_switching_value():
    tree = binomial_tree(1)
    psi = np.zeros((3, 2))
    terminal = np.zeros((3, 2))
    terminal[1] = [0.0, 4.0]
    terminal[2] = [1.0, -2.0]
    gamma = np.zeros((3, 2, 2))
    gamma[:, 0, 1] = gamma[:, 1, 0] = 0.5
    from optswitch.model import SwitchingModel
    model = SwitchingModel(tree, psi, gamma, terminal)
    vf = backward_induction_explicit(model)
    # mode 1: stay 0.5*0 + 0.5*1 = 0.5, or switch 0.5*4 + 0.5*(-2) - 0.5 = 0.5
    assert vf.y[0].tolist() == [0.5, 1.0]
    # a tie stops and switches
    assert extract_strategy(vf, 0, 0).events() == [(0, 0, 1)]
