"""Acceptance gate: one test per criterion, each reported in the terminal
summary as a PASS/FAIL line."""

import contextlib
import io
import json
import time
from contextlib import contextmanager
from pathlib import Path

import numpy as np
import pytest

from optswitch.cli import main
from optswitch.documents import (
    load_shipped,
    read_instance,
    shipped_instance_text,
    shipped_instances,
    write_instance,
)
from optswitch.generators import fuzz_instance, random_admissible_raw, random_tree
from optswitch.model import scale_model, shift_rewards
from optswitch.oracle import (
    EnumerationBudget,
    count_stopping_rules,
    enumerate_optimum,
    enumerate_stopping_optimum,
    mixed_mode_snell_check,
)
from optswitch.snell import (
    ProcessField,
    check_stopped_martingale,
    dominates,
    expected_stopped_value,
    is_supermartingale,
    optimal_stopping_time,
    snell_envelope,
)
from optswitch.solver import (
    backward_induction_explicit,
    backward_induction_implicit,
    extract_strategy,
)
from optswitch.strategy import check_admissibility, evaluate

TOL = 1e-9
NUM_FUZZ = 500
FUZZ_SEED0 = 1_000
GOLDEN = Path(__file__).parent / "golden"
STOPPING_BUDGET = 5_000


@contextmanager
def criterion(log, number, title):
    detail = {}
    try:
        yield detail
    except BaseException as exc:
        log.append(f"[FAIL] {number}. {title}: {type(exc).__name__}: {str(exc).splitlines()[0][:200]}")
        raise
    extra = ", ".join(f"{k}={v}" for k, v in detail.items())
    log.append(f"[PASS] {number}. {title} ({extra})")


@pytest.fixture(scope="module")
def fuzz():
    models = [fuzz_instance(FUZZ_SEED0 + k) for k in range(NUM_FUZZ)]
    return [(m, backward_induction_explicit(m)) for m in models]


def anchors(model):
    for v in range(len(model.tree)):
        for i in range(model.num_modes):
            yield v, i


def test_c1_oracle_equivalence(fuzz, acceptance_log):
    with criterion(acceptance_log, 1, "oracle equivalence") as d:
        start = time.perf_counter()
        worst, count = 0.0, 0
        for model, vf in fuzz:
            for v, i in anchors(model):
                value, _ = enumerate_optimum(model, v, i)
                worst = max(worst, abs(value - vf.y[v, i]))
                count += 1
        elapsed = time.perf_counter() - start
        d.update(instances=len(fuzz), anchors=count, max_dev=f"{worst:.2e}", seconds=f"{elapsed:.1f}")
        assert len(fuzz) >= 500
        assert worst < TOL
        assert elapsed < 60.0


def test_c2_verification_identity(fuzz, acceptance_log):
    with criterion(acceptance_log, 2, "verification identity and admissibility") as d:
        worst, count, switches = 0.0, 0, 0
        for model, vf in fuzz:
            tree, m = model.tree, model.num_modes
            for v, i in anchors(model):
                strategy = extract_strategy(vf, v, i)
                worst = max(worst, abs(evaluate(strategy, model) - vf.y[v, i]))
                raw = strategy.to_raw(m)
                assert check_admissibility(tree, raw, v, i, m) == [], (v, i)
                # the first-hitting rule never fires again in the new mode
                for node, _, to in strategy.events():
                    assert vf.y[node, to] - vf.u_implicit[node, to] > TOL, (node, to)
                    switches += 1
                count += 1
        d.update(anchors=count, switches=switches, max_dev=f"{worst:.2e}")
        assert worst < TOL


def test_c3_recursion_equivalence(fuzz, acceptance_log):
    with criterion(acceptance_log, 3, "explicit vs implicit recursion") as d:
        worst = max(float(np.max(np.abs(vf.y - backward_induction_implicit(m).y))) for m, vf in fuzz)
        d.update(instances=len(fuzz), max_dev=f"{worst:.2e}")
        assert worst < TOL


def _dominating_supermartingale(U, rng):
    tree = U.tree
    S = U.values + rng.exponential(size=len(tree)) * rng.choice([0.0, 1.0], size=len(tree))
    for t in range(tree.horizon - 1, -1, -1):
        for v in tree.levels[t]:
            kids = list(tree.children[v])
            slack = rng.exponential() if rng.random() < 0.5 else 0.0
            S[v] = max(S[v], float(np.dot(tree.probs[kids], S[kids]))) + slack
    return ProcessField(tree, S)


def test_c4_snell_properties(acceptance_log):
    with criterion(acceptance_log, 4, "Snell envelope properties") as d:
        rng = np.random.default_rng(4)
        worst_super, worst_min, worst_stop = 0.0, 0.0, 0.0
        for _ in range(500):
            tree = random_tree(int(rng.integers(1, 5)), 3, rng, random_branching=True)
            U = ProcessField(tree, rng.normal(size=len(tree)) * rng.uniform(0.1, 10))
            Z = snell_envelope(U)
            assert dominates(Z, U)  # (a) exact
            cond = np.array([np.dot(tree.probs[list(tree.children[v])], Z.values[list(tree.children[v])])
                             for v in tree.inner])
            worst_super = max(worst_super, float(np.max(cond - Z.values[tree.inner], initial=0.0)))
            assert is_supermartingale(Z, TOL)  # (b)
            for _ in range(100):  # (c)
                S = _dominating_supermartingale(U, rng)
                assert dominates(S, U) and is_supermartingale(S, 1e-12)
                worst_min = max(worst_min, float(np.max(Z.values - S.values)))
            for anchor in range(len(tree)):
                rule = optimal_stopping_time(U, Z, anchor)
                worst_stop = max(worst_stop, abs(expected_stopped_value(U, rule) - Z.values[anchor]))  # (d)
                assert check_stopped_martingale(U, Z, anchor, TOL)  # (e)
        d.update(fields=500, supermart_excess=f"{worst_super:.2e}",
                 minimality_excess=f"{worst_min:.2e}", stop_dev=f"{worst_stop:.2e}")
        assert worst_super < TOL and worst_min <= TOL and worst_stop < TOL


def test_c5_explicit_snell_system(fuzz, acceptance_log):
    with criterion(acceptance_log, 5, "explicit Snell system") as d:
        budget = EnumerationBudget(max_stopping_rules=STOPPING_BUDGET)
        worst_env, worst_enum, checked, mixed = 0.0, 0.0, 0, 0
        rng = np.random.default_rng(5)
        for model, vf in fuzz:
            tree = model.tree
            for i in range(model.num_modes):
                U = ProcessField(tree, vf.u_hat[:, i])
                worst_env = max(worst_env, float(np.max(np.abs(snell_envelope(U).values - vf.y_hat[:, i]))))
                for v in range(len(tree)):
                    if count_stopping_rules(tree, v) <= budget.max_stopping_rules:
                        best = enumerate_stopping_optimum(U, v, budget)
                        worst_enum = max(worst_enum, abs(best - vf.y_hat[v, i]))
                        checked += 1
            anchor = int(rng.integers(len(tree)))
            for tau, iota in random_admissible_raw(tree, anchor, 0, model.num_modes, rng, pad=False):
                assert mixed_mode_snell_check(vf, tau, iota, "explicit")
                mixed += 1
        d.update(envelope_dev=f"{worst_env:.2e}", enumerated_anchors=checked,
                 enum_dev=f"{worst_enum:.2e}", mixed_rules=mixed)
        assert worst_env < TOL and worst_enum < TOL
        assert checked >= 1000


def test_c6_signed_cost_behaviour(acceptance_log):
    with criterion(acceptance_log, 6, "signed-cost behaviour") as d:
        model, anchor, _ = load_shipped("switching_reward")
        clamped, clamped_anchor, _ = load_shipped("switching_reward_clamped")
        assert anchor == clamped_anchor
        pays_reward = []
        for m in (model, clamped):
            vf = backward_induction_explicit(m)
            strategy = extract_strategy(vf, *anchor)
            value, argmax = enumerate_optimum(m, *anchor)
            assert abs(value - vf.y[anchor]) < TOL
            assert abs(evaluate(strategy, m) - value) < TOL
            pays_reward.append([(v, a, b) for v, a, b in strategy.events() if m.gamma[v, a, b] < 0])
            if m is model:
                free_events = strategy.events()
            else:
                clamped_events = strategy.events()
        assert pays_reward[0], "optimal strategy collects no switching reward"
        assert free_events != clamped_events
        chain, chain_anchor, _ = load_shipped("signed_cost_chain")
        vf = backward_induction_explicit(chain)
        assert (chain.gamma < 0).any()
        for v, i in anchors(chain):
            assert abs(enumerate_optimum(chain, v, i)[0] - vf.y[v, i]) < TOL
        def fmt(events):
            return "; ".join(f"node {v}: {a + 1}->{b + 1}" for v, a, b in events) or "none"
        d.update(switches=fmt(free_events), clamped_switches=fmt(clamped_events))


def test_c7_homogeneity_and_shift(fuzz, acceptance_log):
    with criterion(acceptance_log, 7, "homogeneity and reward shift") as d:
        worst = 0.0
        for model, vf in fuzz[:100]:
            tree = model.tree
            for factor in (0.5, 3.0):
                y = backward_induction_explicit(scale_model(model, factor)).y
                worst = max(worst, float(np.max(np.abs(y - factor * vf.y))))
            y = backward_induction_explicit(shift_rewards(model, 1.0)).y
            worst = max(worst, float(np.max(np.abs(y - vf.y - (tree.horizon - tree.times)[:, None]))))
        d.update(instances=100, max_dev=f"{worst:.2e}")
        assert worst < TOL


def _cli(argv):
    out, err = io.StringIO(), io.StringIO()
    with contextlib.redirect_stdout(out), contextlib.redirect_stderr(err):
        code = main([str(a) for a in argv])
    return code, out.getvalue()


def test_c8_cli_contract(tmp_path, fuzz, acceptance_log):
    with criterion(acceptance_log, 8, "CLI contract") as d:
        names = shipped_instances()
        assert len(names) >= 5
        golden = 0
        for name in names:
            path = tmp_path / f"{name}.json"
            path.write_text(shipped_instance_text(name))
            for verb in ("validate", "solve", "oracle"):
                code, out = _cli([verb, path])
                ext = "txt" if verb == "validate" else "json"
                assert code == 0, (verb, name)
                assert out == (GOLDEN / f"{name}.{verb}.{ext}").read_text(), (verb, name)
                golden += 1
        for model, _ in fuzz:
            text = write_instance(model)
            back, _, _ = read_instance(text)
            assert back == model and write_instance(back) == text

        bad = json.loads(shipped_instance_text("signed_cost_chain"))
        bad["model"]["gamma"][0][0][0] = 0.1
        (tmp_path / "bad.json").write_text(json.dumps(bad))
        (tmp_path / "broken.json").write_text("{")
        assert _cli(["validate", tmp_path / "bad.json"])[0] == 1
        assert _cli(["solve", tmp_path / "bad.json"])[0] == 1
        assert _cli(["validate", tmp_path / "broken.json"])[0] == 2
        assert _cli(["solve", tmp_path / "missing.json"])[0] == 2
        fuzz_path = tmp_path / "fuzz.json"
        fuzz_path.write_text(write_instance(fuzz[0][0], (0, 0)))
        code, out = _cli(["solve", fuzz_path, "--report"])
        assert code == 0 and max(json.loads(out)["report"].values()) < TOL
        d.update(golden_files=golden, round_trips=len(fuzz))
