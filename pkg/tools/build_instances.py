"""Regenerate the instance documents shipped with the package.

Run from the repository root:  python tools/build_instances.py
"""

from pathlib import Path

from optswitch.documents import write_instance
from optswitch.generators import (
    GeneratorSpec,
    binomial_tree,
    gen_instance,
    near_tie_instance,
    signed_cost_chain,
    switching_reward_instance,
    symmetric_instance,
)

OUT = Path(__file__).resolve().parents[1] / "src" / "optswitch" / "instances"

INSTANCES = {
    "signed_cost_chain": (
        signed_cost_chain(), (0, 0),
        "Deterministic chain, T=2. Mode 1 earns 0, mode 2 earns 2; "
        "switching 1->2 costs 1, switching 2->1 costs -0.5."),
    "symmetric_binomial": (
        symmetric_instance(binomial_tree(3, 0.4), c=1.5), (0, 0),
        "Binomial tree, T=3. Both modes earn 1.5 per step; switching costs 1 "
        "either way, so it never pays."),
    "switching_reward": (
        switching_reward_instance(), (0, 0),
        "Binomial tree, T=2. Mode 1 runs a plant (margin 0 / 1 / -0.1 at the root, "
        "up, down), mode 2 mothballs it at 0.2 per step. Mothballing pays a 0.3 "
        "grant (cost -0.3); restarting costs 0.8."),
    "switching_reward_clamped": (
        switching_reward_instance(clamp=True), (0, 0),
        "As switching_reward but with the mothballing grant clamped to 0."),
    "near_tie": (
        near_tie_instance(), (0, 0),
        "Chain, T=2, with exact continue/switch ties and a round trip only 1e-6 "
        "short of free."),
    "random_trinomial_3modes": (
        gen_instance(GeneratorSpec(horizon=2, branching=3, num_modes=3, seed=7)), (0, 1),
        "Random trinomial tree, T=2, three modes, signed costs from [-0.4, 1.5], seed 7."),
}


def main() -> None:
    OUT.mkdir(parents=True, exist_ok=True)
    for name, (model, anchor, description) in INSTANCES.items():
        model.check()
        (OUT / f"{name}.json").write_text(write_instance(model, anchor, name, description))
        print(f"wrote {name}")


if __name__ == "__main__":
    main()
