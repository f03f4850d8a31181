"""Sampling messages versus action messages in the two-agent binary game.

Both agents hold signals above one half (0.6 and 0.7), so in action mode
each keeps announcing "state 1" forever and their beliefs freeze at
6x/(2+4x) -- two different values, neither equal to the full-information
posterior. In sampling mode the transmitted bits are posterior draws, which
keep leaking signal information: beliefs wander but close in on the
full-information posterior, and on each other.
"""

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt

from samplecast import action_limit_posterior, run_edge, true_posterior

OUT = Path(__file__).resolve().parent / "output"


def main():
    OUT.mkdir(exist_ok=True)
    x1, x2 = 0.6, 0.7
    grid_size = 2001
    reference = true_posterior(x1, x2)
    limits = (action_limit_posterior(x1), action_limit_posterior(x2))
    print(f"signals: {x1}, {x2}")
    print(f"full-information posterior: {reference:.4f}")
    print(f"action-mode frozen beliefs: {limits[0]:.5f}, {limits[1]:.5f}")

    action = run_edge(x1, x2, T=40, mode="action", grid_size=grid_size, seed=0)
    sampling = run_edge(x1, x2, T=400, mode="sampling", grid_size=grid_size, seed=3)
    print(
        f"sampling run, final beliefs after 400 rounds: "
        f"{sampling.beliefs[-1, 0]:.4f}, {sampling.beliefs[-1, 1]:.4f}"
    )

    fig, (left, right) = plt.subplots(1, 2, figsize=(11, 4), sharey=True)
    left.plot(action.beliefs[:, 0], label="agent 0")
    left.plot(action.beliefs[:, 1], label="agent 1")
    for limit in limits:
        left.axhline(limit, ls=":", c="gray", lw=0.8)
    left.axhline(reference, ls="--", c="k", lw=0.8, label="full information")
    left.set_title("action messages: frozen, wrong")
    left.set_xlabel("round")
    left.set_ylabel("belief in state 1")
    left.legend(fontsize=8)

    right.plot(sampling.beliefs[:, 0], lw=0.8, label="agent 0")
    right.plot(sampling.beliefs[:, 1], lw=0.8, label="agent 1")
    right.axhline(reference, ls="--", c="k", lw=0.8, label="full information")
    right.set_title("sampled messages: converging")
    right.set_xlabel("round")
    right.legend(fontsize=8)
    fig.tight_layout()
    target = OUT / "binary_edge_modes.png"
    fig.savefig(target, dpi=150)
    print(f"\nwrote {target}")


if __name__ == "__main__":
    main()
