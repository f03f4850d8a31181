"""Two agents on a single edge, broadcasting posterior samples.

Agent 0 sees a signal of strength 1, agent 1 of strength 2. Each round both
draw one sample from their current posterior and send it across the edge.
The posterior means drift toward the full-information posterior mean they
could only compute by pooling both signals, and toward each other.
"""

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from samplecast import (
    GaussianSignalStructure,
    bayes_oracle,
    build_topology,
    simulate_realization,
)

OUT = Path(__file__).resolve().parent / "output"


def main():
    OUT.mkdir(exist_ok=True)
    graph = build_topology("edge", 2)
    coeffs = GaussianSignalStructure(np.array([1.0, 2.0]))
    horizon = 500
    trajectory = simulate_realization(graph, coeffs, T=horizon, seed=0)
    oracle_mean, oracle_var = bayes_oracle(coeffs, trajectory.signals)

    print(f"hidden state:                {trajectory.theta:+.4f}")
    print(f"signals:                     {trajectory.signals[0]:+.4f}, {trajectory.signals[1]:+.4f}")
    print(f"full-information mean:       {oracle_mean:+.4f} (variance {oracle_var:.4f})")
    for t in (0, 10, 100, horizon):
        means = trajectory.post_means[t]
        print(
            f"round {t:>3}: means {means[0]:+.4f} / {means[1]:+.4f}   "
            f"gap to oracle {np.abs(means - oracle_mean).max():.4f}   "
            f"gap to each other {abs(means[0] - means[1]):.4f}"
        )

    fig, (left, right) = plt.subplots(1, 2, figsize=(11, 4), sharex=True)
    rounds = np.arange(horizon + 1)
    for ax in (left, right):
        ax.plot(rounds, trajectory.post_means[:, 0], lw=0.9, label="agent 0 (strength 1)")
        ax.plot(rounds, trajectory.post_means[:, 1], lw=0.9, label="agent 1 (strength 2)")
        ax.axhline(oracle_mean, ls="--", c="k", lw=0.8, label="full-information mean")
        ax.set_xlabel("round")
    left.set_ylim(-1, 1)
    left.set_ylabel("posterior mean")
    left.set_title("signal scale")
    pad = 4 * np.sqrt(trajectory.post_vars[-1, 0] - oracle_var)
    right.set_ylim(oracle_mean - pad, oracle_mean + pad)
    right.set_title("zoomed to the limit")
    right.legend(loc="best", fontsize=8)
    fig.tight_layout()
    target = OUT / "edge_realization.png"
    fig.savefig(target, dpi=150)
    print(f"\nwrote {target}")


if __name__ == "__main__":
    main()
