"""Monte-Carlo checks of the identities that make agreement-by-sampling work.

Over seeded replicas of the two-agent Gaussian model:
  * the mixed estimator (posterior CDF blended with a neighbor's empirical
    sample frequency below a threshold) averages to the prior threshold
    probability, for any mixing weight;
  * centered sampling indicators at different rounds are uncorrelated;
  * the posterior-mean variance follows the total-variance identity
    Var(mean at round t) = 1 - posterior variance at round t;
  * averaging two genuinely different square-integrable estimators strictly
    lowers the mean squared error at an interior mixture weight.
"""

import numpy as np
from scipy.special import ndtr

from samplecast import DiagnosticsConfig, RunConfig, run_replicas
from samplecast.montecarlo import averaging_strictly_helps_check


def main():
    config = RunConfig(
        engine="gaussian", topology_kind="edge", n=2, a=(1.0, 2.0),
        horizon=20, replicas=4000, master_seed=7,
        diagnostics=DiagnosticsConfig(
            thresholds=(-1.0, 0.0, 1.0), mix=0.5, observer=0, observed=1,
            t1=3, t2=7, variance_rounds=(1, 10, 20),
        ),
    )
    summary = run_replicas(config)

    print("mixed-estimator unbiasedness (target = prior CDF at the threshold):")
    for report in summary.cdf_mix:
        pull = abs(report.mean - report.target) / report.stderr
        print(
            f"  u={report.threshold:+.0f}: mean {report.mean:.5f}  target "
            f"{ndtr(report.threshold):.5f}  ({pull:.2f} stderr away)"
        )

    inc = summary.increments[0]
    print(
        f"\nincrement covariance at rounds ({inc.t1}, {inc.t2}): "
        f"{inc.estimate:+.6f} with stderr {inc.stderr:.6f} "
        f"({'flagged' if inc.flagged else 'consistent with zero'})"
    )

    print("\nmartingale variance identity:")
    for report in summary.variance_identity:
        if report.agent != 0:
            continue
        print(
            f"  round {report.round:>2}: empirical {report.empirical:.4f}  "
            f"1-var {report.total_variance_form:.4f}  var(1-var) "
            f"{report.product_form:.4f}  -> matches {report.matching_form}"
        )

    rng = np.random.default_rng(0)
    base = rng.standard_normal(20000)
    noisy_a = base + rng.standard_normal(20000)
    noisy_b = base + rng.standard_normal(20000)
    report = averaging_strictly_helps_check(noisy_a, noisy_b)
    print(
        f"\naveraging two noisy estimates of a common target: best mixture "
        f"weight {report.lambda_min:.3f}, second moment {report.m11:.3f} -> "
        f"{report.min_second_moment:.3f} (strictly helps: {report.strictly_helps})"
    )
    same = averaging_strictly_helps_check(noisy_a, noisy_a)
    print(
        f"averaging an estimate with itself: implied mean square difference "
        f"{same.mean_square_diff:.1e} (strictly helps: {same.strictly_helps})"
    )


if __name__ == "__main__":
    main()
