import numpy as np
import pytest
from scipy.special import ndtr

from samplecast.binary_edge import run_edge
from samplecast.config import DiagnosticsConfig, RunConfig
from samplecast.gaussian import (
    GaussianSignalStructure,
    GaussianTrajectory,
    bayes_oracle,
    simulate_realization,
)
from samplecast.montecarlo import (
    DiagnosticSpec,
    agreement_gap,
    averaging_strictly_helps_check,
    cdf_mix_estimate,
    message_increment_covariance,
    run_replicas,
)
from samplecast.network import build_topology


def edge_config(**overrides):
    base = dict(
        engine="gaussian", topology_kind="edge", n=2, a=(1.0, 2.0),
        horizon=10, replicas=64, master_seed=5,
    )
    base.update(overrides)
    return RunConfig(**base)


class TestAgreementGap:
    def test_single_agent_graph_is_zero(self):
        g = build_topology("clique", 1)
        s = GaussianSignalStructure(np.array([2.0]))
        traj = simulate_realization(g, s, T=3, seed=1)
        assert agreement_gap(traj, 3) == 0.0

    def test_only_pairs_within_components_count(self):
        # two isolated pairs: the gap ignores the across-component spread
        g = build_topology("custom", 4, edges=[(0, 1), (2, 3)])
        s = GaussianSignalStructure(np.array([1.0, 1.0, 5.0, 5.0]))
        traj = simulate_realization(g, s, T=2, seed=0)
        means = traj.post_means[2]
        expected = max(abs(means[0] - means[1]), abs(means[2] - means[3]))
        assert agreement_gap(traj, 2) == pytest.approx(expected, abs=1e-15)
        assert agreement_gap(traj, 2) < means.max() - means.min()

    def test_binary_result_uses_beliefs(self):
        result = run_edge(0.6, 0.7, T=4, mode="sampling", grid_size=101, seed=3)
        assert agreement_gap(result, 4) == pytest.approx(
            abs(result.beliefs[4, 0] - result.beliefs[4, 1])
        )


class TestCdfMixEstimate:
    def setup_method(self):
        g = build_topology("edge", 2)
        s = GaussianSignalStructure(np.array([1.0, 2.0]))
        self.traj = simulate_realization(g, s, T=12, seed=21)

    def test_pure_mix_returns_posterior_cdf(self):
        spec = DiagnosticSpec(threshold=0.3, mix=1.0, observer=0, observed=1)
        expected = ndtr(
            (0.3 - self.traj.post_means[12, 0]) / np.sqrt(self.traj.post_vars[12, 0])
        )
        assert cdf_mix_estimate(self.traj, spec, T=12) == pytest.approx(
            float(expected), abs=1e-15
        )

    def test_pure_frequency_counts_messages(self):
        spec = DiagnosticSpec(threshold=0.0, mix=0.0, observer=0, observed=1)
        expected = np.mean(self.traj.messages[:8, 1] <= 0.0)
        assert cdf_mix_estimate(self.traj, spec, T=8) == pytest.approx(float(expected))

    def test_result_in_unit_interval(self):
        spec = DiagnosticSpec(threshold=-0.5, mix=0.4, observer=1, observed=0)
        value = cdf_mix_estimate(self.traj, spec, T=12)
        assert 0.0 <= value <= 1.0

    def test_non_adjacent_pair_rejected(self):
        g = build_topology("path", 3)
        s = GaussianSignalStructure(np.array([1.0, 1.0, 1.0]))
        traj = simulate_realization(g, s, T=3, seed=2)
        spec = DiagnosticSpec(threshold=0.0, mix=0.5, observer=0, observed=2)
        with pytest.raises(ValueError, match="not adjacent"):
            cdf_mix_estimate(traj, spec, T=3)

    def test_horizon_bounds_checked(self):
        spec = DiagnosticSpec(threshold=0.0, mix=0.5, observer=0, observed=1)
        with pytest.raises(ValueError, match="T must lie"):
            cdf_mix_estimate(self.traj, spec, T=13)

    def test_spec_validation(self):
        with pytest.raises(ValueError, match="mix"):
            DiagnosticSpec(threshold=0.0, mix=1.5, observer=0, observed=1)
        with pytest.raises(ValueError, match="finite"):
            DiagnosticSpec(threshold=np.inf, mix=0.5, observer=0, observed=1)

    @pytest.mark.parametrize("mix", [0.0, 0.5, 1.0])
    def test_replica_mean_unbiased_for_prior_cdf(self, mix):
        cfg = edge_config(
            replicas=2000, horizon=20, diagnostics=DiagnosticsConfig(mix=mix)
        )
        summary = run_replicas(cfg)
        for report in summary.cdf_mix:
            assert report.within_tolerance, (
                f"mix={mix}, u={report.threshold}: mean {report.mean} vs target "
                f"{report.target} (stderr {report.stderr})"
            )


class TestIncrementCovariance:
    def make_trajectories(self, count=400, T=10):
        g = build_topology("edge", 2)
        s = GaussianSignalStructure(np.array([1.0, 2.0]))
        return [simulate_realization(g, s, T=T, seed=[77, r]) for r in range(count)]

    def test_distinct_rounds_are_orthogonal(self):
        trajectories = self.make_trajectories()
        spec = DiagnosticSpec(threshold=0.0, mix=0.5, observer=0, observed=1)
        report = message_increment_covariance(trajectories, spec, 3, 7)
        assert not report.degenerate
        assert abs(report.estimate) <= 4.0 * report.stderr
        assert not report.flagged

    def test_same_round_is_a_positive_variance(self):
        trajectories = self.make_trajectories(count=200)
        spec = DiagnosticSpec(threshold=0.0, mix=0.5, observer=0, observed=1)
        report = message_increment_covariance(trajectories, spec, 4, 4)
        assert report.estimate > 0.0
        assert not report.flagged

    def test_constant_samples_flagged_degenerate(self):
        g = build_topology("edge", 2)
        template = GaussianTrajectory(
            graph=g, theta=0.0, signals=np.zeros(2),
            messages=np.zeros((6, 2)), post_means=np.zeros((7, 2)),
            post_vars=np.full((7, 2), 0.5), seed=None,
        )
        spec = DiagnosticSpec(threshold=0.0, mix=0.5, observer=0, observed=1)
        report = message_increment_covariance([template, template, template], spec, 1, 3)
        assert report.degenerate
        assert report.stderr == 0.0
        assert not report.flagged

    def test_requires_at_least_two(self):
        trajectories = self.make_trajectories(count=1)
        spec = DiagnosticSpec(threshold=0.0, mix=0.5, observer=0, observed=1)
        with pytest.raises(ValueError, match="at least two"):
            message_increment_covariance(trajectories, spec, 1, 2)


class TestAveragingCheck:
    def test_identical_estimators_constant_quadratic(self):
        z = np.array([0.3, -1.2, 0.9, 2.0])
        report = averaging_strictly_helps_check(z, z)
        assert report.mean_square_diff == pytest.approx(0.0, abs=1e-15)
        assert not report.interior
        assert not report.strictly_helps

    def test_opposite_estimators_average_to_zero(self):
        z = np.array([1.0, -1.0, 2.0, -2.0])
        report = averaging_strictly_helps_check(z, -z)
        assert report.lambda_min == pytest.approx(0.5)
        assert report.interior
        assert report.min_second_moment == pytest.approx(0.0, abs=1e-15)
        assert report.strictly_helps
        assert report.mean_square_diff == pytest.approx(4.0 * np.mean(z**2))

    def test_orthogonal_equal_variance_halves_second_moment(self):
        z1 = np.array([1.0, -1.0, 1.0, -1.0])
        z2 = np.array([1.0, 1.0, -1.0, -1.0])
        report = averaging_strictly_helps_check(z1, z2)
        assert report.lambda_min == pytest.approx(0.5)
        assert report.min_second_moment == pytest.approx(0.5)
        assert report.strictly_helps

    def test_shape_validation(self):
        with pytest.raises(ValueError, match="equal-length"):
            averaging_strictly_helps_check(np.zeros(3), np.zeros(4))


class TestRunReplicas:
    def test_single_replica_equals_single_trajectory(self):
        cfg = edge_config(replicas=1, horizon=8)
        summary = run_replicas(cfg)
        traj = simulate_realization(
            cfg.graph(), cfg.signal_structure(), T=8, seed=[cfg.master_seed, 0]
        )
        oracle_mean, _ = bayes_oracle(cfg.signal_structure(), traj.signals)
        for t in range(9):
            expected_gap = agreement_gap(traj, t)
            assert summary.agreement_gap_quantiles[t, 1] == expected_gap
            expected_oracle = np.abs(traj.post_means[t] - oracle_mean).max()
            assert summary.oracle_gap_quantiles[t, 1] == expected_oracle

    def test_rerun_is_bit_identical(self):
        cfg = edge_config()
        one, two = run_replicas(cfg), run_replicas(cfg)
        np.testing.assert_array_equal(
            one.agreement_gap_quantiles, two.agreement_gap_quantiles
        )
        np.testing.assert_array_equal(one.oracle_gap_quantiles, two.oracle_gap_quantiles)

    def test_worker_count_never_changes_results(self):
        for engine_cfg in (
            edge_config(replicas=17),
            RunConfig(
                engine="binary_edge", topology_kind="edge", n=2, x1=0.6, x2=0.7,
                horizon=12, replicas=17, grid_size=101, mode="sampling", master_seed=9,
            ),
        ):
            serial = run_replicas(engine_cfg, workers=1)
            threaded = run_replicas(engine_cfg, workers=3)
            np.testing.assert_array_equal(
                serial.agreement_gap_quantiles, threaded.agreement_gap_quantiles
            )
            np.testing.assert_array_equal(
                serial.oracle_gap_quantiles, threaded.oracle_gap_quantiles
            )

    def test_master_seed_changes_results(self):
        a = run_replicas(edge_config(master_seed=1))
        b = run_replicas(edge_config(master_seed=2))
        assert not np.array_equal(a.oracle_gap_quantiles, b.oracle_gap_quantiles)

    def test_summary_matches_per_trajectory_estimates(self):
        cfg = edge_config(replicas=40, horizon=10, diagnostics=DiagnosticsConfig(t1=3, t2=7))
        summary = run_replicas(cfg)
        g, s = cfg.graph(), cfg.signal_structure()
        trajectories = [
            simulate_realization(g, s, T=10, seed=[cfg.master_seed, r]) for r in range(40)
        ]
        for report in summary.cdf_mix:
            spec = DiagnosticSpec(
                threshold=report.threshold, mix=report.mix,
                observer=report.observer, observed=report.observed,
            )
            loop_mean = np.mean([cdf_mix_estimate(t, spec, T=10) for t in trajectories])
            assert report.mean == pytest.approx(float(loop_mean), abs=1e-12)
        spec = DiagnosticSpec(threshold=-1.0, mix=0.5, observer=0, observed=1)
        loop_report = message_increment_covariance(trajectories, spec, 3, 7)
        assert summary.increments[0].estimate == pytest.approx(
            loop_report.estimate, abs=1e-12
        )

    def test_binary_summary_extras(self):
        cfg = RunConfig(
            engine="binary_edge", topology_kind="edge", n=2, x1=0.6, x2=0.7,
            horizon=5, replicas=3, grid_size=201, mode="action", master_seed=4,
        )
        summary = run_replicas(cfg)
        assert summary.extras["true_posterior"] == pytest.approx(0.42 / 0.54)
        assert summary.extras["action_limits"][0] == pytest.approx(3.6 / 4.4)
        assert summary.extras["action_limits"][1] == pytest.approx(0.875)
        assert summary.metadata["graph_connected"]

    def test_engine_errors_tagged_with_replica_id(self, monkeypatch):
        import samplecast.montecarlo as mc
        from samplecast.binary_edge import InconsistentTranscriptError

        real_run_edge = mc.run_edge

        def explode(x1, x2, T, mode, grid_size, seed):
            if seed[1] == 2:
                raise InconsistentTranscriptError("zero likelihood")
            return real_run_edge(x1, x2, T, mode, grid_size, seed)

        monkeypatch.setattr(mc, "run_edge", explode)
        cfg = RunConfig(
            engine="binary_edge", topology_kind="edge", n=2, x1=0.6, x2=0.7,
            horizon=3, replicas=5, grid_size=51, mode="sampling", master_seed=1,
        )
        with pytest.raises(InconsistentTranscriptError, match="replica 2"):
            run_replicas(cfg)

    def test_edge_learning_medians_per_agent(self):
        # long-horizon two-agent run: each agent's median distance to the
        # full-information mean falls below 0.05 by round 500
        cfg = edge_config(replicas=500, horizon=500, master_seed=20260809)
        from samplecast.montecarlo import gaussian_batch

        batch = gaussian_batch(cfg)
        oracle_mean, _ = bayes_oracle(cfg.signal_structure(), batch.signals)
        gaps = np.abs(batch.post_means[:, 500, :] - oracle_mean[:, None])
        per_agent = np.median(gaps, axis=0)
        assert np.all(per_agent <= 0.05), per_agent
        early = np.median(np.abs(batch.post_means[:, 50, :] - oracle_mean[:, None]), axis=0)
        assert np.all(per_agent < early)

    def test_disconnected_topology_flagged(self):
        cfg = RunConfig(
            engine="gaussian", topology_kind="custom", n=3, edges=((0, 1),),
            a=(1.0, 1.0, 1.0), horizon=3, replicas=2, master_seed=0,
        )
        summary = run_replicas(cfg)
        assert summary.metadata["graph_connected"] is False

    def test_json_dict_roundtrips(self):
        import json

        cfg = edge_config(replicas=8, diagnostics=DiagnosticsConfig())
        payload = run_replicas(cfg).to_json_dict()
        assert payload["schema_version"] == 1
        parsed = json.loads(json.dumps(payload))
        assert parsed["engine"] == "gaussian"
        assert len(parsed["agreement_gap"]["q50"]) == cfg.horizon + 1
        assert len(parsed["cdf_mix"]) == 3


class TestDistributionalInvariants:
    def test_posterior_means_form_a_martingale(self):
        cfg = edge_config(replicas=2000, horizon=10)
        g, s = cfg.graph(), cfg.signal_structure()
        from samplecast.gaussian import draw_replica, moment_plan, realize_from_draws

        plan = moment_plan(g, s, 10)
        draws = [draw_replica(s, 10, [cfg.master_seed, r]) for r in range(2000)]
        theta = np.array([d[0] for d in draws])
        signals = np.stack([d[1] for d in draws])
        noise = np.stack([d[2] for d in draws])
        means, _ = realize_from_draws(plan, theta, signals, noise)
        for agent, t in ((0, 2), (1, 5), (0, 9)):
            step = means[:, t + 1, agent] - means[:, t, agent]
            stderr = step.std(ddof=1) / np.sqrt(2000)
            assert abs(step.mean()) <= 4.0 * stderr

    def test_raw_message_increments_uncorrelated_across_rounds(self):
        # the noise an agent adds on top of its posterior mean is fresh
        # each round: Cov(Y(t1)-X(t1), Y(t2)-X(t2)) = 0 for t1 < t2
        cfg = edge_config(replicas=2000, horizon=10)
        g, s = cfg.graph(), cfg.signal_structure()
        from samplecast.gaussian import draw_replica, moment_plan, realize_from_draws

        plan = moment_plan(g, s, 10)
        draws = [draw_replica(s, 10, [cfg.master_seed, r]) for r in range(2000)]
        means, messages = realize_from_draws(
            plan,
            np.array([d[0] for d in draws]),
            np.stack([d[1] for d in draws]),
            np.stack([d[2] for d in draws]),
        )
        residual = messages - means[:, :-1, :]
        for agent, t1, t2 in ((0, 1, 4), (1, 2, 7), (0, 0, 9)):
            product = residual[:, t1, agent] * residual[:, t2, agent]
            stderr = product.std(ddof=1) / np.sqrt(product.shape[0])
            assert abs(product.mean()) <= 4.0 * stderr

    def test_variance_identity_matches_total_variance_form(self):
        cfg = edge_config(
            replicas=2000, horizon=12,
            diagnostics=DiagnosticsConfig(variance_rounds=(1, 6, 12)),
        )
        summary = run_replicas(cfg)
        assert summary.variance_identity, "expected variance reports"
        for report in summary.variance_identity:
            assert report.matching_form in ("total_variance", "both")
            # the printed product form is decisively rejected away from t=0
            assert abs(report.empirical - report.product_form) > 4.0 * report.stderr
