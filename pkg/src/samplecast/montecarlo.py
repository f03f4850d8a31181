"""Replica orchestration and identity checks for the sampling mechanism.

Replica r of a run with master seed m draws all of its randomness from
``SeedSequence([m, r])``, so results never depend on execution order or
worker count: workers only parallelize replica generation, and aggregation
is a deterministic fold over the replica index.

The diagnostics check the identities that make agreement-by-sampling work:
a mixed estimator of the prior threshold probability P(state <= u) built
from a neighbor's transmitted samples is unbiased by the tower property;
centered sampling indicators at different rounds are uncorrelated; the
posterior mean's spread obeys the total-variance identity; and averaging
two square-integrable estimators cannot leave the second moment flat
between distinct endpoints (the mixture-improvement check).
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from math import sqrt

import numpy as np
from scipy.special import ndtr

from .binary_edge import (
    EdgeRunResult,
    InconsistentTranscriptError,
    action_limit_posterior,
    run_edge,
    true_posterior,
)
from .config import RunConfig
from .gaussian import (
    GaussianTrajectory,
    NumericalDegeneracyError,
    bayes_oracle,
    draw_replica,
    moment_plan,
    realize_from_draws,
)
from .network import connected_components, is_connected

__all__ = [
    "DiagnosticSpec",
    "ReplicaSummary",
    "AveragingReport",
    "CdfMixReport",
    "IncrementReport",
    "VarianceIdentityReport",
    "GaussianBatchResult",
    "BinaryBatchResult",
    "gaussian_batch",
    "binary_batch",
    "summarize_gaussian",
    "summarize_binary",
    "run_replicas",
    "agreement_gap",
    "cdf_mix_estimate",
    "message_increment_covariance",
    "averaging_strictly_helps_check",
]

QUANTILE_LEVELS = (0.1, 0.5, 0.9)

# reported effects are flagged only beyond four standard errors, keeping the
# false-flag rate negligible across the whole diagnostic battery
FLAG_STDERR_MULTIPLE = 4.0

SCHEMA_VERSION = 1


@dataclass(frozen=True)
class DiagnosticSpec:
    """Threshold event {state <= threshold}, mixing weight, and agent pair."""

    threshold: float
    mix: float
    observer: int
    observed: int

    def __post_init__(self):
        if not np.isfinite(self.threshold):
            raise ValueError("threshold must be finite")
        if not 0.0 <= self.mix <= 1.0:
            raise ValueError(f"mix must lie in [0, 1], got {self.mix}")


@dataclass(frozen=True)
class CdfMixReport:
    threshold: float
    mix: float
    observer: int
    observed: int
    mean: float
    stderr: float
    target: float
    within_tolerance: bool


@dataclass(frozen=True)
class IncrementReport:
    t1: int
    t2: int
    estimate: float
    stderr: float
    flagged: bool
    degenerate: bool


@dataclass(frozen=True)
class VarianceIdentityReport:
    round: int
    agent: int
    empirical: float
    stderr: float
    total_variance_form: float
    product_form: float
    matching_form: str


@dataclass(frozen=True)
class AveragingReport:
    m11: float
    m22: float
    m12: float
    mean_square_diff: float
    lambda_min: float
    min_second_moment: float
    interior: bool
    strictly_helps: bool


@dataclass
class ReplicaSummary:
    """Aggregated Monte-Carlo diagnostics for one configuration."""

    engine: str
    replicas: int
    horizon: int
    master_seed: int
    quantile_levels: tuple[float, ...]
    agreement_gap_quantiles: np.ndarray  # [T+1, len(levels)]
    oracle_gap_quantiles: np.ndarray     # [T+1, len(levels)]
    cdf_mix: list[CdfMixReport]
    increments: list[IncrementReport]
    variance_identity: list[VarianceIdentityReport]
    extras: dict
    metadata: dict

    def median_agreement_gap(self, t: int) -> float:
        return float(self.agreement_gap_quantiles[t, self.quantile_levels.index(0.5)])

    def median_oracle_gap(self, t: int) -> float:
        return float(self.oracle_gap_quantiles[t, self.quantile_levels.index(0.5)])

    def to_json_dict(self) -> dict:
        def series(q):
            return {
                "rounds": list(range(q.shape[0])),
                **{
                    f"q{int(level * 100)}": [float(v) for v in q[:, k]]
                    for k, level in enumerate(self.quantile_levels)
                },
            }

        return {
            "schema_version": SCHEMA_VERSION,
            "engine": self.engine,
            "replicas": self.replicas,
            "horizon": self.horizon,
            "master_seed": self.master_seed,
            "quantile_levels": list(self.quantile_levels),
            "agreement_gap": series(self.agreement_gap_quantiles),
            "oracle_gap": series(self.oracle_gap_quantiles),
            "cdf_mix": [vars(r) for r in self.cdf_mix],
            "increments": [vars(r) for r in self.increments],
            "variance_identity": [vars(r) for r in self.variance_identity],
            "extras": self.extras,
            "metadata": self.metadata,
        }


def _posterior_cdf(mean, variance, threshold):
    return ndtr((threshold - mean) / np.sqrt(variance))


def agreement_gap(trajectory, t: int) -> float:
    """Largest posterior-summary difference across agents that can reach
    each other; 0 for a single agent."""
    if isinstance(trajectory, EdgeRunResult):
        return float(abs(trajectory.beliefs[t, 0] - trajectory.beliefs[t, 1]))
    means = trajectory.post_means[t]
    gap = 0.0
    for comp in connected_components(trajectory.graph):
        values = means[comp]
        gap = max(gap, float(values.max() - values.min()))
    return gap


def cdf_mix_estimate(trajectory: GaussianTrajectory, spec: DiagnosticSpec, T: int) -> float:
    """Mixed estimator of P(state <= threshold): the observer's posterior CDF
    blended with the observed neighbor's empirical sample frequency.

    Uses the T transmitted samples at rounds 0..T-1 and the posterior at
    round T; every term is unbiased for the prior threshold probability by
    the tower property.
    """
    if spec.observed not in trajectory.graph.adjacency[spec.observer]:
        raise ValueError(
            f"agents {spec.observer} and {spec.observed} are not adjacent: the "
            f"observer never sees those samples"
        )
    if not 1 <= T <= trajectory.messages.shape[0]:
        raise ValueError(f"T must lie in 1..{trajectory.messages.shape[0]}, got {T}")
    posterior_term = float(
        _posterior_cdf(
            trajectory.post_means[T, spec.observer],
            trajectory.post_vars[T, spec.observer],
            spec.threshold,
        )
    )
    frequency = float(np.mean(trajectory.messages[:T, spec.observed] <= spec.threshold))
    return spec.mix * posterior_term + (1.0 - spec.mix) * frequency


def _increments(post_means, post_vars, messages, spec: DiagnosticSpec, t: int):
    indicator = (messages[:, t, spec.observed] <= spec.threshold).astype(float)
    expected = _posterior_cdf(
        post_means[:, t, spec.observed], post_vars[t, spec.observed], spec.threshold
    )
    return indicator - expected


def _increment_report(post_means, post_vars, messages, spec, t1, t2) -> IncrementReport:
    product = _increments(post_means, post_vars, messages, spec, t1) * _increments(
        post_means, post_vars, messages, spec, t2
    )
    estimate = float(product.mean())
    spread = float(product.std(ddof=1))
    degenerate = spread == 0.0
    stderr = spread / sqrt(product.shape[0])
    flagged = (
        not degenerate
        and t1 != t2
        and abs(estimate) > FLAG_STDERR_MULTIPLE * stderr
    )
    return IncrementReport(
        t1=t1, t2=t2, estimate=estimate, stderr=stderr, flagged=flagged,
        degenerate=degenerate,
    )


def message_increment_covariance(
    trajectories, spec: DiagnosticSpec, t1: int, t2: int
) -> IncrementReport:
    """Empirical covariance of the centered sampling indicators at two rounds.

    The sampling mechanism makes these increments uncorrelated for t1 < t2;
    at t1 == t2 the estimate is the (positive) variance term and no
    orthogonality flag applies. ``degenerate`` marks zero-variance samples.
    """
    trajectories = list(trajectories)
    if len(trajectories) < 2:
        raise ValueError("need at least two trajectories for a covariance estimate")
    if not 0 <= t1 <= t2 < trajectories[0].messages.shape[0]:
        raise ValueError(f"need 0 <= t1 <= t2 < {trajectories[0].messages.shape[0]}")
    post_means = np.stack([t.post_means for t in trajectories])
    messages = np.stack([t.messages for t in trajectories])
    post_vars = trajectories[0].post_vars
    return _increment_report(post_means, post_vars, messages, spec, t1, t2)


def averaging_strictly_helps_check(z1, z2) -> AveragingReport:
    """Fit the second moment of the mixture lam*Z1 + (1-lam)*Z2 in lam.

    The quadratic's curvature equals the implied E[(Z1-Z2)^2]; if both
    endpoints already minimize it, the two estimators coincide, otherwise an
    interior mixture strictly improves on at least one endpoint.
    """
    z1 = np.asarray(z1, dtype=float)
    z2 = np.asarray(z2, dtype=float)
    if z1.shape != z2.shape or z1.ndim != 1 or z1.size == 0:
        raise ValueError("paired samples must be equal-length 1-d arrays")
    m11 = float(np.mean(z1 * z1))
    m22 = float(np.mean(z2 * z2))
    m12 = float(np.mean(z1 * z2))
    curvature = m11 + m22 - 2.0 * m12
    scale = max(m11, m22, 1e-300)
    if curvature <= 1e-12 * scale:
        # constant quadratic: every mixture matches the endpoints
        return AveragingReport(
            m11=m11, m22=m22, m12=m12, mean_square_diff=max(curvature, 0.0),
            lambda_min=0.5, min_second_moment=m22, interior=False,
            strictly_helps=False,
        )
    lam = (m22 - m12) / curvature
    interior = 0.0 < lam < 1.0
    lam_clamped = min(max(lam, 0.0), 1.0)
    min_value = (
        lam_clamped**2 * curvature + 2.0 * lam_clamped * (m12 - m22) + m22
    )
    return AveragingReport(
        m11=m11, m22=m22, m12=m12, mean_square_diff=curvature,
        lambda_min=lam_clamped, min_second_moment=min_value, interior=interior,
        strictly_helps=min_value < min(m11, m22) - 1e-12 * scale,
    )


def _chunks(total: int, workers: int):
    workers = max(1, min(workers, total))
    bounds = np.linspace(0, total, workers + 1).astype(int)
    return [(int(a), int(b)) for a, b in zip(bounds[:-1], bounds[1:]) if b > a]


def _collect(workers, chunk_bounds, job):
    if workers <= 1 or len(chunk_bounds) <= 1:
        return [job(a, b) for a, b in chunk_bounds]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        futures = [pool.submit(job, a, b) for a, b in chunk_bounds]
        return [f.result() for f in futures]  # submit order, not completion order


def _quantiles(values: np.ndarray) -> np.ndarray:
    # values: [R, T+1] -> [T+1, len(levels)]
    return np.quantile(values, QUANTILE_LEVELS, axis=0).T


@dataclass
class GaussianBatchResult:
    """All replicas of one gaussian configuration, realized in a fixed-shape
    batch so results never depend on worker count."""

    plan: object
    theta: np.ndarray       # [R]
    signals: np.ndarray     # [R, n]
    messages: np.ndarray    # [R, T, n]
    post_means: np.ndarray  # [R, T+1, n]


@dataclass
class BinaryBatchResult:
    """All replicas of one binary-edge configuration."""

    beliefs: np.ndarray   # [R, T+1, 2]
    messages: np.ndarray  # [R, T, 2]
    reference: float      # full-information posterior of state 1


def gaussian_batch(config: RunConfig, workers: int = 1) -> GaussianBatchResult:
    g = config.graph()
    s = config.signal_structure()
    T, R = config.horizon, config.replicas
    plan = moment_plan(g, s, T)

    def draw_chunk(r0, r1):
        theta = np.empty(r1 - r0)
        signals = np.empty((r1 - r0, g.n))
        noise = np.empty((r1 - r0, T, g.n))
        for k, r in enumerate(range(r0, r1)):
            theta[k], signals[k], noise[k] = draw_replica(s, T, [config.master_seed, r])
        return theta, signals, noise

    parts = _collect(workers, _chunks(R, workers), draw_chunk)
    theta = np.concatenate([p[0] for p in parts])
    signals = np.concatenate([p[1] for p in parts])
    noise = np.concatenate([p[2] for p in parts])
    post_means, messages = realize_from_draws(plan, theta, signals, noise)
    return GaussianBatchResult(
        plan=plan, theta=theta, signals=signals, messages=messages,
        post_means=post_means,
    )


def summarize_gaussian(config: RunConfig, batch: GaussianBatchResult) -> ReplicaSummary:
    g = config.graph()
    s = config.signal_structure()
    T, R = config.horizon, config.replicas
    plan = batch.plan
    post_means, messages, signals = batch.post_means, batch.messages, batch.signals

    oracle_means, sigma_limit = bayes_oracle(s, signals)
    oracle_gaps = np.abs(post_means - oracle_means[:, None, None]).max(axis=2)
    components = connected_components(g)
    agreement = np.zeros((R, T + 1))
    for comp in components:
        if len(comp) < 2:
            continue
        block = post_means[:, :, comp]
        agreement = np.maximum(agreement, block.max(axis=2) - block.min(axis=2))

    cdf_mix_reports: list[CdfMixReport] = []
    increment_reports: list[IncrementReport] = []
    variance_reports: list[VarianceIdentityReport] = []
    diag = config.diagnostics
    if diag is not None:
        if diag.observed not in g.adjacency[diag.observer]:
            raise ValueError(
                f"agents {diag.observer} and {diag.observed} are not adjacent: "
                f"the observer never sees those samples"
            )
        for u in diag.thresholds:
            spec = DiagnosticSpec(
                threshold=u, mix=diag.mix, observer=diag.observer, observed=diag.observed
            )
            posterior_term = _posterior_cdf(
                post_means[:, T, spec.observer], plan.variances[T, spec.observer], u
            )
            frequency = (messages[:, :, spec.observed] <= u).mean(axis=1)
            values = spec.mix * posterior_term + (1.0 - spec.mix) * frequency
            mean = float(values.mean())
            stderr = float(values.std(ddof=1)) / sqrt(R)
            target = float(ndtr(u))
            cdf_mix_reports.append(
                CdfMixReport(
                    threshold=float(u), mix=diag.mix, observer=spec.observer,
                    observed=spec.observed, mean=mean, stderr=stderr, target=target,
                    within_tolerance=abs(mean - target)
                    <= FLAG_STDERR_MULTIPLE * stderr,
                )
            )
        spec = DiagnosticSpec(
            threshold=diag.thresholds[0] if diag.thresholds else 0.0,
            mix=diag.mix, observer=diag.observer, observed=diag.observed,
        )
        increment_reports.append(
            _increment_report(post_means, plan.variances, messages, spec, diag.t1, diag.t2)
        )
        rounds = diag.variance_rounds or tuple(sorted({1, T // 2, T}))
        for t in rounds:
            for agent in range(g.n):
                x = post_means[:, t, agent]
                centered = x - x.mean()
                empirical = float(np.sum(centered**2) / (R - 1))
                fourth = float(np.mean(centered**4))
                stderr = sqrt(max(fourth - empirical**2, 0.0) / R)
                total_form = 1.0 - float(plan.variances[t, agent])
                product_form = float(
                    plan.variances[t, agent] * (1.0 - plan.variances[t, agent])
                )
                tol = FLAG_STDERR_MULTIPLE * stderr
                matches_total = abs(empirical - total_form) <= tol
                matches_product = abs(empirical - product_form) <= tol
                if matches_total and matches_product:
                    form = "both"
                elif matches_total:
                    form = "total_variance"
                elif matches_product:
                    form = "posterior_product"
                else:
                    form = "neither"
                variance_reports.append(
                    VarianceIdentityReport(
                        round=int(t), agent=agent, empirical=empirical, stderr=stderr,
                        total_variance_form=total_form, product_form=product_form,
                        matching_form=form,
                    )
                )

    extras = {
        "sigma_limit": float(sigma_limit),
        "signal_coefficients": [float(v) for v in s.a],
        "final_post_means_replica0": [float(v) for v in post_means[0, T]],
        "final_post_vars": [float(v) for v in plan.variances[T]],
    }
    metadata = {
        "topology": {"kind": config.topology_kind, "n": config.n},
        "graph_connected": is_connected(g),
        "jitter_events": [list(e) for e in plan.jitter_events],
    }
    return ReplicaSummary(
        engine="gaussian", replicas=R, horizon=T, master_seed=config.master_seed,
        quantile_levels=QUANTILE_LEVELS,
        agreement_gap_quantiles=_quantiles(agreement),
        oracle_gap_quantiles=_quantiles(oracle_gaps),
        cdf_mix=cdf_mix_reports, increments=increment_reports,
        variance_identity=variance_reports, extras=extras, metadata=metadata,
    )


def binary_batch(config: RunConfig, workers: int = 1) -> BinaryBatchResult:
    T, R = config.horizon, config.replicas

    def run_chunk(r0, r1):
        beliefs = np.empty((r1 - r0, T + 1, 2))
        messages = np.empty((r1 - r0, T, 2), dtype=np.int64)
        for k, r in enumerate(range(r0, r1)):
            try:
                result = run_edge(
                    config.x1, config.x2, T, config.mode, config.grid_size,
                    seed=[config.master_seed, r],
                )
            except (InconsistentTranscriptError, NumericalDegeneracyError) as exc:
                raise type(exc)(f"replica {r}: {exc}") from exc
            beliefs[k] = result.beliefs
            messages[k] = result.messages
        return beliefs, messages

    parts = _collect(workers, _chunks(R, workers), run_chunk)
    return BinaryBatchResult(
        beliefs=np.concatenate([p[0] for p in parts]),
        messages=np.concatenate([p[1] for p in parts]),
        reference=true_posterior(config.x1, config.x2),
    )


def summarize_binary(config: RunConfig, batch: BinaryBatchResult) -> ReplicaSummary:
    T, R = config.horizon, config.replicas
    beliefs = batch.beliefs

    reference = batch.reference
    agreement = np.abs(beliefs[:, :, 0] - beliefs[:, :, 1])
    oracle_gaps = np.abs(beliefs - reference).max(axis=2)

    limits = [
        action_limit_posterior(x) if x > 0.5 else None for x in (config.x1, config.x2)
    ]
    extras = {
        "x1": config.x1, "x2": config.x2, "mode": config.mode,
        "grid_size": config.grid_size, "true_posterior": reference,
        "action_limits": limits,
        "final_beliefs_replica0": [float(v) for v in beliefs[0, T]],
    }
    metadata = {
        "topology": {"kind": "edge", "n": 2},
        "graph_connected": True,
        "jitter_events": [],
    }
    return ReplicaSummary(
        engine="binary_edge", replicas=R, horizon=T, master_seed=config.master_seed,
        quantile_levels=QUANTILE_LEVELS,
        agreement_gap_quantiles=_quantiles(agreement),
        oracle_gap_quantiles=_quantiles(oracle_gaps),
        cdf_mix=[], increments=[], variance_identity=[], extras=extras,
        metadata=metadata,
    )


def run_replicas(config: RunConfig, workers: int = 1) -> ReplicaSummary:
    """Run all replicas of a configuration and aggregate the diagnostics.

    A pure function of (config, master seed): worker count and scheduling
    cannot change the summary.
    """
    if config.engine == "gaussian":
        return summarize_gaussian(config, gaussian_batch(config, workers))
    return summarize_binary(config, binary_batch(config, workers))
