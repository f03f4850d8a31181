"""Exact conditional-moment propagation for the Gaussian messaging model.

Model: a scalar hidden state with standard-normal prior; agent i privately
observes ``S_i ~ N(a_i * state, 1)``, conditionally independent across
agents. Every round, each agent draws one sample from its current posterior
``N(X_i(t), sigma_i(t))`` and sends it to all neighbors simultaneously;
received samples are appended to the agent's history.

Conditional on the hidden state, the stacked histories remain jointly
Gaussian, so the model is fully characterized by the per-agent conditional
mean coefficient vectors ``mu_i(t)`` (history mean = state * mu_i(t)) and
the per-pair conditional covariance blocks ``Sigma_ij(t)``. With
``q_i = mu_i' Sigma_ii^{-1} mu_i`` the posterior of agent i is

    sigma_i(t) = 1 / (q_i + 1),
    X_i(t)     = <w_i(t), H_i(t)>,   w_i(t) = Sigma_ii^{-1} mu_i * sigma_i(t),

and a transmitted sample ``Y_i(t) = X_i(t) + sqrt(sigma_i(t)) * Z`` (fresh
standard-normal Z) contributes, conditional on the state,

    mean coefficient      q_i / (q_i + 1),
    Cov(H_k(t), Y_i(t))   Sigma_ki(t) w_i(t),
    Cov(Y_i(t), Y_j(t))   w_i(t)' Sigma_ij(t) w_j(t) + 1{i=j} sigma_i(t).

The recursion is deterministic and shared by all Monte-Carlo replicas;
realizations only re-weight the realized histories with the precomputed
coefficient vectors.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import cho_factor, cho_solve
from scipy.linalg.lapack import dpocon

from .network import NetworkGraph

__all__ = [
    "GaussianSignalStructure",
    "GaussianMomentState",
    "GaussianPosterior",
    "GaussianTrajectory",
    "MomentPlan",
    "NumericalDegeneracyError",
    "init_moments",
    "posterior_params",
    "step_moments",
    "moment_plan",
    "simulate_realization",
    "realize_from_draws",
    "bayes_oracle",
]

# Condition-estimate cutoff (cond > 1e12 is treated as singular) and the
# diagonal jitter applied only after a failed factorization.
_RCOND_FLOOR = 1e-12
_JITTER = 1e-12


class NumericalDegeneracyError(RuntimeError):
    """A history covariance block became numerically singular."""


@dataclass(frozen=True)
class GaussianSignalStructure:
    """Per-agent signal coefficients; prior and noise variances are fixed to 1."""

    a: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.a, dtype=float)
        if arr.ndim != 1:
            raise ValueError("signal coefficients must be a 1-d vector")
        if not np.all(np.isfinite(arr)):
            raise ValueError("signal coefficients must be finite")
        object.__setattr__(self, "a", arr)

    @property
    def n(self) -> int:
        return self.a.shape[0]


@dataclass
class GaussianMomentState:
    """Conditional moments of all agents' histories at round ``t``.

    ``mu[i]`` has length ``1 + t*deg(i)``; ``sigma`` maps ordered pairs
    ``(i, j)`` with ``i <= j`` to the covariance block, transposed on read
    via :meth:`sigma_block`. ``jitter_events`` is numeric bookkeeping
    ((round, agent) pairs where the diagonal jitter was needed), not part of
    the value semantics.
    """

    t: int
    mu: list[np.ndarray]
    sigma: dict[tuple[int, int], np.ndarray]
    jitter_events: list[tuple[int, int]] = field(default_factory=list)

    def sigma_block(self, i: int, j: int) -> np.ndarray:
        if i <= j:
            return self.sigma[(i, j)]
        return self.sigma[(j, i)].T

    @property
    def n(self) -> int:
        return len(self.mu)


@dataclass(frozen=True)
class GaussianPosterior:
    """Posterior variance and history-weight vector; the mean is realized
    against a concrete history as ``coeffs @ history``."""

    variance: float
    coeffs: np.ndarray
    mean: float | None = None

    def realize(self, history: np.ndarray) -> float:
        return float(np.asarray(history) @ self.coeffs)


@dataclass
class GaussianTrajectory:
    """One seeded realization of the messaging process.

    ``post_means[t, i]`` covers rounds ``0..T`` and ``messages[t, i]`` rounds
    ``0..T-1``; ``post_vars`` is the deterministic variance schedule shared
    by every realization of the same graph and signal structure.
    """

    graph: NetworkGraph
    theta: float
    signals: np.ndarray
    messages: np.ndarray
    post_means: np.ndarray
    post_vars: np.ndarray
    seed: object


@dataclass
class MomentPlan:
    """Deterministic posterior schedule: weight vectors and variances per round."""

    graph: NetworkGraph
    variances: np.ndarray            # [T+1, n]
    weights: list[list[np.ndarray]]  # weights[t][i], length 1 + t*deg(i)
    state: GaussianMomentState       # final moment state at round T
    jitter_events: list[tuple[int, int]]

    @property
    def horizon(self) -> int:
        return self.variances.shape[0] - 1


def init_moments(g: NetworkGraph, s: GaussianSignalStructure) -> GaussianMomentState:
    """Round-0 moments: histories are the private signals, independent given the state."""
    if s.n != g.n:
        raise ValueError(f"signal structure has {s.n} coefficients for {g.n} agents")
    mu = [np.array([s.a[i]]) for i in range(g.n)]
    sigma = {
        (i, j): np.array([[1.0]]) if i == j else np.array([[0.0]])
        for i in range(g.n)
        for j in range(i, g.n)
    }
    return GaussianMomentState(t=0, mu=mu, sigma=sigma)


def _factor_spd(mat: np.ndarray, agent: int, round_: int, events: list | None):
    """Cholesky with one jittered retry and a reciprocal-condition check."""
    anorm = np.linalg.norm(mat, 1) if mat.size else 0.0
    try:
        factor = cho_factor(mat, lower=False, check_finite=False)
    except np.linalg.LinAlgError:
        try:
            factor = cho_factor(
                mat + _JITTER * np.eye(mat.shape[0]), lower=False, check_finite=False
            )
        except np.linalg.LinAlgError:
            raise NumericalDegeneracyError(
                f"history covariance for agent {agent} at round {round_} is not "
                f"positive definite even after diagonal jitter"
            ) from None
        if events is not None:
            events.append((round_, agent))
    rcond, info = dpocon(factor[0], anorm)
    if info != 0 or rcond < _RCOND_FLOOR:
        raise NumericalDegeneracyError(
            f"history covariance for agent {agent} at round {round_} has condition "
            f"estimate beyond {1.0 / _RCOND_FLOOR:.0e} (rcond={rcond:.3e})"
        )
    return factor


def _agent_posterior(state: GaussianMomentState, i: int, events: list | None):
    """Posterior weight vector, variance and information q for one agent."""
    factor = _factor_spd(state.sigma[(i, i)], i, state.t, events)
    c = cho_solve(factor, state.mu[i], check_finite=False)
    q = float(state.mu[i] @ c)
    sigma_post = 1.0 / (q + 1.0)
    return c * sigma_post, sigma_post, q


def posterior_params(state: GaussianMomentState, i: int) -> GaussianPosterior:
    """Posterior variance and history-weight vector of agent ``i`` at round ``state.t``."""
    w, sigma_post, _ = _agent_posterior(state, i, state.jitter_events)
    return GaussianPosterior(variance=sigma_post, coeffs=w)


def _advance(
    state: GaussianMomentState,
    g: NetworkGraph,
    posteriors: list[tuple[np.ndarray, float, float]],
) -> GaussianMomentState:
    n = g.n
    weights = [p[0] for p in posteriors]
    sig = np.array([p[1] for p in posteriors])
    q = np.array([p[2] for p in posteriors])
    ycoef = q * sig  # conditional mean coefficient of each transmitted sample

    # cross[i][l] = Cov(H_i(t), Y_l(t) | state)
    cross = [[state.sigma_block(i, l) @ weights[l] for l in range(n)] for i in range(n)]
    vmat = np.empty((n, n))
    for k in range(n):
        for l in range(k, n):
            vmat[k, l] = vmat[l, k] = float(weights[k] @ cross[k][l])
        vmat[k, k] += sig[k]

    new_mu = [
        np.concatenate([state.mu[i], ycoef[np.array(g.adjacency[i], dtype=int)]])
        if g.degree(i)
        else state.mu[i].copy()
        for i in range(n)
    ]
    new_sigma = {}
    for i in range(n):
        di = state.mu[i].shape[0]
        for j in range(i, n):
            dj = state.mu[j].shape[0]
            block = np.empty((di + g.degree(i), dj + g.degree(j)))
            block[:di, :dj] = state.sigma[(i, j)]
            for col, l in enumerate(g.adjacency[j]):
                block[:di, dj + col] = cross[i][l]
            for row, k in enumerate(g.adjacency[i]):
                block[di + row, :dj] = cross[j][k]
                for col, l in enumerate(g.adjacency[j]):
                    block[di + row, dj + col] = vmat[k, l]
            new_sigma[(i, j)] = block
    return GaussianMomentState(
        t=state.t + 1, mu=new_mu, sigma=new_sigma, jitter_events=list(state.jitter_events)
    )


def step_moments(
    state: GaussianMomentState, g: NetworkGraph, s: GaussianSignalStructure
) -> GaussianMomentState:
    """Advance the moment recursion by one simultaneous message round."""
    if s.n != g.n or state.n != g.n:
        raise ValueError("state, graph and signal structure disagree on agent count")
    events = state.jitter_events
    posteriors = [_agent_posterior(state, i, events) for i in range(g.n)]
    return _advance(state, g, posteriors)


def moment_plan(g: NetworkGraph, s: GaussianSignalStructure, T: int) -> MomentPlan:
    """Run the deterministic recursion to round ``T`` and keep the posterior schedule."""
    if T < 1:
        raise ValueError(f"horizon must be >= 1, got {T}")
    state = init_moments(g, s)
    weights: list[list[np.ndarray]] = []
    variances = np.empty((T + 1, g.n))
    for t in range(T + 1):
        posteriors = [_agent_posterior(state, i, state.jitter_events) for i in range(g.n)]
        weights.append([p[0] for p in posteriors])
        variances[t] = [p[1] for p in posteriors]
        if t < T:
            state = _advance(state, g, posteriors)
    return MomentPlan(
        graph=g,
        variances=variances,
        weights=weights,
        state=state,
        jitter_events=list(state.jitter_events),
    )


def realize_from_draws(
    plan: MomentPlan,
    theta: np.ndarray,
    signals: np.ndarray,
    noise: np.ndarray,
) -> tuple[np.ndarray, np.ndarray]:
    """Replay the message process for pre-drawn randomness.

    ``theta`` has shape [R], ``signals`` [R, n], ``noise`` [R, T, n]; returns
    posterior means [R, T+1, n] and messages [R, T, n]. Vectorized across
    replicas; bit-identical to replica-by-replica execution.
    """
    g = plan.graph
    n = g.n
    R, T = noise.shape[0], noise.shape[1]
    if T != plan.horizon:
        raise ValueError(f"noise has {T} rounds but the plan covers {plan.horizon}")
    hist = [np.empty((R, 1 + T * g.degree(i))) for i in range(n)]
    for i in range(n):
        hist[i][:, 0] = signals[:, i]
    filled = [1] * n
    post_means = np.empty((R, T + 1, n))
    messages = np.empty((R, T, n))
    for t in range(T + 1):
        for i in range(n):
            w = plan.weights[t][i]
            post_means[:, t, i] = hist[i][:, : w.shape[0]] @ w
        if t == T:
            break
        messages[:, t, :] = post_means[:, t, :] + np.sqrt(plan.variances[t]) * noise[:, t, :]
        for i in range(n):
            for j in g.adjacency[i]:
                hist[i][:, filled[i]] = messages[:, t, j]
                filled[i] += 1
    return post_means, messages


def draw_replica(
    s: GaussianSignalStructure, T: int, seed
) -> tuple[float, np.ndarray, np.ndarray]:
    """Draw (state, signals, message noise) for one replica.

    The draw order is fixed: state, then the signal noise vector, then the
    [T, n] message-noise matrix, all from one generator seeded by
    ``SeedSequence(seed)``. This is the reproducibility contract.
    """
    rng = np.random.default_rng(np.random.SeedSequence(seed))
    theta = float(rng.standard_normal())
    signals = s.a * theta + rng.standard_normal(s.n)
    noise = rng.standard_normal((T, s.n))
    return theta, signals, noise


def simulate_realization(
    g: NetworkGraph, s: GaussianSignalStructure, T: int, seed
) -> GaussianTrajectory:
    """Simulate one seeded realization over ``T`` message rounds.

    ``seed`` is SeedSequence entropy (an int, or a list of ints as used by
    the replica harness). Identical seeds reproduce the trajectory
    bit-for-bit.
    """
    plan = moment_plan(g, s, T)
    return realize_trajectory(plan, s, seed)


def realize_trajectory(plan: MomentPlan, s: GaussianSignalStructure, seed) -> GaussianTrajectory:
    """Realize one trajectory against an already-computed moment plan."""
    theta, signals, noise = draw_replica(s, plan.horizon, seed)
    post_means, messages = realize_from_draws(
        plan, np.array([theta]), signals[None, :], noise[None, :, :]
    )
    return GaussianTrajectory(
        graph=plan.graph,
        theta=theta,
        signals=signals,
        messages=messages[0],
        post_means=post_means[0],
        post_vars=plan.variances,
        seed=seed,
    )


def bayes_oracle(s: GaussianSignalStructure, signals: np.ndarray) -> tuple:
    """Full-information posterior (mean, variance) given every agent's signal.

    Accepts a single signal vector or an array whose last axis indexes
    agents; the mean is returned with the matching leading shape.
    """
    signals = np.asarray(signals, dtype=float)
    if signals.shape[-1] != s.n:
        raise ValueError(
            f"expected {s.n} signals on the last axis, got {signals.shape[-1]}"
        )
    denom = float(s.a @ s.a) + 1.0
    mean = signals @ s.a / denom
    if mean.ndim == 0:
        mean = float(mean)
    return mean, 1.0 / denom
