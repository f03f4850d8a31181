"""Exact grid inference for the two-agent, binary-state messaging game.

The hidden state is 0 or 1 with an even prior. Each agent privately draws a
signal on [0, 1] with density ``2x`` under state 1 and ``2 - 2x`` under
state 0. Every round both agents simultaneously send one bit: a draw from
the current posterior probability of state 1 (sampling mode) or the more
likely state (action mode, ties send 1).

Inference marginalizes the opponent's signal over a uniform grid of
hypothetical values. Each agent's own transmitted bits are *not* part of its
own conditioning -- a draw from one's own posterior carries no information
beyond one's own history -- but they are replayed to evaluate the opponent's
hypothetical belief curve, which is what makes the observed bits
informative. That asymmetry is the heart of the mutual recursion: the state
keeps, per agent, a per-grid-point log-likelihood of that agent's observed
bit stream, and each agent's belief curve is rebuilt each round from the
*other* agent's log-likelihood vector.

Message likelihoods accumulate in log space and are renormalized (max
subtracted) every round, so transcripts hundreds of rounds long cannot
underflow.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "BinarySignalModel",
    "BinaryEdgeState",
    "EdgeRunResult",
    "InconsistentTranscriptError",
    "MODES",
    "true_posterior",
    "action_limit_posterior",
    "init_edge_state",
    "apply_messages",
    "step_edge",
    "belief_of",
    "run_edge",
]

MODES = ("sampling", "action")

# Bernoulli parameters are clamped away from 0/1 before taking log mass so
# degenerate signals at the grid endpoints cannot produce -inf in sampling
# mode.
_CLAMP = 1e-12


class InconsistentTranscriptError(RuntimeError):
    """An observed action-mode bit has zero likelihood at every grid point."""


@dataclass(frozen=True)
class BinarySignalModel:
    """Triangular signal densities on [0, 1] with the even binary prior."""

    prior_one: float = 0.5

    @staticmethod
    def density(x, state: int):
        x = np.asarray(x, dtype=float)
        return 2.0 * x if state == 1 else 2.0 - 2.0 * x


def true_posterior(x1: float, x2: float) -> float:
    """Full-information posterior of state 1 given both signals."""
    if not (0.0 <= x1 <= 1.0 and 0.0 <= x2 <= 1.0):
        raise ValueError(f"signals must lie in [0, 1], got ({x1}, {x2})")
    num = x1 * x2
    den = num + (1.0 - x1) * (1.0 - x2)
    if den == 0.0:
        raise ValueError(
            f"posterior undefined for contradictory certain signals ({x1}, {x2})"
        )
    return num / den


def action_limit_posterior(x: float) -> float:
    """Frozen action-mode belief 6x/(2+4x) once both agents keep sending 1."""
    if not (0.5 < x <= 1.0):
        raise ValueError(f"closed form requires a signal in (0.5, 1], got {x}")
    return 6.0 * x / (2.0 + 4.0 * x)


@dataclass
class BinaryEdgeState:
    """Transcript-conditional inference state for both agents.

    ``curves[a][k]`` is agent a's posterior probability of state 1 given a
    hypothetical own signal at ``grid[k]`` and the opponent bits observed so
    far; ``loglik[a][k]`` is the cumulative log-likelihood of agent a's own
    *observed* bit stream under a hypothetical signal ``grid[k]`` (finite in
    sampling mode, 0/-inf in action mode).
    """

    grid: np.ndarray
    mode: str
    x_actual: tuple[float, float]
    signal_cells: tuple[int, int]
    t: int
    transcript: tuple[tuple[int, int], ...]
    loglik: tuple[np.ndarray, np.ndarray]
    curves: tuple[np.ndarray, np.ndarray]

    @property
    def grid_size(self) -> int:
        return self.grid.shape[0]


def _curve_from_opponent(grid: np.ndarray, opp_loglik: np.ndarray) -> np.ndarray:
    """Posterior in the own signal after marginalizing the opponent's grid."""
    finite = np.isfinite(opp_loglik)
    if not np.any(finite):
        raise InconsistentTranscriptError(
            "observed bit stream has zero likelihood at every grid point"
        )
    w = np.exp(opp_loglik - opp_loglik[finite].max())
    like_one = 2.0 * grid
    like_zero = 2.0 - 2.0 * grid
    c1 = like_one @ w
    c0 = like_zero @ w
    num = like_one * c1
    den = num + like_zero * c0
    with np.errstate(invalid="ignore"):
        curve = np.where(den > 0.0, num / np.where(den > 0.0, den, 1.0), np.nan)
    return curve


def _log_mass(curve: np.ndarray, bit: int, mode: str) -> np.ndarray:
    """Per-grid-point log-likelihood of one observed bit."""
    if mode == "sampling":
        p = np.clip(curve, _CLAMP, 1.0 - _CLAMP)
        out = np.log(p) if bit == 1 else np.log1p(-p)
    else:
        sends_one = curve >= 0.5
        consistent = sends_one if bit == 1 else ~sends_one
        out = np.where(consistent, 0.0, -np.inf)
    # contradictory-certainty cells (curve undefined) cannot be the signal
    return np.where(np.isnan(curve), -np.inf, out)


def init_edge_state(x1: float, x2: float, grid_size: int, mode: str) -> BinaryEdgeState:
    """Round-0 state: uniform-prior beliefs equal the hypothetical signal value."""
    if mode not in MODES:
        raise ValueError(f"mode must be one of {MODES}, got {mode!r}")
    if grid_size < 2:
        raise ValueError(f"grid_size must be >= 2, got {grid_size}")
    if not (0.0 <= x1 <= 1.0 and 0.0 <= x2 <= 1.0):
        raise ValueError(f"signals must lie in [0, 1], got ({x1}, {x2})")
    grid = np.linspace(0.0, 1.0, grid_size)
    cells = (
        int(np.clip(np.rint(x1 * (grid_size - 1)), 0, grid_size - 1)),
        int(np.clip(np.rint(x2 * (grid_size - 1)), 0, grid_size - 1)),
    )
    zero = np.zeros(grid_size)
    return BinaryEdgeState(
        grid=grid,
        mode=mode,
        x_actual=(float(x1), float(x2)),
        signal_cells=cells,
        t=0,
        transcript=(),
        loglik=(zero, zero.copy()),
        curves=(grid.copy(), grid.copy()),
    )


def apply_messages(state: BinaryEdgeState, bit1: int, bit2: int) -> BinaryEdgeState:
    """Advance one round with the given simultaneous bits.

    Used by :func:`step_edge` after drawing, and directly when replaying a
    recorded transcript.
    """
    logs = []
    for agent, bit in enumerate((bit1, bit2)):
        new = state.loglik[agent] + _log_mass(state.curves[agent], bit, state.mode)
        finite = np.isfinite(new)
        if not np.any(finite):
            raise InconsistentTranscriptError(
                f"bit {bit} from agent {agent} at round {state.t} has zero "
                f"likelihood at every grid point"
            )
        logs.append(new - new[finite].max())
    new_l1, new_l2 = logs
    return BinaryEdgeState(
        grid=state.grid,
        mode=state.mode,
        x_actual=state.x_actual,
        signal_cells=state.signal_cells,
        t=state.t + 1,
        transcript=state.transcript + ((int(bit1), int(bit2)),),
        loglik=(new_l1, new_l2),
        curves=(
            _curve_from_opponent(state.grid, new_l2),
            _curve_from_opponent(state.grid, new_l1),
        ),
    )


def belief_of(state: BinaryEdgeState, agent: int) -> float:
    """Current posterior of state 1 at the agent's actual signal cell."""
    if agent not in (0, 1):
        raise ValueError(f"agent must be 0 or 1, got {agent}")
    value = state.curves[agent][state.signal_cells[agent]]
    if np.isnan(value):
        raise InconsistentTranscriptError(
            f"belief of agent {agent} undefined: its signal cell contradicts the transcript"
        )
    return float(value)


def step_edge(state: BinaryEdgeState, rng: np.random.Generator | None = None) -> BinaryEdgeState:
    """Draw both agents' bits from their current beliefs and advance one round.

    Sampling mode draws two uniforms (agent order); action mode is
    deterministic and needs no generator.
    """
    beliefs = (belief_of(state, 0), belief_of(state, 1))
    if state.mode == "sampling":
        if rng is None:
            raise ValueError("sampling mode requires a random generator")
        u = rng.random(2)
        bits = (int(u[0] < beliefs[0]), int(u[1] < beliefs[1]))
    else:
        bits = (int(beliefs[0] >= 0.5), int(beliefs[1] >= 0.5))
    return apply_messages(state, *bits)


@dataclass
class EdgeRunResult:
    """Per-round beliefs and bits of one seeded run.

    ``beliefs[t, a]`` covers rounds 0..T (belief after t message rounds);
    ``messages[t, a]`` covers rounds 0..T-1.
    """

    beliefs: np.ndarray
    messages: np.ndarray
    true_posterior: float
    state: BinaryEdgeState
    seed: object


def run_edge(
    x1: float, x2: float, T: int, mode: str, grid_size: int, seed
) -> EdgeRunResult:
    """Run the two-agent game for ``T`` rounds, reproducibly from ``seed``."""
    if T < 1:
        raise ValueError(f"horizon must be >= 1, got {T}")
    rng = np.random.default_rng(np.random.SeedSequence(seed))
    state = init_edge_state(x1, x2, grid_size, mode)
    beliefs = np.empty((T + 1, 2))
    messages = np.empty((T, 2), dtype=np.int64)
    beliefs[0] = (belief_of(state, 0), belief_of(state, 1))
    for t in range(T):
        state = step_edge(state, rng)
        messages[t] = state.transcript[-1]
        beliefs[t + 1] = (belief_of(state, 0), belief_of(state, 1))
    return EdgeRunResult(
        beliefs=beliefs,
        messages=messages,
        true_posterior=true_posterior(x1, x2),
        state=state,
        seed=seed,
    )
