"""Output files: CSV series and the versioned JSON summary.

Floating-point CSV fields carry 17 significant digits so values round-trip
exactly. Rerunning an identical configuration reproduces every file byte
for byte; the JSON summary differs only in the single
``metadata.created_at`` key.

Schemas:
  variances.csv     t, agent, post_var           (deterministic schedule)
  trajectories.csv  replica, t, agent, theta, signal, message, post_mean
                    (message empty on the final round, which sends none)
  beliefs.csv       replica, t, agent, belief, message
  summary.json      ReplicaSummary.to_json_dict(), schema_version 1
"""

from __future__ import annotations

import csv
import json
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

__all__ = [
    "write_variance_csv",
    "write_trajectory_csv",
    "write_belief_csv",
    "write_summary_json",
    "read_variance_csv",
    "read_trajectory_csv",
    "read_belief_csv",
    "read_summary_json",
]


def _fmt(value) -> str:
    return f"{float(value):.17g}"


def write_variance_csv(path, variances: np.ndarray) -> None:
    """Deterministic posterior-variance schedule, one row per (round, agent)."""
    rounds, n = variances.shape
    with open(path, "w", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(["t", "agent", "post_var"])
        for t in range(rounds):
            for agent in range(n):
                writer.writerow([t, agent, _fmt(variances[t, agent])])


def write_trajectory_csv(path, theta, signals, messages, post_means) -> None:
    """Per-replica realizations; the final round has no message field."""
    R, rounds, n = post_means.shape
    with open(path, "w", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(["replica", "t", "agent", "theta", "signal", "message", "post_mean"])
        for r in range(R):
            for t in range(rounds):
                for agent in range(n):
                    message = _fmt(messages[r, t, agent]) if t < rounds - 1 else ""
                    writer.writerow(
                        [
                            r, t, agent, _fmt(theta[r]), _fmt(signals[r, agent]),
                            message, _fmt(post_means[r, t, agent]),
                        ]
                    )


def write_belief_csv(path, beliefs, messages) -> None:
    """Per-replica belief paths for the two-agent binary game."""
    R, rounds, _ = beliefs.shape
    with open(path, "w", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(["replica", "t", "agent", "belief", "message"])
        for r in range(R):
            for t in range(rounds):
                for agent in range(2):
                    message = str(int(messages[r, t, agent])) if t < rounds - 1 else ""
                    writer.writerow([r, t, agent, _fmt(beliefs[r, t, agent]), message])


def write_summary_json(path, summary_dict: dict, created_at: str | None = None) -> None:
    """Write the summary document; the timestamp lives in exactly one key."""
    payload = dict(summary_dict)
    metadata = dict(payload.get("metadata", {}))
    metadata["created_at"] = created_at or datetime.now(timezone.utc).isoformat()
    payload["metadata"] = metadata
    with open(path, "w") as handle:
        json.dump(payload, handle, indent=2)
        handle.write("\n")


def read_variance_csv(path) -> np.ndarray:
    """Inverse of :func:`write_variance_csv`; returns the [T+1, n] schedule."""
    rows = list(csv.DictReader(open(path, newline="")))
    rounds = 1 + max(int(r["t"]) for r in rows)
    agents = 1 + max(int(r["agent"]) for r in rows)
    out = np.full((rounds, agents), np.nan)
    for r in rows:
        out[int(r["t"]), int(r["agent"])] = float(r["post_var"])
    if np.isnan(out).any():
        raise ValueError(f"{path} is missing (t, agent) rows")
    return out


def read_trajectory_csv(path) -> dict:
    """Inverse of :func:`write_trajectory_csv`."""
    rows = list(csv.DictReader(open(path, newline="")))
    R = 1 + max(int(r["replica"]) for r in rows)
    rounds = 1 + max(int(r["t"]) for r in rows)
    n = 1 + max(int(r["agent"]) for r in rows)
    theta = np.full(R, np.nan)
    signals = np.full((R, n), np.nan)
    messages = np.full((R, rounds - 1, n), np.nan)
    post_means = np.full((R, rounds, n), np.nan)
    for row in rows:
        r, t, agent = int(row["replica"]), int(row["t"]), int(row["agent"])
        theta[r] = float(row["theta"])
        signals[r, agent] = float(row["signal"])
        post_means[r, t, agent] = float(row["post_mean"])
        if row["message"]:
            messages[r, t, agent] = float(row["message"])
    if np.isnan(post_means).any() or np.isnan(messages).any():
        raise ValueError(f"{path} is missing rows")
    return {
        "theta": theta, "signals": signals, "messages": messages,
        "post_means": post_means,
    }


def read_belief_csv(path) -> dict:
    """Inverse of :func:`write_belief_csv`."""
    rows = list(csv.DictReader(open(path, newline="")))
    R = 1 + max(int(r["replica"]) for r in rows)
    rounds = 1 + max(int(r["t"]) for r in rows)
    beliefs = np.full((R, rounds, 2), np.nan)
    messages = np.full((R, rounds - 1, 2), -1, dtype=np.int64)
    for row in rows:
        r, t, agent = int(row["replica"]), int(row["t"]), int(row["agent"])
        beliefs[r, t, agent] = float(row["belief"])
        if row["message"]:
            messages[r, t, agent] = int(row["message"])
    if np.isnan(beliefs).any() or (messages < 0).any():
        raise ValueError(f"{path} is missing rows")
    return {"beliefs": beliefs, "messages": messages}


def read_summary_json(path) -> dict:
    with open(path) as handle:
        payload = json.load(handle)
    if payload.get("schema_version") != 1:
        raise ValueError(f"{path}: unsupported schema_version {payload.get('schema_version')}")
    return payload


def ensure_directory(path) -> Path:
    out = Path(path)
    out.mkdir(parents=True, exist_ok=True)
    return out
