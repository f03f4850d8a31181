"""Run configuration: YAML loading, strict validation, defaults.

Config files are nested YAML (sections ``topology``, ``signals``,
``output``, ``diagnostics``); unknown keys are rejected by name so typos
fail loudly rather than silently using a default.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np
import yaml

from .gaussian import GaussianSignalStructure
from .network import TOPOLOGY_KINDS, NetworkGraph, build_topology

__all__ = ["ConfigError", "DiagnosticsConfig", "RunConfig", "load_config"]

ENGINES = ("gaussian", "binary_edge")


class ConfigError(ValueError):
    """Unparseable or invalid run configuration."""


@dataclass(frozen=True)
class DiagnosticsConfig:
    """Parameters for the identity diagnostics (gaussian engine only)."""

    thresholds: tuple[float, ...] = (-1.0, 0.0, 1.0)
    mix: float = 0.5
    observer: int = 0
    observed: int = 1
    t1: int = 3
    t2: int = 7
    variance_rounds: tuple[int, ...] | None = None

    def __post_init__(self):
        if not 0.0 <= self.mix <= 1.0:
            raise ConfigError(f"diagnostics.mix must lie in [0, 1], got {self.mix}")
        if not all(np.isfinite(u) for u in self.thresholds):
            raise ConfigError("diagnostics.thresholds must be finite")
        if self.t1 > self.t2:
            raise ConfigError(
                f"diagnostics.t1 must be <= t2, got ({self.t1}, {self.t2})"
            )


@dataclass
class RunConfig:
    """Validated description of one experiment."""

    engine: str
    topology_kind: str = "edge"
    n: int = 2
    edges: tuple[tuple[int, int], ...] | None = None
    a: tuple[float, ...] | None = None
    x1: float | None = None
    x2: float | None = None
    horizon: int = 500
    replicas: int = 1
    grid_size: int = 2001
    mode: str = "sampling"
    master_seed: int = 0
    out_dir: str = "out"
    emit_trajectories: bool = True
    emit_variances: bool = True
    emit_summary: bool = True
    diagnostics: DiagnosticsConfig | None = None

    def __post_init__(self):
        if self.engine not in ENGINES:
            raise ConfigError(f"engine must be one of {ENGINES}, got {self.engine!r}")
        if self.topology_kind not in TOPOLOGY_KINDS:
            raise ConfigError(
                f"topology.kind must be one of {TOPOLOGY_KINDS}, got {self.topology_kind!r}"
            )
        if self.horizon < 1:
            raise ConfigError(f"horizon must be >= 1, got {self.horizon}")
        if self.replicas < 1:
            raise ConfigError(f"replicas must be >= 1, got {self.replicas}")
        if self.grid_size < 2:
            raise ConfigError(f"grid_size must be >= 2, got {self.grid_size}")
        if not isinstance(self.master_seed, int) or self.master_seed < 0:
            raise ConfigError(f"master_seed must be a nonnegative integer, got {self.master_seed}")
        if self.mode not in ("sampling", "action"):
            raise ConfigError(f"mode must be 'sampling' or 'action', got {self.mode!r}")
        if self.engine == "binary_edge":
            if self.topology_kind != "edge" or self.n != 2:
                raise ConfigError("binary_edge requires edge topology (kind=edge, n=2)")
            if self.x1 is None or self.x2 is None:
                raise ConfigError("binary_edge requires signals.x1 and signals.x2")
            for name, value in (("x1", self.x1), ("x2", self.x2)):
                if not 0.0 <= value <= 1.0:
                    raise ConfigError(f"signals.{name} must lie in [0, 1], got {value}")
        else:
            if self.a is None:
                raise ConfigError("gaussian requires signals.a")
            if len(self.a) != self.n:
                raise ConfigError(
                    f"signals.a has {len(self.a)} coefficients for n={self.n} agents"
                )
            if not all(np.isfinite(v) for v in self.a):
                raise ConfigError("signals.a must be finite")
            if self.diagnostics is not None:
                for name, agent in (
                    ("observer", self.diagnostics.observer),
                    ("observed", self.diagnostics.observed),
                ):
                    if not 0 <= agent < self.n:
                        raise ConfigError(
                            f"diagnostics.{name} must name an agent in 0..{self.n - 1}"
                        )
                if self.diagnostics.t2 > self.horizon - 1:
                    raise ConfigError(
                        f"diagnostics.t2={self.diagnostics.t2} exceeds the last "
                        f"message round {self.horizon - 1}"
                    )
        if self.diagnostics is not None and self.engine != "gaussian":
            raise ConfigError("diagnostics require the gaussian engine")
        # build once so malformed custom edge lists fail at load time
        self.graph()

    def graph(self) -> NetworkGraph:
        try:
            return build_topology(self.topology_kind, self.n, self.edges)
        except ValueError as exc:
            raise ConfigError(f"topology: {exc}") from exc

    def signal_structure(self) -> GaussianSignalStructure:
        if self.a is None:
            raise ConfigError("no gaussian signal coefficients configured")
        return GaussianSignalStructure(np.array(self.a, dtype=float))


_TOP_KEYS = {
    "engine", "horizon", "replicas", "grid_size", "mode", "master_seed",
    "topology", "signals", "output", "diagnostics",
}
_SECTION_KEYS = {
    "topology": {"kind", "n", "edges"},
    "signals": {"a", "x1", "x2"},
    "output": {"directory", "trajectories", "variances", "summary"},
    "diagnostics": {
        "thresholds", "mix", "observer", "observed", "t1", "t2", "variance_rounds",
    },
}


def _check_keys(mapping: dict, allowed: set, section: str):
    for key in mapping:
        if key not in allowed:
            raise ConfigError(f"unknown key {key!r} in {section}")


def _section(data: dict, name: str) -> dict:
    value = data.get(name) or {}
    if not isinstance(value, dict):
        raise ConfigError(f"section {name!r} must be a mapping")
    _check_keys(value, _SECTION_KEYS[name], f"section {name!r}")
    return value


def config_from_dict(data: dict) -> RunConfig:
    """Build a validated RunConfig from parsed YAML data."""
    if not isinstance(data, dict):
        raise ConfigError("config root must be a mapping")
    _check_keys(data, _TOP_KEYS, "config root")
    if "engine" not in data:
        raise ConfigError("config must set engine (gaussian | binary_edge)")
    topology = _section(data, "topology")
    signals = _section(data, "signals")
    output = _section(data, "output")
    diag_section = data.get("diagnostics")
    diagnostics = None
    if diag_section is not None:
        diag_section = _section(data, "diagnostics")
        kwargs = dict(diag_section)
        if "thresholds" in kwargs:
            kwargs["thresholds"] = tuple(float(u) for u in kwargs["thresholds"])
        if kwargs.get("variance_rounds") is not None:
            kwargs["variance_rounds"] = tuple(int(t) for t in kwargs["variance_rounds"])
        diagnostics = DiagnosticsConfig(**kwargs)

    edges = topology.get("edges")
    if edges is not None:
        try:
            edges = tuple((int(i), int(j)) for i, j in edges)
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"topology.edges must be a list of [i, j] pairs: {exc}")
    a = signals.get("a")
    if a is not None:
        try:
            a = tuple(float(v) for v in a)
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"signals.a must be a list of numbers: {exc}")

    def _int(value, name):
        if isinstance(value, bool) or not isinstance(value, int):
            raise ConfigError(f"{name} must be an integer, got {value!r}")
        return value

    kwargs = dict(
        engine=data["engine"],
        topology_kind=topology.get("kind", "edge"),
        n=_int(topology.get("n", 2), "topology.n"),
        edges=edges,
        a=a,
        x1=None if signals.get("x1") is None else float(signals["x1"]),
        x2=None if signals.get("x2") is None else float(signals["x2"]),
        horizon=_int(data.get("horizon", 500), "horizon"),
        replicas=_int(data.get("replicas", 1), "replicas"),
        grid_size=_int(data.get("grid_size", 2001), "grid_size"),
        mode=data.get("mode", "sampling"),
        master_seed=_int(data.get("master_seed", 0), "master_seed"),
        out_dir=str(output.get("directory", "out")),
        emit_trajectories=bool(output.get("trajectories", True)),
        emit_variances=bool(output.get("variances", True)),
        emit_summary=bool(output.get("summary", True)),
        diagnostics=diagnostics,
    )
    return RunConfig(**kwargs)


def load_config(path) -> RunConfig:
    """Load and validate a YAML run configuration.

    Raises :class:`ConfigError` for parse errors (with line number) and
    validation failures; missing files surface as the usual ``OSError``.
    """
    text = Path(path).read_text()
    try:
        data = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        if mark is not None:
            raise ConfigError(
                f"parse error in {path} at line {mark.line + 1}: {getattr(exc, 'problem', exc)}"
            ) from exc
        raise ConfigError(f"parse error in {path}: {exc}") from exc
    if data is None:
        raise ConfigError(f"config file {path} is empty")
    try:
        return config_from_dict(data)
    except ConfigError:
        raise
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from exc
