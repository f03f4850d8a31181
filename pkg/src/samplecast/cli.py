"""Command-line entry points for configured experiments.

Subcommands: ``gaussian``, ``binary-edge``, ``diagnostics`` (config-driven),
plus ``repro-fig1`` and ``repro-fig2`` (canned reference experiments: the
two-agent realization over 500 rounds, and the 7-agent clique-vs-cycle
variance decay over 20 rounds).

Exit codes: 0 success, 1 validation error, 2 numerical failure, 3 I/O error.
"""

from __future__ import annotations

import argparse
import dataclasses
import sys

import numpy as np

from .binary_edge import InconsistentTranscriptError
from .config import ConfigError, DiagnosticsConfig, RunConfig, load_config
from .gaussian import GaussianSignalStructure, NumericalDegeneracyError, moment_plan
from .io import (
    ensure_directory,
    write_belief_csv,
    write_summary_json,
    write_trajectory_csv,
    write_variance_csv,
)
from .montecarlo import (
    binary_batch,
    gaussian_batch,
    summarize_binary,
    summarize_gaussian,
)
from .network import build_topology, is_connected

__all__ = ["main"]

EXIT_OK = 0
EXIT_VALIDATION = 1
EXIT_NUMERICAL = 2
EXIT_IO = 3


def _add_common_flags(parser, config_required=True):
    if config_required:
        parser.add_argument("--config", required=True, help="YAML run configuration")
    parser.add_argument("--seed", type=int, default=None, help="override master_seed")
    parser.add_argument("--out", default=None, help="override the output directory")
    parser.add_argument("--replicas", type=int, default=None, help="override replica count")
    parser.add_argument("--quiet", action="store_true", help="suppress progress output")


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="samplecast",
        description="simulate and verify posterior-sample messaging on networks",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_text in (
        ("gaussian", "run the gaussian engine from a config file"),
        ("binary-edge", "run the two-agent binary game from a config file"),
        ("diagnostics", "run the identity diagnostics (gaussian engine)"),
    ):
        _add_common_flags(sub.add_parser(name, help=help_text))
    fig1 = sub.add_parser(
        "repro-fig1", help="canned two-agent realization (a=(1,2), 500 rounds)"
    )
    _add_common_flags(fig1, config_required=False)
    fig2 = sub.add_parser(
        "repro-fig2",
        help="canned 7-agent variance decay (clique vs cycle, a_i=i, 20 rounds)",
    )
    fig2.add_argument("--out", default=None, help="override the output directory")
    fig2.add_argument("--quiet", action="store_true", help="suppress progress output")
    return parser


def _apply_overrides(config: RunConfig, args) -> RunConfig:
    updates = {}
    if getattr(args, "seed", None) is not None:
        updates["master_seed"] = args.seed
    if getattr(args, "out", None) is not None:
        updates["out_dir"] = args.out
    if getattr(args, "replicas", None) is not None:
        updates["replicas"] = args.replicas
    return dataclasses.replace(config, **updates) if updates else config


def _say(quiet: bool, text: str):
    if not quiet:
        print(text)


def _warn_if_disconnected(config: RunConfig, quiet: bool):
    if not is_connected(config.graph()):
        _say(
            quiet,
            "warning: topology is disconnected; agreement and learning hold "
            "per connected component only",
        )


def cmd_gaussian(config: RunConfig, quiet: bool = False) -> int:
    if config.engine != "gaussian":
        raise ConfigError(f"the gaussian command needs engine=gaussian, got {config.engine}")
    _warn_if_disconnected(config, quiet)
    out = ensure_directory(config.out_dir)
    batch = gaussian_batch(config)
    summary = summarize_gaussian(config, batch)
    if config.emit_variances:
        write_variance_csv(out / "variances.csv", batch.plan.variances)
        _say(quiet, f"wrote {out / 'variances.csv'}")
    if config.emit_trajectories:
        write_trajectory_csv(
            out / "trajectories.csv", batch.theta, batch.signals, batch.messages,
            batch.post_means,
        )
        _say(quiet, f"wrote {out / 'trajectories.csv'}")
    if config.emit_summary:
        write_summary_json(out / "summary.json", summary.to_json_dict())
        _say(quiet, f"wrote {out / 'summary.json'}")
    _say(quiet, f"full-information posterior variance: {summary.extras['sigma_limit']:.6g}")
    finals = ", ".join(f"{v:.6g}" for v in summary.extras["final_post_means_replica0"])
    _say(quiet, f"replica 0 final posterior means: {finals}")
    return EXIT_OK


def cmd_binary_edge(config: RunConfig, quiet: bool = False) -> int:
    if config.engine != "binary_edge":
        raise ConfigError(
            f"the binary-edge command needs engine=binary_edge, got {config.engine}"
        )
    out = ensure_directory(config.out_dir)
    batch = binary_batch(config)
    summary = summarize_binary(config, batch)
    if config.emit_trajectories:
        write_belief_csv(out / "beliefs.csv", batch.beliefs, batch.messages)
        _say(quiet, f"wrote {out / 'beliefs.csv'}")
    if config.emit_summary:
        write_summary_json(out / "summary.json", summary.to_json_dict())
        _say(quiet, f"wrote {out / 'summary.json'}")
    _say(quiet, f"full-information posterior: {summary.extras['true_posterior']:.6g}")
    if config.mode == "action":
        limits = summary.extras["action_limits"]
        _say(quiet, f"action-mode limit beliefs: {limits}")
    finals = ", ".join(f"{v:.6g}" for v in summary.extras["final_beliefs_replica0"])
    _say(quiet, f"replica 0 final beliefs: {finals}")
    return EXIT_OK


def cmd_diagnostics(config: RunConfig, quiet: bool = False) -> int:
    if config.engine != "gaussian":
        raise ConfigError("diagnostics require a gaussian engine config")
    if config.diagnostics is None:
        config = dataclasses.replace(config, diagnostics=DiagnosticsConfig())
    _warn_if_disconnected(config, quiet)
    out = ensure_directory(config.out_dir)
    summary = summarize_gaussian(config, gaussian_batch(config))
    if config.emit_summary:
        write_summary_json(out / "summary.json", summary.to_json_dict())
        _say(quiet, f"wrote {out / 'summary.json'}")
    for report in summary.cdf_mix:
        verdict = "ok" if report.within_tolerance else "FLAG"
        _say(
            quiet,
            f"cdf-mix u={report.threshold:+g}: mean {report.mean:.5f} vs prior "
            f"cdf {report.target:.5f} (stderr {report.stderr:.2g}) [{verdict}]",
        )
    for report in summary.increments:
        verdict = "degenerate" if report.degenerate else ("FLAG" if report.flagged else "ok")
        _say(
            quiet,
            f"increment covariance (t1={report.t1}, t2={report.t2}): "
            f"{report.estimate:+.6f} (stderr {report.stderr:.2g}) [{verdict}]",
        )
    for report in summary.variance_identity:
        _say(
            quiet,
            f"variance identity t={report.round} agent={report.agent}: empirical "
            f"{report.empirical:.4f}, 1-var {report.total_variance_form:.4f}, "
            f"var(1-var) {report.product_form:.4f} -> {report.matching_form}",
        )
    return EXIT_OK


def cmd_repro_fig1(args) -> int:
    config = RunConfig(
        engine="gaussian", topology_kind="edge", n=2, a=(1.0, 2.0),
        horizon=500, replicas=1, master_seed=0, out_dir="fig1",
    )
    config = _apply_overrides(config, args)
    quiet = args.quiet
    code = cmd_gaussian(config, quiet=quiet)
    return code


def cmd_repro_fig2(args) -> int:
    out = ensure_directory(args.out or "fig2")
    quiet = args.quiet
    coeffs = GaussianSignalStructure(np.arange(1.0, 8.0))
    sigma_limit = 1.0 / (float(coeffs.a @ coeffs.a) + 1.0)
    for kind in ("clique", "cycle"):
        plan = moment_plan(build_topology(kind, 7), coeffs, 20)
        path = out / f"variances_{kind}.csv"
        write_variance_csv(path, plan.variances)
        _say(quiet, f"wrote {path}")
        _say(
            quiet,
            f"{kind}: agent 0 variance {plan.variances[0, 0]:.6g} -> "
            f"{plan.variances[20, 0]:.6g} over 20 rounds",
        )
    _say(quiet, f"full-information posterior variance: {sigma_limit:.6g}")
    return EXIT_OK


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        if args.command == "repro-fig1":
            return cmd_repro_fig1(args)
        if args.command == "repro-fig2":
            return cmd_repro_fig2(args)
        config = _apply_overrides(load_config(args.config), args)
        if args.command == "gaussian":
            return cmd_gaussian(config, quiet=args.quiet)
        if args.command == "binary-edge":
            return cmd_binary_edge(config, quiet=args.quiet)
        return cmd_diagnostics(config, quiet=args.quiet)
    except (ConfigError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except (NumericalDegeneracyError, InconsistentTranscriptError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
