"""Command-line entry point: scenario sweeps, track export, oracle checks."""

from __future__ import annotations

import argparse
import sys
from dataclasses import dataclass, field
from pathlib import Path

from . import config as cfgmod
from . import harness, movement, oracles, protocol, tracker
from .tracker import AlgorithmVariant

_ALGORITHM_FLAGS = {
    "wlsr": AlgorithmVariant.MULTI_MODE_WLSR,
    "wlsrp": AlgorithmVariant.MULTI_MODE_WLSRP,
    "cbt": AlgorithmVariant.CBT,
    "individual": AlgorithmVariant.INDIVIDUAL,
}


class CliError(ValueError):
    """Invalid invocation; message names the offending flag or key."""


@dataclass
class CliInvocation:
    subcommand: str
    scenarios: list[str] = field(default_factory=list)
    algorithms: list[AlgorithmVariant] = field(default_factory=list)
    intervals: tuple[int, ...] = ()
    seed: int = 1
    out: Path | None = None
    emit_svg: bool = False
    emit_estimate_logs: bool = False
    settings: dict[str, object] = field(default_factory=dict)
    oracle_samples: int = 10**6
    oracle_bias_trials: int = 10**5


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="grouptrack",
        description="Deterministic simulator for energy-aware group tracking.",
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    sub = parser.add_subparsers(dest="subcommand", required=True)

    sim = sub.add_parser(
        "simulate",
        help="run scenario sweeps and emit results",
        description="Simulate tracking scenarios and write results CSV, energy "
        "reports, protocol event logs and optional SVG trade-off curves.",
        epilog=cfgmod.config_key_help(),
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    sim.add_argument("--scenario", default="all",
                     help="a|b|c|d|all (default all); noise presets "
                     "a: sigma_p=1dB sigma_a=1,5m; b: 1dB 5,10m; c: 3dB 1,5m; d: 3dB 5,10m")
    sim.add_argument("--algorithm", default="all",
                     help="wlsr|wlsrp|cbt|individual|all (default all)")
    sim.add_argument("--intervals", default="5:50:5",
                     help="sampling intervals: start:stop:step (inclusive) or comma list; "
                     "default 5:50:5")
    sim.add_argument("--seed", type=int, default=1, help="master seed (default 1)")
    sim.add_argument("--out", required=True, help="output directory")
    sim.add_argument("--emit-svg", action="store_true",
                     help="also write per-scenario trade-off SVG curves")
    sim.add_argument("--emit-estimate-logs", action="store_true",
                     help="also write per-run estimate logs (large)")
    sim.add_argument("--config", help="flat key-value config file; see keys below")

    gen = sub.add_parser(
        "generate-tracks",
        help="write the ground-truth trajectory CSV",
        epilog=cfgmod.config_key_help(),
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    gen.add_argument("--out", required=True, help="output CSV path")
    gen.add_argument("--seed", type=int, default=1, help="master seed (default 1)")
    gen.add_argument("--config", help="flat key-value config file")

    val = sub.add_parser(
        "validate-oracles",
        help="run the Monte-Carlo checks of the closed-form moments",
    )
    val.add_argument("--samples", type=int, default=10**6,
                     help="samples per moment check (default 1e6)")
    val.add_argument("--bias-trials", type=int, default=10**5,
                     help="trials for the bias comparison (default 1e5)")
    val.add_argument("--seed", type=int, default=20260809, help="oracle seed")
    return parser


def parse_and_validate(argv: list[str]) -> CliInvocation:
    """Parse argv into a validated invocation; raises CliError on bad input.

    No simulation side effects happen here.
    """
    parser = _build_parser()
    try:
        ns = parser.parse_args(argv)
    except SystemExit as exc:
        if exc.code not in (0, None):
            raise CliError("invalid arguments") from exc
        raise

    inv = CliInvocation(subcommand=ns.subcommand)
    if ns.subcommand == "validate-oracles":
        if ns.samples < 1 or ns.bias_trials < 1:
            raise CliError("--samples and --bias-trials must be positive")
        inv.oracle_samples = ns.samples
        inv.oracle_bias_trials = ns.bias_trials
        inv.seed = ns.seed
        return inv

    if getattr(ns, "config", None):
        path = Path(ns.config)
        if not path.is_file():
            raise CliError(f"--config: no such file: {path}")
        try:
            inv.settings = cfgmod.read_config_file(path)
        except cfgmod.ConfigError as exc:
            raise CliError(str(exc)) from exc
    inv.seed = int(inv.settings.get("seed", ns.seed))
    if "--seed" in argv:
        inv.seed = ns.seed
    inv.out = Path(ns.out)

    if ns.subcommand == "generate-tracks":
        if not inv.out.parent.exists():
            raise CliError(f"--out: parent directory does not exist: {inv.out.parent}")
        return inv

    if ns.scenario == "all":
        inv.scenarios = sorted(harness.SCENARIO_NOISE)
    elif ns.scenario in harness.SCENARIO_NOISE:
        inv.scenarios = [ns.scenario]
    else:
        raise CliError(
            f"--scenario: unknown value {ns.scenario!r}; "
            f"valid choices: {', '.join(sorted(harness.SCENARIO_NOISE))}, all"
        )
    if ns.algorithm == "all":
        inv.algorithms = list(_ALGORITHM_FLAGS.values())
    elif ns.algorithm in _ALGORITHM_FLAGS:
        inv.algorithms = [_ALGORITHM_FLAGS[ns.algorithm]]
    else:
        raise CliError(
            f"--algorithm: unknown value {ns.algorithm!r}; "
            f"valid choices: {', '.join(_ALGORITHM_FLAGS)}, all"
        )
    try:
        inv.intervals = cfgmod.parse_interval_spec(ns.intervals)
    except ValueError as exc:
        raise CliError(f"--intervals: {exc}") from exc
    if "sampling_intervals" in inv.settings and "--intervals" not in " ".join(argv):
        inv.intervals = inv.settings["sampling_intervals"]  # type: ignore[assignment]
    inv.emit_svg = ns.emit_svg
    inv.emit_estimate_logs = ns.emit_estimate_logs
    return inv


def _scenario_config(inv: CliInvocation, scenario_id: str,
                     algorithm: AlgorithmVariant) -> harness.ScenarioConfig:
    config = harness.scenario_config(scenario_id, algorithm, inv.seed, inv.intervals)
    return cfgmod.apply_settings(config, inv.settings)


def _run_simulate(inv: CliInvocation) -> int:
    assert inv.out is not None
    inv.out.mkdir(parents=True, exist_ok=True)
    results = []
    tracks = None
    for scenario_id in inv.scenarios:
        for algorithm in inv.algorithms:
            config = _scenario_config(inv, scenario_id, algorithm)
            if tracks is None:
                tracks = harness.tracks_for(config)
            for interval in config.sampling_intervals:
                result, output = harness.run_single(config, interval, tracks)
                results.append(result)
                run_dir = inv.out / "runs" / f"{scenario_id}-{algorithm.value}-{interval}s"
                run_dir.mkdir(parents=True, exist_ok=True)
                tracker.write_energy_csv(output.ledgers, config.energy,
                                         run_dir / "energy.csv")
                protocol.write_events_csv(output.events, run_dir / "events.csv")
                if inv.emit_estimate_logs:
                    tracker.write_estimates_csv(output, run_dir / "estimates.csv")
                print(
                    f"{scenario_id} {algorithm.value:>10} T_s={interval:>2}s  "
                    f"mean_error={result.mean_error:8.3f} m  "
                    f"mean_energy={result.mean_energy:10.3f} J"
                )
    formats = ("csv", "svg") if inv.emit_svg else ("csv",)
    written = harness.emit_results(results, inv.out, formats)
    for path in written:
        print(f"wrote {path}")
    return 0


def _run_generate_tracks(inv: CliInvocation) -> int:
    assert inv.out is not None
    config = cfgmod.apply_settings(
        harness.ScenarioConfig(seed=inv.seed), inv.settings
    )
    tracks = movement.generate_tracks(config.world, config.flock, inv.seed)
    movement.write_tracks_csv(tracks, inv.out)
    print(f"wrote {inv.out}")
    return 0


def _run_validate_oracles(inv: CliInvocation) -> int:
    checks = oracles.validate_oracles(
        samples=inv.oracle_samples, bias_trials=inv.oracle_bias_trials, seed=inv.seed
    )
    print(oracles.format_report(checks))
    return 0 if all(c.passed for c in checks) else 1


def main(argv: list[str] | None = None) -> int:
    argv = list(sys.argv[1:]) if argv is None else list(argv)
    try:
        inv = parse_and_validate(argv)
    except CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except SystemExit as exc:  # --help
        return 0 if exc.code in (0, None) else int(exc.code)
    if inv.subcommand == "simulate":
        return _run_simulate(inv)
    if inv.subcommand == "generate-tracks":
        return _run_generate_tracks(inv)
    return _run_validate_oracles(inv)


if __name__ == "__main__":
    raise SystemExit(main())
