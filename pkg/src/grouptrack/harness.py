"""Scenario runner and metrics: interpolation, tracking error, energy, CDFs.

A scenario fixes the perturbation levels and node mix; a run is one
(algorithm, sampling interval) simulation over the shared ground-truth
movement.  The master seed fans out into fixed-role substreams so every
algorithm variant sees the identical world, which keeps the trade-off
curves comparable.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .channel import PathLossParams
from .energy import EnergyParams
from .movement import FlockingParams, Trajectory, WorldConfig, generate_tracks
from .tracker import AlgorithmVariant, RunOutput, TrackerConfig, TrackerSim

#: (sigma_p dB, sigma_a low m, sigma_a high m) per scenario label
SCENARIO_NOISE: dict[str, tuple[float, float, float]] = {
    "a": (1.0, 1.0, 5.0),
    "b": (1.0, 5.0, 10.0),
    "c": (3.0, 1.0, 5.0),
    "d": (3.0, 5.0, 10.0),
}

DEFAULT_INTERVALS: tuple[int, ...] = tuple(range(5, 51, 5))

ALL_ALGORITHMS: tuple[AlgorithmVariant, ...] = (
    AlgorithmVariant.MULTI_MODE_WLSR,
    AlgorithmVariant.MULTI_MODE_WLSRP,
    AlgorithmVariant.CBT,
    AlgorithmVariant.INDIVIDUAL,
)


@dataclass(frozen=True)
class ScenarioConfig:
    """One reproducible experiment: noise mix, algorithm, intervals, seed."""

    scenario_id: str = "d"
    sigma_p: float = 3.0
    sigma_a_low: float = 5.0
    sigma_a_high: float = 10.0
    high_perf_fraction: float = 0.5
    sampling_intervals: tuple[int, ...] = DEFAULT_INTERVALS
    algorithm: AlgorithmVariant = AlgorithmVariant.MULTI_MODE_WLSRP
    seed: int = 1
    world: WorldConfig = field(default_factory=WorldConfig)
    flock: FlockingParams = field(default_factory=FlockingParams)
    path_loss: PathLossParams = field(default_factory=PathLossParams)
    energy: EnergyParams = field(default_factory=EnergyParams)
    tracker: TrackerConfig = field(default_factory=TrackerConfig)

    def __post_init__(self) -> None:
        if not 0.0 <= self.high_perf_fraction <= 1.0:
            raise ValueError("high_perf_fraction must lie in [0, 1]")
        if not self.sampling_intervals:
            raise ValueError("need at least one sampling interval")
        for s in self.sampling_intervals:
            if s < 1:
                raise ValueError(f"sampling interval must be >= 1 s, got {s}")

    def node_noise(self) -> tuple[np.ndarray, np.ndarray]:
        """Per-node (sigma_a, sigma_p): the low-id half is the low-GPS-performance
        (high sigma_a) half, so both living areas get a mixture."""
        n = self.world.n_nodes
        n_high_perf = int(round(self.high_perf_fraction * n))
        sigma_a = np.full(n, self.sigma_a_high)
        if n_high_perf:
            sigma_a[n - n_high_perf :] = self.sigma_a_low
        return sigma_a, np.full(n, self.sigma_p)


def scenario_config(
    scenario_id: str,
    algorithm: AlgorithmVariant = AlgorithmVariant.MULTI_MODE_WLSRP,
    seed: int = 1,
    sampling_intervals: Sequence[int] = DEFAULT_INTERVALS,
    **overrides,
) -> ScenarioConfig:
    """Build one of the four standard perturbation scenarios."""
    if scenario_id not in SCENARIO_NOISE:
        raise ValueError(
            f"unknown scenario {scenario_id!r}; choose from {sorted(SCENARIO_NOISE)}"
        )
    sigma_p, lo, hi = SCENARIO_NOISE[scenario_id]
    return ScenarioConfig(
        scenario_id=scenario_id,
        sigma_p=sigma_p,
        sigma_a_low=lo,
        sigma_a_high=hi,
        algorithm=algorithm,
        seed=seed,
        sampling_intervals=tuple(int(s) for s in sampling_intervals),
        **overrides,
    )


@dataclass(frozen=True)
class RunResult:
    scenario_id: str
    algorithm: str
    sampling_interval: int
    mean_error: float
    mean_energy: float
    per_node_errors: tuple[float, ...]


def interpolate_track(
    times: np.ndarray, values: np.ndarray, duration: int, resolution: float = 1.0
) -> np.ndarray:
    """Linearly interpolate a sampled track onto the dense 1 s grid.

    Holds the first sample before it and the last sample after it.
    """
    t = np.asarray(times, dtype=float)
    v = np.atleast_2d(np.asarray(values, dtype=float))
    if t.size == 0:
        raise ValueError("cannot interpolate an empty track")
    grid = np.arange(0.0, duration + resolution / 2.0, resolution)
    out = np.empty((grid.size, v.shape[1]))
    for axis in range(v.shape[1]):
        out[:, axis] = np.interp(grid, t, v[:, axis])
    return out


def node_tracking_error(estimated_dense: np.ndarray, truth_dense: np.ndarray) -> float:
    """Mean Euclidean distance between aligned dense tracks."""
    est = np.asarray(estimated_dense, dtype=float)
    truth = np.asarray(truth_dense, dtype=float)
    if est.shape != truth.shape:
        raise ValueError(f"track shapes differ: {est.shape} vs {truth.shape}")
    return float(np.mean(np.linalg.norm(est - truth, axis=-1)))


def error_cdf(per_node_errors: Sequence[float]) -> list[tuple[float, float]]:
    """Empirical CDF points (error, rank/n) of per-node mean errors."""
    errors = sorted(float(e) for e in per_node_errors)
    if not errors:
        raise ValueError("need at least one error value")
    n = len(errors)
    return [(e, (i + 1) / n) for i, e in enumerate(errors)]


def _rng_streams(seed: int, interval: int) -> tuple[np.random.Generator, ...]:
    """Channel/protocol/tracker substreams; algorithm-independent on purpose
    so variants with identical control flow see paired noise."""
    return tuple(
        np.random.default_rng(np.random.SeedSequence([seed & 0xFFFFFFFFFFFFFFFF, role, interval]))
        for role in (1, 2, 3)
    )


def tracks_for(config: ScenarioConfig) -> list[Trajectory]:
    """Ground-truth movement for a scenario; depends only on (world, flock, seed)."""
    return generate_tracks(config.world, config.flock, config.seed)


def _positions_array(tracks: list[Trajectory]) -> np.ndarray:
    return np.stack([tr.positions for tr in tracks], axis=1)


def run_single(
    config: ScenarioConfig,
    interval: int,
    tracks: list[Trajectory] | None = None,
    check_invariants: bool = False,
) -> tuple[RunResult, RunOutput]:
    """Simulate one (algorithm, interval) run and compute its metrics."""
    if tracks is None:
        tracks = tracks_for(config)
    positions = _positions_array(tracks)
    sigma_a, sigma_p = config.node_noise()
    rng_channel, rng_protocol, rng_tracker = _rng_streams(config.seed, interval)
    sim = TrackerSim(
        positions=positions,
        sigma_a=sigma_a,
        sigma_p=sigma_p,
        path_loss=config.path_loss,
        energy_params=config.energy,
        config=replace(
            config.tracker, sampling_interval=interval, variant=config.algorithm
        ),
        rng_channel=rng_channel,
        rng_protocol=rng_protocol,
        rng_tracker=rng_tracker,
        check_invariants=check_invariants,
    )
    output = sim.run()

    duration = config.world.duration
    errors = []
    for i in range(config.world.n_nodes):
        dense = interpolate_track(output.times, output.estimates[:, i, :], duration)
        errors.append(node_tracking_error(dense, positions[:, i, :]))
    energies = [led.consumed(config.energy) for led in output.ledgers]
    result = RunResult(
        scenario_id=config.scenario_id,
        algorithm=config.algorithm.value,
        sampling_interval=int(interval),
        mean_error=float(np.mean(errors)),
        mean_energy=float(np.mean(energies)),
        per_node_errors=tuple(errors),
    )
    return result, output


def run_scenario(
    config: ScenarioConfig,
    tracks: list[Trajectory] | None = None,
    check_invariants: bool = False,
) -> list[RunResult]:
    """Run every configured sampling interval of one scenario."""
    if tracks is None:
        tracks = tracks_for(config)
    return [
        run_single(config, interval, tracks, check_invariants)[0]
        for interval in config.sampling_intervals
    ]


def full_sweep(
    seed: int = 1,
    scenarios: Iterable[str] = "abcd",
    algorithms: Sequence[AlgorithmVariant] = ALL_ALGORITHMS,
    sampling_intervals: Sequence[int] = DEFAULT_INTERVALS,
    **overrides,
) -> list[RunResult]:
    """The all-scenarios, all-algorithms grid over one shared world per seed."""
    results: list[RunResult] = []
    tracks: list[Trajectory] | None = None
    for scenario_id in scenarios:
        for algorithm in algorithms:
            config = scenario_config(
                scenario_id, algorithm, seed, sampling_intervals, **overrides
            )
            if tracks is None:
                tracks = tracks_for(config)
            results.extend(run_scenario(config, tracks))
    return sorted(results, key=lambda r: (r.scenario_id, r.algorithm, r.sampling_interval))


# -- result emission --------------------------------------------------------

_SVG_COLORS = {
    "wlsr": "#0072b2",
    "wlsrp": "#d55e00",
    "cbt": "#009e73",
    "individual": "#555555",
}


def _results_csv(results: Sequence[RunResult], path: Path) -> None:
    rows = sorted(results, key=lambda r: (r.scenario_id, r.algorithm, r.sampling_interval))
    with open(path, "w", newline="") as fh:
        fh.write("scenario,algorithm,interval_s,mean_error_m,mean_energy_J\n")
        for r in rows:
            fh.write(
                f"{r.scenario_id},{r.algorithm},{r.sampling_interval},"
                f"{r.mean_error:.6f},{r.mean_energy:.6f}\n"
            )


def _trade_off_svg(results: Sequence[RunResult], path: Path) -> None:
    """Mean error vs mean energy, one polyline per algorithm, interval-ordered."""
    width, height, margin = 640, 480, 60
    xs = [r.mean_energy for r in results]
    ys = [r.mean_error for r in results]
    x_lo, x_hi = min(xs), max(xs)
    y_lo, y_hi = min(ys), max(ys)
    x_span = (x_hi - x_lo) or 1.0
    y_span = (y_hi - y_lo) or 1.0

    def sx(x: float) -> float:
        return margin + (x - x_lo) / x_span * (width - 2 * margin)

    def sy(y: float) -> float:
        return height - margin - (y - y_lo) / y_span * (height - 2 * margin)

    lines = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}">',
        f'<rect width="{width}" height="{height}" fill="white"/>',
        f'<line x1="{margin}" y1="{height - margin}" x2="{width - margin}" '
        f'y2="{height - margin}" stroke="black"/>',
        f'<line x1="{margin}" y1="{margin}" x2="{margin}" y2="{height - margin}" '
        f'stroke="black"/>',
        f'<text x="{width / 2:.0f}" y="{height - 15}" text-anchor="middle" '
        f'font-size="14">mean energy (J)</text>',
        f'<text x="18" y="{height / 2:.0f}" text-anchor="middle" font-size="14" '
        f'transform="rotate(-90 18 {height / 2:.0f})">mean tracking error (m)</text>',
        f'<text x="{margin}" y="{height - margin + 20}" font-size="11">{x_lo:.1f}</text>',
        f'<text x="{width - margin}" y="{height - margin + 20}" text-anchor="end" '
        f'font-size="11">{x_hi:.1f}</text>',
        f'<text x="{margin - 6}" y="{height - margin}" text-anchor="end" '
        f'font-size="11">{y_lo:.2f}</text>',
        f'<text x="{margin - 6}" y="{margin + 4}" text-anchor="end" '
        f'font-size="11">{y_hi:.2f}</text>',
    ]
    algorithms = sorted({r.algorithm for r in results})
    for slot, algorithm in enumerate(algorithms):
        series = sorted(
            (r for r in results if r.algorithm == algorithm),
            key=lambda r: r.sampling_interval,
        )
        color = _SVG_COLORS.get(algorithm, "#000000")
        points = " ".join(f"{sx(r.mean_energy):.2f},{sy(r.mean_error):.2f}" for r in series)
        lines.append(
            f'<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{points}"/>'
        )
        for r in series:
            lines.append(
                f'<circle cx="{sx(r.mean_energy):.2f}" cy="{sy(r.mean_error):.2f}" '
                f'r="3" fill="{color}"/>'
            )
        lines.append(
            f'<text x="{width - margin - 120}" y="{margin + 16 * slot + 4}" '
            f'font-size="12" fill="{color}">{algorithm}</text>'
        )
    lines.append("</svg>")
    path.write_text("\n".join(lines) + "\n")


def emit_results(
    results: Sequence[RunResult],
    out_dir: Path | str,
    formats: Sequence[str] = ("csv",),
) -> list[Path]:
    """Write the results table and optionally one trade-off SVG per scenario."""
    if not results:
        raise ValueError("no results to emit")
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written: list[Path] = []
    if "csv" in formats:
        path = out / "results.csv"
        _results_csv(results, path)
        written.append(path)
    if "svg" in formats:
        for scenario_id in sorted({r.scenario_id for r in results}):
            path = out / f"tradeoff_{scenario_id}.svg"
            _trade_off_svg([r for r in results if r.scenario_id == scenario_id], path)
            written.append(path)
    return written
