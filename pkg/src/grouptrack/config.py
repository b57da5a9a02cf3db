"""Flat key-value config files and the registry documenting every key.

Format: one ``key = value`` per line, ``#`` comments, blank lines ignored.
Unknown keys are rejected so typos fail loudly before any simulation runs.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from pathlib import Path
from typing import Callable

from .channel import PathLossParams
from .energy import EnergyParams
from .harness import ScenarioConfig
from .movement import Disc, FlockingParams, WorldConfig
from .tracker import TrackerConfig


class ConfigError(ValueError):
    """Invalid config file content; message names the offending key."""


def _parse_disc(text: str) -> Disc:
    parts = [p.strip() for p in text.split(",")]
    if len(parts) != 3:
        raise ValueError("expected 'center_x,center_y,radius'")
    cx, cy, r = (float(p) for p in parts)
    return Disc(cx, cy, r)


def _parse_intervals(text: str) -> tuple[int, ...]:
    return parse_interval_spec(text)


def parse_interval_spec(text: str) -> tuple[int, ...]:
    """Accept ``start:stop:step`` (inclusive) or a comma list of seconds."""
    text = text.strip()
    if ":" in text:
        parts = text.split(":")
        if len(parts) != 3:
            raise ValueError("interval range must be start:stop:step")
        start, stop, step = (int(p) for p in parts)
        if step < 1 or start < 1 or stop < start:
            raise ValueError(f"invalid interval range {text!r}")
        return tuple(range(start, stop + 1, step))
    values = tuple(int(p) for p in text.split(",") if p.strip())
    if not values:
        raise ValueError("empty interval list")
    return values


@dataclass(frozen=True)
class ConfigKey:
    name: str
    section: str  # world | flock | path_loss | energy | tracker | run
    attr: str
    parse: Callable[[str], object]
    default: str
    help: str


_KEYS: list[ConfigKey] = [
    # world
    ConfigKey("area_side", "world", "area_side", float, "50000", "square world side, m"),
    ConfigKey("n_nodes", "world", "n_nodes", int, "40", "number of tracked nodes"),
    ConfigKey("duration", "world", "duration", int, "43200", "simulated seconds"),
    ConfigKey("max_speed", "world", "max_speed", float, "6.0", "speed cap, m/s"),
    ConfigKey("target_spacing", "world", "target_spacing", float, "20.0",
              "intended inter-node spacing, m"),
    ConfigKey("living_area_1", "world", "_living1", _parse_disc, "5000,5000,500",
              "first start disc: cx,cy,radius (m)"),
    ConfigKey("living_area_2", "world", "_living2", _parse_disc, "45000,45000,500",
              "second start disc: cx,cy,radius (m)"),
    ConfigKey("foraging_area", "world", "_foraging", _parse_disc, "25000,25000,1000",
              "destination disc: cx,cy,radius (m)"),
    # flocking / random walk
    ConfigKey("neighbor_radius", "flock", "neighbor_radius", float, "50.0",
              "steering perception radius, m"),
    ConfigKey("w_separation", "flock", "w_separation", float, "1.5", "separation weight"),
    ConfigKey("w_alignment", "flock", "w_alignment", float, "0.8", "alignment weight"),
    ConfigKey("w_cohesion", "flock", "w_cohesion", float, "0.4", "cohesion weight"),
    ConfigKey("w_goal", "flock", "w_goal", float, "1.0", "goal attraction weight"),
    ConfigKey("separation_distance", "flock", "separation_distance", float, "20.0",
              "repulsion onset distance, m"),
    ConfigKey("rw_step_sigma", "flock", "rw_step_sigma", float, "3.0",
              "random-walk step std, m"),
    # path loss
    ConfigKey("d0", "path_loss", "d0", float, "1.0", "reference distance, m"),
    ConfigKey("p0", "path_loss", "p0", float, "-33.44", "power at d0, dBm"),
    ConfigKey("eta", "path_loss", "eta", float, "3.567", "path-loss exponent"),
    # noise scenario overrides
    ConfigKey("sigma_p", "run", "sigma_p", float, "scenario", "RSSI noise std, dB"),
    ConfigKey("sigma_a_low", "run", "sigma_a_low", float, "scenario",
              "GPS noise std of high-performance nodes, m"),
    ConfigKey("sigma_a_high", "run", "sigma_a_high", float, "scenario",
              "GPS noise std of low-performance nodes, m"),
    ConfigKey("high_perf_fraction", "run", "high_perf_fraction", float, "0.5",
              "fraction of nodes with low sigma_a"),
    # tracker
    ConfigKey("cluster_threshold", "tracker", "cluster_threshold", int, "10",
              "cluster size above which multilateration runs (C_t)"),
    ConfigKey("n_anchors", "tracker", "n_anchors", int, "6",
              "anchors per localization instance"),
    ConfigKey("comm_range", "tracker", "comm_range", float, "100.0",
              "radio communication range, m"),
    # energy model
    ConfigKey("gps_power_w", "energy", "gps_power_w", float, "0.074", "GPS power, W"),
    ConfigKey("gps_fix_time_s", "energy", "gps_fix_time_s", float, "5.0",
              "hot-start fix duration, s"),
    ConfigKey("mcu_power_w", "energy", "mcu_power_w", float, "0.0132", "MCU power, W"),
    ConfigKey("radio_power_w", "energy", "radio_power_w", float, "0.0132", "radio power, W"),
    ConfigKey("packet_time_s", "energy", "packet_time_s", float, "0.00031",
              "packet tx/rx time, s"),
    ConfigKey("packet_bits", "energy", "packet_bits", int, "80", "packet size, bits"),
    ConfigKey("bit_rate_bps", "energy", "bit_rate_bps", float, "256000", "channel bit rate"),
    ConfigKey("standby_power_w", "energy", "standby_power_w", float, "1.2e-6",
              "standby power, W"),
    ConfigKey("misc_energy_j", "energy", "misc_energy_j", float, "54.0",
              "flat per-run miscellaneous energy, J"),
    ConfigKey("battery_capacity_j", "energy", "battery_capacity_j", float, "3996.0",
              "battery capacity, J"),
    # run-level
    ConfigKey("seed", "run", "seed", int, "1", "master seed"),
    ConfigKey("sampling_intervals", "run", "sampling_intervals", _parse_intervals,
              "5:50:5", "sampling intervals, range or comma list"),
]

CONFIG_KEYS: dict[str, ConfigKey] = {k.name: k for k in _KEYS}


def config_key_help() -> str:
    """One line per accepted config-file key, for --help and the README."""
    lines = ["config file keys (key = value per line):"]
    for key in _KEYS:
        lines.append(f"  {key.name:<20} default {key.default:<16} {key.help}")
    return "\n".join(lines)


def read_config_file(path: str | Path) -> dict[str, object]:
    """Parse and validate a flat key-value file into typed settings."""
    settings: dict[str, object] = {}
    text = Path(path).read_text()
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{lineno}: expected 'key = value', got {raw!r}")
        name, value = (part.strip() for part in line.split("=", 1))
        key = CONFIG_KEYS.get(name)
        if key is None:
            raise ConfigError(f"{path}:{lineno}: unknown key {name!r}")
        try:
            settings[name] = key.parse(value)
        except ValueError as exc:
            raise ConfigError(f"{path}:{lineno}: bad value for {name!r}: {exc}") from exc
    return settings


def apply_settings(config: ScenarioConfig, settings: dict[str, object]) -> ScenarioConfig:
    """Overlay typed settings from a config file onto a scenario config."""
    if not settings:
        return config

    def collect(section: str) -> dict[str, object]:
        return {
            CONFIG_KEYS[name].attr: value
            for name, value in settings.items()
            if CONFIG_KEYS[name].section == section and not CONFIG_KEYS[name].attr.startswith("_")
        }

    world_kw = collect("world")
    discs: dict[str, Disc] = {
        CONFIG_KEYS[name].attr: value  # type: ignore[misc]
        for name, value in settings.items()
        if CONFIG_KEYS[name].section == "world" and CONFIG_KEYS[name].attr.startswith("_")
    }
    if "_living1" in discs or "_living2" in discs:
        living = list(config.world.living_areas)
        while len(living) < 2:
            living.append(living[-1])
        if "_living1" in discs:
            living[0] = discs["_living1"]
        if "_living2" in discs:
            living[1] = discs["_living2"]
        world_kw["living_areas"] = tuple(living)
    if "_foraging" in discs:
        world_kw["foraging_area"] = discs["_foraging"]

    try:
        new = config
        if world_kw:
            new = replace(new, world=replace(config.world, **world_kw))
        flock_kw = collect("flock")
        if flock_kw:
            new = replace(new, flock=replace(config.flock, **flock_kw))
        pl_kw = collect("path_loss")
        if pl_kw:
            new = replace(new, path_loss=replace(config.path_loss, **pl_kw))
        energy_kw = collect("energy")
        if energy_kw:
            new = replace(new, energy=replace(config.energy, **energy_kw))
        tracker_kw = collect("tracker")
        if tracker_kw:
            new = replace(new, tracker=replace(config.tracker, **tracker_kw))
        run_kw = collect("run")
        if run_kw:
            new = replace(new, **run_kw)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    return new
