"""Sensing models: perturbed GPS fixes and log-normal shadowed RSSI ranging.

RSSI follows the shadowing path-loss model in the dBm domain; distance
estimates come from inverting that model, which makes the ranging error
multiplicative (log-normal) in the linear domain.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class PathLossParams:
    """Shadowing path-loss model constants.

    d0 is the reference distance in meters, p0 the received power at d0 in
    dBm, eta the path-loss exponent.  The derived constant ``u`` is always
    recomputed from eta.
    """

    d0: float = 1.0
    p0: float = -33.44
    eta: float = 3.567

    def __post_init__(self) -> None:
        if self.d0 <= 0:
            raise ValueError(f"reference distance must be positive, got {self.d0}")
        if self.eta <= 0:
            raise ValueError(f"path-loss exponent must be positive, got {self.eta}")

    @property
    def u(self) -> float:
        """Bias/variance constant ln(10) / (5 * sqrt(2) * eta)."""
        return math.log(10.0) / (5.0 * math.sqrt(2.0) * self.eta)


@dataclass(frozen=True)
class NoiseProfile:
    """Per-node perturbation levels: GPS position std (m) and RSSI std (dB)."""

    sigma_a: float = 0.0
    sigma_p: float = 0.0

    def __post_init__(self) -> None:
        if self.sigma_a < 0 or self.sigma_p < 0:
            raise ValueError("noise standard deviations must be non-negative")


def rssi_expected(d: float, params: PathLossParams) -> float:
    """Noise-free received power in dBm at distance d meters."""
    if d <= 0:
        raise ValueError(f"distance must be positive, got {d}")
    return params.p0 - 10.0 * params.eta * math.log10(d / params.d0)


def sample_rssi(
    d: float, sigma_p: float, params: PathLossParams, rng: np.random.Generator
) -> float:
    """Draw one shadowed RSSI sample for a link of length d meters."""
    return rssi_expected(d, params) + sigma_p * rng.standard_normal()


def invert_rssi(p_tilde: float, params: PathLossParams) -> float:
    """Distance estimate in meters from a (possibly perturbed) RSSI in dBm."""
    return params.d0 * 10.0 ** ((p_tilde - params.p0) / (10.0 * params.eta))


def sample_gps_fix(
    true_pos: np.ndarray, sigma_a: float, rng: np.random.Generator
) -> np.ndarray:
    """Perturbed 2D position fix: independent N(0, sigma_a) noise per axis."""
    pos = np.asarray(true_pos, dtype=float)
    return pos + sigma_a * rng.standard_normal(2)


def sample_rssi_distances(
    distances: np.ndarray,
    sigma_p: np.ndarray,
    params: PathLossParams,
    rng: np.random.Generator,
) -> np.ndarray:
    """Vectorized RSSI-ranging: one shadowed distance estimate per link.

    Equivalent to invert_rssi(sample_rssi(d)) element-wise; the dBm round
    trip collapses to a multiplicative log-normal factor.
    """
    d = np.asarray(distances, dtype=float)
    if np.any(d <= 0):
        raise ValueError("link distances must be positive")
    noise = rng.standard_normal(d.shape) * sigma_p
    return d * 10.0 ** (noise / (10.0 * params.eta))
