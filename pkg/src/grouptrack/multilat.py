"""Closed-form multilateration from perturbed anchors and RSSI distances.

Two weighted least-squares variants share one linearized system built by
differencing squared distances against a reference anchor:

* WLSR weights rows by the RSSI-induced variance of the squared distance
  estimates only (anchor positions taken as exact).
* WLSRP additionally models anchor-position noise in the row covariance and
  subtracts a bias vector that removes the mean offset the multiplicative
  ranging noise induces in the squared-distance differences.

Both use closed-form log-normal / Gaussian moments for the covariance
entries; the Monte-Carlo checks in :mod:`grouptrack.oracles` validate them.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .channel import PathLossParams


class Variant(enum.Enum):
    WLSR = "wlsr"
    WLSRP = "wlsrp"


class Method(enum.Enum):
    """Provenance of a position estimate."""

    WLSR = "wlsr"
    WLSRP = "wlsrp"
    NEAREST_ANCHOR = "nearest_anchor"
    GPS = "gps"
    BORROWED = "borrowed"
    HELD = "held"


class InsufficientAnchorsError(ValueError):
    """Fewer than three anchors: the linearized system is underdetermined."""


class DegenerateGeometryError(ValueError):
    """Anchors are (near-)collinear: the normal matrix is singular."""


@dataclass(frozen=True)
class AnchorObservation:
    """What the blind node knows about one anchor at solve time."""

    pos_tilde: tuple[float, float]
    d_tilde: float
    sigma_a: float = 0.0
    sigma_p: float = 0.0

    def __post_init__(self) -> None:
        if self.d_tilde <= 0:
            raise ValueError(f"distance estimate must be positive, got {self.d_tilde}")
        if self.sigma_a < 0 or self.sigma_p < 0:
            raise ValueError("noise standard deviations must be non-negative")


@dataclass
class LinearSystem:
    """One localization instance: rows difference anchors 2..N against anchor 1."""

    A: np.ndarray  # (N-1, 2) anchor coordinate differences
    b: np.ndarray  # (N-1,)
    S: np.ndarray  # (N-1, N-1) covariance of b
    c: np.ndarray  # (N-1,) bias vector, zero for WLSR
    k_tilde: np.ndarray  # (N,) squared anchor coordinate norms


@dataclass(frozen=True)
class PositionEstimate:
    x: float
    y: float
    method: Method

    @property
    def point(self) -> np.ndarray:
        return np.array([self.x, self.y])


def _unpack(anchors: Sequence[AnchorObservation]):
    if len(anchors) < 3:
        raise InsufficientAnchorsError(
            f"need at least 3 anchors, got {len(anchors)}"
        )
    pos = np.array([a.pos_tilde for a in anchors], dtype=float)
    d = np.array([a.d_tilde for a in anchors], dtype=float)
    sa = np.array([a.sigma_a for a in anchors], dtype=float)
    sp = np.array([a.sigma_p for a in anchors], dtype=float)
    return pos, d, sa, sp


def var_squared_distance(d_tilde: np.ndarray, sigma_p: np.ndarray, params: PathLossParams) -> np.ndarray:
    """Variance of the squared RSSI distance estimate (log-normal moments).

    Uses the observed d_tilde as plug-in for the unknown true distance.
    """
    u2 = params.u**2
    s2 = np.asarray(sigma_p, dtype=float) ** 2
    return np.asarray(d_tilde, dtype=float) ** 4 * (
        np.exp(4.0 * u2 * s2) - np.exp(2.0 * u2 * s2)
    )


def var_squared_norm(k_tilde: np.ndarray, sigma_a: np.ndarray) -> np.ndarray:
    """Variance of x~^2 + y~^2 under per-axis Gaussian position noise.

    Uses the perturbed coordinates as plug-in for the true ones.
    """
    sa2 = np.asarray(sigma_a, dtype=float) ** 2
    return 4.0 * sa2 * np.asarray(k_tilde, dtype=float) + 4.0 * sa2**2


def wlsr_covariance(
    anchors: Sequence[AnchorObservation], params: PathLossParams
) -> np.ndarray:
    """Covariance of b under RSSI noise alone: shared Var(d1~^2) everywhere
    plus per-row Var(d_{i+1}~^2) on the diagonal."""
    _, d, _, sp = _unpack(anchors)
    v = var_squared_distance(d, sp, params)
    n = len(anchors) - 1
    return np.full((n, n), v[0]) + np.diag(v[1:])


def wlsrp_covariance(
    anchors: Sequence[AnchorObservation], params: PathLossParams
) -> np.ndarray:
    """WLSR covariance plus the anchor-position terms Var(k~)."""
    pos, d, sa, sp = _unpack(anchors)
    v = var_squared_distance(d, sp, params)
    k = pos[:, 0] ** 2 + pos[:, 1] ** 2
    vk = var_squared_norm(k, sa)
    n = len(anchors) - 1
    return np.full((n, n), v[0] + vk[0]) + np.diag(v[1:] + vk[1:])


def bias_vector(
    anchors: Sequence[AnchorObservation], params: PathLossParams
) -> np.ndarray:
    """Mean offset of b rows from ranging nonlinearity and position noise."""
    _, d, sa, sp = _unpack(anchors)
    u2 = params.u**2
    coef = u2 * sp**2 + 0.5 * u2**2 * sp**4
    return coef[1:] * (d[0] ** 2 - d[1:] ** 2) + 2.0 * (sa[1:] ** 2 - sa[0] ** 2)


def build_system(
    anchors: Sequence[AnchorObservation],
    params: PathLossParams,
    variant: Variant,
) -> LinearSystem:
    """Assemble the difference system for one localization instance.

    The first anchor in the list is the reference; callers wanting
    deterministic output should sort anchors before building.
    """
    pos, d, _, _ = _unpack(anchors)
    k = pos[:, 0] ** 2 + pos[:, 1] ** 2
    A = pos[1:] - pos[0]
    b = d[0] ** 2 - d[1:] ** 2 + k[1:] - k[0]
    if variant is Variant.WLSR:
        S = wlsr_covariance(anchors, params)
        c = np.zeros(len(anchors) - 1)
    else:
        S = wlsrp_covariance(anchors, params)
        c = bias_vector(anchors, params)
    return LinearSystem(A=A, b=b, S=S, c=c, k_tilde=k)


def regularize(S: np.ndarray) -> np.ndarray:
    """Add a tiny diagonal so the zero-noise case degrades to ordinary LS."""
    n = S.shape[0]
    trace = float(np.trace(S))
    eps = 1e-9 * trace / n if trace > 0 else 1e-9
    return S + eps * np.eye(n)


_COND_LIMIT = 1e12


def solve(system: LinearSystem, variant: Variant = Variant.WLSR) -> PositionEstimate:
    """Weighted least-squares solution of a built system."""
    S = regularize(system.S)
    W_A = np.linalg.solve(S, system.A)
    W_bc = np.linalg.solve(S, system.b - system.c)
    G = system.A.T @ W_A
    if np.linalg.cond(G) > _COND_LIMIT:
        raise DegenerateGeometryError("anchors are collinear or nearly so")
    w = 0.5 * np.linalg.solve(G, system.A.T @ W_bc)
    method = Method.WLSR if variant is Variant.WLSR else Method.WLSRP
    return PositionEstimate(float(w[0]), float(w[1]), method)


def estimate_position(
    anchors: Sequence[AnchorObservation],
    params: PathLossParams,
    variant: Variant,
) -> PositionEstimate:
    """Build the system and solve it; the facade the tracker goes through."""
    return solve(build_system(anchors, params, variant), variant)


def estimate_positions_batch(
    anchor_pos: np.ndarray,
    d_tilde: np.ndarray,
    sigma_a: np.ndarray,
    sigma_p: np.ndarray,
    params: PathLossParams,
    variant: Variant,
) -> tuple[np.ndarray, np.ndarray]:
    """Solve many localization instances at once.

    Args:
        anchor_pos: perturbed anchor positions, reference first; either a
            shared (N, 2) set or one (M, N, 2) set per instance.
        d_tilde: (M, N) RSSI distance estimates, one row per blind node.
        sigma_a, sigma_p: (N,) per-anchor noise levels.

    Returns:
        (M, 2) estimates and an (M,) boolean mask of rows whose normal
        matrix was too ill-conditioned to trust (their estimate rows are
        garbage and must be replaced by a fallback).

    Row i of the result equals ``estimate_position`` on the same inputs up
    to floating-point reduction order.
    """
    pos = np.asarray(anchor_pos, dtype=float)
    d = np.atleast_2d(np.asarray(d_tilde, dtype=float))
    sa = np.asarray(sigma_a, dtype=float)
    sp = np.asarray(sigma_p, dtype=float)
    n = pos.shape[-2]
    if n < 3:
        raise InsufficientAnchorsError(f"need at least 3 anchors, got {n}")
    m = d.shape[0]
    pos = np.broadcast_to(pos, (m, n, 2))

    k = pos[..., 0] ** 2 + pos[..., 1] ** 2  # (M, N)
    A = pos[:, 1:, :] - pos[:, 0:1, :]  # (M, N-1, 2)
    b = d[:, 0:1] ** 2 - d[:, 1:] ** 2 + k[:, 1:] - k[:, 0:1]

    v = var_squared_distance(d, sp[None, :], params)  # (M, N)
    eye = np.eye(n - 1)
    S = v[:, 0, None, None] * np.ones((m, n - 1, n - 1)) + v[:, 1:, None] * eye
    c = np.zeros((m, n - 1))
    if variant is Variant.WLSRP:
        vk = var_squared_norm(k, sa[None, :])  # (M, N)
        S = S + vk[:, 0, None, None] + vk[:, 1:, None] * eye
        u2 = params.u**2
        coef = u2 * sp**2 + 0.5 * u2**2 * sp**4
        c = coef[None, 1:] * (d[:, 0:1] ** 2 - d[:, 1:] ** 2) + 2.0 * (
            sa[1:] ** 2 - sa[0] ** 2
        )

    trace = np.einsum("mii->m", S)
    eps = np.where(trace > 0, 1e-9 * trace / (n - 1), 1e-9)
    S = S + eps[:, None, None] * eye

    rhs = np.concatenate([A, (b - c)[:, :, None]], axis=2)
    X = np.linalg.solve(S, rhs)
    G = np.einsum("mij,mik->mjk", A, X[:, :, :2])
    r = np.einsum("mij,mi->mj", A, X[:, :, 2])

    det = G[:, 0, 0] * G[:, 1, 1] - G[:, 0, 1] * G[:, 1, 0]
    scale = np.einsum("mij,mij->m", G, G)  # squared Frobenius norm
    bad = np.abs(det) <= scale / _COND_LIMIT
    safe_det = np.where(bad, 1.0, det)
    wx = (G[:, 1, 1] * r[:, 0] - G[:, 0, 1] * r[:, 1]) / safe_det
    wy = (G[:, 0, 0] * r[:, 1] - G[:, 1, 0] * r[:, 0]) / safe_det
    est = 0.5 * np.stack([wx, wy], axis=1)
    return est, bad
