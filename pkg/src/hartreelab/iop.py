"""Frequency-threshold multiplier, the induced smoothing operator, and E^1.

The multiplier equals 1 up to the threshold N and grows like (|n|/N)^s above
it, so the weighted L^2 size of a field tracks its H^s norm up to an explicit
factor of N^s.  E^1 is that weighted squared size; it is the base quantity
whose slow variation the rest of the package measures.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .spectral import SpectralField

__all__ = ["ThetaParams", "theta", "apply_D", "E1", "dmvt_check", "dmvt_sweep"]


@dataclass(frozen=True)
class ThetaParams:
    """Threshold N and Sobolev index s of the multiplier.

    The analysis keeps N strictly above 1; the degenerate audits on tiny
    grids run at N = 1, so equality is accepted here.
    """

    N: float
    s: float

    def __post_init__(self):
        if not self.N >= 1.0:
            raise ValueError(f"threshold N must be >= 1, got {self.N}")
        if not self.s > 1.0:
            raise ValueError(f"Sobolev index s must be > 1, got {self.s}")


def theta_sq_of_r2(r2, p: ThetaParams):
    """Squared multiplier from squared magnitudes; vectorized, any range."""
    r2 = np.asarray(r2, dtype=np.float64)
    n2 = p.N * p.N
    return np.where(r2 <= n2, 1.0, (r2 / n2) ** p.s)


def theta(mode, p: ThetaParams) -> float:
    """Multiplier value at an integer mode: 1 below N, (|n|/N)^s above."""
    nx, ny = float(mode[0]), float(mode[1])
    return float(np.sqrt(theta_sq_of_r2(nx * nx + ny * ny, p)))


def theta_sq_table(grid, p: ThetaParams) -> np.ndarray:
    """(K, K) table of squared multiplier values in FFT layout."""
    nx, ny = grid.mode_grids()
    return theta_sq_of_r2(nx * nx + ny * ny, p)


def apply_D(f: SpectralField, p: ThetaParams) -> SpectralField:
    """Coefficient-wise multiplication by the threshold multiplier."""
    weights = np.sqrt(theta_sq_table(f.grid, p))
    return SpectralField(f.grid, f.coeffs * weights)


def E1(f: SpectralField, p: ThetaParams) -> float:
    """Base modified energy: squared L^2 size of the weighted field."""
    return float(np.sum(theta_sq_table(f.grid, p) * np.abs(f.coeffs) ** 2))


def _theta_sq_point(x: np.ndarray, p: ThetaParams) -> float:
    r2 = float(x[0] * x[0] + x[1] * x[1])
    n2 = p.N * p.N
    return 1.0 if r2 <= n2 else float((r2 / n2) ** p.s)


def dmvt_check(p: ThetaParams, x, eta, mu) -> float:
    """Second-difference ratio of the squared multiplier at a smooth point.

    Returns |f(x+eta+mu) - f(x+eta) - f(x+mu) + f(x)| divided by the envelope
    |eta| |mu| theta(x)^2 / |x|^2,  f = theta^2.  The base point must satisfy
    |x| >= 2N and |eta|, |mu| <= |x|/8 so every evaluation stays on the smooth
    branch of the piecewise definition.
    """
    x = np.asarray(x, dtype=np.float64)
    eta = np.asarray(eta, dtype=np.float64)
    mu = np.asarray(mu, dtype=np.float64)
    rx = float(np.hypot(x[0], x[1]))
    re, rm = float(np.hypot(*eta)), float(np.hypot(*mu))
    if rx < 2.0 * p.N:
        raise ValueError(f"base point magnitude {rx} below smooth-branch cutoff {2.0 * p.N}")
    if re > rx / 8.0 or rm > rx / 8.0:
        raise ValueError("offsets must satisfy |eta|, |mu| <= |x|/8")
    if re == 0.0 or rm == 0.0:
        return 0.0
    d2 = (
        _theta_sq_point(x + eta + mu, p)
        - _theta_sq_point(x + eta, p)
        - _theta_sq_point(x + mu, p)
        + _theta_sq_point(x, p)
    )
    envelope = re * rm * _theta_sq_point(x, p) / (rx * rx)
    return abs(d2) / envelope


def dmvt_sweep(p: ThetaParams, samples: int = 10_000, seed: int = 0, rmax_factor: float = 8.0):
    """Max second-difference ratio over random admissible configurations.

    Base points are drawn with |x| uniform in [2N, rmax_factor*N] and uniform
    direction; offsets have magnitude uniform in (0, |x|/8].  Deterministic
    for a fixed seed.
    """
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(samples):
        rx = rng.uniform(2.0 * p.N, rmax_factor * p.N)
        ang = rng.uniform(0.0, 2.0 * np.pi, size=3)
        x = rx * np.array([np.cos(ang[0]), np.sin(ang[0])])
        re = rng.uniform(0.0, rx / 8.0)
        rm = rng.uniform(0.0, rx / 8.0)
        eta = re * np.array([np.cos(ang[1]), np.sin(ang[1])])
        mu = rm * np.array([np.cos(ang[2]), np.sin(ang[2])])
        worst = max(worst, dmvt_check(p, x, eta, mu))
    return worst
