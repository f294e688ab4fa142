"""Convolution potentials, the dealiased nonlinear product, and the energy.

A potential is known to the solver only through its real, even Fourier
multiplier vhat(n).  The multilinear sums evaluate vhat at mode differences
that leave the retained set, so the presets carry their defining formula and
tabulate it on whatever index range a caller needs.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .spectral import SpectralField, TorusGrid, synthesize_double

__all__ = ["Potential", "make_potential", "convolve_potential", "energy"]

# Residual imaginary content of V * |u|^2 beyond this (relative) is a bug,
# not roundoff: vhat real+even against a real field must give a real field.
IMAG_TOL = 1e-12


@dataclass(frozen=True)
class Potential:
    """Fourier multiplier of an even, nonnegative convolution kernel.

    ``preset`` is one of ``delta``, ``gaussian``, ``constant``; ``param`` is
    the width sigma (gaussian) or the total weight c (constant).
    """

    preset: str
    param: float = 0.0

    def vhat_at(self, nx, ny):
        """Multiplier values at integer frequencies; vectorized, any range."""
        nx = np.asarray(nx, dtype=np.float64)
        ny = np.asarray(ny, dtype=np.float64)
        r2 = nx * nx + ny * ny
        if self.preset == "delta":
            return np.ones_like(r2)
        if self.preset == "gaussian":
            return np.exp(-r2 / (self.param * self.param))
        if self.preset == "constant":
            return np.where(r2 == 0.0, self.param, 0.0)
        raise ValueError(f"unknown potential preset {self.preset!r}")

    def vhat0(self) -> float:
        return float(self.vhat_at(0, 0))

    def table(self, grid: TorusGrid) -> np.ndarray:
        """(K, K) multiplier table in FFT layout, zero on Nyquist rows."""
        nx, ny = grid.mode_grids()
        t = self.vhat_at(nx, ny)
        t[~grid.active_mask()] = 0.0
        return t

    def table_double(self, grid: TorusGrid) -> np.ndarray:
        """(2K, 2K) multiplier table for the dealiased product grid."""
        k2 = 2 * grid.size
        ax = np.fft.fftfreq(k2, d=1.0 / k2).astype(np.int64)
        nx, ny = np.meshgrid(ax, ax, indexing="ij")
        return self.vhat_at(nx, ny)


def make_potential(preset: str, sigma: float | None = None, c: float | None = None) -> Potential:
    """Construct one of the three presets.

    delta     -> vhat = 1 everywhere (recovers the cubic local nonlinearity)
    gaussian  -> vhat(n) = exp(-|n|^2 / sigma^2), sigma > 0
    constant  -> vhat(n) = c * [n == 0], c >= 0
    """
    if preset == "delta":
        return Potential("delta")
    if preset == "gaussian":
        if sigma is None or sigma <= 0:
            raise ValueError("gaussian preset needs sigma > 0")
        return Potential("gaussian", float(sigma))
    if preset == "constant":
        if c is None or c < 0:
            raise ValueError("constant preset needs c >= 0")
        return Potential("constant", float(c))
    raise ValueError(f"unknown potential preset {preset!r}")


def _intensity_spectrum(f: SpectralField) -> np.ndarray:
    """Exact (2K, 2K) spectrum of |u|^2, computed on the doubled grid.

    The doubled grid represents every mode difference of the retained band,
    so the quadratic product picks up no aliasing at all.
    """
    u2 = synthesize_double(f)
    w = u2.real * u2.real + u2.imag * u2.imag
    k2 = 2 * f.grid.size
    return np.fft.fft2(w) / (k2 * k2)


def convolve_potential(v: Potential, f: SpectralField) -> np.ndarray:
    """Physical values of V * |u|^2 at the K x K collocation points.

    Returned as a real array; the (checked) imaginary residue is discarded so
    the nonlinear substep phase stays a pure phase.
    """
    what = _intensity_spectrum(f)
    k2 = 2 * f.grid.size
    big = np.fft.ifft2(v.table_double(f.grid) * what) * k2 * k2
    scale = np.max(np.abs(big))
    if scale > 0 and np.max(np.abs(big.imag)) > IMAG_TOL * scale:
        raise ValueError("imaginary residue in V * |u|^2 exceeds tolerance")
    # K-grid points are every second point of the doubled grid.
    return big.real[::2, ::2].copy()


def convolve_potential_double(v: Potential, f: SpectralField) -> np.ndarray:
    """Same field as :func:`convolve_potential`, sampled on the 2K grid."""
    what = _intensity_spectrum(f)
    k2 = 2 * f.grid.size
    big = np.fft.ifft2(v.table_double(f.grid) * what) * k2 * k2
    scale = np.max(np.abs(big))
    if scale > 0 and np.max(np.abs(big.imag)) > IMAG_TOL * scale:
        raise ValueError("imaginary residue in V * |u|^2 exceeds tolerance")
    return big.real


def energy(f: SpectralField, v: Potential) -> float:
    """Hamiltonian of the flow on the retained modes.

    Kinetic part 1/2 sum |n|^2 |u_hat|^2 plus quartic part
    1/4 sum_k vhat(k) |what(k)|^2, with what the exact spectrum of |u|^2.
    """
    nx, ny = f.grid.mode_grids()
    kinetic = 0.5 * float(np.sum((nx * nx + ny * ny) * np.abs(f.coeffs) ** 2))
    what = _intensity_spectrum(f)
    quartic = 0.25 * float(np.sum(v.table_double(f.grid) * np.abs(what) ** 2))
    return kinetic + quartic
