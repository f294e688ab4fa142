"""Torus grid, spectral fields, and the discrete Fourier transform contract.

The state of every computation in this package is a set of complex Fourier
coefficients u_hat(n) on a truncated integer lattice.  We adopt the synthesis
convention

    u(x_j) = sum_n u_hat(n) exp(i <n, x_j>),   x_j = 2*pi*j/K,

so that mass is the plain coefficient sum ``sum |u_hat(n)|^2`` and convolution
by a kernel acts as coefficient-wise multiplication.  Coefficients are stored
in FFT layout on a K-by-K array; the rows/columns carrying the unpaired
-K/2 frequency are held at exactly zero so the retained mode set is symmetric
under n -> -n.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "TorusGrid",
    "SpectralField",
    "EnergyReport",
    "make_grid",
    "synthesize",
    "analyze",
    "sobolev_norm",
    "mass",
]


@dataclass(frozen=True)
class TorusGrid:
    """Truncated mode set of the 2-pi-periodic square torus.

    ``size`` is the number of modes per axis (K).  Retained modes are all
    n = (nx, ny) with -K/2 <= nx, ny <= K/2 - 1; coefficients on the nx = -K/2
    or ny = -K/2 rows are held at zero (Nyquist policy), leaving an active set
    of (K-1)^2 modes symmetric under negation.
    """

    size: int

    def __post_init__(self):
        k = self.size
        if k < 4:
            raise ValueError(f"grid size must be at least 4, got {k}")
        if k & (k - 1) != 0:
            raise ValueError(f"grid size must be a power of two, got {k}")

    @property
    def half(self) -> int:
        """Largest retained frequency per axis, K/2 - 1."""
        return self.size // 2 - 1

    @property
    def active_mode_count(self) -> int:
        return (self.size - 1) ** 2

    @property
    def max_mode_magnitude(self) -> float:
        return float(np.hypot(self.half, self.half))

    def mode_axis(self) -> np.ndarray:
        """1D signed frequencies in FFT order, Nyquist included."""
        return np.fft.fftfreq(self.size, d=1.0 / self.size).astype(np.int64)

    def mode_grids(self) -> tuple[np.ndarray, np.ndarray]:
        """(nx, ny) integer arrays of shape (K, K) in FFT layout."""
        ax = self.mode_axis()
        return np.meshgrid(ax, ax, indexing="ij")

    def active_mask(self) -> np.ndarray:
        """Boolean (K, K) mask: True off the zeroed Nyquist rows/columns."""
        ax = self.mode_axis()
        keep = ax != -(self.size // 2)
        return keep[:, None] & keep[None, :]

    def active_modes(self) -> np.ndarray:
        """Active modes as an (M, 2) int array, lexicographic in (nx, ny)."""
        h = self.half
        r = np.arange(-h, h + 1, dtype=np.int64)
        nx, ny = np.meshgrid(r, r, indexing="ij")
        return np.column_stack([nx.ravel(), ny.ravel()])

    def contains(self, mode) -> bool:
        nx, ny = int(mode[0]), int(mode[1])
        return abs(nx) <= self.half and abs(ny) <= self.half


@dataclass
class SpectralField:
    """Complex coefficients of a field on a :class:`TorusGrid`.

    ``coeffs`` is a (K, K) complex array in FFT layout.  No Hermitian symmetry
    is assumed (fields are complex-valued); Nyquist-policy entries must be
    exactly zero.
    """

    grid: TorusGrid
    coeffs: np.ndarray

    def __post_init__(self):
        k = self.grid.size
        self.coeffs = np.asarray(self.coeffs, dtype=np.complex128)
        if self.coeffs.shape != (k, k):
            raise ValueError(
                f"coefficient array shape {self.coeffs.shape} does not match grid ({k}, {k})"
            )

    def validate(self):
        if not np.all(np.isfinite(self.coeffs.view(np.float64))):
            raise ValueError("non-finite coefficient")
        if np.any(self.coeffs[~self.grid.active_mask()] != 0):
            raise ValueError("nonzero coefficient on a Nyquist-policy row")

    def copy(self) -> "SpectralField":
        return SpectralField(self.grid, self.coeffs.copy())

    def at_mode(self, mode) -> complex:
        nx, ny = int(mode[0]), int(mode[1])
        if not self.grid.contains((nx, ny)):
            raise ValueError(f"mode {(nx, ny)} outside retained set")
        k = self.grid.size
        return complex(self.coeffs[nx % k, ny % k])

    def set_mode(self, mode, value):
        nx, ny = int(mode[0]), int(mode[1])
        if not self.grid.contains((nx, ny)):
            raise ValueError(f"mode {(nx, ny)} outside retained set")
        k = self.grid.size
        self.coeffs[nx % k, ny % k] = value

    def active_coeff_vector(self) -> np.ndarray:
        """Coefficients of the active modes, ordered like ``active_modes()``."""
        modes = self.grid.active_modes()
        k = self.grid.size
        return self.coeffs[modes[:, 0] % k, modes[:, 1] % k]


@dataclass(frozen=True)
class EnergyReport:
    """One observation of the flow: conserved and almost-conserved quantities."""

    t: float
    mass: float
    energy: float
    hs_norm: float
    e1: float
    e2: float
    lambda4: float


def make_grid(size: int) -> TorusGrid:
    """Build the torus grid; rejects sizes that are not powers of two >= 4."""
    return TorusGrid(int(size))


def zero_field(grid: TorusGrid) -> SpectralField:
    return SpectralField(grid, np.zeros((grid.size, grid.size), dtype=np.complex128))


def field_from_modes(grid: TorusGrid, entries) -> SpectralField:
    """Field with the given ``{mode: amplitude}`` entries, all else zero."""
    f = zero_field(grid)
    for mode, amp in dict(entries).items():
        f.set_mode(mode, amp)
    return f


def synthesize(f: SpectralField) -> np.ndarray:
    """Evaluate the field at the K x K collocation points x_j = 2*pi*j/K.

    Inverse of :func:`analyze`; the plain coefficient-sum convention makes
    this an unnormalized inverse FFT.
    """
    k = f.grid.size
    return np.fft.ifft2(f.coeffs) * k * k


def analyze(grid: TorusGrid, values: np.ndarray) -> SpectralField:
    """Recover coefficients from K x K collocation samples.

    Exact inverse of :func:`synthesize` on the retained mode set; whatever the
    samples put on the Nyquist rows is forced to zero.
    """
    values = np.asarray(values, dtype=np.complex128)
    k = grid.size
    if values.shape != (k, k):
        raise ValueError(f"sample array shape {values.shape} does not match grid ({k}, {k})")
    coeffs = np.fft.fft2(values) / (k * k)
    coeffs[~grid.active_mask()] = 0.0
    return SpectralField(grid, coeffs)


def pad_to_double(f: SpectralField) -> np.ndarray:
    """Coefficients re-laid on the doubled (2K x 2K) FFT grid, zero-padded."""
    k = f.grid.size
    h = f.grid.half
    big = np.zeros((2 * k, 2 * k), dtype=np.complex128)
    ms = np.arange(-h, h + 1, dtype=np.int64)
    rs, rb = ms % k, ms % (2 * k)
    big[np.ix_(rb, rb)] = f.coeffs[np.ix_(rs, rs)]
    return big


def truncate_from_double(grid: TorusGrid, big_coeffs: np.ndarray) -> SpectralField:
    """Keep the retained modes of a doubled-grid coefficient array."""
    k = grid.size
    h = grid.half
    small = np.zeros((k, k), dtype=np.complex128)
    ms = np.arange(-h, h + 1, dtype=np.int64)
    rs, rb = ms % k, ms % (2 * k)
    small[np.ix_(rs, rs)] = big_coeffs[np.ix_(rb, rb)]
    return SpectralField(grid, small)


def synthesize_double(f: SpectralField) -> np.ndarray:
    """Field values on the doubled 2K x 2K collocation grid (exact oversampling)."""
    k2 = 2 * f.grid.size
    return np.fft.ifft2(pad_to_double(f)) * k2 * k2


def sobolev_norm(f: SpectralField, s: float) -> float:
    """H^s norm: (sum |u_hat(n)|^2 (1 + |n|^2)^s)^(1/2)."""
    if s < 0:
        raise ValueError("Sobolev index must be nonnegative")
    nx, ny = f.grid.mode_grids()
    bracket_sq = 1.0 + (nx * nx + ny * ny).astype(np.float64)
    total = np.sum(np.abs(f.coeffs) ** 2 * bracket_sq**s)
    return float(np.sqrt(total))


def mass(f: SpectralField) -> float:
    """Squared L^2 size of the field, sum |u_hat(n)|^2."""
    return float(np.sum(np.abs(f.coeffs) ** 2))


def l2_distance(f: SpectralField, g: SpectralField) -> float:
    if f.grid.size != g.grid.size:
        raise ValueError("grid mismatch")
    return float(np.sqrt(np.sum(np.abs(f.coeffs - g.coeffs) ** 2)))
