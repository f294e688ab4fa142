"""Strang-split time evolution with exactly solvable substeps.

The free flow is diagonal on the coefficients and the pure-nonlinear flow is
a pointwise phase rotation (the potential factor is real, so the modulus is
invariant), so every time-stepping error is splitting error.  The nonlinear
substep is evaluated on the doubled collocation grid and then truncated to
the retained band; with that placement the scheme's small-step limit is
exactly the flow on the truncated mode set that the direct derivative
formulas describe.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .iop import E1
from .modified_energy import M4Params, lambda4
from .potential import Potential, convolve_potential_double, energy
from .spectral import (
    EnergyReport,
    SpectralField,
    TorusGrid,
    mass,
    pad_to_double,
    sobolev_norm,
    truncate_from_double,
    zero_field,
)

__all__ = [
    "StepperConfig",
    "BlowUpError",
    "linear_step",
    "nonlinear_step",
    "strang_step",
    "evolve",
    "plane_wave_reference",
]

# A coefficient this large on defocusing-type data means the step size or the
# code is wrong, not the physics; abort instead of overflowing quietly.
BLOWUP_LIMIT = 1e12


@dataclass(frozen=True)
class StepperConfig:
    dt: float
    t_end: float
    observer_stride: int = 1

    def __post_init__(self):
        if self.dt <= 0:
            raise ValueError("dt must be positive")
        if self.t_end < 0:
            raise ValueError("t_end must be nonnegative")
        if self.t_end > 0 and self.dt > self.t_end:
            raise ValueError("dt must not exceed t_end")
        if self.observer_stride < 1:
            raise ValueError("observer stride must be at least 1")

    @property
    def steps(self) -> int:
        return int(round(self.t_end / self.dt)) if self.t_end > 0 else 0


class BlowUpError(RuntimeError):
    """A coefficient left the trusted range; carries the last good time."""

    def __init__(self, t_last_good: float, reports):
        super().__init__(
            f"field blew up after t = {t_last_good}; last good state reported"
        )
        self.t_last_good = t_last_good
        self.reports = list(reports)


def linear_step(f: SpectralField, tau: float) -> SpectralField:
    """Exact free flow: multiply each coefficient by exp(-i |n|^2 tau)."""
    nx, ny = f.grid.mode_grids()
    phase = np.exp(-1j * tau * (nx * nx + ny * ny).astype(np.float64))
    return SpectralField(f.grid, f.coeffs * phase)


def nonlinear_step(f: SpectralField, v: Potential, tau: float) -> SpectralField:
    """Exact pure-nonlinear flow: u -> exp(-i tau (V*|u|^2)) u pointwise.

    Evaluated on the doubled grid so the band-limited part of the product is
    exact; the result is then truncated back to the retained modes.
    """
    k2 = 2 * f.grid.size
    u2 = np.fft.ifft2(pad_to_double(f)) * k2 * k2
    w2 = convolve_potential_double(v, f)
    u2 *= np.exp(-1j * tau * w2)
    big = np.fft.fft2(u2) / (k2 * k2)
    return truncate_from_double(f.grid, big)


def strang_step(f: SpectralField, v: Potential, dt: float) -> SpectralField:
    """Second-order symmetric composition: half free, full nonlinear, half free."""
    g = linear_step(f, dt / 2.0)
    g = nonlinear_step(g, v, dt)
    return linear_step(g, dt / 2.0)


def _check_finite(f: SpectralField) -> bool:
    c = f.coeffs
    return bool(np.all(np.isfinite(c.view(np.float64)))) and float(np.max(np.abs(c))) < BLOWUP_LIMIT


def _report(t: float, f: SpectralField, v: Potential, diagnostics: M4Params) -> EnergyReport:
    e1 = E1(f, diagnostics.theta)
    l4 = lambda4(diagnostics, f)
    return EnergyReport(
        t=t,
        mass=mass(f),
        energy=energy(f, v),
        hs_norm=sobolev_norm(f, diagnostics.theta.s),
        e1=e1,
        e2=e1 + l4,
        lambda4=l4,
    )


def evolve(
    f: SpectralField,
    v: Potential,
    cfg: StepperConfig,
    diagnostics: M4Params,
) -> list[EnergyReport]:
    """Advance by Strang steps, emitting a report every observer stride.

    The initial state is always reported; so is the final one.  A non-finite
    or runaway coefficient aborts with :class:`BlowUpError` carrying the
    reports gathered so far and the last good time.
    """
    if not _check_finite(f):
        raise BlowUpError(0.0, [])
    reports = [_report(0.0, f, v, diagnostics)]
    state = f
    t_good = 0.0
    for step in range(1, cfg.steps + 1):
        state = strang_step(state, v, cfg.dt)
        t = step * cfg.dt
        if not _check_finite(state):
            raise BlowUpError(t_good, reports)
        t_good = t
        if step % cfg.observer_stride == 0 or step == cfg.steps:
            reports.append(_report(t, state, v, diagnostics))
    return reports


def plane_wave_reference(
    alpha: complex, n0, v: Potential, t: float, grid: TorusGrid
) -> SpectralField:
    """Single-mode orbit: amplitude alpha at n0 rotating with the combined
    dispersive and mean-field phase."""
    if not grid.contains(n0):
        raise ValueError(f"mode {tuple(n0)} outside retained set")
    n2 = float(n0[0]) ** 2 + float(n0[1]) ** 2
    phase = np.exp(-1j * (v.vhat0() * abs(alpha) ** 2 + n2) * t)
    out = zero_field(grid)
    out.set_mode(n0, alpha * phase)
    return out
