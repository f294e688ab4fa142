"""Experiment configuration, seeded initial data, drivers, and reports.

The config file is a flat ``key = value`` text format with ``#`` comments;
keys use dotted names (``grid.K``, ``theta.N``, ...).  Only ``grid.K`` is
required; everything else has a documented default.  All drivers write UTF-8
CSV with fixed headers plus a sidecar status file, and are deterministic for
a fixed config and seed.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .dynamics import BlowUpError, StepperConfig, evolve, strang_step
from .iop import E1, ThetaParams, dmvt_sweep
from .modified_energy import (
    E2,
    M4Params,
    ResonanceParams,
    dE1_dt_direct,
    dE2_dt_terms,
    gamma4_identity_audit,
    m4_bound_audit,
    resonance_for,
)
from .potential import Potential, make_potential
from .spectral import SpectralField, TorusGrid, make_grid, zero_field

__all__ = [
    "ConfigError",
    "ExperimentConfig",
    "load_config",
    "initial_data",
    "run_growth_experiment",
    "run_nsweep",
    "run_equivalence_sweep",
    "run_verification_suite",
    "VerificationReport",
]

GROWTH_HEADER = "t,mass,energy,hs_norm,e1,e2,lambda4"
NSWEEP_HEADER = "N,e2_t0,e2_t1,rel_increment"
EQUIV_HEADER = "N,equiv_ratio"


class ConfigError(ValueError):
    """Config file could not be parsed or a field violates its invariant."""


@dataclass
class ExperimentConfig:
    """Flat experiment description; field names mirror the dotted config keys."""

    grid_k: int
    theta_n: float = 8.0
    theta_s: float = 1.5
    resonance_rule: str = "torus"
    resonance_c_beta: float = 1.0
    resonance_alpha: float = 0.5
    potential_preset: str = "delta"
    potential_sigma: float = 2.0
    potential_c: float = 1.0
    initial_kind: str = "random_smooth"
    initial_alpha_re: float = 1.0
    initial_alpha_im: float = 0.0
    initial_n0: tuple = (1, 0)
    initial_amplitude: float = 0.35
    initial_decay: float = 3.5
    initial_seed: int = 7
    initial_width: float = 0.5
    stepper_dt: float = 1e-3
    stepper_t_end: float = 1.0
    stepper_stride: int = 100
    window_delta_meas: float = 0.1
    sweep_n: tuple = (4.0, 8.0, 16.0, 32.0)
    output_dir: str = "out"
    m4_c: float = 0.5

    # -- builders ----------------------------------------------------------

    def build_grid(self) -> TorusGrid:
        return make_grid(self.grid_k)

    def build_theta(self, n: float | None = None) -> ThetaParams:
        return ThetaParams(self.theta_n if n is None else float(n), self.theta_s)

    def build_resonance(self, n: float | None = None) -> ResonanceParams:
        return resonance_for(
            self.resonance_rule,
            self.theta_n if n is None else float(n),
            self.resonance_c_beta,
            self.resonance_alpha,
        )

    def build_potential(self) -> Potential:
        return make_potential(
            self.potential_preset, sigma=self.potential_sigma, c=self.potential_c
        )

    def build_m4(self, n: float | None = None) -> M4Params:
        return M4Params(
            self.build_theta(n), self.build_resonance(n), self.build_potential(), self.m4_c
        )

    def build_stepper(self) -> StepperConfig:
        return StepperConfig(self.stepper_dt, self.stepper_t_end, self.stepper_stride)


_KEY_MAP = {
    "grid.K": ("grid_k", int),
    "theta.N": ("theta_n", float),
    "theta.s": ("theta_s", float),
    "resonance.rule": ("resonance_rule", str),
    "resonance.c_beta": ("resonance_c_beta", float),
    "resonance.alpha": ("resonance_alpha", float),
    "potential.preset": ("potential_preset", str),
    "potential.sigma": ("potential_sigma", float),
    "potential.c": ("potential_c", float),
    "initial.kind": ("initial_kind", str),
    "initial.alpha_re": ("initial_alpha_re", float),
    "initial.alpha_im": ("initial_alpha_im", float),
    "initial.n0": ("initial_n0", "mode"),
    "initial.amplitude": ("initial_amplitude", float),
    "initial.decay": ("initial_decay", float),
    "initial.seed": ("initial_seed", int),
    "initial.width": ("initial_width", float),
    "stepper.dt": ("stepper_dt", float),
    "stepper.t_end": ("stepper_t_end", float),
    "stepper.stride": ("stepper_stride", int),
    "window.delta_meas": ("window_delta_meas", float),
    "sweep.N": ("sweep_n", "floats"),
    "output.dir": ("output_dir", str),
    "m4.c": ("m4_c", float),
}


def _parse_value(key: str, kind, raw: str, line_no: int):
    try:
        if kind is int:
            return int(raw)
        if kind is float:
            return float(raw)
        if kind is str:
            return raw
        if kind == "mode":
            parts = [int(p) for p in raw.split(",")]
            if len(parts) != 2:
                raise ValueError("expected two comma-separated integers")
            return tuple(parts)
        if kind == "floats":
            return tuple(float(p) for p in raw.split(","))
    except ValueError as exc:
        raise ConfigError(f"line {line_no}: bad value for {key}: {raw!r} ({exc})") from None
    raise AssertionError(kind)


def _validate(cfg: ExperimentConfig):
    def bad(name, msg):
        raise ConfigError(f"invalid {name}: {msg}")

    k = cfg.grid_k
    if k < 4 or k & (k - 1) != 0:
        bad("grid.K", f"{k} is not a power of two >= 4")
    if k > 16:
        bad("grid.K", f"{k} exceeds 16; the quadrilinear diagnostics enumerate "
                      "O(M^3) quadruples and refuse larger grids")
    if not cfg.theta_n >= 1.0:
        bad("theta.N", f"{cfg.theta_n} must be >= 1")
    if not cfg.theta_s > 1.0:
        bad("theta.s", f"{cfg.theta_s} must be > 1")
    if cfg.resonance_rule not in ("torus", "plane"):
        bad("resonance.rule", f"{cfg.resonance_rule!r} is not torus or plane")
    if cfg.resonance_c_beta <= 0:
        bad("resonance.c_beta", "must be positive")
    if cfg.resonance_rule == "plane" and not 0.5 <= cfg.resonance_alpha <= 0.75:
        bad("resonance.alpha", f"{cfg.resonance_alpha} outside the admissible interval [0.5, 0.75]")
    if cfg.potential_preset not in ("delta", "gaussian", "constant"):
        bad("potential.preset", f"{cfg.potential_preset!r}")
    if cfg.potential_preset == "gaussian" and cfg.potential_sigma <= 0:
        bad("potential.sigma", "must be positive")
    if cfg.potential_preset == "constant" and cfg.potential_c < 0:
        bad("potential.c", "must be nonnegative")
    if cfg.initial_kind not in ("plane_wave", "random_smooth", "gaussian_bump"):
        bad("initial.kind", f"{cfg.initial_kind!r}")
    if cfg.initial_kind == "random_smooth":
        if cfg.initial_amplitude <= 0:
            bad("initial.amplitude", "must be positive")
        if not cfg.initial_decay > cfg.theta_s + 1.0:
            bad(
                "initial.decay",
                f"{cfg.initial_decay} must exceed theta.s + 1 = {cfg.theta_s + 1.0} "
                "so the data genuinely lies in the working Sobolev space",
            )
    if cfg.initial_kind == "gaussian_bump" and cfg.initial_width <= 0:
        bad("initial.width", "must be positive")
    if cfg.stepper_dt <= 0:
        bad("stepper.dt", "must be positive")
    if cfg.stepper_t_end < 0:
        bad("stepper.t_end", "must be nonnegative")
    if cfg.stepper_t_end > 0 and cfg.stepper_dt > cfg.stepper_t_end:
        bad("stepper.dt", "must not exceed stepper.t_end")
    if cfg.stepper_stride < 1:
        bad("stepper.stride", "must be at least 1")
    if cfg.window_delta_meas <= 0:
        bad("window.delta_meas", "must be positive")
    if cfg.stepper_t_end > 0 and cfg.window_delta_meas > cfg.stepper_t_end:
        bad("window.delta_meas", "must not exceed stepper.t_end")
    if not cfg.sweep_n:
        bad("sweep.N", "must be a nonempty list")
    if any(not n > 1.0 for n in cfg.sweep_n):
        bad("sweep.N", "every threshold must exceed 1")
    if cfg.m4_c == 0:
        bad("m4.c", "must be nonzero")
    half = k // 2 - 1
    if max(abs(cfg.initial_n0[0]), abs(cfg.initial_n0[1])) > half:
        bad("initial.n0", f"{cfg.initial_n0} outside the retained mode set")


def load_config(path: str) -> ExperimentConfig:
    """Parse and fully validate a config file."""
    values = {}
    try:
        with open(path, "r", encoding="utf-8") as fh:
            lines = fh.readlines()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    for line_no, line in enumerate(lines, 1):
        stripped = line.split("#", 1)[0].strip()
        if not stripped:
            continue
        if "=" not in stripped:
            raise ConfigError(f"line {line_no}: expected 'key = value', got {stripped!r}")
        key, raw = (part.strip() for part in stripped.split("=", 1))
        if key not in _KEY_MAP:
            raise ConfigError(f"line {line_no}: unknown key {key!r}")
        attr, kind = _KEY_MAP[key]
        values[attr] = _parse_value(key, kind, raw, line_no)
    if "grid_k" not in values:
        raise ConfigError("missing required key grid.K")
    cfg = ExperimentConfig(**values)
    _validate(cfg)
    return cfg


def initial_data(cfg: ExperimentConfig, grid: TorusGrid, theta: ThetaParams) -> SpectralField:
    """Seeded initial state.

    plane_wave:    single coefficient alpha at n0.
    random_smooth: |coefficient| = A <n>^(-p) with independent uniform phases
                   from a seeded generator; p > s + 1 is enforced at config
                   validation so the data sits in H^s with room to spare.
    gaussian_bump: real Gaussian coefficient profile of inverse width.
    """
    f = zero_field(grid)
    if cfg.initial_kind == "plane_wave":
        alpha = complex(cfg.initial_alpha_re, cfg.initial_alpha_im)
        f.set_mode(cfg.initial_n0, alpha)
        return f
    modes = grid.active_modes()
    r2 = (modes[:, 0] ** 2 + modes[:, 1] ** 2).astype(np.float64)
    if cfg.initial_kind == "random_smooth":
        rng = np.random.default_rng(cfg.initial_seed)
        phases = rng.uniform(0.0, 2.0 * np.pi, size=len(modes))
        amps = cfg.initial_amplitude * (1.0 + r2) ** (-cfg.initial_decay / 2.0)
        vals = amps * np.exp(1j * phases)
    elif cfg.initial_kind == "gaussian_bump":
        vals = cfg.initial_amplitude * np.exp(-0.5 * cfg.initial_width**2 * r2)
    else:
        raise ConfigError(f"invalid initial.kind {cfg.initial_kind!r}")
    k = grid.size
    f.coeffs[modes[:, 0] % k, modes[:, 1] % k] = vals
    return f


# ---------------------------------------------------------------------------
# CSV plumbing


def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def _write_csv(path: str, header: str, rows) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(header + "\n")
        for row in rows:
            fh.write(",".join(_fmt(v) for v in row) + "\n")


def _write_status(path: str, lines) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for line in lines:
            fh.write(line + "\n")


def run_growth_experiment(cfg: ExperimentConfig, out_dir: str | None = None):
    """Evolve the configured data and write one row per observation.

    Returns (csv_path, reports).  A blow-up abort still writes all rows
    gathered so far and records the event in the sidecar status file.
    """
    out = out_dir or cfg.output_dir
    os.makedirs(out, exist_ok=True)
    grid = cfg.build_grid()
    theta = cfg.build_theta()
    v = cfg.build_potential()
    params = cfg.build_m4()
    f0 = initial_data(cfg, grid, theta)
    status = [f"kind: growth", f"grid_k: {cfg.grid_k}", f"seed: {cfg.initial_seed}"]
    if params.resonance.degenerate:
        status.append("note: beta0 clamped to 1; correction identically zero")
    try:
        reports = evolve(f0, v, cfg.build_stepper(), params)
        status.append("status: ok")
    except BlowUpError as exc:
        reports = exc.reports
        status.append(f"status: blowup")
        status.append(f"last_good_t: {_fmt(exc.t_last_good)}")
    csv_path = os.path.join(out, "growth.csv")
    _write_csv(
        csv_path,
        GROWTH_HEADER,
        [(r.t, r.mass, r.energy, r.hs_norm, r.e1, r.e2, r.lambda4) for r in reports],
    )
    _write_status(os.path.join(out, "growth_status.txt"), status)
    return csv_path, reports


def _nsweep_member(cfg: ExperimentConfig, n: float, f0: SpectralField, f1: SpectralField):
    params = cfg.build_m4(n)
    e2_t0 = E2(f0, params)
    e2_t1 = E2(f1, params)
    rel = abs(e2_t1 - e2_t0) / abs(e2_t0) if e2_t0 != 0 else float("nan")
    return n, e2_t0, e2_t1, rel


def run_nsweep(cfg: ExperimentConfig, out_dir: str | None = None, threads: int = 1):
    """Almost-conservation increments |E2(delta) - E2(0)| / E2(0) per threshold.

    The flow does not depend on the diagnostics, so the window is evolved
    once and each sweep member re-evaluates the modified energies; a failure
    at one threshold is recorded and the sweep continues.
    """
    out = out_dir or cfg.output_dir
    os.makedirs(out, exist_ok=True)
    grid = cfg.build_grid()
    theta = cfg.build_theta()
    v = cfg.build_potential()
    f0 = initial_data(cfg, grid, theta)
    steps = max(1, int(round(cfg.window_delta_meas / cfg.stepper_dt)))
    f1 = f0
    for _ in range(steps):
        f1 = strang_step(f1, v, cfg.stepper_dt)
    status = [f"kind: nsweep", f"delta_meas: {_fmt(steps * cfg.stepper_dt)}"]
    ns = sorted(cfg.sweep_n)

    def member(n):
        try:
            return _nsweep_member(cfg, n, f0, f1)
        except Exception as exc:  # isolate per-threshold failures
            status.append(f"error at N={_fmt(n)}: {exc}")
            return None

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            rows = list(pool.map(member, ns))
    else:
        rows = [member(n) for n in ns]
    rows = [r for r in rows if r is not None]
    for n in ns:
        if cfg.build_resonance(n).degenerate:
            status.append(f"note: beta0 clamped to 1 at N={_fmt(n)}; correction identically zero")
    positive = [(n, rel) for n, _, _, rel in rows if rel > 0 and math.isfinite(rel)]
    if len(positive) >= 2:
        xs = np.log([n for n, _ in positive])
        ys = np.log([rel for _, rel in positive])
        slope = float(np.polyfit(xs, ys, 1)[0])
        status.append(f"loglog_slope: {_fmt(slope)}")
    status.append("status: ok" if len(rows) == len(ns) else "status: partial")
    csv_path = os.path.join(out, "nsweep.csv")
    _write_csv(csv_path, NSWEEP_HEADER, rows)
    _write_status(os.path.join(out, "nsweep_status.txt"), status)
    return csv_path, rows


def run_equivalence_sweep(cfg: ExperimentConfig, out_dir: str | None = None, threads: int = 1):
    """Static measurement of |E2 - E1| / E1 at t = 0 per threshold."""
    out = out_dir or cfg.output_dir
    os.makedirs(out, exist_ok=True)
    grid = cfg.build_grid()
    theta = cfg.build_theta()
    f0 = initial_data(cfg, grid, theta)
    status = ["kind: equivalence"]
    ns = sorted(cfg.sweep_n)

    def member(n):
        try:
            params = cfg.build_m4(n)
            e1 = E1(f0, params.theta)
            e2 = E2(f0, params)
            return n, abs(e2 - e1) / e1 if e1 != 0 else float("nan")
        except Exception as exc:
            status.append(f"error at N={_fmt(n)}: {exc}")
            return None

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            rows = list(pool.map(member, ns))
    else:
        rows = [member(n) for n in ns]
    rows = [r for r in rows if r is not None]
    for n in ns:
        if cfg.build_resonance(n).degenerate:
            status.append(f"note: beta0 clamped to 1 at N={_fmt(n)}; ratio is exactly zero")
    status.append("status: ok" if len(rows) == len(ns) else "status: partial")
    csv_path = os.path.join(out, "equivalence.csv")
    _write_csv(csv_path, EQUIV_HEADER, rows)
    _write_status(os.path.join(out, "equivalence_status.txt"), status)
    return csv_path, rows


# ---------------------------------------------------------------------------
# verification suite


@dataclass
class VerificationCheck:
    name: str
    passed: bool
    tolerance: str
    measured: dict


@dataclass
class VerificationReport:
    checks: list

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def lines(self):
        out = []
        for c in self.checks:
            out.append(f"check: {c.name}")
            out.append(f"  tolerance: {c.tolerance}")
            for key, val in c.measured.items():
                out.append(f"  {key}: {val}")
            out.append(f"  result: {'pass' if c.passed else 'fail'}")
        out.append(f"overall: {'pass' if self.passed else 'fail'}")
        return out


def _random_field(grid: TorusGrid, seed: int, amplitude: float, decay: float) -> SpectralField:
    cfg = ExperimentConfig(
        grid_k=grid.size,
        initial_kind="random_smooth",
        initial_amplitude=amplitude,
        initial_decay=decay,
        initial_seed=seed,
    )
    return initial_data(cfg, grid, ThetaParams(8.0, 1.5))


def run_verification_suite(
    cfg: ExperimentConfig,
    out_dir: str | None = None,
    m4_params: M4Params | None = None,
) -> VerificationReport:
    """Run every structural audit and cross-check at its pinned tolerance.

    ``m4_params`` overrides the multiplier parameters used by the
    finite-difference checks (the suite's own sensitivity tests corrupt the
    shared constant through it).  Failures are collected, never short-circuited.
    """
    checks = []

    # Exhaustive phase-factorization identity on a small grid.
    audit = gamma4_identity_audit(8)
    checks.append(
        VerificationCheck(
            "gamma4_identity",
            audit.passed,
            "zero violations, exact integer arithmetic",
            {"grid_k": audit.grid_size, "checked": audit.checked, "violations": audit.violations},
        )
    )

    # Multiplier envelope constant, measured across thresholds.
    base = m4_params or cfg.build_m4()
    k_audit = min(cfg.grid_k, 16)
    bound = m4_bound_audit(k_audit, base, n_values=(2.0, 4.0, 8.0))
    stability = bound.stability_ratio
    checks.append(
        VerificationCheck(
            "m4_bound_envelope",
            math.isfinite(bound.c_sup) and stability <= 4.0,
            "C_sup finite; max/min across N at most 4",
            {
                "grid_k": k_audit,
                **{f"c_sup_N{int(n)}": v for n, v in sorted(bound.per_n.items())},
                "stability_ratio": stability,
            },
        )
    )

    # Second-difference envelope of the squared multiplier.
    dmvt_measured = {}
    dmvt_ok = True
    for s in (1.5, 2.0):
        maxima = {}
        for n in (8.0, 16.0):
            maxima[n] = dmvt_sweep(ThetaParams(n, s), samples=10_000, seed=int(10 * s + n))
        ratio = max(maxima.values()) / min(maxima.values())
        dmvt_measured[f"max_ratio_s{s}_N8"] = maxima[8.0]
        dmvt_measured[f"max_ratio_s{s}_N16"] = maxima[16.0]
        dmvt_measured[f"stability_s{s}"] = ratio
        dmvt_ok = dmvt_ok and math.isfinite(max(maxima.values())) and ratio <= 2.0
    checks.append(
        VerificationCheck(
            "dmvt_envelope",
            dmvt_ok,
            "finite maxima over 10^4 samples; across-N ratio at most 2",
            dmvt_measured,
        )
    )

    # Derivative of E^1: explicit quadrilinear sum vs centered difference.
    grid8 = make_grid(8)
    v = cfg.build_potential()
    theta8 = ThetaParams(1.5, cfg.theta_s)
    p8 = M4Params(theta8, ResonanceParams(0.5), v, base.c)
    f8 = _random_field(grid8, seed=11, amplitude=0.4, decay=3.5)
    dt = 1e-4
    fp, fm = strang_step(f8, v, dt), strang_step(f8, v, -dt)
    fd = (E1(fp, theta8) - E1(fm, theta8)) / (2.0 * dt)
    direct = dE1_dt_direct(f8, v, p8)
    rel_e1 = abs(fd - direct) / max(abs(fd), 1e-300)
    checks.append(
        VerificationCheck(
            "dE1_dt_fd",
            rel_e1 < 1e-6,
            "relative error < 1e-6 at dt = 1e-4",
            {"fd": fd, "direct": direct, "rel_error": rel_e1},
        )
    )

    # Cancellation: derivative of E^2 equals resonant + sextilinear terms.
    grid4 = make_grid(4)
    theta4 = ThetaParams(1.0, cfg.theta_s)
    p4 = M4Params(theta4, ResonanceParams(0.5), v, base.c)
    f4 = _random_field(grid4, seed=5, amplitude=0.5, decay=3.5)
    fp, fm = strang_step(f4, v, dt), strang_step(f4, v, -dt)
    fd2 = (E2(fp, p4) - E2(fm, p4)) / (2.0 * dt)
    term_i, term_ii = dE2_dt_terms(f4, p4)
    rel_e2 = abs(fd2 - (term_i + term_ii)) / max(abs(fd2), 1e-300)
    checks.append(
        VerificationCheck(
            "dE2_dt_cancellation",
            rel_e2 < 1e-4,
            "relative error < 1e-4 at dt = 1e-4",
            {"fd": fd2, "term_i": term_i, "term_ii": term_ii, "rel_error": rel_e2},
        )
    )

    report = VerificationReport(checks)
    if out_dir is not None:
        os.makedirs(out_dir, exist_ok=True)
        _write_status(os.path.join(out_dir, "audit_report.txt"), report.lines())
    return report
