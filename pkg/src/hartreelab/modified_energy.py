"""Resonance decomposition and the corrected (higher) modified energy.

On the zero-sum hyperplane of mode quadruples, the phase factor of the flow
factors as  |n1|^2 - |n2|^2 + |n3|^2 - |n4|^2 = 2 (n1+n2).(n1+n4).  The
quadruples where that factor is (nearly) degenerate -- a pair sum vanishes or
the two pair sums are nearly orthogonal -- are left alone; on the rest, a
quadrilinear correction with multiplier M4 cancels the leading drift of E^1.
E^2 = E^1 + lambda4(M4) then moves only through the resonant quadrilinear
remainder (I) and a sextilinear term with multiplier M6 (II).

All multilinear sums here enumerate coefficient indices (m1, m2, m3, m4) with
m1 - m2 + m3 - m4 = 0 and evaluate the multipliers at (m1, -m2, m3, -m4),
which is the same thing as summing conjugated slots over the zero-sum
hyperplane; this keeps conjugation out of the hot loop.  Reductions are
pairwise within fixed-size blocks and exact across blocks, so totals agree
across partitionings to near machine precision.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .iop import E1, ThetaParams, theta_sq_of_r2
from .potential import Potential
from .spectral import SpectralField, TorusGrid, make_grid

__all__ = [
    "ResonanceParams",
    "Quadruplet",
    "M4Params",
    "Classification",
    "BudgetExceededError",
    "beta0_for",
    "resonance_for",
    "classify_quadruplet",
    "m4",
    "m6",
    "lambda4",
    "E2",
    "dE1_dt_direct",
    "dE2_dt_terms",
    "gamma4_identity_audit",
    "m4_bound_audit",
]

# Enumeration budgets: the quadrilinear sums are O(M^3) and the sextilinear
# sum is O(M^5) in the active mode count M, so both refuse large grids
# outright rather than truncate.
LAMBDA4_MODE_BUDGET = 256
GAMMA6_MODE_BUDGET = 25
AUDIT_MAX_GRID = 16

_BLOCK_ELEMS = 250_000


class BudgetExceededError(RuntimeError):
    """An enumeration would exceed its stated budget; nothing was computed."""


class Classification(enum.Enum):
    NONRESONANT = "nonresonant"
    RESONANT = "resonant"


@dataclass(frozen=True)
class ResonanceParams:
    """Angle threshold beta0 together with the rule that generated it."""

    beta0: float
    rule: str = "torus"
    c_beta: float = 1.0
    alpha: float = 0.5
    clamped: bool = False

    def __post_init__(self):
        if not 0.0 < self.beta0 <= 1.0:
            raise ValueError(f"beta0 must lie in (0, 1], got {self.beta0}")
        if self.rule not in ("torus", "plane"):
            raise ValueError(f"unknown resonance rule {self.rule!r}")
        if self.rule == "plane" and not 0.5 <= self.alpha <= 0.75:
            raise ValueError(f"plane-rule exponent alpha must lie in [1/2, 3/4], got {self.alpha}")

    @property
    def degenerate(self) -> bool:
        """beta0 = 1 empties the non-resonant set and zeroes the correction."""
        return self.beta0 >= 1.0


def beta0_for(rule: str, n: float, c_beta: float = 1.0, alpha: float = 0.5):
    """Angle threshold for a given frequency threshold N.

    torus rule: c_beta / N;  plane rule: c_beta / N^alpha with
    alpha in [1/2, 3/4].  Returns (beta0, clamped); values above 1 are
    clamped to 1 and reported.
    """
    if not n > 1.0:
        raise ValueError(f"threshold N must exceed 1, got {n}")
    if c_beta <= 0:
        raise ValueError("c_beta must be positive")
    if rule == "torus":
        raw = c_beta / n
    elif rule == "plane":
        if not 0.5 <= alpha <= 0.75:
            raise ValueError(f"plane-rule exponent alpha must lie in [1/2, 3/4], got {alpha}")
        raw = c_beta / n**alpha
    else:
        raise ValueError(f"unknown resonance rule {rule!r}")
    clamped = raw > 1.0
    return (1.0 if clamped else raw), clamped


def resonance_for(rule: str, n: float, c_beta: float = 1.0, alpha: float = 0.5) -> ResonanceParams:
    value, clamped = beta0_for(rule, n, c_beta, alpha)
    return ResonanceParams(value, rule, c_beta, alpha, clamped)


@dataclass(frozen=True)
class Quadruplet:
    """Zero-sum frequency quadruple with its derived pair sums."""

    n1: tuple[int, int]
    n2: tuple[int, int]
    n3: tuple[int, int]
    n4: tuple[int, int]

    def __post_init__(self):
        s = tuple(
            self.n1[i] + self.n2[i] + self.n3[i] + self.n4[i] for i in (0, 1)
        )
        if s != (0, 0):
            raise ValueError(f"quadruple does not sum to zero (sum {s})")

    @property
    def n12(self) -> tuple[int, int]:
        return (self.n1[0] + self.n2[0], self.n1[1] + self.n2[1])

    @property
    def n14(self) -> tuple[int, int]:
        return (self.n1[0] + self.n4[0], self.n1[1] + self.n4[1])


@dataclass(frozen=True)
class M4Params:
    """Everything the correction multiplier needs.

    ``c`` is the constant shared by the quadrilinear derivative formula and
    M4; it is fixed once by differentiating the weighted mass under this
    package's transform convention (giving 1/2) and is enforced by the
    finite-difference cross-checks rather than trusted.
    """

    theta: ThetaParams
    resonance: ResonanceParams
    potential: Potential
    c: float = 0.5

    def __post_init__(self):
        if self.c == 0:
            raise ValueError("constant c must be nonzero")


def _nonresonant_mask(n12x, n12y, n14x, n14y, beta0: float):
    """|cos angle(n12, n14)| > beta0 with both pair sums nonzero.

    Compared as dot^2 > beta0^2 |n12|^2 |n14|^2; all integer quantities are
    exact in float64 at the grid sizes the budgets allow.
    """
    a2 = n12x * n12x + n12y * n12y
    b2 = n14x * n14x + n14y * n14y
    dot = (n12x * n14x + n12y * n14y).astype(np.float64)
    return (a2 > 0) & (b2 > 0) & (dot * dot > (beta0 * beta0) * (a2 * b2).astype(np.float64))


def _phase_denominator(n12x, n12y, n14x, n14y):
    """2 n12 . n14; equals the alternating sum of squared magnitudes on the
    zero-sum hyperplane (verified exhaustively by gamma4_identity_audit)."""
    return 2.0 * (n12x * n14x + n12y * n14y).astype(np.float64)


def _theta_sq_xy(nx, ny, p: ThetaParams):
    return theta_sq_of_r2(
        nx.astype(np.float64) ** 2 + ny.astype(np.float64) ** 2, p
    )


def m4_values(n1x, n1y, n2x, n2y, n3x, n3y, n4x, n4y, p: M4Params):
    """Vectorized correction multiplier on zero-sum quadruples.

    Zero on the resonant set; elsewhere c times the alternating sum of
    squared multiplier weights over the factored phase denominator, times
    the potential multiplier at n3 + n4.
    """
    # pairwise grouping makes the numerator an exact float zero in the
    # degenerate cases n1 = -n2 / n4 = -n3 and n1 = -n4 / n2 = -n3
    num = (_theta_sq_xy(n1x, n1y, p.theta) - _theta_sq_xy(n2x, n2y, p.theta)) + (
        _theta_sq_xy(n3x, n3y, p.theta) - _theta_sq_xy(n4x, n4y, p.theta)
    )
    n12x, n12y = n1x + n2x, n1y + n2y
    n14x, n14y = n1x + n4x, n1y + n4y
    mask = _nonresonant_mask(n12x, n12y, n14x, n14y, p.resonance.beta0)
    denom = _phase_denominator(n12x, n12y, n14x, n14y)
    vv = p.potential.vhat_at(n3x + n4x, n3y + n4y)
    safe = np.where(mask, denom, 1.0)
    return np.where(mask, p.c * num * vv / safe, 0.0)


def classify_quadruplet(q: Quadruplet, r: ResonanceParams) -> Classification:
    """Non-resonant iff both pair sums are nonzero and their angle cosine
    exceeds beta0 in absolute value."""
    n12x, n12y = q.n12
    n14x, n14y = q.n14
    mask = _nonresonant_mask(
        np.asarray(n12x, dtype=np.int64),
        np.asarray(n12y, dtype=np.int64),
        np.asarray(n14x, dtype=np.int64),
        np.asarray(n14y, dtype=np.int64),
        r.beta0,
    )
    return Classification.NONRESONANT if bool(mask) else Classification.RESONANT


def m4(q: Quadruplet, p: M4Params) -> float:
    """Correction multiplier at a single quadruple."""
    arrs = [
        np.asarray([v], dtype=np.int64)
        for v in (
            q.n1[0], q.n1[1], q.n2[0], q.n2[1],
            q.n3[0], q.n3[1], q.n4[0], q.n4[1],
        )
    ]
    return float(m4_values(*arrs, p)[0])


def m6(modes, p: M4Params) -> float:
    """Sextilinear multiplier: four-term alternating combination of M4 values
    at contracted arguments, each against the potential multiplier of the
    contracted pair."""
    ns = [(int(m[0]), int(m[1])) for m in modes]
    if len(ns) != 6:
        raise ValueError("m6 takes exactly six modes")
    if (sum(n[0] for n in ns), sum(n[1] for n in ns)) != (0, 0):
        raise ValueError("sextuple does not sum to zero")
    n1, n2, n3, n4, n5, n6 = ns

    def add(*vs):
        return (sum(v[0] for v in vs), sum(v[1] for v in vs))

    def mm(a, b, c_, d):
        return m4(Quadruplet(a, b, c_, d), p)

    def vv(a, b):
        return float(p.potential.vhat_at(a[0] + b[0], a[1] + b[1]))

    return (
        mm(add(n1, n2, n3), n4, n5, n6) * vv(n1, n2)
        - mm(n1, add(n2, n3, n4), n5, n6) * vv(n2, n3)
        + mm(n1, n2, add(n3, n4, n5), n6) * vv(n3, n4)
        - mm(n1, n2, n3, add(n4, n5, n6)) * vv(n4, n5)
    )


# ---------------------------------------------------------------------------
# quadrilinear reductions


def _mode_setup(f: SpectralField, budget: int, what: str):
    grid = f.grid
    modes = grid.active_modes()
    if len(modes) > budget:
        raise BudgetExceededError(
            f"{what}: {len(modes)} active modes exceed the budget of {budget}; "
            "refusing rather than truncating"
        )
    coeffs = f.active_coeff_vector()
    h = grid.half
    width = 2 * h + 1
    lut = np.full((width, width), -1, dtype=np.int64)
    lut[modes[:, 0] + h, modes[:, 1] + h] = np.arange(len(modes))
    return modes, coeffs, h, lut


def _quadrilinear_sum(f: SpectralField, p: M4Params, vhat: Potential, kind: str):
    """Sum of weight(m1,m2,m3,m4) * u1 conj(u2) u3 conj(u4) over the
    constraint m1 - m2 + m3 - m4 = 0.

    kind selects the weight: "m4" for the correction multiplier, "full" for
    the bare alternating numerator times the potential multiplier, and
    "resonant" for that numerator restricted to resonant quadruples.
    Returns (complex total, magnitude scale).
    """
    modes, coeffs, h, lut = _mode_setup(f, LAMBDA4_MODE_BUDGET, "quadrilinear sum")
    m = len(modes)
    mx, my = modes[:, 0], modes[:, 1]
    th2 = theta_sq_of_r2((mx * mx + my * my).astype(np.float64), p.theta)

    block = max(1, _BLOCK_ELEMS // (m * m))
    parts_re, parts_im, parts_scale = [], [], []
    for start in range(0, m, block):
        i1 = np.arange(start, min(start + block, m))
        m1x = mx[i1][:, None, None]
        m1y = my[i1][:, None, None]
        m2x, m2y = mx[None, :, None], my[None, :, None]
        m3x, m3y = mx[None, None, :], my[None, None, :]
        m4x = m1x - m2x + m3x
        m4y = m1y - m2y + m3y
        valid = (np.abs(m4x) <= h) & (np.abs(m4y) <= h)
        b1, b2, b3 = np.nonzero(valid)
        if b1.size == 0:
            continue
        j1 = i1[b1]
        j2 = b2
        j3 = b3
        v4x = m4x[b1, b2, b3]
        v4y = m4y[b1, b2, b3]
        j4 = lut[v4x + h, v4y + h]

        # multiplier arguments in zero-sum coordinates: (m1, -m2, m3, -m4)
        a1x, a1y = mx[j1], my[j1]
        a2x, a2y = -mx[j2], -my[j2]
        a3x, a3y = mx[j3], my[j3]
        a4x, a4y = -v4x, -v4y

        if kind == "m4":
            w = m4_values(a1x, a1y, a2x, a2y, a3x, a3y, a4x, a4y, p)
        else:
            num = (th2[j1] - th2[j2]) + (th2[j3] - th2[j4])
            w = num * vhat.vhat_at(a3x + a4x, a3y + a4y)
            if kind == "resonant":
                n12x, n12y = a1x + a2x, a1y + a2y
                n14x, n14y = a1x + a4x, a1y + a4y
                w = np.where(
                    _nonresonant_mask(n12x, n12y, n14x, n14y, p.resonance.beta0),
                    0.0,
                    w,
                )
        term = w * coeffs[j1] * np.conj(coeffs[j2]) * coeffs[j3] * np.conj(coeffs[j4])
        parts_re.append(float(np.sum(term.real)))
        parts_im.append(float(np.sum(term.imag)))
        parts_scale.append(float(np.sum(np.abs(term))))
    total = complex(math.fsum(parts_re), math.fsum(parts_im))
    scale = math.fsum(parts_scale)
    return total, scale


def _real_part_checked(total: complex, scale: float, what: str) -> float:
    if abs(total.imag) > 1e-10 * max(scale, abs(total.real), 1e-300):
        raise ValueError(
            f"{what}: imaginary residue {total.imag:.3e} exceeds tolerance "
            f"(scale {scale:.3e})"
        )
    return total.real


def lambda4(p: M4Params, f: SpectralField) -> float:
    """Quadrilinear correction functional of the field against M4."""
    total, scale = _quadrilinear_sum(f, p, p.potential, "m4")
    return _real_part_checked(total, scale, "lambda4")


def E2(f: SpectralField, p: M4Params) -> float:
    """Corrected modified energy E^1 + lambda4."""
    return E1(f, p.theta) + lambda4(p, f)


def dE1_dt_direct(f: SpectralField, v: Potential, p: M4Params) -> float:
    """Instantaneous derivative of E^1 along the truncated flow, evaluated
    as the explicit quadrilinear sum with the shared constant c."""
    total, scale = _quadrilinear_sum(f, p, v, "full")
    return _real_part_checked(1j * p.c * total, abs(p.c) * scale, "dE1_dt_direct")


def _gamma6_sum(f: SpectralField, p: M4Params):
    """Sextilinear sum of M6 against the conjugate-alternating coefficient
    product, over k1 - k2 + k3 - k4 + k5 - k6 = 0.

    Each of the four M6 terms is kept only when its contracted argument
    (n123, n234, n345, n456 respectively) lies in the retained band: the
    truncated flow holds all other modes at zero, so those terms never arise
    in the derivative of the correction along this flow.
    """
    modes, coeffs, h, lut = _mode_setup(f, GAMMA6_MODE_BUDGET, "sextilinear sum")
    m = len(modes)
    mx, my = modes[:, 0], modes[:, 1]

    parts_re, parts_im, parts_scale = [], [], []
    k3x = mx[:, None, None]
    k3y = my[:, None, None]
    k4x = mx[None, :, None]
    k4y = my[None, :, None]
    k5x = mx[None, None, :]
    k5y = my[None, None, :]
    for i1 in range(m):
        for i2 in range(m):
            k6x = mx[i1] - mx[i2] + k3x - k4x + k5x
            k6y = my[i1] - my[i2] + k3y - k4y + k5y
            valid = (np.abs(k6x) <= h) & (np.abs(k6y) <= h)
            b3, b4, b5 = np.nonzero(valid)
            if b3.size == 0:
                continue
            v6x = k6x[b3, b4, b5]
            v6y = k6y[b3, b4, b5]
            j6 = lut[v6x + h, v6y + h]

            # zero-sum coordinates (n1..n6) = (k1, -k2, k3, -k4, k5, -k6)
            n1x = np.full(b3.shape, mx[i1])
            n1y = np.full(b3.shape, my[i1])
            n2x = np.full(b3.shape, -mx[i2])
            n2y = np.full(b3.shape, -my[i2])
            n3x, n3y = mx[b3], my[b3]
            n4x, n4y = -mx[b4], -my[b4]
            n5x, n5y = mx[b5], my[b5]
            n6x, n6y = -v6x, -v6y

            vh = p.potential.vhat_at

            def in_band(cx, cy):
                return (np.abs(cx) <= h) & (np.abs(cy) <= h)

            c123x, c123y = n1x + n2x + n3x, n1y + n2y + n3y
            c234x, c234y = n2x + n3x + n4x, n2y + n3y + n4y
            c345x, c345y = n3x + n4x + n5x, n3y + n4y + n5y
            c456x, c456y = n4x + n5x + n6x, n4y + n5y + n6y
            w = (
                in_band(c123x, c123y)
                * m4_values(c123x, c123y, n4x, n4y, n5x, n5y, n6x, n6y, p)
                * vh(n1x + n2x, n1y + n2y)
                - in_band(c234x, c234y)
                * m4_values(n1x, n1y, c234x, c234y, n5x, n5y, n6x, n6y, p)
                * vh(n2x + n3x, n2y + n3y)
                + in_band(c345x, c345y)
                * m4_values(n1x, n1y, n2x, n2y, c345x, c345y, n6x, n6y, p)
                * vh(n3x + n4x, n3y + n4y)
                - in_band(c456x, c456y)
                * m4_values(n1x, n1y, n2x, n2y, n3x, n3y, c456x, c456y, p)
                * vh(n4x + n5x, n4y + n5y)
            )
            term = (
                w
                * coeffs[i1]
                * np.conj(coeffs[i2])
                * coeffs[b3]
                * np.conj(coeffs[b4])
                * coeffs[b5]
                * np.conj(coeffs[j6])
            )
            parts_re.append(float(np.sum(term.real)))
            parts_im.append(float(np.sum(term.imag)))
            parts_scale.append(float(np.sum(np.abs(term))))
    total = complex(math.fsum(parts_re), math.fsum(parts_im))
    return total, math.fsum(parts_scale)


def dE2_dt_terms(f: SpectralField, p: M4Params) -> tuple[float, float]:
    """The two pieces of the derivative of E^2 along the truncated flow.

    I:  quadrilinear sum over resonant quadruples (the part the correction
        leaves untouched), with the shared constant c.
    II: sextilinear sum of M6 against six coefficients.
    Their sum matches a finite-difference derivative of E^2; enforced on
    tiny grids only because of the O(M^5) enumeration.
    """
    total_i, scale_i = _quadrilinear_sum(f, p, p.potential, "resonant")
    term_i = _real_part_checked(1j * p.c * total_i, abs(p.c) * scale_i, "dE2_dt I")
    total_ii, scale_ii = _gamma6_sum(f, p)
    term_ii = _real_part_checked(-1j * total_ii, scale_ii, "dE2_dt II")
    return term_i, term_ii


# ---------------------------------------------------------------------------
# exhaustive audits


def _gamma4_enumerate(grid: TorusGrid, block_elems: int = _BLOCK_ELEMS):
    """Yield coordinate arrays of every zero-sum quadruple of active modes."""
    modes = grid.active_modes()
    m = len(modes)
    h = grid.half
    mx, my = modes[:, 0], modes[:, 1]
    block = max(1, block_elems // (m * m))
    for start in range(0, m, block):
        i1 = np.arange(start, min(start + block, m))
        n1x = mx[i1][:, None, None]
        n1y = my[i1][:, None, None]
        n2x, n2y = mx[None, :, None], my[None, :, None]
        n3x, n3y = mx[None, None, :], my[None, None, :]
        n4x = -(n1x + n2x + n3x)
        n4y = -(n1y + n2y + n3y)
        valid = (np.abs(n4x) <= h) & (np.abs(n4y) <= h)
        b1, b2, b3 = np.nonzero(valid)
        if b1.size == 0:
            continue
        yield (
            mx[i1[b1]], my[i1[b1]],
            mx[b2], my[b2],
            mx[b3], my[b3],
            n4x[b1, b2, b3], n4y[b1, b2, b3],
        )


@dataclass(frozen=True)
class Gamma4AuditReport:
    grid_size: int
    checked: int
    violations: int

    @property
    def passed(self) -> bool:
        return self.violations == 0


def gamma4_identity_audit(k: int) -> Gamma4AuditReport:
    """Check |n1|^2 - |n2|^2 + |n3|^2 - |n4|^2 == 2 n12 . n14 on every
    zero-sum quadruple of the grid, in exact integer arithmetic."""
    if k > AUDIT_MAX_GRID:
        raise BudgetExceededError(f"identity audit restricted to grids of size <= {AUDIT_MAX_GRID}")
    grid = make_grid(k)
    checked = 0
    violations = 0
    for n1x, n1y, n2x, n2y, n3x, n3y, n4x, n4y in _gamma4_enumerate(grid):
        lhs = (
            n1x * n1x + n1y * n1y
            - (n2x * n2x + n2y * n2y)
            + n3x * n3x + n3y * n3y
            - (n4x * n4x + n4y * n4y)
        )
        rhs = 2 * ((n1x + n2x) * (n1x + n4x) + (n1y + n2y) * (n1y + n4y))
        checked += int(lhs.size)
        violations += int(np.count_nonzero(lhs != rhs))
    report = Gamma4AuditReport(k, checked, violations)
    if violations:
        raise AssertionError(
            f"phase factorization identity violated {violations} times at K={k}"
        )
    return report


def _dyadic_ceil(mag: np.ndarray) -> np.ndarray:
    """Round magnitudes >= 1 up to the next power of two; zeros stay zero."""
    out = np.zeros_like(mag)
    pos = mag > 0
    out[pos] = np.exp2(np.ceil(np.log2(mag[pos])))
    return out


@dataclass(frozen=True)
class M4BoundAuditReport:
    grid_size: int
    per_n: dict
    checked: int

    @property
    def c_sup(self) -> float:
        return max(self.per_n.values())

    @property
    def stability_ratio(self) -> float:
        vals = [v for v in self.per_n.values() if v > 0]
        return max(vals) / min(vals) if vals else float("inf")


def m4_bound_audit(k: int, p: M4Params, n_values=(2.0, 4.0, 8.0)) -> M4BoundAuditReport:
    """Measure the constant in the pointwise multiplier envelope.

    For every non-resonant quadruple the ratio
    |M4| * beta0 * (N1*)^2 / (theta(N1*) theta(N2*)) is formed, with N1* >=
    N2* the two largest dyadically rounded magnitudes; its supremum should be
    finite and essentially independent of the threshold N.
    """
    if k > AUDIT_MAX_GRID:
        raise BudgetExceededError(f"bound audit restricted to grids of size <= {AUDIT_MAX_GRID}")
    grid = make_grid(k)
    per_n = {}
    checked = 0
    for n in n_values:
        theta_n = ThetaParams(float(n), p.theta.s)
        beta0, _ = beta0_for(p.resonance.rule, float(n), p.resonance.c_beta, p.resonance.alpha)
        params = M4Params(theta_n, ResonanceParams(beta0, p.resonance.rule,
                                                   p.resonance.c_beta, p.resonance.alpha),
                          p.potential, p.c)
        worst = 0.0
        count = 0
        for n1x, n1y, n2x, n2y, n3x, n3y, n4x, n4y in _gamma4_enumerate(grid):
            vals = m4_values(n1x, n1y, n2x, n2y, n3x, n3y, n4x, n4y, params)
            mags = np.stack(
                [
                    np.sqrt((ax * ax + ay * ay).astype(np.float64))
                    for ax, ay in ((n1x, n1y), (n2x, n2y), (n3x, n3y), (n4x, n4y))
                ]
            )
            dyad = _dyadic_ceil(mags)
            dyad.sort(axis=0)
            big1, big2 = dyad[-1], dyad[-2]
            th1 = np.sqrt(theta_sq_of_r2(big1 * big1, theta_n))
            th2_ = np.sqrt(theta_sq_of_r2(big2 * big2, theta_n))
            ratio = np.abs(vals) * beta0 * big1 * big1 / (th1 * th2_)
            worst = max(worst, float(ratio.max(initial=0.0)))
            count += int(vals.size)
        per_n[float(n)] = worst
        checked = count
    return M4BoundAuditReport(k, per_n, checked)
