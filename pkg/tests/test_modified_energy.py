"""Resonance classification, multipliers, correction functionals, audits."""

import math

import numpy as np
import pytest

from hartreelab.dynamics import strang_step
from hartreelab.iop import E1, ThetaParams
from hartreelab.modified_energy import (
    BudgetExceededError,
    Classification,
    E2,
    M4Params,
    Quadruplet,
    ResonanceParams,
    beta0_for,
    classify_quadruplet,
    dE1_dt_direct,
    dE2_dt_terms,
    gamma4_identity_audit,
    lambda4,
    m4,
    m4_bound_audit,
    m6,
    resonance_for,
    _quadrilinear_sum,
)
from hartreelab.potential import make_potential
from hartreelab.spectral import field_from_modes, make_grid

from helpers import (
    gamma4_coefficient_quadruples,
    lambda4_bruteforce,
    m4_scalar,
    nonresonant_scalar,
)
from test_spectral import random_field

DELTA = make_potential("delta")


def params(n=1.0, s=1.5, beta0=0.5, potential=DELTA, c=0.5):
    return M4Params(ThetaParams(n, s), ResonanceParams(beta0), potential, c)


class TestClassification:
    def test_orthogonal_pair_sums_are_resonant(self):
        q = Quadruplet((1, 0), (0, 1), (-1, 0), (0, -1))
        assert q.n12 == (1, 1) and q.n14 == (1, -1)
        for beta0 in (1e-6, 0.3, 1.0):
            assert classify_quadruplet(q, ResonanceParams(beta0)) is Classification.RESONANT

    def test_parallel_pair_sums_are_nonresonant(self):
        q = Quadruplet((2, 0), (-1, 0), (0, 0), (-1, 0))
        for beta0 in (0.1, 0.9):
            assert classify_quadruplet(q, ResonanceParams(beta0)) is Classification.NONRESONANT

    def test_vanishing_pair_sum_is_resonant(self):
        q = Quadruplet((1, 0), (-1, 0), (2, 0), (-2, 0))
        assert classify_quadruplet(q, ResonanceParams(0.01)) is Classification.RESONANT

    def test_degenerate_beta0_empties_nonresonant_set(self):
        r = ResonanceParams(1.0)
        assert r.degenerate
        q = Quadruplet((2, 0), (-1, 0), (0, 0), (-1, 0))
        assert classify_quadruplet(q, r) is Classification.RESONANT

    def test_rejects_nonzero_sum(self):
        with pytest.raises(ValueError):
            Quadruplet((1, 0), (0, 0), (0, 0), (0, 0))


class TestBeta0:
    def test_torus_rule(self):
        val, clamped = beta0_for("torus", 16.0)
        assert val == pytest.approx(1.0 / 16.0) and not clamped

    def test_plane_rule(self):
        val, clamped = beta0_for("plane", 16.0, 1.0, 0.5)
        assert val == pytest.approx(0.25) and not clamped

    def test_plane_alpha_out_of_range(self):
        with pytest.raises(ValueError):
            beta0_for("plane", 16.0, 1.0, 0.9)

    def test_clamping_reported(self):
        val, clamped = beta0_for("torus", 1.5, 3.0)
        assert val == 1.0 and clamped
        assert resonance_for("torus", 1.5, 3.0).degenerate

    def test_rejects_small_n(self):
        with pytest.raises(ValueError):
            beta0_for("torus", 1.0)


class TestM4:
    def test_zero_on_resonant(self):
        p = params()
        q = Quadruplet((1, 0), (0, 1), (-1, 0), (0, -1))
        assert m4(q, p) == 0.0

    def test_hand_value(self):
        # theta(2,0) = 2, others 1 at N = 1, s = 1; vhat = 1; c = 1.
        p = M4Params(ThetaParams(1.0, 1.0 + 1e-12), ResonanceParams(0.5), DELTA, 1.0)
        q = Quadruplet((2, 0), (-1, 0), (0, 0), (-1, 0))
        assert m4(q, p) == pytest.approx(1.5, rel=1e-9)

    def test_zero_numerator_below_threshold(self):
        p = params(n=4.0)
        q = Quadruplet((2, 0), (-1, 0), (0, 0), (-1, 0))
        assert classify_quadruplet(q, p.resonance) is Classification.NONRESONANT
        assert m4(q, p) == 0.0

    def test_matches_scalar_oracle_on_grid(self):
        p = params(n=1.5, s=1.7, beta0=0.3, c=0.5)
        grid = make_grid(8)
        rng = np.random.default_rng(2)
        modes = grid.active_modes()
        for _ in range(500):
            i, j, k = rng.integers(0, len(modes), size=3)
            n1, n2, n3 = map(tuple, (modes[i], modes[j], modes[k]))
            n4 = (-(n1[0] + n2[0] + n3[0]), -(n1[1] + n2[1] + n3[1]))
            got = m4(Quadruplet(n1, n2, n3, n4), p)
            want = m4_scalar(n1, n2, n3, n4, 1.5, 1.7, 0.3, lambda _: 1.0, 0.5)
            assert got == pytest.approx(want, rel=1e-13, abs=1e-15)

    def test_numerator_vanishes_when_pair_sum_vanishes(self):
        # exhaustive at K = 8: n12 = 0 or n14 = 0 forces a zero numerator
        p = params(n=1.0, s=1.5)
        grid = make_grid(8)
        from hartreelab.modified_energy import _gamma4_enumerate
        from hartreelab.iop import theta_sq_of_r2

        for n1x, n1y, n2x, n2y, n3x, n3y, n4x, n4y in _gamma4_enumerate(grid):
            tsq = lambda x, y: theta_sq_of_r2(
                x.astype(float) ** 2 + y.astype(float) ** 2, p.theta
            )
            num = (tsq(n1x, n1y) - tsq(n2x, n2y)) + (tsq(n3x, n3y) - tsq(n4x, n4y))
            pair12 = (n1x + n2x == 0) & (n1y + n2y == 0)
            pair14 = (n1x + n4x == 0) & (n1y + n4y == 0)
            assert np.all(num[pair12] == 0.0)
            assert np.all(num[pair14] == 0.0)


class TestM6:
    def test_zero_when_everything_below_threshold(self):
        p = params(n=20.0)
        sext = [(1, 0), (0, 1), (-1, 0), (0, -1), (1, 1), (-1, -1)]
        assert m6(sext, p) == 0.0

    def test_zero_for_zero_potential(self):
        p = params(potential=make_potential("constant", c=0.0))
        sext = [(2, 0), (0, 1), (-1, 0), (0, -1), (1, 1), (-2, -1)]
        assert m6(sext, p) == 0.0

    def test_hand_built_sextuple(self):
        # All four contractions evaluated by the scalar oracle.
        p = M4Params(ThetaParams(1.0, 1.0 + 1e-12), ResonanceParams(0.5), DELTA, 1.0)
        sext = [(2, 0), (-1, 0), (0, 0), (-1, 0), (1, 1), (-1, -1)]

        def add(*vs):
            return (sum(v[0] for v in vs), sum(v[1] for v in vs))

        o = lambda a, b, c_, d: m4_scalar(a, b, c_, d, 1.0, 1.0 + 1e-12, 0.5, lambda _: 1.0, 1.0)
        n1, n2, n3, n4, n5, n6 = sext
        want = (
            o(add(n1, n2, n3), n4, n5, n6)
            - o(n1, add(n2, n3, n4), n5, n6)
            + o(n1, n2, add(n3, n4, n5), n6)
            - o(n1, n2, n3, add(n4, n5, n6))
        )
        assert m6(sext, p) == pytest.approx(want, rel=1e-13)
        assert want != 0.0

    def test_rejects_bad_input(self):
        p = params()
        with pytest.raises(ValueError):
            m6([(0, 0)] * 5, p)
        with pytest.raises(ValueError):
            m6([(1, 0)] + [(0, 0)] * 5, p)


class TestGamma4Audit:
    def test_hand_examples(self):
        for q, lhs in [
            (Quadruplet((1, 0), (0, 1), (-1, 0), (0, -1)), 0),
            (Quadruplet((2, 0), (-1, 0), (0, 0), (-1, 0)), 2),
        ]:
            mags = [n[0] ** 2 + n[1] ** 2 for n in (q.n1, q.n2, q.n3, q.n4)]
            assert mags[0] - mags[1] + mags[2] - mags[3] == lhs
            assert 2 * (q.n12[0] * q.n14[0] + q.n12[1] * q.n14[1]) == lhs

    def test_exhaustive_k8(self):
        report = gamma4_identity_audit(8)
        assert report.passed
        assert report.violations == 0
        assert report.checked == 53361  # (sum over pair counts)^2

    def test_rejects_large_grid(self):
        with pytest.raises(BudgetExceededError):
            gamma4_identity_audit(32)


@pytest.fixture(scope="module")
def quads_k8():
    return gamma4_coefficient_quadruples(8)


class TestLambda4:
    def test_single_mode_vanishes(self, quads_k8):
        p = params(n=1.0, s=1.5)
        f = field_from_modes(make_grid(8), {(2, 1): 1.3 - 0.4j})
        assert lambda4(p, f) == 0.0

    def test_below_threshold_vanishes(self):
        p = params(n=6.0)
        f = random_field(8, 4)
        assert lambda4(p, f) == 0.0

    def test_two_mode_field_matches_oracle(self, quads_k8):
        # both sides are exactly zero: the alternating weight cancels on
        # every quadruple drawn from a two-mode support
        p = params(n=1.0, s=1.5)
        entries = {(2, 1): 0.9 + 0.3j, (-1, 2): -0.7 + 0.1j}
        f = field_from_modes(make_grid(8), entries)
        got = lambda4(p, f)
        want = lambda4_bruteforce(entries, 1.0, 1.5, 0.5, lambda _: 1.0, 0.5, quads_k8)
        assert got == want.real == 0.0

    @pytest.mark.parametrize("seed", [0, 1, 2])
    def test_random_field_matches_oracle(self, quads_k8, seed):
        p = params(n=1.5, s=1.5, beta0=0.5)
        f = random_field(8, seed, amplitude=0.7)
        entries = {tuple(m): f.at_mode(m) for m in f.grid.active_modes()}
        got = lambda4(p, f)
        want = lambda4_bruteforce(entries, 1.5, 1.5, 0.5, lambda _: 1.0, 0.5, quads_k8)
        assert abs(want.imag) <= 1e-10 * (abs(want) + 1e-30)
        assert got == pytest.approx(want.real, rel=1e-12)

    def test_pair_swap_symmetry(self, quads_k8):
        p = params(n=1.5, s=1.5, beta0=0.5)
        f = random_field(8, 17, amplitude=0.7)
        entries = {tuple(m): f.at_mode(m) for m in f.grid.active_modes()}
        one = lambda4_bruteforce(entries, 1.5, 1.5, 0.5, lambda _: 1.0, 0.5, quads_k8)
        two = lambda4_bruteforce(entries, 1.5, 1.5, 0.5, lambda _: 1.0, 0.5, quads_k8, swap_pairs=True)
        assert one.real == pytest.approx(two.real, rel=1e-12)
        assert lambda4(p, f) == pytest.approx(one.real, rel=1e-12)

    def test_budget_refusal(self):
        p = params()
        f = random_field(32, 0)
        with pytest.raises(BudgetExceededError):
            lambda4(p, f)

    def test_partitioning_independence(self):
        import hartreelab.modified_energy as me

        p = params(n=1.5, s=1.5)
        f = random_field(16, 12, amplitude=0.5)
        default = me._BLOCK_ELEMS
        try:
            me._BLOCK_ELEMS = 10_000
            small = lambda4(p, f)
            me._BLOCK_ELEMS = 2_000_000
            big = lambda4(p, f)
        finally:
            me._BLOCK_ELEMS = default
        assert small == pytest.approx(big, rel=1e-12)


class TestE2:
    def test_plane_wave_equals_e1(self):
        p = params(n=1.0)
        f = field_from_modes(make_grid(8), {(3, 0): 2.0})
        assert E2(f, p) == E1(f, p.theta)

    def test_below_threshold_equals_mass(self):
        from hartreelab.spectral import mass

        p = params(n=8.0)
        f = random_field(8, 3)
        assert E2(f, p) == pytest.approx(mass(f), rel=1e-14)

    def test_equivalence_ratio_shrinks_with_threshold(self):
        f = random_field(16, 3, amplitude=0.6)
        ratios = []
        for n in (4.0, 8.0):
            p = params(n=n, beta0=1.0 / n)
            e1 = E1(f, p.theta)
            ratios.append(abs(E2(f, p) - e1) / e1)
        assert ratios[1] <= 1.05 * ratios[0]


class TestDerivativeFormulas:
    def test_plane_wave_derivative_zero(self):
        p = params(n=1.0)
        f = field_from_modes(make_grid(8), {(2, 1): 1.1})
        assert dE1_dt_direct(f, DELTA, p) == 0.0

    def test_below_threshold_derivative_zero(self):
        p = params(n=8.0)
        f = random_field(8, 6)
        assert dE1_dt_direct(f, DELTA, p) == 0.0
        total_i, _ = _quadrilinear_sum(f, p, DELTA, "resonant")
        assert (1j * p.c * total_i).real == 0.0

    def test_fd_cross_check_after_spreading(self):
        # two-mode initial data; evolve first so the flow populates the grid
        grid = make_grid(8)
        f0 = field_from_modes(grid, {(2, 1): 0.8, (-1, 1): 0.6j})
        for _ in range(100):
            f0 = strang_step(f0, DELTA, 1e-3)
        p = params(n=1.5, s=1.5)
        dt = 1e-4
        fp, fm = strang_step(f0, DELTA, dt), strang_step(f0, DELTA, -dt)
        fd = (E1(fp, p.theta) - E1(fm, p.theta)) / (2 * dt)
        direct = dE1_dt_direct(f0, DELTA, p)
        assert fd == pytest.approx(direct, rel=1e-6)

    def test_cancellation_and_what_it_removes(self):
        p = params(n=1.0, s=1.5, beta0=0.5)
        f = random_field(4, 8, amplitude=0.5)
        dt = 1e-4
        fp, fm = strang_step(f, DELTA, dt), strang_step(f, DELTA, -dt)
        fd_e2 = (E2(fp, p) - E2(fm, p)) / (2 * dt)
        fd_e1 = (E1(fp, p.theta) - E1(fm, p.theta)) / (2 * dt)
        term_i, term_ii = dE2_dt_terms(f, p)
        assert fd_e2 == pytest.approx(term_i + term_ii, rel=1e-4)
        # E^1 alone moves by the full non-resonant contribution on top of I
        nonres = dE1_dt_direct(f, DELTA, p) - term_i
        assert abs(nonres) > 1e3 * abs(fd_e1 - term_i - nonres)

    def test_plane_wave_e2_constant(self):
        p = params(n=1.0, s=1.5)
        f = field_from_modes(make_grid(4), {(1, 0): 1.2})
        term_i, term_ii = dE2_dt_terms(f, p)
        assert abs(term_i + term_ii) < 1e-10

    def test_both_terms_vanish_below_threshold(self):
        p = params(n=20.0)
        f = random_field(4, 13, amplitude=0.5)
        assert dE2_dt_terms(f, p) == (0.0, 0.0)

    def test_gamma6_budget_refusal(self):
        p = params()
        f = random_field(8, 0)
        with pytest.raises(BudgetExceededError):
            dE2_dt_terms(f, p)


class TestM4BoundAudit:
    def test_finite_at_k8(self):
        # K = 8 keeps the enumeration tiny but truncates the mode box hard:
        # the supremum is finite, yet too few modes clear N = 4 for the
        # across-N comparison to be meaningful at this size.
        p = params(n=8.0, beta0=1.0 / 8.0)
        report = m4_bound_audit(8, p, n_values=(2.0, 4.0))
        assert all(math.isfinite(v) and v > 0 for v in report.per_n.values())

    def test_stable_across_thresholds_at_k16(self):
        p = params(n=8.0, beta0=1.0 / 8.0)
        report = m4_bound_audit(16, p, n_values=(2.0, 4.0, 8.0))
        assert all(math.isfinite(v) and v > 0 for v in report.per_n.values())
        assert report.stability_ratio <= 4.0

    def test_resonant_contribute_zero(self):
        # supremum is unchanged if we knock out resonant quadruples by hand:
        # they are already zero
        p = params(n=2.0, beta0=0.5)
        q = Quadruplet((1, 0), (0, 1), (-1, 0), (0, -1))
        assert m4(q, p) == 0.0

    def test_rejects_large_grid(self):
        with pytest.raises(BudgetExceededError):
            m4_bound_audit(32, params())


class TestRealityAndDeterminism:
    @pytest.mark.parametrize("seed", [5, 6])
    def test_lambda4_real(self, seed):
        p = params(n=1.5, s=1.5)
        f = random_field(16, seed, amplitude=0.4)
        val = lambda4(p, f)  # raises internally if the residue is large
        assert isinstance(val, float)
