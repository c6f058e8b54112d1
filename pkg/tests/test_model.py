import math

import numpy as np
import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st
from scipy.optimize import brentq

from dcfsat.model import (
    PERSISTENT,
    BackoffParams,
    DivergentDelayError,
    DomainError,
    FixedPointSolution,
    Scenario,
    chain_distribution,
    discard_probability,
    evaluate,
    failure_prob,
    fixed_point_gap,
    mean_delay,
    mean_delay_persistent,
    renewal_cycle,
    solve_fixed_point,
    stage_delay,
    stage_delay_closed_form,
    tau_of_p,
    tau_of_p_bianchi,
    tau_of_p_closed_form,
    throughput,
    window_size,
)
from dcfsat.timing import AccessMode, channel_times

# 50-digit bisection on the closed form (mpmath), n=30, p_f=0.1, W=8, m=5, f=10
GOLDEN_TAU = 0.033507229277916818761
GOLDEN_P = 0.6650328668213501807
GOLDEN_P1 = 0.62781429646816686744
# same oracle, classical form, n=10, p_f=0, W=8, m=5, persistent
GOLDEN_BIANCHI_TAU = 0.071994215838104913456


def scenario(n, p_f=0.0, w0=8, m=5, f=PERSISTENT, mode="basic"):
    return Scenario(n=n, p_f=p_f, backoff=BackoffParams(w0, m, f), mode=mode)


backoffs = st.builds(
    BackoffParams,
    w0=st.sampled_from([1, 2, 4, 8, 16, 32, 128]),
    m=st.integers(0, 7),
    f=st.one_of(st.integers(0, 20), st.just(PERSISTENT)),
)
scenarios = st.builds(
    Scenario,
    n=st.integers(1, 60),
    p_f=st.one_of(st.floats(0, 1), st.sampled_from([0.0, 1.0])),
    backoff=backoffs,
    mode=st.sampled_from(list(AccessMode)),
)


class TestWindowSize:
    def test_examples(self):
        b = BackoffParams(8, 5, 10)
        assert window_size(0, b) == 8
        assert window_size(5, b) == 256
        assert window_size(9, b) == 256
        assert window_size(15, b) == 256

    def test_out_of_range(self):
        with pytest.raises(DomainError):
            window_size(16, BackoffParams(8, 5, 10))
        with pytest.raises(DomainError):
            window_size(-1, BackoffParams(8, 5, 10))
        assert window_size(1000, BackoffParams(8, 5, PERSISTENT)) == 256

    @pytest.mark.parametrize("kwargs", [dict(w0=0), dict(m=-1), dict(f=-1), dict(f=1.5)])
    def test_invalid_params(self, kwargs):
        with pytest.raises(DomainError):
            BackoffParams(**kwargs)


def test_failure_prob():
    assert failure_prob(0.77, 1, 0.3) == (0.0, 0.3)
    assert failure_prob(0.5, 2, 0.0) == (0.5, 0.5)
    p1, p = failure_prob(0.1, 3, 0.5)
    assert p1 == pytest.approx(0.19)
    assert p == pytest.approx(0.595)


class TestTauOfP:
    def test_no_failures(self):
        assert tau_of_p(0.0, BackoffParams(8, 5, 10)) == pytest.approx(2 / 9)
        assert tau_of_p(0.0, BackoffParams(8, 5, PERSISTENT)) == pytest.approx(2 / 9)

    def test_certain_failure_single_retry_stage(self):
        # b00 = 2 / sum_{i=0}^{5} (8 * 2**i + 1) = 2/510 and tau = 6 * b00;
        # equivalently 6 attempts per 255 mean backoff slots
        assert tau_of_p(1.0, BackoffParams(8, 5, 0)) == pytest.approx(12 / 510, rel=1e-14)

    def test_matches_closed_form(self):
        b = BackoffParams(8, 5, 10)
        assert tau_of_p(0.3, b) == pytest.approx(tau_of_p_closed_form(0.3, b), rel=1e-10)

    def test_finite_at_half(self):
        for f in (0, 3, PERSISTENT):
            b = BackoffParams(8, 5, f)
            left, mid, right = (tau_of_p(0.5 + d, b) for d in (-1e-7, 0.0, 1e-7))
            assert left > mid > right
            assert mid == pytest.approx(left, rel=1e-5)

    def test_persistent_certain_failure_is_domain_error(self):
        with pytest.raises(DomainError):
            tau_of_p(1.0, BackoffParams(8, 5, PERSISTENT))
        with pytest.raises(DomainError):
            tau_of_p(1.2, BackoffParams(8, 5, 3))

    @given(st.floats(0, 0.49), st.sampled_from([1, 4, 8, 32, 1024]), st.integers(0, 8))
    def test_persistent_equals_classical(self, p, w0, m):
        b = BackoffParams(w0, m, PERSISTENT)
        assert tau_of_p(p, b) == pytest.approx(tau_of_p_bianchi(p, w0, m), rel=1e-12)

    @given(st.floats(0.01, 0.95), backoffs)
    def test_series_equals_closed_form(self, p, b):
        assume(abs(p - 0.5) > 1e-3)
        assert tau_of_p(p, b) == pytest.approx(tau_of_p_closed_form(p, b), rel=1e-10)

    @given(backoffs, st.floats(0, 1), st.floats(0, 1))
    def test_nonincreasing(self, b, p, q):
        lo, hi = sorted((p, q))
        assume(not (b.persistent and hi == 1.0))
        assert tau_of_p(lo, b) >= tau_of_p(hi, b) * (1 - 1e-12)


class TestSolver:
    def test_single_station_error_free(self):
        sol = solve_fixed_point(scenario(1, 0.0, f=10))
        assert sol.tau == pytest.approx(2 / 9, abs=1e-15)
        assert sol.p == 0.0

    def test_single_station_errors_fix_p(self):
        sc = scenario(1, 0.5, f=0)
        sol = solve_fixed_point(sc)
        assert sol.p == 0.5
        assert sol.tau == pytest.approx(tau_of_p(0.5, sc.backoff), abs=1e-15)

    def test_golden_point(self):
        sol = solve_fixed_point(scenario(30, 0.1, f=10))
        assert sol.tau == pytest.approx(GOLDEN_TAU, rel=1e-13)
        assert sol.p == pytest.approx(GOLDEN_P, rel=1e-13)
        assert sol.p1 == pytest.approx(GOLDEN_P1, rel=1e-13)
        assert sol.residual <= 1e-12

    def test_reference_model_limit(self):
        sol = solve_fixed_point(scenario(10, 0.0))
        assert sol.tau == pytest.approx(GOLDEN_BIANCHI_TAU, rel=1e-13)
        assert sol.p == sol.p1

    @settings(max_examples=150)
    @given(scenarios)
    def test_bracket_residual_invariants(self, sc):
        assert fixed_point_gap(0.0, sc) <= 0 <= fixed_point_gap(1.0, sc)
        sol = solve_fixed_point(sc)
        assert sol.residual <= 1e-12
        assert 0 <= sol.tau <= 1
        assert 0 <= sol.p1 <= sol.p <= 1
        assert sol.p == pytest.approx(sol.p1 + sc.p_f - sol.p1 * sc.p_f, abs=1e-15)

    @settings(max_examples=80)
    @given(scenarios)
    def test_gap_strictly_increasing(self, sc):
        grid = np.linspace(0, 1, 41)
        g = [fixed_point_gap(t, sc) for t in grid]
        assert all(b > a for a, b in zip(g, g[1:]))

    @settings(max_examples=60)
    @given(scenarios.filter(lambda s: not s.backoff.persistent))
    def test_agrees_with_brentq_on_closed_form(self, sc):
        # independent route: closed form, scipy root finder
        def gap(t):
            _, p = failure_prob(t, sc.n, sc.p_f)
            # both poles of the closed form are removable
            if abs(p - 0.5) < 1e-9:
                p = 0.5 + 1e-9
            p = min(p, 1 - 1e-9)
            return t - tau_of_p_closed_form(p, sc.backoff)

        assume(gap(1e-300) < 0 < gap(1.0))
        root = brentq(gap, 0.0, 1.0, xtol=1e-15, rtol=1e-14)
        assert solve_fixed_point(sc).tau == pytest.approx(root, rel=1e-7, abs=1e-12)


class TestChain:
    def test_no_failure_stays_in_stage_zero(self):
        d = chain_distribution(0.0, BackoffParams(8, 5, 3))
        k = np.arange(8)
        np.testing.assert_allclose(d.b[0], (8 - k) / 8 * 2 / 9)
        assert all(not row.any() for row in d.b[1:])

    @given(st.floats(0, 1), backoffs.filter(lambda b: not b.persistent))
    def test_invariants(self, p, b):
        d = chain_distribution(p, b)
        assert d.total() == pytest.approx(1.0, abs=1e-10)
        for i, row in enumerate(d.b):
            assert (row >= 0).all()
            w = window_size(i, b)
            assert len(row) == w
            assert row[0] == pytest.approx(p**i * d.b00, rel=1e-12, abs=1e-300)
            np.testing.assert_allclose(row, (w - np.arange(w)) / w * row[0], rtol=1e-12)
        assert d.transmit_states().sum() == pytest.approx(tau_of_p(p, b), rel=1e-12)

    def test_transmit_mass_matches_tau(self):
        b = BackoffParams(8, 5, 0)
        assert chain_distribution(0.5, b).transmit_states().sum() == pytest.approx(tau_of_p(0.5, b), rel=1e-14)

    def test_persistent_rejected(self):
        with pytest.raises(DomainError):
            chain_distribution(0.2, BackoffParams(8, 5, PERSISTENT))


class TestThroughput:
    def test_all_frames_corrupted(self):
        sc = scenario(10, 1.0, f=3)
        assert throughput(solve_fixed_point(sc), sc) == 0.0

    def test_single_station_by_hand(self):
        sc = scenario(1, 0.0, f=10)
        t = channel_times("basic")
        tau = 2 / 9
        expected = tau * t.payload_airtime / ((1 - tau) * 20 + tau * t.t_s)
        assert throughput(solve_fixed_point(sc), sc) == pytest.approx(expected, rel=1e-14)

    def test_rtscts_beats_basic_at_30_stations(self):
        basic = evaluate(scenario(30, 0.0, mode="basic")).throughput
        rts = evaluate(scenario(30, 0.0, mode="rtscts")).throughput
        assert rts > basic

    @settings(max_examples=100)
    @given(scenarios)
    def test_range(self, sc):
        s = evaluate(sc).throughput
        assert 0 <= s <= 1


class TestDiscard:
    def test_examples(self):
        b = BackoffParams(8, 5, 0)
        assert discard_probability(FixedPointSolution(0.1, 0.0, 0.0, 0.0, 0), b) == 0.0
        sc = scenario(5, 1.0, f=2)
        assert discard_probability(solve_fixed_point(sc), sc.backoff) == 1.0
        sc = scenario(1, 0.5, f=0)
        assert discard_probability(solve_fixed_point(sc), sc.backoff) == 0.015625

    def test_persistent_never_discards(self):
        sc = scenario(30, 0.5)
        assert discard_probability(solve_fixed_point(sc), sc.backoff) == 0.0

    @settings(max_examples=100)
    @given(scenarios)
    def test_mode_insensitive(self, sc):
        other = Scenario(sc.n, sc.p_f, sc.backoff,
                         AccessMode.RTSCTS if sc.mode is AccessMode.BASIC else AccessMode.BASIC)
        assert evaluate(sc).discard_prob == evaluate(other).discard_prob


class TestRenewalCycle:
    def test_idle_run_lengths(self):
        half = renewal_cycle(FixedPointSolution(0.5, 0.5, 0.5, 0.0, 0), scenario(2))
        assert half.n_idle == pytest.approx(1.0)
        assert half.p1s == pytest.approx(1.0)
        full = renewal_cycle(FixedPointSolution(1.0, 1.0, 1.0, 0.0, 0), scenario(2))
        assert full.n_idle == 0.0

    def test_single_station(self):
        sc = scenario(1, 0.0, f=10)
        cyc = renewal_cycle(solve_fixed_point(sc), sc)
        assert cyc.p1_t_rc == 20.0
        assert cyc.p1s == 0.0
        assert cyc.t_coe == 0.0
        assert math.isinf(cyc.t_rc)

    @given(scenarios)
    def test_product_form(self, sc):
        sol = solve_fixed_point(sc)
        cyc = renewal_cycle(sol, sc)
        if sol.p1 > 0:
            assert cyc.n_idle == pytest.approx(1 / sol.p1 - 1)
            assert cyc.p1_t_rc == pytest.approx(sol.p1 * cyc.t_rc, rel=1e-12)
        assert math.isfinite(cyc.p1_t_rc)

    def test_error_free_occupancy_is_collision_time(self):
        sc = scenario(30, 0.0)
        cyc = renewal_cycle(solve_fixed_point(sc), sc)
        assert cyc.t_coe == pytest.approx(sc.times.t_c, rel=1e-14)


class TestDelay:
    @settings(max_examples=100)
    @given(scenarios.filter(lambda s: not s.backoff.persistent))
    def test_stage_sum_matches_closed_form(self, sc):
        cyc = renewal_cycle(solve_fixed_point(sc), sc)
        for i in range(int(sc.backoff.max_stage) + 1):
            assert stage_delay(i, sc.backoff, cyc) == pytest.approx(
                stage_delay_closed_form(i, sc.backoff, cyc), rel=1e-9
            )

    def test_all_frames_corrupted(self):
        sc = scenario(30, 1.0, f=4)
        assert mean_delay(solve_fixed_point(sc), sc) == 0.0

    def test_single_station(self):
        for f in (10, PERSISTENT):
            sc = scenario(1, 0.0, f=f)
            sol = solve_fixed_point(sc)
            delay = mean_delay_persistent(sol, sc) if sc.backoff.persistent else mean_delay(sol, sc)
            assert delay == pytest.approx(sc.times.t_s + 20 * 7 / 2, rel=1e-14)
        assert sc.times.t_s + 70 == pytest.approx(2230.4, abs=0.05)

    @pytest.mark.parametrize("mode", ["basic", "rtscts"])
    def test_more_retries_more_delay(self, mode):
        d1 = evaluate(scenario(30, 0.1, f=1, mode=mode)).delay_us
        d10 = evaluate(scenario(30, 0.1, f=10, mode=mode)).delay_us
        assert d10 > d1

    def test_rtscts_delay_lower(self):
        assert evaluate(scenario(30, 0.0, mode="rtscts")).delay_us < evaluate(scenario(30, 0.0)).delay_us

    @pytest.mark.parametrize("mode", ["basic", "rtscts"])
    def test_large_f_converges_to_persistent(self, mode):
        finite = evaluate(scenario(30, 0.0, f=500, mode=mode)).delay_us
        persistent = evaluate(scenario(30, 0.0, mode=mode)).delay_us
        assert finite == pytest.approx(persistent, rel=1e-3)

    @given(scenarios.filter(lambda s: s.backoff.persistent and s.p_f < 0.9))
    def test_persistent_matches_limit_formula(self, sc):
        sol = solve_fixed_point(sc)
        assume(abs(sol.p - 0.5) > 1e-3 and sol.p < 0.999)
        cyc = renewal_cycle(sol, sc)
        p, w0, m = sol.p, sc.backoff.w0, sc.backoff.m
        limit = (
            sc.times.t_s
            + (cyc.t_coe * p - cyc.p1_t_rc / 2) / (1 - p)
            + cyc.p1_t_rc * w0 / 2 * (1 - p - p * (2 * p) ** m) / ((1 - p) * (1 - 2 * p))
        )
        assert mean_delay_persistent(sol, sc) == pytest.approx(limit, rel=1e-9)

    def test_persistent_divergence(self):
        sc = scenario(10, 1.0)
        with pytest.raises(DivergentDelayError):
            mean_delay_persistent(solve_fixed_point(sc), sc)
        assert math.isinf(evaluate(sc).delay_us)

    def test_conditional_normalisation(self):
        sc = scenario(1, 0.5, f=0)
        sol = solve_fixed_point(sc)
        literal = mean_delay(sol, sc)
        conditional = mean_delay(sol, sc, conditional=True)
        assert conditional == pytest.approx(literal / (1 - 0.5**6), rel=1e-14)

    def test_conditional_finite_at_certain_failure(self):
        sc = scenario(5, 1.0, f=2)
        assert math.isfinite(mean_delay(solve_fixed_point(sc), sc, conditional=True))


@pytest.mark.parametrize("mode", ["basic", "rtscts"])
@pytest.mark.parametrize("p_f", [0.1, 0.5])
def test_retry_monotonicity(mode, p_f):
    rows = [evaluate(scenario(30, p_f, f=f, mode=mode)) for f in range(0, 21)]
    for a, b in zip(rows, rows[1:]):
        assert b.delay_us >= a.delay_us
        assert b.discard_prob <= a.discard_prob


@pytest.mark.parametrize("mode", ["basic", "rtscts"])
@pytest.mark.parametrize("f", [1, 10])
def test_error_rate_monotonicity(mode, f):
    rows = [evaluate(scenario(30, pf, f=f, mode=mode)) for pf in np.linspace(0, 1, 41)]
    for a, b in zip(rows, rows[1:]):
        assert b.throughput <= a.throughput
        assert b.discard_prob >= a.discard_prob
