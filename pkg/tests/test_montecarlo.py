"""Weighted-path sampling: estimator consistency, rare-event scalings,
and the analytic tail bound."""

from math import exp, factorial

import numpy as np
import pytest

from traitlab import (
    JumpPath,
    fk_estimate,
    jump_tail,
    ldp_point_check,
    sample_paths,
    simulate_finite,
)
from traitlab.errors import ScheduleGap, TooManyJumps


class TestSamplePaths:
    def test_structure(self, two_trait_chemostat):
        samples = sample_paths(two_trait_chemostat.costs, 0.3, 0, 1.0, 200, seed=5)
        assert len(samples) == 200
        for k, sm in enumerate(samples):
            assert sm.stream == k
            assert sm.path.start == 0
            assert sm.path.horizon == 1.0
            times = [tj for tj, _ in sm.path.jumps]
            assert all(0.0 < tj < 1.0 for tj in times)
            assert times == sorted(times)

    def test_substream_prefix_is_stable(self, two_trait_chemostat):
        """Each path draws from its own counter-based substream, so asking
        for more paths never perturbs the ones already drawn."""
        short = sample_paths(two_trait_chemostat.costs, 0.3, 0, 1.0, 4, seed=11)
        long = sample_paths(two_trait_chemostat.costs, 0.3, 0, 1.0, 9, seed=11)
        for a, b in zip(short, long):
            assert a.path.jumps == b.path.jumps

    def test_seed_changes_paths(self, two_trait_chemostat):
        a = sample_paths(two_trait_chemostat.costs, 0.5, 0, 4.0, 50, seed=0)
        b = sample_paths(two_trait_chemostat.costs, 0.5, 0, 4.0, 50, seed=1)
        assert any(x.path.jumps != y.path.jumps for x, y in zip(a, b))

    def test_jump_frequency_matches_rate(self, two_trait_chemostat):
        """Two symmetric states make the jump count Poisson(c t) with
        c = exp(-1/eps); check the mean within four standard errors."""
        eps, t, n = 0.5, 2.0, 4000
        samples = sample_paths(two_trait_chemostat.costs, eps, 0, t, n, seed=2)
        counts = np.array([len(s.path.jumps) for s in samples])
        lam = exp(-1.0 / eps) * t
        assert abs(counts.mean() - lam) <= 4.0 * np.sqrt(lam / n)


class TestWeightedEstimate:
    def test_matches_direct_integration(self, two_trait_chemostat):
        """At eps = 0.3 the stiff system is still integrable directly, so
        the path estimate must land within three standard errors of it."""
        eps, t = 0.3, 1.0
        traj = simulate_finite(two_trait_chemostat, eps, t)
        schedule = (traj.times, traj.v)
        for trait in (0, 1):
            mean, se = fk_estimate(
                two_trait_chemostat, schedule, eps, t, trait, n=20_000, seed=8
            )
            assert se > 0.0
            assert abs(mean - float(traj.u[-1, trait])) <= 3.0 * se

    def test_zero_rates_give_exactly_one(self, flat_rate_table):
        """With identically zero growth and zero initial exponent every
        path weight is exp(0): the estimate is 1 with no variance."""
        schedule = (np.array([0.0, 1.0]), np.ones((2, 1)))
        mean, se = fk_estimate(flat_rate_table, schedule, 0.2, 1.0, 0, n=500, seed=3)
        assert mean == 1.0
        assert se == 0.0

    def test_reproducible(self, two_trait_chemostat):
        eps, t = 0.3, 0.5
        traj = simulate_finite(two_trait_chemostat, eps, t)
        sched = (traj.times, traj.v)
        first = fk_estimate(two_trait_chemostat, sched, eps, t, 1, n=2000, seed=4)
        second = fk_estimate(two_trait_chemostat, sched, eps, t, 1, n=2000, seed=4)
        assert first == second

    def test_schedule_must_cover_horizon(self, two_trait_chemostat):
        traj = simulate_finite(two_trait_chemostat, 0.3, 0.5)
        with pytest.raises(ScheduleGap):
            fk_estimate(
                two_trait_chemostat, (traj.times, traj.v), 0.3, 1.0, 0, n=10, seed=0
            )


class TestSmallNoiseScaling:
    def test_log_probability_tracks_path_cost(self, two_trait_chemostat):
        """P(stay near a one-jump path) scales like exp(-cost/eps): the
        difference quotient of eps*log P across eps recovers the cost."""
        phi = JumpPath(start=0, jumps=((0.4, 1),), horizon=1.0)
        rows = ldp_point_check(two_trait_chemostat.costs, [0.1, 0.05], phi, delta=0.05)
        (e1, p1), (e2, p2) = rows
        slope = (p2 / e2 - p1 / e1) / (1.0 / e2 - 1.0 / e1)
        assert slope == pytest.approx(-1.0, abs=1e-3)

    def test_closed_form_single_jump(self, two_trait_chemostat):
        """One jump in a delta-window, no other jumps: the probability is
        c * exp(-c*t) * 2*delta with c = exp(-1/eps), integrable by hand."""
        phi = JumpPath(start=0, jumps=((0.4, 1),), horizon=1.0)
        delta = 0.05
        for eps, value in ldp_point_check(
            two_trait_chemostat.costs, [0.1, 0.05], phi, delta
        ):
            c = exp(-1.0 / eps)
            hand = -1.0 - eps * c + eps * np.log(2 * delta)
            assert value == pytest.approx(hand, abs=1e-10)

    def test_rejects_long_paths(self, three_trait_succession):
        phi = JumpPath(start=0, jumps=((0.2, 1), (0.4, 2), (0.6, 1)), horizon=1.0)
        with pytest.raises(TooManyJumps):
            ldp_point_check(three_trait_succession.costs, [0.1], phi, delta=0.05)


class TestJumpTail:
    def test_bound_formula(self, two_trait_chemostat, three_trait_succession):
        """The analytic tail bound is (t^N / N!) * (q^N 1)_i0 with
        q_ij = exp(-cost_ij / eps); recompute it independently."""
        cases = (
            (two_trait_chemostat.costs, 0.5, 1.0, 0),
            (three_trait_succession.costs, 0.4, 2.0, 1),
        )
        for costs, eps, t, i0 in cases:
            q = np.exp(-costs.table / eps)
            np.fill_diagonal(q, 0.0)
            for N in (1, 2, 3):
                hand = (
                    t**N
                    / factorial(N)
                    * float((np.linalg.matrix_power(q, N) @ np.ones(costs.n))[i0])
                )
                rep = jump_tail(costs, eps, t, i0, N, n=10, seed=0)
                assert rep.analytic_bound == pytest.approx(hand, rel=1e-12)

    def test_bound_dominates_exact_tail(self, two_trait_chemostat):
        """For two symmetric states the jump count is Poisson(c t), so the
        exact tail is known; the bound must sit above it."""
        eps, t = 0.5, 1.0
        c = exp(-1.0 / eps) * t
        for N in (1, 2, 3):
            exact = 1.0 - sum(exp(-c) * c**k / factorial(k) for k in range(N))
            rep = jump_tail(two_trait_chemostat.costs, eps, t, 0, N, n=10, seed=0)
            assert rep.analytic_bound >= exact

    def test_sampled_frequency_within_bound(self, two_trait_chemostat):
        rep = jump_tail(two_trait_chemostat.costs, 0.5, 1.0, 0, 1, n=50_000, seed=1)
        assert rep.n_paths == 50_000
        assert rep.sampled_frequency <= rep.analytic_bound
        # and the frequency is near the exact Poisson tail, not merely under
        exact = 1.0 - exp(-exp(-2.0))
        assert rep.sampled_frequency == pytest.approx(exact, abs=5e-3)
