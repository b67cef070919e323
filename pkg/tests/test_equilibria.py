"""Per-subset steady states, admissibility, relaxation, Lyapunov decrease."""

import numpy as np
import pytest

from traitlab import (
    SubsetEquilibria,
    Subsystem,
    check_hypothesis_H,
    equilibrium_F,
    lyapunov_rate,
    relax,
)
from traitlab.errors import NonHyperbolic, WrongFamily

from conftest import random_chemostat


class TestCanonicalChemostat:
    """Closed-form anchors.  Trait a breaks even where 2/(1+v) = 1, i.e.
    v* = 1 with u* = v*/psi_a = 1; trait b where 1.6/(1+v) = 1, i.e.
    v* = 0.6 with u* = 0.6/0.8 = 0.75."""

    def test_single_trait_subsets(self, two_trait_chemostat):
        cache = SubsetEquilibria(two_trait_chemostat)
        _, f_a = cache.get((0,))
        _, f_b = cache.get((1,))
        assert f_a[0] == pytest.approx(1.0, abs=1e-10)
        assert f_b[0] == pytest.approx(0.6, abs=1e-10)

    def test_pair_subset_excludes_the_weaker_consumer(self, two_trait_chemostat):
        cache = SubsetEquilibria(two_trait_chemostat)
        report, f_ab = cache.get((0, 1))
        assert f_ab[0] == pytest.approx(1.0, abs=1e-10)
        eq = report.admissible_equilibria[0]
        assert eq.support == (0,)
        np.testing.assert_allclose(eq.embed(2), [1.0, 0.0], atol=1e-10)
        # the excluded trait must be declining at the pair equilibrium
        assert eq.off_support_rates[1] == pytest.approx(-0.2, abs=1e-10)

    def test_rootless_interior_support_is_certified_benign(self, two_trait_chemostat):
        """One resource cannot zero two distinct rate curves, so the interior
        support has no steady state; the stall certificate must return it in
        failed-with-certificate form rather than raising."""
        report, _ = SubsetEquilibria(two_trait_chemostat).get((0, 1))
        assert report.failed_supports == ()
        supports = {eq.support for eq in report.equilibria}
        assert supports == {(0,), (1,)} or supports == {(), (0,), (1,)}

    def test_monoculture_densities(self, two_trait_chemostat):
        report, _ = SubsetEquilibria(two_trait_chemostat).get((1,))
        eq = report.admissible_equilibria[0]
        assert eq.u_star[0] == pytest.approx(0.75, abs=1e-10)


class TestSymmetricPair:
    def test_interior_equilibrium(self, symmetric_lv_pair):
        report, f = SubsetEquilibria(symmetric_lv_pair).get((0, 1))
        eq = report.admissible_equilibria[0]
        np.testing.assert_allclose(eq.u_star, [2.0 / 3.0, 2.0 / 3.0], atol=1e-10)
        np.testing.assert_allclose(f, [1.0, 1.0], atol=1e-10)
        assert report.lyapunov_checked

    def test_lyapunov_rate_closed_form(self, symmetric_lv_pair):
        # at u = (1,1): v = (1.5, 1.5), rates = (-0.5, -0.5),
        # so the functional decreases at sum(c u R^2) = 0.5
        assert lyapunov_rate(symmetric_lv_pair, [1.0, 1.0]) == pytest.approx(-0.5)

    def test_lyapunov_rate_vanishes_only_at_rest(self, symmetric_lv_pair):
        assert lyapunov_rate(symmetric_lv_pair, [2.0 / 3.0, 2.0 / 3.0]) == pytest.approx(
            0.0, abs=1e-12
        )
        rng = np.random.default_rng(2)
        for u in rng.uniform(0.05, 2.0, size=(20, 2)):
            assert lyapunov_rate(symmetric_lv_pair, u) <= 0.0

    def test_wrong_family_guard(self, two_trait_chemostat):
        with pytest.raises(WrongFamily):
            lyapunov_rate(two_trait_chemostat, [1.0, 0.0])


class TestDegeneratePair:
    def test_identical_competitors_fail_hyperbolicity(self, degenerate_pair):
        with pytest.raises(NonHyperbolic) as err:
            check_hypothesis_H(degenerate_pair, Subsystem((0, 1)))
        assert err.value.report is not None
        assert not err.value.report.all_hyperbolic


class TestRelaxation:
    def test_hitting_time_grows_with_initial_rarity(self, two_trait_chemostat):
        sub = Subsystem((0, 1))
        t_small, _ = 0.0, None
        traj4, t4 = relax(two_trait_chemostat, sub, np.array([1e-4, 0.75]), rho=1e-3)
        traj2, t2 = relax(two_trait_chemostat, sub, np.array([1e-2, 0.75]), rho=1e-3)
        assert t4 > t2 > 0.0
        # frozen from an independent integration of the same flow
        assert t4 == pytest.approx(72.4927, abs=5e-3)

    def test_trajectory_ends_on_the_ball(self, two_trait_chemostat):
        sub = Subsystem((0, 1))
        traj, t_star = relax(two_trait_chemostat, sub, np.array([1e-3, 0.75]), rho=1e-3)
        assert traj.times[-1] == pytest.approx(t_star)
        final = traj.u[-1]
        assert np.linalg.norm(final - np.array([1.0, 0.0])) == pytest.approx(
            1e-3, rel=1e-6
        )

    def test_start_inside_ball_returns_zero(self, two_trait_chemostat):
        sub = Subsystem((0,))
        _, t_star = relax(two_trait_chemostat, sub, np.array([1.0 - 1e-5]), rho=1e-3)
        assert t_star == 0.0


class TestSubsetEquilibriaCache:
    def test_resources_and_support_helpers(self, two_trait_chemostat):
        cache = SubsetEquilibria(two_trait_chemostat)
        np.testing.assert_allclose(cache.resources((0, 1)), [1.0], atol=1e-10)
        assert cache.support((0, 1)) == (0,)

    def test_cache_returns_identical_objects(self, two_trait_chemostat):
        cache = SubsetEquilibria(two_trait_chemostat)
        a = cache.get((0, 1))
        b = cache.get((1, 0))  # order-insensitive key
        assert a is b

    @pytest.mark.parametrize("seed", [0, 1, 2])
    def test_random_scenarios_satisfy_standing_assumptions(self, seed):
        s = random_chemostat(seed)
        cache = SubsetEquilibria(s)
        from itertools import combinations

        for size in range(1, s.n + 1):
            for sub in combinations(range(s.n), size):
                report, f = cache.get(sub)
                eq = report.admissible_equilibria[0]
                # densities nonnegative, resources reproduce F, off-support decline
                assert np.all(eq.u_star >= 0)
                v = s.weights.psi[:, eq.subsystem.indices()] @ eq.u_star
                np.testing.assert_allclose(v, f, atol=1e-9)
                assert all(r < 0 for r in eq.off_support_rates.values())


def test_equilibrium_F_shortcut_matches_cache(two_trait_chemostat):
    f = equilibrium_F(two_trait_chemostat, Subsystem((0, 1)))
    np.testing.assert_allclose(f, [1.0], atol=1e-10)
