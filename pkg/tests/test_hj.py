"""Event-driven evolution of the limit values and its structure checks."""

import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from traitlab import (
    Chemostat,
    InitialExponent,
    MutationCosts,
    ResourceWeights,
    Scenario,
    TraitSpace,
    active_set,
    check_structure,
    evolve_hj,
    initial_value,
    zero_set,
)
from traitlab.errors import MaxNotZero

from conftest import make_three_trait_succession, random_chemostat

# exact event times of the succession fixture (rational rate arithmetic)
INVASION_1 = 31.0 / 30.0
INVASION_2 = 1.38
FLOOR_MID = 5.63
FLOOR_LOW = 5.8


class TestInitialValue:
    def test_consistent_exponent_passes_through(self, two_trait_chemostat):
        values, compatible = initial_value(two_trait_chemostat)
        np.testing.assert_allclose(values, [0.0, -0.5])
        assert compatible

    def test_incompatible_exponent_is_lifted(self, two_trait_chemostat):
        s = two_trait_chemostat
        steep = Scenario(
            traits=s.traits,
            costs=s.costs,
            weights=s.weights,
            exponent=InitialExponent(np.array([0.0, 3.0])),
            model=s.model,
        )
        values, compatible = initial_value(steep)
        # trait b is reachable from a at cost 1, which beats its own -3
        np.testing.assert_allclose(values, [0.0, -1.0])
        assert not compatible


class TestSetReaders:
    def test_zero_set_membership(self):
        assert zero_set(np.array([0.0, -0.4, -1e-12])) == (0, 2)

    def test_zero_set_rejects_displaced_maximum(self):
        with pytest.raises(MaxNotZero):
            zero_set(np.array([0.1, -0.5]))

    def test_zero_set_band_override(self):
        # a value iteration may overshoot zero by its own step error
        assert zero_set(np.array([3e-4, -0.5]), max_tol=1e-3) == (0,)

    def test_active_set_contains_self(self):
        costs = np.array([[0.0, 1.0], [1.0, 0.0]])
        assert active_set(np.array([0.0, -0.4]), 0, costs) == (0,)
        assert active_set(np.array([0.0, -0.4]), 1, costs) == (1,)

    def test_active_set_detects_saturated_cost(self):
        costs = np.array([[0.0, 1.0], [1.0, 0.0]])
        assert active_set(np.array([0.0, -1.0]), 1, costs) == (0, 1)

    @given(st.integers(0, 2 ** 31 - 1))
    @settings(max_examples=25, deadline=None)
    def test_zero_set_always_contains_the_argmax(self, seed):
        rng = np.random.default_rng(seed)
        vals = -rng.uniform(0.0, 2.0, 5)
        vals[rng.integers(0, 5)] = 0.0
        members = zero_set(vals)
        assert int(np.argmax(vals)) in members
        assert all(vals[i] >= -1e-9 for i in members)


class TestTwoTraitProfile:
    """The dominated trait's value decays at -0.2 until it saturates the
    jump cost at t = 2.5, after which its feeder pins it at -1."""

    def test_breakpoints_and_event(self, two_trait_chemostat):
        vf, events = evolve_hj(two_trait_chemostat, 5.0)
        np.testing.assert_allclose(vf.breakpoints, [0.0, 2.5, 5.0], atol=1e-12)
        assert len(events) == 1
        ev = events[0]
        assert ev.kind == "ActiveSetChange"
        assert ev.trait == 1
        assert ev.time == pytest.approx(2.5, abs=1e-12)
        assert ev.before == (1,) and ev.after == (0, 1)

    def test_closed_form_values(self, two_trait_chemostat):
        vf, _ = evolve_hj(two_trait_chemostat, 5.0)
        ts = np.linspace(0.0, 5.0, 501)
        V = vf.evaluate(ts)
        np.testing.assert_allclose(V[:, 0], 0.0, atol=1e-12)
        np.testing.assert_allclose(
            V[:, 1], np.maximum(-0.5 - 0.2 * ts, -1.0), atol=1e-12
        )

    def test_segment_metadata(self, two_trait_chemostat):
        vf, _ = evolve_hj(two_trait_chemostat, 5.0)
        assert vf.zero_sets == ((0,), (0,))
        np.testing.assert_allclose(vf.resources[0], [1.0])
        np.testing.assert_allclose(vf.slopes[0], [0.0, -0.2], atol=1e-12)
        np.testing.assert_allclose(vf.slopes[1], [0.0, 0.0], atol=1e-12)

    def test_flat_exponent_variant_renormalizes_at_start(self, two_trait_chemostat):
        s = two_trait_chemostat
        flat = Scenario(
            traits=s.traits,
            costs=s.costs,
            weights=s.weights,
            exponent=InitialExponent(np.zeros(2)),
            model=s.model,
        )
        vf, events = evolve_hj(flat, 6.0)
        zero_changes = [e for e in events if e.kind == "ZeroSetChange"]
        assert zero_changes[0].time == 0.0
        assert zero_changes[0].before == (0, 1)
        assert zero_changes[0].after == (0,)
        # thereafter the dominated trait decays from 0 at rate 0.2
        assert vf.evaluate(5.0)[1] == pytest.approx(-1.0, abs=1e-9)


class TestSuccession:
    def test_event_times_are_exact(self, three_trait_succession):
        _, events = evolve_hj(three_trait_succession, 6.0)
        times = [e.time for e in events]
        kinds = [e.kind for e in events]
        np.testing.assert_allclose(
            times,
            [INVASION_1, INVASION_1, INVASION_2, INVASION_2, FLOOR_MID, FLOOR_LOW],
            atol=1e-9,
        )
        assert kinds == ["ZeroSetChange"] * 4 + ["ActiveSetChange"] * 2

    def test_invasions_renormalize_to_the_new_winner(self, three_trait_succession):
        vf, events = evolve_hj(three_trait_succession, 6.0)
        assert vf.zero_sets == ((0,), (1,), (2,), (2,), (2,))
        # each invasion logs the transient pair before exclusion resolves it
        assert events[0].after == (0, 1) and events[1].after == (1,)
        assert events[2].after == (1, 2) and events[3].after == (2,)

    def test_resource_plateaus(self, three_trait_succession):
        vf, _ = evolve_hj(three_trait_succession, 6.0)
        plateau = [float(f[0]) for f in vf.resources]
        np.testing.assert_allclose(plateau, [1.0, 1.6, 2.4, 2.4, 2.4], atol=1e-10)

    def test_sampled_values(self, three_trait_succession):
        vf, _ = evolve_hj(three_trait_succession, 6.0)
        # hand-computed anchors: V(low) at the second invasion and the floors
        assert vf.evaluate(INVASION_2)[0] == pytest.approx(-0.08, abs=1e-10)
        V6 = vf.evaluate(6.0)
        np.testing.assert_allclose(V6, [-1.9, -1.0, 0.0], atol=1e-9)

    def test_structure_checks_pass(self, three_trait_succession):
        vf, _ = evolve_hj(three_trait_succession, 6.0)
        report = check_structure(vf, three_trait_succession)
        assert report.passed, [c for c in report.checks if not c.passed]


class TestRelabelingEquivariance:
    def test_all_permutations_commute_with_evolution(self):
        base = make_three_trait_succession()
        vf0, _ = evolve_hj(base, 6.0)
        ts = np.linspace(0.0, 6.0, 61)
        V0 = vf0.evaluate(ts)
        gain = np.array([2.0, 2.6, 3.4])
        h = np.array([0.0, 0.31, 0.83])
        labels = ("low", "mid", "high")
        for perm in itertools.permutations(range(3)):
            p = np.array(perm)
            s = Scenario(
                traits=TraitSpace(tuple(labels[i] for i in p)),
                costs=MutationCosts(base.costs.table[np.ix_(p, p)]),
                weights=ResourceWeights(base.weights.psi[:, p]),
                exponent=InitialExponent(h[p]),
                model=Chemostat(death=np.ones(3), gain=gain[p], alpha=np.ones(1)),
            )
            vf, _ = evolve_hj(s, 6.0)
            np.testing.assert_allclose(vf.evaluate(ts), V0[:, p], atol=1e-9)


@pytest.mark.parametrize("seed", [3, 4, 5, 6])
def test_structure_checks_on_random_scenarios(seed):
    s = random_chemostat(seed)
    vf, _ = evolve_hj(s, 5.0)
    report = check_structure(vf, s)
    assert report.passed, [c for c in report.checks if not c.passed]
