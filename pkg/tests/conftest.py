"""Shared scenario fixtures.

The two-trait chemostat and the symmetric Lotka-Volterra pair are the
canonical hand-checkable instances used throughout; the three-trait
succession adds genuine invasion events at irrational grid offsets, which
the discrete value recursion can only track to O(dt).
"""

import numpy as np
import pytest

from traitlab import (
    Chemostat,
    InitialExponent,
    LotkaVolterra,
    ModelBounds,
    MutationCosts,
    ResourceWeights,
    Scenario,
    TableModel,
    TraitSpace,
    validate_scenario,
)
from traitlab.errors import TraitlabError

UNIT_COSTS = np.array([[0.0, 1.0], [1.0, 0.0]])


def make_two_trait_chemostat() -> Scenario:
    """Two consumers of one substrate; "b" pays 0.5 in initial exponent.

    Hand-derived facts: monoculture equilibria u* = 1 (a) and 0.75 (b),
    resource values F({a}) = F({a,b}) = 1, F({b}) = 0.6, and the suppressed
    trait grows at R_b(1) = -0.2.
    """
    return Scenario(
        traits=TraitSpace(("a", "b")),
        costs=MutationCosts(UNIT_COSTS.copy()),
        weights=ResourceWeights(np.array([[1.0, 0.8]])),
        exponent=InitialExponent(np.array([0.0, 0.5])),
        model=Chemostat(
            death=np.array([1.0, 1.0]),
            gain=np.array([2.0, 2.0]),
            alpha=np.array([1.0]),
        ),
    )


def make_symmetric_lv_pair() -> Scenario:
    """Symmetric direct competition with interior equilibrium (2/3, 2/3)."""
    return Scenario(
        traits=TraitSpace(("p", "q")),
        costs=MutationCosts(UNIT_COSTS.copy()),
        weights=ResourceWeights(np.array([[1.0, 0.5], [0.5, 1.0]])),
        exponent=InitialExponent(np.array([0.0, 0.3])),
        model=LotkaVolterra(rate=np.array([1.0, 1.0]), weight=np.array([1.0, 1.0])),
    )


def make_three_trait_succession() -> Scenario:
    """Three consumers whose limit dynamics run a full succession.

    All rates are rational at the visited resource values, so every event
    time is exact: trait 1 invades at t = 31/30 (growth 0.3 from -0.31),
    trait 2 at t = 1.38; the displaced values then hit their cost floors at
    t = 5.63 (depth 1 at rate 4/17) and t = 5.8 (depth 1.9 at rate 7/17).
    """
    return Scenario(
        traits=TraitSpace(("low", "mid", "high")),
        costs=MutationCosts(
            np.array([[0.0, 1.0, 1.9], [1.0, 0.0, 1.0], [1.9, 1.0, 0.0]])
        ),
        weights=ResourceWeights(np.array([[1.0, 1.0, 1.0]])),
        exponent=InitialExponent(np.array([0.0, 0.31, 0.83])),
        model=Chemostat(
            death=np.ones(3), gain=np.array([2.0, 2.6, 3.4]), alpha=np.array([1.0])
        ),
    )


def make_degenerate_pair() -> Scenario:
    """Two identical competitors: a line of steady states, none hyperbolic."""
    return Scenario(
        traits=TraitSpace(("x", "y")),
        costs=MutationCosts(UNIT_COSTS.copy()),
        weights=ResourceWeights(np.array([[1.0, 1.0], [1.0, 1.0]])),
        exponent=InitialExponent(np.array([0.0, 0.0])),
        model=LotkaVolterra(rate=np.array([1.0, 1.0]), weight=np.array([1.0, 1.0])),
    )


def make_flat_rate_table() -> Scenario:
    """Identically zero growth: the weighted-path estimator must return 1."""
    grid = np.array([0.0, 2.0])
    return Scenario(
        traits=TraitSpace(("u", "v")),
        costs=MutationCosts(UNIT_COSTS.copy()),
        weights=ResourceWeights(np.array([[0.5, 0.5]])),
        exponent=InitialExponent(np.array([0.0, 0.0])),
        model=TableModel(
            v_grids=(grid,),
            values=np.zeros((2, 2)),
            bounds=ModelBounds(A=1.0, M=1.0, v_min=0.5, v_max=1.5),
        ),
    )


def random_chemostat(seed: int) -> Scenario:
    """Validated random 3-4 trait chemostat (rejection-sampled, seeded).

    Gains spread over [1.6, 3.6] with staggered initial exponents make
    invasion events generic; symmetric costs in [0.8, 1.2] keep the triangle
    slack at least 0.4 automatically.
    """
    rng = np.random.default_rng(seed)
    for _ in range(64):
        n = int(rng.integers(3, 5))
        gain = rng.uniform(1.6, 3.6, n)
        psi = rng.uniform(0.8, 1.2, (1, n))
        raw = rng.uniform(0.8, 1.2, (n, n))
        costs = 0.5 * (raw + raw.T)
        np.fill_diagonal(costs, 0.0)
        h = rng.uniform(0.0, 0.9, n)
        h -= h.min()
        try:
            s = Scenario(
                traits=TraitSpace(tuple(f"t{i}" for i in range(n))),
                costs=MutationCosts(costs),
                weights=ResourceWeights(psi),
                exponent=InitialExponent(h),
                model=Chemostat(death=np.ones(n), gain=gain, alpha=np.ones(1)),
            )
        except TraitlabError:
            continue
        if validate_scenario(s).passed:
            return s
    raise RuntimeError(f"no validated scenario within 64 draws from seed {seed}")


@pytest.fixture
def two_trait_chemostat() -> Scenario:
    return make_two_trait_chemostat()


@pytest.fixture
def symmetric_lv_pair() -> Scenario:
    return make_symmetric_lv_pair()


@pytest.fixture
def three_trait_succession() -> Scenario:
    return make_three_trait_succession()


@pytest.fixture
def degenerate_pair() -> Scenario:
    return make_degenerate_pair()


@pytest.fixture
def flat_rate_table() -> Scenario:
    return make_flat_rate_table()
