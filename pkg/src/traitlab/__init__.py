"""Exponential-scale analysis of mutation-selection dynamics on finite trait spaces.

The package follows one object through five independent computational
routes: the density system at finite eps (``finite_ode``), its event-driven
eps -> 0 limit (``hj``), a direct dynamic program over jump paths
(``variational``), a weighted-path stochastic representation
(``montecarlo``), and a continuous-trait PDE analogue (``pde1d``); the
per-subsystem equilibria that couple them live in ``equilibria`` and the
problem types in ``core``.  ``harness`` adds configs, studies, CSV/figure
output, and the CLI.
"""

from .core import (
    Chemostat,
    CheckResult,
    InitialExponent,
    LotkaVolterra,
    ModelBounds,
    MutationCosts,
    ResourceWeights,
    Scenario,
    TableModel,
    TraitSpace,
    ValidationReport,
    growth_jacobian,
    growth_rates,
    operating_window,
    resource_map,
    triangle_slack,
    validate_scenario,
)
from .equilibria import (
    Equilibrium,
    StabilityReport,
    SubsetEquilibria,
    Subsystem,
    check_hypothesis_H,
    enumerate_steady_states,
    equilibrium_F,
    lyapunov_rate,
    relax,
    steady_states,
)
from .finite_ode import (
    BoundsReport,
    Trajectory,
    check_mass_bounds,
    displayed_mass_window,
    mass_window,
    simulate_finite,
)
from .hj import (
    EventRecord,
    StructureReport,
    ValueFunction,
    active_set,
    check_structure,
    evolve_hj,
    initial_value,
    zero_set,
)
from .montecarlo import (
    JumpProcessSample,
    JumpTailReport,
    fk_estimate,
    jump_tail,
    ldp_point_check,
    sample_paths,
)
from .pde1d import (
    Field,
    Prop21Report,
    SpatialModel,
    WkbReport,
    check_prop21,
    simulate_pde,
    wkb_extract,
)
from .variational import DPGrid, JumpPath, dp_solve, optimal_path, path_objective, path_rate

__version__ = "0.1.0"
