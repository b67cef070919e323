"""Integration of the finite-eps mutation-selection system in log space.

The density system is stiff and underflow-prone (densities live on scales
exp(-c/eps)), so the integrator works on the exponential-scale variables
w_i = eps * log(u_i), where the selection term is O(1) and the mutation term

    eps * sum_{j != i} exp(-T_ij/eps) * (exp((w_j - w_i)/eps) - 1)

is exponentially small except exactly where a cost constraint is about to
saturate.  Densities are reconstructed as u = exp(w/eps) afterwards.
"""

from dataclasses import dataclass

import numpy as np
from scipy.integrate import solve_ivp

from .core import Scenario, growth_rates, triangle_slack
from .errors import InitialMassViolation, StepFailure

EXP_CLIP = 50.0  # exponent guard; reaching it means a cost constraint was crossed

__all__ = [
    "Trajectory",
    "BoundsReport",
    "mass_window",
    "displayed_mass_window",
    "simulate_finite",
    "check_mass_bounds",
]


@dataclass(frozen=True)
class Trajectory:
    """Solution sampled on an output grid; u, w rows per time, v per resource."""

    eps: float
    times: np.ndarray   # (nt,)
    u: np.ndarray       # (nt, n)
    w: np.ndarray       # (nt, n)
    v: np.ndarray       # (nt, r)


def mass_window(s: Scenario, eps: float) -> tuple[float, float]:
    """Invariant window for the total mass, proof-form constants.

    Slack A*(n-1)*exp(-gamma/eps) on both sides: the mutation drain/feed is
    bounded by (n-1)e^(-gamma/eps) and converting a rate offset into a
    resource offset costs a factor A.
    """
    b = s.bounds
    slack = b.A * (s.n - 1) * np.exp(-s.costs.gamma / eps)
    lo = (b.v_min - slack) / s.weights.psi_max
    hi = (b.v_max + slack) / s.weights.psi_min
    return float(lo), float(hi)


def displayed_mass_window(s: Scenario, eps: float) -> tuple[float, float]:
    """Alternative constant placement (A^{-1}, beta) for the lower slack."""
    b = s.bounds
    lo = (b.v_min - (s.n - 1) * np.exp(-s.costs.beta / eps) / b.A) / s.weights.psi_max
    hi = (b.v_max + b.A * (s.n - 1) * np.exp(-s.costs.gamma / eps)) / s.weights.psi_min
    return float(lo), float(hi)


def _log_space_rhs(s: Scenario):
    psi = s.weights.psi
    costs = s.costs.table

    def rhs(t, w, eps):
        # overflow here is legal mid-step: the accepted solution is scanned
        # afterwards and any clip activation surfaces as StepFailure
        with np.errstate(over="ignore"):
            u = np.exp(w / eps)
            v = u @ psi.T
            rates = s.model.rates(s.weights, v)
            expo = (w[None, :] - w[:, None] - costs) / eps
            np.fill_diagonal(expo, -np.inf)
            outflux = np.exp(-costs / eps)
            np.fill_diagonal(outflux, 0.0)
            influx = np.exp(np.minimum(expo, EXP_CLIP))
        return rates + eps * (influx.sum(axis=1) - outflux.sum(axis=1))

    return rhs


def simulate_finite(
    s: Scenario,
    eps: float,
    t_max: float,
    dt_out: float = 0.01,
    max_step: float = np.inf,
) -> Trajectory:
    """Integrate the system at fixed eps and sample every dt_out.

    Raises InitialMassViolation when the starting mass falls outside the
    invariant window for this eps, and StepFailure when the adaptive
    integrator cannot meet tolerance or the exponent clip was activated on
    the accepted solution.  ``max_step`` exists for grid-refinement studies.
    """
    triangle_slack(s.costs)  # standing assumption; raises SlackViolation
    h = s.exponent.h
    mass0 = float(np.sum(np.exp(-h / eps)))
    lo, hi = mass_window(s, eps)
    if not (lo <= mass0 <= hi):
        raise InitialMassViolation(
            f"initial mass {mass0:.6g} outside [{lo:.6g}, {hi:.6g}] at eps={eps}"
        )

    times = np.round(np.arange(0.0, t_max + dt_out / 2, dt_out), 12)
    rhs = _log_space_rhs(s)
    sol = solve_ivp(
        rhs,
        (0.0, t_max),
        -h,
        args=(eps,),
        method="RK45",
        rtol=1e-8,
        atol=1e-10,
        t_eval=times,
        max_step=max_step,
    )
    if sol.status != 0:
        raise StepFailure(f"integrator stopped at t={sol.t[-1] if sol.t.size else 0}: {sol.message}")
    w = sol.y.T  # (nt, n)
    # post-hoc clip scan: the accepted solution must stay below the guard
    expo_max = -np.inf
    costs = s.costs.table
    for row in w:
        expo = row[None, :] - row[:, None] - costs
        np.fill_diagonal(expo, -np.inf)
        expo_max = max(expo_max, float(np.max(expo)) / eps)
    if expo_max >= EXP_CLIP:
        raise StepFailure(
            f"mutation exponent reached {expo_max:.2f} >= {EXP_CLIP}: "
            "a cost constraint was crossed beyond the guard"
        )
    u = np.exp(w / eps)
    v = u @ s.weights.psi.T
    return Trajectory(eps=float(eps), times=sol.t, u=u, w=w, v=v)


@dataclass(frozen=True)
class BoundsReport:
    """Mass-window verification along a trajectory, both constant forms."""

    window: tuple[float, float]
    displayed_window: tuple[float, float]
    min_margin: float
    displayed_min_margin: float
    passed: bool
    displayed_passed: bool
    first_violation: tuple[float, float] | None  # (time, margin)


def check_mass_bounds(traj: Trajectory, s: Scenario, rel_tol: float = 1e-6) -> BoundsReport:
    """Verify the invariant mass window at every stored time.

    The enforced window uses the proof-form constants; the displayed-form
    margins are recorded alongside.  Report-valued: never raises.
    """
    masses = traj.u.sum(axis=1)
    lo, hi = mass_window(s, traj.eps)
    lo_d, hi_d = displayed_mass_window(s, traj.eps)
    tol = rel_tol * max(1.0, hi)
    margins = np.minimum(masses - lo, hi - masses)
    margins_d = np.minimum(masses - lo_d, hi_d - masses)
    bad = np.where(margins < -tol)[0]
    first = (float(traj.times[bad[0]]), float(margins[bad[0]])) if bad.size else None
    return BoundsReport(
        window=(lo, hi),
        displayed_window=(lo_d, hi_d),
        min_margin=float(margins.min()),
        displayed_min_margin=float(margins_d.min()),
        passed=bad.size == 0,
        displayed_passed=bool(np.all(margins_d >= -rel_tol * max(1.0, hi_d))),
        first_violation=first,
    )
