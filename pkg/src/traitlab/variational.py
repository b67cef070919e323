"""Direct dynamic programming over cost-weighted jump paths.

An independent route to the limit values: discretize time with step dt and
take, at each level, the better of staying (accruing the current growth
rate) or jumping from another trait (paying the jump cost, then accruing
that trait's rate).  The zero set is re-read from the current row, so the
constraint feedback is explicit rather than event-driven.  Agreement with
the event-driven evolution is O(dt) and is used as a two-sided consistency
check; neither route is derived from the other.
"""

from dataclasses import dataclass

import numpy as np

from .core import MutationCosts, Scenario, growth_rates
from .equilibria import SubsetEquilibria
from .errors import MaxDrift
from .hj import VALUE_TOL, initial_value, zero_set

__all__ = ["JumpPath", "DPGrid", "path_rate", "dp_solve", "optimal_path", "path_objective"]


@dataclass(frozen=True)
class JumpPath:
    """Piecewise-constant trait path: start state and (time, state) jumps.

    Jump times are strictly increasing and lie in (0, horizon].
    """

    start: int
    jumps: tuple[tuple[float, int], ...]
    horizon: float

    def __post_init__(self):
        last = 0.0
        for time, _ in self.jumps:
            if not (last < time <= self.horizon):
                raise ValueError(f"jump times must increase within (0, {self.horizon}]")
            last = time

    @property
    def states(self) -> tuple[int, ...]:
        return (self.start,) + tuple(state for _, state in self.jumps)

    def state_at(self, t: float) -> int:
        state = self.start
        for time, nxt in self.jumps:
            if time <= t:
                state = nxt
            else:
                break
        return state


def path_rate(path: JumpPath, costs: MutationCosts) -> float:
    """Total jump cost of the path; inf when any leg is forbidden."""
    total = 0.0
    prev = path.start
    for _, nxt in path.jumps:
        total += float(costs.table[prev, nxt])
        prev = nxt
    return total


@dataclass(frozen=True)
class DPGrid:
    """Backward-value table on a uniform grid with backpointers.

    ``back[k, i]`` describes how level k was reached at trait i: -1 for a
    stay step, otherwise the trait jumped from.  ``resources[k]`` is the
    equilibrium resource vector used for the rates on step k -> k+1.
    """

    dt: float
    times: np.ndarray       # (K+1,)
    values: np.ndarray      # (K+1, n)
    back: np.ndarray        # (K+1, n), row 0 is -1
    resources: np.ndarray   # (K, r)

    @property
    def t_max(self) -> float:
        return float(self.times[-1])

    def level(self, t: float) -> int:
        k = int(round(t / self.dt))
        if abs(t - k * self.dt) > 1e-9 * max(1.0, self.dt):
            raise ValueError(f"t={t} is not on the dt={self.dt} grid")
        if not (0 <= k < len(self.times)):
            raise ValueError(f"t={t} outside the grid horizon {self.t_max}")
        return k


def dp_solve(s: Scenario, t_max: float, dt: float) -> DPGrid:
    """Fill the stay-or-jump recursion up to t_max.

    Requires dt <= 1e-2 (coarser grids mis-time constraint switches).  The
    zero set of each row is re-read at tolerance 1e-9 and mapped to its
    subsystem's equilibrium resources.  Raises MaxDrift when a row's maximum
    escapes [-dt*M, dt*M]: the constraint feedback failed, and renormalizing
    would silently hide that, so no renormalization is applied.
    """
    if dt > 1e-2 + 1e-15:
        raise ValueError(f"dt={dt} too coarse; the recursion requires dt <= 1e-2")
    cache = SubsetEquilibria(s)
    n = s.n
    costs = s.costs.table
    steps = int(round(t_max / dt))
    times = np.arange(steps + 1) * dt
    # One step may overshoot 0 by up to dt*max|R| when a value crosses zero
    # strictly inside a step; the feedback caps it at the next level.
    drift_tol = dt * s.bounds.M + 1e-9

    values = np.empty((steps + 1, n))
    back = np.full((steps + 1, n), -1, dtype=int)
    resources = np.empty((steps, s.r))
    W, _ = initial_value(s)
    values[0] = W
    for k in range(steps):
        A = zero_set(W, VALUE_TOL, max_tol=drift_tol)
        F = cache.resources(A)
        resources[k] = F
        rates = growth_rates(s, F)
        stay = W + dt * rates
        jump_table = W[None, :] - costs + dt * rates[None, :]  # [i, j]: jump from j
        np.fill_diagonal(jump_table, -np.inf)
        best_j = np.argmax(jump_table, axis=1)
        best_jump = jump_table[np.arange(n), best_j]
        take_jump = best_jump > stay
        W = np.where(take_jump, best_jump, stay)
        back[k + 1] = np.where(take_jump, best_j, -1)
        if abs(float(np.max(W))) > drift_tol:
            raise MaxDrift(
                f"max value {float(np.max(W)):.3e} at t={times[k + 1]:.6g} "
                f"escaped the drift band +-{drift_tol:.3e}"
            )
        values[k + 1] = W
    return DPGrid(dt=dt, times=times, values=values, back=back, resources=resources)


def optimal_path(grid: DPGrid, t: float, trait: int) -> JumpPath:
    """Backtrack the argmax path that realizes values[level(t), trait].

    The path starts at ``trait`` (the variational problem optimizes over
    paths pinned at the queried trait at path time 0).  The grid cell at
    level k describes the path tail of duration k*dt, so a backpointer at
    level k marks a jump on the path-time slice [t - k*dt, t - (k-1)*dt],
    attributed to the slice end t - (k-1)*dt; jump times are therefore
    accurate to one grid step.
    """
    k = grid.level(t)
    jumps: list[tuple[float, int]] = []
    cur = trait
    for lvl in range(k, 0, -1):
        prev = int(grid.back[lvl, cur])
        if prev >= 0:
            jumps.append((t - grid.times[lvl - 1], prev))
            cur = prev
    return JumpPath(start=trait, jumps=tuple(jumps), horizon=t)


def path_objective(grid: DPGrid, s: Scenario, path: JumpPath) -> float:
    """Re-accumulate a path's objective in the recursion's own order.

    Rebuilds the chain of grid states, then accumulates initial value, rate
    increments and jump costs level by level with the recursion's exact
    operation order, so the result reproduces the stored value bit-for-bit
    for paths produced by optimal_path on the same grid.
    """
    k_end = grid.level(path.horizon)
    # states[lvl] = trait occupied by the duration-lvl*dt tail of the path
    states = np.empty(k_end + 1, dtype=int)
    states[k_end] = path.start
    jump_level = {
        k_end - int(round(s_time / grid.dt)) + 1: new_state
        for s_time, new_state in path.jumps
    }
    cur = path.start
    for lvl in range(k_end, 0, -1):
        if lvl in jump_level:
            cur = jump_level[lvl]
        states[lvl - 1] = cur
    value = float(initial_value(s)[0][states[0]])
    for lvl in range(k_end):
        rates = growth_rates(s, grid.resources[lvl])
        j, i = int(states[lvl]), int(states[lvl + 1])
        if i != j:
            value = value - float(s.costs.table[i, j]) + grid.dt * float(rates[j])
        else:
            value = value + grid.dt * float(rates[j])
    return value
