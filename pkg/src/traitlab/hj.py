"""Event-driven solution of the limiting constrained value-function dynamics.

Between events every trait's value moves linearly: traits in the zero set
stay pinned at 0, and every other trait grows at the best growth rate
reachable through its active set (itself plus any trait whose value, minus
the jump cost, matches).  The strict triangle gap on costs rules out chained
tight relations, so these slopes are self-consistent on each segment and the
evolution is exactly piecewise linear.  Events are located by exact division
of the linear crossing equations (the limit of bisection on an exact linear
function); at each event the zero set is renormalized to the support of the
admissible equilibrium of the zero-set subsystem before the next segment
starts.
"""

from dataclasses import dataclass

import numpy as np

from .core import CheckResult, Scenario, growth_rates, operating_window
from .equilibria import SubsetEquilibria
from .errors import EventStall, MaxNotZero

VALUE_TOL = 1e-9   # tightness / zero-set tolerance on values
TIME_TOL = 1e-12   # events closer than this are treated as simultaneous

__all__ = [
    "ValueFunction",
    "EventRecord",
    "StructureReport",
    "initial_value",
    "zero_set",
    "active_set",
    "evolve_hj",
    "check_structure",
]


@dataclass(frozen=True)
class EventRecord:
    """One logged event; trait is None for zero-set changes."""

    time: float
    kind: str  # "ZeroSetChange" | "ActiveSetChange"
    trait: int | None
    before: tuple[int, ...]
    after: tuple[int, ...]


@dataclass(frozen=True)
class ValueFunction:
    """Piecewise-linear values with per-segment constraint metadata.

    Segment k covers [breakpoints[k], breakpoints[k+1]) and carries the zero
    set, the equilibrium resource vector of its subsystem, the per-trait
    active sets evaluated at the segment start, and the slope vector.
    """

    breakpoints: np.ndarray            # (k+1,)
    values: np.ndarray                 # (k+1, n) values at breakpoints
    slopes: np.ndarray                 # (k, n)
    zero_sets: tuple[tuple[int, ...], ...]              # per segment
    resources: np.ndarray              # (k, r) equilibrium resources
    active_sets: tuple[tuple[tuple[int, ...], ...], ...]  # per segment, per trait

    @property
    def n(self) -> int:
        return self.values.shape[1]

    @property
    def t_max(self) -> float:
        return float(self.breakpoints[-1])

    def evaluate(self, t) -> np.ndarray:
        """Values at time(s) t; exact on breakpoints, linear between."""
        t = np.asarray(t, dtype=float)
        out = np.empty(t.shape + (self.n,))
        for i in range(self.n):
            out[..., i] = np.interp(t, self.breakpoints, self.values[:, i])
        return out

    def segment_index(self, t: float) -> int:
        """Index of the segment containing t (right-open, last closed)."""
        k = int(np.searchsorted(self.breakpoints, t, side="right") - 1)
        return min(max(k, 0), len(self.slopes) - 1)


def initial_value(s: Scenario) -> tuple[np.ndarray, bool]:
    """Starting values from the initial exponent.

    When some pairs are incompatible (h_i - h_j exceeding the jump cost),
    the raw assignment -h is not cost-consistent and each value is lifted to
    the best cost-discounted alternative; the returned flag reports whether
    the raw assignment was already consistent.
    """
    h = s.exponent.h
    costs = s.costs.table
    raw = -h
    lifted = np.maximum(raw, np.max(raw[None, :] - costs, axis=1))
    compatible = bool(np.all(lifted <= raw + VALUE_TOL))
    return (raw.copy() if compatible else lifted), compatible


def zero_set(
    values: np.ndarray, tol: float = VALUE_TOL, max_tol: float = 1e-6
) -> tuple[int, ...]:
    """Indices within ``tol`` of 0; raises MaxNotZero when max(values) is not 0.

    Membership and the max-zero constraint carry separate tolerances: a
    discrete value iteration may legitimately overshoot 0 by its own step
    error while membership stays a tight tie test.
    """
    m = float(np.max(values))
    if abs(m) > max_tol:
        raise MaxNotZero(f"max value {m:.3e} exceeds tolerance {max_tol:.1e}")
    return tuple(int(i) for i in np.where(values >= -tol)[0])


def active_set(
    values: np.ndarray, i: int, costs: np.ndarray, tol: float = VALUE_TOL
) -> tuple[int, ...]:
    """Trait i plus every j whose value minus the jump cost ties value i."""
    gaps = values - costs[i, :] - values[i]
    members = set(np.where(np.abs(gaps) <= tol)[0]) | {i}
    return tuple(sorted(int(j) for j in members))


def _segment_state(s, cache, V, tol):
    """Zero set, normalized support, resources and slopes for one segment."""
    raw = zero_set(V, tol)
    _, F = cache.get(raw)
    supp = cache.support(raw)
    rates = growth_rates(s, F)
    acts = tuple(active_set(V, i, s.costs.table, tol) for i in range(s.n))
    slopes = np.array([max(rates[j] for j in acts[i]) for i in range(s.n)])
    # supported traits are pinned: their rate is 0 by the equilibrium condition
    slopes[list(supp)] = 0.0
    return raw, supp, F, acts, slopes


def evolve_hj(
    s: Scenario, t_max: float, tol: float = VALUE_TOL
) -> tuple[ValueFunction, tuple[EventRecord, ...]]:
    """Evolve the limit values on [0, t_max] and log every structure change.

    Event ordering at one time is deterministic: zero-set records first,
    then active-set records by trait index.  Raises EventStall if the event
    count exceeds n*(t_max*M/gamma + n), the a-priori bound on distinct
    events, which only a non-advancing loop can break.
    """
    cache = SubsetEquilibria(s)
    V, _compatible = initial_value(s)
    V = V.astype(float)
    n = s.n
    costs = s.costs.table
    max_events = int(n * (t_max * s.bounds.M / s.costs.gamma + n)) + 8

    breakpoints = [0.0]
    values = [V.copy()]
    slopes_list: list[np.ndarray] = []
    zero_sets: list[tuple[int, ...]] = []
    resources: list[np.ndarray] = []
    active_sets: list[tuple[tuple[int, ...], ...]] = []
    events: list[EventRecord] = []

    t = 0.0
    prev_supp: tuple[int, ...] | None = None
    prev_acts: tuple[tuple[int, ...], ...] | None = None
    iterations = 0
    while t < t_max - TIME_TOL:
        iterations += 1
        if iterations > max_events:
            raise EventStall(
                f"exceeded {max_events} events by t={t:.6g}; "
                f"zero set {zero_sets[-1] if zero_sets else ()}"
            )
        raw, supp, F, acts, slopes = _segment_state(s, cache, V, tol)
        # log structure changes relative to the previous segment
        if prev_supp is None:
            if raw != supp:
                events.append(EventRecord(t, "ZeroSetChange", None, raw, supp))
        else:
            if raw != prev_supp:
                events.append(EventRecord(t, "ZeroSetChange", None, prev_supp, raw))
            if supp != raw:
                events.append(EventRecord(t, "ZeroSetChange", None, raw, supp))
            for i in range(n):
                if acts[i] != prev_acts[i]:
                    events.append(
                        EventRecord(t, "ActiveSetChange", i, prev_acts[i], acts[i])
                    )
        prev_supp, prev_acts = supp, acts

        # next event: a negative value reaching 0, or a slack relation closing
        dt_next = t_max - t
        for i in range(n):
            if V[i] < -tol and slopes[i] > 0:
                dt_next = min(dt_next, -V[i] / slopes[i])
        for i in range(n):
            for j in range(n):
                if j == i or not np.isfinite(costs[i, j]):
                    continue
                gap = V[j] - costs[i, j] - V[i]
                rel_speed = slopes[j] - slopes[i]
                if gap < -tol and rel_speed > TIME_TOL:
                    dt_next = min(dt_next, -gap / rel_speed)
        dt_next = max(dt_next, TIME_TOL)

        V = V + slopes * dt_next
        V[list(supp)] = np.minimum(V[list(supp)], 0.0)  # keep pinned values exact
        t = t + dt_next
        breakpoints.append(t)
        values.append(V.copy())
        slopes_list.append(slopes)
        zero_sets.append(supp)
        resources.append(F)
        active_sets.append(acts)

    return (
        ValueFunction(
            breakpoints=np.array(breakpoints),
            values=np.array(values),
            slopes=np.array(slopes_list),
            zero_sets=tuple(zero_sets),
            resources=np.array(resources),
            active_sets=tuple(active_sets),
        ),
        tuple(events),
    )


@dataclass(frozen=True)
class StructureReport:
    checks: tuple[CheckResult, ...]

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)


def check_structure(vf: ValueFunction, s: Scenario) -> StructureReport:
    """Verify the structural envelope of a computed value function.

    Checks, on all breakpoints and segment midpoints: the cost-consistency
    inequality V_i >= V_j - T_ij (tolerance 1e-9), max value equal to 0
    (tolerance 1e-6), the slope bound M + max |R| over the operating window,
    and the one-step sandwich max(V_i, max_j V_j - T_ij) +- M*delta between
    consecutive sample times.  Report-valued: never raises.
    """
    costs = s.costs.table
    mids = (vf.breakpoints[:-1] + vf.breakpoints[1:]) / 2
    sample_t = np.unique(np.concatenate([vf.breakpoints, mids]))
    samples = vf.evaluate(sample_t)

    worst_consistency = -np.inf
    worst_max = 0.0
    for row in samples:
        gaps = row[None, :] - costs - row[:, None]
        np.fill_diagonal(gaps, -np.inf)
        worst_consistency = max(worst_consistency, float(np.nanmax(gaps)))
        worst_max = max(worst_max, abs(float(np.max(row))))
    c1 = CheckResult(
        "cost_consistency",
        worst_consistency <= 1e-9,
        f"max_ij (V_j - T_ij - V_i) = {worst_consistency:.3e} (tol 1e-9)",
    )
    c2 = CheckResult("max_is_zero", worst_max <= 1e-6, f"max |max_i V_i| = {worst_max:.3e} (tol 1e-6)")

    v_lo, v_hi = operating_window(s)
    diag = np.linspace(v_lo, v_hi, 17)[:, None] * np.ones(s.r)
    max_rate = max(float(np.max(np.abs(growth_rates(s, v)))) for v in diag)
    bound = s.bounds.M + max_rate
    max_slope = float(np.max(np.abs(vf.slopes))) if vf.slopes.size else 0.0
    c3 = CheckResult(
        "slope_bound", max_slope <= bound + 1e-9, f"max |slope| = {max_slope:.4g} <= {bound:.4g}"
    )

    worst_low = -np.inf
    worst_high = -np.inf
    M = s.bounds.M
    for a, b in zip(sample_t[:-1], sample_t[1:]):
        delta = b - a
        va, vb = vf.evaluate(a), vf.evaluate(b)
        anchor = np.maximum(va, np.max(va[None, :] - costs, axis=1))
        worst_low = max(worst_low, float(np.max(anchor - M * delta - vb)))
        worst_high = max(worst_high, float(np.max(vb - anchor - M * delta)))
    c4 = CheckResult(
        "one_step_sandwich",
        worst_low <= 1e-9 and worst_high <= 1e-9,
        f"max sandwich violations: below {worst_low:.3e}, above {worst_high:.3e} (tol 1e-9)",
    )
    return StructureReport(checks=(c1, c2, c3, c4))
