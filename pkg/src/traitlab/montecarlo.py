"""Stochastic representation of the finite-eps densities and tail checks.

The density admits an exact expectation over a continuous-time jump chain
whose rate for the move i -> j is exp(-T_ij/eps): weighting each path by
exp((-h(X_t) + integral of the growth rate along the reversed schedule)/eps)
reproduces u^eps(t, i) started from trait i.  This module samples that chain
(counter-based substreams, so results are bit-identical for a given seed),
estimates the expectation in log-sum-exp form, and provides two non-sampled
companions: exact quadrature of small Skorokhod-ball probabilities and the
factorial bound on jump counts.
"""

from dataclasses import dataclass
from math import factorial

import numpy as np
from scipy.integrate import quad

from .core import MutationCosts, Scenario, growth_rates
from .errors import ScheduleGap, TooManyJumps
from .variational import JumpPath

__all__ = [
    "JumpProcessSample",
    "JumpTailReport",
    "sample_paths",
    "fk_estimate",
    "ldp_point_check",
    "jump_tail",
]


@dataclass(frozen=True)
class JumpProcessSample:
    path: JumpPath
    log_weight: float | None
    stream: int


def _chain_rates(costs: MutationCosts, eps: float) -> tuple[np.ndarray, np.ndarray]:
    """Jump-rate matrix q_ij = exp(-T_ij/eps) (zero diagonal) and row totals."""
    with np.errstate(over="ignore"):
        q = np.exp(-costs.table / eps)
    np.fill_diagonal(q, 0.0)
    return q, q.sum(axis=1)


def sample_paths(
    costs: MutationCosts, eps: float, i0: int, t: float, n: int, seed: int
) -> list[JumpProcessSample]:
    """n independent chain paths from i0 over [0, t], one substream per path.

    Substream k is the counter-based generator jumped k blocks from the
    seeded master, so path k is reproducible independently of n and of
    evaluation order.
    """
    q, c = _chain_rates(costs, eps)
    n_states = len(c)
    probs = [q[i] / c[i] if c[i] > 0 else None for i in range(n_states)]
    master = np.random.Philox(seed)
    out = []
    for k in range(n):
        gen = np.random.Generator(master.jumped(k))
        state = i0
        tau = 0.0
        jumps: list[tuple[float, int]] = []
        while c[state] > 0:
            tau += gen.exponential(1.0 / c[state])
            if tau > t:
                break
            state = int(gen.choice(n_states, p=probs[state]))
            jumps.append((tau, state))
        out.append(JumpProcessSample(JumpPath(i0, tuple(jumps), t), None, k))
    return out


def _coerce_schedule(v_schedule) -> tuple[np.ndarray, np.ndarray]:
    """Accept a finite-eps Trajectory or a (times, v) pair."""
    if hasattr(v_schedule, "times") and hasattr(v_schedule, "v"):
        return np.asarray(v_schedule.times, float), np.asarray(v_schedule.v, float)
    times, v = v_schedule
    return np.asarray(times, float), np.asarray(v, float)


def _adaptive_simpson(f, a: float, b: float, tol: float = 1e-10) -> np.ndarray:
    """Vector-valued adaptive Simpson of f over [a, b] (max-norm control)."""
    fa, fm, fb = f(a), f((a + b) / 2), f(b)
    whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb)

    def recurse(a, b, fa, fm, fb, whole, tol, depth):
        m = (a + b) / 2
        fl, fr = f((a + m) / 2), f((m + b) / 2)
        left = (m - a) / 6.0 * (fa + 4.0 * fl + fm)
        right = (b - m) / 6.0 * (fm + 4.0 * fr + fb)
        err = np.max(np.abs(left + right - whole))
        if err <= 15.0 * tol or depth >= 24:
            return left + right + (left + right - whole) / 15.0
        return recurse(a, m, fa, fl, fm, left, tol / 2, depth + 1) + recurse(
            m, b, fm, fr, fb, right, tol / 2, depth + 1
        )

    if b <= a:
        return np.zeros_like(np.asarray(fa))
    return recurse(a, b, fa, fm, fb, whole, tol, 0)


class _RateIntegrals:
    """Cumulative per-trait integrals of R(v_s) along a piecewise-linear schedule."""

    def __init__(self, s: Scenario, times: np.ndarray, v: np.ndarray):
        self.s = s
        self.times = times
        self.v = v
        rows = [np.zeros(s.n)]
        for k in range(len(times) - 1):
            rows.append(rows[-1] + self._piece(k, times[k], times[k + 1]))
        self.grid = np.vstack(rows)  # (len(times), n)

    def _rates_at(self, tau: float) -> np.ndarray:
        vv = np.array(
            [np.interp(tau, self.times, self.v[:, l]) for l in range(self.v.shape[1])]
        )
        return growth_rates(self.s, vv)

    def _piece(self, k: int, a: float, b: float) -> np.ndarray:
        return _adaptive_simpson(self._rates_at, a, b)

    def cumulative(self, tau: float) -> np.ndarray:
        """Integral of R(v_s) over [times[0], tau], all traits at once."""
        k = int(np.clip(np.searchsorted(self.times, tau, side="right") - 1, 0, len(self.times) - 2))
        base = self.grid[k]
        if tau <= self.times[k]:
            return base
        return base + self._piece(k, self.times[k], min(tau, self.times[-1]))


def fk_estimate(
    s: Scenario, v_schedule, eps: float, t: float, trait: int, n: int, seed: int
) -> tuple[float, float]:
    """Weighted-path estimate of the density at (t, trait) with standard error.

    The schedule must cover [0, t]; interpolation between stored resource
    vectors is piecewise linear and per-leg rate integrals are evaluated by
    adaptive Simpson (tolerance 1e-10), which is exact for rates polynomial
    in v.  Weights are combined in log-sum-exp form.  The schedule runs in
    forward system time while paths run in reversed time, so a path leg
    [a, b] reads the schedule on [t-b, t-a].
    """
    times, v = _coerce_schedule(v_schedule)
    if times[0] > 1e-12 or times[-1] < t - 1e-9:
        raise ScheduleGap(
            f"schedule covers [{times[0]:.6g}, {times[-1]:.6g}], FK horizon needs [0, {t}]"
        )
    integrals = _RateIntegrals(s, times, v)
    h = s.exponent.h
    samples = sample_paths(s.costs, eps, trait, t, n, seed)

    cum_cache: dict[float, np.ndarray] = {}

    def cum(tau: float) -> np.ndarray:
        if tau not in cum_cache:
            cum_cache[tau] = integrals.cumulative(tau)
        return cum_cache[tau]

    log_weights = np.empty(n)
    for idx, sample in enumerate(samples):
        path = sample.path
        exponent = 0.0
        legs_start = (0.0,) + tuple(time for time, _ in path.jumps)
        legs_end = tuple(time for time, _ in path.jumps) + (t,)
        for state, a, b in zip(path.states, legs_start, legs_end):
            exponent += float(cum(t - a)[state] - cum(t - b)[state])
        exponent -= float(h[path.states[-1]])
        log_weights[idx] = exponent / eps
    m = float(np.max(log_weights))
    y = np.exp(log_weights - m)
    estimate = float(np.exp(m) * np.mean(y))
    if n > 1:
        se = float(np.exp(m) * np.std(y, ddof=1) / np.sqrt(n))
    else:
        se = float("nan")
    return estimate, se


def _window(center: float, delta: float, t: float) -> tuple[float, float]:
    return max(0.0, center - delta), min(t, center + delta)


def ldp_point_check(
    costs: MutationCosts, eps_list, phi: JumpPath, delta: float
) -> list[tuple[float, float]]:
    """Exact Skorokhod-ball probabilities for paths with at most two jumps.

    The ball holds paths with phi's jump skeleton whose k-th jump time lies
    within delta of phi's k-th jump time.  The probability factorizes into
    the jump-cost product exp(-sum T/eps) and an O(1) holding-time integral,
    evaluated in closed form (inner) and by quadrature (outer, two jumps);
    returned as (eps, eps*log P) rows.  Raises TooManyJumps beyond 2.
    """
    jumps = phi.jumps
    if len(jumps) > 2:
        raise TooManyJumps(f"exact quadrature supports <= 2 jumps, path has {len(jumps)}")
    t = phi.horizon
    states = phi.states
    cost_sum = 0.0
    for prev, (_, nxt) in zip(states, jumps):
        cost_sum += float(costs.table[prev, nxt])

    rows = []
    for eps in eps_list:
        _, c = _chain_rates(costs, eps)
        cs = [float(c[x]) for x in states]
        if len(jumps) == 0:
            time_factor = np.exp(-cs[0] * t)
        elif len(jumps) == 1:
            a, b = _window(jumps[0][0], delta, t)
            time_factor = np.exp(-cs[1] * t) * _exp_integral(cs[0] - cs[1], a, b)
        else:
            a1, b1 = _window(jumps[0][0], delta, t)
            a2, b2 = _window(jumps[1][0], delta, t)

            def inner(tau1):
                lo = max(tau1, a2)
                return _exp_integral(cs[1] - cs[2], lo, b2)

            def outer(tau1):
                return np.exp(-(cs[0] - cs[1]) * tau1) * inner(tau1)

            if b1 <= a1:
                time_factor = 0.0
            else:
                time_factor, _err = quad(outer, a1, b1, epsabs=1e-14, epsrel=1e-12)
                time_factor *= np.exp(-cs[-1] * t)
        if time_factor <= 0.0 or not np.isfinite(cost_sum):
            rows.append((float(eps), float("-inf")))
        else:
            log_p = -cost_sum / eps + float(np.log(time_factor))
            rows.append((float(eps), float(eps * log_p)))
    return rows


def _exp_integral(rate: float, a: float, b: float) -> float:
    """Integral of exp(-rate * tau) over [a, b]; 0 when the window is empty."""
    if b <= a:
        return 0.0
    if abs(rate) < 1e-14:
        return b - a
    return (np.exp(-rate * a) - np.exp(-rate * b)) / rate


@dataclass(frozen=True)
class JumpTailReport:
    analytic_bound: float
    sampled_frequency: float
    n_paths: int


def jump_tail(
    costs: MutationCosts,
    eps: float,
    t: float,
    i0: int,
    N: int,
    n: int = 100_000,
    seed: int = 0,
) -> JumpTailReport:
    """Factorial chain bound on P(at least N jumps by t) plus a sampled check.

    The bound is (t^N / N!) * sum over length-N jump chains from i0 of
    exp(-sum of costs/eps), i.e. the i0 row sum of the N-th power of the
    rate matrix.  N = 0 returns the trivial bound 1.
    """
    q, _ = _chain_rates(costs, eps)
    chain_sum = float(np.sum(np.linalg.matrix_power(q, N)[i0]))
    bound = (t**N / factorial(N)) * chain_sum
    samples = sample_paths(costs, eps, i0, t, n, seed)
    freq = float(np.mean([len(s.path.jumps) >= N for s in samples]))
    return JumpTailReport(analytic_bound=float(bound), sampled_frequency=freq, n_paths=n)
