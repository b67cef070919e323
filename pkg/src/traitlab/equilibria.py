"""Steady states of restricted dynamics, stability checks, and hitting times.

For a subset ``A`` of traits, the restricted dynamics keeps only the traits
in ``A``:  ``du_i/dt = u_i R_i(v(u))`` with ``v`` generated by the densities
on ``A`` alone.  This module enumerates all steady states by support,
verifies the stability hypothesis (hyperbolicity of every steady state and
uniqueness of the admissible one), exposes the equilibrium resource vector
``F(A)``, and integrates relaxation trajectories to measure hitting times.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np
from scipy.integrate import solve_ivp

from .core import Scenario, growth_jacobian, growth_rates
from .errors import (
    EnumerationCap,
    MultipleAdmissible,
    NoAdmissible,
    NonHyperbolic,
    TimeoutNoConvergence,
    WrongFamily,
)

__all__ = [
    "Subsystem",
    "Equilibrium",
    "StabilityReport",
    "SubsystemTrajectory",
    "steady_states",
    "enumerate_steady_states",
    "check_hypothesis_H",
    "equilibrium_F",
    "relax",
    "lyapunov_rate",
    "SubsetEquilibria",
]

log = logging.getLogger(__name__)

ENUMERATION_CAP = 20          # maximum |A|; 2^|A| supports are enumerated
RESIDUAL_TOL = 1e-12          # Newton convergence on ||R||_inf over the support
POSITIVITY_TOL = 1e-9         # solutions this close to a face belong to a sub-support
DEDUP_TOL = 1e-8
HYPERBOLICITY_TOL = 1e-7


@dataclass(frozen=True)
class Subsystem:
    """A nonempty subset of trait indices, kept sorted."""

    traits: tuple[int, ...]

    def __post_init__(self) -> None:
        traits = tuple(sorted(int(i) for i in self.traits))
        if not traits:
            raise ValueError("subsystem must be nonempty")
        if len(set(traits)) != len(traits):
            raise ValueError("subsystem traits must be distinct")
        object.__setattr__(self, "traits", traits)

    @property
    def size(self) -> int:
        return len(self.traits)

    def indices(self) -> np.ndarray:
        return np.array(self.traits, dtype=int)


@dataclass(frozen=True)
class Equilibrium:
    """One steady state of the restricted dynamics on ``subsystem``.

    ``u_star`` and ``rates`` are aligned with ``subsystem.traits``;
    ``support`` holds absolute trait indices with strictly positive density.
    """

    subsystem: Subsystem
    u_star: np.ndarray
    support: tuple[int, ...]
    rates: np.ndarray
    jacobian_spectrum: np.ndarray
    residual: float

    @property
    def off_support_rates(self) -> dict[int, float]:
        return {
            trait: float(rate)
            for trait, rate in zip(self.subsystem.traits, self.rates)
            if trait not in self.support
        }

    @property
    def is_hyperbolic(self) -> bool:
        if self.jacobian_spectrum.size == 0:
            return True
        return bool(np.min(np.abs(self.jacobian_spectrum.real)) > HYPERBOLICITY_TOL)

    @property
    def is_admissible(self) -> bool:
        return all(rate < 0 for rate in self.off_support_rates.values())

    def embed(self, n: int) -> np.ndarray:
        """Full-length density vector with zeros off the subsystem."""
        u = np.zeros(n)
        u[self.subsystem.indices()] = self.u_star
        return u


@dataclass(frozen=True)
class StabilityReport:
    subsystem: Subsystem
    equilibria: tuple[Equilibrium, ...]
    failed_supports: tuple[tuple[int, ...], ...]
    all_hyperbolic: bool
    admissible_equilibria: tuple[Equilibrium, ...]
    unique_admissible: bool
    lyapunov_checked: bool


@dataclass(frozen=True)
class SubsystemTrajectory:
    times: np.ndarray
    u: np.ndarray  # (n_times, |A|), aligned with the subsystem order


def _restricted_resources(s: Scenario, sub: Subsystem, u_sub: np.ndarray) -> np.ndarray:
    return s.weights.psi[:, sub.indices()] @ u_sub


def _newton_supports(s: Scenario, sub: Subsystem, support: tuple[int, ...]):
    """Damped Newton for the square system R_i(v(u)) = 0, i in the support.

    Returns a list of converged positive solutions (possibly empty) from the
    deterministic multi-start schedule.  When no start converges, the stalls
    are classified: ending at a strict local minimum of the residual (small
    projected gradient, large residual) certifies that the support carries no
    steady state and returns an empty list; anything else returns None so the
    caller can flag the support as a Newton failure.
    """
    psi_b = s.weights.psi[:, list(support)]          # (r, m)
    m = len(support)
    col_mass = psi_b.sum(axis=1)                     # resource produced per unit density
    v_mid = 0.5 * (s.bounds.v_min + s.bounds.v_max)
    base = v_mid / float(np.mean(col_mass))
    rng = np.random.default_rng(12345)
    starts = [
        np.full(m, base),
        np.full(m, 0.3 * base),
        np.full(m, 3.0 * base),
        base * (0.5 + rng.random(m)),
    ]
    solutions = []
    any_converged = False
    all_stalls_certified = True
    for u0 in starts:
        u = u0.copy()
        converged = False
        g = jac = None
        for _ in range(80):
            v = psi_b @ u
            g = s.model.rates(s.weights, v)[list(support)]
            if np.max(np.abs(g)) < RESIDUAL_TOL:
                converged = True
                break
            jac = growth_jacobian(s, v)[list(support)] @ psi_b
            # SVD-based step: equals the Newton step on well-conditioned
            # systems and stays bounded (min-norm) on rank-deficient ones,
            # where a raw solve would explode instead of raising
            step = np.linalg.lstsq(jac, -g, rcond=None)[0]
            # backtracking on the residual norm
            norm0 = np.linalg.norm(g)
            lam = 1.0
            improved = False
            for _ in range(25):
                trial = np.maximum(u + lam * step, 0.0)
                g_trial = s.model.rates(s.weights, psi_b @ trial)[list(support)]
                if np.linalg.norm(g_trial) < norm0:
                    u = trial
                    improved = True
                    break
                lam *= 0.5
            if not improved:
                break
        if converged:
            any_converged = True
            if np.all(u > POSITIVITY_TOL):
                solutions.append(u)
        elif g is not None and jac is not None:
            # stalled: certified benign only at a residual local minimum
            grad = jac.T @ g
            if np.linalg.norm(grad) > 1e-8 * max(1.0, np.linalg.norm(g)):
                all_stalls_certified = False
        else:
            all_stalls_certified = False
    if any_converged or all_stalls_certified:
        return solutions
    return None


def enumerate_steady_states(
    s: Scenario, sub: Subsystem
) -> tuple[list[Equilibrium], list[tuple[int, ...]]]:
    """All steady states of the restricted dynamics, plus failed supports.

    Every support is tried; the origin is always included.  Supports on
    which Newton diverged from every start are skipped and reported.
    """
    if sub.size > ENUMERATION_CAP:
        raise EnumerationCap(
            f"subsystem has {sub.size} traits; enumeration cap is {ENUMERATION_CAP}"
        )
    traits = sub.traits
    found: list[np.ndarray] = []   # embedded full-length vectors for dedup
    equilibria: list[Equilibrium] = []
    failed: list[tuple[int, ...]] = []
    for mask in range(2 ** sub.size):
        support = tuple(traits[k] for k in range(sub.size) if mask >> k & 1)
        if not support:
            candidates = [np.zeros(0)]
        else:
            result = _newton_supports(s, sub, support)
            if result is None:
                failed.append(support)
                log.warning("Newton diverged on support %s; skipped", support)
                continue
            candidates = result
        for u_supp in candidates:
            u_sub = np.zeros(sub.size)
            for val, trait in zip(u_supp, support):
                u_sub[traits.index(trait)] = val
            embedded = np.zeros(s.n)
            embedded[list(traits)] = u_sub
            if any(np.max(np.abs(embedded - prev)) <= DEDUP_TOL for prev in found):
                continue
            found.append(embedded)
            equilibria.append(_build_equilibrium(s, sub, u_sub, support))
    return equilibria, failed


def _build_equilibrium(
    s: Scenario, sub: Subsystem, u_sub: np.ndarray, support: tuple[int, ...]
) -> Equilibrium:
    v = _restricted_resources(s, sub, u_sub)
    rates = growth_rates(s, v)[sub.indices()]
    # Jacobian of the restricted dynamics at u*: row i is
    # delta_ik R_i(v*) + u*_i * (dR_i/dv . psi_k); off-support rows are diagonal.
    jac_v = growth_jacobian(s, v)[sub.indices()] @ s.weights.psi[:, sub.indices()]
    jac = np.diag(rates) + u_sub[:, None] * jac_v
    spectrum = np.linalg.eigvals(jac)
    support_mask = np.isin(sub.indices(), support)
    residual = float(np.max(np.abs(u_sub * rates))) if sub.size else 0.0
    u_clean = np.where(support_mask, u_sub, 0.0)
    return Equilibrium(
        subsystem=sub,
        u_star=u_clean,
        support=support,
        rates=rates,
        jacobian_spectrum=spectrum,
        residual=residual,
    )


def steady_states(s: Scenario, sub: Subsystem) -> list[Equilibrium]:
    """All steady states of the restricted dynamics on ``sub``."""
    equilibria, _ = enumerate_steady_states(s, sub)
    return equilibria


def check_hypothesis_H(s: Scenario, sub: Subsystem) -> StabilityReport:
    """Verify hyperbolicity and unique admissibility for the subsystem.

    Raises :class:`NonHyperbolic`, :class:`NoAdmissible`, or
    :class:`MultipleAdmissible` when the hypothesis fails; the raised error
    carries the partial report.  For the Lotka-Volterra family the strict
    Lyapunov decrease is additionally checked along a relaxation trajectory.
    """
    equilibria, failed = enumerate_steady_states(s, sub)
    admissible = tuple(e for e in equilibria if e.is_admissible)
    all_hyperbolic = all(e.is_hyperbolic for e in equilibria)
    report = StabilityReport(
        subsystem=sub,
        equilibria=tuple(equilibria),
        failed_supports=tuple(failed),
        all_hyperbolic=all_hyperbolic,
        admissible_equilibria=admissible,
        unique_admissible=len(admissible) == 1,
        lyapunov_checked=False,
    )
    if not all_hyperbolic:
        bad = [
            (e.support, complex(e.jacobian_spectrum[np.argmin(np.abs(e.jacobian_spectrum.real))]))
            for e in equilibria
            if not e.is_hyperbolic
        ]
        raise NonHyperbolic(
            f"steady states with near-axis eigenvalues on {sub.traits}: {bad}", report
        )
    if len(admissible) == 0:
        raise NoAdmissible(f"no admissible steady state on {sub.traits}", report)
    if len(admissible) > 1:
        raise MultipleAdmissible(
            f"{len(admissible)} admissible steady states on {sub.traits}", report
        )
    lyapunov_checked = False
    if s.model.family == "lotka_volterra":
        u_star = admissible[0].u_star
        traj, _ = relax(s, sub, u_star + 0.5, rho=1e-3, _equilibrium=admissible[0])
        rates_along = [lyapunov_rate(s, _embed(s, sub, u)) for u in traj.u]
        if max(rates_along) > 1e-8:
            raise NonHyperbolic(
                f"Lyapunov rate positive ({max(rates_along):.3g}) along relaxation on {sub.traits}",
                report,
            )
        lyapunov_checked = True
    return StabilityReport(
        subsystem=report.subsystem,
        equilibria=report.equilibria,
        failed_supports=report.failed_supports,
        all_hyperbolic=report.all_hyperbolic,
        admissible_equilibria=report.admissible_equilibria,
        unique_admissible=report.unique_admissible,
        lyapunov_checked=lyapunov_checked,
    )


def _embed(s: Scenario, sub: Subsystem, u_sub: np.ndarray) -> np.ndarray:
    u = np.zeros(s.n)
    u[sub.indices()] = u_sub
    return u


def equilibrium_F(s: Scenario, sub: Subsystem) -> np.ndarray:
    """Resource vector of the unique admissible steady state on ``sub``."""
    report = check_hypothesis_H(s, sub)
    u_star = report.admissible_equilibria[0].u_star
    return _restricted_resources(s, sub, u_star)


def relax(
    s: Scenario,
    sub: Subsystem,
    u0,
    rho: float,
    t_cap: float = 1e4,
    _equilibrium: Equilibrium | None = None,
) -> tuple[SubsystemTrajectory, float]:
    """Integrate the restricted dynamics until within ``rho`` of the target.

    Returns the stored trajectory and the hitting time of the rho-ball
    around the unique admissible steady state.  ``rho`` must be small enough
    that the ball contains no other steady state (caller's obligation).
    """
    u0 = np.asarray(u0, dtype=float)
    if u0.shape != (sub.size,):
        raise ValueError(f"u0 must have length {sub.size}")
    if np.any(u0 <= 0):
        raise ValueError("u0 must be componentwise positive")
    if _equilibrium is None:
        _equilibrium = check_hypothesis_H(s, sub).admissible_equilibria[0]
    u_star = _equilibrium.u_star
    if np.linalg.norm(u0 - u_star) <= rho:
        traj = SubsystemTrajectory(times=np.array([0.0]), u=u0[None, :].copy())
        return traj, 0.0

    idx = sub.indices()
    psi_sub = s.weights.psi[:, idx]

    def rhs(_t, u):
        return u * s.model.rates(s.weights, psi_sub @ u)[idx]

    def hit(_t, u):
        return np.linalg.norm(u - u_star) - rho

    hit.terminal = True
    hit.direction = -1
    sol = solve_ivp(rhs, (0.0, t_cap), u0, method="RK45", rtol=1e-10, atol=1e-14, events=hit)
    if sol.status != 1:
        raise TimeoutNoConvergence(
            f"no entry into the {rho}-ball around u* on {sub.traits} by t={t_cap}"
        )
    t_star = float(sol.t_events[0][0])
    times = np.append(sol.t, t_star)
    u_hist = np.vstack([sol.y.T, sol.y_events[0][0]])
    return SubsystemTrajectory(times=times, u=u_hist), t_star


def lyapunov_rate(s: Scenario, u) -> float:
    """Time derivative of the quadratic interaction functional along the flow.

    For the Lotka-Volterra family the functional
    ``L(u) = 1/2 sum c_i psi_ij u_i u_j - sum c_i rate_i u_i`` has gradient
    ``dL/du_i = -c_i R_i(v(u))``, so its rate along the dynamics collapses to
    ``-sum_i c_i u_i R_i(v)^2 <= 0``.
    """
    if s.model.family != "lotka_volterra":
        raise WrongFamily("lyapunov_rate is defined for the Lotka-Volterra family only")
    u = np.asarray(u, dtype=float)
    v = s.weights.psi @ u
    rates = s.model.rates(s.weights, v)
    return float(-np.sum(s.model.weight * u * rates**2))


class SubsetEquilibria:
    """Per-scenario cache of stability reports and equilibrium resources.

    Insert-once semantics keyed by the subset; hypothesis failures are
    cached as raised errors so repeated queries are cheap and consistent.
    """

    def __init__(self, scenario: Scenario):
        self.scenario = scenario
        self._cache: dict[tuple[int, ...], tuple[StabilityReport, np.ndarray]] = {}
        self._failures: dict[tuple[int, ...], Exception] = {}

    def get(self, traits: tuple[int, ...]) -> tuple[StabilityReport, np.ndarray]:
        key = tuple(sorted(traits))
        if key in self._failures:
            raise self._failures[key]
        if key not in self._cache:
            sub = Subsystem(key)
            try:
                report = check_hypothesis_H(self.scenario, sub)
            except Exception as exc:
                self._failures[key] = exc
                raise
            u_star = report.admissible_equilibria[0].u_star
            f_vec = _restricted_resources(self.scenario, sub, u_star)
            self._cache[key] = (report, f_vec)
        return self._cache[key]

    def resources(self, traits: tuple[int, ...]) -> np.ndarray:
        return self.get(traits)[1]

    def support(self, traits: tuple[int, ...]) -> tuple[int, ...]:
        return self.get(traits)[0].admissible_equilibria[0].support
