"""Convergence studies: finite-eps runs against the limit value function."""

import time
from dataclasses import dataclass, field

import numpy as np

from ..core import CheckResult, Scenario, validate_scenario
from ..finite_ode import Trajectory, check_mass_bounds, simulate_finite
from ..hj import EventRecord, ValueFunction, check_structure, evolve_hj

__all__ = ["StudyResult", "run_study"]


@dataclass(frozen=True)
class StudyResult:
    """Per-eps convergence errors and verdicts for one scenario.

    ``errors[eps]`` is e(eps) = max over the common output grid and traits
    of |eps*log(u) - V|; NaN marks an eps whose run failed (the failure text
    is in ``run_errors``).
    """

    label: str
    eps_list: tuple[float, ...]
    errors: dict[float, float]
    runtimes: dict[float, float]
    checks: tuple[CheckResult, ...]
    value_function: ValueFunction
    events: tuple[EventRecord, ...]
    trajectories: dict[float, Trajectory] = field(repr=False, default_factory=dict)
    run_errors: dict[float, str] = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)


def run_study(
    s: Scenario,
    eps_list,
    t_max: float,
    dt_out: float = 0.01,
    label: str = "scenario",
    keep_trajectories: bool = True,
) -> StudyResult:
    """Evolve the limit once, run each eps, and compare on the shared grid.

    The eps list must be strictly decreasing.  Per-eps failures are recorded
    and the remaining eps values still run; structure and mass checks are
    aggregated into the verdict list along with the monotone-decrease check
    on e(eps) (reported as vacuous for a single eps).
    """
    eps_list = tuple(float(e) for e in eps_list)
    if any(b >= a for a, b in zip(eps_list, eps_list[1:])):
        raise ValueError(f"eps list must be strictly decreasing, got {eps_list}")

    checks: list[CheckResult] = []
    report = validate_scenario(s)
    checks.append(
        CheckResult(
            "scenario_valid", report.passed,
            "; ".join(c.name for c in report.failures) or "all standing assumptions hold",
        )
    )

    vf, events = evolve_hj(s, t_max)
    structure = check_structure(vf, s)
    checks.append(
        CheckResult(
            "limit_structure", structure.passed,
            "; ".join(f"{c.name}: {c.detail}" for c in structure.checks),
        )
    )

    errors: dict[float, float] = {}
    runtimes: dict[float, float] = {}
    trajectories: dict[float, Trajectory] = {}
    run_errors: dict[float, str] = {}
    mass_ok = True
    mass_detail: list[str] = []
    for eps in eps_list:
        start = time.perf_counter()
        try:
            traj = simulate_finite(s, eps, t_max, dt_out=dt_out)
        except Exception as exc:  # aggregate, keep the remaining eps running
            runtimes[eps] = time.perf_counter() - start
            errors[eps] = float("nan")
            run_errors[eps] = f"{type(exc).__name__}: {exc}"
            continue
        runtimes[eps] = time.perf_counter() - start
        limit = vf.evaluate(traj.times)
        errors[eps] = float(np.max(np.abs(traj.w - limit)))
        bounds_report = check_mass_bounds(traj, s)
        mass_ok &= bounds_report.passed
        mass_detail.append(f"eps={eps}: min margin {bounds_report.min_margin:.3e}")
        if keep_trajectories:
            trajectories[eps] = traj

    checks.append(CheckResult("mass_window", mass_ok, "; ".join(mass_detail) or "no runs"))

    finite_errors = [(e, errors[e]) for e in eps_list if np.isfinite(errors.get(e, np.nan))]
    if run_errors:
        checks.append(
            CheckResult(
                "all_eps_ran", False,
                "; ".join(f"eps={e}: {msg}" for e, msg in run_errors.items()),
            )
        )
    if len(finite_errors) <= 1:
        checks.append(
            CheckResult(
                "error_monotone", True,
                "vacuous: fewer than two eps values to compare",
            )
        )
    else:
        vals = [v for _, v in finite_errors]
        mono = all(b < a for a, b in zip(vals, vals[1:]))
        checks.append(
            CheckResult(
                "error_monotone", mono,
                "e(eps) strictly decreasing: "
                + ", ".join(f"e({e:g})={v:.5f}" for e, v in finite_errors),
            )
        )

    return StudyResult(
        label=label,
        eps_list=eps_list,
        errors=errors,
        runtimes=runtimes,
        checks=tuple(checks),
        value_function=vf,
        events=events,
        trajectories=trajectories,
        run_errors=run_errors,
    )
