"""CSV emission and figure rendering for every run type.

Column layouts are fixed per producing module (each file starts with a
header row naming them); figures are rendered with the non-interactive
matplotlib backend next to the delimited output and share its base names.
"""

import csv
import os

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from ..core import Scenario
from ..equilibria import StabilityReport
from ..finite_ode import Trajectory
from ..hj import EventRecord, ValueFunction
from ..pde1d import Field, wkb_extract
from ..variational import DPGrid, JumpPath
from .study import StudyResult

__all__ = [
    "write_trajectory_csv",
    "write_events_csv",
    "write_values_csv",
    "write_dp_csv",
    "write_path_csv",
    "write_equilibria_csv",
    "write_mc_csv",
    "write_pde_snapshots_csv",
    "write_pde_diagnostics_csv",
    "write_study_csv",
    "render_study_figures",
    "render_value_figure",
    "render_pde_figure",
]


def _writer(path):
    os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
    return open(path, "w", newline="")


def _labels(s: Scenario) -> tuple[str, ...]:
    return s.traits.labels


def _set_label(labels, subset) -> str:
    return "{" + "|".join(labels[i] for i in subset) + "}"


def write_trajectory_csv(path: str, traj: Trajectory, s: Scenario) -> str:
    labels = _labels(s)
    r = traj.v.shape[1]
    with _writer(path) as fh:
        out = csv.writer(fh)
        out.writerow(["t", "trait", "u", "w"] + [f"v_{l + 1}" for l in range(r)])
        for k, t in enumerate(traj.times):
            for i, lab in enumerate(labels):
                out.writerow(
                    [f"{t:.6g}", lab, f"{traj.u[k, i]:.12g}", f"{traj.w[k, i]:.12g}"]
                    + [f"{traj.v[k, l]:.12g}" for l in range(r)]
                )
    return path


def write_events_csv(path: str, events, s: Scenario) -> str:
    labels = _labels(s)
    with _writer(path) as fh:
        out = csv.writer(fh)
        out.writerow(["t", "kind", "A_before", "A_after"])
        for ev in events:
            prefix = "" if ev.trait is None else f"trait {labels[ev.trait]}: "
            out.writerow(
                [
                    f"{ev.time:.9g}",
                    ev.kind,
                    prefix + _set_label(labels, ev.before),
                    prefix + _set_label(labels, ev.after),
                ]
            )
    return path


def write_values_csv(path: str, vf: ValueFunction, s: Scenario, dt_out: float = 0.01) -> str:
    labels = _labels(s)
    times = np.round(np.arange(0.0, vf.t_max + dt_out / 2, dt_out), 12)
    vals = vf.evaluate(times)
    with _writer(path) as fh:
        out = csv.writer(fh)
        out.writerow(["t", "trait", "V"])
        for k, t in enumerate(times):
            for i, lab in enumerate(labels):
                out.writerow([f"{t:.6g}", lab, f"{vals[k, i]:.12g}"])
    return path


def write_dp_csv(path: str, grid: DPGrid, s: Scenario) -> str:
    labels = _labels(s)
    with _writer(path) as fh:
        out = csv.writer(fh)
        out.writerow(["t", "trait", "W"])
        for k, t in enumerate(grid.times):
            for i, lab in enumerate(labels):
                out.writerow([f"{t:.9g}", lab, f"{grid.values[k, i]:.12g}"])
    return path


def write_path_csv(path: str, jump_path: JumpPath, s: Scenario) -> str:
    labels = _labels(s)
    with _writer(path) as fh:
        out = csv.writer(fh)
        out.writerow(["leg", "state", "entry_time"])
        out.writerow([0, labels[jump_path.start], "0"])
        for leg, (time, state) in enumerate(jump_path.jumps, start=1):
            out.writerow([leg, labels[state], f"{time:.9g}"])
    return path


def write_equilibria_csv(path: str, reports: dict[tuple[int, ...], tuple[StabilityReport, np.ndarray]], s: Scenario) -> str:
    """Admissible equilibrium per subset: one row per supported trait."""
    labels = _labels(s)
    r = s.r
    with _writer(path) as fh:
        out = csv.writer(fh)
        out.writerow(["subset", "trait", "u_star", "R_off_support"] + [f"F_{l + 1}" for l in range(r)])
        for subset, (report, f_vec) in sorted(reports.items()):
            eq = report.admissible_equilibria[0]
            f_cols = [f"{f_vec[l]:.12g}" for l in range(r)]
            dense = eq.embed(s.n)
            for pos, trait in enumerate(subset):
                off = eq.off_support_rates.get(trait)
                out.writerow(
                    [
                        _set_label(labels, subset),
                        labels[trait],
                        f"{dense[trait]:.12g}",
                        "" if off is None else f"{off:.12g}",
                    ]
                    + f_cols
                )
    return path


def write_mc_csv(path: str, rows: list[dict]) -> str:
    """Generic small-table writer for Monte-Carlo summaries."""
    if not rows:
        raise ValueError("no rows to write")
    keys = list(rows[0])
    with _writer(path) as fh:
        out = csv.writer(fh)
        out.writerow(keys)
        for row in rows:
            out.writerow([row[k] for k in keys])
    return path


def write_pde_snapshots_csv(path: str, field: Field) -> str:
    with _writer(path) as fh:
        out = csv.writer(fh)
        out.writerow(["t", "x", "u", "w"])
        for k, t in enumerate(field.times):
            for j, x in enumerate(field.x):
                out.writerow(
                    [f"{t:.6g}", f"{x:.6g}", f"{field.u[k, j]:.12g}", f"{field.w[k, j]:.12g}"]
                )
    return path


def write_pde_diagnostics_csv(path: str, field: Field) -> str:
    wkb = wkb_extract(field)
    masses = field.masses
    r = field.v.shape[1]
    with _writer(path) as fh:
        out = csv.writer(fh)
        out.writerow(["t"] + [f"v_{l + 1}" for l in range(r)] + ["mass", "max_w", "argmax_x"])
        for k, t in enumerate(field.times):
            out.writerow(
                [f"{t:.6g}"]
                + [f"{field.v[k, l]:.12g}" for l in range(r)]
                + [f"{masses[k]:.12g}", f"{wkb.max_w[k]:.12g}", f"{wkb.argmax_x[k]:.6g}"]
            )
    return path


def write_study_csv(path: str, result: StudyResult) -> str:
    with _writer(path) as fh:
        out = csv.writer(fh)
        out.writerow(["scenario", "eps", "error", "runtime_s", "status"])
        for eps in result.eps_list:
            err = result.errors.get(eps, float("nan"))
            out.writerow(
                [
                    result.label,
                    f"{eps:g}",
                    f"{err:.12g}" if np.isfinite(err) else "nan",
                    f"{result.runtimes.get(eps, float('nan')):.3f}",
                    result.run_errors.get(eps, "ok"),
                ]
            )
    return path


def render_study_figures(out_dir: str, result: StudyResult, s: Scenario) -> list[str]:
    """Overlay of finite-eps log-scale curves on the limit, plus the error plot."""
    labels = _labels(s)
    vf = result.value_function
    written = []

    fig, axes = plt.subplots(1, s.n, figsize=(4.2 * s.n, 3.4), squeeze=False, sharey=True)
    tt = np.linspace(0.0, vf.t_max, 400)
    limit = vf.evaluate(tt)
    for i, ax in enumerate(axes[0]):
        for eps, traj in sorted(result.trajectories.items(), reverse=True):
            ax.plot(traj.times, traj.w[:, i], lw=1.0, label=f"eps={eps:g}")
        ax.plot(tt, limit[:, i], "k--", lw=1.6, label="limit")
        ax.set_title(f"trait {labels[i]}")
        ax.set_xlabel("t")
        if i == 0:
            ax.set_ylabel("eps log u")
    axes[0, -1].legend(fontsize=8)
    fig.suptitle(f"{result.label}: exponential-scale convergence")
    fig.tight_layout()
    p = os.path.join(out_dir, f"{result.label}_convergence.png")
    fig.savefig(p, dpi=130)
    plt.close(fig)
    written.append(p)

    pairs = [(e, v) for e, v in sorted(result.errors.items(), reverse=True) if np.isfinite(v)]
    if len(pairs) >= 2:
        fig, ax = plt.subplots(figsize=(4.2, 3.4))
        ax.loglog([e for e, _ in pairs], [v for _, v in pairs], "o-")
        ax.set_xlabel("eps")
        ax.set_ylabel("max |eps log u - V|")
        ax.set_title(f"{result.label}: error vs eps")
        ax.grid(True, which="both", alpha=0.3)
        fig.tight_layout()
        p = os.path.join(out_dir, f"{result.label}_error.png")
        fig.savefig(p, dpi=130)
        plt.close(fig)
        written.append(p)

    if result.trajectories:
        fig, ax = plt.subplots(figsize=(5.0, 3.4))
        for eps, traj in sorted(result.trajectories.items(), reverse=True):
            for l in range(traj.v.shape[1]):
                ax.plot(traj.times, traj.v[:, l], lw=1.0,
                        label=f"eps={eps:g}" if l == 0 else None)
        seg_t = np.repeat(vf.breakpoints, 2)[1:-1]
        seg_f = np.repeat(vf.resources, 2, axis=0)
        for l in range(vf.resources.shape[1]):
            ax.plot(seg_t, seg_f[:, l], "k--", lw=1.6,
                    label="equilibrium plateau" if l == 0 else None)
        ax.set_xlabel("t")
        ax.set_ylabel("resources")
        ax.set_title(f"{result.label}: resource pressure")
        ax.legend(fontsize=8)
        fig.tight_layout()
        p = os.path.join(out_dir, f"{result.label}_resources.png")
        fig.savefig(p, dpi=130)
        plt.close(fig)
        written.append(p)
    return written


def render_value_figure(out_dir: str, vf: ValueFunction, events, s: Scenario, name: str = "values") -> str:
    labels = _labels(s)
    fig, ax = plt.subplots(figsize=(5.0, 3.4))
    tt = np.linspace(0.0, vf.t_max, 400)
    vals = vf.evaluate(tt)
    for i in range(vf.n):
        ax.plot(tt, vals[:, i], lw=1.4, label=f"trait {labels[i]}")
    for ev in events:
        ax.axvline(ev.time, color="gray", ls=":", lw=0.8)
    ax.set_xlabel("t")
    ax.set_ylabel("V")
    ax.set_title("limit value function (events dotted)")
    ax.legend(fontsize=8)
    fig.tight_layout()
    p = os.path.join(out_dir, f"{name}.png")
    fig.savefig(p, dpi=130)
    plt.close(fig)
    return p


def render_pde_figure(out_dir: str, field: Field, name: str = "pde") -> str:
    wkb = wkb_extract(field)
    fig, axes = plt.subplots(1, 2, figsize=(9.0, 3.4))
    show = np.linspace(0, len(field.times) - 1, min(8, len(field.times))).astype(int)
    for k in show:
        axes[0].plot(field.x, field.w[k], lw=1.0, label=f"t={field.times[k]:.2f}")
    axes[0].set_xlabel("x")
    axes[0].set_ylabel("w = eps log u")
    axes[0].set_title("exponential-scale profiles")
    axes[0].legend(fontsize=7)
    axes[1].plot(field.times, wkb.max_w, label="max_x w")
    axes[1].plot(field.times, wkb.argmax_x, label="argmax_x w")
    axes[1].set_xlabel("t")
    axes[1].set_title("peak height and location")
    axes[1].legend(fontsize=8)
    fig.tight_layout()
    p = os.path.join(out_dir, f"{name}.png")
    fig.savefig(p, dpi=130)
    plt.close(fig)
    return p
