"""Problem-instance types, growth-rate families, and assumption validation.

A :class:`Scenario` bundles everything that defines one mutation-selection
problem on a finite trait space: trait labels, the mutation-cost table, the
resource weights, the growth-rate model, and the initial exponent.  All types
are immutable after construction and every operation here is pure.

Conventions used throughout the package:

* traits are indexed ``0..n-1`` internally; user-facing labels are strings;
* the cost table entry ``cost[i, j]`` is the exponent of the mutation rate
  from trait ``i`` to trait ``j`` (``+inf`` means the mutation is impossible);
* the resource weights form an ``r x n`` matrix ``psi`` so that the resource
  vector generated by a density ``u`` is ``psi @ u``.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from functools import cached_property

import numpy as np

from .errors import DimensionMismatch, SlackViolation

__all__ = [
    "TraitSpace",
    "MutationCosts",
    "ResourceWeights",
    "ModelBounds",
    "Chemostat",
    "LotkaVolterra",
    "TableModel",
    "InitialExponent",
    "Scenario",
    "CheckResult",
    "ValidationReport",
    "triangle_slack",
    "evaluate_growth",
    "growth_rates",
    "growth_jacobian",
    "resource_map",
    "validate_scenario",
    "operating_window",
]


def _freeze(obj, name: str, value) -> None:
    object.__setattr__(obj, name, value)


def _as_array(values, name: str, ndim: int) -> np.ndarray:
    arr = np.asarray(values, dtype=float)
    if arr.ndim != ndim:
        raise DimensionMismatch(f"{name}: expected {ndim}-dimensional array, got shape {arr.shape}")
    return arr


@dataclass(frozen=True)
class TraitSpace:
    """Ordered finite set of trait labels; indexing is positional and stable."""

    labels: tuple[str, ...]

    def __post_init__(self) -> None:
        labels = tuple(str(x) for x in self.labels)
        if len(labels) == 0:
            raise DimensionMismatch("trait space must contain at least one trait")
        if len(set(labels)) != len(labels):
            raise DimensionMismatch("trait labels must be distinct")
        _freeze(self, "labels", labels)

    @property
    def n(self) -> int:
        return len(self.labels)

    def index(self, label: str) -> int:
        return self.labels.index(str(label))


@dataclass(frozen=True)
class MutationCosts:
    """Cost table of the mutation exponents, with zero diagonal.

    Off-diagonal entries live in ``(0, +inf]``.  The derived quantities are
    the triangle slack ``eta`` (strictly positive under the standing
    assumption), and ``gamma``/``beta``, the min/max finite off-diagonal
    entries, which size the exponentially small terms in the invariant mass
    window.
    """

    table: np.ndarray

    def __post_init__(self) -> None:
        table = _as_array(self.table, "costs", 2)
        if table.shape[0] != table.shape[1]:
            raise DimensionMismatch(f"costs: table must be square, got {table.shape}")
        if np.any(np.diag(table) != 0.0):
            raise DimensionMismatch("costs: diagonal must be exactly 0")
        off = ~np.eye(table.shape[0], dtype=bool)
        if np.any(table[off] <= 0.0) or np.any(np.isnan(table)):
            raise DimensionMismatch("costs: off-diagonal entries must be strictly positive")
        table.setflags(write=False)
        _freeze(self, "table", table)

    @property
    def n(self) -> int:
        return self.table.shape[0]

    @cached_property
    def eta(self) -> float:
        return triangle_slack(self)

    @cached_property
    def gamma(self) -> float:
        """Smallest finite off-diagonal cost (inf if all are infinite)."""
        return self._finite_extreme(np.min)

    @cached_property
    def beta(self) -> float:
        """Largest finite off-diagonal cost (inf if all are infinite)."""
        return self._finite_extreme(np.max)

    def _finite_extreme(self, reducer) -> float:
        off = self.table[~np.eye(self.n, dtype=bool)]
        finite = off[np.isfinite(off)]
        return float(reducer(finite)) if finite.size else float("inf")


def triangle_slack(costs: MutationCosts) -> float:
    """Smallest slack of the strict triangle inequality over distinct triples.

    Returns ``inf`` when no triple has a finite direct cost (including the
    one- and two-trait cases, where the infimum is empty).  Raises
    :class:`SlackViolation` when the slack is not strictly positive.
    """
    t = costs.table
    n = costs.n
    slack = float("inf")
    for i in range(n):
        for k in range(n):
            if i == k or not np.isfinite(t[i, k]):
                continue
            for j in range(n):
                if j == i or j == k:
                    continue
                slack = min(slack, t[i, j] + t[j, k] - t[i, k])
    if slack <= 0:
        raise SlackViolation(f"triangle slack {slack} <= 0: composite mutations undercut direct ones")
    return slack


@dataclass(frozen=True)
class ResourceWeights:
    """The r x n table of strictly positive resource weights."""

    psi: np.ndarray

    def __post_init__(self) -> None:
        psi = _as_array(self.psi, "psi", 2)
        if psi.size == 0 or np.any(psi <= 0.0) or not np.all(np.isfinite(psi)):
            raise DimensionMismatch("psi: entries must be strictly positive and finite")
        psi.setflags(write=False)
        _freeze(self, "psi", psi)

    @property
    def n_resources(self) -> int:
        return self.psi.shape[0]

    @property
    def n_traits(self) -> int:
        return self.psi.shape[1]

    @property
    def psi_min(self) -> float:
        return float(self.psi.min())

    @property
    def psi_max(self) -> float:
        return float(self.psi.max())


def resource_map(weights: ResourceWeights, u) -> np.ndarray:
    """Resource vector v_l = sum_j psi[l, j] * u_j generated by a density u."""
    u = np.asarray(u, dtype=float)
    if u.shape[-1] != weights.n_traits:
        raise DimensionMismatch(
            f"resource_map: density has {u.shape[-1]} entries, expected {weights.n_traits}"
        )
    return u @ weights.psi.T


@dataclass(frozen=True)
class ModelBounds:
    """Monotonicity constant A, envelope M, and the viability window."""

    A: float
    M: float
    v_min: float
    v_max: float

    def __post_init__(self) -> None:
        if not (self.A >= 1.0):
            raise DimensionMismatch(f"bounds: A must be >= 1, got {self.A}")
        if not (0 < self.v_min <= self.v_max):
            raise DimensionMismatch(
                f"bounds: need 0 < v_min <= v_max, got ({self.v_min}, {self.v_max})"
            )
        if not (self.M > 0):
            raise DimensionMismatch(f"bounds: M must be positive, got {self.M}")


@dataclass(frozen=True)
class Chemostat:
    """Resource-consumption growth family.

    ``R_i(v) = -death_i + gain_i * sum_l alpha_l * psi[l, i] / (1 + v_l)``.
    """

    death: np.ndarray
    gain: np.ndarray
    alpha: np.ndarray
    bounds: ModelBounds | None = None

    family = "chemostat"

    def __post_init__(self) -> None:
        for name in ("death", "gain", "alpha"):
            arr = _as_array(getattr(self, name), f"model.{name}", 1)
            if np.any(arr <= 0) or not np.all(np.isfinite(arr)):
                raise DimensionMismatch(f"model.{name}: entries must be strictly positive")
            arr.setflags(write=False)
            _freeze(self, name, arr)

    def rates(self, weights: ResourceWeights, v: np.ndarray) -> np.ndarray:
        """Per-trait growth rates at the resource vector v."""
        v = np.asarray(v, dtype=float)
        # (n,) = -d + c * sum_l alpha_l psi[l,:] / (1+v_l)
        return -self.death + self.gain * ((self.alpha / (1.0 + v)) @ weights.psi)

    def rate_jacobian(self, weights: ResourceWeights, v: np.ndarray) -> np.ndarray:
        """d rates_i / d v_l, an (n, r) matrix (strictly negative entries)."""
        v = np.asarray(v, dtype=float)
        return -self.gain[:, None] * weights.psi.T * (self.alpha / (1.0 + v) ** 2)[None, :]

    def with_bounds(self, weights: ResourceWeights) -> "Chemostat":
        if self.bounds is not None:
            return self
        return replace(self, bounds=_chemostat_bounds(self, weights))


def _chemostat_bounds(model: Chemostat, weights: ResourceWeights) -> ModelBounds:
    """Closed-form window and constants for the chemostat family.

    Along each resource axis the rate of trait i crosses zero where
    ``s/(1+s) = (c_i * sum_l alpha_l psi_li - d_i) / (c_i alpha_l psi_li)``;
    the smallest/largest such crossing over (trait, axis) pairs give the
    viability window.  The monotonicity constant is taken over the operating
    box v in [0, 2 v_max]^r, where the derivative magnitudes are extremal at
    the box corners.
    """
    psi = weights.psi
    total = (model.alpha @ psi) * model.gain  # c_i * sum_l alpha_l psi_li
    surplus = total - model.death
    if np.any(surplus <= 0):
        bad = int(np.argmin(surplus))
        raise DimensionMismatch(
            f"model: trait index {bad} is not viable (c*sum(alpha*psi) <= d)"
        )
    per_axis = model.gain[None, :] * model.alpha[:, None] * psi  # (r, n): c_i alpha_l psi_li
    q = surplus[None, :] / per_axis
    if np.any(q >= 1.0):
        raise DimensionMismatch(
            "model: some trait stays viable for arbitrarily large resource pressure; "
            "declare bounds explicitly"
        )
    crossings = q / (1.0 - q)
    v_min = float(crossings.min())
    v_max = float(crossings.max())
    # |dR_i/dv_l| = c_i alpha_l psi_li / (1+v_l)^2 on the box [0, 2 v_max]
    deriv_hi = float(per_axis.max())
    deriv_lo = float(per_axis.min()) / (1.0 + 2.0 * v_max) ** 2
    A = max(deriv_hi, 1.0 / deriv_lo, 1.0)
    lo, hi = v_min / 2.0, 2.0 * v_max
    corner = np.abs(
        [model.rates(weights, np.full(weights.n_resources, lo)),
         model.rates(weights, np.full(weights.n_resources, hi))]
    )
    M = float(corner.max())
    return ModelBounds(A=A, M=M, v_min=v_min, v_max=v_max)


@dataclass(frozen=True)
class LotkaVolterra:
    """Direct-competition growth family, ``R_i(v) = rate_i - v_i``.

    The trait space doubles as the resource index set (one pressure per
    trait), with the symmetry weights ``c`` making ``c_i psi[i, j]`` a
    symmetric positive-definite interaction form.
    """

    rate: np.ndarray
    weight: np.ndarray
    bounds: ModelBounds | None = None

    family = "lotka_volterra"

    def __post_init__(self) -> None:
        for name in ("rate", "weight"):
            arr = _as_array(getattr(self, name), f"model.{name}", 1)
            if np.any(arr <= 0) or not np.all(np.isfinite(arr)):
                raise DimensionMismatch(f"model.{name}: entries must be strictly positive")
            arr.setflags(write=False)
            _freeze(self, name, arr)
        if self.rate.shape != self.weight.shape:
            raise DimensionMismatch("model: rate and weight must have equal length")

    def rates(self, weights: ResourceWeights, v: np.ndarray) -> np.ndarray:
        v = np.asarray(v, dtype=float)
        if v.shape[0] != self.rate.shape[0]:
            raise DimensionMismatch("model: Lotka-Volterra needs one resource per trait")
        return self.rate - v

    def rate_jacobian(self, weights: ResourceWeights, v: np.ndarray) -> np.ndarray:
        n = self.rate.shape[0]
        return -np.eye(n)

    def with_bounds(self, weights: ResourceWeights) -> "LotkaVolterra":
        if self.bounds is not None:
            return self
        # Pressures generated by nonnegative densities are comparable across
        # resources: v_i >= (psi_min / (r psi_max)) * ||v||_1, which yields a
        # finite upper viability threshold on the realizable cone.
        v_min = float(self.rate.min())
        r = weights.n_resources
        v_max = float(self.rate.max()) * r * weights.psi_max / weights.psi_min
        lo, hi = v_min / 2.0, 2.0 * v_max
        M = float(np.max(np.abs([self.rate - lo, self.rate - hi])))
        return replace(self, bounds=ModelBounds(A=1.0, M=M, v_min=v_min, v_max=v_max))


@dataclass(frozen=True)
class TableModel:
    """Test-only growth family: dense per-trait lookup over a v-grid.

    ``values[i]`` holds R for trait i sampled on the rectilinear grid given
    by ``v_grids`` (one strictly increasing axis per resource); evaluation
    interpolates multilinearly.  This family exists so tests can force
    degenerate rates (identically zero, constant, or increasing in v) and is
    exempt from the monotonicity requirement.
    """

    v_grids: tuple[np.ndarray, ...]
    values: np.ndarray
    bounds: ModelBounds | None = None

    family = "table"

    def __post_init__(self) -> None:
        grids = tuple(_as_array(g, "model.v_grids", 1) for g in self.v_grids)
        for g in grids:
            g.setflags(write=False)
        _freeze(self, "v_grids", grids)
        values = np.asarray(self.values, dtype=float)
        if values.shape != (values.shape[0],) + tuple(g.size for g in grids):
            raise DimensionMismatch(
                f"model.values: expected shape (n_traits, {[g.size for g in grids]}), got {values.shape}"
            )
        values.setflags(write=False)
        _freeze(self, "values", values)

    @cached_property
    def _interpolators(self):
        from scipy.interpolate import RegularGridInterpolator

        return [
            RegularGridInterpolator(self.v_grids, vals, bounds_error=False, fill_value=None)
            for vals in self.values
        ]

    def rates(self, weights: ResourceWeights, v: np.ndarray) -> np.ndarray:
        v = np.atleast_1d(np.asarray(v, dtype=float))
        return np.array([ip(v).reshape(-1)[0] for ip in self._interpolators])

    def rate_jacobian(self, weights: ResourceWeights, v: np.ndarray) -> np.ndarray:
        # central finite differences; the table is piecewise multilinear
        v = np.asarray(v, dtype=float)
        n, r = self.values.shape[0], len(self.v_grids)
        jac = np.empty((n, r))
        step = 1e-6
        for l in range(r):
            dv = np.zeros(r)
            dv[l] = step
            jac[:, l] = (self.rates(weights, v + dv) - self.rates(weights, v - dv)) / (2 * step)
        return jac

    def with_bounds(self, weights: ResourceWeights) -> "TableModel":
        if self.bounds is None:
            raise DimensionMismatch("model: table family requires declared bounds")
        return self


GrowthModel = Chemostat | LotkaVolterra | TableModel


@dataclass(frozen=True)
class InitialExponent:
    """Initial exponent h: the starting density is exp(-h_i / eps)."""

    h: np.ndarray

    def __post_init__(self) -> None:
        h = _as_array(self.h, "h", 1)
        if not np.all(np.isfinite(h)):
            raise DimensionMismatch("h: entries must be finite")
        h.setflags(write=False)
        _freeze(self, "h", h)


@dataclass(frozen=True)
class Scenario:
    """A full problem instance with consistent dimensions.

    Model bounds are auto-computed for the built-in families when not
    declared; the table family must declare them.
    """

    traits: TraitSpace
    costs: MutationCosts
    weights: ResourceWeights
    model: GrowthModel
    exponent: InitialExponent

    def __post_init__(self) -> None:
        n = self.traits.n
        if self.costs.n != n:
            raise DimensionMismatch(f"costs: table is {self.costs.n}x{self.costs.n}, expected {n}x{n}")
        if self.weights.n_traits != n:
            raise DimensionMismatch(
                f"psi: has {self.weights.n_traits} trait columns, expected {n}"
            )
        if self.exponent.h.shape[0] != n:
            raise DimensionMismatch(f"h: has {self.exponent.h.shape[0]} entries, expected {n}")
        if isinstance(self.model, Chemostat) and self.model.death.shape[0] != n:
            raise DimensionMismatch("model: chemostat parameter length must match trait count")
        if isinstance(self.model, Chemostat) and self.model.alpha.shape[0] != self.weights.n_resources:
            raise DimensionMismatch("model.alpha: length must match resource count")
        if isinstance(self.model, LotkaVolterra):
            if self.model.rate.shape[0] != n or self.weights.n_resources != n:
                raise DimensionMismatch(
                    "model: Lotka-Volterra requires one resource per trait (square psi)"
                )
        _freeze(self, "model", self.model.with_bounds(self.weights))

    @property
    def n(self) -> int:
        return self.traits.n

    @property
    def r(self) -> int:
        return self.weights.n_resources

    @property
    def bounds(self) -> ModelBounds:
        assert self.model.bounds is not None
        return self.model.bounds


def evaluate_growth(model: GrowthModel, weights: ResourceWeights, trait: int, v) -> float:
    """Growth rate of one trait at the resource vector v (componentwise >= 0)."""
    v = np.asarray(v, dtype=float)
    if np.any(v < 0):
        raise DimensionMismatch("evaluate_growth: resource vector must be nonnegative")
    return float(model.rates(weights, v)[trait])


def growth_rates(s: Scenario, v) -> np.ndarray:
    """All traits' growth rates at once."""
    return s.model.rates(s.weights, np.asarray(v, dtype=float))


def growth_jacobian(s: Scenario, v) -> np.ndarray:
    """Matrix of d rates_i / d v_l at v."""
    return s.model.rate_jacobian(s.weights, np.asarray(v, dtype=float))


def operating_window(s: Scenario) -> tuple[float, float]:
    """Componentwise resource box [v_min/2, 2 v_max] used by sampled checks."""
    b = s.bounds
    return (b.v_min / 2.0, 2.0 * b.v_max)


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    detail: str = ""


@dataclass(frozen=True)
class ValidationReport:
    checks: tuple[CheckResult, ...]

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    @property
    def failures(self) -> tuple[CheckResult, ...]:
        return tuple(c for c in self.checks if not c.passed)

    def __str__(self) -> str:
        lines = [f"[{'ok' if c.passed else 'FAIL'}] {c.name}: {c.detail}" for c in self.checks]
        return "\n".join(lines)


def validate_scenario(s: Scenario, sample_count: int = 64) -> ValidationReport:
    """Check every standing assumption on the instance; never raises.

    The monotonicity check samples the operating window and verifies the
    finite-difference resource derivatives sit in [-A, -1/A].  For the
    Lotka-Volterra family only the own-resource derivative is constrained
    (the adopted per-trait pressure reading makes cross-derivatives vanish).
    The table family runs through the same checks; it exists for tests that
    need degenerate rates, so a reported monotonicity failure there is the
    expected outcome, not a bug.
    """
    checks: list[CheckResult] = []
    bounds = s.bounds
    lo, hi = operating_window(s)

    # (a) monotonicity of R in each resource on sampled v
    rng = np.random.default_rng(0)
    samples = rng.uniform(lo, hi, size=(max(1, sample_count), s.weights.n_resources))
    step = 1e-6 * max(1.0, hi)
    pad = 1e-4 * bounds.A
    worst: tuple[float, str] | None = None
    own_only = isinstance(s.model, LotkaVolterra)
    for v in samples:
        for l in range(s.weights.n_resources):
            dv = np.zeros(s.weights.n_resources)
            dv[l] = step
            deriv = (growth_rates(s, v + dv) - growth_rates(s, v - dv)) / (2 * step)
            traits = [l] if own_only else range(s.n)
            for i in traits:
                d = float(deriv[i])
                if not (-bounds.A - pad <= d <= -1.0 / bounds.A + pad):
                    msg = f"dR[{i}]/dv[{l}] = {d:.6g} at v={np.round(v, 6).tolist()}"
                    if worst is None:
                        worst = (d, msg)
    checks.append(
        CheckResult(
            "monotonicity",
            worst is None,
            worst[1] if worst else f"derivatives within [-{bounds.A:.4g}, -{1/bounds.A:.4g}] on {len(samples)} samples",
        )
    )

    # (b) chemostat viability
    if isinstance(s.model, Chemostat):
        total = (s.model.alpha @ s.weights.psi) * s.model.gain
        ok = bool(np.all(total > s.model.death))
        detail = "c*sum(alpha*psi) > d for all traits" if ok else (
            f"trait index {int(np.argmin(total - s.model.death))} not viable"
        )
        checks.append(CheckResult("viability", ok, detail))

    # (c) Lotka-Volterra symmetry and positive definiteness
    if isinstance(s.model, LotkaVolterra):
        q = s.model.weight[:, None] * s.weights.psi
        sym_err = float(np.max(np.abs(q - q.T)))
        sym_ok = sym_err <= 1e-12 * max(1.0, float(np.max(np.abs(q))))
        checks.append(
            CheckResult("lv_symmetry", sym_ok, f"max |c_i psi_ij - c_j psi_ji| = {sym_err:.3g}")
        )
        eigs = np.linalg.eigvalsh((q + q.T) / 2.0)
        pd_ok = bool(eigs.min() > 0)
        checks.append(
            CheckResult("lv_positive_definite", pd_ok, f"interaction eigenvalues {np.round(eigs, 12).tolist()}")
        )

    # (d) strict triangle inequality
    try:
        eta = triangle_slack(s.costs)
        checks.append(CheckResult("triangle_slack", True, f"eta = {eta:.6g}"))
    except SlackViolation as exc:
        checks.append(CheckResult("triangle_slack", False, str(exc)))

    return ValidationReport(tuple(checks))
