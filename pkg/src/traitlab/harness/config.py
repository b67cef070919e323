"""YAML configuration ingestion and serialization for scenario runs.

Schema (all keys under the document root):

    traits: [label, ...]                # optional; defaults to "1".."n"
    costs:  [[0, 1, ...], ...]          # n x n, "inf" allowed off-diagonal
    psi:    [[...], ...]                # r x n resource weights
    h:      [...]                       # initial exponent
    model:
      family: chemostat | lotka_volterra | table
      ... family parameters ...
    bounds: {A, M, v_min, v_max}        # optional; derived when omitted
    run:    {eps_list, t_max, dt_out, seed}   # optional with defaults
    pde:    {...}                       # optional; consumed by the pde subcommand

Errors carry the offending key path.  parse -> serialize -> parse is the
identity on the parsed objects.
"""

from dataclasses import dataclass, replace

import numpy as np
import yaml

from ..core import (
    Chemostat,
    InitialExponent,
    LotkaVolterra,
    ModelBounds,
    MutationCosts,
    ResourceWeights,
    Scenario,
    TableModel,
    TraitSpace,
)
from ..errors import ConfigError, DimensionMismatch, SlackViolation

__all__ = ["RunParams", "parse_config", "parse_config_dict", "serialize_config", "write_config"]

DEFAULT_RUN = {"eps_list": [0.1], "t_max": 5.0, "dt_out": 0.01, "seed": 0}


@dataclass(frozen=True)
class RunParams:
    eps_list: tuple[float, ...]
    t_max: float
    dt_out: float
    seed: int


def _fail(path: str, message: str):
    raise ConfigError(f"{path}: {message}")


def _require(mapping, key, path):
    if not isinstance(mapping, dict):
        _fail(path, f"expected a mapping, got {type(mapping).__name__}")
    if key not in mapping:
        _fail(path, f"missing required key '{key}'")
    return mapping[key]


def _number(value, path) -> float:
    if isinstance(value, str):
        try:
            return float(value)  # accepts "inf", "1e-3", ...
        except ValueError:
            _fail(path, f"not a number: {value!r}")
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        _fail(path, f"not a number: {value!r}")
    return float(value)


def _vector(value, path) -> np.ndarray:
    if not isinstance(value, (list, tuple)) or not value:
        _fail(path, "expected a non-empty list of numbers")
    return np.array([_number(v, f"{path}[{k}]") for k, v in enumerate(value)])


def _matrix(value, path) -> np.ndarray:
    if not isinstance(value, (list, tuple)) or not value:
        _fail(path, "expected a non-empty list of rows")
    rows = [_vector(row, f"{path}[{k}]") for k, row in enumerate(value)]
    if len({len(r) for r in rows}) != 1:
        _fail(path, f"ragged rows with lengths {[len(r) for r in rows]}")
    return np.vstack(rows)


def _parse_bounds(node, path) -> ModelBounds | None:
    if node is None:
        return None
    return ModelBounds(
        A=_number(_require(node, "A", path), f"{path}.A"),
        M=_number(_require(node, "M", path), f"{path}.M"),
        v_min=_number(_require(node, "v_min", path), f"{path}.v_min"),
        v_max=_number(_require(node, "v_max", path), f"{path}.v_max"),
    )


def _parse_model(node, path):
    family = _require(node, "family", path)
    if family == "chemostat":
        return Chemostat(
            death=_vector(_require(node, "death", path), f"{path}.death"),
            gain=_vector(_require(node, "gain", path), f"{path}.gain"),
            alpha=_vector(_require(node, "alpha", path), f"{path}.alpha"),
        )
    if family == "lotka_volterra":
        return LotkaVolterra(
            rate=_vector(_require(node, "rate", path), f"{path}.rate"),
            weight=_vector(_require(node, "weight", path), f"{path}.weight"),
        )
    if family == "table":
        grids = _require(node, "v_grids", path)
        if not isinstance(grids, (list, tuple)):
            _fail(f"{path}.v_grids", "expected a list of per-resource grids")
        v_grids = tuple(_vector(g, f"{path}.v_grids[{k}]") for k, g in enumerate(grids))
        values = np.array(_require(node, "values", path), dtype=float)
        bounds = _parse_bounds(_require(node, "bounds", path), f"{path}.bounds")
        return TableModel(v_grids=v_grids, values=values, bounds=bounds)
    _fail(f"{path}.family", f"unknown model family {family!r}")


def parse_config_dict(doc: dict) -> tuple[Scenario, RunParams]:
    """Build a validated Scenario and run parameters from a parsed mapping."""
    if not isinstance(doc, dict):
        _fail("<root>", "config document must be a mapping")
    costs_arr = _matrix(_require(doc, "costs", "<root>"), "costs")
    psi_arr = _matrix(_require(doc, "psi", "<root>"), "psi")
    if np.any(psi_arr <= 0):
        bad = np.argwhere(psi_arr <= 0)[0]
        _fail(f"psi[{bad[0]}][{bad[1]}]", f"non-positive weight {psi_arr[tuple(bad)]}")
    h_arr = _vector(_require(doc, "h", "<root>"), "h")
    n = costs_arr.shape[0]
    labels = doc.get("traits", [str(i + 1) for i in range(n)])
    if not isinstance(labels, (list, tuple)) or len(labels) != n:
        _fail("traits", f"expected {n} labels, got {labels!r}")
    model = _parse_model(_require(doc, "model", "<root>"), "model")
    top_bounds = _parse_bounds(doc.get("bounds"), "bounds")
    if top_bounds is not None and model.bounds is None:
        model = replace(model, bounds=top_bounds)
    try:
        scenario = Scenario(
            traits=TraitSpace(tuple(str(x) for x in labels)),
            costs=MutationCosts(costs_arr),
            weights=ResourceWeights(psi_arr),
            model=model,
            exponent=InitialExponent(h_arr),
        )
    except (DimensionMismatch, SlackViolation) as exc:
        raise ConfigError(str(exc)) from exc

    run_node = doc.get("run") or {}
    if not isinstance(run_node, dict):
        _fail("run", "expected a mapping")
    merged = {**DEFAULT_RUN, **run_node}
    eps_node = merged["eps_list"]
    if not isinstance(eps_node, (list, tuple)) or not eps_node:
        _fail("run.eps_list", "expected a non-empty list")
    run = RunParams(
        eps_list=tuple(_number(e, f"run.eps_list[{k}]") for k, e in enumerate(eps_node)),
        t_max=_number(merged["t_max"], "run.t_max"),
        dt_out=_number(merged["dt_out"], "run.dt_out"),
        seed=int(_number(merged["seed"], "run.seed")),
    )
    return scenario, run


def parse_config(path: str) -> tuple[Scenario, RunParams]:
    """Parse a YAML config file; errors carry the offending key path."""
    try:
        with open(path) as fh:
            doc = yaml.safe_load(fh)
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}")
    except yaml.YAMLError as exc:
        raise ConfigError(f"{path}: invalid YAML: {exc}")
    return parse_config_dict(doc)


def _encode_number(x: float):
    if np.isinf(x):
        return "inf"
    if float(x).is_integer() and abs(x) < 1e15:
        return int(x)
    return float(x)


def _encode_matrix(m: np.ndarray) -> list:
    return [[_encode_number(x) for x in row] for row in np.atleast_2d(m)]


def _bounds_doc(b: ModelBounds) -> dict:
    return {"A": float(b.A), "M": float(b.M), "v_min": float(b.v_min), "v_max": float(b.v_max)}


def serialize_config(scenario: Scenario, run: RunParams) -> dict:
    """Plain mapping whose YAML round-trips through parse_config."""
    model = scenario.model
    if isinstance(model, Chemostat):
        model_doc = {
            "family": "chemostat",
            "death": [_encode_number(x) for x in model.death],
            "gain": [_encode_number(x) for x in model.gain],
            "alpha": [_encode_number(x) for x in model.alpha],
        }
    elif isinstance(model, LotkaVolterra):
        model_doc = {
            "family": "lotka_volterra",
            "rate": [_encode_number(x) for x in model.rate],
            "weight": [_encode_number(x) for x in model.weight],
        }
    elif isinstance(model, TableModel):
        model_doc = {
            "family": "table",
            "v_grids": [[_encode_number(x) for x in g] for g in model.v_grids],
            "values": np.asarray(model.values).tolist(),
            "bounds": _bounds_doc(model.bounds),
        }
    else:
        raise ConfigError(f"cannot serialize model {type(model).__name__}")
    return {
        "traits": list(scenario.traits.labels),
        "costs": _encode_matrix(scenario.costs.table),
        "psi": _encode_matrix(scenario.weights.psi),
        "h": [_encode_number(x) for x in scenario.exponent.h],
        "model": model_doc,
        "bounds": _bounds_doc(scenario.bounds),
        "run": {
            "eps_list": [float(e) for e in run.eps_list],
            "t_max": float(run.t_max),
            "dt_out": float(run.dt_out),
            "seed": int(run.seed),
        },
    }


def write_config(path: str, scenario: Scenario, run: RunParams) -> None:
    with open(path, "w") as fh:
        yaml.safe_dump(serialize_config(scenario, run), fh, sort_keys=False)
