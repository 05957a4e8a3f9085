"""Scenario configuration: a single JSON document describing the plant, the
controller weight file, the initial and disturbance boxes, horizons, the
partition counts, and the strategy.

Two reference scenarios ship with the package (``vehicle.json`` and
``quadrotor6d.json``); schema documents for scenarios and weight files live
next to them under ``nnreach/data``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

import numpy as np

from .errors import ConfigError
from .intervals import Box
from .network import FeedForwardNetwork, load_network
from .systems import LinearSystemModel, SystemModel, VehicleModel

STRATEGY_CHOICES = (
    "global",
    "hybrid",
    "local",
    "frozen-hybrid",
    "linear",
    "linear-hybrid",
)


def data_path(name: str) -> Path:
    """Path of a bundled data file (scenarios, controllers, schemas)."""
    return Path(resources.files("nnreach").joinpath("data", name))


@dataclass(frozen=True)
class Obstacle:
    center: tuple
    radius: float
    padding: float = 0.0
    dims: tuple = (0, 1)

    def __post_init__(self):
        if self.radius <= 0:
            raise ConfigError("obstacle radius must be positive")
        if self.padding < 0:
            raise ConfigError("obstacle padding must be nonnegative")
        if len(self.dims) != 2:
            raise ConfigError("obstacles are defined on a coordinate pair")


def _box(doc, what, dim=None) -> Box:
    try:
        box = Box(np.asarray(doc["lower"], float), np.asarray(doc["upper"], float))
    except (KeyError, TypeError) as e:
        raise ConfigError(f"{what} must have 'lower' and 'upper' arrays") from e
    except ValueError as e:
        raise ConfigError(f"{what}: {e}") from e
    if dim is not None and box.dim != dim:
        raise ConfigError(f"{what} has dimension {box.dim}, expected {dim}")
    return box


def _system(doc) -> SystemModel:
    kind = doc.get("type")
    if kind == "vehicle":
        return VehicleModel(l_f=doc.get("l_f", 1.0), l_r=doc.get("l_r", 1.0))
    if kind == "linear":
        try:
            return LinearSystemModel(
                A=doc["A"],
                B=doc["B"],
                C=doc.get("C"),
                c=doc.get("c"),
                name=doc.get("name", "linear"),
                state_labels=doc.get("state_labels"),
            )
        except KeyError as e:
            raise ConfigError(f"linear system is missing matrix {e}") from e
    raise ConfigError(f"unknown system type {kind!r}; use 'vehicle' or 'linear'")


@dataclass
class ScenarioConfig:
    """Validated scenario: everything the reach driver needs for one run."""

    name: str
    system: SystemModel
    network: FeedForwardNetwork
    initial_set: Box
    disturbance: Box
    horizon: float
    actuation_step: float
    integrator: "IntegratorConfig"
    partitions: int
    subpartitions: int
    strategy: str
    obstacles: list
    raw: dict

    def __post_init__(self):
        from .reach import IntegratorConfig  # cycle guard

        if not isinstance(self.integrator, IntegratorConfig):
            raise ConfigError("integrator must be an IntegratorConfig")
        if self.horizon < 0:
            raise ConfigError("horizon T must be nonnegative")
        if self.actuation_step <= 0:
            raise ConfigError("actuation step must be positive")
        if self.partitions < 1 or self.subpartitions < 1:
            raise ConfigError("partition counts must be >= 1")
        if self.strategy not in STRATEGY_CHOICES:
            raise ConfigError(
                f"unknown strategy {self.strategy!r}; "
                f"choose from {', '.join(STRATEGY_CHOICES)}"
            )
        ratio = self.actuation_step / self.integrator.step
        if abs(ratio - round(ratio)) > 1e-9:
            raise ConfigError(
                f"actuation step {self.actuation_step} must be an integer "
                f"multiple of the integrator step {self.integrator.step}"
            )
        if self.initial_set.dim != self.system.n:
            raise ConfigError(
                f"initial set has dimension {self.initial_set.dim}, "
                f"plant state has {self.system.n}"
            )
        if self.disturbance.dim != self.system.q:
            raise ConfigError(
                f"disturbance box has dimension {self.disturbance.dim}, "
                f"plant expects {self.system.q}"
            )
        if self.network.input_dim != self.system.n:
            raise ConfigError(
                f"network expects {self.network.input_dim} inputs, "
                f"plant state has {self.system.n}"
            )
        if self.network.output_dim != self.system.p:
            raise ConfigError(
                f"network produces {self.network.output_dim} outputs, "
                f"plant expects {self.system.p} controls"
            )
        if self.strategy in ("linear", "linear-hybrid") and not isinstance(
            self.system, LinearSystemModel
        ):
            raise ConfigError(f"strategy {self.strategy!r} requires a linear plant")

    def snapshot(self) -> dict:
        """The resolved configuration document (used for reproducible artifacts)."""
        return self.raw


def _from_document(doc: dict, base_dir: Path, overrides=None) -> ScenarioConfig:
    from .reach import IntegratorConfig

    doc = dict(doc)
    if overrides:
        for key, value in overrides.items():
            if value is None:
                continue
            if key in ("strategy", "horizon", "actuation_step", "partitions", "subpartitions"):
                doc[key] = value
            elif key in ("method", "step"):
                doc.setdefault("integrator", {})
                doc["integrator"] = dict(doc["integrator"])
                doc["integrator"][key] = value
            else:
                raise ConfigError(f"unknown override {key!r}")

    for required in ("system", "network", "initial_set", "horizon", "actuation_step"):
        if required not in doc:
            raise ConfigError(f"scenario is missing required field {required!r}")

    system = _system(doc["system"])
    net_path = Path(doc["network"])
    if not net_path.is_absolute():
        net_path = base_dir / net_path
    if not net_path.exists():
        raise ConfigError(f"network weight file not found: {net_path}")
    network = load_network(net_path)

    integ_doc = doc.get("integrator", {})
    integrator = IntegratorConfig(
        method=integ_doc.get("method", "rk4"), step=integ_doc.get("step", 0.01)
    )

    disturbance_doc = doc.get(
        "disturbance", {"lower": [0.0] * system.q, "upper": [0.0] * system.q}
    )

    obstacles = []
    for entry in doc.get("obstacles", []):
        try:
            obstacles.append(
                Obstacle(
                    center=tuple(entry["center"]),
                    radius=float(entry["radius"]),
                    padding=float(entry.get("padding", 0.0)),
                    dims=tuple(entry.get("dims", (0, 1))),
                )
            )
        except KeyError as e:
            raise ConfigError(f"obstacle entry is missing field {e}") from e

    resolved = dict(doc)
    resolved["network"] = str(net_path)
    resolved["integrator"] = {"method": integrator.method, "step": integrator.step}
    resolved["disturbance"] = disturbance_doc
    resolved.setdefault("partitions", 1)
    resolved.setdefault("subpartitions", 1)
    resolved.setdefault("strategy", "hybrid")

    return ScenarioConfig(
        name=doc.get("name", "scenario"),
        system=system,
        network=network,
        initial_set=_box(doc["initial_set"], "initial_set", system.n),
        disturbance=_box(disturbance_doc, "disturbance", system.q),
        horizon=float(doc["horizon"]),
        actuation_step=float(doc["actuation_step"]),
        integrator=integrator,
        partitions=int(resolved["partitions"]),
        subpartitions=int(resolved["subpartitions"]),
        strategy=resolved["strategy"],
        obstacles=obstacles,
        raw=resolved,
    )


def load_scenario(path, overrides=None) -> ScenarioConfig:
    """Load a scenario JSON file; bare names fall back to the bundled ones."""
    p = Path(path)
    if not p.exists():
        bundled = data_path(p.name)
        if p.name == str(p) and bundled.exists():
            p = bundled
        else:
            raise ConfigError(f"scenario file not found: {path}")
    try:
        with open(p) as fh:
            doc = json.load(fh)
    except json.JSONDecodeError as e:
        raise ConfigError(f"cannot parse scenario file {p}: {e}") from e
    return _from_document(doc, p.parent, overrides)
