"""Experiment configuration: strict parsing, validation, defaults.

Config files are INI-style: named sections of key = value lines. Every
key is checked against the schema; unknown sections or keys are errors.
The fully resolved configuration (all defaults filled in) round-trips
through a plain dict, which is what the emitted manifest stores.
"""

from __future__ import annotations

import configparser
from dataclasses import dataclass, field
from typing import Any

import numpy as np

from .abm import (
    DegreeWeighted,
    ModelSpec,
    ProbabilityProportional,
    SelectionScheme,
    UniformWithoutReplacement,
    UniformWithReplacement,
    UpdateMode,
)
from .dem import IntegrationScheme, IntegratorSpec
from .kernel import (
    BoundedConfidence,
    Constant,
    InteractionKernel,
    MollifiedBC,
    Network,
    NormalMollifier,
    UniformMollifier,
    erdos_renyi,
)
from .noise import Degenerate, GaussianScaled, NoiseFamily, NoiseKind

__all__ = ["ConfigError", "ExperimentConfig", "parse_config", "config_from_dict"]


class ConfigError(ValueError):
    """Configuration syntax or schema violation."""


# section -> key -> (type, default); None default means "required if the
# section's feature is active", resolved in _build.
_SCHEMA: dict[str, dict[str, tuple[type, Any]]] = {
    "experiment": {
        "type": (str, "compare"),
        "base_seed": (int, 0),
        "h_list": (str, "1e-2,1e-3,1e-4"),
        "runs_per_h": (int, 20),
        "n_runs": (int, 500),
        "samples": (int, 100_000),
        "n_states": (int, 100),
        "b_tol": (float, 1e-9),
        "output_dir": (str, "out"),
        "error_norm": (str, "duration"),
    },
    "model": {
        "n_agents": (int, 50),
        "h": (float, 1e-5),
        "horizon": (float, 20.0),
        "update_mode": (str, "single"),
        "double_weighting": (bool, False),
    },
    "kernel": {
        "type": (str, "mollified_bc"),
        "radius": (float, 0.5),
        "value": (float, 1.0),
        "mollifier": (str, "normal"),
        "mean": (float, 0.0),
        "std": (float, 0.01),
        "lo": (float, -0.05),
        "hi": (float, 0.05),
    },
    "selection": {
        "scheme": (str, "uniform_with_replacement"),
        "p_conn": (float, 0.1),
        "network_seed": (int, 1),
        "network_file": (str, ""),
    },
    "noise": {
        "kind": (str, "none"),
        "law": (str, "gaussian"),
        "mean_per_h": (float, 0.0),
        "var_per_h": (float, 0.0),
        "value_per_h": (float, 0.0),
    },
    "dem": {
        "dt": (float, 0.01),
        "scheme": (str, ""),
    },
    "init": {
        "x0": (str, "uniform"),
        "lo": (float, -1.0),
        "hi": (float, 1.0),
        "seed": (int, 1000),
        "values": (str, ""),
    },
}

_EXPERIMENTS = ("compare", "sweep_h", "ensemble", "limitcheck")


def _coerce(section: str, key: str, raw: Any, typ: type):
    if isinstance(raw, typ):
        return raw
    s = str(raw).strip()
    try:
        if typ is bool:
            if s.lower() in ("true", "yes", "1", "on"):
                return True
            if s.lower() in ("false", "no", "0", "off"):
                return False
            raise ValueError(s)
        return typ(s)
    except ValueError:
        raise ConfigError(
            f"[{section}] {key}: cannot parse {s!r} as {typ.__name__}"
        ) from None


def _resolve(raw: dict[str, dict[str, Any]]) -> dict[str, dict[str, Any]]:
    resolved: dict[str, dict[str, Any]] = {}
    for section, entries in raw.items():
        if section not in _SCHEMA:
            raise ConfigError(f"unknown section [{section}]")
        schema = _SCHEMA[section]
        for key in entries:
            if key not in schema:
                raise ConfigError(f"unknown key {key!r} in section [{section}]")
    for section, schema in _SCHEMA.items():
        got = raw.get(section, {})
        resolved[section] = {
            key: _coerce(section, key, got[key], typ) if key in got else default
            for key, (typ, default) in schema.items()
        }
    return resolved


@dataclass(frozen=True)
class ExperimentConfig:
    """Fully resolved and validated experiment configuration."""

    raw: dict[str, dict[str, Any]] = field(repr=False)
    experiment: str = "compare"

    @property
    def base_seed(self) -> int:
        return self.raw["experiment"]["base_seed"]

    @property
    def output_dir(self) -> str:
        return self.raw["experiment"]["output_dir"]

    @property
    def error_norm(self) -> str:
        return self.raw["experiment"]["error_norm"]

    @property
    def h_list(self) -> list[float]:
        try:
            return [float(v) for v in self.raw["experiment"]["h_list"].split(",") if v.strip()]
        except ValueError:
            raise ConfigError("[experiment] h_list: expected comma-separated floats") from None

    def kernel(self) -> InteractionKernel:
        k = self.raw["kernel"]
        if k["type"] == "bounded_confidence":
            return BoundedConfidence(k["radius"])
        if k["type"] == "constant":
            return Constant(k["value"])
        if k["type"] == "mollified_bc":
            if k["mollifier"] == "normal":
                return MollifiedBC(k["radius"], NormalMollifier(k["mean"], k["std"]))
            if k["mollifier"] == "uniform":
                return MollifiedBC(k["radius"], UniformMollifier(k["lo"], k["hi"]))
            raise ConfigError(f"[kernel] mollifier: unknown value {k['mollifier']!r}")
        raise ConfigError(f"[kernel] type: unknown value {k['type']!r}")

    def network(self) -> Network:
        s = self.raw["selection"]
        if s["network_file"]:
            return Network.from_csv(s["network_file"])
        return erdos_renyi(self.raw["model"]["n_agents"], s["p_conn"], s["network_seed"])

    def selection(self) -> SelectionScheme:
        scheme = self.raw["selection"]["scheme"]
        if scheme == "uniform_with_replacement":
            return UniformWithReplacement()
        if scheme == "uniform_without_replacement":
            return UniformWithoutReplacement()
        if scheme == "degree_weighted":
            return DegreeWeighted(self.network())
        if scheme == "probability_proportional":
            return ProbabilityProportional()
        raise ConfigError(f"[selection] scheme: unknown value {scheme!r}")

    def noise(self) -> NoiseFamily:
        nz = self.raw["noise"]
        try:
            kind = NoiseKind(nz["kind"])
        except ValueError:
            raise ConfigError(f"[noise] kind: unknown value {nz['kind']!r}") from None
        if kind is NoiseKind.NONE:
            return NoiseFamily()
        if nz["law"] == "gaussian":
            law = GaussianScaled(nz["mean_per_h"], nz["var_per_h"])
        elif nz["law"] == "degenerate":
            law = Degenerate(nz["value_per_h"])
        else:
            raise ConfigError(f"[noise] law: unknown value {nz['law']!r}")
        try:
            return NoiseFamily(kind, law)
        except ValueError as e:
            raise ConfigError(f"[noise] {e}") from None

    def model_spec(self) -> ModelSpec:
        m = self.raw["model"]
        try:
            mode = UpdateMode(m["update_mode"])
        except ValueError:
            raise ConfigError(f"[model] update_mode: unknown value {m['update_mode']!r}") from None
        try:
            return ModelSpec(
                n_agents=m["n_agents"],
                h=m["h"],
                horizon=m["horizon"],
                kernel=self.kernel(),
                selection=self.selection(),
                update_mode=mode,
                noise=self.noise(),
                double_weighting=m["double_weighting"],
            )
        except ValueError as e:
            raise ConfigError(f"[model] {e}") from None

    def integrator(self, needs_noise: bool) -> IntegratorSpec:
        d = self.raw["dem"]
        name = d["scheme"]
        if not name:
            scheme = (
                IntegrationScheme.EULER_MARUYAMA if needs_noise else IntegrationScheme.FORWARD_EULER
            )
        else:
            try:
                scheme = IntegrationScheme(name)
            except ValueError:
                raise ConfigError(f"[dem] scheme: unknown value {name!r}") from None
        try:
            return IntegratorSpec(dt=d["dt"], scheme=scheme)
        except ValueError as e:
            raise ConfigError(f"[dem] {e}") from None

    def x0(self) -> np.ndarray:
        init = self.raw["init"]
        n = self.raw["model"]["n_agents"]
        if init["x0"] == "uniform":
            rng = np.random.default_rng(init["seed"])
            return rng.uniform(init["lo"], init["hi"], n)
        if init["x0"] == "explicit":
            try:
                vals = np.array([float(v) for v in init["values"].split(",")])
            except ValueError:
                raise ConfigError("[init] values: expected comma-separated floats") from None
            if len(vals) != n:
                raise ConfigError(f"[init] values: expected {n} entries, got {len(vals)}")
            return vals
        raise ConfigError(f"[init] x0: unknown value {init['x0']!r}")

    def validate(self) -> None:
        """Cross-field validation; raises ConfigError on the first problem."""
        if self.experiment not in _EXPERIMENTS:
            raise ConfigError(
                f"[experiment] type: unknown value {self.experiment!r}; "
                f"expected one of {', '.join(_EXPERIMENTS)}"
            )
        if self.error_norm not in ("duration", "samples"):
            raise ConfigError(f"[experiment] error_norm: unknown value {self.error_norm!r}")
        spec = self.model_spec()
        self.x0()
        if self.experiment in ("compare", "sweep_h", "ensemble"):
            from .dem import build_limit

            try:
                model = build_limit(spec)
            except ValueError as e:
                raise ConfigError(str(e)) from None
            self.integrator(model.has_diffusion)
        if self.experiment in ("sweep_h", "limitcheck") and not self.h_list:
            raise ConfigError("[experiment] h_list: must be non-empty")

    def to_dict(self) -> dict[str, dict[str, Any]]:
        return {s: dict(v) for s, v in self.raw.items()}


def config_from_dict(data: dict[str, dict[str, Any]]) -> ExperimentConfig:
    resolved = _resolve(data)
    cfg = ExperimentConfig(raw=resolved, experiment=resolved["experiment"]["type"])
    cfg.validate()
    return cfg


def parse_config(text: str) -> ExperimentConfig:
    """Parse and validate INI-style configuration text."""
    parser = configparser.ConfigParser(interpolation=None)
    try:
        parser.read_string(text)
    except configparser.Error as e:
        raise ConfigError(f"config syntax error: {e}") from None
    raw = {section: dict(parser[section]) for section in parser.sections()}
    return config_from_dict(raw)
