"""JSON configuration ingestion.

A config document fully describes an experiment: state space, network,
likelihood models, truth process, strategies, run parameters, and an
optional sweep section.  The document is schema-validated up front
(unknown keys are rejected, with the JSON path reported) and then lowered
into the toolkit's domain objects.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import jsonschema
import numpy as np

from .core import (
    FiniteAlphabetLikelihood,
    FiniteAlphabetTrueModel,
    GaussianLikelihood,
    GaussianTrueModel,
    StateSpace,
)
from .errors import ConfigError
from .network import generate
from .sim import SimConfig, TruthProcess
from .strategies import Strategy

_NUMBER_ROW = {"type": "array", "items": {"type": "number"}, "minItems": 1}
_MATRIX = {"type": "array", "items": _NUMBER_ROW, "minItems": 1}

SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "type": "object",
    "additionalProperties": False,
    "required": ["states", "network", "likelihoods", "truth", "strategies", "run"],
    "properties": {
        "states": {
            "type": "object",
            "additionalProperties": False,
            "required": ["labels"],
            "properties": {
                "labels": {
                    "type": "array",
                    "items": {"type": "string"},
                    "minItems": 2,
                },
                "values": _NUMBER_ROW,
            },
        },
        "network": {
            "type": "object",
            "additionalProperties": False,
            "required": ["topology"],
            "properties": {
                "topology": {
                    "enum": [
                        "full",
                        "random-strongly-connected",
                        "ring-with-self-loops",
                        "explicit",
                    ]
                },
                "n": {"type": "integer", "minimum": 2},
                "seed": {"type": "integer", "minimum": 0},
                "matrix": _MATRIX,
            },
        },
        "likelihoods": {
            "type": "object",
            "additionalProperties": False,
            "required": ["kind"],
            "properties": {
                "kind": {"enum": ["gaussian", "finite-alphabet"]},
                "means": _MATRIX,
                "sigma": {"type": "number", "exclusiveMinimum": 0},
                "tables": {"type": "array", "items": _MATRIX, "minItems": 1},
            },
        },
        "true_model": {
            "type": "object",
            "additionalProperties": False,
            "required": ["kind"],
            "properties": {
                "kind": {"enum": ["gaussian", "finite-alphabet"]},
                "means": _NUMBER_ROW,
                "sigma": {"type": "number", "exclusiveMinimum": 0},
                "table": _MATRIX,
            },
        },
        "truth": {
            "type": "object",
            "additionalProperties": False,
            "required": ["kind"],
            "properties": {
                "kind": {"enum": ["constant", "markov-equal-exit", "periodic-switch"]},
                "state": {"type": "integer", "minimum": 0},
                "alpha0": {"type": "number", "minimum": 0},
                "T0": {"type": "integer", "minimum": 1},
            },
        },
        "strategies": {
            "type": "array",
            "minItems": 1,
            "items": {
                "type": "object",
                "additionalProperties": False,
                "required": ["kind"],
                "properties": {
                    "kind": {
                        "enum": [
                            "alpha-hmm",
                            "hmm",
                            "bayes",
                            "asl",
                            "linearized-alpha-hmm",
                            "generalized",
                        ]
                    },
                    "alpha": {"type": "number", "exclusiveMinimum": 0},
                    "delta": {"type": "number", "exclusiveMinimum": 0, "maximum": 1},
                    "delta1": {"type": "number", "minimum": 0, "maximum": 1},
                    "delta2": {"type": "number", "minimum": 0},
                    "transition": _MATRIX,
                },
            },
        },
        "run": {
            "type": "object",
            "additionalProperties": False,
            "required": ["horizon", "seed"],
            "properties": {
                "horizon": {"type": "integer", "minimum": 1},
                "replications": {"type": "integer", "minimum": 1},
                "seed": {"type": "integer", "minimum": 0},
                "burn_in": {"type": "integer", "minimum": 0},
                "record_trajectories": {"type": "boolean"},
            },
        },
        "sweep": {
            "type": "object",
            "additionalProperties": False,
            "required": ["alpha_grid", "sigma_list"],
            "properties": {
                "alpha_grid": _NUMBER_ROW,
                "sigma_list": _NUMBER_ROW,
            },
        },
    },
}


@dataclass(frozen=True)
class LoadedConfig:
    """A validated document lowered to domain objects."""

    sim: SimConfig
    sweep_alpha_grid: tuple[float, ...] | None
    sweep_sigma_list: tuple[float, ...] | None
    raw: dict

    @property
    def has_sweep(self) -> bool:
        return self.sweep_alpha_grid is not None


def validate_document(doc: dict) -> None:
    validator = jsonschema.Draft202012Validator(SCHEMA)
    errors = sorted(validator.iter_errors(doc), key=lambda e: list(e.absolute_path))
    if errors:
        first = errors[0]
        raise ConfigError(f"config invalid at {first.json_path}: {first.message}")


def _build_strategy(entry: dict) -> Strategy:
    kind = entry["kind"]
    if kind == "alpha-hmm":
        return Strategy.alpha_hmm(_require(entry, "alpha", kind))
    if kind == "linearized-alpha-hmm":
        return Strategy.linearized_alpha_hmm(_require(entry, "alpha", kind))
    if kind == "asl":
        return Strategy.asl(_require(entry, "delta", kind))
    if kind == "hmm":
        return Strategy.hmm(np.asarray(_require(entry, "transition", kind), dtype=float))
    if kind == "generalized":
        return Strategy.generalized(
            _require(entry, "delta1", kind), _require(entry, "delta2", kind)
        )
    return Strategy.bayes()


def _require(section: dict, key: str, context: str):
    if key not in section:
        raise ConfigError(f"{context!r} requires {key!r}")
    return section[key]


def build(doc: dict) -> LoadedConfig:
    """Lower a validated document into a :class:`SimConfig` (plus sweep grids)."""
    validate_document(doc)
    try:
        states = StateSpace(
            labels=tuple(doc["states"]["labels"]),
            values=np.asarray(doc["states"]["values"], dtype=float)
            if "values" in doc["states"]
            else None,
        )

        net_sec = doc["network"]
        if net_sec["topology"] == "explicit":
            net = generate("explicit", n=2, matrix=np.asarray(_require(net_sec, "matrix", "explicit network"), dtype=float))
        else:
            net = generate(
                net_sec["topology"],
                n=_require(net_sec, "n", net_sec["topology"]),
                seed=net_sec.get("seed", 0),
            )

        lik_sec = doc["likelihoods"]
        if lik_sec["kind"] == "gaussian":
            models = GaussianLikelihood(
                means=np.asarray(_require(lik_sec, "means", "gaussian likelihoods"), dtype=float),
                sigma=_require(lik_sec, "sigma", "gaussian likelihoods"),
            )
        else:
            models = FiniteAlphabetLikelihood(
                tables=np.asarray(_require(lik_sec, "tables", "finite-alphabet likelihoods"), dtype=float)
            )

        if "true_model" in doc:
            tm_sec = doc["true_model"]
            if tm_sec["kind"] == "gaussian":
                true_model = GaussianTrueModel(
                    means=np.asarray(_require(tm_sec, "means", "gaussian true model"), dtype=float),
                    sigma=_require(tm_sec, "sigma", "gaussian true model"),
                )
            else:
                true_model = FiniteAlphabetTrueModel(
                    table=np.asarray(_require(tm_sec, "table", "finite-alphabet true model"), dtype=float)
                )
        elif models.kind == "gaussian":
            # default observation law: state values as means, shared sigma
            if states.values is None:
                raise ConfigError(
                    "gaussian configs need states.values (or an explicit true_model)"
                )
            true_model = GaussianTrueModel(means=states.values, sigma=models.sigma)
        else:
            raise ConfigError("finite-alphabet configs need an explicit true_model")

        truth_sec = doc["truth"]
        kind = truth_sec["kind"]
        if kind == "constant":
            truth = TruthProcess.constant(_require(truth_sec, "state", kind))
        elif kind == "markov-equal-exit":
            truth = TruthProcess.markov_equal_exit(_require(truth_sec, "alpha0", kind))
        else:
            truth = TruthProcess.periodic_switch(_require(truth_sec, "T0", kind))

        run_sec = doc["run"]
        sim = SimConfig(
            states=states,
            network=net,
            models=models,
            true_model=true_model,
            truth=truth,
            strategies=tuple(_build_strategy(s) for s in doc["strategies"]),
            horizon=run_sec["horizon"],
            replications=run_sec.get("replications", 1),
            seed=run_sec["seed"],
            burn_in=run_sec.get("burn_in"),
            record_trajectories=run_sec.get("record_trajectories", False),
        )
        sim.validate()
    except ConfigError:
        raise
    except Exception as exc:
        raise ConfigError(str(exc)) from exc

    sweep_sec = doc.get("sweep")
    return LoadedConfig(
        sim=sim,
        sweep_alpha_grid=tuple(sweep_sec["alpha_grid"]) if sweep_sec else None,
        sweep_sigma_list=tuple(sweep_sec["sigma_list"]) if sweep_sec else None,
        raw=doc,
    )


def load(path) -> LoadedConfig:
    path = Path(path)
    try:
        doc = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: not valid JSON: {exc}") from exc
    return build(doc)
