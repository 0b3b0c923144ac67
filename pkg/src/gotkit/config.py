"""Load and validate system models from YAML files.

The file format mirrors validate_model's keyword arguments, with one
convenience: the actuation cost vectors C2 and C3 may be written either
as explicit lists or as ``{linear_gain: g}``, expanding to ``g * a`` for
actuation index a.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np
import yaml

from .errors import ConfigError
from .model import GlobalState, SystemModel, validate_model

_REQUIRED_KEYS = frozenset(
    {
        "num_semantics",
        "num_contexts",
        "num_actuations",
        "source_dynamics",
        "context_dynamics",
        "channel_success",
        "C1",
        "C2",
        "C3",
        "sampling_cost",
    }
)
_OPTIONAL_KEYS = frozenset({"initial_state"})


def _expand_actuation_costs(value, num_actuations: int, key: str) -> np.ndarray:
    if isinstance(value, dict):
        unknown = set(value) - {"linear_gain"}
        if unknown:
            raise ConfigError(f"{key}: unknown keys {sorted(unknown)}")
        if "linear_gain" not in value:
            raise ConfigError(f"{key}: mapping form requires linear_gain")
        gain = value["linear_gain"]
        if not isinstance(gain, (int, float)) or isinstance(gain, bool):
            raise ConfigError(f"{key}: linear_gain must be a number")
        return float(gain) * np.arange(num_actuations, dtype=np.float64)
    if isinstance(value, list):
        return np.asarray(value, dtype=np.float64)
    raise ConfigError(f"{key}: expected a list or {{linear_gain: g}}, got {type(value).__name__}")


def _require_int(raw: dict, key: str) -> int:
    value = raw.get(key)
    if not isinstance(value, int) or isinstance(value, bool) or value < 1:
        raise ConfigError(f"{key}: expected a positive integer, got {value!r}")
    return value


def _parse_initial_state(value, num_semantics: int, num_contexts: int) -> GlobalState:
    if not isinstance(value, dict) or set(value) != {"x", "x_hat", "phi"}:
        raise ConfigError("initial_state: expected mapping with keys x, x_hat, phi")
    state = GlobalState(x=int(value["x"]), x_hat=int(value["x_hat"]), phi=int(value["phi"]))
    if not (0 <= state.x < num_semantics and 0 <= state.x_hat < num_semantics):
        raise ConfigError("initial_state: semantic index out of range")
    if not (0 <= state.phi < num_contexts):
        raise ConfigError("initial_state: context index out of range")
    return state


def load_model(path: str | Path) -> SystemModel:
    """Read a model file, expand cost shorthands, and validate the result.

    Raises ConfigError for structural problems with the file itself and
    lets validate_model's errors propagate for bad numerics.
    """
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read model file {path}: {exc}") from exc
    try:
        raw = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ConfigError(f"model file {path} is not valid YAML: {exc}") from exc
    if not isinstance(raw, dict):
        raise ConfigError(f"model file {path} must contain a top-level mapping")

    missing = _REQUIRED_KEYS - set(raw)
    if missing:
        raise ConfigError(f"model file {path} missing keys: {sorted(missing)}")
    unknown = set(raw) - _REQUIRED_KEYS - _OPTIONAL_KEYS
    if unknown:
        raise ConfigError(f"model file {path} has unknown keys: {sorted(unknown)}")

    num_semantics = _require_int(raw, "num_semantics")
    num_contexts = _require_int(raw, "num_contexts")
    num_actuations = _require_int(raw, "num_actuations")

    try:
        source = np.asarray(raw["source_dynamics"], dtype=np.float64)
        context = np.asarray(raw["context_dynamics"], dtype=np.float64)
        status_inherent = np.asarray(raw["C1"], dtype=np.float64)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"model file {path}: non-numeric array entry ({exc})") from exc
    actuation_gain = _expand_actuation_costs(raw["C2"], num_actuations, "C2")
    actuation_inherent = _expand_actuation_costs(raw["C3"], num_actuations, "C3")

    channel_success = raw["channel_success"]
    sampling_cost = raw["sampling_cost"]
    for key, value in (("channel_success", channel_success), ("sampling_cost", sampling_cost)):
        if not isinstance(value, (int, float)) or isinstance(value, bool):
            raise ConfigError(f"{key}: expected a number, got {value!r}")

    initial_state = None
    if "initial_state" in raw:
        initial_state = _parse_initial_state(raw["initial_state"], num_semantics, num_contexts)

    return validate_model(
        num_semantics=num_semantics,
        num_contexts=num_contexts,
        num_actuations=num_actuations,
        source_dynamics=source,
        context_dynamics=context,
        channel_success=float(channel_success),
        status_inherent=status_inherent,
        actuation_gain=actuation_gain,
        actuation_inherent=actuation_inherent,
        sampling_cost=float(sampling_cost),
        initial_state=initial_state,
    )
