"""
Strict JSON experiment configuration.

A config file holds one object describing one experiment::

    {"kind": "quantile", "params": {...}, "algorithm": "vfi", "tol": 1e-8}

Unknown fields are rejected at every level, and model parameters are
validated by building the model before any solve starts.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .core import FiniteMDP, MarkovStructure
from .data_valuation import model_from_dict
from .errors import DPError, ParameterError
from .nonlinear_discount import (
    NonlinearDiscountModel,
    affine_discount,
    capped_linear_discount,
    linear_discount,
    power_discount,
    sqrt_tail_discount,
)
from .quantile import QuantileModel
from .risk_sensitive import FirmExitParams, RiskSensitiveModel, build_firm_exit_model

__all__ = ["ConfigError", "ExperimentConfig", "StudyOptions", "ValidateOptions",
           "load_config", "parse_config", "build_model", "KINDS"]

KINDS = ("mdp", "risk_sensitive", "firm_exit", "quantile", "nonlinear_discount",
         "data_valuation")
ALGORITHMS = ("vfi", "hpi", "opi")


class ConfigError(DPError, ValueError):
    """Unreadable or invalid configuration; the message names the offending field."""


@dataclass
class StudyOptions:
    theta_min: float = -2.0
    theta_max: float = -0.1
    theta_num: int = 20
    stationary_scale: float = 150.0
    n_iterates: int = 3
    opi_m: int = 10
    repeats: int = 3


@dataclass
class ValidateOptions:
    trials: int = 500
    property_only: bool = False


@dataclass
class ExperimentConfig:
    kind: str
    params: dict = field(default_factory=dict)
    algorithm: str = "vfi"
    m: list | None = None
    tol: float | None = None
    max_iter: int = 100_000
    seed: int = 0
    output_dir: str = "out"
    study: StudyOptions = field(default_factory=StudyOptions)
    validate: ValidateOptions = field(default_factory=ValidateOptions)


def _check_keys(obj, allowed, where):
    if not isinstance(obj, dict):
        raise ConfigError(f"{where}: expected an object, got {type(obj).__name__}")
    unknown = sorted(set(obj) - set(allowed))
    if unknown:
        raise ConfigError(f"{where}: unknown field(s) {', '.join(unknown)}")


def _number(value, where, integer=False):
    ok = isinstance(value, int) if integer else isinstance(value, (int, float))
    if isinstance(value, bool) or not ok:
        raise ConfigError(f"{where}: expected {'an integer' if integer else 'a number'}, "
                          f"got {value!r}")
    return value


def _options(cls, data, where):
    names = cls.__dataclass_fields__
    _check_keys(data, names, where)
    out = cls()
    for key, value in data.items():
        default = getattr(out, key)
        if isinstance(default, bool):
            if not isinstance(value, bool):
                raise ConfigError(f"{where}.{key}: expected true or false, got {value!r}")
        else:
            _number(value, f"{where}.{key}", integer=isinstance(default, int))
        setattr(out, key, value)
    return out


def parse_config(data):
    """Validate a decoded JSON object and return an :class:`ExperimentConfig`."""
    _check_keys(data, ExperimentConfig.__dataclass_fields__, "config")
    if "kind" not in data:
        raise ConfigError("config: missing field kind")
    kind = data["kind"]
    if kind not in KINDS:
        raise ConfigError(f"kind: expected one of {', '.join(KINDS)}, got {kind!r}")
    cfg = ExperimentConfig(kind=kind)
    params = data.get("params", {})
    if not isinstance(params, dict):
        raise ConfigError("params: expected an object")
    cfg.params = params
    if "algorithm" in data:
        if data["algorithm"] not in ALGORITHMS:
            raise ConfigError(f"algorithm: expected one of {', '.join(ALGORITHMS)}, "
                              f"got {data['algorithm']!r}")
        cfg.algorithm = data["algorithm"]
    if "m" in data:
        m = data["m"] if isinstance(data["m"], list) else [data["m"]]
        cfg.m = [_number(x, "m", integer=True) for x in m]
    if "tol" in data:
        cfg.tol = float(_number(data["tol"], "tol"))
    if "max_iter" in data:
        cfg.max_iter = _number(data["max_iter"], "max_iter", integer=True)
    if "seed" in data:
        cfg.seed = _number(data["seed"], "seed", integer=True)
    if "output_dir" in data:
        if not isinstance(data["output_dir"], str):
            raise ConfigError("output_dir: expected a string")
        cfg.output_dir = data["output_dir"]
    if "study" in data:
        cfg.study = _options(StudyOptions, data["study"], "study")
    if "validate" in data:
        cfg.validate = _options(ValidateOptions, data["validate"], "validate")
    check_common(cfg)
    return cfg


def check_common(cfg):
    """Range checks shared by file and command-line values."""
    if cfg.tol is not None and not cfg.tol > 0:
        raise ConfigError(f"tol: must be positive, got {cfg.tol}")
    if cfg.max_iter < 1:
        raise ConfigError(f"max_iter: must be at least 1, got {cfg.max_iter}")
    if cfg.m is not None and (not cfg.m or any(m < 1 for m in cfg.m)):
        raise ConfigError(f"m: entries must be positive integers, got {cfg.m}")
    if cfg.seed < 0 or cfg.seed >= 2**64:
        raise ConfigError(f"seed: must fit in an unsigned 64-bit integer, got {cfg.seed}")
    st = cfg.study
    if st.theta_num < 10:
        raise ConfigError(f"study.theta_num: need at least 10 values, got {st.theta_num}")
    if not st.theta_min < st.theta_max < 0:
        raise ConfigError("study.theta_min, study.theta_max: need theta_min < theta_max < 0")
    if st.n_iterates < 1 or st.opi_m < 1 or st.repeats < 1:
        raise ConfigError("study: n_iterates, opi_m and repeats must be positive")
    if cfg.validate.trials < 1:
        raise ConfigError("validate.trials: must be positive")


def load_config(path):
    """Read and validate a config file; decoding errors report line and column."""
    try:
        with open(path) as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"{path}: cannot read config ({exc.strerror})") from exc
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}:{exc.lineno}:{exc.colno}: invalid JSON ({exc.msg})") from exc
    return parse_config(data)


# model construction

def _array(params, key, kind, ndim=None):
    if key not in params:
        raise ConfigError(f"params.{key}: required for kind {kind}")
    raw = params[key]
    try:
        arr = np.array(raw, dtype=float)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"params.{key}: not a numeric array") from exc
    if ndim is not None and arr.ndim != ndim:
        raise ConfigError(f"params.{key}: expected {ndim} dimensions, got {arr.ndim}")
    return arr


def _reward_and_mask(params, kind):
    """Rewards with ``null`` marking infeasible pairs; an explicit mask overrides."""
    r = _array(params, "reward", kind, ndim=2)
    feasible = ~np.isnan(r)
    if "feasible" in params:
        feasible = np.array(params["feasible"], dtype=bool)
        if feasible.shape != r.shape:
            raise ConfigError(f"params.feasible: shape {feasible.shape} differs from reward "
                              f"shape {r.shape}")
    if np.isnan(r[feasible]).any():
        raise ConfigError("params.reward: null entry at a feasible pair")
    return np.where(feasible, r, 0.0), feasible


def _structure(params, kind, n_actions):
    P = _array(params, "P", kind, ndim=2)
    if "next_endo" in params:
        nxt = np.array(params["next_endo"])
        if nxt.ndim != 3 or not np.issubdtype(nxt.dtype, np.integer):
            raise ConfigError("params.next_endo: expected an integer array "
                              "[n_endo][n_actions][n_exo]")
        return MarkovStructure(P, nxt)
    return MarkovStructure.exogenous_only(P, n_actions)


_DISCOUNT_FORMS = {
    "linear": (linear_discount, ("scale",), ("delta",)),
    "capped_linear": (capped_linear_discount, ("scale", "cap"), ("delta",)),
    "sqrt_tail": (sqrt_tail_discount, ("scale",), ("delta",)),
    "affine": (affine_discount, ("intercept", "slope", "delta"), ()),
    "power": (power_discount, ("scale", "power", "delta"), ()),
}


def _discount(spec):
    where = "params.discount"
    if not isinstance(spec, dict) or "form" not in spec:
        raise ConfigError(f"{where}: expected an object with a form field")
    form = spec["form"]
    if form not in _DISCOUNT_FORMS:
        raise ConfigError(f"{where}.form: expected one of {', '.join(_DISCOUNT_FORMS)}, "
                          f"got {form!r}")
    factory, required, optional = _DISCOUNT_FORMS[form]
    _check_keys(spec, ("form", *required, *optional), where)
    missing = [k for k in required if k not in spec]
    if missing:
        raise ConfigError(f"{where}: form {form} needs {', '.join(missing)}")
    args = [spec[k] for k in required]
    kwargs = {k: spec[k] for k in optional if k in spec}
    return factory(*args, **kwargs)


_PARAM_KEYS = {
    "mdp": ("reward", "transitions", "beta", "feasible"),
    "risk_sensitive": ("P", "next_endo", "reward", "beta", "theta", "feasible", "terminal"),
    "quantile": ("P", "next_endo", "reward", "beta", "tau", "feasible"),
    "nonlinear_discount": ("P", "next_endo", "reward", "discount", "feasible",
                           "check_assumptions"),
    "firm_exit": tuple(FirmExitParams.__dataclass_fields__),
}


def build_model(cfg, check_assumptions=True):
    """
    Build the model described by ``cfg``.

    Constructor errors are re-raised as :class:`ConfigError` prefixed with
    ``params``.  ``check_assumptions=False`` skips the sampled discount-map
    checks for nonlinear-discount models (the validator runs them itself).
    """
    kind, p = cfg.kind, cfg.params
    if kind == "data_valuation":
        try:
            return model_from_dict(p)
        except (ParameterError, TypeError) as exc:
            raise ConfigError(f"params: {exc}") from exc
    _check_keys(p, _PARAM_KEYS[kind], "params")
    try:
        if kind == "firm_exit":
            return build_firm_exit_model(FirmExitParams(**p))
        if kind == "mdp":
            r, mask = _reward_and_mask(p, kind)
            T = _array(p, "transitions", kind, ndim=3)
            return FiniteMDP(r, T, _scalar(p, "beta", kind), feasible=mask)
        r, mask = _reward_and_mask(p, kind)
        st = _structure(p, kind, r.shape[1])
        if kind == "risk_sensitive":
            beta = _array(p, "beta", kind)
            terminal = np.array(p["terminal"], dtype=bool) if "terminal" in p else None
            return RiskSensitiveModel(st, r, beta, _scalar(p, "theta", kind), feasible=mask,
                                      terminal=terminal)
        if kind == "quantile":
            return QuantileModel(st, r, _scalar(p, "beta", kind), _scalar(p, "tau", kind),
                                 feasible=mask)
        if kind == "nonlinear_discount":
            if "discount" not in p:
                raise ConfigError("params.discount: required for kind nonlinear_discount")
            check = p.get("check_assumptions", True) and check_assumptions
            return NonlinearDiscountModel(st, r, _discount(p["discount"]), feasible=mask,
                                          check_assumptions=check, seed=cfg.seed)
    except ConfigError:
        raise
    except (DPError, TypeError, ValueError) as exc:
        raise ConfigError(f"params: {exc}") from exc
    raise ConfigError(f"kind: unsupported {kind!r}")


def _scalar(params, key, kind):
    if key not in params:
        raise ConfigError(f"params.{key}: required for kind {kind}")
    return float(_number(params[key], f"params.{key}"))
