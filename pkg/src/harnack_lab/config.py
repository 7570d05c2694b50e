"""Experiment configuration: a JSON-compatible data model.

See docs/config-schema.md for the documented key layout.  Parsing keeps the
raw dictionary so a loaded configuration serializes back bit-identically.
"""

import json
from dataclasses import dataclass, field

import numpy as np

from .estimate import SpaceTimeFunction, TestFunction
from .model import (
    DiffusionSpec,
    GridDrift,
    IndicatorBoxDrift,
    LipschitzDrift,
    MollifiedIndicatorDrift,
    ZeroDrift,
)

__all__ = ["ExperimentConfig", "ConfigError", "drift_from_config",
           "diffusion_from_config", "test_function_from_config",
           "space_time_function_from_config"]

KNOWN_CHECKS = (
    "harnack",
    "weight_moment_bound",
    "girsanov_consistency",
    "shift_log_harnack",
    "shift_power_harnack",
    "krylov",
    "variance_gradient",
)


class ConfigError(ValueError):
    """Malformed configuration, with the offending key in the message."""


def _require(mapping, key, context):
    if key not in mapping:
        raise ConfigError(f"missing key {key!r} in {context}")
    return mapping[key]


def drift_from_config(cfg):
    family = _require(cfg, "family", "drift")
    params = cfg.get("params", {})
    p = float(_require(cfg, "p", "drift"))
    q = float(_require(cfg, "q", "drift"))
    if family == "zero":
        d = int(_require(params, "dim", "drift.params"))
        return ZeroDrift(dim_d=d, p_exponent=p, q_exponent=q)
    if family == "lipschitz":
        linear = tuple(map(tuple, _require(params, "linear", "drift.params")))
        offset = tuple(_require(params, "offset", "drift.params"))
        return LipschitzDrift(dim_d=len(offset), p_exponent=p, q_exponent=q,
                              linear=linear, offset=offset)
    if family == "indicator_box":
        a = tuple(_require(params, "amplitude", "drift.params"))
        return IndicatorBoxDrift(
            dim_d=len(a), p_exponent=p, q_exponent=q, amplitude=a,
            corner_low=tuple(_require(params, "corner_low", "drift.params")),
            corner_high=tuple(_require(params, "corner_high", "drift.params")),
        )
    if family == "mollified_indicator":
        a = tuple(_require(params, "amplitude", "drift.params"))
        return MollifiedIndicatorDrift(
            dim_d=len(a), p_exponent=p, q_exponent=q, amplitude=a,
            corner_low=tuple(_require(params, "corner_low", "drift.params")),
            corner_high=tuple(_require(params, "corner_high", "drift.params")),
            width=float(params.get("width", 0.1)),
        )
    if family == "grid":
        values = np.asarray(_require(params, "values", "drift.params"), dtype=float)
        return GridDrift.from_array(
            values,
            t_max=float(_require(params, "t_max", "drift.params")),
            x_low=_require(params, "x_low", "drift.params"),
            x_high=_require(params, "x_high", "drift.params"),
            p_exponent=p,
            q_exponent=q,
        )
    raise ConfigError(f"unknown drift family {family!r}")


def diffusion_from_config(cfg):
    delta = float(_require(cfg, "delta", "diffusion"))
    sigma = _require(cfg, "sigma", "diffusion")
    if isinstance(sigma, dict) and "schedule" in sigma:
        schedule = tuple(
            (float(t_end), tuple(map(tuple, mat))) for t_end, mat in sigma["schedule"]
        )
        return DiffusionSpec(schedule=schedule, delta=delta)
    return DiffusionSpec.constant(np.asarray(sigma, dtype=float), delta)


def test_function_from_config(cfg):
    tag = _require(cfg, "tag", "test function")
    if tag == "constant":
        return TestFunction.constant(cfg.get("c", 1.0))
    if tag == "exponential":
        return TestFunction.exponential(cfg.get("u", [1.0]))
    if tag == "coordinate":
        return TestFunction.coordinate(int(cfg.get("i", 0)))
    if tag == "square":
        return TestFunction.square(int(cfg.get("i", 0)))
    if tag == "indicator_box":
        return TestFunction.indicator_box(cfg["c_low"], cfg["c_high"])
    if tag == "smooth_bump":
        return TestFunction.smooth_bump(
            cfg.get("center", [0.0]), cfg.get("radius", 1.0), cfg.get("height", 1.0)
        )
    raise ConfigError(f"unknown test-function tag {tag!r}")


def space_time_function_from_config(cfg):
    kind = _require(cfg, "kind", "space-time function")
    if kind == "box":
        return SpaceTimeFunction.box(
            cfg.get("t_lo", 0.0), _require(cfg, "t_hi", "space-time box"),
            cfg["c_low"], cfg["c_high"], cfg.get("height", 1.0),
        )
    if kind == "bump":
        return SpaceTimeFunction.bump(
            cfg["t_center"], cfg["t_radius"], cfg["center"], cfg["radius"],
            cfg.get("height", 1.0),
        )
    raise ConfigError(f"unknown space-time function kind {kind!r}")


@dataclass
class ExperimentConfig:
    """Parsed experiment description plus the raw dictionary it came from."""

    raw: dict
    drift: object
    diffusion: object
    T: float
    n_steps: int
    n_samples: int
    seed: int
    kappa: object  # float or the string "estimate"
    checks: list
    out_dir: str = "out"
    dump_paths: bool = False
    krylov: dict = field(default_factory=dict)

    @classmethod
    def from_dict(cls, raw):
        drift = drift_from_config(_require(raw, "drift", "config"))
        diffusion = diffusion_from_config(_require(raw, "diffusion", "config"))
        T = float(_require(raw, "T", "config"))
        n_steps = int(raw.get("n_steps", 1024))
        n_samples = int(raw.get("n_samples", 100000))
        seed = int(raw.get("seed", 0))
        kappa = raw.get("kappa", "estimate")
        if not (kappa == "estimate" or isinstance(kappa, (int, float))):
            raise ConfigError("kappa must be a number or the string 'estimate'")
        if isinstance(kappa, (int, float)) and not np.isfinite(kappa):
            raise ConfigError("kappa must be finite")
        for value, label in ((T, "T"), (seed, "seed")):
            if not np.isfinite(value):
                raise ConfigError(f"{label} must be finite")
        checks = list(raw.get("checks", []))
        for i, chk in enumerate(checks):
            name = _require(chk, "check", f"checks[{i}]")
            if name not in KNOWN_CHECKS:
                raise ConfigError(f"unknown check {name!r} in checks[{i}]")
        return cls(
            raw=raw,
            drift=drift,
            diffusion=diffusion,
            T=T,
            n_steps=n_steps,
            n_samples=n_samples,
            seed=seed,
            kappa=kappa,
            checks=checks,
            out_dir=raw.get("out_dir", "out"),
            dump_paths=bool(raw.get("dump_paths", False)),
            krylov=dict(raw.get("krylov", {})),
        )

    @classmethod
    def from_file(cls, path):
        try:
            with open(path) as fh:
                raw = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: line {exc.lineno}: {exc.msg}") from exc
        return cls.from_dict(raw)

    def to_json(self):
        return json.dumps(self.raw, sort_keys=True, indent=2)
