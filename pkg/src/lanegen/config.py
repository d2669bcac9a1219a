"""Declarative run configuration: a single JSON file with a documented schema.

Every validation error names the config path and the offending field so batch
runs fail with actionable messages.
"""

import json
from dataclasses import dataclass, field

from .diffusion import SamplerConfig
from .evaluation import EvalConfig
from .imaging import DEFAULT_BLUR_SIGMA, ThresholdPair
from .pipeline import CATEGORIES, CategoryRecipe, SeedSweepConfig, default_recipes


class ConfigError(ValueError):
    pass


@dataclass
class RunConfig:
    version: int = 1
    source: str = ""
    output: str = ""
    thresholds: ThresholdPair = field(default_factory=ThresholdPair)
    blur_sigma: float = DEFAULT_BLUR_SIGMA
    stroke: float = 4.0
    patch: int = 8
    control_strength: float = 1.0
    sampler: SamplerConfig = field(default_factory=SamplerConfig)
    recipes: dict = field(default_factory=default_recipes)
    backend: str = "toy"
    backend_url: str | None = None
    timeout: float = 30.0
    sweep: SeedSweepConfig = field(default_factory=SeedSweepConfig)
    eval: EvalConfig = field(default_factory=EvalConfig)


def _get(data: dict, dotted: str, default):
    cur = data
    for part in dotted.split("."):
        if not isinstance(cur, dict) or part not in cur:
            return default
        cur = cur[part]
    return cur


def _expect(path: str, dotted: str, value, kinds, pred=None, what: str = ""):
    if not isinstance(value, kinds) or isinstance(value, bool):
        raise ConfigError(f"{path}: {dotted}: expected {what or kinds}, got {value!r}")
    if pred is not None and not pred(value):
        raise ConfigError(f"{path}: {dotted}: invalid value {value!r} ({what})")
    return value


def load_config(path: str) -> RunConfig:
    """Parse and validate a JSON run configuration."""
    try:
        with open(path, "r", encoding="utf-8") as fh:
            data = json.load(fh)
    except FileNotFoundError:
        raise ConfigError(f"{path}: config file not found")
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON: {exc}")
    if not isinstance(data, dict):
        raise ConfigError(f"{path}: top level must be an object")

    cfg = RunConfig()
    cfg.version = _expect(path, "version", data.get("version", 1), int, lambda v: v == 1,
                          "supported version is 1")
    cfg.source = _expect(path, "paths.source", _get(data, "paths.source", ""), str)
    cfg.output = _expect(path, "paths.output", _get(data, "paths.output", ""), str)

    low = _get(data, "thresholds.color_low", list(ThresholdPair().low))
    high = _get(data, "thresholds.color_high", list(ThresholdPair().high))
    for name, bounds in (("thresholds.color_low", low), ("thresholds.color_high", high)):
        _expect(path, name, bounds, list, lambda v: len(v) == 3, "3-element list")
    try:
        cfg.thresholds = ThresholdPair(low=tuple(low), high=tuple(high))
    except ValueError as exc:
        raise ConfigError(f"{path}: thresholds: {exc}")
    cfg.blur_sigma = _expect(path, "thresholds.blur_sigma",
                             _get(data, "thresholds.blur_sigma", DEFAULT_BLUR_SIGMA),
                             (int, float), lambda v: v > 0, "> 0")

    cfg.stroke = _expect(path, "control.stroke", _get(data, "control.stroke", 4.0),
                         (int, float), lambda v: v >= 1, ">= 1")
    cfg.patch = _expect(path, "sampler.patch", _get(data, "sampler.patch", 8),
                        int, lambda v: v >= 1, ">= 1")
    cfg.control_strength = _expect(
        path, "sampler.control_strength", _get(data, "sampler.control_strength", 1.0),
        (int, float), lambda v: v >= 0, ">= 0")
    try:
        cfg.sampler = SamplerConfig(
            steps=_expect(path, "sampler.steps", _get(data, "sampler.steps", 30),
                          int, lambda v: v >= 1, ">= 1"),
            cfg_scale=_expect(path, "sampler.cfg_scale", _get(data, "sampler.cfg_scale", 6.0),
                              (int, float), lambda v: v >= 0, ">= 0"),
            rho=_expect(path, "sampler.rho", _get(data, "sampler.rho", 7.0),
                        (int, float), lambda v: v > 0, "> 0"),
            sigma_min=_expect(path, "sampler.sigma_min", _get(data, "sampler.sigma_min", 0.0292),
                              (int, float), lambda v: v > 0, "> 0"),
            sigma_max=_expect(path, "sampler.sigma_max", _get(data, "sampler.sigma_max", 14.6146),
                              (int, float), lambda v: v > 0, "> 0"),
            seed=_expect(path, "sampler.seed", _get(data, "sampler.seed", 0),
                         int, lambda v: v >= 0, ">= 0"),
        )
    except ValueError as exc:
        raise ConfigError(f"{path}: sampler: {exc}")

    recipes = default_recipes()
    for cat, spec in _expect(path, "recipes", data.get("recipes", {}), dict).items():
        if cat not in CATEGORIES:
            raise ConfigError(f"{path}: recipes.{cat}: unknown category")
        _expect(path, f"recipes.{cat}", spec, dict)
        try:
            recipes[cat] = CategoryRecipe(
                category=cat,
                positive_prompt=spec.get("positive", recipes[cat].positive_prompt),
                negative_prompt=spec.get("negative", recipes[cat].negative_prompt),
                stage2_prompt=spec.get("stage2", recipes[cat].stage2_prompt) or "",
            )
        except ValueError as exc:
            raise ConfigError(f"{path}: recipes.{cat}: {exc}")
    cfg.recipes = recipes

    cfg.backend = _expect(path, "backend.id", _get(data, "backend.id", "toy"),
                          str, lambda v: v in ("toy", "procedural", "remote"),
                          "one of toy/procedural/remote")
    url = _get(data, "backend.url", None)
    if url is not None:
        cfg.backend_url = _expect(path, "backend.url", url, str)
    cfg.timeout = _expect(path, "backend.timeout", _get(data, "backend.timeout", 30.0),
                          (int, float), lambda v: v > 0, "> 0")

    try:
        cfg.sweep = SeedSweepConfig(
            k=_expect(path, "sweep.k", _get(data, "sweep.k", 1), int, lambda v: v >= 1, ">= 1"),
            base_seed=_expect(path, "sweep.base_seed", _get(data, "sweep.base_seed", 0), int),
            stride=_expect(path, "sweep.stride", _get(data, "sweep.stride", 1), int),
            w_f1=_expect(path, "sweep.w_f1", _get(data, "sweep.w_f1", 1.0), (int, float)),
            w_fid=_expect(path, "sweep.w_fid", _get(data, "sweep.w_fid", 1.0), (int, float)),
        )
    except ValueError as exc:
        raise ConfigError(f"{path}: sweep: {exc}")

    canvas = _get(data, "eval.canvas", [1640, 590])
    _expect(path, "eval.canvas", canvas, list, lambda v: len(v) == 2, "[width, height]")
    lane_width = _get(data, "eval.lane_width", None)
    if lane_width is not None:
        _expect(path, "eval.lane_width", lane_width, (int, float), lambda v: v >= 1, ">= 1")
    alphas = _get(data, "eval.iou_thresholds", [0.5, 0.75])
    _expect(path, "eval.iou_thresholds", alphas, list, lambda v: len(v) >= 1, "nonempty list")
    try:
        cfg.eval = EvalConfig(
            canvas=tuple(canvas),
            lane_width=lane_width,
            iou_thresholds=tuple(alphas),
        )
    except ValueError as exc:
        raise ConfigError(f"{path}: eval: {exc}")
    return cfg
