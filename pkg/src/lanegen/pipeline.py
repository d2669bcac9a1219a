"""Dual-stage generation orchestrator, backends, and the multi-seed sweep.

Backends: ``toy`` runs the in-process desk-scale diffusion stack, ``procedural``
applies seeded weather overlays, ``remote`` calls a generation service over the
wire protocol. The structure stage always runs; the appearance stage runs only
for night/dusk and is skipped (identity) for snow/rain/fog.
"""

import os
from dataclasses import dataclass, field, replace
from typing import Callable, Optional

import numpy as np

from .backend_client import BackendClient
from .control import (
    DEFAULT_STROKE,
    build_control_map,
    load_annotation,
    rasterize_annotation,
)
from .diffusion import (
    NoiseSchedule,
    SamplerConfig,
    encode_prompt,
    euler_sample,
    forward_diffuse,
    karras_sigmas,
    noise_like,
    sample_stage,
    stub_denoise,
)
from .imaging import ThresholdPair, dilate, read_image, validate_image, validate_mask
from .latent import LatentCodec, validate_latent
from .weather import procedural_weather

CATEGORIES = ("normal", "snow", "rain", "fog", "night", "dusk")
STAGE2_CATEGORIES = frozenset({"night", "dusk"})
BACKENDS = ("toy", "procedural", "remote")

_STAGE1_STREAM = 1
_STAGE2_STREAM = 2
STAGE2_DENOISE_FRACTION = 0.5


@dataclass(frozen=True)
class CategoryRecipe:
    """Prompt bundle for one category; the appearance stage is category-bound."""

    category: str
    positive_prompt: str
    negative_prompt: str = ""
    stage2_prompt: str = ""

    def __post_init__(self):
        if self.category not in CATEGORIES:
            raise ValueError(f"unknown category: {self.category!r}")
        if not self.positive_prompt.strip():
            raise ValueError("positive prompt must be nonempty")
        if self.stage2_enabled and not self.stage2_prompt.strip():
            raise ValueError(f"category {self.category} needs a stage-2 prompt")

    @property
    def stage2_enabled(self) -> bool:
        return self.category in STAGE2_CATEGORIES


def default_recipes() -> dict:
    """Placeholder prompts; real deployments override these in config."""
    base_neg = "blurry, distorted lane markings, warped road"
    prompts = {
        "normal": "clear daytime highway with sharp lane markings",
        "snow": "snow covered highway, falling snow, overcast light",
        "rain": "heavy rain on a highway, wet reflective asphalt",
        "fog": "dense fog over a highway, low visibility",
        "night": "highway at night, headlights, dark sky",
        "dusk": "highway at dusk, orange sky, long shadows",
    }
    stage2 = {
        "night": "make it a night scene with illuminated lane markings",
        "dusk": "make it dusk with warm low sunlight",
    }
    return {
        cat: CategoryRecipe(
            category=cat,
            positive_prompt=prompts[cat],
            negative_prompt=base_neg,
            stage2_prompt=stage2.get(cat, ""),
        )
        for cat in CATEGORIES
    }


@dataclass(frozen=True)
class SeedSweepConfig:
    k: int = 1
    base_seed: int = 0
    stride: int = 1
    seeds: Optional[tuple] = None
    w_f1: float = 1.0
    w_fid: float = 1.0

    def __post_init__(self):
        if self.k < 1:
            raise ValueError("sweep needs k >= 1")
        if self.w_f1 == 0 and self.w_fid == 0:
            raise ValueError("sweep weights must not both be zero")
        if not (np.isfinite(self.w_f1) and np.isfinite(self.w_fid)):
            raise ValueError("sweep weights must be finite")

    def seed_list(self) -> list:
        if self.seeds is not None:
            return list(self.seeds)
        return [self.base_seed + i * self.stride for i in range(self.k)]


@dataclass(frozen=True)
class GenerationJob:
    image_path: str
    annotation_path: str
    recipe: CategoryRecipe
    sampler: SamplerConfig = SamplerConfig()
    backend: str = "toy"
    output_path: Optional[str] = None
    thresholds: ThresholdPair = field(default_factory=ThresholdPair)
    stroke: float = DEFAULT_STROKE
    patch: int = 8
    control_strength: float = 1.0
    backend_url: Optional[str] = None
    timeout: float = 30.0

    def __post_init__(self):
        if self.backend not in BACKENDS:
            raise ValueError(f"unknown backend: {self.backend!r}")


def run_stage1(
    img: np.ndarray,
    cmap: np.ndarray,
    recipe: CategoryRecipe,
    cfg: SamplerConfig,
    codec: LatentCodec = LatentCodec(),
    control_strength: float = 1.0,
) -> np.ndarray:
    """Structure stage: encode, corrupt to the last step, sample back under control."""
    if validate_image(img).shape[:2] != validate_mask(cmap).shape:
        raise ValueError("image and control map dimensions differ")
    z0 = codec.encode(img)
    c0 = codec.encode(cmap)
    sched = NoiseSchedule.build(cfg)
    noise = noise_like(z0.shape, cfg.seed, stream=_STAGE1_STREAM)
    zt = forward_diffuse(z0, sched.steps, sched, noise)
    e = encode_prompt(recipe.positive_prompt, recipe.negative_prompt)
    return sample_stage(zt, c0, e, cfg, control_strength)


def run_stage2(
    z1: np.ndarray,
    z0: np.ndarray,
    recipe: CategoryRecipe,
    cfg: SamplerConfig,
    control_strength: float = 1.0,
) -> np.ndarray:
    """Appearance stage: identity for skip categories, refinement for night/dusk.

    Refinement re-noises the structure latent to the ladder's midpoint and
    samples down its tail, with the original latent as the control input.
    """
    z1 = validate_latent(z1)
    z0 = validate_latent(z0)
    if z1.shape != z0.shape:
        raise ValueError(f"latent shapes differ: {z1.shape} vs {z0.shape}")
    if not recipe.stage2_enabled:
        return z1
    e = encode_prompt(recipe.stage2_prompt, recipe.negative_prompt)
    sigmas = karras_sigmas(cfg)
    mid = int(len(sigmas) * (1.0 - STAGE2_DENOISE_FRACTION))
    mid = min(max(mid, 0), len(sigmas) - 2)
    noise = noise_like(z1.shape, cfg.seed, stream=_STAGE2_STREAM)
    z_start = z1 + sigmas[mid] * noise
    denoise = stub_denoise(z0, e, cfg.cfg_scale, control_strength)
    return euler_sample(z_start, sigmas[mid:], denoise)


def _pad_to_multiple(arr: np.ndarray, p: int) -> tuple[np.ndarray, tuple[int, int]]:
    h, w = arr.shape[:2]
    ph = (-h) % p
    pw = (-w) % p
    if ph == 0 and pw == 0:
        return arr, (h, w)
    pad = ((0, ph), (0, pw)) + (((0, 0),) if arr.ndim == 3 else ())
    return np.pad(arr, pad, mode="edge"), (h, w)


def _generate_toy(img: np.ndarray, cmap: np.ndarray, job: GenerationJob) -> np.ndarray:
    codec = LatentCodec(patch=job.patch)
    padded_img, (h, w) = _pad_to_multiple(img, job.patch)
    padded_map, _ = _pad_to_multiple(cmap, job.patch)
    z0 = codec.encode(padded_img)
    z1 = run_stage1(padded_img, padded_map, job.recipe, job.sampler, codec, job.control_strength)
    z_final = run_stage2(z1, z0, job.recipe, job.sampler, job.control_strength)
    return codec.decode(z_final)[:h, :w]


def generate(job: GenerationJob) -> np.ndarray:
    """Run one job end to end; the output has the input's dimensions."""
    img = read_image(job.image_path)
    ann = load_annotation(job.annotation_path)
    cmap = build_control_map(img, ann, job.thresholds, job.stroke)
    if job.backend == "toy":
        out = _generate_toy(img, cmap, job)
    elif job.backend == "procedural":
        h, w = img.shape[:2]
        protect = dilate(rasterize_annotation(ann, w, h, job.stroke), job.stroke)
        out = procedural_weather(img, job.recipe.category, job.sampler.seed, protect=protect)
    else:
        url = job.backend_url or os.environ.get("LANEGEN_BACKEND_URL")
        if not url:
            raise ValueError("remote backend requires a backend URL")
        client = BackendClient(url, timeout=job.timeout)
        out = client.generate(
            img, cmap, job.recipe.category, job.recipe.positive_prompt,
            job.recipe.negative_prompt,
            job.recipe.stage2_prompt if job.recipe.stage2_enabled else None,
            job.sampler.steps, job.sampler.cfg_scale, job.sampler.seed,
        )
    if out.shape != img.shape:
        raise RuntimeError(f"backend changed dimensions: {img.shape} -> {out.shape}")
    return out


@dataclass(frozen=True)
class SeedScore:
    seed: int
    f1_50: float
    fid: float
    fid_norm: float = 0.0
    objective: float = 0.0


@dataclass
class SweepReport:
    entries: list
    best_seed: Optional[int] = None

    def to_dict(self) -> dict:
        return {
            "best_seed": self.best_seed,
            "entries": [vars(e) for e in self.entries],
        }


class SweepError(RuntimeError):
    """A scorer failed mid-sweep; the partial report rides along."""

    def __init__(self, message: str, partial: SweepReport):
        super().__init__(message)
        self.partial = partial


@dataclass(frozen=True)
class EvalContext:
    """Scorers supplied by the caller: geometry fit (higher better) and
    realism distance (lower better)."""

    f1: Callable[[np.ndarray], float]
    fid: Callable[[np.ndarray], float]


def seed_sweep(
    job: GenerationJob, sweep: SeedSweepConfig, ctx: EvalContext
) -> tuple[int, SweepReport]:
    """Generate once per seed, score, and pick the best trade-off.

    Objective: w_f1 * F1@50 - w_fid * (FID / max FID over the sweep); ties go
    to the lowest seed value.
    """
    raw = []
    for seed in sweep.seed_list():
        img = generate(replace(job, sampler=replace(job.sampler, seed=seed)))
        try:
            f1 = float(ctx.f1(img))
            fid = float(ctx.fid(img))
        except Exception as exc:
            partial = SweepReport(entries=[SeedScore(**vars(r)) for r in raw])
            raise SweepError(f"scorer failed on seed {seed}: {exc}", partial) from exc
        raw.append(SeedScore(seed=seed, f1_50=f1, fid=fid))
    fid_max = max((r.fid for r in raw), default=0.0)
    entries = []
    for r in raw:
        fid_norm = r.fid / fid_max if fid_max > 0 else 0.0
        objective = sweep.w_f1 * r.f1_50 - sweep.w_fid * fid_norm
        entries.append(replace(r, fid_norm=fid_norm, objective=objective))
    best = min(entries, key=lambda r: (-r.objective, r.seed))
    report = SweepReport(entries=entries, best_seed=best.seed)
    return best.seed, report
