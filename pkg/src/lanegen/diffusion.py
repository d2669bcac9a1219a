"""Noise schedules, prompt embeddings, attention, denoiser stub, Euler sampler.

The denoiser is a frozen, seeded stub: a Lipschitz-bounded map built from one
cross-attention block plus additive control-feature injection. It replaces the
pretrained networks at desk scale while keeping every orchestration contract
(guidance, scheduling, determinism) testable. Real models mount behind the
HTTP backend instead.
"""

import hashlib
import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .latent import validate_latent

DEFAULT_PROMPT_DIM = 48
REFERENCE_STEPS = 1000
_STUB_SEED = 0x4C414E45


@dataclass(frozen=True)
class SamplerConfig:
    steps: int = 30
    cfg_scale: float = 6.0
    rho: float = 7.0
    sigma_min: float = 0.0292
    sigma_max: float = 14.6146
    seed: int = 0

    def __post_init__(self):
        if self.steps < 1:
            raise ValueError("steps must be >= 1")
        if self.cfg_scale < 0:
            raise ValueError("cfg_scale must be >= 0")
        if not (0 < self.sigma_min < self.sigma_max):
            raise ValueError("need 0 < sigma_min < sigma_max")


def karras_sigmas(cfg: SamplerConfig) -> np.ndarray:
    """Rho-interpolated noise ladder from sigma_max down to sigma_min, then 0."""
    t = cfg.steps
    if t == 1:
        return np.array([cfg.sigma_max, 0.0])
    ramp = np.arange(t, dtype=np.float64) / (t - 1)
    max_inv = cfg.sigma_max ** (1.0 / cfg.rho)
    min_inv = cfg.sigma_min ** (1.0 / cfg.rho)
    sigmas = (max_inv + ramp * (min_inv - max_inv)) ** cfg.rho
    return np.append(sigmas, 0.0)


def sigma_from_alpha_bar(alpha_bar: np.ndarray) -> np.ndarray:
    """Assumed correspondence between the two noise parameterizations.

    sigma_t = sqrt((1 - abar_t) / abar_t); provided for mounting real models,
    not used by the desk-scale sampler itself.
    """
    a = np.asarray(alpha_bar, dtype=np.float64)
    return np.sqrt((1.0 - a) / a)


@dataclass(frozen=True)
class NoiseSchedule:
    """Cumulative signal fractions plus the sampler's sigma ladder."""

    alpha_bar: np.ndarray
    sigmas: np.ndarray

    def __post_init__(self):
        a = np.asarray(self.alpha_bar, dtype=np.float64)
        s = np.asarray(self.sigmas, dtype=np.float64)
        if a.ndim != 1 or a.size < 1:
            raise ValueError("alpha_bar must be a non-empty vector")
        if (a <= 0).any() or (a > 1).any() or (np.diff(a) >= 0).any():
            raise ValueError("alpha_bar must be strictly decreasing within (0, 1]")
        if s.ndim != 1 or s[-1] != 0.0 or (np.diff(s) >= 0).any():
            raise ValueError("sigmas must be strictly decreasing and end at 0")
        object.__setattr__(self, "alpha_bar", a)
        object.__setattr__(self, "sigmas", s)

    @property
    def steps(self) -> int:
        return self.alpha_bar.size

    @classmethod
    def build(cls, cfg: SamplerConfig) -> "NoiseSchedule":
        """Linear-beta reference schedule resampled to the configured step count."""
        betas = np.linspace(1e-4, 0.02, REFERENCE_STEPS)
        abar_ref = np.cumprod(1.0 - betas)
        ref_t = np.arange(1, REFERENCE_STEPS + 1, dtype=np.float64)
        t = np.linspace(1.0, REFERENCE_STEPS, cfg.steps) if cfg.steps > 1 else np.array([float(REFERENCE_STEPS)])
        abar = np.exp(np.interp(t, ref_t, np.log(abar_ref)))
        return cls(alpha_bar=abar, sigmas=karras_sigmas(cfg))


def forward_diffuse(
    z0: np.ndarray, t: int, sched: NoiseSchedule, noise: np.ndarray
) -> np.ndarray:
    """Corrupt a latent: sqrt(abar_t) * z0 + sqrt(1 - abar_t) * noise."""
    z0 = validate_latent(z0)
    noise = np.asarray(noise, dtype=np.float64)
    if noise.shape != z0.shape:
        raise ValueError(f"noise shape {noise.shape} != latent shape {z0.shape}")
    if not 1 <= t <= sched.steps:
        raise ValueError(f"step index {t} outside [1, {sched.steps}]")
    abar = sched.alpha_bar[t - 1]
    return math.sqrt(abar) * z0 + math.sqrt(1.0 - abar) * noise


def _token_vector(token: str, dim: int) -> np.ndarray:
    digest = hashlib.sha256(token.encode("utf-8")).digest()
    seed = int.from_bytes(digest[:8], "little")
    return np.random.Generator(np.random.PCG64(seed)).standard_normal(dim)


@dataclass(frozen=True)
class PromptEmbedding:
    """Per-token embedding rows (n, dim), with an optional negative pairing."""

    data: np.ndarray
    negative: Optional[np.ndarray] = None

    def __post_init__(self):
        d = np.asarray(self.data, dtype=np.float64)
        if d.ndim != 2 or d.shape[0] < 1 or not np.isfinite(d).all():
            raise ValueError("embedding must be a finite (n>=1, dim) matrix")
        object.__setattr__(self, "data", d)
        if self.negative is not None:
            n = np.asarray(self.negative, dtype=np.float64)
            if n.ndim != 2 or n.shape[1] != d.shape[1] or not np.isfinite(n).all():
                raise ValueError("negative embedding must match the positive dim")
            object.__setattr__(self, "negative", n)

    @property
    def dim(self) -> int:
        return self.data.shape[1]


def encode_prompt(
    prompt: str, negative: str = "", dim: int = DEFAULT_PROMPT_DIM
) -> PromptEmbedding:
    """Hash each whitespace token to a seeded Gaussian vector.

    The construction is deterministic across runs and platforms: token ->
    sha256 -> first 8 little-endian bytes as a PCG64 seed -> standard normal
    draw of length ``dim``.
    """
    tokens = prompt.split()
    if not tokens:
        raise ValueError("positive prompt must be nonempty")
    data = np.stack([_token_vector(tok, dim) for tok in tokens])
    neg_tokens = negative.split()
    neg = np.stack([_token_vector(tok, dim) for tok in neg_tokens]) if neg_tokens else None
    return PromptEmbedding(data=data, negative=neg)


@dataclass(frozen=True)
class AttentionParams:
    wq: np.ndarray
    wk: np.ndarray
    wv: np.ndarray

    def __post_init__(self):
        for name in ("wq", "wk", "wv"):
            m = np.asarray(getattr(self, name), dtype=np.float64)
            if m.ndim != 2 or not np.isfinite(m).all():
                raise ValueError(f"{name} must be a finite matrix")
            object.__setattr__(self, name, m)
        if not (self.wq.shape[1] == self.wk.shape[1] == self.wv.shape[1]):
            raise ValueError("projections must share the output dimension")


def cross_attention(
    z_feat: np.ndarray, e: PromptEmbedding, p: AttentionParams
) -> np.ndarray:
    """Softmax(Q K^T / sqrt(d)) V with Q from latent features, K/V from tokens."""
    z_feat = np.asarray(z_feat, dtype=np.float64)
    if z_feat.ndim != 2 or z_feat.shape[1] != p.wq.shape[0]:
        raise ValueError(f"feature width {z_feat.shape} incompatible with wq {p.wq.shape}")
    if e.dim != p.wk.shape[0]:
        raise ValueError(f"embedding dim {e.dim} incompatible with wk {p.wk.shape}")
    q = z_feat @ p.wq
    k = e.data @ p.wk
    v = e.data @ p.wv
    logits = (q @ k.T) / math.sqrt(p.wq.shape[1])
    logits -= logits.max(axis=1, keepdims=True)
    weights = np.exp(logits)
    weights /= weights.sum(axis=1, keepdims=True)
    return weights @ v


@dataclass(frozen=True)
class ControlFeatures:
    """Residual tensors injected at the denoiser's (single) feature resolution."""

    residual: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "residual", validate_latent(self.residual))


_MIX_CACHE: dict = {}


def _control_mixer(d: int) -> np.ndarray:
    key = ("mix", d)
    if key not in _MIX_CACHE:
        rng = np.random.Generator(np.random.PCG64(_STUB_SEED))
        _MIX_CACHE[key] = rng.standard_normal((d, d)) / math.sqrt(d)
    return _MIX_CACHE[key]


def control_features(
    c0: np.ndarray, zt: np.ndarray, strength: float = 1.0
) -> ControlFeatures:
    """Seeded residual generator, linear in the control latent.

    ``zt`` fixes the required shape (the stub ignores its values); strength 0
    or an all-zero control latent yields all-zero residuals.
    """
    c0 = validate_latent(c0)
    zt = validate_latent(zt)
    if c0.shape != zt.shape:
        raise ValueError(f"control shape {c0.shape} != latent shape {zt.shape}")
    residual = strength * (c0 @ _control_mixer(c0.shape[2]))
    return ControlFeatures(residual=residual)


@dataclass(frozen=True)
class DenoiserStub:
    """Frozen seeded noise predictor with bounded output (tanh, |eps| <= 1)."""

    w_self: np.ndarray
    proj: np.ndarray
    attn: AttentionParams
    time_vec: np.ndarray

    @classmethod
    def build(cls, latent_dim: int, prompt_dim: int = DEFAULT_PROMPT_DIM) -> "DenoiserStub":
        rng = np.random.Generator(np.random.PCG64(_STUB_SEED + 1))
        scale_d = 1.0 / math.sqrt(latent_dim)
        scale_c = 1.0 / math.sqrt(prompt_dim)
        return cls(
            w_self=rng.standard_normal((latent_dim, latent_dim)) * scale_d * 0.5,
            proj=rng.standard_normal((latent_dim, prompt_dim)) * scale_d,
            attn=AttentionParams(
                wq=rng.standard_normal((prompt_dim, latent_dim)) * scale_c,
                wk=rng.standard_normal((prompt_dim, latent_dim)) * scale_c,
                wv=rng.standard_normal((prompt_dim, latent_dim)) * scale_c,
            ),
            time_vec=rng.standard_normal(latent_dim) * scale_d,
        )

    def __call__(
        self, zt: np.ndarray, t: float, e_tokens: np.ndarray, fc: ControlFeatures
    ) -> np.ndarray:
        h, w, d = zt.shape
        flat = zt.reshape(h * w, d)
        emb = PromptEmbedding(data=e_tokens) if e_tokens.size else None
        raw = flat @ self.w_self
        if emb is not None:
            raw = raw + cross_attention(flat @ self.proj, emb, self.attn)
        raw = raw + fc.residual.reshape(h * w, d)
        raw = raw + math.sin(0.05 * t) * self.time_vec
        return np.tanh(raw).reshape(h, w, d)


_STUB_CACHE: dict = {}


def _denoiser(latent_dim: int, prompt_dim: int) -> DenoiserStub:
    key = (latent_dim, prompt_dim)
    if key not in _STUB_CACHE:
        _STUB_CACHE[key] = DenoiserStub.build(latent_dim, prompt_dim)
    return _STUB_CACHE[key]


def apply_guidance(
    eps_uncond: np.ndarray, eps_cond: np.ndarray, scale: float
) -> np.ndarray:
    """Classifier-free extrapolation: uncond + scale * (cond - uncond)."""
    return eps_uncond + scale * (eps_cond - eps_uncond)


def predict_noise(
    zt: np.ndarray,
    t: float,
    e: PromptEmbedding,
    fc: ControlFeatures,
    cfg_scale: float,
) -> np.ndarray:
    """Guided noise prediction from the frozen stub.

    The unconditional branch uses the negative embedding when present, else an
    empty token set (attention contributes nothing).
    """
    zt = validate_latent(zt)
    if fc.residual.shape != zt.shape:
        raise ValueError(f"feature shape {fc.residual.shape} != latent {zt.shape}")
    stub = _denoiser(zt.shape[2], e.dim)
    eps_cond = stub(zt, t, e.data, fc)
    neg = e.negative if e.negative is not None else np.zeros((0, e.dim))
    eps_uncond = stub(zt, t, neg, fc)
    return apply_guidance(eps_uncond, eps_cond, cfg_scale)


class SamplerDiverged(RuntimeError):
    def __init__(self, step: int):
        super().__init__(f"non-finite latent at sampler step {step}")
        self.step = step


Denoise = Callable[[np.ndarray, float, int], np.ndarray]


def euler_sample(
    z: np.ndarray,
    sigmas: np.ndarray,
    denoise: Denoise,
) -> np.ndarray:
    """Euler integration over a sigma ladder down to zero noise.

    ``denoise(z, sigma, i)`` returns the clean-latent estimate; each step
    follows d = (z - xhat0) / sigma_i, z += (sigma_{i+1} - sigma_i) * d.
    """
    z = validate_latent(z).copy()
    for i in range(len(sigmas) - 1):
        sigma, sigma_next = sigmas[i], sigmas[i + 1]
        if sigma_next == sigma:
            continue
        xhat0 = denoise(z, sigma, i)
        d = (z - xhat0) / sigma
        z = z + (sigma_next - sigma) * d
        if not np.isfinite(z).all():
            raise SamplerDiverged(i)
    return z


def stub_denoise(
    c0: np.ndarray,
    e: PromptEmbedding,
    cfg_scale: float,
    control_strength: float = 1.0,
) -> Denoise:
    """Denoise callback backed by the stub with eps-prediction: xhat0 = z - sigma*eps."""

    def denoise(z: np.ndarray, sigma: float, i: int) -> np.ndarray:
        fc = control_features(c0, z, control_strength)
        eps = predict_noise(z, float(i), e, fc, cfg_scale)
        return z - sigma * eps

    return denoise


def sample_stage(
    z_init: np.ndarray,
    c0: np.ndarray,
    e: PromptEmbedding,
    cfg: SamplerConfig,
    control_strength: float = 1.0,
    denoise: Optional[Denoise] = None,
) -> np.ndarray:
    """Run one full reverse stage over the Karras ladder; bit-deterministic."""
    if denoise is None:
        denoise = stub_denoise(c0, e, cfg.cfg_scale, control_strength)
    return euler_sample(z_init, karras_sigmas(cfg), denoise)


def noise_like(shape, seed: int, stream: int = 0) -> np.ndarray:
    """Platform-stable standard normal draw from a named (seed, stream) pair."""
    rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence((seed, stream))))
    return rng.standard_normal(shape)
