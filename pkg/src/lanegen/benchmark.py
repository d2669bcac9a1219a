"""Benchmark assembly: sampling, deterministic 7:1:2 splits, manifest emission.

Output trees mirror the CULane layout (``<root>/<category>/<name>.jpg`` plus a
``.lines.txt`` sidecar); annotations of generated images are byte-identical
copies of their sources. Assembly is resumable: outputs whose pixel hash
matches the previous manifest are skipped.
"""

import hashlib
import json
import os
import tempfile
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np
from PIL import Image

from .diffusion import SamplerConfig
from .pipeline import CATEGORIES, GenerationJob, generate

SPLIT_RATIO = (7, 1, 2)
SPLIT_NAMES = ("train", "val", "test")
IMAGE_SUFFIXES = (".jpg", ".jpeg", ".png")


def systematic_sample(source_list: list, k: int) -> list:
    """Every-nth selection: indices floor(i * n / k), order preserving."""
    n = len(source_list)
    if k == 0:
        raise ValueError("cannot sample 0 items")
    if k > n:
        raise ValueError(f"cannot sample {k} items from {n}")
    return [source_list[i * n // k] for i in range(k)]


def largest_remainder_counts(n: int, ratio: tuple) -> list:
    """Apportion n items to the ratio parts, exact, largest remainder first."""
    total = sum(ratio)
    quotas = [n * r / total for r in ratio]
    counts = [int(q) for q in quotas]
    leftovers = sorted(
        range(len(ratio)), key=lambda i: (-(quotas[i] - counts[i]), i)
    )
    for i in leftovers[: n - sum(counts)]:
        counts[i] += 1
    return counts


def split(files: list, ratio: tuple = SPLIT_RATIO, seed: int = 0) -> tuple:
    """Seeded shuffle then contiguous cut at largest-remainder proportions."""
    if not files:
        raise ValueError("cannot split an empty file list")
    if any(r <= 0 for r in ratio):
        raise ValueError("ratio components must be positive")
    if len(files) < sum(ratio):
        raise ValueError(f"need at least {sum(ratio)} files for ratio {ratio}")
    counts = largest_remainder_counts(len(files), ratio)
    rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed)))
    order = rng.permutation(len(files))
    shuffled = [files[i] for i in order]
    parts = []
    offset = 0
    for c in counts:
        parts.append(shuffled[offset : offset + c])
        offset += c
    return tuple(parts)


def pixel_hash(path) -> str:
    """256-bit hash over decoded RGB pixels and dimensions (not file bytes)."""
    with Image.open(path) as im:
        rgb = im.convert("RGB")
        header = f"{rgb.width}x{rgb.height}:".encode()
        return hashlib.sha256(header + rgb.tobytes()).hexdigest()


def _atomic_write_bytes(path: Path, data: bytes) -> None:
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=".tmp-", suffix=path.suffix)
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _atomic_save_image(path: Path, img: np.ndarray) -> None:
    import io

    buf = io.BytesIO()
    fmt = "JPEG" if path.suffix.lower() in (".jpg", ".jpeg") else "PNG"
    kwargs = {"quality": 95, "subsampling": 0} if fmt == "JPEG" else {}
    Image.fromarray(img, mode="RGB").save(buf, format=fmt, **kwargs)
    _atomic_write_bytes(path, buf.getvalue())


@dataclass
class CategoryEntry:
    total: int = 0
    train: list = field(default_factory=list)
    validate: list = field(default_factory=list)
    test: list = field(default_factory=list)
    hashes: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "total": self.total,
            "train": list(self.train),
            "validate": list(self.validate),
            "test": list(self.test),
            "hashes": dict(self.hashes),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "CategoryEntry":
        return cls(
            total=d["total"],
            train=list(d["train"]),
            validate=list(d["validate"]),
            test=list(d["test"]),
            hashes=dict(d["hashes"]),
        )


@dataclass
class Manifest:
    categories: dict = field(default_factory=dict)
    provenance: dict = field(default_factory=dict)
    complete: bool = True
    failures: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "categories": {c: e.to_dict() for c, e in sorted(self.categories.items())},
            "provenance": dict(self.provenance),
            "complete": self.complete,
            "failures": list(self.failures),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Manifest":
        return cls(
            categories={c: CategoryEntry.from_dict(e) for c, e in d["categories"].items()},
            provenance=dict(d["provenance"]),
            complete=d["complete"],
            failures=list(d.get("failures", [])),
        )

    def emit(self, path) -> None:
        payload = json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"
        _atomic_write_bytes(Path(path), payload.encode("utf-8"))

    @classmethod
    def parse(cls, path) -> "Manifest":
        with open(path, "r", encoding="utf-8") as fh:
            return cls.from_dict(json.load(fh))


@dataclass
class AssembleResult:
    manifest: Manifest
    generated: int = 0
    skipped: int = 0
    copied: int = 0


def _annotation_path(image_path: Path) -> Path:
    return image_path.with_name(image_path.stem + ".lines.txt")


def _discover_sources(source_dir: Path) -> list:
    images = sorted(
        p for p in source_dir.iterdir()
        if p.suffix.lower() in IMAGE_SUFFIXES and p.is_file()
        and not p.stem.endswith(".control")  # fuse outputs live beside sources
    )
    for img in images:
        sidecar = _annotation_path(img)
        if not sidecar.exists():
            raise FileNotFoundError(f"missing annotation sidecar: {sidecar}")
    return images


def _derived_seed(master_seed: int, category: str, stem: str) -> int:
    digest = hashlib.sha256(f"{master_seed}:{category}:{stem}".encode()).digest()
    return int.from_bytes(digest[:8], "little")


def _category_split_seed(master_seed: int, category: str) -> int:
    digest = hashlib.sha256(f"split:{master_seed}:{category}".encode()).digest()
    return int.from_bytes(digest[:8], "little")


def _config_hash(payload: dict) -> str:
    return hashlib.sha256(
        json.dumps(payload, sort_keys=True, separators=(",", ":")).encode()
    ).hexdigest()


def assemble(
    source_dir,
    output_dir,
    recipes: dict,
    *,
    seed: int = 0,
    backend: str = "toy",
    sampler: SamplerConfig = SamplerConfig(),
    sample_k: int | None = None,
    categories: tuple = CATEGORIES,
    jobs: int = 1,
    retries: int = 2,
    backend_url: str | None = None,
    job_template: GenerationJob | None = None,
) -> AssembleResult:
    """Build the full benchmark tree from a source directory of annotated images.

    Normal images are copied verbatim; the adverse categories are generated.
    Annotation sidecars are copied byte-identically everywhere. Existing
    outputs whose pixel hash matches the previous manifest are not regenerated.
    """
    source_dir = Path(source_dir)
    output_dir = Path(output_dir)
    sources = _discover_sources(source_dir)
    if sample_k is not None:
        sources = systematic_sample(sources, sample_k)
    if not sources:
        raise ValueError(f"no annotated images under {source_dir}")

    previous = None
    manifest_path = output_dir / "manifest.json"
    if manifest_path.exists():
        try:
            previous = Manifest.parse(manifest_path)
        except (ValueError, KeyError):
            previous = None

    result = AssembleResult(manifest=Manifest())
    tasks = []
    for category in categories:
        recipe = recipes[category]
        cat_dir = output_dir / category
        cat_dir.mkdir(parents=True, exist_ok=True)
        prev_hashes = previous.categories[category].hashes if (
            previous and category in previous.categories
        ) else {}
        for src in sources:
            rel = f"{category}/{src.name}"
            out_img = output_dir / rel
            out_ann = _annotation_path(out_img)
            known = prev_hashes.get(rel)
            if out_img.exists() and known and pixel_hash(out_img) == known:
                result.skipped += 1
            elif category == "normal":
                _atomic_write_bytes(out_img, src.read_bytes())
                result.copied += 1
            else:
                tasks.append((category, recipe, src, out_img, rel))
            ann_bytes = _annotation_path(src).read_bytes()
            if not out_ann.exists() or out_ann.read_bytes() != ann_bytes:
                _atomic_write_bytes(out_ann, ann_bytes)

    def run_task(task):
        category, recipe, src, out_img, rel = task
        job_seed = _derived_seed(seed, category, src.stem)
        base = job_template or GenerationJob(
            image_path=str(src),
            annotation_path=str(_annotation_path(src)),
            recipe=recipe,
            backend=backend,
            backend_url=backend_url,
        )
        job = replace(
            base,
            image_path=str(src),
            annotation_path=str(_annotation_path(src)),
            recipe=recipe,
            backend=backend,
            backend_url=backend_url,
            sampler=replace(sampler, seed=job_seed),
        )
        last_error = None
        for _ in range(retries + 1):
            try:
                img = generate(job)
                _atomic_save_image(out_img, img)
                return rel, None
            except Exception as exc:
                last_error = exc
        return rel, f"{type(last_error).__name__}: {last_error}"

    if tasks:
        if jobs > 1:
            with ThreadPoolExecutor(max_workers=jobs) as pool:
                outcomes = list(pool.map(run_task, tasks))
        else:
            outcomes = [run_task(t) for t in tasks]
        for rel, error in outcomes:
            if error is None:
                result.generated += 1
            else:
                result.manifest.failures.append({"file": rel, "error": error})

    manifest = result.manifest
    manifest.complete = not manifest.failures
    failed = {f["file"] for f in manifest.failures}
    list_dir = output_dir / "list"
    list_dir.mkdir(parents=True, exist_ok=True)
    for category in categories:
        rels = [f"{category}/{s.name}" for s in sources if f"{category}/{s.name}" not in failed]
        entry = CategoryEntry(total=len(rels))
        for rel in rels:
            entry.hashes[rel] = pixel_hash(output_dir / rel)
        if rels:
            train, val, test = split(rels, SPLIT_RATIO, _category_split_seed(seed, category))
            entry.train, entry.validate, entry.test = sorted(train), sorted(val), sorted(test)
            for name, part in zip(SPLIT_NAMES, (train, val, test)):
                lines = "".join(f"{rel}\n" for rel in sorted(part))
                _atomic_write_bytes(list_dir / f"{name}_{category}.txt", lines.encode())
        manifest.categories[category] = entry

    for category, entry in manifest.categories.items():
        listed = entry.train + entry.validate + entry.test
        assert len(listed) == len(set(listed)) == entry.total
        for rel in listed:
            if not (output_dir / rel).exists():
                raise RuntimeError(f"manifest lists missing file: {rel}")

    manifest.provenance = {
        "source": source_dir.name,
        "config_hash": _config_hash(
            {
                "backend": backend,
                "seed": seed,
                "sampler": vars(sampler),
                "categories": list(categories),
                "ratio": list(SPLIT_RATIO),
            }
        ),
        "seed_policy": (
            f"master={seed}; per-image seed = sha256(master:category:stem)[:8]; "
            f"per-category split seed = sha256(split:master:category)[:8]"
        ),
    }
    manifest.emit(manifest_path)
    return result
