"""Synthetic corpus: annotation files, dataset splitting, procedural scenes,
and the versioned degradation generator that provides ground-truth flaw
severities plus reference captions at desk scale.

Degradation mapping "degrade-v1" (severity 0..5 per flaw, fixed order:
framing shift, rotation, blur, dark gain, bright blend, occluder):

  blur      Gaussian sigma (px)        0, 0.8, 1.6, 3.2, 6.4, 12.8
  dark      luminance gain             1.0, 0.7, 0.5, 0.35, 0.2, 0.08
  bright    blend-toward-white weight  0, 0.3, 0.5, 0.65, 0.8, 0.95
  obscured  flat occluder area frac    0, 0.1, 0.25, 0.4, 0.6, 0.85
  rotation  angle (deg)                0, 10, 25, 45, 70, 90
  framing   subject off-canvas frac    0, 0.1, 0.25, 0.45, 0.7, 0.95

The overall grade is u = clamp(round(0.8 max + 0.4 mean-of-others), 0, 5):
one severe flaw dominates, compounding flaws add.
"""

from __future__ import annotations

import json
import logging
import math
import random
from array import array
from dataclasses import dataclass, replace
from pathlib import Path

from ._backend import kernels
from .images import RasterImage, encode_ppm
from .quality import FLAW_ORDER, FlawKind, QualityAnnotation, check_severity

log = logging.getLogger("pinf.corpus")

ANNOTATION_FILE_VERSION = 1
ANNOTATIONS_NAME = "annotations.json"
CATALOG_NAME = "catalog.json"
DEGRADE_VERSION = "degrade-v1"
SCENE_SIZE = 128
ZERO_SEVERITY_RATE = 0.7

BLUR_SIGMA = (0.0, 0.8, 1.6, 3.2, 6.4, 12.8)
DARK_GAIN = (1.0, 0.7, 0.5, 0.35, 0.2, 0.08)
BRIGHT_BLEND = (0.0, 0.3, 0.5, 0.65, 0.8, 0.95)
OBSCURED_AREA = (0.0, 0.1, 0.25, 0.4, 0.6, 0.85)
ROTATION_DEG = (0.0, 10.0, 25.0, 45.0, 70.0, 90.0)
FRAMING_OFF = (0.0, 0.1, 0.25, 0.45, 0.7, 0.95)

DEGRADED_CAPTIONS = (
    "a blurry image",
    "a black screen",
    "a very bright image",
    "a picture that is too dark to see",
    "a finger covering the camera lens",
    "a tilted unclear photo of something",
    "an out of focus shot of nothing clear",
)

_COLORS = {
    "red": (0.85, 0.10, 0.10),
    "green": (0.10, 0.65, 0.15),
    "blue": (0.12, 0.25, 0.80),
    "yellow": (0.92, 0.85, 0.12),
    "purple": (0.55, 0.15, 0.70),
    "orange": (0.95, 0.55, 0.10),
    "teal": (0.10, 0.65, 0.65),
    "pink": (0.95, 0.45, 0.65),
}
_SHAPES = ("circle", "square", "triangle")


class AnnotationError(ValueError):
    """Malformed annotation file."""


@dataclass(frozen=True)
class CorpusEntry:
    path: Path
    annotation: QualityAnnotation


@dataclass(frozen=True)
class AnnotatedCorpus:
    entries: tuple[CorpusEntry, ...]
    split: str = "all"
    seed: int = 0

    def __len__(self) -> int:
        return len(self.entries)

    def ids(self) -> list[str]:
        return [e.annotation.image_id for e in self.entries]


@dataclass(frozen=True)
class DegradationSpec:
    """Per-flaw severities plus the seed for the occluder draw."""

    severities: dict[FlawKind, int]
    seed: int = 0

    def __post_init__(self):
        if set(self.severities) != set(FLAW_ORDER):
            raise ValueError("degradation spec must cover all six flaw kinds")
        for kind, s in self.severities.items():
            check_severity(s, kind.value)


def unrecognizable_grade(severities: dict[FlawKind, int]) -> int:
    """u = clamp(round(0.8 max + 0.4 mean of the other five), 0, 5)."""
    vals = [severities[k] for k in FLAW_ORDER]
    mx = max(vals)
    others = list(vals)
    others.remove(mx)
    u = 0.8 * mx + 0.4 * (sum(others) / len(others))
    return min(5, max(0, round(u)))


# --- annotation files -----------------------------------------------------


def load_annotations(path) -> AnnotatedCorpus:
    """Parse an annotation file (schema version 1).

    `path` may be the JSON file or a corpus directory containing
    annotations.json. Labels outside 0..5, duplicate ids, or missing flaw
    keys are errors; "others"/"none" flaw keys are dropped with a notice.
    """
    path = Path(path)
    if path.is_dir():
        path = path / ANNOTATIONS_NAME
    try:
        with open(path, "r", encoding="utf-8") as fh:
            doc = json.load(fh)
    except FileNotFoundError:
        raise AnnotationError(f"annotation file not found: {path}") from None
    except json.JSONDecodeError as exc:
        raise AnnotationError(f"{path}: not valid JSON: {exc}") from None
    if not isinstance(doc, dict) or doc.get("version") != ANNOTATION_FILE_VERSION:
        raise AnnotationError(f"{path}: unsupported annotation schema version "
                              f"{doc.get('version')!r}")
    images = doc.get("images")
    if not isinstance(images, list):
        raise AnnotationError(f"{path}: missing images list")
    base = path.parent
    entries = []
    seen: set[str] = set()
    flaw_names = {k.value: k for k in FLAW_ORDER}
    for item in images:
        image_id = item.get("id")
        if not isinstance(image_id, str) or not image_id:
            raise AnnotationError(f"{path}: image entry without a valid id")
        if image_id in seen:
            raise AnnotationError(f"{path}: duplicate image_id {image_id!r}")
        seen.add(image_id)
        rel = item.get("file")
        if not isinstance(rel, str) or not rel:
            raise AnnotationError(f"{path}: image {image_id!r} has no file")
        unrec = item.get("unrecognizable")
        if not isinstance(unrec, int) or isinstance(unrec, bool) or not 0 <= unrec <= 5:
            raise AnnotationError(
                f"{path}: image {image_id!r} unrecognizable label {unrec!r} "
                f"outside 0..5"
            )
        raw_flaws = item.get("flaws")
        if not isinstance(raw_flaws, dict):
            raise AnnotationError(f"{path}: image {image_id!r} has no flaws map")
        flaws: dict[FlawKind, int] = {}
        for name, value in raw_flaws.items():
            if name in ("others", "none"):
                log.info("dropping %r label for image %s", name, image_id)
                continue
            kind = flaw_names.get(name)
            if kind is None:
                raise AnnotationError(f"{path}: image {image_id!r} has unknown flaw "
                                      f"{name!r}")
            if not isinstance(value, int) or isinstance(value, bool) or not 0 <= value <= 5:
                raise AnnotationError(
                    f"{path}: image {image_id!r} flaw {name!r} label {value!r} "
                    f"outside 0..5"
                )
            flaws[kind] = value
        missing = [k.value for k in FLAW_ORDER if k not in flaws]
        if missing:
            raise AnnotationError(
                f"{path}: image {image_id!r} missing flaw labels {missing}"
            )
        captions = item.get("captions") or []
        if not isinstance(captions, list) or not all(isinstance(c, str) for c in captions):
            raise AnnotationError(f"{path}: image {image_id!r} captions must be strings")
        entries.append(
            CorpusEntry(
                path=(base / rel),
                annotation=QualityAnnotation(
                    image_id=image_id,
                    unrecognizable=unrec,
                    flaws=flaws,
                    captions=tuple(captions),
                ),
            )
        )
    return AnnotatedCorpus(tuple(entries))


def save_annotations(corpus: AnnotatedCorpus, path, base_dir=None) -> None:
    """Write the version-1 annotation schema; file paths stored relative to
    the output file's directory (or `base_dir` when given)."""
    path = Path(path)
    base = Path(base_dir) if base_dir is not None else path.parent
    images = []
    for e in corpus.entries:
        ann = e.annotation
        try:
            rel = e.path.relative_to(base)
        except ValueError:
            rel = e.path
        images.append({
            "id": ann.image_id,
            "file": str(rel),
            "unrecognizable": ann.unrecognizable,
            "flaws": {k.value: ann.flaws[k] for k in FLAW_ORDER},
            "captions": list(ann.captions),
        })
    doc = {"version": ANNOTATION_FILE_VERSION, "images": images}
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=1)
        fh.write("\n")


def load_catalog(path) -> dict[str, dict[str, str]]:
    path = Path(path)
    if path.is_dir():
        path = path / CATALOG_NAME
    with open(path, "r", encoding="utf-8") as fh:
        doc = json.load(fh)
    if not isinstance(doc, dict):
        raise AnnotationError(f"{path}: catalog must be a JSON object")
    for image_id, caps in doc.items():
        if not isinstance(caps, dict) or "clean" not in caps or "degraded" not in caps:
            raise AnnotationError(f"{path}: catalog entry {image_id!r} needs clean "
                                  f"and degraded captions")
    return doc


# --- splitting -------------------------------------------------------------


def split_validation(corpus: AnnotatedCorpus, seed: int):
    """Seeded shuffle, first ceil(n/2) entries to val, rest to test."""
    n = len(corpus.entries)
    if n < 2:
        raise ValueError("need at least 2 entries to split")
    order = list(corpus.entries)
    random.Random(seed).shuffle(order)
    half = (n + 1) // 2
    val = AnnotatedCorpus(tuple(order[:half]), split="val", seed=seed)
    test = AnnotatedCorpus(tuple(order[half:]), split="test", seed=seed)
    return val, test


def split_corpus(corpus: AnnotatedCorpus, seed: int):
    """70% train; the remaining pool is halved into val/test."""
    n = len(corpus.entries)
    if n < 4:
        raise ValueError("need at least 4 entries for a train/val/test split")
    order = list(corpus.entries)
    random.Random(seed).shuffle(order)
    n_train = max(1, (7 * n) // 10)
    if n - n_train < 2:
        n_train = n - 2
    train = AnnotatedCorpus(tuple(order[:n_train]), split="train", seed=seed)
    pool = AnnotatedCorpus(tuple(order[n_train:]), split="pool", seed=seed)
    val, test = split_validation(pool, seed)
    return train, val, test


def select_split(corpus: AnnotatedCorpus, split: str, seed: int) -> AnnotatedCorpus:
    train, val, test = split_corpus(corpus, seed)
    try:
        return {"train": train, "val": val, "test": test, "all": replace(corpus, seed=seed)}[split]
    except KeyError:
        raise ValueError(f"unknown split {split!r} (train/val/test/all)") from None


# --- scene rendering --------------------------------------------------------


def _build_scene(seed: int):
    """Procedural 128x128 scene plus captions; deterministic per seed.

    Background is a two-tone gradient with a low ripple (keeps block variance
    above the flat-blob cutoff), on top of which sit 1-3 solid shapes and a
    high-frequency checker patch that gives the sharpness features signal.
    """
    rng = random.Random(seed)
    w = h = SCENE_SIZE
    pix = array("d", bytes(8 * 3 * w * h))

    names = list(_COLORS)
    bg_name = names[rng.randrange(len(names))]
    c0 = _COLORS[bg_name]
    c1 = tuple(0.65 * v + 0.35 for v in c0)  # lighter companion tone
    horizontal = rng.random() < 0.5
    # axis-aligned ripple keeps every block above the flat-blob variance
    # cutoff without injecting diagonal gradient energy
    kernels.fill_gradient(
        pix, w, h, c0[0], c0[1], c0[2], c1[0], c1[1], c1[2],
        1 if horizontal else 0, 0.03, 6.0, 0.0,
    )

    shape = _SHAPES[rng.randrange(len(_SHAPES))]
    fg_name = bg_name
    while fg_name == bg_name:
        fg_name = names[rng.randrange(len(names))]
    fg = _COLORS[fg_name]
    half = rng.uniform(18.0, 30.0)
    cx = rng.uniform(40.0, 88.0)
    cy = rng.uniform(40.0, 88.0)
    _draw_shape(pix, w, h, shape, cx, cy, half, fg)

    for _ in range(rng.randrange(3)):
        extra_name = names[rng.randrange(len(names))]
        if extra_name == bg_name:
            continue
        ec = _COLORS[extra_name]
        ehalf = rng.uniform(8.0, 16.0)
        ex = rng.uniform(20.0, 108.0)
        ey = rng.uniform(20.0, 108.0)
        _draw_shape(pix, w, h, _SHAPES[rng.randrange(len(_SHAPES))], ex, ey, ehalf, ec)

    # high-frequency grating patch: vertical bars over horizontal bars.
    # Strong signal for the sharpness features, and purely axis-aligned
    # gradients so the orientation feature stays near zero until rotated.
    tx = rng.randrange(8, 96)
    ty = rng.randrange(8, 96)
    for k in range(6):
        kernels.fill_rect(pix, w, h, tx + 4 * k, ty, tx + 4 * k + 2, ty + 12,
                          0.92, 0.92, 0.92)
        kernels.fill_rect(pix, w, h, tx + 4 * k + 2, ty, tx + 4 * k + 4, ty + 12,
                          0.12, 0.12, 0.12)
        kernels.fill_rect(pix, w, h, tx, ty + 12 + 2 * k, tx + 24, ty + 12 + 2 * k + 1,
                          0.92, 0.92, 0.92)
        kernels.fill_rect(pix, w, h, tx, ty + 13 + 2 * k, tx + 24, ty + 14 + 2 * k,
                          0.12, 0.12, 0.12)

    refs = [
        f"a {fg_name} {shape} on a {bg_name} background",
        f"photo of a {fg_name} {shape} over a {bg_name} backdrop",
        f"there is a {fg_name} {shape} in the picture",
        f"an image showing a {fg_name} {shape} on {bg_name}",
        f"the picture shows a {fg_name} {shape} against a {bg_name} background",
    ]
    clean = f"a photo of a {fg_name} {shape} on a {bg_name} background"
    return RasterImage(w, h, pix), refs, clean


def _draw_shape(pix, w, h, shape, cx, cy, half, color):
    r, g, b = color
    if shape == "circle":
        kernels.draw_circle(pix, w, h, cx, cy, half, r, g, b)
    elif shape == "square":
        x0 = max(0, int(math.floor(cx - half)))
        y0 = max(0, int(math.floor(cy - half)))
        x1 = min(w, int(math.floor(cx + half)) + 1)
        y1 = min(h, int(math.floor(cy + half)) + 1)
        kernels.fill_rect(pix, w, h, x0, y0, x1, y1, r, g, b)
    else:
        kernels.draw_triangle(
            pix, w, h, cx, cy - half, cx - half, cy + half, cx + half, cy + half, r, g, b
        )


def render_scene(seed: int):
    """(image, 5 reference captions), deterministic per seed."""
    img, refs, _ = _build_scene(seed)
    return img, refs


# --- degradation -------------------------------------------------------------


def _gaussian_weights(sigma: float):
    radius = int(math.ceil(3.0 * sigma))
    raw = [math.exp(-(i * i) / (2.0 * sigma * sigma)) for i in range(-radius, radius + 1)]
    total = sum(raw)
    return array("d", [v / total for v in raw]), radius


def degrade_image(img: RasterImage, spec: DegradationSpec) -> RasterImage:
    """Apply the degrade-v1 stages in fixed order; severity 0 stages are the
    identity."""
    w, h = img.width, img.height
    cur = img.copy_pixels()
    buf = array("d", bytes(8 * 3 * w * h))

    f = FRAMING_OFF[spec.severities[FlawKind.FRAMING]]
    if f > 0.0:
        kernels.shift_extend(cur, w, h, round(f * w), 0, buf)
        cur, buf = buf, cur

    angle = ROTATION_DEG[spec.severities[FlawKind.ROTATION]]
    if angle != 0.0:
        rad = math.radians(angle)
        kernels.rotate_bilinear(cur, w, h, math.cos(rad), math.sin(rad), buf)
        cur, buf = buf, cur

    sigma = BLUR_SIGMA[spec.severities[FlawKind.BLUR]]
    if sigma > 0.0:
        wts, radius = _gaussian_weights(sigma)
        kernels.blur_h(cur, w, h, wts, radius, buf)
        cur, buf = buf, cur
        kernels.blur_v(cur, w, h, wts, radius, buf)
        cur, buf = buf, cur

    gain = DARK_GAIN[spec.severities[FlawKind.DARK]]
    if gain != 1.0:
        kernels.scale_gain(cur, 3 * w * h, gain, buf)
        cur, buf = buf, cur

    blend = BRIGHT_BLEND[spec.severities[FlawKind.BRIGHT]]
    if blend > 0.0:
        kernels.blend_white(cur, 3 * w * h, blend, buf)
        cur, buf = buf, cur

    area = OBSCURED_AREA[spec.severities[FlawKind.OBSCURED]]
    if area > 0.0:
        rng = random.Random(spec.seed)
        side = min(min(w, h), max(1, round(math.sqrt(area * w * h))))
        x0 = rng.randint(0, w - side)
        y0 = rng.randint(0, h - side)
        shade = rng.uniform(0.05, 0.2)
        kernels.fill_rect(cur, w, h, x0, y0, x0 + side, y0 + side, shade, shade, shade)

    return RasterImage(w, h, cur)


# --- generation ---------------------------------------------------------------


def generate_corpus(count: int, seed: int, out_dir) -> AnnotatedCorpus:
    """Render, degrade, and write `count` annotated samples.

    Per sample the sub-seed is derived from (seed, index), so output is a
    pure function of (count, seed): same arguments, byte-identical trees.
    Severities are 0 with probability 0.7, else uniform on 1..5. Writes
    images/*.ppm, annotations.json, and the stub-captioner catalog.
    """
    if count < 1:
        raise ValueError("count must be >= 1")
    out = Path(out_dir)
    images_dir = out / "images"
    images_dir.mkdir(parents=True, exist_ok=True)

    entries = []
    catalog: dict[str, dict[str, str]] = {}
    for idx in range(count):
        srng = random.Random(seed * 1_000_003 + idx)
        scene_seed = srng.randrange(2**62)
        severities = {}
        for kind in FLAW_ORDER:
            if srng.random() < ZERO_SEVERITY_RATE:
                severities[kind] = 0
            else:
                severities[kind] = srng.randint(1, 5)
        degraded_caption = DEGRADED_CAPTIONS[srng.randrange(len(DEGRADED_CAPTIONS))]
        occ_seed = srng.randrange(2**31)

        scene, refs, clean_caption = _build_scene(scene_seed)
        degraded = degrade_image(scene, DegradationSpec(severities, occ_seed))

        image_id = f"img_{idx:06d}"
        rel = f"images/{image_id}.ppm"
        with open(out / rel, "wb") as fh:
            fh.write(encode_ppm(degraded))
        entries.append(
            CorpusEntry(
                path=out / rel,
                annotation=QualityAnnotation(
                    image_id=image_id,
                    unrecognizable=unrecognizable_grade(severities),
                    flaws=severities,
                    captions=tuple(refs),
                ),
            )
        )
        catalog[image_id] = {"clean": clean_caption, "degraded": degraded_caption}

    corpus = AnnotatedCorpus(tuple(entries), split="all", seed=seed)
    save_annotations(corpus, out / ANNOTATIONS_NAME, base_dir=out)
    with open(out / CATALOG_NAME, "w", encoding="utf-8") as fh:
        json.dump(catalog, fh, indent=1)
        fh.write("\n")
    return corpus
