import math
import random
from array import array

import pytest

from pinf.corpus import DegradationSpec, degrade_image, render_scene
from pinf.features import (
    FEATURE_COUNT,
    FeatureVector,
    Scaler,
    SizeError,
    extract_features,
    fit_scaler,
)
from pinf.images import RasterImage
from pinf.quality import FLAW_ORDER, FlawKind

from .conftest import image_from_fn


def severities(**overrides):
    base = {k: 0 for k in FLAW_ORDER}
    base.update({FlawKind(name): v for name, v in overrides.items()})
    return base


def test_flat_mid_gray():
    img = RasterImage.filled(16, 16, (0.5, 0.5, 0.5))
    f = extract_features(img).values
    assert f[0] == 0.0 and f[1] == 0.0
    assert f[2] == 0.5
    assert f[4] == 0.0 and f[5] == 0.0
    assert all(f[13 + i] == 0.5 for i in range(16))


def test_all_black_fractions():
    f = extract_features(RasterImage.filled(16, 16, (0.0, 0.0, 0.0))).values
    assert f[4] == 1.0
    assert f[5] == 0.0


def test_all_white_fraction():
    f = extract_features(RasterImage.filled(16, 16, (1.0, 1.0, 1.0))).values
    assert f[5] == 1.0


def test_size_guard():
    with pytest.raises(SizeError):
        extract_features(RasterImage.filled(7, 16))


def test_occluder_blob_features():
    # bright flat occluder over one quadrant of an otherwise noisy image
    rng = random.Random(1)

    def pixel(x, y):
        if x < 16 and y < 16:
            return (0.9, 0.9, 0.9)
        v = rng.random()
        return (v, 1.0 - v, v * v)

    img = image_from_fn(32, 32, pixel)
    f = extract_features(img).values
    assert f[10] >= 0.2  # quadrant area fraction is 0.25
    assert abs(f[11] - 0.9) < 1e-9  # blob luminance equals the occluder's

    # brute-force check of the blob area over the 8x8 block grid
    gray = img.luminance()
    low = []
    for by in range(8):
        for bx in range(8):
            vals = [gray[y * 32 + x]
                    for y in range(by * 4, by * 4 + 4)
                    for x in range(bx * 4, bx * 4 + 4)]
            mean = sum(vals) / len(vals)
            var = sum((v - mean) ** 2 for v in vals) / len(vals)
            low.append(var < 1e-4)
    # quadrant = 4x4 blocks of 16 px each
    assert sum(low) >= 16


def test_determinism_bit_exact():
    img, _ = render_scene(5)
    a = extract_features(img).values
    b = extract_features(img).values
    assert a.tobytes() == b.tobytes()


def test_blur_strictly_reduces_sharpness():
    for seed in (1, 2, 3):
        img, _ = render_scene(seed)
        base = extract_features(img).values[0]
        for s in (1, 3, 5):
            blurred = degrade_image(img, DegradationSpec(severities(blur=s)))
            assert extract_features(blurred).values[0] < base


def test_dark_gain_scales_mean_luminance():
    img, _ = render_scene(9)
    base = extract_features(img).values[2]
    for gain in (0.9, 0.5, 0.2):
        scaled = RasterImage(
            img.width, img.height, array("d", [v * gain for v in img.pixels])
        )
        assert abs(extract_features(scaled).values[2] - gain * base) < 1e-9


def test_rotation_moves_orientation_deviation():
    img, _ = render_scene(3)
    base = extract_features(img).values[8]
    rotated = degrade_image(img, DegradationSpec(severities(rotation=3)))  # 45 deg
    assert extract_features(rotated).values[8] > base + 0.2


def test_all_features_finite_on_varied_images():
    rng = random.Random(2)
    for trial in range(5):
        w = rng.randint(8, 40)
        h = rng.randint(8, 40)
        img = image_from_fn(w, h, lambda x, y: (rng.random(), rng.random(), rng.random()))
        f = extract_features(img)
        assert len(f.values) == FEATURE_COUNT
        assert all(math.isfinite(v) for v in f.values)


def vec(values):
    return FeatureVector(array("d", values))


def test_fit_scaler_single_vector_floors_std():
    f = vec(list(range(FEATURE_COUNT)))
    scaler = fit_scaler([f])
    assert list(scaler.mean) == [float(v) for v in range(FEATURE_COUNT)]
    assert all(s == 1e-8 for s in scaler.std)


def test_fit_scaler_two_vectors():
    a = vec([0.0] * FEATURE_COUNT)
    b = vec([2.0] * FEATURE_COUNT)
    scaler = fit_scaler([a, b])
    assert all(m == 1.0 for m in scaler.mean)
    assert all(s == 1.0 for s in scaler.std)


def test_standardized_fit_set_is_zero_mean_unit_std():
    rng = random.Random(4)
    feats = [vec([rng.uniform(-3, 3) for _ in range(FEATURE_COUNT)]) for _ in range(40)]
    scaler = fit_scaler(feats)
    z = [scaler.apply(f) for f in feats]
    for i in range(FEATURE_COUNT):
        col = [row[i] for row in z]
        mean = sum(col) / len(col)
        std = math.sqrt(sum((v - mean) ** 2 for v in col) / len(col))
        assert abs(mean) < 1e-9
        assert abs(std - 1.0) < 1e-9


def test_fit_scaler_rejects_empty():
    with pytest.raises(ValueError):
        fit_scaler([])
