import struct
import zlib
from array import array

import pytest

from pinf._backend import available_backends, get_backend
from pinf.images import RasterImage


def ppm_bytes(width, height, rgb_bytes) -> bytes:
    """Build a binary PPM from raw 8-bit RGB payload bytes."""
    assert len(rgb_bytes) == 3 * width * height
    return f"P6\n{width} {height}\n255\n".encode() + bytes(rgb_bytes)


def png_bytes(width, height, rgb_rows, color_type=2) -> bytes:
    """Minimal PNG encoder (8-bit, filter 0 rows) for decoder tests."""

    def chunk(ctype: bytes, body: bytes) -> bytes:
        return (
            struct.pack(">I", len(body))
            + ctype
            + body
            + struct.pack(">I", zlib.crc32(ctype + body) & 0xFFFFFFFF)
        )

    ihdr = struct.pack(">IIBBBBB", width, height, 8, color_type, 0, 0, 0)
    raw = b"".join(b"\x00" + bytes(row) for row in rgb_rows)
    return (
        b"\x89PNG\r\n\x1a\n"
        + chunk(b"IHDR", ihdr)
        + chunk(b"IDAT", zlib.compress(raw))
        + chunk(b"IEND", b"")
    )


def image_from_fn(width, height, fn) -> RasterImage:
    """Build an image from fn(x, y) -> (r, g, b) in [0, 1]."""
    buf = array("d", bytes(8 * 3 * width * height))
    for y in range(height):
        for x in range(width):
            r, g, b = fn(x, y)
            i = (y * width + x) * 3
            buf[i], buf[i + 1], buf[i + 2] = r, g, b
    return RasterImage(width, height, buf)


@pytest.fixture(params=available_backends())
def backend(request):
    """Run kernel-level tests against every available backend."""
    return get_backend(request.param)


@pytest.fixture
def both_backends():
    names = available_backends()
    if len(names) < 2:
        pytest.skip("compiled backend not built; parity needs both")
    return [get_backend(n) for n in names]


@pytest.fixture(scope="session")
def small_trained_model(tmp_path_factory):
    """A quick 240-sample corpus and a model trained on it, shared across
    tests that need realistic predictions (pipeline, service, CLI)."""
    from pinf.corpus import generate_corpus, split_corpus
    from pinf.features import extract_features
    from pinf.images import decode_image
    from pinf.model import TrainConfig, save_model, train

    root = tmp_path_factory.mktemp("trained")
    corpus_dir = root / "corpus"
    corpus = generate_corpus(240, 20, corpus_dir)
    train_split, val_split, _ = split_corpus(corpus, 0)

    def featurize(split):
        return [
            (extract_features(decode_image(e.path.read_bytes())),
             e.annotation.severity_vector())
            for e in split.entries
        ]

    cfg = TrainConfig(max_epochs=60, batch_size=64, seed=1, hidden=48)
    model, _ = train(featurize(train_split), featurize(val_split), cfg)
    model_path = root / "model.json"
    save_model(model, model_path)
    return model_path, corpus_dir
