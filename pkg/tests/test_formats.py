import math

import numpy as np
import pytest

from patchlr.errors import FormatError, InvalidArgumentError
from patchlr.formats import (
    read_idx,
    read_pgm,
    read_sinogram,
    write_idx,
    write_pgm,
    write_sinogram,
)
from patchlr.metrics import psnr
from patchlr.synth import MaskSpec, gen_mask, make_phantom, texture_value


def test_pgm_round_trip_binary_and_ascii(tmp_path):
    rng = np.random.default_rng(0)
    img = rng.integers(0, 256, size=(16, 16)).astype(np.float64)
    p5 = tmp_path / "img.pgm"
    p2 = tmp_path / "img_ascii.pgm"
    write_pgm(img, p5, binary=True)
    write_pgm(img, p2, binary=False)
    np.testing.assert_array_equal(read_pgm(p5), img)
    np.testing.assert_array_equal(read_pgm(p2), img)
    np.testing.assert_array_equal(read_pgm(p5), read_pgm(p2))


def test_pgm_hand_encoded_p5(tmp_path):
    path = tmp_path / "hand.pgm"
    path.write_bytes(b"P5\n2 2\n255\n" + bytes([0, 64, 128, 255]))
    np.testing.assert_array_equal(
        read_pgm(path), [[0.0, 64.0], [128.0, 255.0]]
    )


def test_pgm_header_comments_and_ascii(tmp_path):
    path = tmp_path / "c.pgm"
    path.write_text("P2\n# say hi\n3 1\n255\n1 2 3\n")
    np.testing.assert_array_equal(read_pgm(path), [[1.0, 2.0, 3.0]])


def test_pgm_rejects_bad_maxval_with_offset(tmp_path):
    path = tmp_path / "bad.pgm"
    path.write_bytes(b"P5\n2 2\n65535\n" + bytes(8))
    with pytest.raises(FormatError) as err:
        read_pgm(path)
    assert err.value.offset == 7


def test_pgm_rejects_truncation(tmp_path):
    path = tmp_path / "short.pgm"
    path.write_bytes(b"P5\n4 4\n255\n" + bytes(5))
    with pytest.raises(FormatError):
        read_pgm(path)


def test_pgm_rejects_wrong_magic(tmp_path):
    path = tmp_path / "ppm.pgm"
    path.write_bytes(b"P6\n1 1\n255\n\0\0\0")
    with pytest.raises(FormatError):
        read_pgm(path)


def test_idx_image_round_trip(tmp_path):
    rng = np.random.default_rng(1)
    imgs = rng.integers(0, 256, size=(2, 28, 28)).astype(np.uint8)
    path = tmp_path / "imgs.idx"
    write_idx(path, imgs)
    dims, data = read_idx(path)
    assert dims == (2, 28, 28)
    np.testing.assert_array_equal(data, imgs)
    # header matches the published layout for image tensors
    blob = path.read_bytes()
    assert blob[:4] == (0x803).to_bytes(4, "big")
    assert int.from_bytes(blob[4:8], "big") == 2
    assert int.from_bytes(blob[8:12], "big") == 28


def test_idx_label_round_trip(tmp_path):
    labels = np.array([3, 1, 4, 1, 5], dtype=np.uint8)
    path = tmp_path / "lab.idx"
    write_idx(path, labels)
    dims, data = read_idx(path)
    assert dims == (5,)
    np.testing.assert_array_equal(data, labels)
    assert path.read_bytes()[:4] == (0x801).to_bytes(4, "big")


def test_idx_rejects_bad_magic(tmp_path):
    path = tmp_path / "bad.idx"
    path.write_bytes((0x805).to_bytes(4, "big") + bytes(12))
    with pytest.raises(FormatError):
        read_idx(path)


def test_idx_rejects_short_payload(tmp_path):
    path = tmp_path / "short.idx"
    path.write_bytes((0x801).to_bytes(4, "big") + (10).to_bytes(4, "big") + bytes(3))
    with pytest.raises(FormatError):
        read_idx(path)


def test_sinogram_raw_round_trip(tmp_path):
    rng = np.random.default_rng(2)
    sino = rng.normal(size=(5, 9))
    path = tmp_path / "sino.raw"
    write_sinogram(sino, path)
    out = read_sinogram(path)
    np.testing.assert_array_equal(out, sino)
    assert path.read_bytes().startswith(b"5 9\n")


def test_sinogram_csv_round_trip(tmp_path):
    rng = np.random.default_rng(3)
    sino = rng.normal(size=(4, 6))
    path = tmp_path / "sino.csv"
    write_sinogram(sino, path)
    np.testing.assert_array_equal(read_sinogram(path), sino)


def test_mask_full_rate_and_grid():
    full = gen_mask(MaskSpec(kind="random", rate=1.0, seed=0), 5, 7)
    assert full.all()
    grid = gen_mask(MaskSpec(kind="grid", stride=2), 4, 4)
    expected = np.zeros((4, 4), dtype=bool)
    expected[::2, ::2] = True
    np.testing.assert_array_equal(grid, expected)


def test_mask_exact_count_and_determinism():
    spec = MaskSpec(kind="random", rate=0.1, seed=11)
    mask = gen_mask(spec, 256, 256)
    assert int(mask.sum()) == 6554
    np.testing.assert_array_equal(mask, gen_mask(spec, 256, 256))
    assert not np.array_equal(
        mask, gen_mask(MaskSpec(kind="random", rate=0.1, seed=12), 256, 256)
    )


def test_mask_validation():
    with pytest.raises(InvalidArgumentError):
        gen_mask(MaskSpec(kind="random", rate=0.0, seed=0), 8, 8)
    with pytest.raises(InvalidArgumentError):
        gen_mask(MaskSpec(kind="nope"), 8, 8)


def test_mask_file_kind(tmp_path):
    img = np.zeros((4, 4))
    img[1, 2] = 255.0
    path = tmp_path / "m.pgm"
    write_pgm(img, path)
    mask = gen_mask(MaskSpec(kind="file", path=str(path)), 4, 4)
    assert mask.sum() == 1 and mask[1, 2]


def test_phantom_disk_values():
    disk = make_phantom("disk", 64)
    assert disk[32, 32] == 255.0
    assert disk[0, 0] == 0.0


def test_phantom_texture_matches_closed_form():
    n = 32
    tex = make_phantom("texture", n)
    rng = np.random.default_rng(4)
    for _ in range(10):
        i = int(rng.integers(0, n))
        j = int(rng.integers(0, n))
        assert tex[i, j] == pytest.approx(
            texture_value((i + 0.5) / n, (j + 0.5) / n), abs=1e-12
        )
    assert tex.min() >= 0.0 and tex.max() <= 255.0


def test_phantom_shepp_like_range():
    ph = make_phantom("shepp-like", 64)
    assert ph.min() >= 0.0 and ph.max() <= 255.0
    assert ph[32, 32] > 0.0


def test_phantom_validation():
    with pytest.raises(InvalidArgumentError):
        make_phantom("disk", 4)
    with pytest.raises(InvalidArgumentError):
        make_phantom("blob", 32)


def test_psnr_identical_is_infinite():
    rng = np.random.default_rng(5)
    img = rng.random((8, 8))
    assert psnr(img, img) == math.inf


def test_psnr_unit_offset_formula():
    rng = np.random.default_rng(6)
    ref = rng.integers(0, 256, size=(16, 16)).astype(np.float64)
    ref[0, 0], ref[0, 1] = 0.0, 255.0
    value = psnr(ref + 1.0, ref)
    assert value == pytest.approx(10.0 * math.log10(255.0**2), abs=1e-10)


def test_psnr_matches_reimplementation():
    rng = np.random.default_rng(7)
    ref = rng.random((12, 9)) * 200
    f = ref + rng.normal(size=ref.shape)
    expected = 10.0 * math.log10(
        ref.size * (ref.max() - ref.min()) ** 2 / ((f - ref) ** 2).sum()
    )
    assert psnr(f, ref) == pytest.approx(expected, abs=1e-10)


def test_psnr_rejects_constant_reference_and_shape():
    with pytest.raises(InvalidArgumentError):
        psnr(np.zeros((3, 3)), np.full((3, 3), 9.0))
    with pytest.raises(InvalidArgumentError):
        psnr(np.zeros((3, 3)), np.zeros((4, 3)))
