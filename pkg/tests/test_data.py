import numpy as np
import pytest

from gcdm import rng
from gcdm.data import (
    InfeasibleSpec,
    PhantomSpec,
    generate_dataset,
    generate_phantom,
    load_image,
    load_mask,
    preprocess_real,
    read_manifest,
    save_image,
    save_mask,
    write_manifest,
)
from gcdm.data.manifest import Manifest, ManifestEntry
from gcdm.data.phantom import split_of
from gcdm.labeling import label_components


def test_phantom_deterministic():
    spec = PhantomSpec()
    a = generate_phantom(spec, 42)
    b = generate_phantom(spec, 42)
    np.testing.assert_array_equal(a.image, b.image)
    np.testing.assert_array_equal(a.mask.channels, b.mask.channels)


def test_phantom_no_lesions():
    sample = generate_phantom(PhantomSpec(lesion_count=(0, 0)), 5)
    assert sample.mask.mass.sum() == 0
    assert sample.lesions == []


def test_phantom_two_lesions_two_components():
    spec = PhantomSpec(lesion_count=(2, 2))
    for seed in range(6):
        sample = generate_phantom(spec, seed)
        _, count = label_components(sample.mask.mass)
        assert count == 2


def test_phantom_lesions_inside_breast():
    spec = PhantomSpec(lesion_count=(1, 3))
    for seed in range(6):
        sample = generate_phantom(spec, seed)
        support = (sample.mask.breast + sample.mask.mass) > 0
        assert not (sample.mask.mass.astype(bool) & ~support).any()
        assert sample.mask.mass.sum() <= sample.mask.breast.sum() + sample.mask.mass.sum()


def test_phantom_intensities_in_unit_interval():
    for seed in range(6):
        sample = generate_phantom(PhantomSpec(), seed)
        assert sample.image.min() >= 0.0
        assert sample.image.max() <= 1.0


def test_phantom_infeasible_spec_rejected():
    with pytest.raises(ValueError):
        PhantomSpec(lesion_radius=(30.0, 40.0))
    tight = PhantomSpec(
        lesion_count=(3, 3), lesion_radius=(6.0, 6.4), breast_depth=(0.30, 0.31),
        breast_height=(0.30, 0.31),
    )
    with pytest.raises(InfeasibleSpec):
        for seed in range(20):
            generate_phantom(tight, seed)


# -- image / mask files -------------------------------------------------------------------


def test_image_roundtrip_16bit(tmp_path):
    g = rng.stream(0, "img")
    image = (np.round(g.random((32, 32)) * 65535) / 65535).astype(np.float32)
    save_image(tmp_path / "x.png", image)
    loaded = load_image(tmp_path / "x.png")
    np.testing.assert_allclose(loaded, image, atol=1e-9)


def test_image_range_checked(tmp_path):
    with pytest.raises(ValueError):
        save_image(tmp_path / "bad.png", np.full((4, 4), 1.5))


def test_mask_roundtrip(tmp_path):
    sample = generate_phantom(PhantomSpec(lesion_count=(1, 2)), 3)
    save_mask(tmp_path / "m.png", sample.mask)
    loaded = load_mask(tmp_path / "m.png")
    np.testing.assert_array_equal(loaded.channels, sample.mask.channels)


# -- dataset / manifest -------------------------------------------------------------------


def test_generate_dataset_manifest_roundtrip(tmp_path):
    manifest = generate_dataset(PhantomSpec(), 10, 1, tmp_path)
    assert len({e.sample_id for e in manifest.entries}) == 10
    loaded = read_manifest(tmp_path / "manifest.txt")
    assert loaded == manifest


def test_generate_dataset_regeneration_byte_identical(tmp_path):
    generate_dataset(PhantomSpec(), 6, 9, tmp_path / "a")
    generate_dataset(PhantomSpec(), 6, 9, tmp_path / "b")
    for rel in sorted(p.relative_to(tmp_path / "a") for p in (tmp_path / "a").rglob("*.png")):
        assert (tmp_path / "a" / rel).read_bytes() == (tmp_path / "b" / rel).read_bytes()
    assert (tmp_path / "a/manifest.txt").read_text() == (tmp_path / "b/manifest.txt").read_text()


def test_split_proportions_near_quota():
    ids = [f"ph{i:06d}" for i in range(1000)]
    counts = {"train": 0, "val": 0, "test": 0}
    for sample_id in ids:
        counts[split_of(sample_id, ids)] += 1
    assert abs(counts["train"] - 700) <= 2
    assert abs(counts["val"] - 100) <= 2
    assert abs(counts["test"] - 200) <= 2


def test_split_deterministic_in_id_set():
    ids = [f"ph{i:06d}" for i in range(50)]
    first = [split_of(s, ids) for s in ids]
    second = [split_of(s, list(reversed(ids))) for s in ids]
    assert first == second


def test_manifest_rejects_duplicate_ids(tmp_path):
    (tmp_path / "images").mkdir()
    (tmp_path / "masks").mkdir()
    for rel in ("images/a.png", "masks/a.png"):
        save_image(tmp_path / rel, np.zeros((4, 4)))
    entries = [
        ManifestEntry("a", "images/a.png", "masks/a.png", "train"),
        ManifestEntry("a", "images/a.png", "masks/a.png", "test"),
    ]
    with pytest.raises(ValueError):
        write_manifest(Manifest(entries), tmp_path / "manifest.txt")


def test_manifest_missing_file_rejected(tmp_path):
    (tmp_path / "manifest.txt").write_text(
        "gcdm-manifest 1\na\timages/a.png\tmasks/a.png\ttrain\n", encoding="utf-8"
    )
    with pytest.raises(FileNotFoundError):
        read_manifest(tmp_path / "manifest.txt")


def test_manifest_version_mismatch(tmp_path):
    (tmp_path / "manifest.txt").write_text("gcdm-manifest 9\n", encoding="utf-8")
    with pytest.raises(ValueError):
        read_manifest(tmp_path / "manifest.txt")


# -- preprocessing -------------------------------------------------------------------------


def test_preprocess_bright_square_crop():
    image = np.zeros((40, 50))
    image[10:30, 5:25] = 0.6
    out = preprocess_real(image, size=16)
    assert out.shape == (16, 16)
    assert out.min() >= 0.0 and out.max() <= 1.0


def test_preprocess_degenerate_constant_maps_to_zero():
    image = np.zeros((30, 30))
    image[5:25, 5:25] = 0.5
    out = preprocess_real(image, size=8)
    np.testing.assert_array_equal(out, 0.0)


def test_preprocess_no_foreground_raises():
    with pytest.raises(ValueError):
        preprocess_real(np.zeros((10, 10)), size=8)


def test_preprocess_black_margin_invariance():
    sample = generate_phantom(PhantomSpec(lesion_count=(1, 2), background_band=(0.05, 0.08)), 8)
    image = sample.image.astype(np.float64)
    padded = np.zeros((image.shape[0] + 20, image.shape[1] + 14))
    padded[9 : 9 + image.shape[0], 6 : 6 + image.shape[1]] = image
    direct = preprocess_real(image, size=32)
    via_margin = preprocess_real(padded, size=32)
    np.testing.assert_allclose(via_margin, direct, atol=1e-3)
