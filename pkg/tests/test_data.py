"""Patch I/O, normalization, resizing, splits, and the synthetic generator."""

import numpy as np
import pytest

from opunet.data import (
    MIN_SYNTH_SIZE,
    DatasetManifest,
    PatchRecord,
    load_patch,
    normalize_bands,
    read_manifest,
    resize_bilinear,
    save_patch,
    select_channels,
    split_dataset,
    synth_generate,
    write_manifest,
)
from opunet.errors import FormatError

from oracles import bilinear_sample_naive


def _record(bands, mask=None, id=""):
    bands = np.asarray(bands, dtype=np.float32)
    if mask is None:
        mask = np.zeros(bands.shape[1:], dtype=np.uint8)
    return PatchRecord(bands, mask, id)


class TestNormalize:
    def test_endpoints_map_to_unit_interval(self):
        bands = np.array([[[0.0, 5.0], [10.0, 2.5]]], dtype=np.float32)
        out = normalize_bands(bands)
        assert out.min() == -1.0 and out.max() == 1.0
        np.testing.assert_allclose(out[0], [[-1.0, 0.0], [1.0, -0.5]])

    def test_channels_normalized_independently(self):
        bands = np.stack([np.linspace(0, 1, 16).reshape(4, 4),
                          np.linspace(100, 900, 16).reshape(4, 4)]).astype(np.float32)
        out = normalize_bands(bands)
        for c in range(2):
            assert out[c].min() == -1.0 and out[c].max() == 1.0

    def test_constant_channel_becomes_zero(self):
        bands = np.full((2, 3, 3), 7.0, dtype=np.float32)
        out = normalize_bands(bands)
        assert np.all(out == 0.0)

    def test_idempotent_on_full_range(self):
        rng = np.random.default_rng(0)
        bands = rng.uniform(-1, 1, (3, 8, 8)).astype(np.float32)
        bands[:, 0, 0] = -1.0
        bands[:, -1, -1] = 1.0
        np.testing.assert_allclose(normalize_bands(bands), bands, atol=1e-6)


class TestSelectChannels:
    def test_picks_swir_heavy_composite(self):
        bands = np.zeros((10, 2, 2), dtype=np.float32)
        for b in range(10):
            bands[b] = b
        mask = np.array([[1, 0], [0, 1]], dtype=np.uint8)
        out = select_channels(PatchRecord(bands, mask, "p"))
        assert out.bands.shape == (3, 2, 2)
        # bands are 1-indexed in the product convention: 7, 6, 2
        np.testing.assert_array_equal(out.bands[:, 0, 0], [6.0, 5.0, 1.0])
        np.testing.assert_array_equal(out.mask, mask)  # mask untouched
        assert out.id == "p"

    def test_requires_ten_bands(self):
        with pytest.raises(ValueError, match="10"):
            select_channels(_record(np.zeros((3, 2, 2), np.float32)))


class TestResize:
    @pytest.mark.parametrize("in_size,out_size", [(7, 13), (16, 8), (5, 5), (9, 32)])
    def test_matches_per_pixel_oracle(self, in_size, out_size):
        rng = np.random.default_rng(in_size * 100 + out_size)
        bands = rng.uniform(0, 2, (2, in_size, in_size)).astype(np.float32)
        mask = (rng.uniform(0, 1, (in_size, in_size)) < 0.3).astype(np.uint8)
        out = resize_bilinear(PatchRecord(bands, mask, "r"), out_size)
        assert out.bands.shape == (2, out_size, out_size)
        for c in range(2):
            want = bilinear_sample_naive(bands[c].astype(np.float64), out_size, out_size)
            np.testing.assert_allclose(out.bands[c], want, rtol=1e-5, atol=1e-6)

    def test_constant_image_stays_constant(self):
        rec = _record(np.full((1, 6, 6), 3.25, np.float32))
        out = resize_bilinear(rec, 17)
        np.testing.assert_allclose(out.bands, 3.25, rtol=1e-6)

    def test_same_size_is_identity(self):
        rng = np.random.default_rng(14)
        bands = rng.uniform(0, 1, (3, 9, 9)).astype(np.float32)
        mask = (rng.uniform(0, 1, (9, 9)) < 0.4).astype(np.uint8)
        out = resize_bilinear(PatchRecord(bands, mask, "i"), 9)
        np.testing.assert_array_equal(out.bands, bands)
        np.testing.assert_array_equal(out.mask, mask)

    def test_two_by_two_upsample_corners(self):
        rec = _record(np.array([[[0.0, 1.0], [2.0, 3.0]]], np.float32))
        out = resize_bilinear(rec, 4).bands[0]
        assert out[0, 0] == 0.0 and out[3, 3] == 3.0  # corners pinned
        assert 0.0 < out[1, 1] < 3.0 and 0.0 < out[2, 2] < 3.0  # interior blended
        want = bilinear_sample_naive(rec.bands[0].astype(np.float64), 4, 4)
        np.testing.assert_allclose(out, want, rtol=1e-6)

    def test_mask_stays_binary_under_nearest(self):
        rng = np.random.default_rng(8)
        mask = (rng.uniform(0, 1, (10, 10)) < 0.5).astype(np.uint8)
        rec = PatchRecord(np.zeros((1, 10, 10), np.float32), mask, "m")
        out = resize_bilinear(rec, 23)
        assert set(np.unique(out.mask)) <= {0, 1}
        # exact doubling: nearest neighbour replicates each pixel 2x2
        out2 = resize_bilinear(rec, 20)
        np.testing.assert_array_equal(out2.mask, np.kron(mask, np.ones((2, 2), np.uint8)))


class TestSplit:
    @pytest.mark.parametrize("n", [3, 10, 17, 100, 333, 1000])
    def test_sizes_and_partition(self, n):
        ids = [f"p{i}" for i in range(n)]
        m = split_dataset(ids, seed=0)
        assert len(m.train) == (4 * n) // 10
        assert len(m.val) == n // 10
        assert len(m.test) == n - len(m.train) - len(m.val)
        assert sorted(m.train + m.val + m.test) == sorted(ids)

    def test_ten_items_split_4_1_5(self):
        m = split_dataset([str(i) for i in range(10)], seed=1)
        assert (len(m.train), len(m.val), len(m.test)) == (4, 1, 5)

    def test_deterministic_and_seed_sensitive(self):
        ids = [str(i) for i in range(50)]
        a = split_dataset(ids, seed=3)
        b = split_dataset(ids, seed=3)
        assert a == b
        c = split_dataset(ids, seed=4)
        assert a != c

    def test_too_few_rejected(self):
        with pytest.raises(ValueError, match="at least 3"):
            split_dataset(["a", "b"], seed=0)


class TestPatchIO:
    def test_round_trip_exact(self, tmp_path):
        rng = np.random.default_rng(12)
        bands = rng.standard_normal((10, 6, 5)).astype(np.float32)
        mask = (rng.uniform(0, 1, (6, 5)) < 0.4).astype(np.uint8)
        path = tmp_path / "patch.ls8p"
        save_patch(PatchRecord(bands, mask, "patch"), path)
        back = load_patch(path)
        np.testing.assert_array_equal(back.bands, bands)
        np.testing.assert_array_equal(back.mask, mask)
        assert back.id == "patch"

    def test_bad_magic(self, tmp_path):
        p = tmp_path / "x.ls8p"
        p.write_bytes(b"XXXX" + bytes(20))
        with pytest.raises(FormatError, match="magic"):
            load_patch(p)

    def test_non_binary_mask_byte(self, tmp_path):
        p = tmp_path / "x.ls8p"
        save_patch(_record(np.zeros((1, 2, 2), np.float32)), p)
        blob = bytearray(p.read_bytes())
        blob[-1] = 2
        p.write_bytes(bytes(blob))
        with pytest.raises(FormatError, match="0/1"):
            load_patch(p)

    def test_length_mismatch(self, tmp_path):
        p = tmp_path / "x.ls8p"
        save_patch(_record(np.zeros((2, 3, 3), np.float32)), p)
        blob = p.read_bytes()
        for bad in (blob[:-1], blob + b"\x00"):
            p.write_bytes(bad)
            with pytest.raises(FormatError, match="length"):
                load_patch(p)

    def test_unsupported_dtype_code(self, tmp_path):
        p = tmp_path / "x.ls8p"
        save_patch(_record(np.zeros((1, 2, 2), np.float32)), p)
        blob = bytearray(p.read_bytes())
        blob[16] = 1
        p.write_bytes(bytes(blob))
        with pytest.raises(FormatError, match="dtype"):
            load_patch(p)

    def test_record_validation(self):
        with pytest.raises(ValueError, match="binary"):
            PatchRecord(np.zeros((1, 2, 2), np.float32),
                        np.full((2, 2), 3, np.uint8))
        with pytest.raises(ValueError, match="mask shape"):
            PatchRecord(np.zeros((1, 2, 2), np.float32), np.zeros((3, 3), np.uint8))


class TestManifest:
    def test_round_trip_and_resolution(self, tmp_path):
        sub = tmp_path / "ds"
        sub.mkdir()
        write_manifest(["a.ls8p", "b.ls8p"], sub / "train.txt")
        paths = read_manifest(sub / "train.txt")
        assert paths == [str(sub / "a.ls8p"), str(sub / "b.ls8p")]

    def test_absolute_paths_kept(self, tmp_path):
        write_manifest(["/abs/x.ls8p"], tmp_path / "m.txt")
        assert read_manifest(tmp_path / "m.txt") == ["/abs/x.ls8p"]

    def test_blank_lines_skipped(self, tmp_path):
        (tmp_path / "m.txt").write_text("a.ls8p\n\n\nb.ls8p\n")
        assert len(read_manifest(tmp_path / "m.txt")) == 2


class TestSynthetic:
    def test_deterministic(self):
        a = synth_generate(5, 4, 32)
        b = synth_generate(5, 4, 32)
        for ra, rb in zip(a, b):
            np.testing.assert_array_equal(ra.bands, rb.bands)
            np.testing.assert_array_equal(ra.mask, rb.mask)
        c = synth_generate(6, 4, 32)
        assert not np.array_equal(a[0].bands, c[0].bands)

    def test_minimum_size_enforced(self):
        with pytest.raises(ValueError, match="16"):
            synth_generate(0, 2, 8)

    def test_blobs_imply_fire_and_vice_versa(self):
        # forced blobs: every mask non-empty, at the minimum size too
        for size in (MIN_SYNTH_SIZE, 48):
            for rec in synth_generate(1, 20, size, (1, 4)):
                assert rec.mask.any(), f"empty mask at size {size}"
        # zero blobs: pure background stays below the fire threshold
        for rec in synth_generate(2, 20, 32, (0, 0)):
            assert not rec.mask.any()

    def test_shapes_ids_and_types(self):
        recs = synth_generate(0, 3, 16)
        assert [r.id for r in recs] == ["synth-0000", "synth-0001", "synth-0002"]
        for r in recs:
            assert r.bands.shape == (3, 16, 16) and r.bands.dtype == np.float32
            assert r.mask.shape == (16, 16) and r.mask.dtype == np.uint8

    def test_intensity_ordered_by_channel(self):
        # fire pixels are brightest in the first (SWIR-like) channel
        recs = synth_generate(3, 30, 64, (1, 4))
        sums = np.zeros(3)
        for r in recs:
            where = r.mask.astype(bool)
            sums += r.bands[:, where].sum(axis=1)
        assert sums[0] > sums[1] > sums[2]

    def test_background_bounded_without_blobs(self):
        recs = synth_generate(4, 10, 32, (0, 0))
        for r in recs:
            assert r.bands.min() >= 0.0
            assert r.bands.max() <= 0.4 + 1e-6

    def test_positive_fraction_regression_band(self):
        # frozen from the generator's defaults: if this drifts, training
        # difficulty changes and the desk-scale experiments need recalibrating
        recs = synth_generate(0, 100, 64)
        fracs = np.array([r.mask.mean() for r in recs])
        assert 0.08 <= fracs.mean() <= 0.18
        empty = (fracs == 0).mean()
        assert 0.05 <= empty <= 0.35
