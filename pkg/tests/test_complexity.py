"""Complexity features checked against a direct cosine-sum reference transform."""

import math

import numpy as np
import pytest

from corpus_eta.complexity import (BLOCK_SIZE, ClipComplexity, FrameFeatures,
                                   analyze_frames, analyze_yuv, block_dct_energy,
                                   frame_block_energies, read_yuv420p_luma,
                                   write_frame_features_csv)
from corpus_eta.errors import ValidationError


# Reference: evaluate each transform coefficient as an explicit double cosine
# sum (quartic in the block size), then weight and accumulate. Shares no code
# with the production path, which uses a cached basis-matrix product.

def _scale(i, n):
    return math.sqrt(1.0 / n) if i == 0 else math.sqrt(2.0 / n)


def naive_coefficient(block, i, j):
    n = block.shape[0]
    x = np.arange(n)
    cos_i = np.cos(math.pi * (2.0 * x + 1.0) * i / (2.0 * n))
    cos_j = np.cos(math.pi * (2.0 * x + 1.0) * j / (2.0 * n))
    return _scale(i, n) * _scale(j, n) * float(np.sum(block * np.outer(cos_i, cos_j)))


def naive_block_energy(block):
    block = np.asarray(block, dtype=np.float64)
    n = block.shape[0]
    total = 0.0
    for i in range(n):
        for j in range(n):
            if i == 0 and j == 0:
                continue
            weight = 2.0 ** ((i + j) / 2.0 - 2.0)
            total += weight * abs(naive_coefficient(block, i, j))
    return total


def naive_block_energy_pure_python(block):
    """Fully scalar variant, used once to vouch for the numpy reference above."""
    n = len(block)
    total = 0.0
    for i in range(n):
        for j in range(n):
            if i == 0 and j == 0:
                continue
            s = 0.0
            for x in range(n):
                for y in range(n):
                    s += (block[x][y]
                          * math.cos(math.pi * (2 * x + 1) * i / (2 * n))
                          * math.cos(math.pi * (2 * y + 1) * j / (2 * n)))
            s *= _scale(i, n) * _scale(j, n)
            total += 2.0 ** ((i + j) / 2.0 - 2.0) * abs(s)
    return total


def write_yuv420p(path, frames):
    """Serialize uint8 luma planes with mid-gray chroma filler."""
    with open(path, "wb") as fh:
        for luma in frames:
            h, w = luma.shape
            fh.write(luma.astype(np.uint8).tobytes())
            fh.write(bytes([128]) * (w * h // 2))


class TestBlockEnergy:
    def test_reference_implementations_agree(self):
        rng = np.random.default_rng(0)
        block = rng.integers(0, 256, size=(8, 8)).astype(np.float64)
        assert naive_block_energy(block) == pytest.approx(
            naive_block_energy_pure_python(block.tolist()), rel=1e-9)

    def test_constant_block_scores_zero(self):
        assert block_dct_energy(np.full((32, 32), 128.0)) == 0.0
        assert block_dct_energy(np.zeros((32, 32))) == 0.0

    def test_impulse_block_matches_reference(self):
        block = np.zeros((32, 32))
        block[0, 0] = 1.0
        assert block_dct_energy(block) == pytest.approx(
            naive_block_energy(block), rel=1e-6)

    def test_horizontal_ramp_matches_reference(self):
        block = np.tile(np.arange(32, dtype=np.float64), (32, 1))
        assert block_dct_energy(block) == pytest.approx(
            naive_block_energy(block), rel=1e-6)

    def test_random_blocks_match_reference(self):
        rng = np.random.default_rng(1)
        for _ in range(5):
            block = rng.integers(0, 256, size=(32, 32)).astype(np.float64)
            assert block_dct_energy(block) == pytest.approx(
                naive_block_energy(block), rel=1e-6)

    def test_dc_offset_leaves_energy_unchanged(self):
        rng = np.random.default_rng(2)
        block = rng.uniform(0.0, 200.0, size=(32, 32))
        base = block_dct_energy(block)
        assert block_dct_energy(block + 50.0) == pytest.approx(base, rel=1e-9)

    def test_rejects_non_square(self):
        with pytest.raises(ValidationError, match="square"):
            block_dct_energy(np.zeros((32, 16)))


class TestFrameBlockEnergies:
    def test_splits_into_row_major_blocks(self):
        frame = np.zeros((32, 64))
        frame[:, 32:] = np.tile(np.arange(32, dtype=np.float64), (32, 1))
        energies = frame_block_energies(frame)
        assert energies.shape == (2,)
        assert energies[0] == 0.0
        assert energies[1] == pytest.approx(
            block_dct_energy(frame[:, 32:]), rel=1e-12)

    def test_zero_pads_partial_edge_blocks(self):
        rng = np.random.default_rng(3)
        frame = rng.integers(0, 256, size=(40, 40)).astype(np.float64)
        energies = frame_block_energies(frame)
        assert energies.shape == (4,)
        padded = np.zeros((64, 64))
        padded[:40, :40] = frame
        expected = [block_dct_energy(padded[r:r + 32, c:c + 32])
                    for r in (0, 32) for c in (0, 32)]
        assert energies == pytest.approx(expected, rel=1e-12)


class TestAnalyzeFrames:
    def test_static_gray_clip_is_exactly_featureless(self):
        frames = [np.full((64, 64), 128, dtype=np.uint8) for _ in range(3)]
        per_frame, clip = analyze_frames(frames)
        assert clip == ClipComplexity(E=0.0, h=0.0, luma=128.0, num_frames=3)
        for f in per_frame:
            assert (f.E_frame, f.h_frame, f.luma_frame) == (0.0, 0.0, 128.0)

    def test_two_constant_frames_average_their_levels(self):
        frames = [np.full((64, 64), 100, dtype=np.uint8),
                  np.full((64, 64), 200, dtype=np.uint8)]
        per_frame, clip = analyze_frames(frames)
        assert clip.E == 0.0
        assert clip.h == 0.0
        assert clip.luma == 150.0
        assert [f.luma_frame for f in per_frame] == [100.0, 200.0]

    def test_first_frame_has_no_temporal_term(self):
        rng = np.random.default_rng(4)
        frames = [rng.integers(0, 256, size=(32, 32)).astype(np.uint8)
                  for _ in range(2)]
        per_frame, _ = analyze_frames(frames)
        assert per_frame[0].h_frame == 0.0

    def test_random_noise_has_positive_energy(self):
        rng = np.random.default_rng(5)
        frames = [rng.integers(0, 256, size=(64, 64)).astype(np.uint8)
                  for _ in range(3)]
        per_frame, clip = analyze_frames(frames)
        assert clip.E > 0.0
        assert clip.h > 0.0
        assert all(f.E_frame > 0.0 for f in per_frame)

    def test_duplicated_frames_zero_the_temporal_term(self):
        rng = np.random.default_rng(6)
        a = rng.integers(0, 256, size=(32, 32)).astype(np.uint8)
        b = rng.integers(0, 256, size=(32, 32)).astype(np.uint8)
        per_frame, _ = analyze_frames([a, a, b, b])
        assert per_frame[1].h_frame == 0.0
        assert per_frame[2].h_frame > 0.0
        assert per_frame[3].h_frame == 0.0

    def test_temporal_term_is_mean_absolute_block_delta(self):
        rng = np.random.default_rng(7)
        a = rng.integers(0, 256, size=(32, 64)).astype(np.float64)
        b = rng.integers(0, 256, size=(32, 64)).astype(np.float64)
        per_frame, _ = analyze_frames([a, b])
        expected = float(np.mean(np.abs(frame_block_energies(b)
                                        - frame_block_energies(a))))
        assert per_frame[1].h_frame == pytest.approx(expected, rel=1e-12)

    def test_clip_average_skips_first_frame_for_h(self):
        rng = np.random.default_rng(8)
        frames = [rng.integers(0, 256, size=(32, 32)).astype(np.float64)
                  for _ in range(4)]
        per_frame, clip = analyze_frames(frames)
        assert clip.E == pytest.approx(
            float(np.mean([f.E_frame for f in per_frame])), rel=1e-12)
        assert clip.h == pytest.approx(
            float(np.mean([f.h_frame for f in per_frame[1:]])), rel=1e-12)

    def test_single_frame_clip(self):
        frames = [np.full((32, 32), 10, dtype=np.uint8)]
        per_frame, clip = analyze_frames(frames)
        assert clip.h == 0.0
        assert clip.num_frames == 1

    def test_luma_offset_shifts_brightness_only(self):
        rng = np.random.default_rng(9)
        base = rng.uniform(0.0, 180.0, size=(32, 32))
        _, clip_a = analyze_frames([base])
        _, clip_b = analyze_frames([base + 60.0])
        assert clip_b.E == pytest.approx(clip_a.E, rel=1e-9)
        assert clip_b.luma == pytest.approx(clip_a.luma + 60.0, rel=1e-12)

    def test_worker_count_does_not_change_results(self):
        rng = np.random.default_rng(10)
        frames = [rng.integers(0, 256, size=(48, 48)).astype(np.uint8)
                  for _ in range(5)]
        serial_frames, serial_clip = analyze_frames(frames, jobs=1)
        pooled_frames, pooled_clip = analyze_frames(frames, jobs=4)
        assert serial_frames == pooled_frames
        assert serial_clip == pooled_clip

    def test_empty_clip_rejected(self):
        with pytest.raises(ValidationError, match="no frames"):
            analyze_frames([])


class TestYuvReader:
    def test_reads_luma_and_skips_chroma(self, tmp_path):
        f0 = np.arange(16, dtype=np.uint8).reshape(4, 4)
        f1 = np.arange(16, 32, dtype=np.uint8).reshape(4, 4)
        path = tmp_path / "tiny.yuv"
        write_yuv420p(path, [f0, f1])
        frames = list(read_yuv420p_luma(path, 4, 4, 2))
        assert np.array_equal(frames[0], f0)
        assert np.array_equal(frames[1], f1)

    def test_size_mismatch_rejected(self, tmp_path):
        path = tmp_path / "bad.yuv"
        path.write_bytes(b"\x00" * 23)  # one byte short of a 4x4 frame
        with pytest.raises(ValidationError, match="size"):
            list(read_yuv420p_luma(path, 4, 4, 1))

    def test_missing_file_rejected(self, tmp_path):
        with pytest.raises(ValidationError, match="cannot read"):
            list(read_yuv420p_luma(tmp_path / "none.yuv", 4, 4, 1))

    @pytest.mark.parametrize("w,h,n", [(3, 4, 1), (4, 5, 1), (4, 4, 0), (0, 4, 1)])
    def test_bad_geometry_rejected(self, tmp_path, w, h, n):
        path = tmp_path / "x.yuv"
        path.write_bytes(b"\x00" * 24)
        with pytest.raises(ValidationError):
            list(read_yuv420p_luma(path, w, h, n))

    def test_analyze_yuv_end_to_end(self, tmp_path):
        frames = [np.full((64, 64), 128, dtype=np.uint8) for _ in range(2)]
        path = tmp_path / "gray.yuv"
        write_yuv420p(path, frames)
        per_frame, clip = analyze_yuv(path, 64, 64, 2)
        assert clip == ClipComplexity(E=0.0, h=0.0, luma=128.0, num_frames=2)
        assert len(per_frame) == 2

    def test_analyze_yuv_small_frame_mean(self, tmp_path):
        f0 = np.arange(16, dtype=np.uint8).reshape(4, 4)
        f1 = np.arange(16, 32, dtype=np.uint8).reshape(4, 4)
        path = tmp_path / "tiny.yuv"
        write_yuv420p(path, [f0, f1])
        per_frame, clip = analyze_yuv(path, 4, 4, 2)
        assert per_frame[0].luma_frame == 7.5
        assert per_frame[1].luma_frame == 23.5
        assert clip.luma == 15.5


class TestFrameFeaturesCsv:
    def test_writes_header_and_rows(self, tmp_path):
        rows = [FrameFeatures(0, 1.25, 0.0, 100.0), FrameFeatures(1, 2.5, 0.75, 90.0)]
        path = tmp_path / "frames.csv"
        write_frame_features_csv(path, rows)
        lines = path.read_text().splitlines()
        assert lines[0] == "frame_index,E,h,luma"
        assert lines[1] == "0,1.25,0.0,100.0"
        assert len(lines) == 3
