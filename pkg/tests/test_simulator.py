import numpy as np
import pytest

from mvglidar.errors import InvariantError
from mvglidar.scan.geometry import design_azimuth_sequence, design_angles
from mvglidar.scan.simulator import (MisalignmentSpec, NoiseSpec, RangeStream, frame_offset,
                                     offset_schedule, mirror_pointing, simulate_frames)
from mvglidar.calib.calibrate import reconstruct_point_cloud


def test_mirror_pointing_aligned(pattern):
    spec = MisalignmentSpec.aligned(pattern)
    theta, phi = design_angles(pattern)
    assert mirror_pointing(pattern, spec, 0, 0) == (theta[0], phi[0])


def test_mirror_pointing_resetting(pattern):
    assert mirror_pointing(pattern, MisalignmentSpec(3), 0, 2) is None

    spec = MisalignmentSpec(0, 3.4)
    assert frame_offset(spec, 10) == 34
    assert all(mirror_pointing(pattern, spec, 10, p) is None for p in range(34))
    assert mirror_pointing(pattern, spec, 10, 34) == mirror_pointing(pattern, spec, 0, 0)


def test_mirror_pointing_after_raster(pattern):
    spec = MisalignmentSpec(0, 0.0, 452)
    last = pattern.rows * 452
    assert mirror_pointing(pattern, spec, 0, last - 1) is not None
    assert mirror_pointing(pattern, spec, 0, last) is None
    with pytest.raises(IndexError):
        mirror_pointing(pattern, spec, 0, pattern.pulses_per_frame)


def test_mirror_pointing_serpentine_row(pattern):
    spec = MisalignmentSpec.aligned(pattern)
    theta, phi = design_angles(pattern)
    # First pulse of the second row sits at the far end of the row
    assert mirror_pointing(pattern, spec, 0, pattern.k_design) == (theta[-1], phi[1])


def test_aligned_stream_matches_design_sequence(pattern, plane_scene):
    stream = simulate_frames(plane_scene, pattern, MisalignmentSpec.aligned(pattern),
                             NoiseSpec.none(), 1)
    seq = design_azimuth_sequence(pattern)
    expected = plane_scene.ray_range(seq.theta, seq.phi)

    n = len(seq)
    assert stream.pulses_per_frame == pattern.pulses_per_frame
    np.testing.assert_array_equal(stream[0][:n], expected)
    assert np.all(np.isnan(stream[0][n:]))


def test_shift_structure(pattern, boxes_scene):
    aligned = simulate_frames(boxes_scene, pattern, MisalignmentSpec.aligned(pattern),
                              NoiseSpec.none(), 1)[0]
    shifted = simulate_frames(boxes_scene, pattern, MisalignmentSpec(5, 0.0, pattern.k_design),
                              NoiseSpec.none(), 1)[0]

    assert np.all(np.isnan(shifted[:5]))
    np.testing.assert_array_equal(shifted[5:], aligned[:-5])


def test_offset_schedule():
    spec = MisalignmentSpec(5, 3.4)
    expected = [int(np.floor(5 + 3.4 * j + 0.5)) for j in range(100)]
    np.testing.assert_array_equal(offset_schedule(spec, 100), expected)
    assert offset_schedule(spec, 3).tolist() == [5, 8, 12]


def test_drift_stream_offsets(pattern, boxes_scene):
    spec = MisalignmentSpec(5, 3.4, pattern.k_design)
    stream = simulate_frames(boxes_scene, pattern, spec, NoiseSpec.none(), 4)
    aligned = simulate_frames(boxes_scene, pattern, MisalignmentSpec.aligned(pattern),
                              NoiseSpec.none(), 1)[0]
    for j, o in enumerate(offset_schedule(spec, 4)):
        assert np.all(np.isnan(stream[j][:o]))
        np.testing.assert_array_equal(stream[j][o:], aligned[:-o])


def test_determinism(pattern, boxes_scene, misaligned):
    noise = NoiseSpec(range_sigma=0.05, rng_seed=42)
    a = simulate_frames(boxes_scene, pattern, misaligned, noise, 3)
    b = simulate_frames(boxes_scene, pattern, misaligned, noise, 3)
    assert a.equals(b)

    c = simulate_frames(boxes_scene, pattern, misaligned, NoiseSpec(range_sigma=0.05, rng_seed=43), 3)
    assert not a.equals(c)


def test_noise_statistics(pattern, plane_scene):
    spec = MisalignmentSpec.aligned(pattern)
    clean = simulate_frames(plane_scene, pattern, spec, NoiseSpec.none(), 1)[0]
    noisy = simulate_frames(plane_scene, pattern, spec,
                            NoiseSpec(range_sigma=0.0, range_sigma_rel=0.02,
                                      dropout_prob=0.1, rng_seed=7), 1)[0]

    raster = np.isfinite(clean)
    dropped = np.isnan(noisy[raster]).mean()
    assert dropped == pytest.approx(0.1, abs=0.01)

    kept = raster & np.isfinite(noisy)
    rel = (noisy[kept] - clean[kept]) / clean[kept]
    assert rel.std() == pytest.approx(0.02, rel=0.05)
    assert abs(rel.mean()) < 1e-3
    assert np.all(noisy[kept] >= 0)


def test_plane_geometric_consistency(pattern, plane_scene):
    frame = simulate_frames(plane_scene, pattern, MisalignmentSpec.aligned(pattern),
                            NoiseSpec.none(), 1)[0]
    points = reconstruct_point_cloud(frame, 0, pattern.k_design, pattern)
    assert len(points) == pattern.rows * pattern.k_design
    assert np.max(np.abs(points[:, 2] - 10.0)) < 1e-9


def test_spec_invariants():
    with pytest.raises(InvariantError):
        MisalignmentSpec(-1)
    with pytest.raises(InvariantError):
        MisalignmentSpec(0, 0.0, 1)
    with pytest.raises(InvariantError):
        NoiseSpec(range_sigma=-0.1)
    with pytest.raises(InvariantError):
        NoiseSpec(dropout_prob=1.0)


def test_range_stream_invariants():
    with pytest.raises(InvariantError):
        RangeStream(np.zeros(4), 1e-6)
    with pytest.raises(InvariantError):
        RangeStream([[1.0, -2.0]], 1e-6)
    with pytest.raises(InvariantError):
        RangeStream([[1.0, 2.0]], 0.0)

    stream = RangeStream([[1.0, np.nan], [3.0, 4.0]], 1e-6)
    assert len(stream) == 2
    assert stream.pulses_per_frame == 2


def test_needs_a_frame(pattern, plane_scene):
    with pytest.raises(InvariantError):
        simulate_frames(plane_scene, pattern, MisalignmentSpec(), NoiseSpec.none(), 0)
