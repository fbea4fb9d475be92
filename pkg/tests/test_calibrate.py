import numpy as np
import pytest

from mvglidar.errors import (CalibrationFailedError, HypothesisOutOfRangeError, InvariantError)
from mvglidar.scan.geometry import cartesian_to_polar, CartesianPoint, plane_rms_residual
from mvglidar.scan.simulator import MisalignmentSpec, NoiseSpec, simulate_frames
from mvglidar.calib import calibrate as calib
from mvglidar.calib.calibrate import (SearchSpec, CostSurface, calibrate_frame, cost_surface,
                                      fix_k, reconstruct_point_cloud)
from mvglidar.calib.cost import reshape_frame, mvg_cost

from conftest import M_TRUE, K_TRUE, make_pattern


def test_exact_recovery(misaligned_frame, search, pattern):
    result = calibrate_frame(misaligned_frame, search, pattern)
    assert (result.m_star, result.k_star) == (M_TRUE, K_TRUE)
    assert result.t_s == pattern.delta_t * M_TRUE
    assert not result.degenerate


def test_injected_hypothesis_is_strict_minimum(misaligned_frame, search, pattern):
    surface = cost_surface(misaligned_frame, search, pattern.serpentine)
    best, _ = surface.cell(M_TRUE, K_TRUE)
    others = surface.cost.copy()
    others[M_TRUE, list(surface.ks).index(K_TRUE)] = np.nan
    assert best < np.nanmin(others)


def test_aligned_recovery(boxes_scene, search, pattern):
    frame = simulate_frames(boxes_scene, pattern, MisalignmentSpec.aligned(pattern),
                            NoiseSpec.none(), 1)[0]
    result = calibrate_frame(frame, search, pattern)
    assert (result.m_star, result.k_star) == (0, pattern.k_design)
    assert result.t_s == 0.0
    assert not result.degenerate


def test_constant_scene_is_degenerate(constant_scene, search, pattern, misaligned):
    frame = simulate_frames(constant_scene, pattern, misaligned, NoiseSpec.none(), 1)[0]
    result = calibrate_frame(frame, search, pattern)
    assert result.degenerate
    assert result.cost == 0.0
    assert result.gap == 0.0
    # Ties resolve to the smallest m, then the smallest k
    assert (result.m_star, result.k_star) == (0, search.k_range[0])


def test_noise_robustness(boxes_scene, search, pattern, misaligned, misaligned_frame):
    sigma = 0.02 * np.nanmean(misaligned_frame)
    recovered = 0
    for seed in range(50):
        noise = NoiseSpec(range_sigma=sigma, range_sigma_rel=0.0, dropout_prob=0.01,
                          rng_seed=seed)
        frame = simulate_frames(boxes_scene, pattern, misaligned, noise, 1)[0]
        result = calibrate_frame(frame, search, pattern)
        recovered += (result.m_star, result.k_star) == (M_TRUE, K_TRUE)
    assert recovered >= 49


def test_scale_leaves_argmin_unchanged(misaligned_frame, search, pattern):
    a = calibrate_frame(misaligned_frame, search, pattern)
    b = calibrate_frame(misaligned_frame * 3.7, search, pattern)
    assert (a.m_star, a.k_star) == (b.m_star, b.k_star)
    np.testing.assert_allclose(b.cost_surface.cost, 3.7 * a.cost_surface.cost, rtol=1e-9)


def test_serpentine_reversal_matters(tilted_scene, pattern):
    frame = simulate_frames(tilted_scene, pattern, MisalignmentSpec.aligned(pattern),
                            NoiseSpec.none(), 1)[0]
    with_reversal, _ = mvg_cost(reshape_frame(frame, 0, pattern.k_design, serpentine=True))
    without, _ = mvg_cost(reshape_frame(frame, 0, pattern.k_design, serpentine=False))
    assert without > with_reversal


def test_serpentine_recovery_on_tilted_plane(tilted_scene, search, pattern, misaligned):
    frame = simulate_frames(tilted_scene, pattern, misaligned, NoiseSpec.none(), 1)[0]
    result = calibrate_frame(frame, search, pattern)
    assert (result.m_star, result.k_star) == (M_TRUE, K_TRUE)


def test_unidirectional_recovers_k(boxes_scene, misaligned):
    pattern = make_pattern(serpentine=False)
    search = SearchSpec.around(pattern, m_max=49, k_halfwidth=5)
    frame = simulate_frames(boxes_scene, pattern, misaligned, NoiseSpec.none(), 1)[0]
    assert calibrate_frame(frame, search, pattern).k_star == K_TRUE


def test_other_costs_recover(misaligned_frame, search, pattern):
    for cost in ('mvg_raw', 'tv'):
        result = calibrate_frame(misaligned_frame, search, pattern, cost=cost)
        assert (result.m_star, result.k_star) == (M_TRUE, K_TRUE)


def test_unknown_cost(misaligned_frame, search, pattern):
    with pytest.raises(ValueError):
        cost_surface(misaligned_frame, search, True, cost='l2')


def test_numpy_surface_matches_kernel(misaligned_frame, search, pattern, monkeypatch):
    fast = pytest.importorskip('mvglidar.calib._fast_cost')
    assert calib._fast_cost is fast
    with_kernel = cost_surface(misaligned_frame, search, pattern.serpentine)

    monkeypatch.setattr(calib, '_fast_cost', None)
    with_numpy = cost_surface(misaligned_frame, search, pattern.serpentine)

    np.testing.assert_array_equal(with_kernel.valid_pairs, with_numpy.valid_pairs)
    np.testing.assert_allclose(with_kernel.cost, with_numpy.cost, rtol=1e-10)


def test_surface_admissibility(search, pattern):
    frame = np.full(pattern.pulses_per_frame, np.nan)
    frame[:2000] = 5.0
    strict = SearchSpec(search.m_range, search.k_range, min_valid_pairs=10**6)
    surface = cost_surface(frame, strict, True)
    assert not surface.admissible.any()
    with pytest.raises(CalibrationFailedError):
        calibrate_frame(frame, strict, pattern)


def test_runner_up_skips_neighbourhood():
    cost = np.array([[0.0, 0.1, 5.0],
                     [0.1, 0.1, 5.0],
                     [5.0, 5.0, 2.0]])
    surface = CostSurface(np.arange(3), np.arange(3), cost, np.ones((3, 3), dtype=np.int64))
    assert surface.best_index() == (0, 0)
    assert surface.runner_up((0, 0)) == 2.0
    assert calib._relative_gap(0.0, 2.0) == np.inf
    assert calib._relative_gap(1.0, 1.005) == pytest.approx(0.005)
    assert calib._relative_gap(1.0, None) == np.inf


def test_frame_preconditions(search, pattern):
    with pytest.raises(HypothesisOutOfRangeError):
        calibrate_frame(np.ones(100), search, pattern)
    with pytest.raises(InvariantError):
        calibrate_frame(np.ones(900), SearchSpec((0, 4), (445, 1000)), pattern)


def test_search_spec():
    s = SearchSpec((0, 3), (10, 12))
    assert s.ms.tolist() == [0, 1, 2, 3]
    assert s.ks.tolist() == [10, 11, 12]
    assert fix_k(s, 11).k_range == (11, 11)
    with pytest.raises(InvariantError):
        SearchSpec((0, 3), (1, 5))
    with pytest.raises(InvariantError):
        SearchSpec((0, 3), (10, 12), min_valid_pairs=0)


def test_reconstruct_plane(pattern, plane_scene):
    frame = simulate_frames(plane_scene, pattern, MisalignmentSpec.aligned(pattern),
                            NoiseSpec.none(), 1)[0]
    good = reconstruct_point_cloud(frame, 0, pattern.k_design, pattern)
    assert np.all(np.abs(good[:, 2] - 10.0) < 1e-6)

    off = reconstruct_point_cloud(frame, 5, pattern.k_design, pattern)
    assert plane_rms_residual(off, [0, 0, 1], 10.0) > plane_rms_residual(good, [0, 0, 1], 10.0)


def test_reconstruct_empty_frame(pattern):
    points = reconstruct_point_cloud(np.full(pattern.pulses_per_frame, np.nan), 0,
                                     pattern.k_design, pattern)
    assert points.shape == (0, 3)


def test_calibrated_cloud_flattens_back_plane(misaligned_frame, search, pattern, boxes_scene):
    """Points landing on the back plane are only planar once registered."""
    def back_plane_residual(points):
        polar = cartesian_to_polar(CartesianPoint(points[:, 0], points[:, 1], points[:, 2]))
        on_plane = boxes_scene.hit_index(polar.theta, polar.phi) == 0
        return plane_rms_residual(points[on_plane], [0, 0, 1], 12.0)

    result = calibrate_frame(misaligned_frame, search, pattern)
    calibrated = reconstruct_point_cloud(misaligned_frame, result.m_star, result.k_star, pattern)
    naive = reconstruct_point_cloud(misaligned_frame, 0, pattern.k_design, pattern)

    assert back_plane_residual(calibrated) < 5e-3
    assert back_plane_residual(naive) > 0.5
