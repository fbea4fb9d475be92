import numpy as np
import pytest

from mvglidar.errors import InvariantError, SingularityError
from mvglidar.scan.scene import Scene, Plane, Box, ray_range, scene_from_dict


def test_plane_examples(plane_scene):
    assert ray_range(plane_scene, 0.0, 0.0) == pytest.approx(10.0)
    assert ray_range(plane_scene, np.pi / 4, 0.0) == pytest.approx(10 * np.sqrt(2))


def test_miss_without_and_with_background():
    assert np.isnan(ray_range(Scene(), 0.1, 0.2))
    assert ray_range(Scene(background_range=25.0), 0.1, 0.2) == 25.0


def test_plane_behind_sensor_is_missed():
    scene = Scene((Plane((0.0, 0.0, 1.0), -3.0),))
    assert np.isnan(scene.ray_range(0.0, 0.0))


def test_box_occludes_plane(boxes_scene):
    # Straight into the front face of the first box at z=7
    theta = np.arctan(-1.5 / 7.0)
    assert boxes_scene.ray_range(theta, 0.0) == pytest.approx(np.hypot(1.5, 7.0))
    assert boxes_scene.hit_index(theta, 0.0) == 1

    assert boxes_scene.hit_index(0.0, 0.0) == 0
    assert boxes_scene.ray_range(0.0, 0.0) == pytest.approx(12.0)


def test_box_along_axis_ray():
    # Zero x and y direction components
    scene = Scene((Box((-1.0, -1.0, 4.0), (1.0, 1.0, 6.0)),))
    assert scene.ray_range(0.0, 0.0) == pytest.approx(4.0)
    scene = Scene((Box((0.5, -1.0, 4.0), (1.0, 1.0, 6.0)),))
    assert np.isnan(scene.ray_range(0.0, 0.0))


def test_inside_box_hits_far_wall():
    scene = Scene((Box((-1.0, -1.0, -1.0), (1.0, 1.0, 2.0)),))
    assert scene.ray_range(0.0, 0.0) == pytest.approx(2.0)


def test_vectorised_cast(boxes_scene):
    theta = np.linspace(-0.3, 0.3, 7)
    phi = np.zeros(7)
    r = boxes_scene.ray_range(theta, phi)
    assert r.shape == (7,)
    expected = [boxes_scene.ray_range(t, 0.0) for t in theta]
    np.testing.assert_allclose(r, expected)


def test_singular_azimuth(plane_scene):
    with pytest.raises(SingularityError):
        plane_scene.ray_range(np.pi / 2, 0.0)


def test_primitive_invariants():
    with pytest.raises(InvariantError):
        Plane((0.0, 0.0, 2.0), 1.0)
    with pytest.raises(InvariantError):
        Box((0.0, 0.0, 1.0), (1.0, 1.0, 1.0))
    with pytest.raises(InvariantError):
        Scene(background_range=-1.0)


def test_scene_from_dict():
    scene = scene_from_dict({
        'background_range': 30.0,
        'primitives': [
            {'type': 'plane', 'normal': [0, 0, 1], 'offset': 12},
            {'type': 'box', 'min': [-1, -1, 5], 'max': [1, 1, 6]},
        ],
    })
    assert scene.background_range == 30.0
    assert isinstance(scene.primitives[0], Plane)
    assert isinstance(scene.primitives[1], Box)

    with pytest.raises(InvariantError) as e:
        scene_from_dict({'primitives': [{'type': 'plane', 'normal': [0, 0, 1]}]})
    assert e.value.field == 'primitives[0].offset'

    with pytest.raises(InvariantError) as e:
        scene_from_dict({'primitives': [{'type': 'sphere'}]})
    assert e.value.field == 'primitives[0].type'
