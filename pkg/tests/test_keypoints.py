import numpy as np
import pytest

from keygraph.exceptions import ImageTooSmallError
from keygraph.imaging import to_grayscale
from keygraph.keypoints import DetectorParams, detect_keypoints, keypoints_array
from keygraph.synth import random_shapes_image


def nearest_distances(a, b):
    return np.hypot(*(a[:, None, :] - b[None, :, :]).transpose(2, 0, 1)).min(axis=1)


@pytest.fixture(scope="module")
def textured():
    return to_grayscale(random_shapes_image(200, 160, 25, np.random.default_rng(5)))


def test_constant_image_has_no_keypoints():
    assert detect_keypoints(np.full((64, 64), 0.5)) == []


def test_too_small():
    with pytest.raises(ImageTooSmallError):
        detect_keypoints(np.zeros((6, 50)), DetectorParams(window_radius=2))


def test_params_validated():
    with pytest.raises(ValueError):
        DetectorParams(quality_level=1.0)
    with pytest.raises(ValueError):
        DetectorParams(min_distance=-1)


def test_white_square_corners():
    img = np.zeros((256, 256))
    img[96:160, 96:160] = 1.0
    kps = detect_keypoints(img, DetectorParams(quality_level=0.1, min_distance=10))
    assert len(kps) == 4
    # pixel centres on integers: the square's outline runs along 95.5 and 159.5
    corners = np.array([(95.5, 95.5), (159.5, 95.5), (95.5, 159.5), (159.5, 159.5)])
    d = nearest_distances(keypoints_array(kps), corners)
    assert np.all(d <= 2.0)


def test_checkerboard_lattice():
    ys, xs = np.mgrid[0:256, 0:256]
    board = ((ys // 32 + xs // 32) % 2).astype(float)
    kps = detect_keypoints(board, DetectorParams(min_distance=10))
    assert len(kps) == 49
    lattice = np.array([(32 * i - 0.5, 32 * j - 0.5) for i in range(1, 8) for j in range(1, 8)])
    assert np.all(nearest_distances(keypoints_array(kps), lattice) <= 2.0)
    assert np.all(nearest_distances(lattice, keypoints_array(kps)) <= 2.0)


def test_sorted_by_score_and_thresholded(textured):
    params = DetectorParams(quality_level=0.05, max_keypoints=None)
    kps = detect_keypoints(textured, params)
    scores = [k.score for k in kps]
    assert scores == sorted(scores, reverse=True)
    assert min(scores) >= params.quality_level * scores[0] - 1e-12
    h, w = textured.shape
    assert all(0 <= k.x < w and 0 <= k.y < h for k in kps)


def test_deterministic(textured):
    assert detect_keypoints(textured) == detect_keypoints(textured.copy())


@pytest.mark.parametrize("subpixel", [False, True])
def test_min_distance_respected(textured, subpixel):
    params = DetectorParams(min_distance=12, max_keypoints=None, subpixel=subpixel)
    pts = keypoints_array(detect_keypoints(textured, params))
    d = np.hypot(*(pts[:, None] - pts[None]).transpose(2, 0, 1))
    np.fill_diagonal(d, np.inf)
    assert d.min() >= 12


def test_max_keypoints_cap(textured):
    kps = detect_keypoints(textured, DetectorParams(max_keypoints=7))
    assert len(kps) == 7
    assert kps == detect_keypoints(textured, DetectorParams(max_keypoints=None))[:7]


def test_lower_quality_keeps_previous(textured):
    previous = None
    for q in (0.3, 0.1, 0.05, 0.01):
        kps = set(detect_keypoints(textured, DetectorParams(quality_level=q, max_keypoints=None)))
        if previous is not None:
            assert previous <= kps
        previous = kps


@pytest.mark.parametrize("subpixel", [False, True])
def test_rotation_by_90_degrees(textured, subpixel):
    # noise breaks the exact score plateaus of flat synthetic shapes, whose
    # raster-order tie-breaking cannot be rotation invariant
    img = textured + np.random.default_rng(1).normal(0, 0.01, textured.shape)
    h, w = img.shape
    params = DetectorParams(max_keypoints=None, subpixel=subpixel)
    base = keypoints_array(detect_keypoints(img, params))
    rot = keypoints_array(detect_keypoints(np.rot90(img), params))
    # np.rot90 maps (x, y) -> (y, w - 1 - x)
    expected = np.column_stack([base[:, 1], w - 1 - base[:, 0]])
    hausdorff = max(nearest_distances(expected, rot).max(), nearest_distances(rot, expected).max())
    assert hausdorff <= 1.0
