"""
segmentation 모듈 테스트
"""

import numpy as np
import pytest

from src.geometry.image import Image
from src.render.rasterizer import rasterize
from src.segmentation.amodal import prepare_amodal_inputs, prepare_amodal_inputs_for_parts
from src.segmentation.features import (
    FaceFeatureSet,
    geometric_fallback_features,
    load_features,
    save_features,
)
from src.segmentation.segmenter import (
    PartLabels,
    backproject_mask,
    kmeans_refine,
    mean_feature,
    segment_movable,
    threshold_assign,
)
from src.utils.exceptions import FeatureFormatError, InvalidInputError, SegmentationError


@pytest.fixture
def cabinet(base_box, movable_box):
    """면 0..11 베이스, 12..23 움직이는 파트"""
    return base_box.merge(movable_box)


@pytest.fixture
def movable_mask(cabinet, small_camera):
    target = rasterize(cabinet, small_camera)
    return Image((target.face_id >= 12).astype(np.float64))


def separated_features(rng, movable, spread=0.1, offset=3.0, dim=4):
    features = rng.uniform(-spread, spread, size=(len(movable), dim))
    features[movable] += offset
    return FaceFeatureSet(features)


class TestBackprojection:
    def test_selects_only_visible_movable_faces(self, cabinet, small_camera, movable_mask):
        selected = backproject_mask(cabinet, small_camera, movable_mask)
        assert len(selected) > 0
        assert np.all(selected >= 12)
        assert np.all(np.diff(selected) > 0)

    def test_empty_mask(self, cabinet, small_camera):
        with pytest.raises(SegmentationError):
            backproject_mask(cabinet, small_camera, Image(np.zeros((32, 32))))

    def test_mask_resolution_mismatch(self, cabinet, small_camera):
        with pytest.raises(InvalidInputError):
            backproject_mask(cabinet, small_camera, Image(np.ones((16, 16))))

    def test_rgb_mask_rejected(self, cabinet, small_camera):
        with pytest.raises(InvalidInputError):
            backproject_mask(cabinet, small_camera, Image(np.ones((32, 32, 3))))


class TestAssignment:
    def test_mean_feature(self):
        features = FaceFeatureSet(np.array([[0.0, 0.0], [2.0, 4.0], [10.0, 10.0]]))
        np.testing.assert_array_equal(mean_feature(features, np.array([0, 1])), [1.0, 2.0])

    def test_selected_faces_always_movable(self, rng):
        for _ in range(1000):
            face_count = int(rng.integers(2, 40))
            features = FaceFeatureSet(rng.standard_normal((face_count, int(rng.integers(1, 6)))))
            selected = rng.choice(face_count, size=int(rng.integers(1, face_count + 1)), replace=False)
            labels = threshold_assign(features, selected)
            assert labels.movable[selected].all()

    def test_empty_selection(self, rng):
        with pytest.raises(SegmentationError):
            threshold_assign(FaceFeatureSet(rng.standard_normal((4, 2))), np.array([], dtype=np.int64))

    def test_kmeans_separates_clusters(self, rng):
        truth = np.array([False] * 6 + [True] * 6)
        features = separated_features(rng, truth)
        initial = PartLabels(np.array([True] + [False] * 11))
        labels, iterations = kmeans_refine(features, initial, selected=np.array([6, 7]))
        np.testing.assert_array_equal(labels.movable, truth)
        assert iterations >= 1

    def test_kmeans_majority_of_selection_is_movable(self, rng):
        truth = np.array([False] * 6 + [True] * 6)
        features = separated_features(rng, truth)
        # 초기 movable 그룹이 실제 베이스 쪽에 있어도 S 과반 기준으로 라벨이 정해진다
        initial = PartLabels(~truth)
        labels, _ = kmeans_refine(features, initial, selected=np.array([7, 8, 9]))
        np.testing.assert_array_equal(labels.movable, truth)

    def test_kmeans_tie_keeps_current_label(self):
        features = FaceFeatureSet(np.array([[0.0], [1.0], [2.0]]))
        # 중심 0.5, 2.0 → 1.0은 두 중심과 거리가 다르므로 이동하지 않는다
        labels, iterations = kmeans_refine(features, PartLabels([True, True, False]))
        np.testing.assert_array_equal(labels.movable, [True, True, False])
        assert iterations == 0

        tie = FaceFeatureSet(np.array([[0.0], [1.0], [2.0], [3.0]]))
        # 중심 1.0, 3.0 → 2.0은 동률이므로 현재 라벨 유지
        labels, _ = kmeans_refine(tie, PartLabels([True, True, True, False]))
        np.testing.assert_array_equal(labels.movable, [True, True, True, False])

    def test_kmeans_zero_iterations(self, rng):
        features = FaceFeatureSet(rng.standard_normal((5, 2)))
        initial = PartLabels([True, False, True, False, False])
        labels, iterations = kmeans_refine(features, initial, max_iters=0)
        assert iterations == 0
        np.testing.assert_array_equal(labels.movable, initial.movable)

    def test_kmeans_needs_both_labels(self, rng):
        with pytest.raises(SegmentationError):
            kmeans_refine(FaceFeatureSet(rng.standard_normal((3, 2))), PartLabels([True, True, True]))


class TestSegmentMovable:
    def test_recovers_separated_partition(self, cabinet, small_camera, movable_mask):
        truth = np.arange(cabinet.face_count) >= 12
        for seed in range(20):
            features = separated_features(np.random.default_rng(seed), truth)
            result = segment_movable(cabinet, features, small_camera, movable_mask)
            np.testing.assert_array_equal(result.labels.movable, truth)
            assert result.movable.face_count == 12
            assert result.base.face_count == 12
            assert result.movable.face_count + result.base.face_count == cabinet.face_count

    def test_feature_count_mismatch(self, cabinet, small_camera, movable_mask, rng):
        with pytest.raises(InvalidInputError):
            segment_movable(cabinet, FaceFeatureSet(rng.standard_normal((5, 3))), small_camera, movable_mask)

    def test_runs_on_geometric_fallback(self, cabinet, small_camera, movable_mask):
        result = segment_movable(cabinet, geometric_fallback_features(cabinet), small_camera, movable_mask)
        assert 2 * result.labels.movable[result.visible].sum() >= len(result.visible)
        assert result.labels.movable_count + result.labels.base_count == cabinet.face_count


class TestFeatures:
    def test_binary_round_trip(self, tmp_path, rng):
        features = FaceFeatureSet(rng.standard_normal((7, 5)))
        path = tmp_path / "features.bin"
        save_features(features, path)
        loaded = load_features(path, face_count=7)
        np.testing.assert_array_equal(loaded.features, features.features.astype(np.float32))

    def test_truncated_file(self, tmp_path, rng):
        path = tmp_path / "features.bin"
        save_features(FaceFeatureSet(rng.standard_normal((3, 2))), path)
        path.write_bytes(path.read_bytes()[:-4])
        with pytest.raises(FeatureFormatError):
            load_features(path)

    def test_face_count_mismatch(self, tmp_path, rng):
        path = tmp_path / "features.bin"
        save_features(FaceFeatureSet(rng.standard_normal((3, 2))), path)
        with pytest.raises(FeatureFormatError):
            load_features(path, face_count=4)

    def test_missing_file(self, tmp_path):
        with pytest.raises(FileNotFoundError, match="input not found"):
            load_features(tmp_path / "missing.bin")

    def test_geometric_fallback_layout(self, cabinet):
        features = geometric_fallback_features(cabinet)
        assert features.dim == 6
        np.testing.assert_allclose(np.linalg.norm(features.features[:, 3:], axis=1), 1.0)

    def test_geometric_fallback_translation(self, cabinet):
        shifted = cabinet.with_vertices(cabinet.vertices + np.array([2.0, -1.0, 0.5]))
        before = geometric_fallback_features(cabinet).features
        after = geometric_fallback_features(shifted).features
        np.testing.assert_allclose(after[:, 3:], before[:, 3:], atol=1e-12)
        diagonal = np.linalg.norm(cabinet.vertices.max(axis=0) - cabinet.vertices.min(axis=0))
        np.testing.assert_allclose(after[:, :3] - before[:, :3], np.array([2.0, -1.0, 0.5]) / diagonal, atol=1e-12)


class TestAmodal:
    def test_visible_and_inpaint_regions(self):
        image = Image(np.full((2, 2, 3), 0.5))
        mask = Image(np.array([[1.0, 0.0], [0.0, 0.0]]))
        silhouette = Image(np.array([[1.0, 1.0], [0.0, 0.0]]))
        inputs = prepare_amodal_inputs(image, mask, silhouette)
        np.testing.assert_array_equal(inputs.visible.data[:, :, 0], [[0.5, 0.0], [0.0, 0.0]])
        np.testing.assert_array_equal(inputs.inpaint_mask.data[:, :, 0], [[0.0, 1.0], [0.0, 0.0]])

    def test_both_parts(self, cabinet, small_camera, movable_mask, base_box, movable_box):
        image = rasterize(cabinet, small_camera).color
        parts = prepare_amodal_inputs_for_parts(image, movable_mask, movable_box, base_box, small_camera)
        # 베이스는 마스크 여집합을 보이는 영역으로 쓴다
        hidden_base = parts.base.inpaint_mask.data[:, :, 0] > 0.5
        assert hidden_base.any()
        assert np.all(movable_mask.data[:, :, 0][hidden_base] == 1.0)
        assert not (parts.movable.inpaint_mask.data > 0).any()
