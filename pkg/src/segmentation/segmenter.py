"""
마스크 기반 파트 분할
2D 마스크 역투영 → 평균 특징 → 임계값 할당 → 2-means 정제
"""

from dataclasses import dataclass
from typing import Optional

import numpy as np
from loguru import logger

from src.geometry.camera import Camera
from src.geometry.image import Image
from src.geometry.mesh import TriMesh
from src.render.rasterizer import rasterize
from src.segmentation.features import FaceFeatureSet
from src.utils.exceptions import InvalidInputError, SegmentationError

MOVABLE = "movable"
BASE = "base"

# 면이 S에 속하려면 보이는 픽셀 중 이 비율 이상이 마스크 안에 있어야 한다
MASK_FRACTION = 0.5
MASK_THRESHOLD = 0.5
DEFAULT_MAX_ITERS = 100


@dataclass(frozen=True, eq=False)
class PartLabels:
    """면별 라벨 (movable이면 True)"""

    movable: np.ndarray

    def __post_init__(self):
        movable = np.asarray(self.movable, dtype=bool).ravel().copy()
        movable.setflags(write=False)
        object.__setattr__(self, "movable", movable)

    def __len__(self) -> int:
        return len(self.movable)

    @property
    def movable_count(self) -> int:
        return int(self.movable.sum())

    @property
    def base_count(self) -> int:
        return len(self.movable) - self.movable_count

    def names(self) -> list[str]:
        """면별 라벨 문자열"""
        return [MOVABLE if m else BASE for m in self.movable]


@dataclass(frozen=True, eq=False)
class SegmentationResult:
    """분할 결과"""

    labels: PartLabels
    visible: np.ndarray
    movable: TriMesh
    base: TriMesh
    iterations: int


def backproject_mask(mesh: TriMesh, camera: Camera, mask: Image) -> np.ndarray:
    """
    2D 마스크를 면 집합으로 역투영

    하드 z-버퍼 가시성 기준으로, 보이는 픽셀의 절반 이상이 마스크 안(값 > 0.5)인 면을 고른다.

    Args:
        mesh: 전체 메시
        camera: 카메라
        mask: 1채널 마스크 (카메라 해상도)

    Returns:
        정렬된 면 인덱스 배열 S
    """
    if mesh.face_count == 0:
        raise InvalidInputError("빈 메시입니다")
    if mask.channels != 1:
        raise InvalidInputError(f"마스크는 1채널이어야 합니다: {mask.channels}")
    if mask.resolution != camera.resolution:
        raise InvalidInputError(f"마스크 해상도 불일치: {mask.resolution} != {camera.resolution}")

    target = rasterize(mesh, camera)
    ids = target.face_id[target.coverage]
    inside = mask.data[:, :, 0][target.coverage] > MASK_THRESHOLD
    visible_count = np.bincount(ids, minlength=mesh.face_count)
    inside_count = np.bincount(ids[inside], minlength=mesh.face_count)

    selected = np.flatnonzero((visible_count > 0) & (inside_count >= MASK_FRACTION * visible_count))
    if len(selected) == 0:
        raise SegmentationError("마스크 아래 보이는 면이 없습니다 (마스크를 확인하세요)")
    logger.debug(f"역투영: 보이는 면 {int((visible_count > 0).sum())}개 중 {len(selected)}개 선택")
    return selected


def _require_selection(features: FaceFeatureSet, selected: np.ndarray) -> np.ndarray:
    selected = np.asarray(selected, dtype=np.int64).ravel()
    if len(selected) == 0:
        raise SegmentationError("선택된 면 집합이 비어 있습니다")
    if selected.min() < 0 or selected.max() >= features.face_count:
        raise InvalidInputError("선택된 면 인덱스가 범위를 벗어났습니다")
    return selected


def mean_feature(features: FaceFeatureSet, selected: np.ndarray) -> np.ndarray:
    """
    선택 면의 평균 특징 F_m

    Args:
        features: 면 특징
        selected: 면 인덱스 집합 S

    Returns:
        (d,) 평균 특징
    """
    selected = _require_selection(features, selected)
    return features.features[selected].mean(axis=0)


def threshold_assign(features: FaceFeatureSet, selected: np.ndarray) -> PartLabels:
    """
    임계값 할당: ||F_i − F_m||² ≤ max_{j∈S} ||F_j − F_m||² 이면 movable

    Args:
        features: 면 특징
        selected: 면 인덱스 집합 S

    Returns:
        초기 라벨 (S의 모든 면은 movable)
    """
    selected = _require_selection(features, selected)
    centroid = mean_feature(features, selected)
    distances = np.sum((features.features - centroid) ** 2, axis=1)
    radius = distances[selected].max()
    return PartLabels(distances <= radius)


def _within_cluster_cost(values: np.ndarray, assignment: np.ndarray) -> float:
    cost = 0.0
    for group in (assignment, ~assignment):
        if group.any():
            cost += float(np.sum((values[group] - values[group].mean(axis=0)) ** 2))
    return cost


def kmeans_refine(
    features: FaceFeatureSet,
    initial: PartLabels,
    max_iters: int = DEFAULT_MAX_ITERS,
    selected: Optional[np.ndarray] = None,
) -> tuple[PartLabels, int]:
    """
    2-means 정제

    초기 라벨 그룹의 평균으로 중심을 초기화하고 할당이 고정점에 도달하거나
    max_iters에 도달할 때까지 반복한다. 거리가 정확히 같으면 현재 라벨을 유지한다.
    selected가 주어지면 S의 과반을 포함한 클러스터가 movable 라벨을 가진다.

    Args:
        features: 면 특징
        initial: 초기 라벨 (두 라벨 모두 존재)
        max_iters: 최대 반복 횟수
        selected: 역투영 면 집합 S

    Returns:
        (정제된 라벨, 수행한 반복 횟수)
    """
    values = features.features
    if len(initial) != features.face_count:
        raise InvalidInputError("라벨 길이가 특징 개수와 다릅니다")
    if initial.movable_count == 0 or initial.base_count == 0:
        raise SegmentationError("k-means 초기 라벨에 두 파트가 모두 있어야 합니다")

    # cluster0 = 초기 movable 그룹
    assignment = initial.movable.copy()
    iterations = 0
    for _ in range(max_iters):
        first = values[assignment].mean(axis=0)
        second = values[~assignment].mean(axis=0)
        d_first = np.sum((values - first) ** 2, axis=1)
        d_second = np.sum((values - second) ** 2, axis=1)
        updated = np.where(d_first < d_second, True, np.where(d_second < d_first, False, assignment))
        if np.array_equal(updated, assignment):
            break
        if updated.all() or not updated.any():
            logger.debug("k-means 클러스터가 비어 이전 할당을 유지합니다")
            break
        assignment = updated
        iterations += 1
        logger.debug(f"k-means 반복 {iterations}: 비용 {_within_cluster_cost(values, assignment):.6f}")

    if selected is not None:
        selected = _require_selection(features, selected)
        if 2 * int(assignment[selected].sum()) < len(selected):
            assignment = ~assignment
    return PartLabels(assignment), iterations


def segment_movable(
    mesh: TriMesh,
    features: FaceFeatureSet,
    camera: Camera,
    mask: Image,
    max_iters: int = DEFAULT_MAX_ITERS,
) -> SegmentationResult:
    """
    움직이는 파트 분할 파이프라인

    Args:
        mesh: 전체 메시
        features: 면 특징
        camera: 입력 이미지 시점 카메라
        mask: 움직이는 파트 2D 마스크

    Returns:
        분할 결과 (라벨, S, 두 부분 메시)
    """
    features.require_faces(mesh)
    selected = backproject_mask(mesh, camera, mask)
    initial = threshold_assign(features, selected)
    if initial.base_count == 0:
        raise SegmentationError("임계값 할당 결과 베이스 파트가 비어 있습니다")

    labels, iterations = kmeans_refine(features, initial, max_iters, selected)
    if labels.movable_count == 0 or labels.base_count == 0:
        raise SegmentationError("분할 결과 한쪽 파트가 비어 있습니다")

    logger.info(
        f"분할 완료: movable {labels.movable_count}면, base {labels.base_count}면 "
        f"(S={len(selected)}, k-means {iterations}회)"
    )
    return SegmentationResult(
        labels=labels,
        visible=selected,
        movable=mesh.submesh(labels.movable),
        base=mesh.submesh(~labels.movable),
        iterations=iterations,
    )
