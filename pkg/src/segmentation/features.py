"""
면 특징 모듈
외부 특징 바이너리 입출력 및 기하 기반 대체 특징
"""

from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Union

import numpy as np
from loguru import logger

from src.geometry.mesh import TriMesh, bbox_diagonal
from src.utils.exceptions import FeatureFormatError, InvalidInputError

_HEADER = np.dtype("<u4")
_VALUE = np.dtype("<f4")


@dataclass(frozen=True, eq=False)
class FaceFeatureSet:
    """면별 d차원 특징 (F, d)"""

    features: np.ndarray

    def __post_init__(self):
        features = np.asarray(self.features, dtype=np.float64)
        if features.ndim != 2:
            raise InvalidInputError(f"특징 배열은 (F, d) 형상이어야 합니다: {features.shape}")
        if features.shape[1] < 1:
            raise InvalidInputError("특징 차원은 1 이상이어야 합니다")
        if not np.isfinite(features).all():
            raise InvalidInputError("특징에 유한하지 않은 값이 있습니다")
        features = np.ascontiguousarray(features)
        features.setflags(write=False)
        object.__setattr__(self, "features", features)

    @property
    def dim(self) -> int:
        return self.features.shape[1]

    @property
    def face_count(self) -> int:
        return self.features.shape[0]

    def require_faces(self, mesh: TriMesh):
        """메시 면 개수와 일치하는지 검사"""
        if self.face_count != mesh.face_count:
            raise InvalidInputError(f"특징 개수 불일치: 특징 {self.face_count}개 != 면 {mesh.face_count}개")


def load_features(path: Union[str, Path], face_count: Optional[int] = None) -> FaceFeatureSet:
    """
    특징 바이너리 로드

    헤더 (face_count: u32, dim: u32, 리틀 엔디언) + face_count×dim float32 (행 우선)

    Args:
        path: 파일 경로
        face_count: 기대 면 개수 (지정 시 검사)

    Returns:
        면 특징 집합
    """
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"input not found: {path}")
    payload = path.read_bytes()
    if len(payload) < 2 * _HEADER.itemsize:
        raise FeatureFormatError(f"특징 파일 헤더가 잘렸습니다: {path}")
    count, dim = (int(v) for v in np.frombuffer(payload, dtype=_HEADER, count=2))
    if face_count is not None and count != face_count:
        raise FeatureFormatError(f"특징 면 개수 불일치: 파일 {count}개 != 메시 {face_count}개")
    if dim < 1:
        raise FeatureFormatError(f"특징 차원이 0입니다: {path}")

    expected = 2 * _HEADER.itemsize + count * dim * _VALUE.itemsize
    if len(payload) != expected:
        raise FeatureFormatError(f"특징 파일 크기 불일치: {len(payload)} != {expected} 바이트 ({path})")
    values = np.frombuffer(payload, dtype=_VALUE, offset=2 * _HEADER.itemsize).reshape(count, dim)
    if not np.isfinite(values).all():
        raise FeatureFormatError(f"특징에 유한하지 않은 값이 있습니다: {path}")

    logger.debug(f"특징 로드: {path} ({count}×{dim})")
    return FaceFeatureSet(values.astype(np.float64))


def save_features(features: FaceFeatureSet, path: Union[str, Path]):
    """특징 바이너리 저장 (float32로 저장)"""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    header = np.array([features.face_count, features.dim], dtype=_HEADER)
    with open(path, "wb") as f:
        f.write(header.tobytes())
        f.write(features.features.astype(_VALUE).tobytes())


def geometric_fallback_features(mesh: TriMesh, scale: float = 1.0) -> FaceFeatureSet:
    """
    기하 기반 6차원 면 특징: (무게중심 / bbox 대각선 × scale, 법선)

    Args:
        mesh: 메시 (면 1개 이상)
        scale: 위치 성분 가중치

    Returns:
        면 특징 집합 (면적 0인 면의 법선은 영벡터)
    """
    if mesh.face_count == 0:
        raise InvalidInputError("빈 메시에는 특징을 만들 수 없습니다")
    diagonal = bbox_diagonal(mesh)
    if diagonal <= 0:
        diagonal = 1.0
    centroids = mesh.face_centroids() / diagonal * scale
    return FaceFeatureSet(np.hstack([centroids, mesh.face_normals()]))
