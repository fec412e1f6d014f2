"""
핀홀 카메라 모듈
투영과 근접도(proximity) 계산

근접도는 카메라 시선축 거리의 부호를 뒤집은 값이다 (클수록 가깝다).
"""

from dataclasses import dataclass
from pathlib import Path
from typing import NamedTuple, Sequence, Union

import numpy as np

from src.config.loader import CameraFile, read_model, write_json
from src.utils.exceptions import InvalidInputError, SchemaError

# 카메라 평면 판정 임계값
CAMERA_PLANE_EPS = 1e-9


class Projection(NamedTuple):
    """단일 점 투영 결과"""

    pixel: tuple[float, float]
    proximity: float
    behind: bool


@dataclass(frozen=True, eq=False)
class Camera:
    """
    핀홀 카메라

    pose는 world → camera 4x4 강체 변환이며 카메라는 +z 방향을 본다.
    이미지 좌표는 x 오른쪽, y 아래쪽.
    """

    focal: tuple[float, float]
    principal: tuple[float, float]
    pose: np.ndarray
    resolution: tuple[int, int]

    def __post_init__(self):
        fx, fy = (float(v) for v in self.focal)
        cx, cy = (float(v) for v in self.principal)
        width, height = (int(v) for v in self.resolution)
        if fx <= 0 or fy <= 0:
            raise InvalidInputError(f"초점 거리는 양수여야 합니다: ({fx}, {fy})")
        if width < 1 or height < 1:
            raise InvalidInputError(f"해상도는 1 이상이어야 합니다: ({width}, {height})")

        pose = np.asarray(self.pose, dtype=np.float64)
        if pose.shape != (4, 4):
            raise InvalidInputError(f"pose는 4x4 행렬이어야 합니다: {pose.shape}")
        rotation = pose[:3, :3]
        if not np.allclose(rotation @ rotation.T, np.eye(3), atol=1e-9, rtol=0.0):
            raise InvalidInputError("pose 회전 행렬이 정규직교가 아닙니다")
        if np.linalg.det(rotation) < 0:
            raise InvalidInputError("pose 회전 행렬의 행렬식이 음수입니다")
        pose = pose.copy()
        pose.setflags(write=False)

        object.__setattr__(self, "focal", (fx, fy))
        object.__setattr__(self, "principal", (cx, cy))
        object.__setattr__(self, "pose", pose)
        object.__setattr__(self, "resolution", (width, height))

    @property
    def width(self) -> int:
        return self.resolution[0]

    @property
    def height(self) -> int:
        return self.resolution[1]

    @property
    def rotation(self) -> np.ndarray:
        return self.pose[:3, :3]

    @property
    def translation(self) -> np.ndarray:
        return self.pose[:3, 3]

    @classmethod
    def look_at(
        cls,
        eye: Sequence[float],
        target: Sequence[float],
        up: Sequence[float] = (0.0, 1.0, 0.0),
        focal: float = 1.0,
        resolution: tuple[int, int] = (256, 256),
    ) -> "Camera":
        """
        eye에서 target을 바라보는 카메라 생성

        Args:
            eye: 카메라 위치 (월드)
            target: 주시점 (월드)
            up: 월드 위쪽 방향
            focal: 이미지 폭 대비 초점 거리 비율 (fx = focal * width)
            resolution: (width, height)

        Returns:
            이미지 중심에 주점이 있는 카메라
        """
        eye = np.asarray(eye, dtype=np.float64)
        forward = np.asarray(target, dtype=np.float64) - eye
        forward /= np.linalg.norm(forward)
        right = np.cross(forward, np.asarray(up, dtype=np.float64))
        if np.linalg.norm(right) < 1e-12:
            raise InvalidInputError("up 벡터가 시선 방향과 평행합니다")
        right /= np.linalg.norm(right)
        down = np.cross(forward, right)

        rotation = np.stack([right, down, forward])
        pose = np.eye(4)
        pose[:3, :3] = rotation
        pose[:3, 3] = -rotation @ eye

        width, height = resolution
        f = focal * width
        return cls((f, f), (width / 2.0, height / 2.0), pose, (width, height))

    def to_camera_space(self, points: np.ndarray) -> np.ndarray:
        """월드 좌표 (N, 3) → 카메라 좌표 (N, 3)"""
        points = np.asarray(points, dtype=np.float64).reshape(-1, 3)
        return points @ self.rotation.T + self.translation

    def project_points(self, points: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """
        벡터화 투영

        Args:
            points: 월드 좌표 (N, 3)

        Returns:
            (픽셀 좌표 (N, 2), 근접도 (N,), 카메라 뒤 여부 (N,))
        """
        cam = self.to_camera_space(points)
        z = cam[:, 2]
        behind = z <= CAMERA_PLANE_EPS
        safe_z = np.where(np.abs(z) > CAMERA_PLANE_EPS, z, 1.0)
        fx, fy = self.focal
        cx, cy = self.principal
        pixels = np.stack([fx * cam[:, 0] / safe_z + cx, fy * cam[:, 1] / safe_z + cy], axis=1)
        return pixels, -z, behind

    def pixel_rays(self) -> np.ndarray:
        """
        픽셀 중심을 지나는 카메라 공간 광선 방향 (z 성분 1)

        Returns:
            (H, W, 3) 광선 방향
        """
        fx, fy = self.focal
        cx, cy = self.principal
        xs = (np.arange(self.width) + 0.5 - cx) / fx
        ys = (np.arange(self.height) + 0.5 - cy) / fy
        rays = np.ones((self.height, self.width, 3))
        rays[:, :, 0] = xs[None, :]
        rays[:, :, 1] = ys[:, None]
        return rays


def project(camera: Camera, point: Sequence[float]) -> Projection:
    """
    단일 점 핀홀 투영

    Args:
        camera: 카메라
        point: 월드 좌표 점

    Returns:
        (픽셀 좌표, 근접도, 카메라 뒤 여부)
    """
    cam = camera.to_camera_space(np.asarray(point, dtype=np.float64))[0]
    if abs(cam[2]) <= CAMERA_PLANE_EPS:
        raise InvalidInputError(f"점이 카메라 평면 위에 있습니다: z={cam[2]:.3e}")
    fx, fy = camera.focal
    cx, cy = camera.principal
    pixel = (float(fx * cam[0] / cam[2] + cx), float(fy * cam[1] / cam[2] + cy))
    return Projection(pixel=pixel, proximity=float(-cam[2]), behind=bool(cam[2] < 0))


def load_camera(path: Union[str, Path]) -> Camera:
    """
    camera.json 로드

    Args:
        path: JSON 경로 ({"focal", "principal", "pose"(4x4 행 우선), "resolution"})

    Returns:
        카메라
    """
    spec = read_model(Path(path), CameraFile)
    try:
        return Camera(spec.focal, spec.principal, np.asarray(spec.pose), spec.resolution)
    except InvalidInputError as e:
        raise SchemaError(f"카메라 검증 실패: {path}: {e}") from e


def save_camera(camera: Camera, path: Union[str, Path]):
    """camera.json 저장"""
    write_json(
        CameraFile(
            focal=camera.focal,
            principal=camera.principal,
            pose=camera.pose.tolist(),
            resolution=camera.resolution,
        ),
        Path(path),
    )
