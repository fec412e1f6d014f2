"""
소프트웨어 래스터라이저
픽셀 중심 샘플링, 원근 보정 하드 z-버퍼

버퍼에는 근접도(시선축 거리의 음수)를 저장한다. 근접도가 큰 면이 이기고,
동률이면 인덱스가 낮은 면이 이긴다. 모서리 동률은 top-left 규칙을 따른다.
"""

from dataclasses import dataclass
from typing import Sequence

import numpy as np
from loguru import logger

from src.geometry.camera import CAMERA_PLANE_EPS, Camera
from src.geometry.image import Image
from src.geometry.mesh import TriMesh

EMPTY_PROXIMITY = -1e6
NO_FACE = -1

# 화면 면적이 이보다 작은 삼각형은 건너뛴다 (픽셀² 단위)
MIN_SCREEN_AREA = 1e-12


@dataclass(frozen=True, eq=False)
class RenderTarget:
    """
    렌더링 버퍼

    color: 3채널 이미지, proximity: (H, W), coverage: (H, W) bool,
    face_id: (H, W) 승리 면 인덱스 (없으면 -1), barycentrics: (H, W, 3) 원근 보정 무게중심 좌표
    """

    color: Image
    proximity: np.ndarray
    coverage: np.ndarray
    face_id: np.ndarray
    barycentrics: np.ndarray

    def __post_init__(self):
        for name in ("proximity", "coverage", "face_id", "barycentrics"):
            getattr(self, name).setflags(write=False)

    @property
    def resolution(self) -> tuple[int, int]:
        return self.color.resolution


def _edge(ax, ay, bx, by, px, py):
    return (px - ax) * (by - ay) - (py - ay) * (bx - ax)


def _is_top_left(dx: float, dy: float) -> bool:
    # 공유 모서리는 두 삼각형에서 반대 방향이므로 정확히 한쪽만 소유한다
    return dy > 0 or (dy == 0 and dx < 0)


def rasterize(mesh: TriMesh, camera: Camera, background: Sequence[float] = (1.0, 1.0, 1.0)) -> RenderTarget:
    """
    하드 z-버퍼 래스터화

    Args:
        mesh: 렌더링할 메시 (카메라 뒤 정점이 있는 면은 건너뜀)
        camera: 카메라
        background: 배경색 (RGB)

    Returns:
        렌더링 버퍼
    """
    width, height = camera.width, camera.height
    proximity = np.full((height, width), EMPTY_PROXIMITY)
    face_id = np.full((height, width), NO_FACE, dtype=np.int64)
    barycentrics = np.zeros((height, width, 3))

    if mesh.face_count:
        cam = camera.to_camera_space(mesh.vertices)
        depth = cam[:, 2]
        fx, fy = camera.focal
        cx, cy = camera.principal
        safe_depth = np.where(depth > CAMERA_PLANE_EPS, depth, 1.0)
        sx = fx * cam[:, 0] / safe_depth + cx
        sy = fy * cam[:, 1] / safe_depth + cy

        tri_depth = depth[mesh.faces]
        visible = np.all(tri_depth > CAMERA_PLANE_EPS, axis=1)
        skipped = int((~visible).sum())
        if skipped:
            logger.debug(f"카메라 뒤 면 {skipped}개 제외")

        for f in np.flatnonzero(visible):
            i0, i1, i2 = mesh.faces[f]
            x0, y0, x1, y1, x2, y2 = sx[i0], sy[i0], sx[i1], sy[i1], sx[i2], sy[i2]
            area = _edge(x0, y0, x1, y1, x2, y2)
            if abs(area) < MIN_SCREEN_AREA:
                continue

            col0 = max(int(np.ceil(min(x0, x1, x2) - 0.5)), 0)
            col1 = min(int(np.floor(max(x0, x1, x2) - 0.5)), width - 1)
            row0 = max(int(np.ceil(min(y0, y1, y2) - 0.5)), 0)
            row1 = min(int(np.floor(max(y0, y1, y2) - 0.5)), height - 1)
            if col0 > col1 or row0 > row1:
                continue

            px = np.arange(col0, col1 + 1) + 0.5
            py = np.arange(row0, row1 + 1) + 0.5
            gx, gy = np.meshgrid(px, py)

            # w_k: 꼭짓점 k의 맞은편 모서리
            sign = 1.0 if area > 0 else -1.0
            edges = ((x1, y1, x2, y2), (x2, y2, x0, y0), (x0, y0, x1, y1))
            inside = np.ones(gx.shape, dtype=bool)
            weights = []
            for ax, ay, bx, by in edges:
                w = sign * _edge(ax, ay, bx, by, gx, gy)
                if _is_top_left(sign * (bx - ax), sign * (by - ay)):
                    inside &= w >= 0
                else:
                    inside &= w > 0
                weights.append(w)
            if not inside.any():
                continue

            screen_bary = np.stack(weights, axis=-1) / abs(area)
            inv_depth = screen_bary / tri_depth[f]
            inv_sum = inv_depth.sum(axis=-1)
            face_prox = -1.0 / inv_sum

            region_prox = proximity[row0:row1 + 1, col0:col1 + 1]
            update = inside & (face_prox > region_prox)
            if not update.any():
                continue
            region_prox[update] = face_prox[update]
            face_id[row0:row1 + 1, col0:col1 + 1][update] = f
            barycentrics[row0:row1 + 1, col0:col1 + 1][update] = (inv_depth / inv_sum[..., None])[update]

    coverage = face_id != NO_FACE
    backdrop = Image.filled(width, height, np.asarray(background, dtype=np.float64))
    if not coverage.any():
        return RenderTarget(backdrop, proximity, coverage, face_id, barycentrics)

    color = backdrop.data.copy()
    color[coverage] = mesh.colors_or_default()[face_id[coverage]]
    return RenderTarget(Image(color), proximity, coverage, face_id, barycentrics)


def render_silhouette(mesh: TriMesh, camera: Camera) -> Image:
    """
    파트 실루엣 (1채널, 덮인 픽셀 1.0)

    Args:
        mesh: 파트 메시
        camera: 카메라

    Returns:
        실루엣 이미지
    """
    target = rasterize(mesh, camera)
    return Image(target.coverage.astype(np.float64))
