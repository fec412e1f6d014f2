"""
렌더링 손실 역전파
I_pred → w → ΔD → D_mov → 원근 보정 깊이 보간 → 정점 위치

픽셀 커버리지와 무게중심 좌표는 국소적으로 고정된 것으로 본다.
고정된 픽셀 광선 d와 면 평면의 교차 깊이 z = n·P0 / (n·d) 를 미분하면
∂z/∂P_i = b_i · n / (n·d) 이며, 커버리지가 변하지 않는 한 유한 차분과 일치한다.

커버리지 고정 기울기는 실루엣 이동을 보지 못하므로, 최적화에서는
움직이는 층을 화면에서 한 픽셀씩 밀어 얻은 경계 기울기를 더한다.
"""

from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from src.geometry.camera import Camera
from src.geometry.image import Image, require_same_resolution
from src.geometry.mesh import TriMesh
from src.render.blend import DEFAULT_BETA, SIGMOID_CLAMP, BlendOutput, blend_colors, blend_weights, soft_blend
from src.render.rasterizer import EMPTY_PROXIMITY, RenderTarget, rasterize

# 광선과 거의 평행한 면은 기울기에서 제외
GRAZING_EPS = 1e-12

# 경계 픽셀의 표면점을 찾을 이웃 순서 (왼, 오른, 위, 아래)
EDGE_NEIGHBORS = ((0, -1), (0, 1), (-1, 0), (1, 0))


@dataclass(frozen=True, eq=False)
class RenderContext:
    """카메라별 고정 데이터 (픽셀 광선 캐시)"""

    camera: Camera
    beta: float = DEFAULT_BETA
    background: tuple = (1.0, 1.0, 1.0)
    rays: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        rays = self.camera.pixel_rays()
        rays.setflags(write=False)
        object.__setattr__(self, "rays", rays)
        object.__setattr__(self, "background", tuple(float(c) for c in self.background))

    def rasterize(self, mesh: TriMesh) -> RenderTarget:
        return rasterize(mesh, self.camera, self.background)


@dataclass(frozen=True, eq=False)
class LossGradient:
    """손실, 움직이는 파트 정점 기울기 (V, 3), 블렌딩 결과"""

    loss: float
    vertex_grads: np.ndarray
    blend: BlendOutput


def _shift(values: np.ndarray, dr: int, dc: int, fill) -> np.ndarray:
    """out[r, c] = values[r + dr, c + dc], 범위 밖은 fill"""
    height, width = values.shape[:2]
    out = np.full_like(values, fill)
    out[max(-dr, 0) : height - max(dr, 0), max(-dc, 0) : width - max(dc, 0)] = values[
        max(dr, 0) : height - max(-dr, 0), max(dc, 0) : width - max(-dc, 0)
    ]
    return out


def _depth_cam_grads(
    mov_mesh: TriMesh,
    mov_target: RenderTarget,
    base_target: RenderTarget,
    d_pred: np.ndarray,
    cam: np.ndarray,
    context: RenderContext,
) -> np.ndarray:
    """커버리지 고정 깊이 경로의 카메라 좌표 정점 기울기"""
    cam_grads = np.zeros_like(cam)
    d_weight = np.sum(d_pred * (mov_target.color.data - base_target.color.data), axis=-1)

    delta = mov_target.proximity - base_target.proximity
    weight, complement = blend_weights(delta, context.beta)
    d_delta = context.beta * weight * complement
    d_delta[np.abs(delta * context.beta) >= SIGMOID_CLAMP] = 0.0
    pixel_grad = np.where(mov_target.coverage, d_weight * d_delta, 0.0)

    rows, cols = np.nonzero(pixel_grad)
    if len(rows) == 0:
        return cam_grads

    faces = mov_target.face_id[rows, cols]
    corners = mov_mesh.faces[faces]
    p0, p1, p2 = cam[corners[:, 0]], cam[corners[:, 1]], cam[corners[:, 2]]
    normals = np.cross(p1 - p0, p2 - p0)
    n_dot_d = np.einsum("ij,ij->i", normals, context.rays[rows, cols])
    usable = np.abs(n_dot_d) > GRAZING_EPS

    # ∂prox/∂P_i = −b_i · n / (n·d)
    scale = np.where(usable, -pixel_grad[rows, cols] / np.where(usable, n_dot_d, 1.0), 0.0)
    bary = mov_target.barycentrics[rows, cols]
    for k in range(3):
        np.add.at(cam_grads, corners[:, k], (scale * bary[:, k])[:, None] * normals)
    return cam_grads


def _edge_cam_grads(
    mov_mesh: TriMesh,
    mov_target: RenderTarget,
    base_target: RenderTarget,
    d_pred: np.ndarray,
    cam: np.ndarray,
    context: RenderContext,
) -> np.ndarray:
    """
    실루엣 경계의 화면 공간 기울기

    움직이는 층을 ±1 px 밀어 다시 블렌딩한 중앙 차분으로 dL/du, dL/dv를 구하고,
    픽셀을 덮는 표면점 (커버되지 않은 픽셀은 처음 찾은 커버된 이웃)의 투영 야코비안으로 정점에 보낸다.
    """
    cam_grads = np.zeros_like(cam)
    background = np.asarray(context.background)
    mov_color, mov_prox = mov_target.color.data, mov_target.proximity
    base_color, base_prox = base_target.color.data, base_target.proximity

    def shifted(dr: int, dc: int) -> np.ndarray:
        color = _shift(mov_color, dr, dc, background)
        prox = _shift(mov_prox, dr, dc, EMPTY_PROXIMITY)
        return blend_colors(color, prox, base_color, base_prox, context.beta)[0]

    # 층을 +1 px 옮기면 픽셀 c에는 c − 1의 값이 온다
    g_u = 0.5 * np.sum(d_pred * (shifted(0, -1) - shifted(0, 1)), axis=-1)
    g_v = 0.5 * np.sum(d_pred * (shifted(-1, 0) - shifted(1, 0)), axis=-1)

    covered = mov_target.coverage
    owner_rows, owner_cols = np.indices(covered.shape)
    owned = covered.copy()
    for dr, dc in EDGE_NEIGHBORS:
        take = ~owned & _shift(covered, dr, dc, False)
        owner_rows[take] += dr
        owner_cols[take] += dc
        owned |= take

    rows, cols = np.nonzero(owned & ((g_u != 0.0) | (g_v != 0.0)))
    if len(rows) == 0:
        return cam_grads

    src_rows, src_cols = owner_rows[rows, cols], owner_cols[rows, cols]
    corners = mov_mesh.faces[mov_target.face_id[src_rows, src_cols]]
    bary = mov_target.barycentrics[src_rows, src_cols]
    point = np.einsum("ik,ikj->ij", bary, cam[corners])
    x, y, z = point[:, 0], point[:, 1], point[:, 2]
    usable = z > GRAZING_EPS
    inv_z = np.where(usable, 1.0 / np.where(usable, z, 1.0), 0.0)

    fx, fy = context.camera.focal
    gu, gv = g_u[rows, cols], g_v[rows, cols]
    # u = fx·x/z + cx, v = fy·y/z + cy
    d_point = np.stack(
        [gu * fx * inv_z, gv * fy * inv_z, -(gu * fx * x + gv * fy * y) * inv_z**2],
        axis=1,
    )
    for k in range(3):
        np.add.at(cam_grads, corners[:, k], bary[:, k, None] * d_point)
    return cam_grads


def loss_and_vertex_grads(
    mov_mesh: TriMesh,
    mov_target: RenderTarget,
    base_target: RenderTarget,
    ref: Image,
    context: RenderContext,
    edges: bool = False,
) -> LossGradient:
    """
    렌더링 손실과 움직이는 파트 정점 기울기

    Args:
        mov_mesh: 움직이는 파트 (mov_target을 만든 메시)
        mov_target: 움직이는 파트 렌더링
        base_target: 베이스 파트 렌더링
        ref: 기준 이미지
        context: 렌더링 컨텍스트
        edges: 실루엣 경계의 화면 공간 기울기 포함 여부 (끄면 커버리지 고정 기울기와 정확히 일치)

    Returns:
        손실과 기울기
    """
    blend = soft_blend(mov_target, base_target, context.beta)
    require_same_resolution(blend.image, ref, "기준 프레임")
    pred = blend.image.data
    loss = float(np.mean(np.abs(pred - ref.data)))

    if not mov_target.coverage.any():
        return LossGradient(loss, np.zeros((mov_mesh.vertex_count, 3)), blend)

    # dL/dI_pred (평균 L1)
    d_pred = np.sign(pred - ref.data) / pred.size
    cam = context.camera.to_camera_space(mov_mesh.vertices)
    cam_grads = _depth_cam_grads(mov_mesh, mov_target, base_target, d_pred, cam, context)
    if edges:
        cam_grads += _edge_cam_grads(mov_mesh, mov_target, base_target, d_pred, cam, context)

    # P = R·v + t → dL/dv = Rᵀ·dL/dP
    grads = cam_grads @ context.camera.rotation
    return LossGradient(loss, grads, blend)


def backward(
    base_mesh: TriMesh,
    mov_mesh: TriMesh,
    camera: Camera,
    beta: float,
    ref: Image,
    background: Sequence[float] = (1.0, 1.0, 1.0),
    base_target: Optional[RenderTarget] = None,
) -> np.ndarray:
    """
    image_loss(render_pred(...), ref)의 움직이는 파트 정점 기울기

    Args:
        base_mesh: 베이스 파트
        mov_mesh: 움직이는 파트
        camera: 카메라
        beta: 선명도
        ref: 기준 이미지
        background: 배경색
        base_target: 미리 계산한 베이스 렌더링

    Returns:
        (V, 3) 정점 기울기
    """
    context = RenderContext(camera, beta, tuple(background))
    if base_target is None:
        base_target = context.rasterize(base_mesh)
    result = loss_and_vertex_grads(mov_mesh, context.rasterize(mov_mesh), base_target, ref, context)
    return result.vertex_grads
