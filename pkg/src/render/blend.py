"""
소프트 깊이 블렌딩
두 파트 렌더링을 근접도 차이의 시그모이드 가중치로 합성
"""

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from src.geometry.camera import Camera
from src.geometry.image import Image, require_same_resolution
from src.geometry.mesh import TriMesh
from src.render.rasterizer import RenderTarget, rasterize
from src.utils.exceptions import InvalidInputError

DEFAULT_BETA = 500.0

# 시그모이드 인자 클램프 범위
SIGMOID_CLAMP = 60.0


@dataclass(frozen=True, eq=False)
class BlendOutput:
    """블렌딩 결과 (I_pred, 픽셀별 가중치 w)"""

    image: Image
    weights: np.ndarray


def blend_weights(delta: np.ndarray, beta: float) -> tuple[np.ndarray, np.ndarray]:
    """
    w = σ(ΔD·β) 와 1 − w

    1 − w 를 σ(−ΔD·β)로 따로 계산해 파트 교환 시 결과가 비트 단위로 같다.

    Args:
        delta: 근접도 차이 ΔD = D_mov − D_base
        beta: 선명도

    Returns:
        (w, 1 − w)
    """
    x = np.clip(delta * beta, -SIGMOID_CLAMP, SIGMOID_CLAMP)
    return 1.0 / (1.0 + np.exp(-x)), 1.0 / (1.0 + np.exp(x))


def blend_colors(
    mov_color: np.ndarray,
    mov_proximity: np.ndarray,
    base_color: np.ndarray,
    base_proximity: np.ndarray,
    beta: float,
) -> tuple[np.ndarray, np.ndarray]:
    """배열 단위 블렌딩 (혼합 색, 가중치 w)"""
    weight, complement = blend_weights(mov_proximity - base_proximity, beta)
    mixed = weight[..., None] * mov_color + complement[..., None] * base_color
    # 두 값이 같으면 그대로 둔다
    mixed = np.where(mov_color == base_color, base_color, mixed)
    return mixed, weight


def soft_blend(mov: RenderTarget, base: RenderTarget, beta: float = DEFAULT_BETA) -> BlendOutput:
    """
    소프트 깊이 블렌딩

    ΔD = D_mov − D_base, w = σ(ΔD·β), I_pred = w·I_mov + (1 − w)·I_base

    Args:
        mov: 움직이는 파트 렌더링
        base: 베이스 파트 렌더링
        beta: 선명도 (기본 500)

    Returns:
        블렌딩 결과
    """
    if beta <= 0:
        raise InvalidInputError(f"beta는 양수여야 합니다: {beta}")
    require_same_resolution(mov.color, base.color, "파트 렌더링")

    mixed, weight = blend_colors(mov.color.data, mov.proximity, base.color.data, base.proximity, beta)
    return BlendOutput(Image.from_unclipped(mixed), weight)


def render_pred(
    base_mesh: TriMesh,
    mov_mesh: TriMesh,
    camera: Camera,
    beta: float = DEFAULT_BETA,
    background: Sequence[float] = (1.0, 1.0, 1.0),
    base_target: Optional[RenderTarget] = None,
) -> BlendOutput:
    """
    두 파트를 독립 렌더링 후 소프트 블렌딩

    Args:
        base_mesh: 베이스 파트
        mov_mesh: 움직이는 파트 (변형 적용 후)
        camera: 카메라
        beta: 선명도
        background: 배경색
        base_target: 미리 계산한 베이스 렌더링 (없으면 새로 렌더링)

    Returns:
        블렌딩 결과
    """
    if base_target is None:
        base_target = rasterize(base_mesh, camera, background)
    return soft_blend(rasterize(mov_mesh, camera, background), base_target, beta)


def hard_composite(mov: RenderTarget, base: RenderTarget) -> Image:
    """
    하드 z-버퍼 합성 (동률이면 베이스)

    Args:
        mov: 움직이는 파트 렌더링
        base: 베이스 파트 렌더링

    Returns:
        합성 이미지
    """
    require_same_resolution(mov.color, base.color, "파트 렌더링")
    nearer = mov.proximity > base.proximity
    return Image(np.where(nearer[..., None], mov.color.data, base.color.data))


def image_loss(pred: Image, ref: Image) -> float:
    """
    렌더링 손실: 전체 채널 평균 L1

    Args:
        pred: 예측 이미지
        ref: 기준 이미지

    Returns:
        평균 절대 오차
    """
    require_same_resolution(pred, ref, "손실 입력")
    if pred.channels != ref.channels:
        raise InvalidInputError(f"채널 수 불일치: {pred.channels} != {ref.channels}")
    return float(np.mean(np.abs(pred.data - ref.data)))
