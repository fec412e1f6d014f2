"""
아모달 완성 입력 준비
보이는 영역 추출과 인페인팅 영역 계산 (인페인팅 모델 자체는 범위 밖)
"""

from dataclasses import dataclass

import numpy as np

from src.geometry.camera import Camera
from src.geometry.image import Image, require_same_resolution
from src.geometry.mesh import TriMesh
from src.render.rasterizer import render_silhouette
from src.utils.exceptions import InvalidInputError

BINARY_THRESHOLD = 0.5


@dataclass(frozen=True, eq=False)
class AmodalInputs:
    """파트 하나의 (보이는 영역, 인페인팅 마스크)"""

    visible: Image
    inpaint_mask: Image


@dataclass(frozen=True, eq=False)
class PartAmodalInputs:
    movable: AmodalInputs
    base: AmodalInputs


def prepare_amodal_inputs(image: Image, mask: Image, part_silhouette: Image) -> AmodalInputs:
    """
    visible = I ⊙ M, inpaint_mask = silhouette AND NOT mask

    Args:
        image: 입력 이미지
        mask: 파트 마스크 (1채널)
        part_silhouette: 완성된 파트 메시 실루엣 (1채널)

    Returns:
        아모달 입력
    """
    require_same_resolution(image, mask, "마스크")
    require_same_resolution(image, part_silhouette, "실루엣")
    if mask.channels != 1 or part_silhouette.channels != 1:
        raise InvalidInputError("마스크와 실루엣은 1채널이어야 합니다")

    visible = image.data * mask.data
    inpaint = (part_silhouette.data > BINARY_THRESHOLD) & ~(mask.data > BINARY_THRESHOLD)
    return AmodalInputs(Image(visible), Image(inpaint.astype(np.float64)))


def prepare_amodal_inputs_for_parts(
    image: Image,
    mask: Image,
    movable: TriMesh,
    base: TriMesh,
    camera: Camera,
) -> PartAmodalInputs:
    """
    두 파트 모두의 아모달 입력 (베이스는 마스크 여집합 사용)

    Args:
        image: 입력 이미지
        mask: 움직이는 파트 마스크
        movable: 움직이는 파트 메시
        base: 베이스 파트 메시
        camera: 카메라

    Returns:
        파트별 아모달 입력
    """
    complement = Image(1.0 - mask.data)
    return PartAmodalInputs(
        movable=prepare_amodal_inputs(image, mask, render_silhouette(movable, camera)),
        base=prepare_amodal_inputs(image, complement, render_silhouette(base, camera)),
    )
