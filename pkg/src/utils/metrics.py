"""
평가 지표 계산 유틸리티
PSNR, SSIM 이미지 정합 지표와 관절 축/모션 오차
"""

from typing import Dict, Optional, Sequence

import numpy as np

from src.articulation.joint import JointSpec
from src.geometry.image import Image, require_same_resolution
from src.utils.exceptions import InvalidInputError

PSNR_CAP = 99.0
SSIM_WINDOW = 8
SSIM_C1 = 0.01 ** 2
SSIM_C2 = 0.03 ** 2


def psnr(pred: Image, ref: Image) -> float:
    """
    PSNR 계산

    PSNR = 10·log10(1 / MSE), MSE < 1e-10 이면 99 dB

    Args:
        pred: 예측 이미지
        ref: 기준 이미지

    Returns:
        PSNR (dB)
    """
    require_same_resolution(pred, ref, "PSNR 입력")
    mse = float(np.mean((pred.data - ref.data) ** 2))
    if mse < 1e-10:
        return PSNR_CAP
    return min(PSNR_CAP, 10.0 * np.log10(1.0 / mse))


def ssim(pred: Image, ref: Image, window: int = SSIM_WINDOW) -> float:
    """
    SSIM 계산 (휘도, 겹치지 않는 window×window 블록 평균)

    가장자리에서 블록을 채우지 못하는 픽셀은 제외한다.

    Args:
        pred: 예측 이미지
        ref: 기준 이미지
        window: 블록 크기

    Returns:
        평균 SSIM
    """
    require_same_resolution(pred, ref, "SSIM 입력")
    x, y = pred.gray(), ref.gray()
    rows, cols = x.shape[0] // window, x.shape[1] // window
    if rows == 0 or cols == 0:
        raise InvalidInputError(f"이미지가 SSIM 블록({window}×{window})보다 작습니다: {x.shape}")

    def blocks(values: np.ndarray) -> np.ndarray:
        trimmed = values[: rows * window, : cols * window]
        return trimmed.reshape(rows, window, cols, window).swapaxes(1, 2).reshape(rows, cols, -1)

    bx, by = blocks(x), blocks(y)
    mu_x, mu_y = bx.mean(axis=-1), by.mean(axis=-1)
    var_x = ((bx - mu_x[..., None]) ** 2).mean(axis=-1)
    var_y = ((by - mu_y[..., None]) ** 2).mean(axis=-1)
    cov = ((bx - mu_x[..., None]) * (by - mu_y[..., None])).mean(axis=-1)

    numerator = (2.0 * mu_x * mu_y + SSIM_C1) * (2.0 * cov + SSIM_C2)
    denominator = (mu_x ** 2 + mu_y ** 2 + SSIM_C1) * (var_x + var_y + SSIM_C2)
    return float(np.mean(numerator / denominator))


def axis_errors(est: JointSpec, gt: JointSpec, bbox_diag: float) -> tuple[float, float]:
    """
    축 방향/위치 오차

    Args:
        est: 추정 관절
        gt: 정답 관절
        bbox_diag: 정규화용 바운딩 박스 대각선

    Returns:
        (방향 오차 (도, 부호 무관), 위치 오차 (축 직선까지 거리 / 대각선, 병진은 0))
    """
    if est.joint_type is not gt.joint_type:
        raise InvalidInputError(f"관절 종류 불일치: {est.joint_type.value} != {gt.joint_type.value}")
    cosine = min(1.0, abs(float(np.dot(est.axis_dir, gt.axis_dir))))
    angle = float(np.degrees(np.arccos(cosine)))

    if not gt.is_revolute:
        return angle, 0.0
    if bbox_diag <= 0:
        raise InvalidInputError(f"bbox_diag는 양수여야 합니다: {bbox_diag}")
    offset = est.axis_pos - gt.axis_pos
    perpendicular = offset - np.dot(offset, gt.axis_dir) * gt.axis_dir
    return angle, float(np.linalg.norm(perpendicular) / bbox_diag)


def motion_rmse(est: Sequence[float], gt: Sequence[float]) -> float:
    """
    모션 RMSE (부호 게이지 최소화, GT 범위 max|gt|로 정규화)

    Args:
        est: 추정 θ
        gt: 정답 θ

    Returns:
        정규화 RMSE
    """
    est = np.asarray(getattr(est, "thetas", est), dtype=np.float64)
    gt = np.asarray(gt, dtype=np.float64)
    if est.shape != gt.shape:
        raise InvalidInputError(f"θ 길이 불일치: {est.shape} != {gt.shape}")
    scale = float(np.max(np.abs(gt))) if gt.size else 0.0
    if scale == 0.0:
        if np.any(est != 0.0):
            raise InvalidInputError("정답 모션 범위가 0인데 추정 모션이 0이 아닙니다")
        return 0.0
    rmse = min(float(np.sqrt(np.mean((est - sign * gt) ** 2))) for sign in (1.0, -1.0))
    return rmse / scale


def calculate_all_metrics(
    est_joint: JointSpec,
    est_thetas: Sequence[float],
    gt_joint: JointSpec,
    gt_thetas: Sequence[float],
    bbox_diag: float,
    pred_frames: Optional[Sequence[Image]] = None,
    gt_frames: Optional[Sequence[Image]] = None,
) -> Dict[str, float]:
    """
    모든 평가 지표 계산

    관절 종류가 다르면 축/모션 오차는 NaN, 이미지 지표는 프레임 평균.

    Returns:
        지표 딕셔너리
    """
    type_correct = est_joint.joint_type is gt_joint.joint_type
    if type_correct:
        angle, position = axis_errors(est_joint, gt_joint, bbox_diag)
        rmse = motion_rmse(est_thetas, gt_thetas)
    else:
        angle = position = rmse = float("nan")

    metrics = {
        "axis_angle_error": angle,
        "axis_position_error": position,
        "motion_rmse": rmse,
        "type_correct": type_correct,
        "psnr": float("nan"),
        "ssim": float("nan"),
    }
    if pred_frames is not None and gt_frames is not None:
        if len(pred_frames) != len(gt_frames):
            raise InvalidInputError(f"프레임 수 불일치: {len(pred_frames)} != {len(gt_frames)}")
        metrics["psnr"] = float(np.mean([psnr(p, g) for p, g in zip(pred_frames, gt_frames)]))
        metrics["ssim"] = float(np.mean([ssim(p, g) for p, g in zip(pred_frames, gt_frames)]))
    return metrics
