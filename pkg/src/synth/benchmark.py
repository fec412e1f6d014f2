"""
합성 벤치마크
장면 번들별 관절 추정, 지표 계산, 집계
"""

from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Union

import pandas as pd
from loguru import logger
from tqdm import tqdm

from src.config.loader import OptimConfig
from src.geometry.mesh import bbox_diagonal
from src.optimize.estimator import select_joint_type, warm_start
from src.synth.generator import load_scene_bundle, render_articulation, render_sequence
from src.utils.exceptions import ArticulationToolkitError
from src.utils.metrics import calculate_all_metrics

METRIC_COLUMNS = ["axis_angle_error", "axis_position_error", "motion_rmse", "psnr", "ssim", "final_loss"]

STATUS_OK = "ok"
STATUS_FAILED = "failed"


@dataclass
class EvalReport:
    """장면 하나의 평가 결과"""

    scene: str
    template: Optional[str] = None
    gt_type: Optional[str] = None
    est_type: Optional[str] = None
    axis_angle_error: float = float("nan")
    axis_position_error: float = float("nan")
    motion_rmse: float = float("nan")
    type_correct: bool = False
    psnr: float = float("nan")
    ssim: float = float("nan")
    final_loss: float = float("nan")
    status: str = STATUS_OK
    error: str = ""


def evaluate_scene(bundle_dir: Union[str, Path], config: OptimConfig, gt_seeded: bool = False) -> EvalReport:
    """
    장면 하나 평가

    Args:
        bundle_dir: 장면 번들 디렉토리
        config: 최적화 설정
        gt_seeded: 정답 관절을 추가 재시작으로 넣을지 여부

    Returns:
        평가 결과
    """
    bundle = load_scene_bundle(bundle_dir)
    gt = bundle.gt
    frames = render_sequence(gt, beta=config.beta)

    extra = [warm_start(gt.joint, gt.thetas, config.seed)] if gt_seeded else []
    result, chosen = select_joint_type(gt.base, gt.movable, frames, gt.camera, config, extra_inits=extra)
    canonical = result.canonical()
    thetas = canonical.profile.thetas

    metrics = calculate_all_metrics(
        canonical.joint,
        thetas,
        gt.joint,
        gt.thetas,
        bbox_diagonal(gt.base.merge(gt.movable)),
        render_articulation(gt.base, gt.movable, gt.camera, canonical.joint, thetas, beta=config.beta),
        frames,
    )
    return EvalReport(
        scene=Path(bundle_dir).name,
        template=gt.template,
        gt_type=gt.joint.joint_type.value,
        est_type=chosen.value,
        final_loss=result.final_loss,
        **metrics,
    )


def run_benchmark(
    scene_dir: Union[str, Path],
    config: Optional[OptimConfig] = None,
    report_path: Union[str, Path, None] = None,
    gt_seeded: bool = False,
) -> List[EvalReport]:
    """
    디렉토리 내 모든 장면 번들 평가

    실패한 장면은 status="failed"로 기록하고 계속 진행한다.

    Args:
        scene_dir: 장면 번들 상위 디렉토리
        config: 최적화 설정
        report_path: CSV 보고서 경로 (지정 시 저장)
        gt_seeded: 정답 관절을 추가 재시작으로 넣을지 여부

    Returns:
        장면별 평가 결과
    """
    config = config or OptimConfig()
    scene_dir = Path(scene_dir)
    if not scene_dir.is_dir():
        raise FileNotFoundError(f"input not found: {scene_dir}")

    bundles = sorted(p for p in scene_dir.iterdir() if p.is_dir())
    if not bundles:
        logger.warning(f"장면 번들이 없습니다: {scene_dir}")

    reports = []
    for bundle_dir in tqdm(bundles, desc="benchmark"):
        try:
            report = evaluate_scene(bundle_dir, config, gt_seeded)
            logger.info(
                f"[{report.scene}] {report.gt_type} → {report.est_type}, "
                f"축 오차 {report.axis_angle_error:.2f}°, 모션 RMSE {report.motion_rmse:.2%}, PSNR {report.psnr:.2f}"
            )
        except (ArticulationToolkitError, OSError, ValueError) as e:
            logger.warning(f"[{bundle_dir.name}] 평가 실패: {e}")
            report = EvalReport(scene=bundle_dir.name, status=STATUS_FAILED, error=str(e))
        reports.append(report)

    if report_path is not None:
        write_report(reports, report_path)
    return reports


def reports_to_frame(reports: Sequence[EvalReport]) -> pd.DataFrame:
    """보고서 목록 → 데이터프레임 (장면당 한 행)"""
    columns = list(EvalReport.__dataclass_fields__)
    return pd.DataFrame([asdict(r) for r in reports], columns=columns)


def write_report(reports: Sequence[EvalReport], path: Union[str, Path]) -> Path:
    """CSV 보고서 저장"""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    reports_to_frame(reports).to_csv(path, index=False, float_format="%.6g")
    logger.info(f"보고서 저장: {path} ({len(reports)}개 장면)")
    return path


def summarize_reports(reports: Sequence[EvalReport]) -> Dict[str, float]:
    """
    지표 집계

    Args:
        reports: 장면별 평가 결과

    Returns:
        지표별 median/mean, 관절 종류 정확도, 실패 장면 수
    """
    frame = reports_to_frame(reports)
    ok = frame[frame["status"] == STATUS_OK]
    summary: Dict[str, float] = {
        "scenes": int(len(frame)),
        "failed": int((frame["status"] == STATUS_FAILED).sum()),
        "type_accuracy": float(ok["type_correct"].astype(float).mean()) if len(ok) else float("nan"),
    }
    for column in METRIC_COLUMNS:
        values = pd.to_numeric(ok[column], errors="coerce")
        revolute_only = column == "axis_position_error"
        if revolute_only:
            values = values[ok["gt_type"] == "revolute"]
        summary[f"{column}_median"] = float(values.median()) if values.notna().any() else float("nan")
        summary[f"{column}_mean"] = float(values.mean()) if values.notna().any() else float("nan")
    return summary
