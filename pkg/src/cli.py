"""
명령줄 진입점
segment / synth / estimate / render / eval

종료 코드: 0 성공, 1 실행/입출력 오류, 2 사용법/검증 오류
"""

import argparse
import sys
import time
from datetime import datetime, timezone
from pathlib import Path
from typing import Callable, Dict, List, Optional

import pandas as pd
from loguru import logger
from pydantic import ValidationError

from src import __version__
from src.articulation.joint import JointType, load_joint, resample_thetas
from src.config.loader import OptimConfig, RunManifest, SynthConfig, write_json
from src.config.settings import get_settings
from src.geometry.camera import load_camera
from src.geometry.image import load_image, save_image
from src.geometry.mesh import load_mesh, save_mesh
from src.optimize.estimator import estimate_joint, save_result, select_joint_type
from src.segmentation.amodal import prepare_amodal_inputs_for_parts
from src.segmentation.features import geometric_fallback_features, load_features
from src.segmentation.segmenter import segment_movable
from src.synth.benchmark import run_benchmark, summarize_reports
from src.synth.generator import (
    FRAME_PATTERN,
    generate_scene,
    load_frames,
    render_articulation,
    render_sequence,
    save_scene_bundle,
)
from src.utils.exceptions import ArticulationToolkitError, InvalidInputError
from src.utils.logger import setup_logger

EXIT_OK = 0
EXIT_RUNTIME = 1
EXIT_USAGE = 2

MANIFEST_NAME = "manifest.json"


class _RunRecorder:
    """실행 매니페스트 기록기"""

    def __init__(self, command: str, seed: Optional[int] = None):
        self.command = command
        self.seed = seed
        self.started = time.perf_counter()
        self.started_at = datetime.now(timezone.utc).isoformat()
        self.config: Dict = {}
        self.inputs: Dict[str, str] = {}
        self.outputs: Dict[str, str] = {}
        self.extra: Dict = {}

    def write(self, directory: Path) -> Path:
        manifest = RunManifest(
            command=self.command,
            config=self.config,
            seed=self.seed,
            inputs=self.inputs,
            outputs=self.outputs,
            version=__version__,
            started_at=self.started_at,
            duration_seconds=time.perf_counter() - self.started,
            extra=self.extra,
        )
        path = Path(directory) / MANIFEST_NAME
        write_json(manifest, path)
        logger.debug(f"매니페스트 저장: {path}")
        return path


def _require_file(path: str) -> Path:
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"input not found: {path}")
    return path


def _optim_config(args) -> OptimConfig:
    overrides = {"seed": args.seed}
    for name in ("iterations", "restarts", "warmup_iterations", "beta", "continue_top"):
        value = getattr(args, name, None)
        if value is not None:
            overrides[name] = value
    if getattr(args, "edge_gradients", True) is False:
        overrides["edge_gradients"] = False
    if getattr(args, "supervised_frames", None):
        overrides["supervised_frames"] = args.supervised_frames
    return OptimConfig(**overrides)


def cmd_segment(args) -> int:
    """메시 파트 분할"""
    recorder = _RunRecorder("segment")
    mesh = load_mesh(_require_file(args.mesh))
    camera = load_camera(_require_file(args.camera))
    mask = load_image(_require_file(args.mask))

    if args.features:
        features = load_features(_require_file(args.features), mesh.face_count)
        feature_source = "file"
        recorder.inputs["features"] = args.features
    else:
        features = geometric_fallback_features(mesh, args.feature_scale)
        feature_source = "geometric_fallback"
        logger.info("특징 파일 없음: 기하 기반 대체 특징 사용")

    result = segment_movable(mesh, features, camera, mask, args.max_iters)

    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    save_mesh(result.movable, out_dir / "movable.obj")
    save_mesh(result.base, out_dir / "base.obj")
    labels = pd.DataFrame({"face_id": range(len(result.labels)), "label": result.labels.names()})
    labels.to_csv(out_dir / "labels.csv", index=False)
    recorder.outputs.update(
        movable=str(out_dir / "movable.obj"),
        base=str(out_dir / "base.obj"),
        labels=str(out_dir / "labels.csv"),
    )

    if args.image:
        image = load_image(_require_file(args.image))
        amodal = prepare_amodal_inputs_for_parts(image, mask, result.movable, result.base, camera)
        for part, inputs in (("movable", amodal.movable), ("base", amodal.base)):
            save_image(inputs.visible, out_dir / f"visible_{part}.ppm")
            save_image(inputs.inpaint_mask, out_dir / f"inpaint_{part}.pgm")
            recorder.outputs[f"visible_{part}"] = str(out_dir / f"visible_{part}.ppm")
            recorder.outputs[f"inpaint_{part}"] = str(out_dir / f"inpaint_{part}.pgm")
        recorder.inputs["image"] = args.image

    recorder.inputs.update(mesh=args.mesh, camera=args.camera, mask=args.mask)
    recorder.config = {"max_iters": args.max_iters, "feature_scale": args.feature_scale}
    recorder.extra = {
        "feature_source": feature_source,
        "movable_faces": result.labels.movable_count,
        "base_faces": result.labels.base_count,
        "visible_faces": int(len(result.visible)),
        "kmeans_iterations": result.iterations,
    }
    recorder.write(out_dir)
    logger.info(f"분할 결과 저장: {out_dir}")
    return EXIT_OK


def cmd_synth(args) -> int:
    """합성 장면 번들 생성"""
    recorder = _RunRecorder("synth", args.seed)
    config = SynthConfig(
        resolution=args.resolution,
        frames=args.frames,
        schedule=args.schedule,
        beta=args.beta,
        background=get_settings().DEFAULT_BACKGROUND,
    )
    joint_type = None if args.type == "mixed" else JointType(args.type)

    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    counts = {"prismatic": 0, "revolute": 0}
    for index in range(args.scenes):
        gt = generate_scene(args.seed, index, joint_type, config=config)
        frames = render_sequence(gt, config.background, config.beta)
        bundle = save_scene_bundle(gt, out_dir / f"scene_{index:03d}", frames)
        counts[gt.joint.joint_type.value] += 1
        recorder.outputs[f"scene_{index:03d}"] = str(bundle)
        logger.info(f"장면 {index:03d} 생성: {gt.template} ({gt.joint.joint_type.value})")

    recorder.config = {"scenes": args.scenes, "type": args.type, **config.model_dump(mode="json")}
    recorder.extra = {"type_counts": counts}
    recorder.write(out_dir)
    return EXIT_OK


def cmd_estimate(args) -> int:
    """관절 추정"""
    recorder = _RunRecorder("estimate", args.seed)
    base = load_mesh(_require_file(args.base))
    movable = load_mesh(_require_file(args.movable))
    camera = load_camera(_require_file(args.camera))
    frames = load_frames(_require_file(args.frames_dir))
    config = _optim_config(args)
    background = get_settings().DEFAULT_BACKGROUND

    if args.type == "auto":
        result, chosen = select_joint_type(base, movable, frames, camera, config, background)
    else:
        chosen = JointType(args.type)
        result = estimate_joint(base, movable, frames, camera, chosen, config, background)

    out_path = Path(args.out)
    outputs = save_result(result, out_path)
    recorder.inputs.update(base=args.base, movable=args.movable, camera=args.camera, frames_dir=args.frames_dir)
    recorder.outputs.update(outputs)
    recorder.config = {"type": args.type, **config.model_dump(mode="json")}
    recorder.extra = {
        "chosen_type": chosen.value,
        "final_loss": result.final_loss,
        "restart_index": result.restart_index,
    }
    recorder.write(out_path.parent)
    print(f"{chosen.value} final_loss={result.final_loss:.6g}")
    return EXIT_OK


def cmd_render(args) -> int:
    """추정 관절로 프레임 렌더링"""
    recorder = _RunRecorder("render")
    base = load_mesh(_require_file(args.base))
    movable = load_mesh(_require_file(args.movable))
    camera = load_camera(_require_file(args.camera))
    joint, thetas = load_joint(_require_file(args.joint))
    if len(thetas) == 0:
        raise InvalidInputError(f"관절 파일에 θ가 없습니다: {args.joint}")

    n_frames = args.frames if args.frames is not None else len(thetas)
    thetas = resample_thetas(thetas, n_frames)
    frames = render_articulation(
        base, movable, camera, joint, thetas, background=get_settings().DEFAULT_BACKGROUND, beta=args.beta
    )

    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    for k, frame in enumerate(frames, start=1):
        save_image(frame, out_dir / FRAME_PATTERN.format(k))
    recorder.inputs.update(base=args.base, movable=args.movable, camera=args.camera, joint=args.joint)
    recorder.outputs["frames"] = str(out_dir)
    recorder.config = {"frames": n_frames, "beta": args.beta}
    recorder.write(out_dir)
    logger.info(f"프레임 {len(frames)}개 저장: {out_dir}")
    return EXIT_OK


def cmd_eval(args) -> int:
    """합성 벤치마크 평가"""
    recorder = _RunRecorder("eval", args.seed)
    scene_dir = _require_file(args.scene_dir)
    config = _optim_config(args)
    report_path = Path(args.report)

    reports = run_benchmark(scene_dir, config, report_path, gt_seeded=args.gt_seeded)
    summary = summarize_reports(reports)
    for key, value in summary.items():
        print(f"{key}: {value:.6g}" if isinstance(value, float) else f"{key}: {value}")

    recorder.inputs["scene_dir"] = str(scene_dir)
    recorder.outputs["report"] = str(report_path)
    recorder.config = {"gt_seeded": args.gt_seeded, **config.model_dump(mode="json")}
    recorder.extra = {"summary": summary}
    recorder.write(report_path.parent)
    return EXIT_OK


def _positive_int(value: str) -> int:
    number = int(value)
    if number < 1:
        raise argparse.ArgumentTypeError(f"1 이상이어야 합니다: {value}")
    return number


def _add_optim_flags(parser: argparse.ArgumentParser):
    parser.add_argument("--iterations", type=_positive_int, help="후보당 총 반복 횟수 (기본: 600)")
    parser.add_argument("--restarts", type=_positive_int, help="무작위 재시작 횟수 (기본: 16)")
    parser.add_argument("--warmup", dest="warmup_iterations", type=int, help="예열 반복 횟수 (기본: 60)")
    parser.add_argument("--continue-top", type=_positive_int, help="예열 후 계속할 후보 수 (기본: 2)")
    parser.add_argument("--beta", type=float, help="소프트 블렌딩 선명도 (기본: 500)")
    parser.add_argument(
        "--no-edge-gradients", dest="edge_gradients", action="store_false",
        help="실루엣 경계 기울기 끄기 (커버리지 고정 기울기만 사용)",
    )
    parser.add_argument(
        "--supervised-frames", type=int, nargs="+", help="감독 프레임 인덱스 (0부터, 기본: 전체)"
    )


def build_parser() -> argparse.ArgumentParser:
    """명령줄 파서 생성"""
    settings = get_settings()
    parser = argparse.ArgumentParser(prog="articulate", description="관절 물체 추정 툴킷")
    parser.add_argument("--log-level", default=None, help=f"로그 레벨 (기본: {settings.LOG_LEVEL})")
    parser.add_argument("--no-log-file", action="store_true", help="파일 로깅 비활성화")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    seg = sub.add_parser("segment", help="마스크 기반 파트 분할")
    seg.add_argument("--mesh", required=True, help="전체 메시 OBJ")
    seg.add_argument("--features", help="면 특징 바이너리 (생략 시 기하 기반 대체 특징)")
    seg.add_argument("--camera", required=True, help="camera.json")
    seg.add_argument("--mask", required=True, help="움직이는 파트 마스크 PGM")
    seg.add_argument("--image", help="입력 이미지 PPM (지정 시 아모달 입력도 저장)")
    seg.add_argument("--out-dir", required=True, help="출력 디렉토리")
    seg.add_argument("--max-iters", type=_positive_int, default=100, help="k-means 최대 반복 (기본: 100)")
    seg.add_argument("--feature-scale", type=float, default=1.0, help="대체 특징 위치 가중치 (기본: 1.0)")
    seg.set_defaults(handler=cmd_segment)

    syn = sub.add_parser("synth", help="합성 장면 번들 생성")
    syn.add_argument("--scenes", type=_positive_int, required=True, help="장면 수")
    syn.add_argument("--type", choices=["prismatic", "revolute", "mixed"], default="mixed", help="관절 종류")
    syn.add_argument("--seed", type=int, default=settings.DEFAULT_SEED, help="난수 시드")
    syn.add_argument(
        "--out-dir", default=settings.DATA_SCENES_DIR, help=f"출력 디렉토리 (기본: {settings.DATA_SCENES_DIR})"
    )
    syn.add_argument("--resolution", type=_positive_int, default=settings.DEFAULT_RESOLUTION, help="해상도")
    syn.add_argument("--frames", type=_positive_int, default=settings.DEFAULT_FRAMES, help="프레임 수")
    syn.add_argument("--schedule", choices=["smoothstep", "linear"], default="smoothstep", help="θ 스케줄")
    syn.add_argument("--beta", type=float, default=settings.DEFAULT_BETA, help="소프트 블렌딩 선명도")
    syn.set_defaults(handler=cmd_synth)

    est = sub.add_parser("estimate", help="관절 추정")
    est.add_argument("--base", required=True, help="베이스 파트 OBJ")
    est.add_argument("--movable", required=True, help="움직이는 파트 OBJ")
    est.add_argument("--frames-dir", required=True, help="frame_XXX.ppm 디렉토리")
    est.add_argument("--camera", required=True, help="camera.json")
    est.add_argument("--type", choices=["auto", "prismatic", "revolute"], default="auto", help="관절 종류")
    est.add_argument("--seed", type=int, default=settings.DEFAULT_SEED, help="난수 시드")
    est.add_argument("--out", required=True, help="관절 JSON 출력 경로")
    _add_optim_flags(est)
    est.set_defaults(handler=cmd_estimate)

    ren = sub.add_parser("render", help="관절 JSON으로 프레임 렌더링")
    ren.add_argument("--base", required=True, help="베이스 파트 OBJ")
    ren.add_argument("--movable", required=True, help="움직이는 파트 OBJ")
    ren.add_argument("--joint", required=True, help="관절 JSON")
    ren.add_argument("--camera", required=True, help="camera.json")
    ren.add_argument("--frames", type=_positive_int, help="프레임 수 (기본: 저장된 θ 개수)")
    ren.add_argument("--out-dir", required=True, help="출력 디렉토리")
    ren.add_argument("--beta", type=float, default=settings.DEFAULT_BETA, help="소프트 블렌딩 선명도")
    ren.set_defaults(handler=cmd_render)

    evl = sub.add_parser("eval", help="합성 벤치마크 평가")
    evl.add_argument(
        "--scene-dir", default=settings.DATA_SCENES_DIR, help=f"장면 번들 상위 디렉토리 (기본: {settings.DATA_SCENES_DIR})"
    )
    evl.add_argument("--seed", type=int, default=settings.DEFAULT_SEED, help="난수 시드")
    evl.add_argument(
        "--report",
        default=settings.DATA_RESULTS_DIR / "report.csv",
        help=f"CSV 보고서 경로 (기본: {settings.DATA_RESULTS_DIR / 'report.csv'})",
    )
    evl.add_argument("--gt-seeded", action="store_true", help="정답 관절을 추가 재시작으로 사용")
    _add_optim_flags(evl)
    evl.set_defaults(handler=cmd_eval)

    return parser


def main(argv: Optional[List[str]] = None) -> int:
    """
    명령 실행

    Args:
        argv: 명령줄 인자 (기본: sys.argv[1:])

    Returns:
        종료 코드
    """
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return EXIT_USAGE if e.code not in (0, None) else EXIT_OK

    setup_logger(args.log_level, file_logging=not args.no_log_file)
    handler: Callable = args.handler
    try:
        return handler(args)
    except KeyboardInterrupt:
        logger.info("작업이 취소되었습니다.")
        return EXIT_RUNTIME
    except FileNotFoundError as e:
        message = str(e) if "input not found" in str(e) else f"input not found: {e.filename}"
        logger.error(message)
        return EXIT_USAGE
    except (InvalidInputError, ValidationError) as e:
        logger.error(f"입력 검증 오류: {e}")
        return EXIT_USAGE
    except (ArticulationToolkitError, OSError) as e:
        logger.error(f"실행 오류: {e}")
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
