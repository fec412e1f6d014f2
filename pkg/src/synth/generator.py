"""
정답 관절 시퀀스 생성
관절 샘플링, 시퀀스 렌더링, 장면 번들 입출력
"""

from dataclasses import dataclass
from pathlib import Path
from typing import Callable, List, Optional, Sequence, Union

import numpy as np
from loguru import logger

from src.articulation.joint import JointSpec, JointType, deform_mesh, joint_from_file, joint_transform
from src.config.loader import SceneFile, SynthConfig, read_model, write_json
from src.geometry.camera import Camera, load_camera, save_camera
from src.geometry.image import Image, load_image, save_image
from src.geometry.mesh import TriMesh, bbox_bounds, load_mesh, save_mesh
from src.render.blend import render_pred
from src.render.rasterizer import rasterize
from src.synth.scenes import TEMPLATES_BY_TYPE, get_template
from src.utils.exceptions import InvalidInputError
from src.utils.rng import stream

FRAME_PATTERN = "frame_{:03d}.ppm"

AxisFilter = Callable[[np.ndarray, np.ndarray, np.ndarray, np.ndarray], bool]


@dataclass(frozen=True, eq=False)
class GroundTruthArticulation:
    """정답 관절, θ 시퀀스, 파트 메시, 카메라"""

    joint: JointSpec
    thetas: np.ndarray
    base: TriMesh
    movable: TriMesh
    camera: Camera
    template: Optional[str] = None
    seed: Optional[int] = None

    def __post_init__(self):
        thetas = np.asarray(self.thetas, dtype=np.float64).ravel()
        if len(thetas) < 2 or thetas[0] != 0.0:
            raise InvalidInputError("정답 θ는 2개 이상이고 첫 값이 0이어야 합니다")
        thetas.setflags(write=False)
        object.__setattr__(self, "thetas", thetas)

    @property
    def n_frames(self) -> int:
        return len(self.thetas)


@dataclass(frozen=True, eq=False)
class SceneBundle:
    """디스크의 장면 번들"""

    gt: GroundTruthArticulation
    frames: Optional[List[Image]]
    path: Path


def _bbox_edges(low: np.ndarray, high: np.ndarray) -> list[tuple[np.ndarray, np.ndarray]]:
    # 12개 모서리 (시작점, 단위 방향)
    edges = []
    corners = [low, high]
    for axis in range(3):
        others = [a for a in range(3) if a != axis]
        for i in (0, 1):
            for j in (0, 1):
                point = low.copy()
                point[others[0]] = corners[i][others[0]]
                point[others[1]] = corners[j][others[1]]
                direction = np.zeros(3)
                direction[axis] = 1.0
                edges.append((point, direction))
    return edges


def _bbox_normals(low: np.ndarray, high: np.ndarray) -> list[tuple[np.ndarray, np.ndarray]]:
    # 6개 면 (면 중심, 바깥 법선)
    center = 0.5 * (low + high)
    faces = []
    for axis in range(3):
        for sign, bound in ((-1.0, low), (1.0, high)):
            point = center.copy()
            point[axis] = bound[axis]
            normal = np.zeros(3)
            normal[axis] = sign
            faces.append((point, normal))
    return faces


def motion_schedule(theta_end: float, n_frames: int, schedule: str = "smoothstep") -> np.ndarray:
    """
    0에서 theta_end까지의 θ 보간

    Args:
        theta_end: 마지막 프레임 θ
        n_frames: 프레임 수
        schedule: "smoothstep" (3s²−2s³) 또는 "linear"

    Returns:
        (N,) θ
    """
    if n_frames < 2:
        raise InvalidInputError(f"프레임 수는 2 이상이어야 합니다: {n_frames}")
    s = np.arange(n_frames, dtype=np.float64) / (n_frames - 1)
    if schedule == "smoothstep":
        weights = 3.0 * s ** 2 - 2.0 * s ** 3
    elif schedule == "linear":
        weights = s
    else:
        raise InvalidInputError(f"알 수 없는 스케줄: {schedule}")
    thetas = theta_end * weights
    thetas[0] = 0.0
    thetas[-1] = theta_end
    return thetas


def sample_articulation(
    rng: np.random.Generator,
    joint_type: Union[JointType, str],
    meshes: tuple[TriMesh, TriMesh],
    camera: Camera,
    n_frames: int,
    config: Optional[SynthConfig] = None,
    axis_filter: Optional[AxisFilter] = None,
) -> GroundTruthArticulation:
    """
    정답 관절 샘플링

    회전: 움직이는 파트 바운딩 박스 모서리 축, |θ_end| ∈ [min, max] 도
    병진: 바운딩 박스 면 법선 축, |θ_end| ∈ [min, max] × 축 방향 폭
    θ 부호는 움직이는 파트가 베이스 중심에서 멀어지는 쪽으로 정한다.

    Args:
        rng: 난수 생성기
        joint_type: 관절 종류
        meshes: (베이스, 움직이는 파트)
        camera: 카메라
        n_frames: 프레임 수 N (2 이상)
        config: 합성 설정
        axis_filter: 후보 축 필터 (템플릿)

    Returns:
        정답 관절 시퀀스
    """
    config = config or SynthConfig()
    joint_type = JointType(joint_type)
    base, movable = meshes
    low, high = bbox_bounds(movable)

    if joint_type is JointType.REVOLUTE:
        candidates = _bbox_edges(low, high)
    else:
        candidates = _bbox_normals(low, high)
    if axis_filter is not None:
        candidates = [(p, d) for p, d in candidates if axis_filter(p, d, low, high)]
    if not candidates:
        raise InvalidInputError("허용되는 관절 축 후보가 없습니다")
    axis_pos, axis_dir = candidates[int(rng.integers(len(candidates)))]

    if joint_type is JointType.REVOLUTE:
        magnitude = np.radians(rng.uniform(config.min_revolute_deg, config.max_revolute_deg))
    else:
        extent = float(np.dot(high - low, np.abs(axis_dir)))
        magnitude = extent * rng.uniform(config.min_prismatic_fraction, config.max_prismatic_fraction)

    joint = JointSpec(joint_type, axis_pos, axis_dir)
    theta_end = _outward_sign(joint, magnitude, base, movable) * magnitude
    thetas = motion_schedule(theta_end, n_frames, config.schedule)
    return GroundTruthArticulation(joint, thetas, base, movable, camera)


def _outward_sign(joint: JointSpec, magnitude: float, base: TriMesh, movable: TriMesh) -> float:
    anchor = base.vertices.mean(axis=0) if base.vertex_count else np.zeros(3)
    center = movable.vertices.mean(axis=0)
    distances = []
    for sign in (1.0, -1.0):
        rotation, translation = joint_transform(joint, sign * magnitude)
        distances.append(np.linalg.norm(rotation @ center + translation - anchor))
    return 1.0 if distances[0] >= distances[1] else -1.0


def render_articulation(
    base: TriMesh,
    movable: TriMesh,
    camera: Camera,
    joint: JointSpec,
    thetas: Sequence[float],
    background: Sequence[float] = (1.0, 1.0, 1.0),
    beta: float = 500.0,
) -> List[Image]:
    """
    관절과 θ 시퀀스로 프레임 렌더링 (소프트 블렌딩 합성)

    Args:
        base: 베이스 파트
        movable: 움직이는 파트 (정지 상태)
        camera: 카메라
        joint: 관절
        thetas: 프레임별 θ
        background: 배경색
        beta: 선명도

    Returns:
        θ 개수만큼의 프레임
    """
    base_target = rasterize(base, camera, background)
    frames = []
    for theta in thetas:
        rotation, translation = joint_transform(joint, float(theta))
        moved = deform_mesh(movable, rotation, translation)
        frames.append(render_pred(base, moved, camera, beta, background, base_target).image)
    return frames


def render_sequence(
    gt: GroundTruthArticulation,
    background: Sequence[float] = (1.0, 1.0, 1.0),
    beta: float = 500.0,
) -> List[Image]:
    """정답 관절 시퀀스의 N개 프레임"""
    return render_articulation(gt.base, gt.movable, gt.camera, gt.joint, gt.thetas, background, beta)


def generate_scene(
    seed: int,
    index: int,
    joint_type: Union[JointType, str, None] = None,
    template: Optional[str] = None,
    config: Optional[SynthConfig] = None,
) -> GroundTruthArticulation:
    """
    템플릿 기반 장면 하나 생성

    Args:
        seed: 기본 시드
        index: 장면 번호 (스트림 이름)
        joint_type: 관절 종류 (None이면 균등 선택)
        template: 템플릿 이름 (None이면 관절 종류에 맞게 선택)
        config: 합성 설정

    Returns:
        정답 관절 시퀀스
    """
    config = config or SynthConfig()
    rng = stream(seed, "scene", index)
    if template is None:
        if joint_type is None:
            joint_type = (JointType.PRISMATIC, JointType.REVOLUTE)[int(rng.integers(2))]
        names = TEMPLATES_BY_TYPE[JointType(joint_type)]
        template = names[int(rng.integers(len(names)))]

    scene = get_template(template)
    if joint_type is not None and JointType(joint_type) is not scene.joint_type:
        raise InvalidInputError(f"템플릿 {template}은 {scene.joint_type.value} 관절입니다")
    parts = scene.build(rng, config.resolution)
    gt = sample_articulation(
        rng, scene.joint_type, (parts.base, parts.movable), parts.camera,
        config.frames, config, scene.accepts_axis,
    )
    return GroundTruthArticulation(gt.joint, gt.thetas, gt.base, gt.movable, gt.camera, template, seed)


def save_scene_bundle(
    gt: GroundTruthArticulation,
    out_dir: Union[str, Path],
    frames: Optional[Sequence[Image]] = None,
) -> Path:
    """
    장면 번들 저장 (base.obj, movable.obj, camera.json, gt.json, frames/)

    Args:
        gt: 정답 관절 시퀀스
        out_dir: 번들 디렉토리
        frames: 렌더링된 프레임 (없으면 생략)

    Returns:
        번들 경로
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    save_mesh(gt.base, out_dir / "base.obj")
    save_mesh(gt.movable, out_dir / "movable.obj")
    save_camera(gt.camera, out_dir / "camera.json")
    write_json(
        SceneFile(
            type=gt.joint.joint_type.value,
            axis_pos=tuple(float(v) for v in gt.joint.axis_pos),
            axis_dir=tuple(float(v) for v in gt.joint.axis_dir),
            thetas=[float(v) for v in gt.thetas],
            template=gt.template,
            seed=gt.seed,
        ),
        out_dir / "gt.json",
    )
    if frames is not None:
        frame_dir = out_dir / "frames"
        frame_dir.mkdir(exist_ok=True)
        for k, frame in enumerate(frames, start=1):
            save_image(frame, frame_dir / FRAME_PATTERN.format(k))
    logger.debug(f"장면 번들 저장: {out_dir}")
    return out_dir


def load_frames(frame_dir: Union[str, Path]) -> List[Image]:
    """frame_XXX.ppm 프레임을 번호 순으로 로드"""
    frame_dir = Path(frame_dir)
    if not frame_dir.is_dir():
        raise FileNotFoundError(f"input not found: {frame_dir}")
    paths = sorted(frame_dir.glob("frame_*.ppm"))
    return [load_image(p) for p in paths]


def load_scene_bundle(bundle_dir: Union[str, Path]) -> SceneBundle:
    """
    장면 번들 로드

    Args:
        bundle_dir: 번들 디렉토리

    Returns:
        장면 번들 (frames/가 없으면 frames=None)
    """
    bundle_dir = Path(bundle_dir)
    spec = read_model(bundle_dir / "gt.json", SceneFile)
    joint, thetas = joint_from_file(spec)
    gt = GroundTruthArticulation(
        joint=joint,
        thetas=thetas,
        base=load_mesh(bundle_dir / "base.obj"),
        movable=load_mesh(bundle_dir / "movable.obj"),
        camera=load_camera(bundle_dir / "camera.json"),
        template=spec.template,
        seed=spec.seed,
    )
    frame_dir = bundle_dir / "frames"
    frames = load_frames(frame_dir) if frame_dir.is_dir() else None
    return SceneBundle(gt, frames, bundle_dir)
