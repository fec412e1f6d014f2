"""
관절 추정 모듈
소프트 렌더러를 통한 경사 하강으로 관절 축과 모션 프로파일을 추정
"""

from dataclasses import dataclass, replace
from pathlib import Path
from typing import List, Optional, Sequence, Union

import numpy as np
import pandas as pd
from loguru import logger
from tqdm import tqdm

from src.articulation.joint import (
    JointSpec,
    JointType,
    MotionProfile,
    canonicalize,
    deform_mesh,
    joint_pose_grads,
    joint_transform,
    save_joint,
)
from src.articulation.motion import MotionMLP
from src.config.loader import OptimConfig, write_json
from src.geometry.camera import Camera
from src.geometry.image import Image
from src.geometry.mesh import TriMesh, bbox_bounds
from src.optimize.adam import AdamState, adam_step
from src.render.backward import RenderContext, loss_and_vertex_grads
from src.render.rasterizer import RenderTarget
from src.utils.exceptions import InvalidInputError, OptimizationError
from src.utils.rng import stream

# 파라미터 벡터 배치: [axis_pos(3), axis_dir(3), MLP(P)]
POS_SLICE = slice(0, 3)
DIR_SLICE = slice(3, 6)
MLP_OFFSET = 6

# 회전 관절 θ 진폭 한계
REVOLUTE_BOUND = np.pi

# 재시작 초기 진폭: 병진은 바운딩 박스 대각선 비율, 회전은 라디안
INIT_PRISMATIC_FRACTION = (0.1, 0.5)
INIT_REVOLUTE_RANGE = (np.pi / 8, 3 * np.pi / 8)

# 손실이 오르면 최적점으로 되돌리고 보폭을 줄인다
STEP_BACKOFF = 0.5
STEP_GROWTH = 1.1

# 웜 스타트 MLP 회귀 설정
WARM_START_ITERATIONS = 3000
WARM_START_LR = 1e-2


@dataclass(frozen=True, eq=False)
class InitialGuess:
    """재시작 초기값"""

    joint: JointSpec
    mlp: MotionMLP


@dataclass(frozen=True, eq=False)
class OptimResult:
    """
    최적화 결과

    profile.thetas[t] == motion_at(mlp, t + 1, N), final_loss == loss_history[-1]
    """

    joint: JointSpec
    profile: MotionProfile
    mlp: MotionMLP
    loss_history: np.ndarray
    final_loss: float
    restart_index: int

    @property
    def joint_type(self) -> JointType:
        return self.joint.joint_type

    def canonical(self) -> "OptimResult":
        """보고용 부호 게이지 고정 (축 뒤집힘 시 MLP 출력 부호도 함께 뒤집음)"""
        joint, _ = canonicalize(self.joint, self.profile.thetas)
        if joint is self.joint:
            return self
        mlp = self.mlp.negated()
        return replace(self, joint=joint, mlp=mlp, profile=MotionProfile(mlp.profile(len(self.profile))))


@dataclass(frozen=True, eq=False)
class SequenceProblem:
    """하나의 관절 종류에 대한 고정 입력"""

    base: TriMesh
    movable: TriMesh
    frames: tuple
    context: RenderContext
    base_target: RenderTarget
    joint_type: JointType
    supervised: tuple
    edge_gradients: bool = False

    @property
    def n_frames(self) -> int:
        return len(self.frames)


def init_restart(
    rng: np.random.Generator,
    joint_type: Union[JointType, str],
    movable_bbox: tuple[np.ndarray, np.ndarray],
    amplitude: Optional[float] = None,
) -> InitialGuess:
    """
    재시작 초기값 샘플링

    axis_dir: 단위 구 균등, axis_pos: 회전은 바운딩 박스 내 균등 / 병진은 박스 중심.
    MLP는 마지막 프레임 θ가 amplitude인 램프로 시작한다. amplitude가 없으면
    병진은 대각선의 U(0.1, 0.5)배, 회전은 U(π/8, 3π/8)에서 뽑는다.

    Args:
        rng: 시드 고정 난수 생성기
        joint_type: 관절 종류
        movable_bbox: 움직이는 파트 바운딩 박스 (최소, 최대)
        amplitude: 초기 진폭 (0이면 정지 상태)

    Returns:
        초기 관절과 MLP
    """
    joint_type = JointType(joint_type)
    low, high = (np.asarray(v, dtype=np.float64) for v in movable_bbox)

    direction = rng.standard_normal(3)
    while np.linalg.norm(direction) < 1e-9:
        direction = rng.standard_normal(3)
    direction /= np.linalg.norm(direction)

    if joint_type is JointType.REVOLUTE:
        position = rng.uniform(low, high)
        bound = REVOLUTE_BOUND
        if amplitude is None:
            amplitude = rng.uniform(*INIT_REVOLUTE_RANGE)
    else:
        position = 0.5 * (low + high)
        bound = None
        if amplitude is None:
            amplitude = rng.uniform(*INIT_PRISMATIC_FRACTION) * float(np.linalg.norm(high - low))

    joint = JointSpec(joint_type, position, direction)
    return InitialGuess(joint, MotionMLP.ramp(rng, float(amplitude), output_bound=bound))


def pack_params(joint: JointSpec, mlp: MotionMLP) -> np.ndarray:
    return np.concatenate([joint.axis_pos, joint.axis_dir, mlp.flat_params()])


def unpack_params(params: np.ndarray, joint_type: JointType, template: MotionMLP) -> tuple[JointSpec, MotionMLP]:
    joint = JointSpec(joint_type, params[POS_SLICE], params[DIR_SLICE])
    return joint, template.with_flat_params(params[MLP_OFFSET:])


def sequence_loss_and_grads(
    problem: SequenceProblem,
    joint: JointSpec,
    mlp: MotionMLP,
) -> tuple[float, np.ndarray]:
    """
    감독 프레임 합산 손실과 파라미터 기울기

    렌더러 역전파 → (R, t) 기울기 → joint_pose_grads → MLP 야코비안 순으로 연결한다.

    Args:
        problem: 고정 입력
        joint: 현재 관절
        mlp: 현재 모션 MLP

    Returns:
        (손실 합, [axis_pos, axis_dir, MLP] 순서의 기울기)
    """
    thetas, theta_jac = mlp.profile_and_jacobian(problem.n_frames)
    rest = problem.movable.vertices
    grads = np.zeros(MLP_OFFSET + mlp.parameter_count)
    total = 0.0

    for k in problem.supervised:
        theta = float(thetas[k])
        rotation, translation = joint_transform(joint, theta)
        deformed = deform_mesh(problem.movable, rotation, translation)
        target = problem.context.rasterize(deformed)
        result = loss_and_vertex_grads(
            deformed, target, problem.base_target, problem.frames[k], problem.context, problem.edge_gradients
        )
        total += result.loss

        vertex_grads = result.vertex_grads
        if not vertex_grads.any():
            continue
        # v' = R·v + t
        d_rotation = vertex_grads.T @ rest
        d_translation = vertex_grads.sum(axis=0)

        jac = joint_pose_grads(joint, theta)
        grads[POS_SLICE] += np.einsum("ij,ijk->k", d_rotation, jac.dR_dpos) + d_translation @ jac.dt_dpos
        grads[DIR_SLICE] += np.einsum("ij,ijk->k", d_rotation, jac.dR_ddir) + d_translation @ jac.dt_ddir
        d_theta = float(np.sum(d_rotation * jac.dR_dtheta) + d_translation @ jac.dt_dtheta)
        grads[MLP_OFFSET:] += d_theta * theta_jac[k]

    return total, grads


class _Candidate:
    """
    재시작 하나의 최적화 상태

    최저 손실 파라미터를 유지한다. 손실이 오르면 그 지점으로 되돌려 1차 모멘트를 비우고
    보폭을 줄인다. 기록은 평가 시점까지의 최저 손실이다.
    """

    def __init__(self, index: int, guess: InitialGuess, problem: SequenceProblem, config: OptimConfig):
        self.index = index
        self.problem = problem
        self.config = config
        self.template = guess.mlp
        self.params = pack_params(guess.joint, guess.mlp)
        self.state = AdamState.zeros(len(self.params))
        self.history: List[float] = []
        self.pending: Optional[np.ndarray] = None
        self.step_scale = 1.0
        self.best_params = self.params.copy()
        self.best_loss = np.inf
        self.best_grads: Optional[np.ndarray] = None

        lr = np.full(len(self.params), config.lr_mlp)
        lr[POS_SLICE] = config.lr_axis_pos
        lr[DIR_SLICE] = config.lr_axis_dir
        self.lr = lr

    @property
    def loss(self) -> float:
        return self.best_loss

    def current(self) -> tuple[JointSpec, MotionMLP]:
        return unpack_params(self.params, self.problem.joint_type, self.template)

    def run(self, evaluations: int):
        """평가 횟수만큼 진행 (직전 평가의 기울기로 먼저 한 스텝 이동)"""
        for _ in range(evaluations):
            if self.pending is not None:
                self.params, self.state = adam_step(
                    self.params,
                    self.pending,
                    self.state,
                    self.step_scale * self.lr,
                    self.config.adam_betas,
                    self.config.adam_eps,
                    unit_slice=DIR_SLICE,
                )
            joint, mlp = self.current()
            loss, grads = sequence_loss_and_grads(self.problem, joint, mlp)
            if not np.isfinite(loss):
                raise OptimizationError(f"재시작 {self.index}: 손실이 유한하지 않습니다")

            if loss < self.best_loss:
                self.best_loss, self.best_params, self.best_grads = loss, self.params.copy(), grads
                self.step_scale = min(1.0, self.step_scale * STEP_GROWTH)
                self.pending = grads
            elif loss > self.best_loss:
                self.params = self.best_params.copy()
                self.state = AdamState(np.zeros_like(self.state.m), self.state.v, self.state.step)
                self.step_scale *= STEP_BACKOFF
                self.pending = self.best_grads
            else:
                self.pending = grads
            self.history.append(self.best_loss)

    def result(self) -> OptimResult:
        joint, mlp = unpack_params(self.best_params, self.problem.joint_type, self.template)
        history = np.asarray(self.history)
        return OptimResult(
            joint=joint,
            profile=MotionProfile(mlp.profile(self.problem.n_frames)),
            mlp=mlp,
            loss_history=history,
            final_loss=float(history[-1]),
            restart_index=self.index,
        )


def _build_problem(
    base: TriMesh,
    movable: TriMesh,
    frames: Sequence[Image],
    camera: Camera,
    joint_type: JointType,
    config: OptimConfig,
    background: Sequence[float],
) -> SequenceProblem:
    if len(frames) == 0:
        raise OptimizationError("프레임 목록이 비어 있습니다")
    if len(frames) < 2:
        raise InvalidInputError(f"프레임은 2개 이상이어야 합니다: {len(frames)}")
    if movable.face_count == 0:
        raise InvalidInputError("움직이는 파트 메시가 비어 있습니다")
    for k, frame in enumerate(frames):
        if frame.resolution != camera.resolution:
            raise InvalidInputError(f"프레임 {k} 해상도 불일치: {frame.resolution} != {camera.resolution}")
        if frame.channels != 3:
            raise InvalidInputError(f"프레임 {k}은 3채널이어야 합니다")

    supervised = tuple(range(len(frames))) if config.supervised_frames is None else tuple(config.supervised_frames)
    if not supervised or min(supervised) < 0 or max(supervised) >= len(frames):
        raise InvalidInputError(f"supervised_frames 범위 오류: {config.supervised_frames} (프레임 {len(frames)}개)")

    context = RenderContext(camera, config.beta, tuple(background))
    return SequenceProblem(
        base=base,
        movable=movable,
        frames=tuple(frames),
        context=context,
        base_target=context.rasterize(base),
        joint_type=joint_type,
        supervised=supervised,
        edge_gradients=config.edge_gradients,
    )


def estimate_joint(
    base: TriMesh,
    movable: TriMesh,
    frames: Sequence[Image],
    camera: Camera,
    joint_type: Union[JointType, str],
    config: Optional[OptimConfig] = None,
    background: Sequence[float] = (1.0, 1.0, 1.0),
    extra_inits: Sequence[InitialGuess] = (),
) -> OptimResult:
    """
    고정된 관절 종류에 대한 다중 시작 추정

    정지 상태 후보(인덱스 0), restarts개의 무작위 초기값(1..restarts), 추가 초기값 순으로
    warmup_iterations만큼 진행한 뒤, 최저 손실이 낮은 continue_top개만 iterations까지 계속한다.

    Args:
        base: 베이스 파트 메시
        movable: 움직이는 파트 메시 (정지 상태)
        frames: 기준 프레임 (첫 프레임 = 정지 상태)
        camera: 카메라
        joint_type: 관절 종류
        config: 최적화 설정
        background: 배경색
        extra_inits: 무작위 재시작 뒤에 추가할 초기값

    Returns:
        최저 손실이 가장 낮은 후보의 최저 손실 지점 (동률이면 인덱스가 작은 쪽)
    """
    config = config or OptimConfig()
    joint_type = JointType(joint_type)
    problem = _build_problem(base, movable, frames, camera, joint_type, config, background)
    bbox = bbox_bounds(movable)

    guesses = [init_restart(stream(config.seed, "restart", joint_type.value, "rest"), joint_type, bbox, 0.0)]
    guesses += [init_restart(stream(config.seed, "restart", joint_type.value, i), joint_type, bbox)
                for i in range(config.restarts)]
    for guess in extra_inits:
        if guess.joint.joint_type is not joint_type:
            raise InvalidInputError("추가 초기값의 관절 종류가 다릅니다")
        guesses.append(guess)

    warmup = max(1, config.warmup_iterations)
    logger.info(
        f"관절 추정 시작 [{joint_type.value}]: 재시작 {len(guesses)}개, 예열 {warmup}회, "
        f"총 {config.iterations}회, 프레임 {problem.n_frames}개"
    )

    candidates = [_Candidate(i, guess, problem, config) for i, guess in enumerate(guesses)]
    for candidate in tqdm(candidates, desc=f"warmup[{joint_type.value}]", leave=False):
        candidate.run(warmup)
        logger.debug(f"재시작 {candidate.index}: 예열 손실 {candidate.loss:.6f}")

    ranked = sorted(candidates, key=lambda c: (c.loss, c.index))[: config.continue_top]
    for candidate in tqdm(ranked, desc=f"refine[{joint_type.value}]", leave=False):
        candidate.run(config.iterations - warmup)
        logger.info(f"재시작 {candidate.index}: 최종 손실 {candidate.loss:.6f}")

    best = min(ranked, key=lambda c: (c.loss, c.index))
    result = best.result()
    logger.info(f"관절 추정 완료 [{joint_type.value}]: 재시작 {best.index} 선택, 손실 {result.final_loss:.6f}")
    return result


def select_joint_type(
    base: TriMesh,
    movable: TriMesh,
    frames: Sequence[Image],
    camera: Camera,
    config: Optional[OptimConfig] = None,
    background: Sequence[float] = (1.0, 1.0, 1.0),
    extra_inits: Sequence[InitialGuess] = (),
) -> tuple[OptimResult, JointType]:
    """
    두 관절 종류를 모두 추정하고 최종 손실이 낮은 쪽 선택 (동률이면 병진)

    Args:
        extra_inits: 관절 종류가 맞는 것만 해당 추정에 사용

    Returns:
        (선택된 결과, 관절 종류)
    """
    results = {}
    for joint_type in (JointType.PRISMATIC, JointType.REVOLUTE):
        inits = [g for g in extra_inits if g.joint.joint_type is joint_type]
        results[joint_type] = estimate_joint(base, movable, frames, camera, joint_type, config, background, inits)

    chosen = min(results, key=lambda jt: results[jt].final_loss)
    logger.info(
        f"관절 종류 선택: {chosen.value} (prismatic {results[JointType.PRISMATIC].final_loss:.6f}, "
        f"revolute {results[JointType.REVOLUTE].final_loss:.6f})"
    )
    return results[chosen], chosen


def fit_motion_mlp(
    thetas: Sequence[float],
    rng: np.random.Generator,
    output_bound: Optional[float] = None,
    iterations: int = WARM_START_ITERATIONS,
    lr: float = WARM_START_LR,
) -> MotionMLP:
    """
    주어진 θ 시퀀스에 MLP를 회귀 (평균 제곱 오차, Adam)

    Args:
        thetas: 목표 θ (θ_1 = 0)
        rng: 초기화용 난수 생성기
        output_bound: 출력 진폭 한계
        iterations: 반복 횟수
        lr: 학습률

    Returns:
        회귀된 MLP
    """
    target = np.asarray(thetas, dtype=np.float64)
    mlp = MotionMLP.initialize(rng, output_bound=output_bound)
    params = mlp.flat_params()
    state = AdamState.zeros(len(params))
    for _ in range(iterations):
        values, jac = mlp.profile_and_jacobian(len(target))
        residual = values - target
        grads = 2.0 * residual @ jac / len(target)
        params, state = adam_step(params, grads, state, lr)
        mlp = mlp.with_flat_params(params)
    return mlp


def warm_start(joint: JointSpec, thetas: Sequence[float], seed: int) -> InitialGuess:
    """알려진 관절/θ로부터 추가 초기값 생성"""
    bound = REVOLUTE_BOUND if joint.is_revolute else None
    mlp = fit_motion_mlp(thetas, stream(seed, "warm_start", joint.joint_type.value), bound)
    return InitialGuess(joint, mlp)


def save_result(result: OptimResult, out_path: Union[str, Path]) -> dict:
    """
    결과 저장: 관절 JSON (정규화), 손실 CSV, MLP 체크포인트

    Args:
        result: 최적화 결과
        out_path: 관절 JSON 경로 (나머지는 같은 이름 접미사로 저장)

    Returns:
        생성된 파일 경로 딕셔너리
    """
    out_path = Path(out_path)
    out_path.parent.mkdir(parents=True, exist_ok=True)
    canonical = result.canonical()

    loss_path = out_path.with_name(f"{out_path.stem}_loss.csv")
    mlp_path = out_path.with_name(f"{out_path.stem}_mlp.json")

    save_joint(canonical.joint, canonical.profile.thetas, out_path)
    history = pd.DataFrame(
        {"iteration": np.arange(len(canonical.loss_history)), "loss": canonical.loss_history}
    )
    history.to_csv(loss_path, index=False, float_format="%.9g")
    write_json(canonical.mlp.to_json(), mlp_path)

    logger.info(f"추정 결과 저장: {out_path}")
    return {"joint": str(out_path), "loss_history": str(loss_path), "mlp": str(mlp_path)}
