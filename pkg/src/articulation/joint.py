"""
관절 모델 모듈
듀얼 쿼터니언 기반 관절 운동학, 해석적 야코비안, 메시 변형
"""

from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import Sequence, Union

import numpy as np

from src.articulation.quaternion import (
    UNIT_TOLERANCE,
    DualQuaternion,
    Quaternion,
    dual_quat_to_rt,
    qconj,
    qmul,
    quat_to_matrix_jacobian,
)
from src.config.loader import JointFile, read_model, write_json
from src.geometry.mesh import TriMesh
from src.utils.exceptions import InvalidInputError, SchemaError


class JointType(str, Enum):
    """관절 종류"""

    PRISMATIC = "prismatic"
    REVOLUTE = "revolute"


@dataclass(frozen=True, eq=False)
class JointSpec:
    """
    관절 사양

    axis_pos: 축 위치 (병진 관절에서는 형식상 유지), axis_dir: 단위 축 방향
    """

    joint_type: JointType
    axis_pos: np.ndarray
    axis_dir: np.ndarray

    def __post_init__(self):
        joint_type = JointType(self.joint_type)
        pos = np.asarray(self.axis_pos, dtype=np.float64).reshape(3)
        direction = np.asarray(self.axis_dir, dtype=np.float64).reshape(3)
        if not np.isfinite(pos).all() or not np.isfinite(direction).all():
            raise InvalidInputError("관절 축 값이 유한하지 않습니다")
        if abs(np.linalg.norm(direction) - 1.0) > UNIT_TOLERANCE:
            raise InvalidInputError(f"axis_dir이 단위 벡터가 아닙니다: |a| = {np.linalg.norm(direction):.12f}")
        pos.setflags(write=False)
        direction.setflags(write=False)
        object.__setattr__(self, "joint_type", joint_type)
        object.__setattr__(self, "axis_pos", pos)
        object.__setattr__(self, "axis_dir", direction)

    @classmethod
    def normalized(
        cls,
        joint_type: Union[JointType, str],
        axis_pos: Sequence[float],
        axis_dir: Sequence[float],
    ) -> "JointSpec":
        """axis_dir을 정규화하여 생성"""
        direction = np.asarray(axis_dir, dtype=np.float64)
        norm = np.linalg.norm(direction)
        if norm < 1e-12:
            raise InvalidInputError("axis_dir은 0벡터일 수 없습니다")
        return cls(JointType(joint_type), np.asarray(axis_pos, dtype=np.float64), direction / norm)

    @property
    def is_revolute(self) -> bool:
        return self.joint_type is JointType.REVOLUTE


@dataclass(frozen=True, eq=False)
class MotionProfile:
    """프레임별 모션 크기 θ_1..θ_N (회전: 라디안, 병진: 물체 단위)"""

    thetas: np.ndarray

    def __post_init__(self):
        thetas = np.asarray(self.thetas, dtype=np.float64).ravel()
        if len(thetas) < 2:
            raise InvalidInputError(f"모션 프로파일은 2프레임 이상이어야 합니다: {len(thetas)}")
        if thetas[0] != 0.0:
            raise InvalidInputError(f"첫 프레임 θ는 0이어야 합니다: {thetas[0]}")
        thetas.setflags(write=False)
        object.__setattr__(self, "thetas", thetas)

    def __len__(self) -> int:
        return len(self.thetas)


@dataclass(frozen=True)
class PoseJacobians:
    """
    (R, t)의 관절 파라미터 미분

    마지막 축이 파라미터 성분이다. axis_dir 미분은 단위 구의 접공간으로 사영되어 있다.
    """

    dR_dpos: np.ndarray  # (3, 3, 3)
    dR_ddir: np.ndarray  # (3, 3, 3)
    dR_dtheta: np.ndarray  # (3, 3)
    dt_dpos: np.ndarray  # (3, 3)
    dt_ddir: np.ndarray  # (3, 3)
    dt_dtheta: np.ndarray  # (3,)


def _dual_quat_arrays(joint: JointSpec, theta: float) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    # (q_r, q_d, T)
    direction = joint.axis_dir
    if joint.joint_type is JointType.PRISMATIC:
        q_r = np.array([1.0, 0.0, 0.0, 0.0])
        pure = np.concatenate([[0.0], theta * direction])
        q_d = 0.5 * qmul(pure, q_r)
    else:
        half = 0.5 * theta
        q_r = np.concatenate([[np.cos(half)], np.sin(half) * direction])
        pure = np.concatenate([[0.0], joint.axis_pos])
        q_d = 0.5 * (qmul(pure, q_r) - qmul(q_r, pure))
    return q_r, q_d, pure


def dual_quat_from_joint(joint: JointSpec, theta: float) -> DualQuaternion:
    """
    관절과 모션 크기로 듀얼 쿼터니언 생성

    병진: q_r = (1, 0), T = (0, θ·A_dir), q_d = 0.5·T⊗q_r
    회전: q_r = (cos(θ/2), sin(θ/2)·A_dir), T = (0, A_pos), q_d = 0.5·(T⊗q_r − q_r⊗T)

    Args:
        joint: 관절 사양
        theta: 모션 크기

    Returns:
        듀얼 쿼터니언
    """
    if abs(np.linalg.norm(joint.axis_dir) - 1.0) > UNIT_TOLERANCE:
        raise InvalidInputError("axis_dir이 단위 벡터가 아닙니다")
    q_r, q_d, _ = _dual_quat_arrays(joint, float(theta))
    return DualQuaternion(Quaternion.from_array(q_r), Quaternion.from_array(q_d))


def joint_transform(joint: JointSpec, theta: float) -> tuple[np.ndarray, np.ndarray]:
    """관절과 θ에 해당하는 강체 변환 (R, t)"""
    return dual_quat_to_rt(dual_quat_from_joint(joint, theta))


def tangent_projector(direction: np.ndarray) -> np.ndarray:
    """단위 구 접공간 사영 행렬 I − a·aᵀ"""
    direction = np.asarray(direction, dtype=np.float64)
    return np.eye(3) - np.outer(direction, direction)


def joint_pose_grads(joint: JointSpec, theta: float) -> PoseJacobians:
    """
    dual_quat_to_rt ∘ dual_quat_from_joint 의 해석적 야코비안

    Args:
        joint: 관절 사양
        theta: 모션 크기

    Returns:
        (A_pos, A_dir, θ)에 대한 (R, t) 편미분
    """
    theta = float(theta)
    direction = joint.axis_dir
    q_r, q_d, pure = _dual_quat_arrays(joint, theta)

    # 파라미터 순서: pos(3), dir(3), theta(1) → 열 7개
    dq_r = np.zeros((7, 4))
    d_pure = np.zeros((7, 4))
    if joint.joint_type is JointType.PRISMATIC:
        d_pure[3:6, 1:] = theta * np.eye(3)
        d_pure[6, 1:] = direction
        dq_d = 0.5 * qmul(d_pure, q_r)
    else:
        half = 0.5 * theta
        c, s = np.cos(half), np.sin(half)
        dq_r[3:6, 1:] = s * np.eye(3)
        dq_r[6, 0] = -0.5 * s
        dq_r[6, 1:] = 0.5 * c * direction
        d_pure[0:3, 1:] = np.eye(3)
        dq_d = 0.5 * (
            qmul(d_pure, q_r) + qmul(pure, dq_r) - qmul(dq_r, pure) - qmul(q_r, d_pure)
        )

    # R(q_r)
    rot_jac = quat_to_matrix_jacobian(q_r)
    dR = np.einsum("ijm,km->ijk", rot_jac, dq_r)

    # t = vec(2·q_d ⊗ conj(q_r))
    dt = 2.0 * (qmul(dq_d, qconj(q_r)) + qmul(q_d, qconj(dq_r)))[:, 1:].T

    projector = tangent_projector(direction)
    return PoseJacobians(
        dR_dpos=dR[:, :, 0:3],
        dR_ddir=np.einsum("ijk,kl->ijl", dR[:, :, 3:6], projector),
        dR_dtheta=dR[:, :, 6],
        dt_dpos=dt[:, 0:3],
        dt_ddir=dt[:, 3:6] @ projector,
        dt_dtheta=dt[:, 6],
    )


def rodrigues(axis: Sequence[float], angle: float) -> np.ndarray:
    """
    로드리게스 회전 행렬

    Args:
        axis: 단위 회전축
        angle: 회전각 (라디안)

    Returns:
        (3, 3) 회전 행렬
    """
    axis = np.asarray(axis, dtype=np.float64)
    k = np.array([[0.0, -axis[2], axis[1]], [axis[2], 0.0, -axis[0]], [-axis[1], axis[0], 0.0]])
    return np.eye(3) + np.sin(angle) * k + (1.0 - np.cos(angle)) * (k @ k)


def deform_mesh(mesh: TriMesh, rotation: np.ndarray, translation: np.ndarray) -> TriMesh:
    """
    메시 강체 변형 v ↦ R·v + t (면/색상 유지)

    Args:
        mesh: 대상 메시
        rotation: (3, 3) 회전 행렬
        translation: (3,) 병진 벡터

    Returns:
        변형된 메시
    """
    rotation = np.asarray(rotation, dtype=np.float64)
    translation = np.asarray(translation, dtype=np.float64)
    return mesh.with_vertices(mesh.vertices @ rotation.T + translation)


def canonicalize(joint: JointSpec, thetas: np.ndarray) -> tuple[JointSpec, np.ndarray]:
    """
    보고용 부호 게이지 고정

    axis_dir의 절댓값 최대 성분이 양수가 되도록 뒤집고 θ의 부호를 함께 바꾼다.
    프레임별 강체 변환은 바뀌지 않는다.

    Args:
        joint: 관절 사양
        thetas: 프레임별 모션 크기

    Returns:
        (정규화된 관절, 정규화된 θ)
    """
    thetas = np.asarray(thetas, dtype=np.float64)
    direction = joint.axis_dir
    if direction[int(np.argmax(np.abs(direction)))] >= 0:
        return joint, thetas.copy()
    flipped = JointSpec(joint.joint_type, joint.axis_pos, -direction)
    # -0.0 방지
    return flipped, np.where(thetas == 0.0, 0.0, -thetas)


def resample_thetas(thetas: Sequence[float], n: int) -> np.ndarray:
    """
    θ 시퀀스를 n개로 선형 보간 재표본화

    Args:
        thetas: 원본 θ (길이 1 이상)
        n: 목표 프레임 수

    Returns:
        (n,) 재표본화된 θ
    """
    thetas = np.asarray(thetas, dtype=np.float64)
    if n < 1:
        raise InvalidInputError(f"프레임 수는 1 이상이어야 합니다: {n}")
    if len(thetas) == n:
        return thetas.copy()
    if len(thetas) == 1 or n == 1:
        return np.full(n, thetas[0])
    source = np.linspace(0.0, 1.0, len(thetas))
    target = np.linspace(0.0, 1.0, n)
    return np.interp(target, source, thetas)


def save_joint(joint: JointSpec, thetas: Sequence[float], path: Union[str, Path]):
    """관절 JSON 저장"""
    write_json(
        JointFile(
            type=joint.joint_type.value,
            axis_pos=tuple(float(v) for v in joint.axis_pos),
            axis_dir=tuple(float(v) for v in joint.axis_dir),
            thetas=[float(v) for v in thetas],
        ),
        Path(path),
    )


def joint_from_file(spec: JointFile) -> tuple[JointSpec, np.ndarray]:
    """검증된 관절 스키마 → (JointSpec, θ)"""
    try:
        joint = JointSpec.normalized(spec.type, spec.axis_pos, spec.axis_dir)
    except InvalidInputError as e:
        raise SchemaError(f"관절 검증 실패: {e}") from e
    return joint, np.asarray(spec.thetas, dtype=np.float64)


def load_joint(path: Union[str, Path]) -> tuple[JointSpec, np.ndarray]:
    """
    관절 JSON 로드

    Args:
        path: JSON 경로

    Returns:
        (관절 사양, 프레임별 θ)
    """
    return joint_from_file(read_model(Path(path), JointFile))


__all__ = [
    "JointType",
    "JointSpec",
    "MotionProfile",
    "PoseJacobians",
    "dual_quat_from_joint",
    "joint_transform",
    "joint_pose_grads",
    "tangent_projector",
    "rodrigues",
    "deform_mesh",
    "canonicalize",
    "resample_thetas",
    "save_joint",
    "load_joint",
    "joint_from_file",
]
