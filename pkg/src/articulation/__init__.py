"""
관절 운동학
듀얼 쿼터니언, 모션 MLP, 메시 변형
"""

from src.articulation.joint import (
    JointSpec,
    JointType,
    MotionProfile,
    PoseJacobians,
    canonicalize,
    deform_mesh,
    dual_quat_from_joint,
    joint_pose_grads,
    joint_transform,
    load_joint,
    resample_thetas,
    rodrigues,
    save_joint,
)
from src.articulation.motion import MotionMLP, motion_at, motion_grad
from src.articulation.quaternion import (
    DualQuaternion,
    Quaternion,
    dual_quat_to_rt,
    quat_conj,
    quat_mul,
    quat_to_matrix,
)

__all__ = [
    "JointSpec",
    "JointType",
    "MotionProfile",
    "PoseJacobians",
    "canonicalize",
    "deform_mesh",
    "dual_quat_from_joint",
    "joint_pose_grads",
    "joint_transform",
    "load_joint",
    "resample_thetas",
    "rodrigues",
    "save_joint",
    "MotionMLP",
    "motion_at",
    "motion_grad",
    "DualQuaternion",
    "Quaternion",
    "dual_quat_to_rt",
    "quat_conj",
    "quat_mul",
    "quat_to_matrix",
]
