"""
쿼터니언 / 듀얼 쿼터니언 모듈
스칼라 우선 (w, x, y, z) 해밀턴 규약
"""

from dataclasses import dataclass

import numpy as np

from src.utils.exceptions import InvalidInputError

UNIT_TOLERANCE = 1e-9


def qmul(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """
    배열 해밀턴 곱 (마지막 축 크기 4, 브로드캐스팅 지원)

    Args:
        a: (..., 4) 쿼터니언
        b: (..., 4) 쿼터니언

    Returns:
        (..., 4) a ⊗ b
    """
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    aw, ax, ay, az = a[..., 0], a[..., 1], a[..., 2], a[..., 3]
    bw, bx, by, bz = b[..., 0], b[..., 1], b[..., 2], b[..., 3]
    return np.stack(
        [
            aw * bw - ax * bx - ay * by - az * bz,
            aw * bx + ax * bw + ay * bz - az * by,
            aw * by - ax * bz + ay * bw + az * bx,
            aw * bz + ax * by - ay * bx + az * bw,
        ],
        axis=-1,
    )


def qconj(q: np.ndarray) -> np.ndarray:
    """배열 켤레 쿼터니언"""
    q = np.asarray(q, dtype=np.float64)
    return q * np.array([1.0, -1.0, -1.0, -1.0])


def quat_to_matrix(q: np.ndarray) -> np.ndarray:
    """
    단위 쿼터니언 → 3x3 회전 행렬

    Args:
        q: (4,) 단위 쿼터니언

    Returns:
        (3, 3) 회전 행렬
    """
    w, x, y, z = np.asarray(q, dtype=np.float64)
    return np.array(
        [
            [1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y)],
            [2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x)],
            [2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y)],
        ]
    )


def quat_to_matrix_jacobian(q: np.ndarray) -> np.ndarray:
    """
    회전 행렬의 쿼터니언 성분 미분

    Args:
        q: (4,) 쿼터니언

    Returns:
        (3, 3, 4) dR[i, j] / dq[m]
    """
    w, x, y, z = np.asarray(q, dtype=np.float64)
    jac = np.zeros((3, 3, 4))
    jac[0, 0] = [0.0, 0.0, -4 * y, -4 * z]
    jac[0, 1] = [-2 * z, 2 * y, 2 * x, -2 * w]
    jac[0, 2] = [2 * y, 2 * z, 2 * w, 2 * x]
    jac[1, 0] = [2 * z, 2 * y, 2 * x, 2 * w]
    jac[1, 1] = [0.0, -4 * x, 0.0, -4 * z]
    jac[1, 2] = [-2 * x, -2 * w, 2 * z, 2 * y]
    jac[2, 0] = [-2 * y, 2 * z, -2 * w, 2 * x]
    jac[2, 1] = [2 * x, 2 * w, 2 * z, 2 * y]
    jac[2, 2] = [0.0, -4 * x, -4 * y, 0.0]
    return jac


@dataclass(frozen=True)
class Quaternion:
    """스칼라 우선 쿼터니언"""

    w: float
    x: float
    y: float
    z: float

    def __post_init__(self):
        if not np.isfinite([self.w, self.x, self.y, self.z]).all():
            raise InvalidInputError(f"쿼터니언 성분이 유한하지 않습니다: {self}")

    @classmethod
    def identity(cls) -> "Quaternion":
        return cls(1.0, 0.0, 0.0, 0.0)

    @classmethod
    def from_array(cls, values) -> "Quaternion":
        w, x, y, z = (float(v) for v in np.asarray(values, dtype=np.float64).ravel())
        return cls(w, x, y, z)

    def as_array(self) -> np.ndarray:
        return np.array([self.w, self.x, self.y, self.z])

    @property
    def norm(self) -> float:
        return float(np.linalg.norm(self.as_array()))

    def conj(self) -> "Quaternion":
        return Quaternion(self.w, -self.x, -self.y, -self.z)


def quat_mul(a: Quaternion, b: Quaternion) -> Quaternion:
    """
    해밀턴 곱 a ⊗ b

    Args:
        a: 왼쪽 쿼터니언
        b: 오른쪽 쿼터니언

    Returns:
        곱 쿼터니언
    """
    return Quaternion.from_array(qmul(a.as_array(), b.as_array()))


def quat_conj(q: Quaternion) -> Quaternion:
    """켤레 쿼터니언"""
    return q.conj()


@dataclass(frozen=True)
class DualQuaternion:
    """
    듀얼 쿼터니언 (q_r, q_d)

    q_r은 단위 회전 쿼터니언, q_d는 병진을 결합하며 dot(q_r, q_d) = 0 (플뤼커 조건)
    """

    real: Quaternion
    dual: Quaternion

    def __post_init__(self):
        if abs(self.real.norm - 1.0) > UNIT_TOLERANCE:
            raise InvalidInputError(f"q_r이 단위 쿼터니언이 아닙니다: |q_r| = {self.real.norm:.12f}")
        plucker = float(np.dot(self.real.as_array(), self.dual.as_array()))
        if abs(plucker) > UNIT_TOLERANCE:
            raise InvalidInputError(f"플뤼커 조건 위반: dot(q_r, q_d) = {plucker:.3e}")

    @classmethod
    def identity(cls) -> "DualQuaternion":
        return cls(Quaternion.identity(), Quaternion(0.0, 0.0, 0.0, 0.0))


def dual_quat_to_rt(dq: DualQuaternion) -> tuple[np.ndarray, np.ndarray]:
    """
    듀얼 쿼터니언 → (회전 행렬 R, 병진 벡터 t)

    R은 q_r의 회전 행렬, t는 2·q_d ⊗ conj(q_r)의 벡터부

    Args:
        dq: 듀얼 쿼터니언

    Returns:
        (R (3, 3), t (3,))
    """
    q_r = dq.real.as_array()
    if abs(np.linalg.norm(q_r) - 1.0) > UNIT_TOLERANCE:
        raise InvalidInputError("q_r이 단위 쿼터니언이 아닙니다")
    rotation = quat_to_matrix(q_r)
    translation = 2.0 * quat_mul(dq.dual, quat_conj(dq.real)).as_array()[1:]
    return rotation, translation
