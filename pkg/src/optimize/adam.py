"""
Adam 옵티마이저 (편향 보정)
"""

from dataclasses import dataclass
from typing import Optional, Tuple, Union

import numpy as np

from src.utils.exceptions import OptimizationError


@dataclass(frozen=True, eq=False)
class AdamState:
    """1차/2차 모멘트 누적값과 스텝 수"""

    m: np.ndarray
    v: np.ndarray
    step: int = 0

    @classmethod
    def zeros(cls, size: int) -> "AdamState":
        return cls(np.zeros(size), np.zeros(size), 0)


def adam_step(
    params: np.ndarray,
    grads: np.ndarray,
    state: AdamState,
    lr: Union[float, np.ndarray],
    betas: Tuple[float, float] = (0.9, 0.999),
    eps: float = 1e-8,
    unit_slice: Optional[slice] = None,
) -> tuple[np.ndarray, AdamState]:
    """
    Adam 한 스텝

    Args:
        params: 파라미터 벡터
        grads: 기울기 벡터
        state: 이전 상태
        lr: 학습률 (스칼라 또는 파라미터별 벡터)
        betas: 모멘트 계수
        eps: 엡실론
        unit_slice: 스텝 후 단위 길이로 재정규화할 구간 (axis_dir)

    Returns:
        (갱신된 파라미터, 갱신된 상태)
    """
    params = np.asarray(params, dtype=np.float64)
    grads = np.asarray(grads, dtype=np.float64)
    if params.shape != grads.shape or params.shape != state.m.shape:
        raise OptimizationError(f"형상 불일치: params {params.shape}, grads {grads.shape}, state {state.m.shape}")
    if not np.isfinite(grads).all():
        bad = np.flatnonzero(~np.isfinite(grads))
        raise OptimizationError(f"유한하지 않은 기울기 (인덱스 {bad[:5].tolist()}): 렌더러 역전파를 확인하세요")

    beta1, beta2 = betas
    step = state.step + 1
    m = beta1 * state.m + (1.0 - beta1) * grads
    v = beta2 * state.v + (1.0 - beta2) * grads ** 2
    m_hat = m / (1.0 - beta1 ** step)
    v_hat = v / (1.0 - beta2 ** step)

    updated = params - lr * m_hat / (np.sqrt(v_hat) + eps)
    if unit_slice is not None:
        block = updated[unit_slice]
        norm = np.linalg.norm(block)
        if norm < 1e-12:
            raise OptimizationError("단위 벡터 구간의 노름이 0이 되었습니다")
        updated[unit_slice] = block / norm
    return updated, AdamState(m, v, step)
