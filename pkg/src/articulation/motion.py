"""
모션 MLP 모듈
θ_t = F_motion(t) 와 파라미터 역전파

입력 s = (t−1)/(N−1) ∈ [0,1], 출력은 g(s) − g(0)으로 첫 프레임에서 정확히 0.
output_bound B가 있으면 θ = B·tanh((g(s) − g(0)) / B) 로 (−B, B)에 가둔다.
원점 기울기가 1이라 작은 θ는 raw와 같고, 회전 관절(B = π)의 진폭 한계는 π·tanh(raw)와 같다.
"""

from dataclasses import dataclass
from typing import Any, List, Optional, Sequence

import numpy as np
from pydantic import TypeAdapter, ValidationError

from src.config.loader import LayerFile
from src.utils.exceptions import InvalidInputError, SchemaError

DEFAULT_LAYER_SIZES = (1, 64, 64, 1)
OUTPUT_INIT_SCALE = 0.1

# 램프 초기화 최소제곱 표본 수와 릿지 계수
RAMP_SAMPLES = 32
RAMP_RIDGE = 1e-4

_CHECKPOINT = TypeAdapter(List[LayerFile])


@dataclass(frozen=True, eq=False)
class MotionMLP:
    """
    1 → 64 → 64 → 1 tanh MLP

    weights[k]: (out, in), biases[k]: (out,). 은닉층은 tanh, 출력층은 항등.
    """

    weights: tuple
    biases: tuple
    output_bound: Optional[float] = None

    def __post_init__(self):
        weights = tuple(np.array(w, dtype=np.float64) for w in self.weights)
        biases = tuple(np.array(b, dtype=np.float64).ravel() for b in self.biases)
        if len(weights) != len(biases) or not weights:
            raise InvalidInputError("가중치/편향 층 수가 맞지 않습니다")
        if weights[0].shape[1] != 1 or weights[-1].shape[0] != 1:
            raise InvalidInputError("입력/출력 차원은 1이어야 합니다")
        for k, (w, b) in enumerate(zip(weights, biases)):
            if w.ndim != 2 or b.shape != (w.shape[0],):
                raise InvalidInputError(f"{k}번째 층 형상 불일치: W{w.shape}, b{b.shape}")
            if k > 0 and w.shape[1] != weights[k - 1].shape[0]:
                raise InvalidInputError(f"{k}번째 층 입력 차원 불일치")
            if not (np.isfinite(w).all() and np.isfinite(b).all()):
                raise InvalidInputError(f"{k}번째 층에 유한하지 않은 값이 있습니다")
            w.setflags(write=False)
            b.setflags(write=False)
        if self.output_bound is not None and self.output_bound <= 0:
            raise InvalidInputError(f"output_bound는 양수여야 합니다: {self.output_bound}")
        object.__setattr__(self, "weights", weights)
        object.__setattr__(self, "biases", biases)

    @property
    def layer_sizes(self) -> tuple[int, ...]:
        return (self.weights[0].shape[1],) + tuple(w.shape[0] for w in self.weights)

    @property
    def parameter_count(self) -> int:
        return sum(w.size + b.size for w, b in zip(self.weights, self.biases))

    @classmethod
    def initialize(
        cls,
        rng: np.random.Generator,
        layer_sizes: Sequence[int] = DEFAULT_LAYER_SIZES,
        output_bound: Optional[float] = None,
        output_scale: float = OUTPUT_INIT_SCALE,
    ) -> "MotionMLP":
        """
        균등 분포 U(−1/√fan_in, 1/√fan_in) 초기화, 출력층은 output_scale배

        Args:
            rng: 시드 고정된 난수 생성기
            layer_sizes: 층 크기
            output_bound: 출력 진폭 한계 (회전 관절은 π)
            output_scale: 출력층 축소 비율

        Returns:
            초기화된 MLP
        """
        weights, biases = [], []
        for k in range(len(layer_sizes) - 1):
            fan_in, fan_out = layer_sizes[k], layer_sizes[k + 1]
            bound = 1.0 / np.sqrt(fan_in)
            w = rng.uniform(-bound, bound, size=(fan_out, fan_in))
            b = rng.uniform(-bound, bound, size=fan_out)
            if k == len(layer_sizes) - 2:
                w, b = w * output_scale, b * output_scale
            weights.append(w)
            biases.append(b)
        return cls(tuple(weights), tuple(biases), output_bound)

    @classmethod
    def zeros(cls, layer_sizes: Sequence[int] = DEFAULT_LAYER_SIZES, output_bound: Optional[float] = None) -> "MotionMLP":
        """모든 파라미터 0"""
        weights = tuple(np.zeros((layer_sizes[k + 1], layer_sizes[k])) for k in range(len(layer_sizes) - 1))
        biases = tuple(np.zeros(layer_sizes[k + 1]) for k in range(len(layer_sizes) - 1))
        return cls(weights, biases, output_bound)

    @classmethod
    def ramp(
        cls,
        rng: np.random.Generator,
        amplitude: float,
        layer_sizes: Sequence[int] = DEFAULT_LAYER_SIZES,
        output_bound: Optional[float] = None,
    ) -> "MotionMLP":
        """
        θ(s) ≈ amplitude·s 가 되도록 출력층만 최소제곱으로 맞춘 MLP

        은닉층은 initialize와 같은 분포로 뽑는다. amplitude = 0이면 출력층 가중치가 0이라 θ ≡ 0.

        Args:
            rng: 시드 고정된 난수 생성기
            amplitude: 마지막 프레임 θ 목표
            layer_sizes: 층 크기
            output_bound: 출력 진폭 한계 (|amplitude| < output_bound)

        Returns:
            초기화된 MLP
        """
        mlp = cls.initialize(rng, layer_sizes, output_bound)
        if output_bound is not None and abs(amplitude) >= output_bound:
            raise InvalidInputError(f"진폭 {amplitude}이 output_bound {output_bound} 이상입니다")
        if amplitude == 0.0:
            return cls(mlp.weights[:-1] + (np.zeros_like(mlp.weights[-1]),), mlp.biases, output_bound)

        s = np.linspace(0.0, 1.0, RAMP_SAMPLES)
        _, activations = mlp.forward(s)
        # g(s) − g(0)에서 출력 편향은 상쇄된다
        hidden = activations[-2] - activations[-2][0]
        target = amplitude * s
        if output_bound is not None:
            target = output_bound * np.arctanh(target / output_bound)
        gram = hidden.T @ hidden + RAMP_RIDGE * np.eye(hidden.shape[1])
        last = np.linalg.solve(gram, hidden.T @ target)
        return cls(mlp.weights[:-1] + (last[None, :],), mlp.biases, output_bound)

    def flat_params(self) -> np.ndarray:
        """(W0, b0, W1, b1, ...) 순서로 펼친 파라미터"""
        parts = []
        for w, b in zip(self.weights, self.biases):
            parts.extend([w.ravel(), b])
        return np.concatenate(parts)

    def with_flat_params(self, flat: np.ndarray) -> "MotionMLP":
        """펼친 파라미터로 새 MLP 생성"""
        flat = np.asarray(flat, dtype=np.float64)
        if flat.shape != (self.parameter_count,):
            raise InvalidInputError(f"파라미터 길이 불일치: {flat.shape} != ({self.parameter_count},)")
        weights, biases, offset = [], [], 0
        for w, b in zip(self.weights, self.biases):
            weights.append(flat[offset:offset + w.size].reshape(w.shape))
            offset += w.size
            biases.append(flat[offset:offset + b.size])
            offset += b.size
        return MotionMLP(tuple(weights), tuple(biases), self.output_bound)

    def negated(self) -> "MotionMLP":
        """출력 부호를 뒤집은 MLP (θ_t → −θ_t, 비트 단위 정확)"""
        weights = self.weights[:-1] + (-self.weights[-1],)
        biases = self.biases[:-1] + (-self.biases[-1],)
        return MotionMLP(weights, biases, self.output_bound)

    def forward(self, s: np.ndarray) -> tuple[np.ndarray, list]:
        """
        배치 순전파 g(s)

        Args:
            s: (B,) 정규화 입력

        Returns:
            (g (B,), 층별 활성값 캐시)
        """
        h = np.asarray(s, dtype=np.float64).reshape(-1, 1)
        activations = [h]
        last = len(self.weights) - 1
        for k, (w, b) in enumerate(zip(self.weights, self.biases)):
            h = h @ w.T + b
            if k < last:
                h = np.tanh(h)
            activations.append(h)
        return h[:, 0], activations

    def backward(self, activations: list) -> np.ndarray:
        """
        배치 역전파: 각 입력에 대한 dg/dparams

        Args:
            activations: forward의 캐시

        Returns:
            (B, P) 펼친 파라미터 순서의 기울기
        """
        batch = activations[0].shape[0]
        grads_w, grads_b = [None] * len(self.weights), [None] * len(self.weights)
        delta = np.ones((batch, 1))
        for k in range(len(self.weights) - 1, -1, -1):
            grads_w[k] = delta[:, :, None] * activations[k][:, None, :]
            grads_b[k] = delta
            if k > 0:
                delta = (delta @ self.weights[k]) * (1.0 - activations[k] ** 2)
        parts = []
        for gw, gb in zip(grads_w, grads_b):
            parts.extend([gw.reshape(batch, -1), gb])
        return np.concatenate(parts, axis=1)

    def profile_and_jacobian(self, n_frames: int) -> tuple[np.ndarray, np.ndarray]:
        """
        전체 프레임의 θ와 파라미터 야코비안

        Args:
            n_frames: 프레임 수 N (2 이상)

        Returns:
            (θ (N,), dθ/dparams (N, P))
        """
        s = _normalized_inputs(n_frames)
        values, cache = self.forward(np.concatenate([[0.0], s]))
        grads = self.backward(cache)
        raw = values[1:] - values[0]
        raw_grad = grads[1:] - grads[0]
        # 첫 프레임 고정
        raw[0] = 0.0
        raw_grad[0] = 0.0
        if self.output_bound is None:
            return raw, raw_grad
        squashed = np.tanh(raw / self.output_bound)
        return self.output_bound * squashed, (1.0 - squashed ** 2)[:, None] * raw_grad

    def profile(self, n_frames: int) -> np.ndarray:
        """전체 프레임의 θ (N,), motion_at과 비트 단위로 일치"""
        _normalized_inputs(n_frames)
        return np.array([motion_at(self, t, n_frames) for t in range(1, n_frames + 1)])

    def to_json(self) -> list:
        """체크포인트 (층별 weight/bias JSON 배열)"""
        return [{"weight": w.tolist(), "bias": b.tolist()} for w, b in zip(self.weights, self.biases)]

    @classmethod
    def from_json(cls, payload: Any, output_bound: Optional[float] = None) -> "MotionMLP":
        """체크포인트에서 복원"""
        try:
            layers = _CHECKPOINT.validate_python(payload)
        except ValidationError as e:
            raise SchemaError(f"MLP 체크포인트 검증 실패: {e}") from e
        try:
            return cls(
                tuple(np.asarray(layer.weight) for layer in layers),
                tuple(np.asarray(layer.bias) for layer in layers),
                output_bound,
            )
        except (InvalidInputError, ValueError) as e:
            raise SchemaError(f"MLP 체크포인트 형상 오류: {e}") from e


def _normalized_inputs(n_frames: int) -> np.ndarray:
    if n_frames < 2:
        raise InvalidInputError(f"프레임 수는 2 이상이어야 합니다: {n_frames}")
    return np.arange(n_frames, dtype=np.float64) / (n_frames - 1)


def _check_frame(t: int, n_frames: int):
    if n_frames < 2:
        raise InvalidInputError(f"프레임 수는 2 이상이어야 합니다: {n_frames}")
    if not 1 <= t <= n_frames:
        raise InvalidInputError(f"프레임 인덱스 범위 초과: t={t}, N={n_frames}")


def motion_at(mlp: MotionMLP, t: int, n_frames: int) -> float:
    """
    프레임 t의 모션 크기 θ_t

    Args:
        mlp: 모션 MLP
        t: 프레임 인덱스 (1부터)
        n_frames: 프레임 수 N

    Returns:
        θ_t (θ_1 = 0)
    """
    _check_frame(t, n_frames)
    if t == 1:
        return 0.0
    s = (t - 1) / (n_frames - 1)
    values, _ = mlp.forward(np.array([0.0, s]))
    raw = values[1] - values[0]
    if mlp.output_bound is None:
        return float(raw)
    return float(mlp.output_bound * np.tanh(raw / mlp.output_bound))


def motion_grad(mlp: MotionMLP, t: int, n_frames: int) -> np.ndarray:
    """
    θ_t의 MLP 파라미터 기울기 (역전파)

    Args:
        mlp: 모션 MLP
        t: 프레임 인덱스 (1부터)
        n_frames: 프레임 수 N

    Returns:
        (P,) flat_params 순서의 기울기
    """
    _check_frame(t, n_frames)
    if t == 1:
        return np.zeros(mlp.parameter_count)
    s = (t - 1) / (n_frames - 1)
    values, cache = mlp.forward(np.array([0.0, s]))
    grads = mlp.backward(cache)
    raw_grad = grads[1] - grads[0]
    if mlp.output_bound is None:
        return raw_grad
    squashed = np.tanh((values[1] - values[0]) / mlp.output_bound)
    return (1.0 - squashed ** 2) * raw_grad
