"""
설정 / 파일 스키마 로더
JSON 기반 파일 로딩 및 pydantic 검증
"""

import json
import math
from pathlib import Path
from typing import Any, Dict, List, Literal, Optional, Tuple, Type, TypeVar

from loguru import logger
from pydantic import BaseModel, Field, ValidationError, field_validator, model_validator

from src.utils.exceptions import SchemaError

ModelT = TypeVar("ModelT", bound=BaseModel)


class OptimConfig(BaseModel):
    """관절 최적화 설정"""

    iterations: int = Field(default=600, ge=1, description="후보당 총 반복 횟수")
    lr_axis_dir: float = Field(default=1e-2, gt=0, description="축 방향 학습률")
    lr_axis_pos: float = Field(default=1e-2, gt=0, description="축 위치 학습률")
    lr_mlp: float = Field(default=1e-3, gt=0, description="모션 MLP 학습률")
    adam_betas: Tuple[float, float] = Field(default=(0.9, 0.999), description="Adam 모멘트 계수")
    adam_eps: float = Field(default=1e-8, gt=0, description="Adam 엡실론")
    restarts: int = Field(default=16, ge=1, description="무작위 재시작 횟수")
    warmup_iterations: int = Field(default=60, ge=0, description="재시작별 예열 반복 횟수")
    continue_top: int = Field(default=2, ge=1, description="예열 후 계속 최적화할 후보 수")
    beta: float = Field(default=500.0, gt=0, description="소프트 깊이 블렌딩 선명도")
    edge_gradients: bool = Field(default=True, description="실루엣 경계 화면 공간 기울기 사용")
    seed: int = Field(default=0, description="난수 시드")
    supervised_frames: Optional[List[int]] = Field(
        default=None, description="감독에 사용할 프레임 인덱스 (0부터, 기본: 전체)"
    )

    @field_validator("adam_betas")
    @classmethod
    def validate_betas(cls, v: Tuple[float, float]) -> Tuple[float, float]:
        """모멘트 계수 범위 검증"""
        if not all(0.0 <= b < 1.0 for b in v):
            raise ValueError(f"Adam 계수는 [0, 1) 범위여야 합니다: {v}")
        return v

    @model_validator(mode="after")
    def validate_schedule(self) -> "OptimConfig":
        """반복 횟수 검증"""
        if self.iterations < self.warmup_iterations:
            raise ValueError(
                f"iterations({self.iterations})는 warmup_iterations({self.warmup_iterations}) 이상이어야 합니다"
            )
        return self


class SynthConfig(BaseModel):
    """합성 장면 생성 설정"""

    resolution: int = Field(default=256, ge=8, description="렌더링 해상도 (정사각형)")
    frames: int = Field(default=16, ge=2, description="시퀀스 프레임 수")
    min_revolute_deg: float = Field(default=30.0, gt=0, le=180, description="회전 관절 최소 모션 (도)")
    max_revolute_deg: float = Field(default=90.0, gt=0, le=179, description="회전 관절 최대 모션 (도)")
    min_prismatic_fraction: float = Field(default=0.25, gt=0, description="병진 관절 최소 모션 (축 방향 폭 비율)")
    max_prismatic_fraction: float = Field(default=0.6, gt=0, description="병진 관절 최대 모션 (축 방향 폭 비율)")
    schedule: Literal["smoothstep", "linear"] = Field(default="smoothstep", description="θ 보간 스케줄")
    background: Tuple[float, float, float] = Field(default=(1.0, 1.0, 1.0), description="배경색")
    beta: float = Field(default=500.0, gt=0, description="소프트 깊이 블렌딩 선명도")

    @model_validator(mode="after")
    def validate_ranges(self) -> "SynthConfig":
        """모션 범위 검증"""
        if self.max_revolute_deg < self.min_revolute_deg:
            raise ValueError("max_revolute_deg는 min_revolute_deg 이상이어야 합니다")
        if self.max_prismatic_fraction < self.min_prismatic_fraction:
            raise ValueError("max_prismatic_fraction은 min_prismatic_fraction 이상이어야 합니다")
        if not all(0.0 <= c <= 1.0 for c in self.background):
            raise ValueError(f"배경색은 [0,1] 범위여야 합니다: {self.background}")
        return self


class CameraFile(BaseModel):
    """camera.json 스키마"""

    focal: Tuple[float, float]
    principal: Tuple[float, float]
    pose: List[List[float]]
    resolution: Tuple[int, int]

    @field_validator("pose")
    @classmethod
    def validate_pose(cls, v: List[List[float]]) -> List[List[float]]:
        """4x4 행 우선 행렬 검증"""
        if len(v) != 4 or any(len(row) != 4 for row in v):
            raise ValueError("pose는 4x4 행 우선 행렬이어야 합니다")
        return v


class JointFile(BaseModel):
    """관절 JSON 스키마"""

    type: Literal["prismatic", "revolute"]
    axis_pos: Tuple[float, float, float]
    axis_dir: Tuple[float, float, float]
    thetas: List[float] = Field(default_factory=list)

    @field_validator("axis_pos", "axis_dir", "thetas")
    @classmethod
    def validate_finite(cls, v):
        """유한값 검증"""
        if not all(math.isfinite(x) for x in v):
            raise ValueError("모든 값은 유한해야 합니다")
        return v

    @field_validator("axis_dir")
    @classmethod
    def validate_direction(cls, v: Tuple[float, float, float]) -> Tuple[float, float, float]:
        """축 방향 0벡터 검증"""
        if math.sqrt(sum(x * x for x in v)) < 1e-12:
            raise ValueError("axis_dir은 0벡터일 수 없습니다")
        return v


class SceneFile(JointFile):
    """gt.json 스키마 (관절 + 생성 정보)"""

    template: Optional[str] = None
    seed: Optional[int] = None


class LayerFile(BaseModel):
    """MLP 체크포인트의 층 하나"""

    weight: List[List[float]]
    bias: List[float]


class RunManifest(BaseModel):
    """실행 매니페스트"""

    command: str
    config: Dict[str, Any] = Field(default_factory=dict)
    seed: Optional[int] = None
    inputs: Dict[str, str] = Field(default_factory=dict)
    outputs: Dict[str, str] = Field(default_factory=dict)
    version: str
    started_at: str
    duration_seconds: float = Field(ge=0)
    extra: Dict[str, Any] = Field(default_factory=dict)


class ModelFileLoader:
    """JSON 파일 로더"""

    def __init__(self, path: Path, model_cls: Type[ModelT]):
        """
        초기화

        Args:
            path: JSON 파일 경로
            model_cls: 검증에 사용할 pydantic 모델
        """
        self.path = Path(path)
        self.model_cls = model_cls
        if not self.path.exists():
            raise FileNotFoundError(f"input not found: {self.path}")

    def load_raw(self) -> Any:
        """
        원본 JSON 로드 (검증 없이)

        Returns:
            파싱된 JSON 값
        """
        try:
            with open(self.path, "r", encoding="utf-8") as f:
                return json.load(f)
        except json.JSONDecodeError as e:
            logger.error(f"JSON 파싱 오류: {self.path}: {e}")
            raise SchemaError(f"JSON 파싱 실패: {self.path}: {e}") from e

    def load(self):
        """
        JSON 로드 및 검증

        Returns:
            모델 인스턴스
        """
        raw = self.load_raw()
        try:
            model = self.model_cls.model_validate(raw)
        except ValidationError as e:
            raise SchemaError(f"스키마 검증 실패: {self.path}: {e}") from e
        logger.debug(f"파일 로드 완료: {self.path}")
        return model


def read_model(path: Path, model_cls: Type[ModelT]) -> ModelT:
    """
    JSON 파일을 모델로 로드하는 헬퍼 함수

    Args:
        path: 파일 경로
        model_cls: pydantic 모델

    Returns:
        모델 인스턴스
    """
    return ModelFileLoader(path, model_cls).load()


def write_json(payload: Any, path: Path):
    """
    JSON 저장 (키 순서 고정, 들여쓰기 2)

    Args:
        payload: 직렬화할 값 또는 pydantic 모델
        path: 출력 경로
    """
    path = Path(path)
    if isinstance(payload, BaseModel):
        payload = payload.model_dump(mode="json")
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as f:
        json.dump(payload, f, indent=2, sort_keys=True)
        f.write("\n")
