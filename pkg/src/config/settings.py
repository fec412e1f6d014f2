"""
프로젝트 설정 모듈
환경 변수를 통한 설정 관리
"""

from pydantic_settings import BaseSettings, SettingsConfigDict
from pydantic import Field
from pathlib import Path


class Settings(BaseSettings):
    """애플리케이션 설정"""

    model_config = SettingsConfigDict(
        env_file=".env",
        env_file_encoding="utf-8",
        env_prefix="ARTICULATE_",
        case_sensitive=False,
    )

    # 프로젝트 루트 경로
    PROJECT_ROOT: Path = Path(__file__).parent.parent.parent

    # 데이터 경로
    DATA_SCENES_DIR: Path = PROJECT_ROOT / "data" / "scenes"
    DATA_RESULTS_DIR: Path = PROJECT_ROOT / "data" / "results"

    # 로그 경로
    LOG_DIR: Path = PROJECT_ROOT / "logs"
    LOG_LEVEL: str = Field(default="INFO", description="콘솔 로그 레벨")

    # 렌더링 기본 설정
    DEFAULT_RESOLUTION: int = Field(default=256, ge=1, description="렌더링 해상도 (정사각형, 픽셀)")
    DEFAULT_BETA: float = Field(default=500.0, gt=0, description="소프트 깊이 블렌딩 선명도")
    DEFAULT_BACKGROUND: tuple[float, float, float] = Field(
        default=(1.0, 1.0, 1.0), description="배경색 (RGB, [0,1])"
    )

    # 시퀀스 기본 설정
    DEFAULT_FRAMES: int = Field(default=16, ge=2, description="합성 시퀀스 프레임 수")
    DEFAULT_SEED: int = Field(default=0, description="기본 난수 시드")


settings = Settings()


def get_settings() -> Settings:
    """설정 인스턴스 반환"""
    return settings
