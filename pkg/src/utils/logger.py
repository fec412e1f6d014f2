"""
로깅 설정 모듈
"""

import sys
from pathlib import Path
from typing import Optional

from loguru import logger

from src.config.settings import get_settings


def setup_logger(level: Optional[str] = None, log_dir: Optional[Path] = None, file_logging: bool = True):
    """
    로거 설정

    Args:
        level: 콘솔 로그 레벨 (기본: Settings.LOG_LEVEL)
        log_dir: 로그 파일 디렉토리 (기본: Settings.LOG_DIR)
        file_logging: 파일 로깅 여부

    Returns:
        설정된 loguru 로거
    """
    settings = get_settings()
    level = (level or settings.LOG_LEVEL).upper()
    log_dir = Path(log_dir) if log_dir is not None else settings.LOG_DIR

    # 기본 로거 제거
    logger.remove()

    # 콘솔 로깅 (stdout은 결과 요약 출력용으로 비워 둔다)
    logger.add(
        sys.stderr,
        format="<green>{time:YYYY-MM-DD HH:mm:ss}</green> | <level>{level: <8}</level> | <level>{message}</level>",
        level=level,
        colorize=True,
    )

    if file_logging:
        # 로그 디렉토리 생성
        log_dir.mkdir(parents=True, exist_ok=True)

        # 파일 로깅
        logger.add(
            log_dir / "articulate_{time:YYYY-MM-DD}.log",
            rotation="00:00",
            retention="30 days",
            compression="zip",
            level="DEBUG",
            format="{time:YYYY-MM-DD HH:mm:ss} | {level: <8} | {name}:{function}:{line} | {message}",
        )

    return logger
