"""
이미지 모듈
바이너리 PPM(P6) / PGM(P5) 입출력
"""

from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Union

import numpy as np
from loguru import logger

from src.utils.exceptions import ImageFormatError, InvalidInputError


@dataclass(frozen=True, eq=False)
class Image:
    """
    [0,1] 범위 행 우선 이미지

    data: (height, width, channels) float64, channels는 1 또는 3
    """

    data: np.ndarray

    def __post_init__(self):
        data = np.asarray(self.data, dtype=np.float64)
        if data.ndim == 2:
            data = data[:, :, None]
        if data.ndim != 3 or data.shape[2] not in (1, 3):
            raise InvalidInputError(f"이미지 형상이 올바르지 않습니다: {data.shape}")
        if data.shape[0] < 1 or data.shape[1] < 1:
            raise InvalidInputError("이미지 크기는 1 이상이어야 합니다")
        if not np.isfinite(data).all() or data.min() < 0.0 or data.max() > 1.0:
            raise InvalidInputError("이미지 값은 [0,1] 범위여야 합니다")
        data = np.ascontiguousarray(data)
        data.setflags(write=False)
        object.__setattr__(self, "data", data)

    @property
    def height(self) -> int:
        return self.data.shape[0]

    @property
    def width(self) -> int:
        return self.data.shape[1]

    @property
    def channels(self) -> int:
        return self.data.shape[2]

    @property
    def resolution(self) -> tuple[int, int]:
        return (self.width, self.height)

    @classmethod
    def filled(cls, width: int, height: int, value, channels: int = 3) -> "Image":
        """단색 이미지"""
        data = np.empty((height, width, channels))
        data[...] = value
        return cls(data)

    @classmethod
    def from_unclipped(cls, data: np.ndarray) -> "Image":
        """[0,1] 밖의 부동소수 오차를 잘라서 생성"""
        return cls(np.clip(data, 0.0, 1.0))

    def gray(self) -> np.ndarray:
        """휘도 (0.299R + 0.587G + 0.114B), (H, W)"""
        if self.channels == 1:
            return self.data[:, :, 0]
        return self.data @ np.array([0.299, 0.587, 0.114])

    def same_resolution(self, other: "Image") -> bool:
        return self.resolution == other.resolution


def require_same_resolution(a: Image, b: Image, what: str = "이미지"):
    """해상도 일치 검사"""
    if not a.same_resolution(b):
        raise InvalidInputError(f"{what} 해상도 불일치: {a.resolution} != {b.resolution}")


def _read_token(payload: bytes, pos: int) -> tuple[bytes, int]:
    # 공백과 주석을 건너뛰고 헤더 토큰 하나를 읽는다
    length = len(payload)
    while pos < length:
        ch = payload[pos:pos + 1]
        if ch == b"#":
            while pos < length and payload[pos:pos + 1] not in (b"\n", b"\r"):
                pos += 1
        elif ch.isspace():
            pos += 1
        else:
            break
    start = pos
    while pos < length and not payload[pos:pos + 1].isspace():
        pos += 1
    if start == pos:
        raise ImageFormatError("헤더가 잘렸습니다")
    return payload[start:pos], pos


def load_image(path: Union[str, Path]) -> Image:
    """
    PPM/PGM 로드 (값은 v/255)

    Args:
        path: 이미지 경로

    Returns:
        이미지
    """
    payload = Path(path).read_bytes()
    magic, pos = _read_token(payload, 0)
    if magic == b"P6":
        channels = 3
    elif magic == b"P5":
        channels = 1
    else:
        raise ImageFormatError(f"지원하지 않는 매직 넘버: {magic!r}")

    try:
        width_tok, pos = _read_token(payload, pos)
        height_tok, pos = _read_token(payload, pos)
        maxval_tok, pos = _read_token(payload, pos)
        width, height, maxval = int(width_tok), int(height_tok), int(maxval_tok)
    except ValueError as e:
        raise ImageFormatError(f"헤더 파싱 실패: {path}") from e
    if maxval != 255:
        raise ImageFormatError(f"maxval 255만 지원합니다: {maxval}")
    if width < 1 or height < 1:
        raise ImageFormatError(f"이미지 크기가 올바르지 않습니다: {width}x{height}")

    # 헤더 뒤 공백 한 글자
    pos += 1
    expected = width * height * channels
    raster = payload[pos:pos + expected]
    if len(raster) < expected:
        raise ImageFormatError(f"페이로드가 잘렸습니다: {len(raster)} < {expected} bytes")

    data = np.frombuffer(raster, dtype=np.uint8).reshape(height, width, channels) / 255.0
    return Image(data)


def save_image(image: Image, path: Union[str, Path]):
    """
    PPM(3채널)/PGM(1채널) 저장 (round(v*255))

    Args:
        image: 저장할 이미지
        path: 출력 경로
    """
    path = Path(path)
    magic = "P6" if image.channels == 3 else "P5"
    raster = np.clip(np.round(image.data * 255.0), 0, 255).astype(np.uint8)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "wb") as f:
        f.write(f"{magic}\n{image.width} {image.height}\n255\n".encode("ascii"))
        f.write(raster.tobytes())


def save_scalar_map(values: np.ndarray, path: Union[str, Path], mask: Optional[np.ndarray] = None):
    """
    실수 맵을 아핀 정규화하여 PGM으로 저장 (디버깅용)

    Args:
        values: (H, W) 실수 맵 (근접도, 블렌딩 가중치 등)
        path: 출력 경로
        mask: 정규화 범위 계산에 사용할 픽셀 (기본: 전체), 나머지는 0
    """
    values = np.asarray(values, dtype=np.float64)
    mask = np.ones(values.shape, dtype=bool) if mask is None else np.asarray(mask, dtype=bool)
    normalized = np.zeros_like(values)
    if mask.any():
        low, high = values[mask].min(), values[mask].max()
        span = high - low
        normalized[mask] = (values[mask] - low) / span if span > 0 else 1.0
    save_image(Image(normalized), path)
    logger.debug(f"스칼라 맵 저장: {path}")
