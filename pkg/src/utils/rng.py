"""
시드 기반 난수 스트림 분배

하나의 시드에서 이름 붙은 독립 스트림을 파생한다.
이름 → 정수 변환은 CRC32를 사용하므로 파이썬 해시 랜덤화와 무관하게 고정된다.
"""

import zlib

import numpy as np


def stream(seed: int, *names: object) -> np.random.Generator:
    """
    이름 붙은 난수 스트림 생성

    Args:
        seed: 실행 전체의 기본 시드
        *names: 스트림 경로 (예: "restart", 3)

    Returns:
        독립적인 numpy Generator
    """
    keys = [int(seed) & 0xFFFFFFFF]
    for name in names:
        keys.append(zlib.crc32(str(name).encode("utf-8")))
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(keys)))
