#!/usr/bin/env python3
"""
관절 물체 추정 툴킷 실행 스크립트
파트 분할, 합성 데이터 생성, 관절 추정, 렌더링, 벤치마크 평가
"""

import sys
from pathlib import Path

project_root = Path(__file__).parent
sys.path.insert(0, str(project_root))

from src.cli import main


if __name__ == "__main__":
    sys.exit(main())
