"""
공용 테스트 픽스처
작은 카메라, 박스 메시, 시드 고정 난수, 임시 장면 번들
"""

import sys
from pathlib import Path

import numpy as np
import pytest

project_root = Path(__file__).parent.parent
sys.path.insert(0, str(project_root))

from src.config.loader import OptimConfig, SynthConfig
from src.geometry.camera import Camera
from src.geometry.mesh import TriMesh, box_mesh
from src.synth.generator import generate_scene, render_sequence, save_scene_bundle

BASE_COLOR = (0.2, 0.4, 0.8)
MOVABLE_COLOR = (0.9, 0.3, 0.1)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def small_camera():
    """원점을 비스듬히 보는 32×32 카메라"""
    return Camera.look_at((1.0, 1.2, 3.0), (0.0, 0.0, 0.0), focal=1.2, resolution=(32, 32))


@pytest.fixture
def exact_camera():
    """
    정면 32×32 카메라 (fx = 32, z축 거리 4)

    z=0 평면의 x = ±0.5 가 정확히 픽셀 12, 20으로 투영된다.
    """
    return Camera.look_at((0.0, 0.0, 4.0), (0.0, 0.0, 0.0), focal=1.0, resolution=(32, 32))


@pytest.fixture
def base_box():
    return box_mesh((0.0, 0.0, 0.0), (1.0, 1.0, 1.0), BASE_COLOR)


@pytest.fixture
def movable_box():
    """베이스 앞면(+z)에 붙은 얇은 박스"""
    return box_mesh((0.0, 0.0, 0.6), (0.6, 0.6, 0.2), MOVABLE_COLOR)


@pytest.fixture
def base_quad():
    """z=0 평면의 2×2 사각형 (exact_camera 기준 픽셀 8..24)"""
    vertices = [(-1.0, -1.0, 0.0), (1.0, -1.0, 0.0), (1.0, 1.0, 0.0), (-1.0, 1.0, 0.0)]
    return TriMesh(vertices, [(0, 1, 2), (0, 2, 3)], [(0.1, 0.2, 0.3)] * 2)


@pytest.fixture
def tilted_triangle():
    """
    베이스 사각형 바로 앞의 기울어진 삼각형 (z = 0.01 + 0.02·x)

    exact_camera에서 모든 모서리가 픽셀 중심과 0.08픽셀 이상 떨어져 있다.
    """
    xy = [(-0.45, -0.4), (0.45, -0.4), (0.0, 0.45)]
    vertices = [(x, y, 0.01 + 0.02 * x) for x, y in xy]
    return TriMesh(vertices, [(0, 1, 2)], [(0.9, 0.8, 0.7)])


@pytest.fixture
def tiny_optim_config():
    return OptimConfig(iterations=3, warmup_iterations=1, restarts=2, continue_top=1, seed=3)


@pytest.fixture
def tiny_synth_config():
    return SynthConfig(resolution=32, frames=3)


@pytest.fixture
def scene_bundle(tmp_path, tiny_synth_config):
    """프레임이 포함된 32×32 서랍 장면 번들"""
    gt = generate_scene(7, 0, template="drawer", config=tiny_synth_config)
    frames = render_sequence(gt)
    return save_scene_bundle(gt, tmp_path / "scenes" / "scene_000", frames)
