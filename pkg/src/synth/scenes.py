"""
합성 장면 템플릿
모든 템플릿이 상속받을 추상 베이스 클래스와 서랍/문/노트북 구현
"""

from abc import ABC, abstractmethod
from dataclasses import dataclass
from typing import Dict, Optional, Tuple, Type

import numpy as np

from src.articulation.joint import JointType
from src.geometry.camera import Camera
from src.geometry.mesh import TriMesh, box_mesh
from src.utils.exceptions import InvalidInputError

# 면 방향에 따른 음영 (평면 색상만으로 면이 구분되도록)
LIGHT_DIR = np.array([0.4, 0.8, 0.6]) / np.linalg.norm([0.4, 0.8, 0.6])
AMBIENT = 0.55


@dataclass(frozen=True, eq=False)
class SceneParts:
    """템플릿이 생성한 두 파트와 기본 카메라"""

    base: TriMesh
    movable: TriMesh
    camera: Camera


def shaded_box(center, size, color) -> TriMesh:
    """면 법선 기반 고정 음영을 입힌 박스"""
    box = box_mesh(center, size)
    lambert = np.abs(box.face_normals() @ LIGHT_DIR)
    shade = AMBIENT + (1.0 - AMBIENT) * lambert
    colors = np.clip(np.asarray(color, dtype=np.float64)[None, :] * shade[:, None], 0.0, 1.0)
    return TriMesh(box.vertices, box.faces, colors)


class BaseSceneTemplate(ABC):
    """장면 템플릿 추상 베이스 클래스"""

    joint_type: JointType

    def __init__(self, name: str, params: Optional[Dict] = None):
        """
        초기화

        Args:
            name: 템플릿 이름
            params: 템플릿 파라미터
        """
        self.name = name
        self.params = params or {}

    @abstractmethod
    def build(self, rng: np.random.Generator, resolution: int) -> SceneParts:
        """
        파트 메시와 카메라 생성

        Args:
            rng: 치수 지터용 난수 생성기
            resolution: 이미지 해상도 (정사각형)

        Returns:
            장면 파트
        """

    @abstractmethod
    def accepts_axis(self, axis_pos: np.ndarray, axis_dir: np.ndarray, low: np.ndarray, high: np.ndarray) -> bool:
        """
        후보 축 허용 여부 (움직이는 파트 바운딩 박스 기준)

        Args:
            axis_pos: 후보 축 위치
            axis_dir: 후보 축 방향
            low: 바운딩 박스 최소
            high: 바운딩 박스 최대
        """

    def camera(self, resolution: int) -> Camera:
        eye = self.params.get("eye", (1.3, 1.1, 2.8))
        return Camera.look_at(eye, (0.0, 0.0, 0.0), focal=self.params.get("focal", 1.2),
                              resolution=(resolution, resolution))

    def _jitter(self, rng: np.random.Generator) -> float:
        return float(rng.uniform(0.9, 1.1))


class DrawerTemplate(BaseSceneTemplate):
    """캐비닛 + 앞으로 미끄러지는 서랍 (병진)"""

    joint_type = JointType.PRISMATIC

    def __init__(self, params: Optional[Dict] = None):
        super().__init__("drawer", params)

    def build(self, rng: np.random.Generator, resolution: int) -> SceneParts:
        width = 1.0 * self._jitter(rng)
        height = 0.8 * self._jitter(rng)
        depth = 0.8
        body = shaded_box((0.0, 0.0, 0.0), (width, height, depth), (0.55, 0.35, 0.2))
        drawer = shaded_box(
            (0.0, -0.1 * height, 0.1 * depth + 0.03),
            (0.8 * width, 0.45 * height, 0.8 * depth),
            (0.85, 0.75, 0.4),
        )
        return SceneParts(body, drawer, self.camera(resolution))

    def accepts_axis(self, axis_pos, axis_dir, low, high) -> bool:
        # 앞면 법선만
        return bool(axis_dir[2] > 0.5)


class DoorTemplate(BaseSceneTemplate):
    """캐비닛 + 앞면 경첩 문 (회전)"""

    joint_type = JointType.REVOLUTE

    def __init__(self, params: Optional[Dict] = None):
        super().__init__("door", params)

    def build(self, rng: np.random.Generator, resolution: int) -> SceneParts:
        width = 1.0 * self._jitter(rng)
        height = 1.2 * self._jitter(rng)
        depth = 0.8
        body = shaded_box((0.0, 0.0, 0.0), (width, height, depth), (0.3, 0.45, 0.6))
        door = shaded_box(
            (0.0, 0.0, 0.5 * depth + 0.03),
            (0.96 * width, 0.96 * height, 0.06),
            (0.9, 0.5, 0.35),
        )
        return SceneParts(body, door, self.camera(resolution))

    def accepts_axis(self, axis_pos, axis_dir, low, high) -> bool:
        # 문 뒷면의 세로 모서리
        return bool(abs(axis_dir[1]) > 0.5 and np.isclose(axis_pos[2], low[2]))


class LaptopTemplate(BaseSceneTemplate):
    """본체 슬래브 + 뒤쪽 경첩 덮개 (회전)"""

    joint_type = JointType.REVOLUTE

    def __init__(self, params: Optional[Dict] = None):
        super().__init__("laptop", params)

    def build(self, rng: np.random.Generator, resolution: int) -> SceneParts:
        width = 1.2 * self._jitter(rng)
        depth = 0.8 * self._jitter(rng)
        thickness = 0.06
        base = shaded_box((0.0, -0.3, 0.0), (width, thickness, depth), (0.35, 0.35, 0.4))
        lid = shaded_box(
            (0.0, -0.3 + 0.5 * thickness + 0.5 * depth, -0.5 * depth + 0.5 * thickness),
            (width, depth, thickness),
            (0.7, 0.72, 0.8),
        )
        return SceneParts(base, lid, self.camera(resolution))

    def accepts_axis(self, axis_pos, axis_dir, low, high) -> bool:
        # 덮개 아래쪽 뒷 모서리 (가로)
        return bool(abs(axis_dir[0]) > 0.5 and np.isclose(axis_pos[1], low[1]) and np.isclose(axis_pos[2], low[2]))


SCENE_MAP: Dict[str, Type[BaseSceneTemplate]] = {
    "drawer": DrawerTemplate,
    "door": DoorTemplate,
    "laptop": LaptopTemplate,
}

TEMPLATES_BY_TYPE: Dict[JointType, Tuple[str, ...]] = {
    JointType.PRISMATIC: ("drawer",),
    JointType.REVOLUTE: ("door", "laptop"),
}


def get_template(name: str, params: Optional[Dict] = None) -> BaseSceneTemplate:
    """
    이름으로 템플릿 생성

    Args:
        name: 템플릿 이름 (drawer, door, laptop)
        params: 템플릿 파라미터

    Returns:
        템플릿 인스턴스
    """
    if name not in SCENE_MAP:
        raise InvalidInputError(f"알 수 없는 장면 템플릿: {name} (가능: {', '.join(SCENE_MAP)})")
    return SCENE_MAP[name](params)
