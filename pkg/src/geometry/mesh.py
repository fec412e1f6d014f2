"""
삼각형 메시 모듈
OBJ 입출력, 바운딩 박스, 부분 메시 추출
"""

from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Sequence, Union

import numpy as np
from loguru import logger

from src.utils.exceptions import InvalidInputError, MeshFormatError

DEFAULT_FACE_COLOR = (0.7, 0.7, 0.7)

# 면 색상 확장 주석 (usemtl 없이 면 단위 평면 색상 보존)
FACE_COLOR_TAG = "# fc"


def _frozen(array: np.ndarray) -> np.ndarray:
    array = np.ascontiguousarray(array)
    array.setflags(write=False)
    return array


@dataclass(frozen=True, eq=False)
class TriMesh:
    """
    인덱스 삼각형 메시

    vertices: (V, 3) float64, faces: (F, 3) int64, face_colors: (F, 3) [0,1] 또는 None
    """

    vertices: np.ndarray
    faces: np.ndarray
    face_colors: Optional[np.ndarray] = None

    def __post_init__(self):
        vertices = np.asarray(self.vertices, dtype=np.float64).reshape(-1, 3)
        faces = np.asarray(self.faces, dtype=np.int64).reshape(-1, 3)

        if faces.size and (faces.min() < 0 or faces.max() >= len(vertices)):
            raise InvalidInputError(
                f"면 인덱스 범위 초과: 정점 {len(vertices)}개, 최대 인덱스 {faces.max()}"
            )
        if faces.size:
            degenerate = (faces[:, 0] == faces[:, 1]) & (faces[:, 1] == faces[:, 2])
            if degenerate.any():
                raise InvalidInputError(f"퇴화 면 (세 인덱스 동일): {np.flatnonzero(degenerate)[:5].tolist()}")

        colors = self.face_colors
        if colors is not None:
            colors = np.asarray(colors, dtype=np.float64).reshape(-1, 3)
            if len(colors) != len(faces):
                raise InvalidInputError(f"면 색상 개수 불일치: 색상 {len(colors)}개 != 면 {len(faces)}개")
            if colors.size and (colors.min() < 0.0 or colors.max() > 1.0):
                raise InvalidInputError("면 색상은 [0,1] 범위여야 합니다")
            colors = _frozen(colors)

        object.__setattr__(self, "vertices", _frozen(vertices))
        object.__setattr__(self, "faces", _frozen(faces))
        object.__setattr__(self, "face_colors", colors)

    @property
    def vertex_count(self) -> int:
        return len(self.vertices)

    @property
    def face_count(self) -> int:
        return len(self.faces)

    def colors_or_default(self) -> np.ndarray:
        """면 색상 (없으면 기본 회색)"""
        if self.face_colors is not None:
            return self.face_colors
        return np.tile(np.asarray(DEFAULT_FACE_COLOR), (self.face_count, 1))

    def with_vertices(self, vertices: np.ndarray) -> "TriMesh":
        """위상/색상은 유지하고 정점만 교체"""
        return TriMesh(vertices, self.faces, self.face_colors)

    def submesh(self, face_mask: Union[np.ndarray, Sequence[bool]]) -> "TriMesh":
        """
        선택된 면과 참조 정점만으로 부분 메시 생성

        Args:
            face_mask: 면별 선택 여부 (F,)

        Returns:
            정점 순서가 보존되고 재색인된 부분 메시
        """
        face_mask = np.asarray(face_mask, dtype=bool)
        if face_mask.shape != (self.face_count,):
            raise InvalidInputError("face_mask 길이가 면 개수와 다릅니다")
        faces = self.faces[face_mask]
        used = np.zeros(self.vertex_count, dtype=bool)
        used[faces.ravel()] = True
        remap = np.full(self.vertex_count, -1, dtype=np.int64)
        remap[used] = np.arange(used.sum())
        colors = self.face_colors[face_mask] if self.face_colors is not None else None
        return TriMesh(self.vertices[used], remap[faces], colors)

    def merge(self, other: "TriMesh") -> "TriMesh":
        """두 메시를 하나로 결합 (other의 면 인덱스는 뒤로 밀림)"""
        faces = np.vstack([self.faces, other.faces + self.vertex_count])
        colors = None
        if self.face_colors is not None or other.face_colors is not None:
            colors = np.vstack([self.colors_or_default(), other.colors_or_default()])
        return TriMesh(np.vstack([self.vertices, other.vertices]), faces, colors)

    def face_normals(self) -> np.ndarray:
        """
        면 단위 법선 (면적 0인 면은 영벡터)

        Returns:
            (F, 3) 단위 법선
        """
        tri = self.vertices[self.faces]
        cross = np.cross(tri[:, 1] - tri[:, 0], tri[:, 2] - tri[:, 0])
        norm = np.linalg.norm(cross, axis=1)
        normals = np.zeros_like(cross)
        valid = norm > 1e-15
        normals[valid] = cross[valid] / norm[valid, None]
        return normals

    def face_centroids(self) -> np.ndarray:
        """면 무게중심 (F, 3)"""
        return self.vertices[self.faces].mean(axis=1)


def empty_mesh() -> TriMesh:
    """빈 메시"""
    return TriMesh(np.zeros((0, 3)), np.zeros((0, 3), dtype=np.int64))


def box_mesh(
    center: Sequence[float],
    size: Sequence[float],
    color: Optional[Sequence[float]] = None,
) -> TriMesh:
    """
    축 정렬 박스 메시 (정점 8개, 면 12개, 바깥쪽 감기)

    Args:
        center: 박스 중심
        size: 축별 전체 길이
        color: 평면 면 색상 (RGB)

    Returns:
        박스 메시
    """
    center = np.asarray(center, dtype=np.float64)
    half = 0.5 * np.asarray(size, dtype=np.float64)
    corners = np.array(
        [[x, y, z] for x in (-1, 1) for y in (-1, 1) for z in (-1, 1)], dtype=np.float64
    )
    vertices = center + corners * half
    # 정점 인덱스 = 4*ix + 2*iy + iz
    faces = np.array(
        [
            [0, 1, 3], [0, 3, 2],  # -x
            [4, 6, 7], [4, 7, 5],  # +x
            [0, 4, 5], [0, 5, 1],  # -y
            [2, 3, 7], [2, 7, 6],  # +y
            [0, 2, 6], [0, 6, 4],  # -z
            [1, 5, 7], [1, 7, 3],  # +z
        ],
        dtype=np.int64,
    )
    colors = None if color is None else np.tile(np.asarray(color, dtype=np.float64), (12, 1))
    return TriMesh(vertices, faces, colors)


def bbox_diagonal(mesh: TriMesh) -> float:
    """
    축 정렬 바운딩 박스 대각선 길이

    Args:
        mesh: 대상 메시 (정점 1개 이상)

    Returns:
        대각선 길이
    """
    if mesh.vertex_count == 0:
        raise InvalidInputError("빈 메시의 바운딩 박스는 정의되지 않습니다")
    extent = mesh.vertices.max(axis=0) - mesh.vertices.min(axis=0)
    return float(np.linalg.norm(extent))


def bbox_bounds(mesh: TriMesh) -> tuple[np.ndarray, np.ndarray]:
    """바운딩 박스 (최소, 최대)"""
    if mesh.vertex_count == 0:
        raise InvalidInputError("빈 메시의 바운딩 박스는 정의되지 않습니다")
    return mesh.vertices.min(axis=0), mesh.vertices.max(axis=0)


def _parse_index(token: str, vertex_count: int, line_no: int) -> int:
    head = token.split("/")[0]
    try:
        index = int(head)
    except ValueError as e:
        raise MeshFormatError(f"{line_no}행: 면 인덱스 파싱 실패 '{token}'") from e
    if index < 0:
        index = vertex_count + index
    else:
        index -= 1
    if index < 0 or index >= vertex_count:
        raise MeshFormatError(f"{line_no}행: 면 인덱스 범위 초과 '{token}' (정점 {vertex_count}개)")
    return index


def load_mesh(path: Union[str, Path]) -> TriMesh:
    """
    삼각형 전용 OBJ 로드

    Args:
        path: OBJ 파일 경로

    Returns:
        정점 순서가 보존된 메시
    """
    path = Path(path)
    vertices: list[tuple[float, float, float]] = []
    faces: list[tuple[int, int, int]] = []
    colors: list[Optional[tuple[float, float, float]]] = []
    pending_color: Optional[tuple[float, float, float]] = None

    with open(path, "r", encoding="utf-8") as f:
        for line_no, raw in enumerate(f, start=1):
            line = raw.strip()
            if not line:
                continue
            if line.startswith(FACE_COLOR_TAG + " "):
                parts = line[len(FACE_COLOR_TAG):].split()
                try:
                    pending_color = tuple(float(p) for p in parts)  # type: ignore[assignment]
                except ValueError as e:
                    raise MeshFormatError(f"{line_no}행: 면 색상 파싱 실패") from e
                if len(pending_color) != 3:
                    raise MeshFormatError(f"{line_no}행: 면 색상은 RGB 3개 값이어야 합니다")
                continue
            if line.startswith("#"):
                continue

            tokens = line.split()
            tag = tokens[0]
            if tag == "v":
                if len(tokens) < 4:
                    raise MeshFormatError(f"{line_no}행: 정점 좌표가 부족합니다")
                try:
                    vertices.append((float(tokens[1]), float(tokens[2]), float(tokens[3])))
                except ValueError as e:
                    raise MeshFormatError(f"{line_no}행: 정점 좌표 파싱 실패") from e
            elif tag == "f":
                if len(tokens) != 4:
                    raise MeshFormatError(
                        f"{line_no}행: 삼각형 면만 지원합니다 (정점 {len(tokens) - 1}개)"
                    )
                face = tuple(_parse_index(t, len(vertices), line_no) for t in tokens[1:])
                faces.append(face)  # type: ignore[arg-type]
                colors.append(pending_color)
                pending_color = None
            # vn, vt, o, g, s 등은 무시

    face_colors = None
    if any(c is not None for c in colors):
        face_colors = np.array([c if c is not None else DEFAULT_FACE_COLOR for c in colors])

    try:
        mesh = TriMesh(
            np.array(vertices, dtype=np.float64).reshape(-1, 3),
            np.array(faces, dtype=np.int64).reshape(-1, 3),
            face_colors,
        )
    except InvalidInputError as e:
        raise MeshFormatError(f"{path}: {e}") from e

    logger.debug(f"메시 로드 완료: {path} (정점 {mesh.vertex_count}개, 면 {mesh.face_count}개)")
    return mesh


def save_mesh(mesh: TriMesh, path: Union[str, Path]):
    """
    OBJ 저장 (좌표당 유효숫자 9자리)

    Args:
        mesh: 저장할 메시
        path: 출력 경로
    """
    path = Path(path)
    lines = [f"v {x:.9g} {y:.9g} {z:.9g}" for x, y, z in mesh.vertices]
    for i, (a, b, c) in enumerate(mesh.faces):
        if mesh.face_colors is not None:
            r, g, bl = mesh.face_colors[i]
            lines.append(f"{FACE_COLOR_TAG} {r:.9g} {g:.9g} {bl:.9g}")
        lines.append(f"f {a + 1} {b + 1} {c + 1}")

    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as f:
        f.write("\n".join(lines) + ("\n" if lines else ""))
    logger.debug(f"메시 저장 완료: {path}")
