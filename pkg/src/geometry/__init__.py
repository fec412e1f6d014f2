"""
기하 기본 요소
메시, 카메라, 이미지 및 파일 입출력
"""

from src.geometry.camera import Camera, Projection, load_camera, project, save_camera
from src.geometry.image import Image, load_image, save_image, save_scalar_map
from src.geometry.mesh import TriMesh, bbox_bounds, bbox_diagonal, box_mesh, empty_mesh, load_mesh, save_mesh

__all__ = [
    "Camera",
    "Projection",
    "load_camera",
    "project",
    "save_camera",
    "Image",
    "load_image",
    "save_image",
    "save_scalar_map",
    "TriMesh",
    "bbox_bounds",
    "bbox_diagonal",
    "box_mesh",
    "empty_mesh",
    "load_mesh",
    "save_mesh",
]
