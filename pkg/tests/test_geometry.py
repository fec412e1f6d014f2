"""
geometry 모듈 테스트
"""

import json

import numpy as np
import pytest

from src.geometry.camera import Camera, load_camera, project, save_camera
from src.geometry.image import Image, load_image, save_image, save_scalar_map
from src.geometry.mesh import TriMesh, bbox_bounds, bbox_diagonal, box_mesh, empty_mesh, load_mesh, save_mesh
from src.utils.exceptions import ImageFormatError, InvalidInputError, MeshFormatError, SchemaError


class TestTriMesh:
    def test_box_mesh_is_outward_wound(self):
        mesh = box_mesh((1.0, 2.0, 3.0), (2.0, 1.0, 0.5))
        assert mesh.vertex_count == 8
        assert mesh.face_count == 12
        outward = mesh.face_centroids() - np.array([1.0, 2.0, 3.0])
        assert np.all(np.sum(mesh.face_normals() * outward, axis=1) > 0)

    def test_out_of_range_face_rejected(self):
        with pytest.raises(InvalidInputError):
            TriMesh(np.zeros((3, 3)), [(0, 1, 3)])

    def test_degenerate_face_rejected(self):
        with pytest.raises(InvalidInputError):
            TriMesh(np.eye(3), [(1, 1, 1)])

    def test_mesh_is_immutable(self, base_box):
        with pytest.raises(ValueError):
            base_box.vertices[0, 0] = 5.0

    def test_submesh_reindexes_in_order(self, base_box):
        mask = np.zeros(base_box.face_count, dtype=bool)
        mask[10:] = True  # +z 면
        sub = base_box.submesh(mask)
        assert sub.face_count == 2
        assert sub.vertex_count == 4
        np.testing.assert_array_equal(sub.vertices[:, 2], 0.5)
        np.testing.assert_array_equal(sub.face_colors, base_box.face_colors[10:])

    def test_merge_offsets_indices(self, base_box, movable_box):
        merged = base_box.merge(movable_box)
        assert merged.face_count == 24
        np.testing.assert_array_equal(merged.faces[12:], movable_box.faces + 8)

    def test_bbox(self, base_box):
        assert bbox_diagonal(base_box) == pytest.approx(np.sqrt(3.0))
        low, high = bbox_bounds(base_box)
        np.testing.assert_array_equal(low, [-0.5, -0.5, -0.5])
        np.testing.assert_array_equal(high, [0.5, 0.5, 0.5])

    def test_bbox_of_empty_mesh_rejected(self):
        with pytest.raises(InvalidInputError):
            bbox_diagonal(empty_mesh())


class TestObjIO:
    def test_round_trip_preserves_order_and_colors(self, tmp_path, movable_box):
        path = tmp_path / "box.obj"
        save_mesh(movable_box, path)
        loaded = load_mesh(path)
        np.testing.assert_allclose(loaded.vertices, movable_box.vertices, rtol=1e-8)
        np.testing.assert_array_equal(loaded.faces, movable_box.faces)
        np.testing.assert_allclose(loaded.face_colors, movable_box.face_colors, rtol=1e-8)

    def test_plain_obj_has_no_colors(self, tmp_path):
        path = tmp_path / "tri.obj"
        path.write_text("# comment\nv 0 0 0\nv 1 0 0\nv 0 1 0\nvn 0 0 1\nf 1//1 2//1 -1//1\n")
        mesh = load_mesh(path)
        assert mesh.face_colors is None
        np.testing.assert_array_equal(mesh.faces, [[0, 1, 2]])

    def test_quad_face_rejected(self, tmp_path):
        path = tmp_path / "quad.obj"
        path.write_text("v 0 0 0\nv 1 0 0\nv 1 1 0\nv 0 1 0\nf 1 2 3 4\n")
        with pytest.raises(MeshFormatError):
            load_mesh(path)

    def test_index_out_of_range_rejected(self, tmp_path):
        path = tmp_path / "bad.obj"
        path.write_text("v 0 0 0\nv 1 0 0\nv 0 1 0\nf 1 2 4\n")
        with pytest.raises(MeshFormatError):
            load_mesh(path)


class TestCamera:
    def test_look_at_pose_is_rigid(self, small_camera):
        rotation = small_camera.rotation
        np.testing.assert_allclose(rotation @ rotation.T, np.eye(3), atol=1e-12)
        assert np.linalg.det(rotation) == pytest.approx(1.0)

    def test_project_target_hits_principal_point(self, exact_camera):
        result = project(exact_camera, (0.0, 0.0, 0.0))
        assert result.pixel == (16.0, 16.0)
        assert result.proximity == -4.0
        assert result.behind is False

    def test_image_axes(self, exact_camera):
        # 월드 +x → 이미지 오른쪽, 월드 +y → 이미지 위쪽 (y 감소)
        right = project(exact_camera, (0.5, 0.0, 0.0)).pixel
        up = project(exact_camera, (0.0, 0.5, 0.0)).pixel
        assert right == (20.0, 16.0)
        assert up == (16.0, 12.0)

    def test_point_behind_camera(self, exact_camera):
        assert project(exact_camera, (0.0, 0.0, 6.0)).behind is True

    def test_point_on_camera_plane_rejected(self, exact_camera):
        with pytest.raises(InvalidInputError):
            project(exact_camera, (1.0, 0.0, 4.0))

    def test_vectorized_projection_matches_single(self, small_camera, rng):
        points = rng.uniform(-0.5, 0.5, size=(20, 3))
        pixels, proximity, behind = small_camera.project_points(points)
        for k, point in enumerate(points):
            single = project(small_camera, point)
            np.testing.assert_allclose(pixels[k], single.pixel, rtol=1e-12)
            assert proximity[k] == pytest.approx(single.proximity)
        assert not behind.any()

    def test_json_round_trip(self, tmp_path, small_camera):
        path = tmp_path / "camera.json"
        save_camera(small_camera, path)
        loaded = load_camera(path)
        np.testing.assert_array_equal(loaded.pose, small_camera.pose)
        assert loaded.resolution == small_camera.resolution
        assert loaded.focal == small_camera.focal

    def test_non_orthonormal_pose_is_schema_error(self, tmp_path):
        path = tmp_path / "camera.json"
        pose = np.eye(4)
        pose[0, 0] = 2.0
        path.write_text(json.dumps(
            {"focal": [10, 10], "principal": [4, 4], "pose": pose.tolist(), "resolution": [8, 8]}
        ))
        with pytest.raises(SchemaError):
            load_camera(path)

    def test_missing_camera_file(self, tmp_path):
        with pytest.raises(FileNotFoundError, match="input not found"):
            load_camera(tmp_path / "nope.json")

    def test_invalid_focal_rejected(self):
        with pytest.raises(InvalidInputError):
            Camera((0.0, 1.0), (0.0, 0.0), np.eye(4), (4, 4))


class TestImageIO:
    def test_ppm_round_trip_is_exact(self, tmp_path, rng):
        data = rng.integers(0, 256, size=(5, 7, 3)) / 255.0
        path = tmp_path / "img.ppm"
        save_image(Image(data), path)
        loaded = load_image(path)
        assert loaded.resolution == (7, 5)
        np.testing.assert_array_equal(loaded.data, data)

    def test_pgm_with_header_comment(self, tmp_path):
        path = tmp_path / "mask.pgm"
        path.write_bytes(b"P5\n# mask\n2 2\n255\n" + bytes([0, 255, 255, 0]))
        mask = load_image(path)
        assert mask.channels == 1
        np.testing.assert_array_equal(mask.data[:, :, 0], [[0.0, 1.0], [1.0, 0.0]])

    def test_unsupported_magic(self, tmp_path):
        path = tmp_path / "img.ppm"
        path.write_bytes(b"P3\n1 1\n255\n0 0 0\n")
        with pytest.raises(ImageFormatError):
            load_image(path)

    def test_truncated_payload(self, tmp_path):
        path = tmp_path / "img.ppm"
        path.write_bytes(b"P6\n2 2\n255\n" + bytes(5))
        with pytest.raises(ImageFormatError):
            load_image(path)

    def test_out_of_range_values_rejected(self):
        with pytest.raises(InvalidInputError):
            Image(np.full((2, 2, 3), 1.5))

    def test_scalar_map_is_normalized(self, tmp_path):
        path = tmp_path / "prox.pgm"
        save_scalar_map(np.array([[-4.0, -3.0], [-2.0, -3.0]]), path)
        np.testing.assert_array_equal(load_image(path).data[:, :, 0], [[0.0, 128 / 255], [1.0, 128 / 255]])
