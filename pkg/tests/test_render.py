"""
render 모듈 테스트
래스터화 규칙, 소프트 블렌딩 극한/대칭, 역전파 유한 차분
"""

import numpy as np
import pytest

from src.geometry.image import Image
from src.geometry.mesh import TriMesh, empty_mesh
from src.render.backward import RenderContext, backward, loss_and_vertex_grads
from src.render.blend import blend_colors, blend_weights, hard_composite, image_loss, render_pred, soft_blend
from src.render.rasterizer import EMPTY_PROXIMITY, NO_FACE, rasterize, render_silhouette
from src.utils.exceptions import InvalidInputError

RED = (1.0, 0.0, 0.0)
GREEN = (0.0, 1.0, 0.0)


def flat_triangle(z, color, size=0.5):
    vertices = [(-size, -size, z), (size, -size, z), (0.0, size, z)]
    return TriMesh(vertices, [(0, 1, 2)], [color])


class TestRasterize:
    def test_empty_mesh_is_background(self, exact_camera):
        target = rasterize(empty_mesh(), exact_camera, background=(0.5, 0.5, 0.5))
        assert not target.coverage.any()
        assert np.all(target.proximity == EMPTY_PROXIMITY)
        assert np.all(target.face_id == NO_FACE)
        np.testing.assert_array_equal(target.color.data, 0.5)

    def test_background_out_of_range_rejected(self, exact_camera, base_quad):
        with pytest.raises(InvalidInputError):
            rasterize(base_quad, exact_camera, background=(1.5, 0.0, 0.0))

    def test_quad_covers_exact_pixel_block(self, exact_camera, base_quad):
        target = rasterize(base_quad, exact_camera)
        assert target.coverage.sum() == 256
        assert target.coverage[8:24, 8:24].all()
        np.testing.assert_allclose(target.proximity[target.coverage], -4.0, rtol=1e-12)

    def test_shared_edge_owned_by_exactly_one_face(self, exact_camera, base_quad):
        # 대각선 위에 픽셀 중심이 정확히 놓인다
        first = rasterize(TriMesh(base_quad.vertices, base_quad.faces[:1]), exact_camera).coverage
        second = rasterize(TriMesh(base_quad.vertices, base_quad.faces[1:]), exact_camera).coverage
        whole = rasterize(base_quad, exact_camera).coverage
        assert not (first & second).any()
        np.testing.assert_array_equal(first | second, whole)

    def test_perspective_correct_depth(self, exact_camera, tilted_triangle):
        target = rasterize(tilted_triangle, exact_camera)
        assert target.coverage.any()
        cam = exact_camera.to_camera_space(tilted_triangle.vertices)
        normal = np.cross(cam[1] - cam[0], cam[2] - cam[0])
        rays = exact_camera.pixel_rays()[target.coverage]
        expected = -(normal @ cam[0]) / (rays @ normal)
        np.testing.assert_allclose(target.proximity[target.coverage], expected, rtol=1e-10)
        np.testing.assert_allclose(target.barycentrics[target.coverage].sum(axis=1), 1.0, atol=1e-12)

    @pytest.mark.parametrize("order", [(0.0, 0.5), (0.5, 0.0)])
    def test_nearer_face_wins(self, exact_camera, order):
        far_z, near_z = (0.0, 0.5)
        first = flat_triangle(order[0], RED if order[0] == far_z else GREEN)
        second = flat_triangle(order[1], RED if order[1] == far_z else GREEN)
        target = rasterize(first.merge(second), exact_camera)
        covered = target.color.data[target.coverage]
        # 가까운 삼각형(초록)이 먼 삼각형(빨강)을 모두 가린다
        np.testing.assert_array_equal(covered, np.tile(GREEN, (len(covered), 1)))
        np.testing.assert_allclose(target.proximity[target.coverage], -(4.0 - near_z), rtol=1e-12)

    def test_exact_tie_goes_to_lower_face_index(self, exact_camera):
        vertices = flat_triangle(0.0, RED).vertices
        mesh = TriMesh(vertices, [(0, 1, 2), (0, 1, 2)], [RED, GREEN])
        target = rasterize(mesh, exact_camera)
        assert np.all(target.face_id[target.coverage] == 0)

    def test_face_behind_camera_is_skipped(self, exact_camera):
        mesh = TriMesh([(-0.5, -0.5, 0.0), (0.5, -0.5, 0.0), (0.0, 0.5, 5.0)], [(0, 1, 2)])
        assert not rasterize(mesh, exact_camera).coverage.any()

    def test_silhouette_is_binary(self, small_camera, movable_box):
        silhouette = render_silhouette(movable_box, small_camera)
        assert silhouette.channels == 1
        assert set(np.unique(silhouette.data)) <= {0.0, 1.0}
        assert silhouette.data.sum() > 0


class TestSoftBlend:
    def test_weights_are_monotone(self):
        delta = np.linspace(-0.5, 0.5, 1001)
        weight, complement = blend_weights(delta, 500.0)
        assert np.all(np.diff(weight) >= 0)
        assert np.all(np.diff(complement) <= 0)
        np.testing.assert_allclose(weight + complement, 1.0, atol=1e-15)

    def test_swap_symmetry_is_exact(self, small_camera, base_box, movable_box):
        base = rasterize(base_box, small_camera)
        mov = rasterize(movable_box, small_camera)
        np.testing.assert_array_equal(
            soft_blend(mov, base, 500.0).image.data, soft_blend(base, mov, 500.0).image.data
        )

    def test_equal_colors_stay_exact(self, small_camera, base_box, movable_box):
        color = (0.3, 0.6, 0.9)
        same_base = TriMesh(base_box.vertices, base_box.faces, [color] * base_box.face_count)
        same_mov = TriMesh(movable_box.vertices, movable_box.faces, [color] * movable_box.face_count)
        blended = soft_blend(rasterize(same_mov, small_camera), rasterize(same_base, small_camera), 7.0)
        covered = rasterize(same_base.merge(same_mov), small_camera).coverage
        np.testing.assert_array_equal(blended.image.data[covered], np.tile(color, (covered.sum(), 1)))

    def test_hard_limit(self, small_camera, base_box, movable_box):
        base = rasterize(base_box, small_camera)
        mov = rasterize(movable_box, small_camera)
        soft = soft_blend(mov, base, 500.0).image.data
        hard = hard_composite(mov, base).data
        decisive = np.abs(mov.proximity - base.proximity) >= 0.02
        assert decisive.any()
        np.testing.assert_allclose(soft[decisive], hard[decisive], atol=1e-3)

    def test_hard_composite_tie_goes_to_base(self, exact_camera):
        base = rasterize(flat_triangle(0.0, RED), exact_camera)
        mov = rasterize(flat_triangle(0.0, GREEN), exact_camera)
        covered = base.coverage
        np.testing.assert_array_equal(hard_composite(mov, base).data[covered], np.tile(RED, (covered.sum(), 1)))

    def test_blend_colors_matches_soft_blend(self, small_camera, base_box, movable_box):
        base = rasterize(base_box, small_camera)
        mov = rasterize(movable_box, small_camera)
        mixed, weight = blend_colors(mov.color.data, mov.proximity, base.color.data, base.proximity, 500.0)
        blended = soft_blend(mov, base, 500.0)
        np.testing.assert_array_equal(np.clip(mixed, 0.0, 1.0), blended.image.data)
        np.testing.assert_array_equal(weight, blended.weights)

    def test_invalid_beta(self, exact_camera, base_quad):
        target = rasterize(base_quad, exact_camera)
        with pytest.raises(InvalidInputError):
            soft_blend(target, target, 0.0)

    def test_image_loss(self):
        assert image_loss(Image(np.zeros((4, 4, 3))), Image(np.zeros((4, 4, 3)))) == 0.0
        assert image_loss(Image(np.zeros((4, 4, 3))), Image(np.full((4, 4, 3), 0.5))) == 0.5
        with pytest.raises(InvalidInputError):
            image_loss(Image(np.zeros((4, 4, 3))), Image(np.zeros((4, 5, 3))))


class TestBackward:
    def test_vertex_grads_match_finite_differences(self, exact_camera, base_quad, tilted_triangle):
        ref = Image(np.zeros((32, 32, 3)))
        beta = 500.0

        def loss(vertices):
            moved = tilted_triangle.with_vertices(vertices)
            return image_loss(render_pred(base_quad, moved, exact_camera, beta).image, ref)

        analytic = backward(base_quad, tilted_triangle, exact_camera, beta, ref)
        assert np.abs(analytic).max() > 0

        h = 1e-5
        numeric = np.zeros_like(analytic)
        vertices = tilted_triangle.vertices
        for i in range(vertices.shape[0]):
            for k in range(3):
                step = np.zeros_like(vertices)
                step[i, k] = h
                numeric[i, k] = (loss(vertices + step) - loss(vertices - step)) / (2 * h)
        np.testing.assert_allclose(analytic, numeric, rtol=1e-3, atol=1e-9)

    def test_loss_matches_image_loss(self, exact_camera, base_quad, tilted_triangle):
        ref = Image(np.full((32, 32, 3), 0.25))
        context = RenderContext(exact_camera, 500.0)
        result = loss_and_vertex_grads(
            tilted_triangle, context.rasterize(tilted_triangle), context.rasterize(base_quad), ref, context
        )
        expected = image_loss(render_pred(base_quad, tilted_triangle, exact_camera, 500.0).image, ref)
        assert result.loss == expected

    def test_invisible_movable_has_zero_gradient(self, exact_camera, base_quad):
        hidden = flat_triangle(-1.0, RED)
        ref = Image(np.zeros((32, 32, 3)))
        # 베이스 뒤로 충분히 멀어 블렌딩 가중치가 포화된다
        grads = backward(base_quad, hidden, exact_camera, 500.0, ref)
        assert not grads.any()

    def test_edges_vanish_at_the_reference(self, exact_camera, base_quad, tilted_triangle):
        context = RenderContext(exact_camera, 500.0)
        ref = render_pred(base_quad, tilted_triangle, exact_camera, 500.0).image
        result = loss_and_vertex_grads(
            tilted_triangle, context.rasterize(tilted_triangle), context.rasterize(base_quad), ref, context,
            edges=True,
        )
        assert result.loss == 0.0
        assert not result.vertex_grads.any()

    @pytest.mark.parametrize("offset", [(0.1, 0.0), (-0.1, 0.0), (0.0, 0.1), (0.0, -0.1)])
    def test_edge_term_follows_silhouette_shift(self, exact_camera, base_quad, offset):
        # 깊이가 일정한 삼각형은 커버리지 고정 기울기로는 옆으로 밀리지 않는다
        triangle = flat_triangle(0.01, RED)
        shift = np.array([offset[0], offset[1], 0.0])
        ref = render_pred(base_quad, triangle.with_vertices(triangle.vertices + shift), exact_camera, 500.0).image
        context = RenderContext(exact_camera, 500.0)
        mov_target, base_target = context.rasterize(triangle), context.rasterize(base_quad)

        fixed = loss_and_vertex_grads(triangle, mov_target, base_target, ref, context).vertex_grads
        assert np.abs(fixed[:, :2]).max() < 1e-9

        descent = -loss_and_vertex_grads(triangle, mov_target, base_target, ref, context, edges=True).vertex_grads
        lateral = descent.sum(axis=0)[:2]
        axis = int(np.argmax(np.abs(shift[:2])))
        assert np.sign(lateral[axis]) == np.sign(shift[axis])
        assert abs(lateral[axis]) > abs(lateral[1 - axis])
