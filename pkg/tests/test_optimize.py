"""
optimize 모듈 테스트
Adam, 재시작 초기화, 시퀀스 기울기 유한 차분, 다중 시작 추정
"""

import json
from types import SimpleNamespace

import numpy as np
import pandas as pd
import pytest

from src.articulation.joint import JointSpec, JointType, MotionProfile, load_joint
from src.articulation.motion import MotionMLP
from src.config.loader import OptimConfig, SynthConfig
from src.geometry.camera import Camera
from src.geometry.image import Image
from src.geometry.mesh import bbox_bounds
from src.optimize.adam import AdamState, adam_step
from src.optimize.estimator import (
    DIR_SLICE,
    INIT_PRISMATIC_FRACTION,
    INIT_REVOLUTE_RANGE,
    MLP_OFFSET,
    OptimResult,
    SequenceProblem,
    estimate_joint,
    fit_motion_mlp,
    init_restart,
    pack_params,
    save_result,
    select_joint_type,
    sequence_loss_and_grads,
    unpack_params,
    warm_start,
    _Candidate,
)
from src.render.backward import RenderContext
from src.synth.generator import generate_scene, render_articulation
from src.utils.exceptions import InvalidInputError, OptimizationError
from src.utils.metrics import axis_errors, motion_rmse


@pytest.fixture
def prismatic_frames(exact_camera, base_quad, tilted_triangle):
    joint = JointSpec(JointType.PRISMATIC, (0.0, 0.0, 0.0), (0.0, 0.0, 1.0))
    return render_articulation(base_quad, tilted_triangle, exact_camera, joint, [0.0, 0.02, 0.04])


class TestAdam:
    def test_first_step_moves_by_learning_rate(self):
        params = np.array([1.0, -2.0, 0.5])
        grads = np.array([0.3, -4.0, 1e-3])
        updated, state = adam_step(params, grads, AdamState.zeros(3), 0.01)
        np.testing.assert_allclose(params - updated, 0.01 * np.sign(grads), rtol=1e-4)
        assert state.step == 1

    def test_per_parameter_learning_rate(self):
        params = np.zeros(2)
        updated, _ = adam_step(params, np.ones(2), AdamState.zeros(2), np.array([0.1, 0.001]))
        np.testing.assert_allclose(updated, [-0.1, -0.001], rtol=1e-6)

    def test_unit_slice_is_renormalized(self):
        params = np.array([0.0, 0.0, 0.0, 1.0, 0.0, 0.0])
        updated, _ = adam_step(params, np.array([0, 0, 0, -1.0, 1.0, 0]), AdamState.zeros(6), 0.1,
                               unit_slice=slice(3, 6))
        assert np.linalg.norm(updated[3:6]) == pytest.approx(1.0, abs=1e-15)

    def test_non_finite_gradient(self):
        with pytest.raises(OptimizationError):
            adam_step(np.zeros(2), np.array([np.nan, 0.0]), AdamState.zeros(2), 0.1)

    def test_shape_mismatch(self):
        with pytest.raises(OptimizationError):
            adam_step(np.zeros(2), np.zeros(3), AdamState.zeros(2), 0.1)


class TestInitialization:
    def test_revolute_restart(self, rng):
        low, high = np.array([-1.0, 0.0, 2.0]), np.array([1.0, 0.5, 3.0])
        for _ in range(50):
            guess = init_restart(rng, "revolute", (low, high))
            assert np.all(guess.joint.axis_pos >= low) and np.all(guess.joint.axis_pos <= high)
            assert np.linalg.norm(guess.joint.axis_dir) == pytest.approx(1.0)
            assert guess.mlp.output_bound == pytest.approx(np.pi)

    def test_prismatic_restart_uses_bbox_center(self, rng):
        guess = init_restart(rng, JointType.PRISMATIC, (np.zeros(3), np.array([2.0, 4.0, 6.0])))
        np.testing.assert_array_equal(guess.joint.axis_pos, [1.0, 2.0, 3.0])
        assert guess.mlp.output_bound is None

    def test_restart_amplitude_ranges(self, rng):
        low, high = np.zeros(3), np.array([2.0, 4.0, 6.0])
        diag = float(np.linalg.norm(high - low))
        for _ in range(20):
            prismatic = abs(init_restart(rng, "prismatic", (low, high)).mlp.profile(16)[-1])
            assert 0.95 * INIT_PRISMATIC_FRACTION[0] * diag <= prismatic <= 1.05 * INIT_PRISMATIC_FRACTION[1] * diag
            revolute = abs(init_restart(rng, "revolute", (low, high)).mlp.profile(16)[-1])
            assert 0.95 * INIT_REVOLUTE_RANGE[0] <= revolute <= 1.05 * INIT_REVOLUTE_RANGE[1]

    def test_rest_restart_does_not_move(self, rng):
        for joint_type in JointType:
            guess = init_restart(rng, joint_type, (np.zeros(3), np.ones(3)), amplitude=0.0)
            assert not guess.mlp.profile(8).any()

    def test_pack_unpack(self, rng):
        guess = init_restart(rng, "revolute", (np.zeros(3), np.ones(3)))
        params = pack_params(guess.joint, guess.mlp)
        assert len(params) == MLP_OFFSET + guess.mlp.parameter_count
        joint, mlp = unpack_params(params, JointType.REVOLUTE, guess.mlp)
        np.testing.assert_array_equal(joint.axis_dir, guess.joint.axis_dir)
        np.testing.assert_array_equal(mlp.flat_params(), guess.mlp.flat_params())


class TestSequenceGradients:
    def test_matches_finite_differences(self, exact_camera, base_quad, tilted_triangle):
        context = RenderContext(exact_camera, 500.0)
        frames = (Image(np.zeros((32, 32, 3))), Image(np.full((32, 32, 3), 0.5)), Image(np.zeros((32, 32, 3))))
        problem = SequenceProblem(
            base=base_quad,
            movable=tilted_triangle,
            frames=frames,
            context=context,
            base_target=context.rasterize(base_quad),
            joint_type=JointType.REVOLUTE,
            supervised=(0, 1, 2),
        )
        joint = JointSpec.normalized("revolute", (0.05, -0.02, 0.0), (0.1, 0.2, 1.0))
        template = MotionMLP.initialize(np.random.default_rng(5), layer_sizes=(1, 4, 4, 1), output_bound=np.pi)
        params = pack_params(joint, template)

        def loss_at(values):
            values = values.copy()
            values[DIR_SLICE] /= np.linalg.norm(values[DIR_SLICE])
            return sequence_loss_and_grads(problem, *unpack_params(values, JointType.REVOLUTE, template))[0]

        loss, analytic = sequence_loss_and_grads(problem, joint, template)
        assert loss == pytest.approx(loss_at(params), rel=1e-12)
        assert np.abs(analytic[MLP_OFFSET:]).max() > 0

        # axis_dir은 접공간 방향으로만 미분한다
        tangent_a = np.cross(joint.axis_dir, [1.0, 0.0, 0.0])
        tangent_a /= np.linalg.norm(tangent_a)
        tangent_b = np.cross(joint.axis_dir, tangent_a)
        directions = [np.eye(len(params))[i] for i in range(len(params)) if not 3 <= i < 6]
        expected = [analytic[i] for i in range(len(params)) if not 3 <= i < 6]
        for tangent in (tangent_a, tangent_b):
            step = np.zeros(len(params))
            step[DIR_SLICE] = tangent
            directions.append(step)
            expected.append(analytic[DIR_SLICE] @ tangent)

        h = 1e-6
        numeric = [(loss_at(params + h * d) - loss_at(params - h * d)) / (2 * h) for d in directions]
        np.testing.assert_allclose(expected, numeric, rtol=1e-3, atol=1e-8)

    def test_first_frame_does_not_move(self, exact_camera, base_quad, tilted_triangle):
        context = RenderContext(exact_camera, 500.0)
        problem = SequenceProblem(
            base=base_quad,
            movable=tilted_triangle,
            frames=(Image(np.zeros((32, 32, 3))), Image(np.zeros((32, 32, 3)))),
            context=context,
            base_target=context.rasterize(base_quad),
            joint_type=JointType.PRISMATIC,
            supervised=(0,),
        )
        joint = JointSpec(JointType.PRISMATIC, (0.0, 0.0, 0.0), (0.0, 0.0, 1.0))
        mlp = MotionMLP.initialize(np.random.default_rng(2))
        _, grads = sequence_loss_and_grads(problem, joint, mlp)
        # θ_1 = 0 이므로 MLP와 축 기울기 모두 0
        assert not grads.any()


class TestEstimateJoint:
    def test_history_and_final_loss(self, exact_camera, base_quad, tilted_triangle, prismatic_frames,
                                    tiny_optim_config):
        result = estimate_joint(base_quad, tilted_triangle, prismatic_frames, exact_camera, "prismatic",
                                tiny_optim_config)
        assert len(result.loss_history) == tiny_optim_config.iterations
        assert result.final_loss == result.loss_history[-1]
        assert result.profile.thetas[0] == 0.0
        assert len(result.profile) == 3
        # 정지 후보 0, 무작위 재시작 1..restarts
        assert result.restart_index in (0, 1, 2)
        assert result.joint_type is JointType.PRISMATIC

    def test_deterministic(self, exact_camera, base_quad, tilted_triangle, prismatic_frames, tiny_optim_config):
        runs = [
            estimate_joint(base_quad, tilted_triangle, prismatic_frames, exact_camera, "prismatic", tiny_optim_config)
            for _ in range(2)
        ]
        np.testing.assert_array_equal(runs[0].loss_history, runs[1].loss_history)
        np.testing.assert_array_equal(runs[0].joint.axis_dir, runs[1].joint.axis_dir)
        np.testing.assert_array_equal(runs[0].mlp.flat_params(), runs[1].mlp.flat_params())

    def test_zero_warmup_runs_one_evaluation(self, exact_camera, base_quad, tilted_triangle, prismatic_frames):
        config = OptimConfig(iterations=2, warmup_iterations=0, restarts=1, continue_top=1)
        result = estimate_joint(base_quad, tilted_triangle, prismatic_frames, exact_camera, "prismatic", config)
        assert len(result.loss_history) == 2

    def test_empty_frames(self, exact_camera, base_quad, tilted_triangle, tiny_optim_config):
        with pytest.raises(OptimizationError):
            estimate_joint(base_quad, tilted_triangle, [], exact_camera, "revolute", tiny_optim_config)

    def test_single_frame(self, exact_camera, base_quad, tilted_triangle, prismatic_frames, tiny_optim_config):
        with pytest.raises(InvalidInputError):
            estimate_joint(base_quad, tilted_triangle, prismatic_frames[:1], exact_camera, "revolute",
                           tiny_optim_config)

    def test_supervised_frame_out_of_range(self, exact_camera, base_quad, tilted_triangle, prismatic_frames):
        config = OptimConfig(iterations=2, warmup_iterations=1, restarts=1, supervised_frames=[0, 3])
        with pytest.raises(InvalidInputError):
            estimate_joint(base_quad, tilted_triangle, prismatic_frames, exact_camera, "prismatic", config)

    def test_frame_resolution_mismatch(self, exact_camera, base_quad, tilted_triangle, tiny_optim_config):
        frames = [Image(np.zeros((16, 16, 3)))] * 2
        with pytest.raises(InvalidInputError):
            estimate_joint(base_quad, tilted_triangle, frames, exact_camera, "prismatic", tiny_optim_config)

    def test_extra_init_type_must_match(self, exact_camera, base_quad, tilted_triangle, prismatic_frames,
                                        tiny_optim_config, rng):
        guess = init_restart(rng, "revolute", (np.zeros(3), np.ones(3)))
        with pytest.raises(InvalidInputError):
            estimate_joint(base_quad, tilted_triangle, prismatic_frames, exact_camera, "prismatic",
                           tiny_optim_config, extra_inits=[guess])


class TestBestTracking:
    def test_history_is_best_so_far_and_result_is_best(self, exact_camera, base_quad, tilted_triangle,
                                                       prismatic_frames):
        config = OptimConfig(iterations=12, warmup_iterations=4, restarts=2, continue_top=2, seed=1)
        result = estimate_joint(base_quad, tilted_triangle, prismatic_frames, exact_camera, "prismatic", config)
        assert np.all(np.diff(result.loss_history) <= 0)
        assert result.final_loss == result.loss_history.min()

        context = RenderContext(exact_camera, config.beta)
        problem = SequenceProblem(
            base=base_quad,
            movable=tilted_triangle,
            frames=tuple(prismatic_frames),
            context=context,
            base_target=context.rasterize(base_quad),
            joint_type=JointType.PRISMATIC,
            supervised=(0, 1, 2),
        )
        # 반환된 파라미터가 기록된 최저 손실을 재현한다
        loss, _ = sequence_loss_and_grads(problem, result.joint, result.mlp)
        assert loss == pytest.approx(result.final_loss, rel=1e-12)

    def test_loss_increase_reverts_and_backs_off(self, mocker, rng):
        guess = init_restart(rng, "prismatic", (np.zeros(3), np.ones(3)))
        problem = SimpleNamespace(joint_type=JointType.PRISMATIC, n_frames=3)
        candidate = _Candidate(0, guess, problem, OptimConfig())
        start = candidate.params.copy()
        grads = np.ones(len(start))
        mocker.patch(
            "src.optimize.estimator.sequence_loss_and_grads",
            side_effect=[(1.0, grads), (2.0, 2.0 * grads), (0.5, grads), (3.0, grads)],
        )

        candidate.run(4)
        assert candidate.history == [1.0, 1.0, 0.5, 0.5]
        assert candidate.loss == 0.5
        np.testing.assert_array_equal(candidate.params, candidate.best_params)
        assert np.any(candidate.best_params != start)
        assert not candidate.state.m.any()
        # 1.0 → ×0.5 → ×1.1 → ×0.5
        assert candidate.step_scale == pytest.approx(0.275)
        assert candidate.result().final_loss == 0.5


class TestGroundTruthStability:
    @pytest.mark.parametrize("template", ["drawer", "door"])
    def test_seeded_restart_stays_and_wins(self, template):
        gt = generate_scene(13, 0, template=template, config=SynthConfig(resolution=32, frames=4))
        frames = render_articulation(gt.base, gt.movable, gt.camera, gt.joint, gt.thetas)
        config = OptimConfig(iterations=100, warmup_iterations=10, restarts=2, continue_top=1, seed=13)
        seeded = warm_start(gt.joint, gt.thetas, seed=13)

        result = estimate_joint(gt.base, gt.movable, frames, gt.camera, gt.joint.joint_type, config,
                                extra_inits=[seeded])
        # 정지 후보, 무작위 재시작 다음 인덱스
        assert result.restart_index == config.restarts + 1
        assert np.all(np.diff(result.loss_history) <= 0)
        assert result.final_loss <= result.loss_history[0]

        low, high = bbox_bounds(gt.movable)
        angle, position = axis_errors(result.joint, gt.joint, float(np.linalg.norm(high - low)))
        assert angle < 0.1
        assert position < 0.01
        assert motion_rmse(result.profile.thetas, gt.thetas) < 0.05


class TestZeroMotion:
    @pytest.mark.parametrize("joint_type", ["prismatic", "revolute"])
    def test_static_sequence_recovers_rest(self, joint_type, tiny_synth_config):
        gt = generate_scene(17, 0, joint_type, config=tiny_synth_config)
        frames = render_articulation(gt.base, gt.movable, gt.camera, gt.joint, np.zeros(gt.n_frames))
        config = OptimConfig(iterations=6, warmup_iterations=2, restarts=2, continue_top=1, seed=2)

        result = estimate_joint(gt.base, gt.movable, frames, gt.camera, joint_type, config)
        assert result.restart_index == 0
        assert result.final_loss == 0.0
        assert not result.profile.thetas.any()


class TestUnseededRecovery:
    def test_lateral_slide(self, base_quad, tilted_triangle):
        camera = Camera.look_at((0.0, 0.0, 4.0), (0.0, 0.0, 0.0), focal=1.0, resolution=(64, 64))
        gt = JointSpec(JointType.PRISMATIC, (0.0, 0.0, 0.0), (1.0, 0.0, 0.0))
        thetas = np.linspace(0.0, 0.3, 5)
        frames = render_articulation(base_quad, tilted_triangle, camera, gt, thetas)
        config = OptimConfig(iterations=250, warmup_iterations=25, restarts=6, continue_top=2,
                             lr_axis_dir=2e-2, seed=0)

        result = estimate_joint(base_quad, tilted_triangle, frames, camera, "prismatic", config)
        angle, _ = axis_errors(result.joint, gt, 1.0)
        assert angle < 5.0
        assert motion_rmse(result.profile.thetas, thetas) < 0.05


class TestSelectJointType:
    @pytest.mark.parametrize(
        "losses, expected",
        [
            ({"prismatic": 1.0, "revolute": 1.0}, JointType.PRISMATIC),
            ({"prismatic": 2.0, "revolute": 1.0}, JointType.REVOLUTE),
            ({"prismatic": 0.5, "revolute": 1.0}, JointType.PRISMATIC),
        ],
    )
    def test_lower_loss_wins_and_ties_go_to_prismatic(self, mocker, losses, expected):
        def fake(base, movable, frames, camera, joint_type, config, background, inits):
            return SimpleNamespace(final_loss=losses[joint_type.value], joint_type=joint_type)

        mocked = mocker.patch("src.optimize.estimator.estimate_joint", side_effect=fake)
        result, chosen = select_joint_type(None, None, [], None)
        assert chosen is expected
        assert result.joint_type is expected
        assert mocked.call_count == 2

    def test_extra_inits_routed_by_type(self, mocker, rng):
        seen = {}

        def fake(base, movable, frames, camera, joint_type, config, background, inits):
            seen[joint_type] = list(inits)
            return SimpleNamespace(final_loss=1.0)

        mocker.patch("src.optimize.estimator.estimate_joint", side_effect=fake)
        revolute = init_restart(rng, "revolute", (np.zeros(3), np.ones(3)))
        select_joint_type(None, None, [], None, extra_inits=[revolute])
        assert seen[JointType.PRISMATIC] == []
        assert seen[JointType.REVOLUTE] == [revolute]


class TestResults:
    def test_canonical_flips_axis_and_motion(self, rng):
        mlp = MotionMLP.initialize(rng, output_bound=np.pi)
        joint = JointSpec(JointType.REVOLUTE, (0.1, 0.2, 0.3), (0.0, 0.0, -1.0))
        result = OptimResult(joint, MotionProfile(mlp.profile(5)), mlp, np.array([3.0, 2.0]), 2.0, 0)
        canonical = result.canonical()
        np.testing.assert_array_equal(canonical.joint.axis_dir, [0.0, 0.0, 1.0])
        np.testing.assert_array_equal(canonical.profile.thetas, -result.profile.thetas + 0.0)
        assert canonical.final_loss == result.final_loss

    def test_canonical_keeps_positive_axis(self, rng):
        mlp = MotionMLP.initialize(rng)
        joint = JointSpec(JointType.PRISMATIC, (0.0, 0.0, 0.0), (0.0, 1.0, 0.0))
        result = OptimResult(joint, MotionProfile(mlp.profile(3)), mlp, np.array([1.0]), 1.0, 0)
        assert result.canonical() is result

    def test_save_result_writes_three_files(self, tmp_path, rng):
        mlp = MotionMLP.initialize(rng, output_bound=np.pi)
        joint = JointSpec(JointType.REVOLUTE, (0.1, 0.2, 0.3), (0.0, -1.0, 0.0))
        result = OptimResult(joint, MotionProfile(mlp.profile(4)), mlp, np.array([3.0, 2.5, 1.25]), 1.25, 1)

        paths = save_result(result, tmp_path / "out" / "joint.json")
        loaded_joint, thetas = load_joint(paths["joint"])
        np.testing.assert_array_equal(loaded_joint.axis_dir, [0.0, 1.0, 0.0])
        np.testing.assert_allclose(thetas, -result.profile.thetas, atol=1e-15)

        history = pd.read_csv(paths["loss_history"])
        assert list(history.columns) == ["iteration", "loss"]
        np.testing.assert_array_equal(history["loss"], [3.0, 2.5, 1.25])

        restored = MotionMLP.from_json(json.loads((tmp_path / "out" / "joint_mlp.json").read_text()), np.pi)
        np.testing.assert_allclose(restored.profile(4), thetas, atol=1e-15)


class TestWarmStart:
    def test_regression_reduces_error(self):
        target = np.array([0.0, 0.1, 0.3, 0.5])
        initial = fit_motion_mlp(target, np.random.default_rng(0), iterations=0)
        fitted = fit_motion_mlp(target, np.random.default_rng(0), iterations=500)
        before = np.abs(initial.profile(4) - target).max()
        after = np.abs(fitted.profile(4) - target).max()
        assert after < 0.5 * before
        assert fitted.profile(4)[0] == 0.0

    def test_warm_start_keeps_joint(self):
        joint = JointSpec(JointType.REVOLUTE, (0.0, 0.0, 0.0), (1.0, 0.0, 0.0))
        guess = warm_start(joint, [0.0, 0.2, 0.4], seed=1)
        assert guess.joint is joint
        assert guess.mlp.output_bound == pytest.approx(np.pi)

    @pytest.mark.slow
    def test_ground_truth_seeded_recovery(self, tiny_synth_config):
        gt = generate_scene(11, 0, template="drawer", config=tiny_synth_config)
        frames = render_articulation(gt.base, gt.movable, gt.camera, gt.joint, gt.thetas)
        config = OptimConfig(iterations=300, warmup_iterations=30, restarts=4, continue_top=2, seed=4)
        seeded = warm_start(gt.joint, gt.thetas, seed=4)
        result = estimate_joint(gt.base, gt.movable, frames, gt.camera, gt.joint.joint_type, config,
                                extra_inits=[seeded])
        angle, _ = axis_errors(result.joint, gt.joint, 1.0)
        assert result.restart_index == config.restarts + 1
        assert angle < 0.1
