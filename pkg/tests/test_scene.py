import math

import numpy as np
import pytest

from reconeval.errors import InvalidInputError, SceneIntegrityError
from reconeval.scene import (
    CameraIntrinsics,
    CameraModel,
    CameraPose,
    FrameRecord,
    Observation,
    ReconstructionScene,
    ScenePoint,
    back_project,
    matrix_to_quat,
    project,
    project_points,
    quat_to_matrix,
    world_to_camera,
)

SQ2 = math.sqrt(0.5)


class TestQuatToMatrix:
    def test_identity(self):
        assert np.allclose(quat_to_matrix((1, 0, 0, 0)), np.eye(3))

    def test_x_flip(self):
        # hand evaluation of the standard formula for q = (0, 1, 0, 0)
        assert np.allclose(quat_to_matrix((0, 1, 0, 0)), np.diag([1.0, -1.0, -1.0]))

    def test_quarter_turn_about_z(self):
        rot = quat_to_matrix((SQ2, 0, 0, SQ2))
        assert np.allclose(rot @ np.array([1.0, 0, 0]), [0, 1, 0], atol=1e-12)

    def test_zero_quaternion_rejected(self):
        with pytest.raises(InvalidInputError):
            quat_to_matrix((0, 0, 0, 0))

    def test_non_finite_rejected(self):
        with pytest.raises(InvalidInputError):
            quat_to_matrix((1, float("nan"), 0, 0))

    def test_orthonormal_and_proper_for_random_quats(self):
        rng = np.random.default_rng(0)
        for _ in range(200):
            q = rng.normal(size=4)
            q /= np.linalg.norm(q)
            rot = quat_to_matrix(tuple(q))
            assert np.max(np.abs(rot.T @ rot - np.eye(3))) < 1e-9
            assert abs(np.linalg.det(rot) - 1.0) < 1e-9

    def test_norm_preservation(self):
        rng = np.random.default_rng(1)
        for _ in range(100):
            q = rng.normal(size=4)
            q /= np.linalg.norm(q)
            v = rng.normal(size=3)
            assert abs(np.linalg.norm(quat_to_matrix(tuple(q)) @ v) - np.linalg.norm(v)) < 1e-9

    def test_matrix_to_quat_round_trip(self):
        rng = np.random.default_rng(2)
        for _ in range(100):
            q = rng.normal(size=4)
            q /= np.linalg.norm(q)
            rot = quat_to_matrix(tuple(q))
            assert np.allclose(quat_to_matrix(matrix_to_quat(rot)), rot, atol=1e-9)


class TestWorldToCamera:
    def test_identity_pose(self):
        pose = CameraPose((1, 0, 0, 0), (0, 0, 0))
        assert np.allclose(world_to_camera(pose, (1, 2, 3)), [1, 2, 3])

    def test_translation_cancellation(self):
        pose = CameraPose((1, 0, 0, 0), (0, 0, 5))
        assert np.allclose(world_to_camera(pose, (0, 0, -5)), [0, 0, 0])

    def test_rotation_only(self):
        pose = CameraPose((SQ2, 0, 0, SQ2), (0, 0, 0))
        assert np.allclose(world_to_camera(pose, (1, 0, 0)), [0, 1, 0], atol=1e-12)

    def test_non_finite_rejected(self):
        pose = CameraPose((1, 0, 0, 0), (0, 0, 0))
        with pytest.raises(InvalidInputError):
            world_to_camera(pose, (1, float("inf"), 0))

    def test_pose_composition_with_inverse(self):
        rng = np.random.default_rng(3)
        for _ in range(200):
            q = rng.normal(size=4)
            q /= np.linalg.norm(q)
            pose = CameraPose(tuple(q), tuple(rng.normal(size=3)))
            x = rng.normal(size=3) * 10
            back = world_to_camera(pose.inverse(), world_to_camera(pose, x))
            assert np.max(np.abs(back - x)) < 1e-9


class TestProject:
    def test_principal_point(self, simple_intrinsics):
        assert project(simple_intrinsics, (0, 0, 1)) == (50.0, 50.0)

    def test_off_axis(self, simple_intrinsics):
        assert project(simple_intrinsics, (1, 0, 2)) == (100.0, 50.0)

    def test_behind_camera_flagged(self, simple_intrinsics):
        assert project(simple_intrinsics, (0, 0, -1)) is None
        assert project(simple_intrinsics, (0, 0, 0)) is None

    def test_radial_distortion_matches_hand_formula(self):
        intr = CameraIntrinsics.from_params(
            CameraModel.SIMPLE_RADIAL, 200, 200, (100.0, 100.0, 100.0, 0.1)
        )
        # xh = yh = 0.5, r2 = 0.5, factor = 1.05
        uv = project(intr, (1.0, 1.0, 2.0))
        assert uv == pytest.approx((100.0 + 100.0 * 0.5 * 1.05,) * 2, abs=1e-12)

    def test_two_coefficient_distortion(self):
        intr = CameraIntrinsics.from_params(
            CameraModel.RADIAL, 200, 200, (100.0, 100.0, 100.0, 0.1, -0.05)
        )
        # factor = 1 + 0.1*0.5 - 0.05*0.25 = 1.0375
        uv = project(intr, (1.0, 1.0, 2.0))
        assert uv == pytest.approx((100.0 + 50.0 * 1.0375,) * 2, abs=1e-12)

    def test_project_points_agrees_with_scalar(self, simple_intrinsics):
        rng = np.random.default_rng(4)
        pts = rng.normal(size=(50, 3))
        uv, front = project_points(simple_intrinsics, pts)
        for k in range(50):
            single = project(simple_intrinsics, pts[k])
            if single is None:
                assert not front[k]
            else:
                assert front[k]
                assert np.allclose(uv[k], single, atol=1e-12)

    def test_projection_back_projection_consistency(self):
        rng = np.random.default_rng(5)
        for model in (CameraModel.SIMPLE_PINHOLE, CameraModel.PINHOLE):
            if model is CameraModel.SIMPLE_PINHOLE:
                intr = CameraIntrinsics.from_params(model, 640, 480, (500.0, 320.0, 240.0))
            else:
                intr = CameraIntrinsics.from_params(model, 640, 480, (500.0, 510.0, 320.0, 240.0))
            for _ in range(100):
                uv = rng.uniform(0, 600, size=2)
                z = rng.uniform(0.1, 50)
                reproj = project(intr, back_project(intr, uv, z))
                assert abs(reproj[0] - uv[0]) < 1e-9
                assert abs(reproj[1] - uv[1]) < 1e-9

    def test_back_project_rejects_distortion(self):
        intr = CameraIntrinsics.from_params(
            CameraModel.SIMPLE_RADIAL, 100, 100, (100.0, 50.0, 50.0, 0.01)
        )
        with pytest.raises(InvalidInputError):
            back_project(intr, (10, 10), 1.0)


class TestIntrinsicsValidation:
    def test_param_counts(self):
        assert CameraModel.SIMPLE_PINHOLE.param_count == 3
        assert CameraModel.PINHOLE.param_count == 4
        assert CameraModel.SIMPLE_RADIAL.param_count == 4
        assert CameraModel.RADIAL.param_count == 5

    def test_bad_dimensions(self):
        with pytest.raises(InvalidInputError):
            CameraIntrinsics(CameraModel.PINHOLE, 0, 100, 10, 10, 5, 5)

    def test_negative_focal(self):
        with pytest.raises(InvalidInputError):
            CameraIntrinsics(CameraModel.PINHOLE, 10, 10, -1, 1, 5, 5)

    def test_simple_models_share_focal(self):
        with pytest.raises(InvalidInputError):
            CameraIntrinsics(CameraModel.SIMPLE_PINHOLE, 10, 10, 1.0, 2.0, 5, 5)

    def test_distortion_length_checked(self):
        with pytest.raises(InvalidInputError):
            CameraIntrinsics(CameraModel.PINHOLE, 10, 10, 1, 1, 5, 5, (0.1,))
        with pytest.raises(InvalidInputError):
            CameraIntrinsics(CameraModel.RADIAL, 10, 10, 1, 1, 5, 5, (0.1,))

    def test_model_name_lookup(self):
        assert CameraModel.from_name("simple_radial") is CameraModel.SIMPLE_RADIAL
        assert CameraModel.from_name("SimplePinhole") is CameraModel.SIMPLE_PINHOLE
        with pytest.raises(InvalidInputError):
            CameraModel.from_name("FISHEYE")


class TestPoseNormalization:
    def test_slightly_off_unit_is_normalized(self):
        pose = CameraPose((1.0 + 5e-7, 0, 0, 0), (0, 0, 0))
        assert abs(sum(v * v for v in pose.qvec) - 1.0) < 1e-9

    def test_exact_unit_kept_verbatim(self):
        pose = CameraPose((SQ2, 0.0, 0.0, SQ2), (0, 0, 0))
        assert pose.qvec == (SQ2, 0.0, 0.0, SQ2)

    def test_zero_rejected(self):
        with pytest.raises(InvalidInputError):
            CameraPose((0, 0, 0, 0), (0, 0, 0))


class TestSceneIntegrity:
    def test_track_must_reference_registered_frames(self, simple_intrinsics):
        frame = FrameRecord(1, "a.png", 1, CameraPose((1, 0, 0, 0), (0, 0, 0)))
        point = ScenePoint(7, (0, 0, 1), track=(Observation(99, (1, 1)),))
        with pytest.raises(SceneIntegrityError):
            ReconstructionScene({1: simple_intrinsics}, {1: frame}, {7: point})

    def test_frame_needs_camera(self):
        frame = FrameRecord(1, "a.png", 42, CameraPose((1, 0, 0, 0), (0, 0, 0)))
        with pytest.raises(SceneIntegrityError):
            ReconstructionScene({}, {1: frame}, {})

    def test_duplicate_frame_in_track_rejected(self, simple_intrinsics):
        frame = FrameRecord(1, "a.png", 1, CameraPose((1, 0, 0, 0), (0, 0, 0)))
        point = ScenePoint(
            7, (0, 0, 1), track=(Observation(1, (1, 1)), Observation(1, (2, 2)))
        )
        with pytest.raises(SceneIntegrityError):
            ReconstructionScene({1: simple_intrinsics}, {1: frame}, {7: point})

    def test_input_frame_total_at_least_frames(self, simple_intrinsics):
        frame = FrameRecord(1, "a.png", 1, CameraPose((1, 0, 0, 0), (0, 0, 0)))
        scene = ReconstructionScene({1: simple_intrinsics}, {1: frame}, {}, 0)
        assert scene.input_frame_total == 1

    def test_scene_maps_are_read_only(self, simple_intrinsics):
        scene = ReconstructionScene({1: simple_intrinsics}, {}, {})
        with pytest.raises(TypeError):
            scene.cameras[2] = simple_intrinsics
