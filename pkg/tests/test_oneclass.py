import numpy as np
import pytest

from sigverify import (calibrate_threshold, fit_user_model, load_user_model,
                       save_user_model, verify)
from sigverify.descriptor import Descriptor
from sigverify.oneclass import THRESHOLD_SLACK, ZERO_VARIANCE_EPSILON, score


def descriptors_from(rows, user_id="u", label="genuine"):
    return [Descriptor(values=np.asarray(r, dtype=float), user_id=user_id,
                       label=label) for r in rows]


CORNERS = [(0.0, 0.0), (2.0, 0.0), (0.0, 2.0), (2.0, 2.0)]


class TestFitUserModel:
    def test_toy_square_has_known_moments(self):
        m = fit_user_model(descriptors_from(CORNERS), reg=0.9)
        assert np.allclose(m.mean, [1.0, 1.0])
        # isotropic sample covariance (4/3) I is untouched by shrinkage
        assert np.allclose(m.covariance, (4.0 / 3.0) * np.eye(2))
        assert m.n_train == 4

    def test_shrinkage_pulls_toward_scaled_identity(self):
        rows = [(0.0, 0.0), (4.0, 0.1), (8.0, -0.1), (12.0, 0.0)]
        s = np.cov(np.asarray(rows), rowvar=False)
        for reg in (0.0, 0.5, 1.0):
            m = fit_user_model(descriptors_from(rows), reg=reg)
            expect = (1 - reg) * s + reg * (np.trace(s) / 2.0) * np.eye(2)
            assert np.allclose(m.covariance, expect)

    def test_single_descriptor_gets_isotropic_floor(self):
        m = fit_user_model(descriptors_from([(0.3, 0.7, 0.1)]))
        assert np.allclose(m.covariance, ZERO_VARIANCE_EPSILON * np.eye(3))
        assert m.n_train == 1

    def test_identical_descriptors_get_isotropic_floor(self):
        m = fit_user_model(descriptors_from([(0.5, 0.5)] * 6))
        assert np.allclose(m.covariance, ZERO_VARIANCE_EPSILON * np.eye(2))

    def test_mixed_users_are_rejected(self):
        d = descriptors_from([(0.0, 0.0)], user_id="alice") + \
            descriptors_from([(1.0, 1.0)], user_id="bob")
        with pytest.raises(ValueError, match="mixed"):
            fit_user_model(d)

    def test_forgery_labels_are_rejected(self):
        d = descriptors_from([(0.0, 0.0), (1.0, 1.0)], label="skilled_forgery")
        with pytest.raises(ValueError, match="genuine"):
            fit_user_model(d)

    def test_reg_bounds_are_enforced(self):
        d = descriptors_from(CORNERS)
        for reg in (-0.1, 1.5):
            with pytest.raises(ValueError, match="reg"):
                fit_user_model(d, reg=reg)

    def test_empty_training_set_is_rejected(self):
        with pytest.raises(ValueError, match="at least one"):
            fit_user_model([])

    def test_plain_arrays_are_accepted(self):
        m = fit_user_model([np.array([0.0, 0.0]), np.array([2.0, 2.0])],
                           user_id="raw")
        assert m.user_id == "raw" and m.n_train == 2


class TestScore:
    def test_toy_square_reference_scores(self):
        m = fit_user_model(descriptors_from(CORNERS), reg=0.9)
        assert score(m, np.array([1.0, 1.0])) == pytest.approx(0.0, abs=1e-12)
        # sigma = (4/3) I so a (2, 0) offset scores 4 * 3/4 = 3
        assert score(m, np.array([3.0, 1.0])) == pytest.approx(3.0, rel=1e-12)
        assert score(m, np.array([1.0, 3.0])) == pytest.approx(3.0, rel=1e-12)

    def test_matches_explicit_inverse_on_random_models(self, rng):
        for _ in range(25):
            h = int(rng.integers(2, 8))
            n = int(rng.integers(h + 1, 20))
            rows = rng.normal(size=(n, h))
            m = fit_user_model(descriptors_from(rows), reg=0.5)
            q = rng.normal(size=h)
            diff = q - m.mean
            expect = float(diff @ np.linalg.inv(m.covariance) @ diff)
            assert score(m, q) == pytest.approx(expect, rel=1e-9)

    def test_score_grows_with_distance(self):
        m = fit_user_model(descriptors_from(CORNERS))
        near = score(m, np.array([1.1, 1.0]))
        far = score(m, np.array([5.0, 1.0]))
        assert 0 < near < far

    def test_dimension_mismatch_is_rejected(self):
        m = fit_user_model(descriptors_from(CORNERS))
        with pytest.raises(ValueError, match="dimension"):
            score(m, np.ones(3))


class TestThresholdAndVerify:
    def test_quantile_reference_values(self):
        m = fit_user_model(descriptors_from(CORNERS))
        calibrate_threshold(m, [1.0, 2.0, 3.0, 4.0], quantile=1.0)
        assert m.threshold == pytest.approx(6.0)
        calibrate_threshold(m, [1.0, 2.0, 3.0, 4.0], quantile=0.5)
        assert m.threshold == pytest.approx(3.0)
        calibrate_threshold(m, [1.0, 2.0, 3.0, 4.0], quantile=0.25)
        assert m.threshold == pytest.approx(1.0 * THRESHOLD_SLACK)

    def test_quantile_bounds(self):
        m = fit_user_model(descriptors_from(CORNERS))
        for q in (0.0, 1.5):
            with pytest.raises(ValueError, match="quantile"):
                calibrate_threshold(m, [1.0], quantile=q)
        with pytest.raises(ValueError, match="at least one"):
            calibrate_threshold(m, [])

    def test_verify_respects_the_threshold(self):
        m = fit_user_model(descriptors_from(CORNERS))
        train_scores = [score(m, np.asarray(c, float)) for c in CORNERS]
        calibrate_threshold(m, train_scores)
        ok, s = verify(m, np.array([1.0, 1.0]))
        assert ok and s == pytest.approx(0.0, abs=1e-12)
        bad, s_far = verify(m, np.array([9.0, 9.0]))
        assert not bad and s_far > m.threshold

    def test_verify_without_calibration_raises(self):
        m = fit_user_model(descriptors_from(CORNERS))
        with pytest.raises(ValueError, match="threshold"):
            verify(m, np.array([1.0, 1.0]))

    def test_acceptance_is_inclusive_at_the_boundary(self):
        m = fit_user_model(descriptors_from(CORNERS))
        m.threshold = score(m, np.array([3.0, 1.0]))
        ok, _ = verify(m, np.array([3.0, 1.0]))
        assert ok


class TestUserModelFile:
    def test_round_trip_preserves_scores(self, tmp_path, rng):
        rows = rng.normal(size=(10, 5))
        m = fit_user_model(descriptors_from(rows, user_id="carol"))
        calibrate_threshold(m, [score(m, r) for r in rows])
        f = tmp_path / "carol.usermodel"
        save_user_model(m, f)
        back = load_user_model(f)
        assert back.user_id == "carol"
        assert back.threshold == m.threshold
        assert back.n_train == m.n_train and back.reg == m.reg
        probe = rng.normal(size=5)
        assert score(back, probe) == pytest.approx(score(m, probe), rel=1e-12)

    def test_unset_threshold_round_trips(self, tmp_path):
        m = fit_user_model(descriptors_from(CORNERS))
        f = tmp_path / "u.usermodel"
        save_user_model(m, f)
        assert load_user_model(f).threshold is None

    def test_wrong_kind_is_rejected(self, tmp_path, tiny_model):
        from sigverify import save_model
        from sigverify.container import ContainerError
        f = tmp_path / "model.sig"
        save_model(tiny_model, f)
        with pytest.raises(ContainerError, match="user model"):
            load_user_model(f)

    def test_saved_bytes_are_deterministic(self, tmp_path):
        m = fit_user_model(descriptors_from(CORNERS, user_id="dave"))
        f1, f2 = tmp_path / "a.bin", tmp_path / "b.bin"
        save_user_model(m, f1)
        save_user_model(m, f2)
        assert f1.read_bytes() == f2.read_bytes()
