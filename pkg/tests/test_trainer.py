import numpy as np
import pytest

from ilrkit.batching import InstanceClass, build_epoch
from ilrkit.errors import MissingImageError, TooSmallError, ZeroVectorError
from ilrkit.rng import SplitMix64
from ilrkit.trainer import (
    FEATURE_DIM,
    AugmentConfig,
    TrainConfig,
    _ClassifierHead,
    augment,
    batch_loss_and_grads,
    features_from_array,
    featurize,
    forward,
    init_params,
    load_checkpoint,
    params_fingerprint,
    save_checkpoint,
    save_train_log_csv,
    train,
)
from oracles import bilinear_reference, central_difference, relative_grad_error


class TestFeaturize:
    def test_black_image(self):
        rgb = np.zeros((20, 20, 3), dtype=np.uint8)
        feats = features_from_array(rgb)
        assert feats.shape == (FEATURE_DIM,)
        assert np.all(feats == 0.0)

    def test_white_image(self):
        rgb = np.full((16, 16, 3), 255, dtype=np.uint8)
        np.testing.assert_array_equal(features_from_array(rgb), np.ones(FEATURE_DIM))

    def test_checkerboard_matches_reference(self):
        ys, xs = np.mgrid[0:32, 0:32]
        board = ((ys // 4 + xs // 4) % 2 * 255).astype(np.uint8)
        rgb = np.stack([board, 255 - board, board], axis=2)
        feats = features_from_array(rgb)
        ref = bilinear_reference(rgb.astype(np.float64) / 255.0, 16, 16)
        want = np.concatenate([ref[:, :, c].ravel() for c in range(3)])
        np.testing.assert_allclose(feats, want, atol=1e-6)

    def test_too_small_rejected(self):
        with pytest.raises(TooSmallError):
            features_from_array(np.zeros((8, 20, 3), dtype=np.uint8))

    def test_channel_layout(self):
        rgb = np.zeros((16, 16, 3), dtype=np.uint8)
        rgb[:, :, 1] = 255
        feats = features_from_array(rgb)
        assert np.all(feats[:256] == 0.0)
        assert np.all(feats[256:512] == 1.0)
        assert np.all(feats[512:] == 0.0)

    def test_featurize_decodes_bytes(self, small_dataset):
        cls = small_dataset.manifest.instance_classes()[0]
        image_id = cls.image_ids[0]
        record = featurize(image_id, small_dataset.store.load(image_id))
        assert record.image_id == image_id
        assert record.features.shape == (FEATURE_DIM,)


class TestAugment:
    def _image(self, rng):
        return rng.integers(0, 256, size=(24, 28, 3), dtype=np.uint8)

    def test_disabled_config_is_identity(self, rng):
        img = self._image(rng)
        out = augment(img, SplitMix64(4), AugmentConfig.disabled())
        np.testing.assert_array_equal(out, img)

    def test_forced_grayscale_equalizes_channels(self, rng):
        img = self._image(rng)
        config = AugmentConfig(
            crop_scale_min=1.0, crop_scale_max=1.0, flip_p=0.0, jitter=0.0,
            grayscale_p=1.0,
        )
        out = augment(img, SplitMix64(4), config)
        np.testing.assert_array_equal(out[:, :, 0], out[:, :, 1])
        np.testing.assert_array_equal(out[:, :, 1], out[:, :, 2])

    def test_forced_flip(self, rng):
        img = self._image(rng)
        config = AugmentConfig(
            crop_scale_min=1.0, crop_scale_max=1.0, flip_p=1.0, jitter=0.0,
            grayscale_p=0.0,
        )
        out = augment(img, SplitMix64(4), config)
        np.testing.assert_array_equal(out, img[:, ::-1])

    def test_same_seed_bitwise_identical(self, rng):
        img = self._image(rng)
        a = augment(img, SplitMix64(123), AugmentConfig())
        b = augment(img, SplitMix64(123), AugmentConfig())
        np.testing.assert_array_equal(a, b)

    def test_output_dtype_and_shape(self, rng):
        img = self._image(rng)
        out = augment(img, SplitMix64(9), AugmentConfig())
        assert out.shape == img.shape
        assert out.dtype == np.uint8


class TestForward:
    def test_one_hot_selector(self):
        params = init_params(4, 2, seed=0)
        params.weight = np.array(
            [[1.0, 0.0, 0.0, 0.0], [0.0, 1.0, 0.0, 0.0]]
        )
        params.bias = np.zeros(2)
        z = forward(params, np.array([1.0, 0.0, 0.0, 0.0]))
        np.testing.assert_allclose(z, [1.0, 0.0])

    def test_scale_invariance_with_zero_bias(self, rng):
        params = init_params(6, 3, seed=1)
        params.bias = np.zeros(3)
        x = rng.normal(size=6)
        np.testing.assert_allclose(
            forward(params, x), forward(params, 2.0 * x), atol=1e-12
        )

    def test_unit_norm_output(self, rng):
        params = init_params(8, 4, seed=2)
        for _ in range(50):
            z = forward(params, rng.normal(size=8))
            assert abs(np.linalg.norm(z) - 1.0) <= 1e-6

    def test_zero_pre_activation_retries_with_bias_nudge(self):
        params = init_params(3, 2, seed=3)
        params.weight = np.zeros((2, 3))
        params.bias = np.zeros(2)
        z = forward(params, np.array([1.0, 2.0, 3.0]))
        assert abs(np.linalg.norm(z) - 1.0) <= 1e-6


def micro_fixture(rng):
    classes = [InstanceClass("c0", ("a", "b")), InstanceClass("c1", ("c", "d"))]
    plan = build_epoch(classes, 2, rng_seed=123)[0]
    image_ids = [i for e in plan.entries for i in e.image_ids]
    feats = rng.normal(size=(4, 6))
    row_of = {image_id: i for i, image_id in enumerate(image_ids)}
    return plan, feats, row_of


class TestEndToEndGradients:
    @pytest.mark.parametrize("loss", ["recallk", "infonce", "contrastive", "softmax-margin"])
    def test_batch_gradient_matches_fd(self, loss, rng):
        plan, feats, row_of = micro_fixture(rng)
        # temp_rank widened so the micro-instance is not fully saturated
        from ilrkit.losses import RecallKConfig

        config = TrainConfig(
            loss=loss, rng_seed=5, descriptor_dim=4,
            recallk=RecallKConfig(ks=(1, 2), temp_rank=0.3, temp_outer=1.0),
        )
        params = init_params(6, 4, seed=7)
        classifier = (
            _ClassifierHead.create(["c0", "c1"], 4, seed=7)
            if loss == "softmax-margin"
            else None
        )
        value, d_weight, d_bias, d_cls = batch_loss_and_grads(
            plan, feats, row_of, params, config, classifier, epoch=0
        )

        def loss_of_weight(w):
            saved = params.weight.copy()
            params.weight = w.reshape(4, 6)
            try:
                return batch_loss_and_grads(
                    plan, feats, row_of, params, config, classifier, epoch=0
                )[0]
            finally:
                params.weight = saved

        fd_w = central_difference(loss_of_weight, params.weight.reshape(-1).copy())
        assert relative_grad_error(d_weight.reshape(-1), fd_w) <= 1e-3

        def loss_of_bias(b):
            saved = params.bias.copy()
            params.bias = b
            try:
                return batch_loss_and_grads(
                    plan, feats, row_of, params, config, classifier, epoch=0
                )[0]
            finally:
                params.bias = saved

        fd_b = central_difference(loss_of_bias, params.bias.copy())
        assert relative_grad_error(d_bias, fd_b) <= 1e-3


class TestTraining:
    def test_step_count(self, small_dataset):
        config = TrainConfig(loss="recallk", epochs=1, classes_per_batch=2, rng_seed=0)
        # 8 classes, B=2 -> 4 batches
        params, log = train(small_dataset.manifest, small_dataset.store, config)
        assert len(log.entries) == 4
        assert params.step == 4

    def test_bitwise_determinism(self, small_dataset):
        config = TrainConfig(
            loss="recallk", learning_rate=1e-3, epochs=2, classes_per_batch=3,
            rng_seed=11,
        )
        p1, log1 = train(small_dataset.manifest, small_dataset.store, config)
        p2, log2 = train(small_dataset.manifest, small_dataset.store, config)
        assert p1.weight.tobytes() == p2.weight.tobytes()
        assert p1.bias.tobytes() == p2.bias.tobytes()
        assert log1.entries == log2.entries

    def test_zero_lr_zero_decay_is_noop(self, small_dataset):
        config = TrainConfig(
            loss="recallk", learning_rate=0.0, weight_decay=0.0, epochs=2,
            classes_per_batch=2, rng_seed=3,
        )
        initial = init_params(FEATURE_DIM, config.descriptor_dim, config.rng_seed)
        params, _ = train(small_dataset.manifest, small_dataset.store, config)
        assert params.weight.tobytes() == initial.weight.tobytes()
        assert params.bias.tobytes() == initial.bias.tobytes()
        assert params_fingerprint(params) == params_fingerprint(initial)

    def test_missing_image_rejected(self, small_dataset, tmp_path):
        from ilrkit.pipeline import ContentStore

        empty_store = ContentStore(tmp_path / "empty")
        config = TrainConfig(loss="recallk", epochs=1, classes_per_batch=2)
        with pytest.raises(MissingImageError):
            train(small_dataset.manifest, empty_store, config)

    def test_non_finite_loss_aborts_with_step(self, small_dataset, monkeypatch):
        from ilrkit import losses as losses_module
        from ilrkit.errors import NonFiniteLossError
        from ilrkit.losses.common import LossReport

        calls = {"n": 0}
        real = losses_module.recall_at_k_loss

        def poisoned(scores, labels, config=None):
            calls["n"] += 1
            report = real(scores, labels, config)
            if calls["n"] > 6:  # poison a later batch, not the first
                return LossReport(value=float("nan"), grad=report.grad)
            return report

        monkeypatch.setattr(losses_module, "recall_at_k_loss", poisoned)
        config = TrainConfig(loss="recallk", epochs=2, classes_per_batch=2, rng_seed=0)
        with pytest.raises(NonFiniteLossError) as info:
            train(small_dataset.manifest, small_dataset.store, config)
        assert info.value.step >= 1

    def test_ranking_loss_needs_two_images_per_class(self, small_dataset, monkeypatch):
        classes = small_dataset.manifest.instance_classes()
        single = [
            InstanceClass(c.class_id, c.image_ids[:1]) for c in classes
        ]
        monkeypatch.setattr(
            type(small_dataset.manifest), "instance_classes", lambda self: single
        )
        config = TrainConfig(loss="recallk", epochs=1, classes_per_batch=2)
        with pytest.raises(ValueError):
            train(small_dataset.manifest, small_dataset.store, config)

    @pytest.mark.parametrize("loss", ["infonce", "contrastive", "softmax-margin"])
    def test_all_heads_run(self, small_dataset, loss):
        config = TrainConfig(
            loss=loss, learning_rate=1e-3, epochs=1, classes_per_batch=2, rng_seed=1
        )
        params, log = train(small_dataset.manifest, small_dataset.store, config)
        assert np.all(np.isfinite(params.weight))
        assert log.loss_head == loss
        assert all(np.isfinite(entry[3]) for entry in log.entries)


class TestCheckpoint:
    def test_roundtrip_bit_exact(self, tmp_path, rng):
        params = init_params(12, 5, seed=9)
        params.step = 42
        params.m_weight += rng.normal(size=params.m_weight.shape) * 0.01
        path = tmp_path / "c.ilck"
        save_checkpoint(path, params)
        loaded = load_checkpoint(path)
        assert loaded.step == 42
        again = tmp_path / "c2.ilck"
        save_checkpoint(again, loaded)
        assert again.read_bytes() == path.read_bytes()

    def test_shape_recovery(self, tmp_path):
        params = init_params(7, 3, seed=1)
        path = tmp_path / "c.ilck"
        save_checkpoint(path, params)
        loaded = load_checkpoint(path)
        assert loaded.input_dim == 7
        assert loaded.descriptor_dim == 3

    def test_train_log_csv(self, tmp_path):
        from ilrkit.trainer import TrainLog

        log = TrainLog(loss_head="recallk", config_fingerprint="abc")
        log.add(1, 0, 0, 0.5)
        log.add(2, 0, 1, 0.25)
        path = tmp_path / "log.csv"
        save_train_log_csv(path, log)
        lines = path.read_text(encoding="utf-8").splitlines()
        assert lines[0] == "step,epoch,batch,loss"
        assert lines[1] == "1,0,0,0.5"
