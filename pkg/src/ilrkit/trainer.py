"""Desk-scale encoder training: featurize, batch, optimize.

The encoder is deliberately small — a linear map plus L2 normalization on a
fixed 16x16 RGB flatten — so every gradient is hand-derivable and checkable
against finite differences. The training loop mirrors the batch scheme from
:mod:`ilrkit.batching`: B classes per batch, one query per class, loss
averaged over the B retrieval tasks, AdamW-style decoupled weight decay.

All randomness (shuffles, query picks, augmentations, init) flows through
seeded :class:`ilrkit.rng.SplitMix64` streams, so single-threaded training
is bitwise reproducible.
"""

from __future__ import annotations

import hashlib
import json
import struct
import time
from dataclasses import dataclass, field, asdict

import numpy as np

from . import losses
from .batching import BatchPlan, InstanceClass, batch_to_tasks, build_epoch
from .descriptors import normalize
from .errors import (
    FormatError,
    MissingImageError,
    NonFiniteLossError,
    TooSmallError,
    ZeroVectorError,
)
from .imaging import decode_rgb, resize_bilinear
from .rng import SplitMix64, derive_seed

FEATURE_SIDE = 16
FEATURE_DIM = FEATURE_SIDE * FEATURE_SIDE * 3

CHECKPOINT_MAGIC = b"ILCK"
CHECKPOINT_VERSION = 1

LOSS_HEADS = ("recallk", "infonce", "contrastive", "softmax-margin")


# ---------------------------------------------------------------------------
# configuration


@dataclass(frozen=True)
class AugmentConfig:
    """Strengths for the training-time augmentations; zeros disable them."""

    crop_scale_min: float = 0.5
    crop_scale_max: float = 1.0
    flip_p: float = 0.5
    jitter: float = 0.2
    grayscale_p: float = 0.2

    def __post_init__(self):
        if not 0.0 < self.crop_scale_min <= self.crop_scale_max <= 1.0:
            raise ValueError("crop scale range must satisfy 0 < min <= max <= 1")

    @classmethod
    def disabled(cls) -> "AugmentConfig":
        return cls(crop_scale_min=1.0, crop_scale_max=1.0, flip_p=0.0,
                   jitter=0.0, grayscale_p=0.0)


@dataclass(frozen=True)
class TrainConfig:
    loss: str = "recallk"
    learning_rate: float = 1e-5
    weight_decay: float = 1e-6
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    epochs: int = 1
    classes_per_batch: int = 2
    rng_seed: int = 0
    descriptor_dim: int = 64
    augment: AugmentConfig = field(default_factory=AugmentConfig)
    recallk: losses.RecallKConfig = field(default_factory=losses.RecallKConfig)
    infonce_temperature: float = 0.05
    contrastive_margin: float = 1.0
    softmax_scale: float = 16.0
    softmax_margin: float = 0.0
    # the classifier head learns faster than the encoder, mirroring the
    # usual two-speed schedule for classification heads; None = same rate
    classifier_lr: float | None = None
    # epochs during which only the classifier trains (encoder frozen),
    # letting the class rows settle on centroids before fine-tuning
    classifier_warmup_epochs: int = 0

    def __post_init__(self):
        if self.loss not in LOSS_HEADS:
            raise ValueError(f"unknown loss head {self.loss!r}; pick from {LOSS_HEADS}")
        if self.learning_rate < 0:
            raise ValueError("learning_rate must be >= 0")
        if self.epochs < 1:
            raise ValueError("epochs must be >= 1")

    def fingerprint(self) -> str:
        blob = json.dumps(asdict(self), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode("utf-8")).hexdigest()


# ---------------------------------------------------------------------------
# featurization and augmentation


@dataclass(frozen=True)
class FeatureRecord:
    image_id: str
    features: np.ndarray  # float64, FEATURE_DIM


def features_from_array(rgb: np.ndarray) -> np.ndarray:
    """16x16 bilinear resize, channels scaled to [0,1] and concatenated."""
    arr = np.asarray(rgb)
    if arr.ndim != 3 or arr.shape[2] != 3:
        raise ValueError("expected an (H, W, 3) RGB raster")
    if arr.shape[0] < FEATURE_SIDE or arr.shape[1] < FEATURE_SIDE:
        raise TooSmallError(
            f"image {arr.shape[1]}x{arr.shape[0]} below {FEATURE_SIDE}x{FEATURE_SIDE}"
        )
    small = resize_bilinear(arr.astype(np.float64) / 255.0, FEATURE_SIDE, FEATURE_SIDE)
    return np.concatenate([small[:, :, c].ravel() for c in range(3)])


def featurize(image_id: str, data: bytes) -> FeatureRecord:
    """Decode PNG/JPEG bytes and featurize; raises DecodeError / TooSmallError."""
    return FeatureRecord(image_id=image_id, features=features_from_array(decode_rgb(data)))


def augment(rgb: np.ndarray, rng: SplitMix64, config: AugmentConfig) -> np.ndarray:
    """Seeded crop / resize-back / flip / color jitter / grayscale.

    Draws happen in a fixed order independent of which branches fire, so a
    stream position never depends on earlier outcomes.
    """
    arr = np.asarray(rgb, dtype=np.uint8)
    h, w = arr.shape[:2]

    scale = rng.uniform(config.crop_scale_min, config.crop_scale_max)
    crop_h = max(1, int(round(scale * h)))
    crop_w = max(1, int(round(scale * w)))
    y0 = rng.randbelow(h - crop_h + 1)
    x0 = rng.randbelow(w - crop_w + 1)
    u_flip = rng.uniform()
    brightness = rng.uniform(1.0 - config.jitter, 1.0 + config.jitter)
    contrast = rng.uniform(1.0 - config.jitter, 1.0 + config.jitter)
    u_gray = rng.uniform()

    out = arr[y0 : y0 + crop_h, x0 : x0 + crop_w]
    if (crop_h, crop_w) != (h, w):
        out = resize_bilinear(out.astype(np.float64), h, w)
    else:
        out = out.astype(np.float64)
    if u_flip < config.flip_p:
        out = out[:, ::-1]
    out = out * brightness
    mean = out.mean()
    out = (out - mean) * contrast + mean
    if u_gray < config.grayscale_p:
        luma = 0.299 * out[:, :, 0] + 0.587 * out[:, :, 1] + 0.114 * out[:, :, 2]
        out = np.stack([luma, luma, luma], axis=2)
    return np.clip(np.rint(out), 0, 255).astype(np.uint8)


# ---------------------------------------------------------------------------
# encoder


@dataclass
class EncoderParams:
    """Linear encoder weights with their Adam moments and step counter."""

    weight: np.ndarray  # (d, D_in) float64
    bias: np.ndarray  # (d,)
    m_weight: np.ndarray
    v_weight: np.ndarray
    m_bias: np.ndarray
    v_bias: np.ndarray
    step: int = 0

    @property
    def input_dim(self) -> int:
        return int(self.weight.shape[1])

    @property
    def descriptor_dim(self) -> int:
        return int(self.weight.shape[0])


def init_params(input_dim: int, descriptor_dim: int, seed: int) -> EncoderParams:
    rng = SplitMix64(derive_seed(seed, "encoder-init"))
    bound = 1.0 / np.sqrt(input_dim)
    weight = np.array(
        [
            [rng.uniform(-bound, bound) for _ in range(input_dim)]
            for _ in range(descriptor_dim)
        ],
        dtype=np.float64,
    )
    bias = np.zeros(descriptor_dim)
    return EncoderParams(
        weight=weight,
        bias=bias,
        m_weight=np.zeros_like(weight),
        v_weight=np.zeros_like(weight),
        m_bias=np.zeros_like(bias),
        v_bias=np.zeros_like(bias),
    )


def forward(params: EncoderParams, features: np.ndarray) -> np.ndarray:
    """Unit-norm descriptor of one feature vector.

    On a zero pre-normalization vector, the bias is nudged by 1e-8 once and
    the forward retried before giving up.
    """
    pre = params.weight @ features + params.bias
    try:
        return normalize(pre)
    except ZeroVectorError:
        return normalize(params.weight @ features + (params.bias + 1e-8))


def _forward_batch(params: EncoderParams, feats: np.ndarray):
    pre = feats @ params.weight.T + params.bias
    norms = np.linalg.norm(pre, axis=1)
    bad = norms < 1e-12
    if np.any(bad):
        pre[bad] = feats[bad] @ params.weight.T + (params.bias + 1e-8)
        norms = np.linalg.norm(pre, axis=1)
        if np.any(norms < 1e-12):
            raise ZeroVectorError("descriptor collapsed to zero even after bias nudge")
    return pre / norms[:, None], norms


def _normalize_backward(z: np.ndarray, norms: np.ndarray, dz: np.ndarray) -> np.ndarray:
    # z = y / |y|  =>  dL/dy = (dL/dz - z (z . dL/dz)) / |y|
    inner = np.sum(z * dz, axis=1, keepdims=True)
    return (dz - z * inner) / norms[:, None]


# ---------------------------------------------------------------------------
# training loop


@dataclass
class TrainLog:
    loss_head: str
    config_fingerprint: str
    entries: list = field(default_factory=list)  # (step, epoch, batch, loss)
    epoch_means: list = field(default_factory=list)
    wall_time: float = 0.0

    def add(self, step: int, epoch: int, batch: int, loss: float) -> None:
        self.entries.append((step, epoch, batch, loss))


def save_train_log_csv(path, log: TrainLog) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("step,epoch,batch,loss\n")
        for step, epoch, batch, loss in log.entries:
            fh.write(f"{step},{epoch},{batch},{loss!r}\n")


@dataclass
class _ClassifierHead:
    """Auxiliary unit-row classifier trained only by the softmax-margin head.

    Lives outside EncoderParams: it is a training-time scaffold, not part
    of the descriptor model, and is not checkpointed.
    """

    class_ids: tuple[str, ...]
    weights: np.ndarray  # (C, d), rows unit-norm
    m: np.ndarray
    v: np.ndarray

    @classmethod
    def create(cls, class_ids, descriptor_dim: int, seed: int) -> "_ClassifierHead":
        rng = SplitMix64(derive_seed(seed, "classifier-init"))
        rows = []
        for _ in class_ids:
            row = np.array([rng.uniform(-1.0, 1.0) for _ in range(descriptor_dim)])
            rows.append(normalize(row))
        weights = np.stack(rows)
        return cls(
            class_ids=tuple(class_ids),
            weights=weights,
            m=np.zeros_like(weights),
            v=np.zeros_like(weights),
        )

    @classmethod
    def create_from_centroids(
        cls, params: EncoderParams, classes, decoded: dict, seed: int
    ) -> "_ClassifierHead":
        """Initialize each class row at the centroid of its initial
        descriptors (proxy-style init): with only a handful of gradient
        touches per class at desk scale, rows started at random never
        reach their centroid."""
        fallback = SplitMix64(derive_seed(seed, "classifier-init"))
        rows = []
        for c in classes:
            zs = np.stack(
                [
                    forward(params, features_from_array(decoded[image_id]))
                    for image_id in c.image_ids
                ]
            )
            mean = zs.mean(axis=0)
            try:
                rows.append(normalize(mean))
            except ZeroVectorError:
                row = np.array(
                    [fallback.uniform(-1.0, 1.0) for _ in range(params.descriptor_dim)]
                )
                rows.append(normalize(row))
        weights = np.stack(rows)
        return cls(
            class_ids=tuple(c.class_id for c in classes),
            weights=weights,
            m=np.zeros_like(weights),
            v=np.zeros_like(weights),
        )


def _adam_update(param, m, v, grad, lr, beta1, beta2, eps, step):
    m *= beta1
    m += (1.0 - beta1) * grad
    v *= beta2
    v += (1.0 - beta2) * grad * grad
    m_hat = m / (1.0 - beta1**step)
    v_hat = v / (1.0 - beta2**step)
    param -= lr * m_hat / (np.sqrt(v_hat) + eps)


def batch_loss_and_grads(
    plan: BatchPlan,
    features: np.ndarray,
    row_of: dict[str, int],
    params: EncoderParams,
    config: TrainConfig,
    classifier: _ClassifierHead | None,
    epoch: int,
):
    """Mean task loss of one batch plus gradients w.r.t. W, b (and classifier).

    Exposed separately from :func:`train` so end-to-end gradients can be
    checked against finite differences without running the optimizer.
    """
    z, norms = _forward_batch(params, features)
    tasks = batch_to_tasks(plan)
    dz = np.zeros_like(z)
    d_classifier = np.zeros_like(classifier.weights) if classifier is not None else None
    total = 0.0

    for task in tasks:
        q = row_of[task.query_id]
        db_rows = np.array([row_of[i] for i in task.database_ids])
        if config.loss in ("recallk", "infonce"):
            scores = z[db_rows] @ z[q]
            if config.loss == "recallk":
                report = losses.recall_at_k_loss(scores, task.labels, config.recallk)
            else:
                report = losses.info_nce_loss(
                    scores, task.labels, config.infonce_temperature
                )
            total += report.value
            dz[q] += report.grad @ z[db_rows]
            dz[db_rows] += np.outer(report.grad, z[q])
        elif config.loss == "contrastive":
            rng = SplitMix64(
                derive_seed(config.rng_seed, "contrastive-pick", epoch,
                            plan.batch_index, task.class_id)
            )
            pos_rows = db_rows[task.labels == 1]
            neg_rows = db_rows[task.labels == 0]
            pick = pos_rows[rng.randbelow(len(pos_rows))]
            report = losses.contrastive_loss(
                z[q], z[pick], z[neg_rows], config.contrastive_margin
            )
            total += report.value
            dz[q] += report.grad_anchor
            dz[pick] += report.grad_positive
            dz[neg_rows] += report.grad_negatives
        else:  # softmax-margin: classify every image of the task's class
            class_index = classifier.class_ids.index(task.class_id)
            member_rows = [q] + [int(r) for r in db_rows[task.labels == 1]]
            task_value = 0.0
            for row in member_rows:
                report = losses.softmax_margin_loss(
                    z[row],
                    class_index,
                    classifier.weights,
                    config.softmax_scale,
                    config.softmax_margin,
                )
                task_value += report.value
                dz[row] += report.grad_embedding / len(member_rows)
                d_classifier += report.grad_weights / len(member_rows)
            total += task_value / len(member_rows)

    n_tasks = len(tasks)
    total /= n_tasks
    dz /= n_tasks
    dy = _normalize_backward(z, norms, dz)
    d_weight = dy.T @ features
    d_bias = dy.sum(axis=0)
    if d_classifier is not None:
        d_classifier /= n_tasks
    return total, d_weight, d_bias, d_classifier


def train(manifest, store, config: TrainConfig):
    """Run the full training loop; returns (EncoderParams, TrainLog).

    ``manifest`` must provide ``instance_classes()`` and ``store`` a
    ``load(image_id) -> bytes``; the generation pipeline's manifest and
    content store satisfy both.
    """
    started = time.monotonic()
    classes = manifest.instance_classes()
    if config.loss != "softmax-margin" and any(len(c.image_ids) < 2 for c in classes):
        raise ValueError(
            "ranking losses need at least 2 images per class (no positives otherwise)"
        )
    decoded: dict[str, np.ndarray] = {}
    for cls in classes:
        for image_id in cls.image_ids:
            if not store.has(image_id):
                raise MissingImageError(f"image {image_id} missing from store")
            decoded[image_id] = decode_rgb(store.load(image_id))

    params = init_params(FEATURE_DIM, config.descriptor_dim, config.rng_seed)
    classifier = None
    if config.loss == "softmax-margin":
        classifier = _ClassifierHead.create_from_centroids(
            params, classes, decoded, config.rng_seed
        )

    log = TrainLog(loss_head=config.loss, config_fingerprint=config.fingerprint())
    step = 0
    for epoch in range(config.epochs):
        plans = build_epoch(
            classes, config.classes_per_batch, derive_seed(config.rng_seed, "epoch", epoch)
        )
        epoch_losses = []
        for plan in plans:
            image_ids = [i for entry in plan.entries for i in entry.image_ids]
            row_of = {image_id: row for row, image_id in enumerate(image_ids)}
            feats = np.stack(
                [
                    features_from_array(
                        augment(
                            decoded[image_id],
                            SplitMix64(derive_seed(config.rng_seed, "augment", epoch, image_id)),
                            config.augment,
                        )
                    )
                    for image_id in image_ids
                ]
            )
            loss, d_weight, d_bias, d_classifier = batch_loss_and_grads(
                plan, feats, row_of, params, config, classifier, epoch
            )
            if not np.isfinite(loss):
                raise NonFiniteLossError(
                    f"non-finite loss at step {step} (epoch {epoch}, batch {plan.batch_index})",
                    step=step,
                )
            step += 1
            params.step = step
            encoder_lr = config.learning_rate
            if classifier is not None and epoch < config.classifier_warmup_epochs:
                encoder_lr = 0.0
            decay = 1.0 - encoder_lr * config.weight_decay
            params.weight *= decay
            params.bias *= decay
            _adam_update(
                params.weight, params.m_weight, params.v_weight, d_weight,
                encoder_lr, config.beta1, config.beta2, config.eps, step,
            )
            _adam_update(
                params.bias, params.m_bias, params.v_bias, d_bias,
                encoder_lr, config.beta1, config.beta2, config.eps, step,
            )
            if classifier is not None:
                head_lr = (
                    config.classifier_lr
                    if config.classifier_lr is not None
                    else config.learning_rate
                )
                classifier.weights *= 1.0 - head_lr * config.weight_decay
                _adam_update(
                    classifier.weights, classifier.m, classifier.v, d_classifier,
                    head_lr, config.beta1, config.beta2, config.eps, step,
                )
                row_norms = np.linalg.norm(classifier.weights, axis=1, keepdims=True)
                classifier.weights /= np.maximum(row_norms, 1e-12)
            log.add(step, epoch, plan.batch_index, loss)
            epoch_losses.append(loss)
        log.epoch_means.append(float(np.mean(epoch_losses)))
    log.wall_time = time.monotonic() - started
    return params, log


def extract_descriptors(params: EncoderParams, records: list[FeatureRecord]):
    """Descriptors for clean (un-augmented) feature records, id-aligned."""
    from .descriptors import DescriptorSet

    rows = [(rec.image_id, forward(params, rec.features)) for rec in records]
    return DescriptorSet.from_rows(rows)


# ---------------------------------------------------------------------------
# checkpoint format


def params_fingerprint(params: EncoderParams) -> str:
    """Hash of the model parameters (weights and bias) as stored float32."""
    h = hashlib.sha256()
    h.update(params.weight.astype("<f4").tobytes())
    h.update(params.bias.astype("<f4").tobytes())
    return h.hexdigest()


def save_checkpoint(path, params: EncoderParams) -> None:
    """Binary checkpoint: magic ILCK, version u16, D_in u32, d u32,
    step u64, then float32 LE arrays W, b, mW, mb, vW, vb."""
    with open(path, "wb") as fh:
        fh.write(CHECKPOINT_MAGIC)
        fh.write(
            struct.pack(
                "<HIIQ",
                CHECKPOINT_VERSION,
                params.input_dim,
                params.descriptor_dim,
                params.step,
            )
        )
        for arr in (
            params.weight,
            params.bias,
            params.m_weight,
            params.m_bias,
            params.v_weight,
            params.v_bias,
        ):
            fh.write(np.ascontiguousarray(arr, dtype="<f4").tobytes())


def load_checkpoint(path) -> EncoderParams:
    with open(path, "rb") as fh:
        data = fh.read()
    if data[:4] != CHECKPOINT_MAGIC:
        raise FormatError("bad magic bytes; not a checkpoint file")
    version, d_in, d, step = struct.unpack_from("<HIIQ", data, 4)
    if version != CHECKPOINT_VERSION:
        raise FormatError(f"unsupported checkpoint version {version}")
    offset = 4 + struct.calcsize("<HIIQ")
    shapes = [(d, d_in), (d,), (d, d_in), (d,), (d, d_in), (d,)]
    arrays = []
    for shape in shapes:
        count = int(np.prod(shape))
        arr = np.frombuffer(data, dtype="<f4", count=count, offset=offset)
        arrays.append(arr.reshape(shape).astype(np.float64))
        offset += count * 4
    if offset != len(data):
        raise FormatError("checkpoint has trailing bytes")
    weight, bias, m_w, m_b, v_w, v_b = arrays
    return EncoderParams(
        weight=weight, bias=bias, m_weight=m_w, v_weight=v_w,
        m_bias=m_b, v_bias=v_b, step=step,
    )
