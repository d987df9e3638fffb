"""Learnable pullback metrics: expansive autoencoders over pixel features.

A model embeds each pixel vector ``(x, y, s*c...)`` into a latent space; the
l1 metric there pulls back to a metric on the image, and the magnitude
weights of a patch under that metric are trained towards ground-truth edge
labels.  The training loss is

    L = L_ae + lambda * L_mag

with a mean-squared reconstruction term and a class-balanced magnitude term
(squared error on edge pixels, absolute error on non-edge pixels).  The
gradient flows through the linear solve via
``d(zeta^-1 1) = -zeta^-1 (d zeta) zeta^-1 1``, so one extra triangular
solve per patch is all the backward pass costs on top of the forward
factorization.

Everything is plain numpy; the models are small enough (a few thousand
parameters) that hand-written layers keep training deterministic and easy
to check against finite differences.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from typing import List, Optional, Sequence, Tuple

import numpy as np
import scipy.linalg as sla

from .approx import PatchConfig
from .edges import EdgeMap, magnitude_edges
from .image import DigitalImage
from .magnitude import MagnitudeMap, NotInvertibleError, image_magnitude
from .metric import MetricSpec, base_features

__all__ = ["Linear", "ReLU", "Conv3x3", "EmbeddingModel", "TrainConfig",
           "pullback_magnitude", "loss_and_grad", "validation_loss", "train",
           "transform_image", "save_checkpoint", "load_checkpoint", "TrainHistory"]


class Linear:
    def __init__(self, w: np.ndarray, b: np.ndarray):
        self.w = np.asarray(w, dtype=np.float64)
        self.b = np.asarray(b, dtype=np.float64)
        self.gw = np.zeros_like(self.w)
        self.gb = np.zeros_like(self.b)
        self._x = None

    @classmethod
    def uniform(cls, n_in: int, n_out: int, rng: np.random.Generator,
                scale: float = 0.05) -> "Linear":
        return cls(rng.uniform(-scale, scale, (n_out, n_in)),
                   rng.uniform(-scale, scale, n_out))

    def forward(self, x: np.ndarray) -> np.ndarray:
        self._x = x
        return x @ self.w.T + self.b

    def backward(self, gout: np.ndarray) -> np.ndarray:
        self.gw += gout.T @ self._x
        self.gb += gout.sum(axis=0)
        return gout @ self.w

    def params(self):
        return [self.w, self.b]

    def grads(self):
        return [self.gw, self.gb]


class ReLU:
    def __init__(self):
        self._mask = None

    def forward(self, x: np.ndarray) -> np.ndarray:
        self._mask = x > 0
        return np.where(self._mask, x, 0.0)

    def backward(self, gout: np.ndarray) -> np.ndarray:
        return np.where(self._mask, gout, 0.0)

    def params(self):
        return []

    def grads(self):
        return []


class Conv3x3:
    """Single 3x3 convolution over an image grid, stride 1, replicate pad."""

    def __init__(self, w: np.ndarray, b: np.ndarray):
        self.w = np.asarray(w, dtype=np.float64)   # (out_c, in_c, 3, 3)
        self.b = np.asarray(b, dtype=np.float64)
        self.gw = np.zeros_like(self.w)
        self.gb = np.zeros_like(self.b)
        self._padded = None

    @classmethod
    def uniform(cls, in_c: int, out_c: int, rng: np.random.Generator,
                scale: float = 0.05) -> "Conv3x3":
        return cls(rng.uniform(-scale, scale, (out_c, in_c, 3, 3)),
                   rng.uniform(-scale, scale, out_c))

    def forward(self, data: np.ndarray) -> np.ndarray:
        h, w = data.shape[:2]
        self._padded = np.pad(data, ((1, 1), (1, 1), (0, 0)), mode="edge")
        out = np.tile(self.b, (h, w, 1))
        for u in range(3):
            for v in range(3):
                out += self._padded[u:u + h, v:v + w, :] @ self.w[:, :, u, v].T
        return out

    def backward(self, gout: np.ndarray) -> None:
        h, w = gout.shape[:2]
        self.gb += gout.sum(axis=(0, 1))
        for u in range(3):
            for v in range(3):
                patch = self._padded[u:u + h, v:v + w, :]
                self.gw[:, :, u, v] += np.einsum("hwo,hwc->oc", gout, patch)

    def params(self):
        return [self.w, self.b]

    def grads(self):
        return [self.gw, self.gb]


_LATENT_DIM = {"I": 10, "II": 40, "III": 40}


class EmbeddingModel:
    """Encoder/decoder pair defining a pullback metric on pixel features.

    Architectures:
      I    linear autoencoder, one layer, latent dimension 10; initialised
           at identity-plus-zero-padding so it starts as the plain l1 metric
      II   non-linear autoencoder with hidden widths 10, 20, 40 and
           rectifier activations, latent dimension 40
      III  a single 3x3 convolution lifting the channels to 15 extra
           per-pixel features, followed by a one-layer linear autoencoder
           into a 40-dimensional latent space
    """

    def __init__(self, architecture: str, channels: int,
                 encoder: List, decoder: List, conv: Optional[Conv3x3] = None):
        if architecture not in _LATENT_DIM:
            raise ValueError(f"unknown architecture {architecture!r}")
        self.architecture = architecture
        self.channels = channels
        self.encoder = encoder
        self.decoder = decoder
        self.conv = conv

    # ---------------- construction ----------------

    @classmethod
    def model_i(cls, channels: int, identity: bool = True,
                rng: Optional[np.random.Generator] = None) -> "EmbeddingModel":
        f = 2 + channels
        latent = _LATENT_DIM["I"]
        if identity:
            w_enc = np.zeros((latent, f))
            w_enc[:f, :f] = np.eye(f)
            w_dec = np.zeros((f, latent))
            w_dec[:, :f] = np.eye(f)
            enc = [Linear(w_enc, np.zeros(latent))]
            dec = [Linear(w_dec, np.zeros(f))]
        else:
            rng = rng or np.random.default_rng(0)
            enc = [Linear.uniform(f, latent, rng)]
            dec = [Linear.uniform(latent, f, rng)]
        return cls("I", channels, enc, dec)

    @classmethod
    def model_ii(cls, channels: int, rng: np.random.Generator) -> "EmbeddingModel":
        f = 2 + channels
        widths = [10, 20, 40]
        enc: List = []
        prev = f
        for i, width in enumerate(widths):
            enc.append(Linear.uniform(prev, width, rng))
            if i < len(widths) - 1:
                enc.append(ReLU())
            prev = width
        dec: List = []
        for i, width in enumerate(widths[-2::-1] + [f]):
            dec.append(Linear.uniform(prev, width, rng))
            if i < len(widths) - 1:
                dec.append(ReLU())
            prev = width
        return cls("II", channels, enc, dec)

    @classmethod
    def model_iii(cls, channels: int, rng: np.random.Generator) -> "EmbeddingModel":
        conv = Conv3x3.uniform(channels, 15, rng)
        f = 2 + channels + 15
        latent = _LATENT_DIM["III"]
        enc = [Linear.uniform(f, latent, rng)]
        dec = [Linear.uniform(latent, f, rng)]
        return cls("III", channels, enc, dec, conv=conv)

    @classmethod
    def create(cls, architecture: str, channels: int,
               seed: int = 0) -> "EmbeddingModel":
        if architecture not in _LATENT_DIM:
            raise ValueError(f"unknown architecture {architecture!r}")
        rng = np.random.default_rng(seed)
        if architecture == "I":
            return cls.model_i(channels)
        if architecture == "II":
            return cls.model_ii(channels, rng)
        return cls.model_iii(channels, rng)

    @property
    def latent_dim(self) -> int:
        return _LATENT_DIM[self.architecture]

    @property
    def input_dim(self) -> int:
        return 2 + self.channels + (15 if self.conv is not None else 0)

    # ---------------- forward ----------------

    def input_features(self, data: np.ndarray, channel_weight: float) -> np.ndarray:
        """Per-pixel model inputs: (x, y, s*c...) plus conv features for III."""
        feats = base_features(data, channel_weight)
        if self.conv is not None:
            extra = self.conv.forward(data)
            feats = np.concatenate([feats, extra.reshape(-1, extra.shape[2])], axis=1)
        return feats

    def encode(self, feats: np.ndarray) -> np.ndarray:
        out = feats
        for layer in self.encoder:
            out = layer.forward(out)
        return out

    def decode(self, latent: np.ndarray) -> np.ndarray:
        out = latent
        for layer in self.decoder:
            out = layer.forward(out)
        return out

    def encode_image(self, data: np.ndarray, channel_weight: float) -> np.ndarray:
        """Latent vectors of every pixel; this is the pullback hook used by
        :func:`magimage.metric.featurize`."""
        return self.encode(self.input_features(data, channel_weight))

    # ---------------- parameters ----------------

    def _layers(self):
        layers = list(self.encoder) + list(self.decoder)
        if self.conv is not None:
            layers = [self.conv] + layers
        return layers

    def parameter_arrays(self):
        out = []
        for layer in self._layers():
            out.extend(layer.params())
        return out

    def gradient_arrays(self):
        out = []
        for layer in self._layers():
            out.extend(layer.grads())
        return out

    def zero_grad(self):
        for g in self.gradient_arrays():
            g[...] = 0.0

    def get_flat(self) -> np.ndarray:
        return np.concatenate([p.ravel() for p in self.parameter_arrays()])

    def set_flat(self, flat: np.ndarray) -> None:
        flat = np.asarray(flat, dtype=np.float64)
        pos = 0
        for p in self.parameter_arrays():
            p[...] = flat[pos:pos + p.size].reshape(p.shape)
            pos += p.size
        if pos != flat.size:
            raise ValueError(f"parameter vector of size {flat.size}, expected {pos}")

    def grad_flat(self) -> np.ndarray:
        return np.concatenate([g.ravel() for g in self.gradient_arrays()])


@dataclass(frozen=True)
class TrainConfig:
    learning_rate: float = 1e-3
    lam: float = 1.0
    patch: PatchConfig = field(default_factory=lambda: PatchConfig(40, 40, 2))
    epochs: Optional[int] = None     # defaults: 100 random, 50 single_shot
    scenario: str = "random"
    validation_fraction: float = 0.2
    seed: int = 0

    def __post_init__(self):
        if self.lam < 0:
            raise ValueError("lambda must be nonnegative")
        if not (0.0 < self.validation_fraction < 1.0):
            raise ValueError("validation_fraction must lie in (0, 1)")
        if self.scenario not in ("random", "single_shot"):
            raise ValueError(f"unknown scenario {self.scenario!r}")

    @property
    def resolved_epochs(self) -> int:
        if self.epochs is not None:
            return self.epochs
        return 100 if self.scenario == "random" else 50


def pullback_magnitude(patch, model: EmbeddingModel,
                       channel_weight: float = 1.0) -> MagnitudeMap:
    """Magnitude weights of a patch under the model's pullback metric."""
    img = patch if isinstance(patch, DigitalImage) else DigitalImage.from_array(patch)
    spec = MetricSpec(base="l1", channel_weight=channel_weight, embedding=model)
    return image_magnitude(img, spec)


def _magnitude_forward(z: np.ndarray):
    """Similarity, factorization and weights of latent vectors under l1."""
    n = z.shape[0]
    diff = np.abs(z[:, None, :] - z[None, :, :]).sum(axis=2)
    zeta = np.exp(-diff)
    cho = sla.cho_factor(zeta, lower=True)
    w = sla.cho_solve(cho, np.ones(n))
    return zeta, cho, w


def _magnitude_backward(zeta, cho, w, z, gw) -> np.ndarray:
    """Gradient of a scalar loss wrt the latent vectors, given dL/dw."""
    u = sla.cho_solve(cho, gw)
    # dL/d zeta_ab = -u_a w_b; zeta_ab = exp(-D_ab)  =>  dL/dD_ab = u_a w_b zeta_ab
    p = (u[:, None] * w[None, :]) * zeta
    m = p + p.T
    np.fill_diagonal(m, 0.0)
    gz = np.empty_like(z)
    for k in range(z.shape[1]):
        s = np.sign(z[:, k, None] - z[None, :, k])
        gz[:, k] = (m * s).sum(axis=1)
    return gz


def _core_mask(h: int, w: int, margin: int) -> np.ndarray:
    if margin == 0:
        return np.ones((h, w), dtype=bool)
    core = np.zeros((h, w), dtype=bool)
    core[margin:h - margin, margin:w - margin] = True
    return core


def _magnitude_loss_terms(y: np.ndarray, yhat: np.ndarray):
    """Class-balanced magnitude loss and its gradient wrt yhat."""
    pos = y == 1.0
    neg = ~pos
    n_pos, n_neg = int(pos.sum()), int(neg.sum())
    loss = 0.0
    grad = np.zeros_like(yhat)
    if n_pos:
        r = y[pos] - yhat[pos]
        loss += float((r * r).sum()) / n_pos
        grad[pos] = -2.0 * r / n_pos
    if n_neg:
        r = y[neg] - yhat[neg]
        loss += float(np.abs(r).sum()) / n_neg
        grad[neg] = -np.sign(r) / n_neg
    return loss, grad


def loss_and_grad(patch_data: np.ndarray, labels: np.ndarray,
                  model: EmbeddingModel, cfg: TrainConfig,
                  core_margin: int = 0):
    """Composite loss of one patch and the gradient wrt all parameters.

    ``labels`` must be binary and match the patch grid.  With a positive
    ``core_margin`` the magnitude term is evaluated on the interior only
    (the margin absorbs patch-boundary weight elevation); the reconstruction
    term always covers every pixel.

    Returns ``(loss, flat_gradient, (l_ae, l_mag))``.
    """
    data = np.asarray(patch_data, dtype=np.float64)
    if data.ndim == 2:
        data = data[:, :, None]
    labels = np.asarray(labels, dtype=np.float64)
    if labels.shape != data.shape[:2]:
        raise ValueError(f"label grid {labels.shape} does not match patch {data.shape[:2]}")
    h, w = labels.shape
    s = cfg.patch.metric.channel_weight
    lam = cfg.lam
    model.zero_grad()

    x = model.input_features(data, s)
    z = model.encode(x)
    xhat = model.decode(z)
    n = x.shape[0]
    resid = x - xhat
    l_ae = float((resid * resid).sum()) / n

    flat_core = _core_mask(h, w, core_margin).ravel()

    zeta, cho, wvec = _magnitude_forward(z)
    y = labels.ravel()[flat_core]
    yhat = wvec[flat_core]
    l_mag, g_yhat = _magnitude_loss_terms(y, yhat)

    gw = np.zeros_like(wvec)
    gw[flat_core] = lam * g_yhat
    gz_mag = _magnitude_backward(zeta, cho, wvec, z, gw)

    g_xhat = -(2.0 / n) * resid
    gz_ae = g_xhat
    for layer in reversed(model.decoder):
        gz_ae = layer.backward(gz_ae)
    gx = gz_mag + gz_ae
    for layer in reversed(model.encoder):
        gx = layer.backward(gx)
    gx += (2.0 / n) * resid          # direct dependence of L_ae on the input
    if model.conv is not None:
        g_extra = gx[:, 2 + model.channels:].reshape(h, w, 15)
        model.conv.backward(g_extra)

    loss = l_ae + lam * l_mag
    return loss, model.grad_flat(), (l_ae, l_mag)


def validation_loss(patch_data: np.ndarray, labels: np.ndarray,
                    model: EmbeddingModel, channel_weight: float = 1.0,
                    core_margin: int = 0) -> float:
    """Absolute-error magnitude loss on both classes (model selection)."""
    data = np.asarray(patch_data, dtype=np.float64)
    if data.ndim == 2:
        data = data[:, :, None]
    labels = np.asarray(labels, dtype=np.float64)
    if labels.shape != data.shape[:2]:
        raise ValueError(f"label grid {labels.shape} does not match patch {data.shape[:2]}")
    h, w = labels.shape
    z = model.encode_image(data, channel_weight)
    _, _, wvec = _magnitude_forward(z)
    flat_core = _core_mask(h, w, core_margin).ravel()
    y = labels.ravel()[flat_core]
    yhat = wvec[flat_core]
    pos, neg = y == 1.0, y != 1.0
    loss = 0.0
    if pos.any():
        loss += float(np.abs(y[pos] - yhat[pos]).mean())
    if neg.any():
        loss += float(np.abs(y[neg] - yhat[neg]).mean())
    return loss


@dataclass
class TrainHistory:
    train_loss: List[float] = field(default_factory=list)
    val_loss: List[float] = field(default_factory=list)
    best_epoch: int = 0
    best_val_loss: float = float("inf")
    skipped_patches: int = 0


def _extract_patches(pairs, cfg: TrainConfig, rng: np.random.Generator):
    """Materialise training patches with their overlap margin included."""
    ph, pw, d = cfg.patch.patch_h, cfg.patch.patch_w, cfg.patch.overlap
    th, tw = ph + 2 * d, pw + 2 * d
    patches = []

    def padded(img, lab):
        h, w = lab.shape
        eh, ew = max(0, th - h), max(0, tw - w)
        if eh or ew:
            img = np.pad(img, ((0, eh), (0, ew), (0, 0)), mode="edge")
            lab = np.pad(lab, ((0, eh), (0, ew)), mode="edge")
        return img, lab

    if cfg.scenario == "random":
        for img, lab in pairs:
            img = img if img.ndim == 3 else img[:, :, None]
            img, lab = padded(img, lab)
            h, w = lab.shape
            r = int(rng.integers(0, h - th + 1))
            c = int(rng.integers(0, w - tw + 1))
            patches.append((img[r:r + th, c:c + tw], lab[r:r + th, c:c + tw]))
    else:
        img, lab = pairs[0]
        img = img if img.ndim == 3 else img[:, :, None]
        h, w = lab.shape
        imgp = np.pad(img, ((d, d + ph), (d, d + pw), (0, 0)), mode="edge")
        labp = np.pad(lab, ((d, d + ph), (d, d + pw)), mode="edge")
        for r in range(0, h, ph):
            for c in range(0, w, pw):
                patches.append((imgp[r:r + th, c:c + tw], labp[r:r + th, c:c + tw]))
    return patches


def train(pairs: Sequence[Tuple[np.ndarray, np.ndarray]], cfg: TrainConfig,
          architecture: str = "I") -> Tuple[EmbeddingModel, TrainHistory]:
    """Stochastic gradient descent over patches with checkpoint selection.

    One patch is one batch.  A fixed fraction of the patches is held out
    once per run for validation; after every epoch the validation loss is
    evaluated and the parameters of the best epoch (including the untrained
    initialisation as epoch zero) are restored at the end.  Deterministic
    given ``cfg.seed``.
    """
    if len(pairs) == 0:
        raise ValueError("training needs at least one (image, labels) pair")
    for _, lab in pairs:
        uniq = np.unique(lab)
        if not np.all(np.isin(uniq, (0.0, 1.0))):
            raise ValueError("labels must be binarised to {0, 1}")
    if all(not np.any(lab == 1.0) for _, lab in pairs):
        import warnings
        warnings.warn("no edge pixels anywhere in the labels; the edge term is dropped")

    rng = np.random.default_rng(cfg.seed)
    channels = pairs[0][0].shape[2] if pairs[0][0].ndim == 3 else 1
    model = EmbeddingModel.create(architecture, channels, seed=cfg.seed)

    patches = _extract_patches(pairs, cfg, rng)
    n_val = max(1, int(round(cfg.validation_fraction * len(patches)))) \
        if len(patches) > 1 else 0
    order = rng.permutation(len(patches))
    val_idx = order[:n_val]
    train_idx = order[n_val:]
    if train_idx.size == 0:
        train_idx, val_idx = val_idx, train_idx
    d = cfg.patch.overlap
    s = cfg.patch.metric.channel_weight

    def val_score() -> float:
        if val_idx.size == 0:
            return float("nan")
        try:
            return float(np.mean([
                validation_loss(patches[i][0], patches[i][1], model, s, core_margin=d)
                for i in val_idx]))
        except (NotInvertibleError, sla.LinAlgError, ValueError):
            return float("inf")

    hist = TrainHistory()
    best = val_score()
    hist.best_val_loss = best
    hist.val_loss.append(best)
    best_params = model.get_flat()

    for epoch in range(1, cfg.resolved_epochs + 1):
        losses = []
        for i in rng.permutation(train_idx):
            try:
                loss, grad, _ = loss_and_grad(
                    patches[i][0], patches[i][1], model, cfg, core_margin=d)
            except (NotInvertibleError, sla.LinAlgError, ValueError):
                hist.skipped_patches += 1
                continue
            if not (np.isfinite(loss) and np.all(np.isfinite(grad))):
                hist.skipped_patches += 1
                continue
            model.set_flat(model.get_flat() - cfg.learning_rate * grad)
            losses.append(loss)
        hist.train_loss.append(float(np.mean(losses)) if losses else float("nan"))
        score = val_score()
        hist.val_loss.append(score)
        if np.isnan(best) or (not np.isnan(score) and score < best):
            best = score
            best_params = model.get_flat()
            hist.best_epoch = epoch
            hist.best_val_loss = best
    model.set_flat(best_params)
    return model, hist


def transform_image(img: DigitalImage, model: EmbeddingModel, cfg: PatchConfig,
                    blur_size: int = 1, pad: int = 2,
                    pad_mode: str = "edge") -> EdgeMap:
    """Full-image edge probabilities under the learned pullback metric.

    Runs the patched magnitude with the model as the embedding, then the
    usual absolute-value and min-max postprocessing.  No blur by default.
    """
    spec = replace(cfg.metric, embedding=model)
    learned_cfg = PatchConfig(cfg.patch_h, cfg.patch_w, cfg.overlap, spec)
    return magnitude_edges(img, learned_cfg, blur_size=blur_size, pad=pad,
                           pad_mode=pad_mode)


def save_checkpoint(path, model: EmbeddingModel, cfg: TrainConfig,
                    validation_loss_value: float) -> None:
    """Serialise a model as JSON; floats round-trip exactly via repr."""
    def layer_dict(layer):
        if isinstance(layer, Linear):
            return {"kind": "linear", "w": layer.w.tolist(), "b": layer.b.tolist()}
        if isinstance(layer, ReLU):
            return {"kind": "relu"}
        raise TypeError(f"unexpected layer {type(layer)!r}")

    payload = {
        "architecture": model.architecture,
        "channels": model.channels,
        "encoder": [layer_dict(l) for l in model.encoder],
        "decoder": [layer_dict(l) for l in model.decoder],
        "conv": None if model.conv is None else
            {"w": model.conv.w.tolist(), "b": model.conv.b.tolist()},
        "config": {
            "learning_rate": cfg.learning_rate, "lambda": cfg.lam,
            "patch_h": cfg.patch.patch_h, "patch_w": cfg.patch.patch_w,
            "overlap": cfg.patch.overlap,
            "channel_weight": cfg.patch.metric.channel_weight,
            "epochs": cfg.resolved_epochs, "scenario": cfg.scenario,
            "validation_fraction": cfg.validation_fraction, "seed": cfg.seed,
        },
        "validation_loss": validation_loss_value,
    }
    with open(path, "w") as fh:
        json.dump(payload, fh, sort_keys=True)
        fh.write("\n")


def load_checkpoint(path) -> Tuple[EmbeddingModel, dict]:
    with open(path) as fh:
        payload = json.load(fh)

    def build(spec_list):
        layers = []
        for item in spec_list:
            if item["kind"] == "linear":
                layers.append(Linear(np.array(item["w"]), np.array(item["b"])))
            else:
                layers.append(ReLU())
        return layers

    conv = None
    if payload.get("conv") is not None:
        conv = Conv3x3(np.array(payload["conv"]["w"]), np.array(payload["conv"]["b"]))
    model = EmbeddingModel(payload["architecture"], payload["channels"],
                           build(payload["encoder"]), build(payload["decoder"]),
                           conv=conv)
    return model, payload
