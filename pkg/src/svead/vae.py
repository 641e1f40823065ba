"""Variational autoencoder on plain numpy.

Gaussian encoder (mu, log-variance heads), Bernoulli or unit-variance
Gaussian decoder, ELBO trained by minibatch Adam with hand-written
backpropagation, plus latent feature extraction and Monte-Carlo
reconstruction-probability scoring.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from .data import Dataset
from .errors import DimensionMismatch, NonFiniteLoss, OutOfRangeInput

_LOGVAR_CLAMP = 10.0


@dataclass(frozen=True)
class VaeArchitecture:
    input_dim: int
    hidden_dims: tuple[int, ...] = ()       # () -> single layer of width 2*input
    latent_dim: int = 2
    hidden_activation: str = "linear"       # linear | relu | tanh
    dropout_rate: float = 0.2
    decoder_likelihood: str = "bernoulli"   # bernoulli | gaussian_unit_variance

    def __post_init__(self):
        if not self.hidden_dims:
            object.__setattr__(self, "hidden_dims", (2 * self.input_dim,))
        if self.input_dim < 1 or self.latent_dim < 1 or min(self.hidden_dims) < 1:
            raise ValueError("all dimensions must be >= 1")
        if not 0.0 <= self.dropout_rate < 1.0:
            raise ValueError("dropout_rate must be in [0, 1)")
        if self.hidden_activation not in ("linear", "relu", "tanh"):
            raise ValueError(f"unknown activation {self.hidden_activation!r}")
        if self.decoder_likelihood not in ("bernoulli", "gaussian_unit_variance"):
            raise ValueError(f"unknown likelihood {self.decoder_likelihood!r}")

    def layer_shapes(self):
        """Weight/bias shapes in storage order.

        encoder hidden pairs, mu head, logvar head, decoder hidden pairs
        (reversed widths), output layer.
        """
        shapes = []
        prev = self.input_dim
        for h in self.hidden_dims:
            shapes.append((prev, h))
            prev = h
        shapes.append((prev, self.latent_dim))    # mu head
        shapes.append((prev, self.latent_dim))    # logvar head
        prev = self.latent_dim
        for h in reversed(self.hidden_dims):
            shapes.append((prev, h))
            prev = h
        shapes.append((prev, self.input_dim))     # output layer
        return shapes


@dataclass(frozen=True)
class LatentStats:
    mu: np.ndarray
    logvar: np.ndarray


@dataclass(frozen=True)
class ElboBreakdown:
    elbo: float
    reconstruction_term: float
    kl_term: float


@dataclass(frozen=True)
class TrainedVae:
    architecture: VaeArchitecture
    params: tuple                   # alternating (W, b) per layer_shapes order
    training_log: tuple             # of (epoch, mean negative ELBO)
    seed: int

    def flat_weights(self) -> np.ndarray:
        return np.concatenate([p.ravel() for p in self.params])


def init_params(arch: VaeArchitecture, rng: np.random.Generator):
    """Seeded uniform +-sqrt(6/(fan_in+fan_out)) weights, zero biases."""
    params = []
    for fan_in, fan_out in arch.layer_shapes():
        limit = np.sqrt(6.0 / (fan_in + fan_out))
        params.append(rng.uniform(-limit, limit, size=(fan_in, fan_out)))
        params.append(np.zeros(fan_out))
    return params


def _activate(kind, pre):
    if kind == "linear":
        return pre
    if kind == "relu":
        return np.maximum(pre, 0.0)
    return np.tanh(pre)


def _activate_grad(kind, pre):
    if kind == "linear":
        return np.ones_like(pre)
    if kind == "relu":
        return (pre > 0.0).astype(pre.dtype)
    return 1.0 / np.cosh(pre) ** 2


def _sigmoid(x):
    return np.where(x >= 0, 1.0 / (1.0 + np.exp(-x)),
                    np.exp(x) / (1.0 + np.exp(x)))


def _softplus(x):
    return np.logaddexp(0.0, x)


def _split_params(arch: VaeArchitecture, params):
    n_hidden = len(arch.hidden_dims)
    layers = [(params[2 * i], params[2 * i + 1])
              for i in range(len(params) // 2)]
    enc = layers[:n_hidden]
    mu_head = layers[n_hidden]
    lv_head = layers[n_hidden + 1]
    dec = layers[n_hidden + 2: 2 * n_hidden + 2]
    out = layers[2 * n_hidden + 2]
    return enc, mu_head, lv_head, dec, out


def _encode_batch(arch, params, x, masks=None):
    """Forward pass through the encoder; masks (if given) are inverted
    dropout multipliers, one per hidden layer."""
    enc, mu_head, lv_head, _, _ = _split_params(arch, params)
    a = x
    for i, (w, b) in enumerate(enc):
        a = _activate(arch.hidden_activation, a @ w + b)
        if masks is not None:
            a = a * masks[i]
    mu = a @ mu_head[0] + mu_head[1]
    lv = np.clip(a @ lv_head[0] + lv_head[1], -_LOGVAR_CLAMP, _LOGVAR_CLAMP)
    return mu, lv


def _decode_batch(arch, params, z, masks=None):
    _, _, _, dec, out = _split_params(arch, params)
    a = z
    for i, (w, b) in enumerate(dec):
        a = _activate(arch.hidden_activation, a @ w + b)
        if masks is not None:
            a = a * masks[i]
    o = a @ out[0] + out[1]
    if arch.decoder_likelihood == "bernoulli":
        return _sigmoid(o)
    return o


def encode(model: TrainedVae, x) -> LatentStats:
    """Deterministic inference-mode pass to the posterior parameters."""
    x = np.asarray(x, dtype=np.float64)
    if x.shape[-1] != model.architecture.input_dim:
        raise DimensionMismatch("input length != input_dim")
    mu, lv = _encode_batch(model.architecture, model.params, x.reshape(1, -1))
    return LatentStats(mu[0], lv[0])


def reparameterize(stats: LatentStats, noise) -> np.ndarray:
    noise = np.asarray(noise, dtype=np.float64)
    if noise.shape != stats.mu.shape:
        raise DimensionMismatch("noise length != latent_dim")
    return stats.mu + np.exp(stats.logvar / 2.0) * noise


def decode(model: TrainedVae, z) -> np.ndarray:
    z = np.asarray(z, dtype=np.float64)
    if z.shape[-1] != model.architecture.latent_dim:
        raise DimensionMismatch("latent length != latent_dim")
    return _decode_batch(model.architecture, model.params, z.reshape(1, -1))[0]


def gaussian_kl(stats: LatentStats) -> float:
    """Closed-form KL(N(mu, diag exp(logvar)) || N(0, I))."""
    mu, lv = stats.mu, stats.logvar
    return float(-0.5 * np.sum(1.0 + lv - mu ** 2 - np.exp(lv)))


def _log_likelihood_rows(arch, x, xhat):
    """Per-row decoder log-likelihood (gaussian drops the 1/2 log 2pi term)."""
    if arch.decoder_likelihood == "bernoulli":
        eps = 1e-12
        p = np.clip(xhat, eps, 1.0 - eps)
        return (x * np.log(p) + (1.0 - x) * np.log(1.0 - p)).sum(axis=1)
    return -0.5 * ((x - xhat) ** 2).sum(axis=1)


def elbo_batch(model: TrainedVae, batch, noise) -> ElboBreakdown:
    """Single-sample ELBO estimate per row, averaged over the batch."""
    arch = model.architecture
    batch = np.asarray(batch, dtype=np.float64)
    noise = np.asarray(noise, dtype=np.float64)
    if arch.decoder_likelihood == "bernoulli" and (
            batch.min() < 0.0 or batch.max() > 1.0):
        raise OutOfRangeInput("bernoulli likelihood needs inputs in [0, 1]")
    mu, lv = _encode_batch(arch, model.params, batch)
    z = mu + np.exp(lv / 2.0) * noise
    xhat = _decode_batch(arch, model.params, z)
    recon = float(_log_likelihood_rows(arch, batch, xhat).mean())
    kl = float((-0.5 * (1.0 + lv - mu ** 2 - np.exp(lv)).sum(axis=1)).mean())
    return ElboBreakdown(recon - kl, recon, kl)


def loss_and_grads(arch: VaeArchitecture, params, batch, eps, masks=None):
    """Mean negative ELBO of a batch plus its gradient for every parameter.

    eps is the (batch, latent_dim) reparameterization noise; masks, when
    given, is a pair (encoder_masks, decoder_masks) of precomputed inverted
    dropout multipliers so finite-difference checks can hold them fixed.
    """
    enc, mu_head, lv_head, dec, out = _split_params(arch, params)
    x = np.asarray(batch, dtype=np.float64)
    b = x.shape[0]
    act = arch.hidden_activation
    enc_masks, dec_masks = masks if masks is not None else (None, None)

    # forward
    a = x
    enc_pre, enc_in = [], []
    for i, (w, bias) in enumerate(enc):
        enc_in.append(a)
        pre = a @ w + bias
        enc_pre.append(pre)
        a = _activate(act, pre)
        if enc_masks is not None:
            a = a * enc_masks[i]
    top = a
    mu = top @ mu_head[0] + mu_head[1]
    lv_raw = top @ lv_head[0] + lv_head[1]
    lv = np.clip(lv_raw, -_LOGVAR_CLAMP, _LOGVAR_CLAMP)
    clamp_open = (np.abs(lv_raw) < _LOGVAR_CLAMP).astype(np.float64)
    sigma = np.exp(lv / 2.0)
    z = mu + sigma * eps

    d = z
    dec_pre, dec_in = [], []
    for i, (w, bias) in enumerate(dec):
        dec_in.append(d)
        pre = d @ w + bias
        dec_pre.append(pre)
        d = _activate(act, pre)
        if dec_masks is not None:
            d = d * dec_masks[i]
    o = d @ out[0] + out[1]

    kl_rows = -0.5 * (1.0 + lv - mu ** 2 - np.exp(lv)).sum(axis=1)
    if arch.decoder_likelihood == "bernoulli":
        recon_rows = (x * o - _softplus(o)).sum(axis=1)
        do = (_sigmoid(o) - x) / b          # d(-elbo)/do
    else:
        recon_rows = -0.5 * ((x - o) ** 2).sum(axis=1)
        do = (o - x) / b
    loss = float(kl_rows.mean() - recon_rows.mean())

    # backward
    grads = [np.zeros_like(p) for p in params]
    n_hidden = len(arch.hidden_dims)
    out_idx = 2 * (2 * n_hidden + 2)
    grads[out_idx] = d.T @ do
    grads[out_idx + 1] = do.sum(axis=0)
    delta = do @ out[0].T
    for i in range(n_hidden - 1, -1, -1):
        if dec_masks is not None:
            delta = delta * dec_masks[i]
        delta = delta * _activate_grad(act, dec_pre[i])
        idx = 2 * (n_hidden + 2 + i)
        grads[idx] = dec_in[i].T @ delta
        grads[idx + 1] = delta.sum(axis=0)
        delta = delta @ dec[i][0].T
    dz = delta

    dmu = dz + mu / b
    dlv = (dz * eps * 0.5 * sigma + 0.5 * (np.exp(lv) - 1.0) / b) * clamp_open
    mu_idx = 2 * n_hidden
    grads[mu_idx] = top.T @ dmu
    grads[mu_idx + 1] = dmu.sum(axis=0)
    grads[mu_idx + 2] = top.T @ dlv
    grads[mu_idx + 3] = dlv.sum(axis=0)
    delta = dmu @ mu_head[0].T + dlv @ lv_head[0].T
    for i in range(n_hidden - 1, -1, -1):
        if enc_masks is not None:
            delta = delta * enc_masks[i]
        delta = delta * _activate_grad(act, enc_pre[i])
        grads[2 * i] = enc_in[i].T @ delta
        grads[2 * i + 1] = delta.sum(axis=0)
        delta = delta @ enc[i][0].T
    return loss, grads


def _make_masks(arch, rng, batch_size):
    """Fresh inverted dropout multipliers for one training step."""
    if arch.dropout_rate == 0.0:
        return None
    keep = 1.0 - arch.dropout_rate
    enc_masks = [rng.uniform(size=(batch_size, h)) < keep
                 for h in arch.hidden_dims]
    dec_masks = [rng.uniform(size=(batch_size, h)) < keep
                 for h in reversed(arch.hidden_dims)]
    return ([m.astype(np.float64) / keep for m in enc_masks],
            [m.astype(np.float64) / keep for m in dec_masks])


def train_vae(train: Dataset, arch: VaeArchitecture, epochs: int,
              batch_size: int, learning_rate: float, seed: int,
              normal_only: bool = True) -> TrainedVae:
    """Minibatch Adam on the mean negative ELBO.

    By default fits on majority-class (label 0) rows only; set
    normal_only=False for the latent-feature pathway that feeds classifiers.
    """
    if epochs < 1 or batch_size < 1:
        raise ValueError("epochs and batch_size must be >= 1")
    x = train.features
    if normal_only:
        x = x[train.labels == 0]
        if x.shape[0] == 0:
            raise ValueError("no majority-class rows to train on")
    if x.shape[1] != arch.input_dim:
        raise DimensionMismatch("data column count != input_dim")
    if arch.decoder_likelihood == "bernoulli" and (
            x.min() < 0.0 or x.max() > 1.0):
        raise OutOfRangeInput("bernoulli likelihood needs inputs in [0, 1]")

    rng = np.random.default_rng(seed)
    params = init_params(arch, rng)
    m = [np.zeros_like(p) for p in params]
    v = [np.zeros_like(p) for p in params]
    beta1, beta2, adam_eps = 0.9, 0.999, 1e-8
    step = 0
    n = x.shape[0]
    log = []
    for epoch in range(epochs):
        order = rng.permutation(n)
        losses, counts = [], []
        for start in range(0, n, batch_size):
            batch = x[order[start:start + batch_size]]
            eps = rng.standard_normal((batch.shape[0], arch.latent_dim))
            masks = _make_masks(arch, rng, batch.shape[0])
            loss, grads = loss_and_grads(arch, params, batch, eps, masks)
            if not np.isfinite(loss):
                raise NonFiniteLoss(epoch)
            step += 1
            for j, g in enumerate(grads):
                m[j] = beta1 * m[j] + (1.0 - beta1) * g
                v[j] = beta2 * v[j] + (1.0 - beta2) * g * g
                mhat = m[j] / (1.0 - beta1 ** step)
                vhat = v[j] / (1.0 - beta2 ** step)
                params[j] = params[j] - learning_rate * mhat / (
                    np.sqrt(vhat) + adam_eps)
            losses.append(loss * batch.shape[0])
            counts.append(batch.shape[0])
        log.append((epoch, float(np.sum(losses) / np.sum(counts))))
    return TrainedVae(arch, tuple(p.copy() for p in params), tuple(log), seed)


def latent_features(model: TrainedVae, data: Dataset) -> np.ndarray:
    """Per-row posterior means, (n, latent_dim); deterministic."""
    if data.n_features != model.architecture.input_dim:
        raise DimensionMismatch("data column count != input_dim")
    mu, _ = _encode_batch(model.architecture, model.params, data.features)
    return mu


def reconstruction_probability(model: TrainedVae, x, n_samples: int = 100,
                               seed: int = 0) -> float:
    """Log of the Monte-Carlo mean likelihood of x over posterior samples.

    Computed as logsumexp(loglik) - log(n_samples); lower values indicate
    more anomalous inputs.
    """
    if n_samples < 1:
        raise ValueError("n_samples must be >= 1")
    arch = model.architecture
    x = np.asarray(x, dtype=np.float64)
    if x.shape[-1] != arch.input_dim:
        raise DimensionMismatch("input length != input_dim")
    stats = encode(model, x)
    rng = np.random.default_rng(seed)
    noise = rng.standard_normal((n_samples, arch.latent_dim))
    z = stats.mu + np.exp(stats.logvar / 2.0) * noise
    xhat = _decode_batch(arch, model.params, z)
    loglik = _log_likelihood_rows(arch, np.broadcast_to(x, xhat.shape), xhat)
    peak = loglik.max()
    return float(peak + np.log(np.exp(loglik - peak).mean()))
