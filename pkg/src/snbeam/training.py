"""Loss, optimizer, training loop and inference for the deep beamformer.

The loss is the signed mean-squared-logarithmic error: prediction and
target are split into positive and negative parts, compared in log10
after an eps floor, and the two halves averaged.  Data is expected
normalized so the dataset-wide max |target| is 1 (see
sampling.normalize_dataset); eps = 1e-3 then bounds the logs at three
decades, matching a 60 dB display range.
"""

import time
from dataclasses import dataclass, field

import numpy as np

from .neural import NetworkSpec, init_params, unet_backward, unet_forward
from .sampling import slice_cubes

__all__ = [
    "smsle_loss",
    "AdamState",
    "adam_step",
    "TrainHistory",
    "train",
    "predict",
]


def smsle_loss(pred, target, eps=1e-3):
    """SMSLE value and its gradient with respect to the prediction.

    L = mean((log10(p+ + eps) - log10(y+ + eps))^2) / 2
      + mean((log10(p- + eps) - log10(y- + eps))^2) / 2
    with x+ = max(x, 0) and x- = max(-x, 0).  Nonnegative, and zero iff
    pred equals target elementwise.
    """
    if eps <= 0:
        raise ValueError("eps must be positive")
    p = np.asarray(pred, dtype=float)
    y = np.asarray(target, dtype=float)
    if p.shape != y.shape:
        raise ValueError("prediction and target must have the same shape")
    n = p.size
    ln10 = np.log(10.0)

    pp, pm = np.maximum(p, 0.0), np.maximum(-p, 0.0)
    yp, ym = np.maximum(y, 0.0), np.maximum(-y, 0.0)
    dp = np.log10(pp + eps) - np.log10(yp + eps)
    dm = np.log10(pm + eps) - np.log10(ym + eps)
    loss = 0.5 * np.mean(dp * dp) + 0.5 * np.mean(dm * dm)

    grad = np.zeros_like(p)
    pos = p > 0
    neg = p < 0
    grad[pos] = dp[pos] / ((pp[pos] + eps) * ln10 * n)
    grad[neg] = -dm[neg] / ((pm[neg] + eps) * ln10 * n)
    return float(loss), grad


@dataclass
class AdamState:
    """First/second moment accumulators plus the step counter."""

    m: dict
    v: dict
    t: int = 0
    lr: float = 3e-5
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8

    @classmethod
    def for_params(cls, params, lr=3e-5, beta1=0.9, beta2=0.999, eps=1e-8):
        return cls(
            m={k: np.zeros_like(p) for k, p in params.items()},
            v={k: np.zeros_like(p) for k, p in params.items()},
            lr=lr,
            beta1=beta1,
            beta2=beta2,
            eps=eps,
        )


def adam_step(params, grads, state):
    """One bias-corrected Adam update, in place on ``params``."""
    state.t += 1
    b1, b2 = state.beta1, state.beta2
    c1 = 1.0 - b1**state.t
    c2 = 1.0 - b2**state.t
    for k, p in params.items():
        g = grads[k]
        if g.shape != p.shape:
            raise ValueError(f"gradient shape mismatch for {k}")
        state.m[k] = b1 * state.m[k] + (1.0 - b1) * g
        state.v[k] = b2 * state.v[k] + (1.0 - b2) * (g * g)
        mhat = state.m[k] / c1
        vhat = state.v[k] / c2
        p -= (state.lr * mhat / (np.sqrt(vhat) + state.eps)).astype(p.dtype)
    return params, state


@dataclass
class TrainHistory:
    """Per-epoch train/validation SMSLE and wall-clock seconds."""

    train_smsle: list = field(default_factory=list)
    val_smsle: list = field(default_factory=list)
    seconds: list = field(default_factory=list)
    seed: int = 0
    best_epoch: int = -1

    @property
    def epochs(self):
        return len(self.train_smsle)


def _sample_loss_and_grads(sample, params, spec, eps):
    pred, cache = unet_forward(sample.input, params, spec, want_cache=True)
    loss, dline = smsle_loss(pred, sample.target, eps)
    grads = unet_backward(dline, params, spec, cache)
    return loss, grads


def _mean_loss(samples, params, spec, eps):
    if not samples:
        return float("nan")
    total = 0.0
    for s in samples:
        pred = unet_forward(s.input, params, spec)
        loss, _ = smsle_loss(pred, s.target, eps)
        total += loss
    return total / len(samples)


def train(
    dataset,
    spec=None,
    epochs=50,
    batch=16,
    lr=3e-5,
    valsplit=0.2,
    seed=0,
    eps=1e-3,
    verbose=False,
    resume=None,
    want_state=False,
):
    """Train the network; returns (best params, TrainHistory).

    Deterministic for a fixed seed: the train/validation split, the
    per-epoch shuffle and the init all derive from it.  Within a batch
    the per-sample gradients are accumulated in dataset-index order, so
    batch membership (not shuffle order) determines the update.  The
    parameters of the best validation epoch are returned.

    With ``want_state`` the full optimizer state is returned as a third
    value; feeding it back through ``resume`` continues the run exactly
    where it stopped, reproducing the uninterrupted trajectory bit for
    bit (the shuffle generator travels inside the state).
    """
    samples = dataset.samples if hasattr(dataset, "samples") else list(dataset)
    if len(samples) == 0:
        raise ValueError("training dataset is empty")
    if spec is None:
        spec = NetworkSpec(in_channels=samples[0].input.shape[2])

    root = np.random.SeedSequence(seed)
    if resume is None:
        params = init_params(
            spec, seed=np.random.SeedSequence(entropy=root.entropy, spawn_key=(0,))
        )
        shuffle_rng = np.random.default_rng(
            np.random.SeedSequence(entropy=root.entropy, spawn_key=(1,))
        )
    else:
        params = {k: p.copy() for k, p in resume["params"].items()}
        shuffle_rng = np.random.default_rng()
        shuffle_rng.bit_generator.state = resume["rng_state"]

    n = len(samples)
    n_val = int(round(valsplit * n))
    n_val = min(max(n_val, 1 if n >= 5 else 0), n - 1) if n > 1 else 0
    if resume is None:
        perm = shuffle_rng.permutation(n)
    else:
        perm = np.asarray(resume["perm"])
    val_idx = sorted(perm[:n_val])
    train_idx = sorted(perm[n_val:])
    val_samples = [samples[i] for i in val_idx]
    train_samples = [samples[i] for i in train_idx]

    if resume is None:
        state = AdamState.for_params(params, lr=lr)
        history = TrainHistory(seed=seed)
        best = {k: p.copy() for k, p in params.items()}
        best_val = np.inf
    else:
        state = resume["adam"]
        history = resume["history"]
        best = resume["best"]
        best_val = resume["best_val"]

    for epoch in range(epochs):
        t0 = time.perf_counter()
        order = shuffle_rng.permutation(len(train_samples))
        ep_loss = 0.0
        for start in range(0, len(order), batch):
            batch_idx = sorted(order[start : start + batch])
            acc = None
            for i in batch_idx:
                loss, grads = _sample_loss_and_grads(train_samples[i], params, spec, eps)
                ep_loss += loss
                if acc is None:
                    acc = grads
                else:
                    for k in acc:
                        acc[k] += grads[k]
            for k in acc:
                acc[k] /= len(batch_idx)
            params, state = adam_step(params, acc, state)
        ep_loss /= max(len(train_samples), 1)
        val_loss = _mean_loss(val_samples or train_samples, params, spec, eps)
        history.train_smsle.append(ep_loss)
        history.val_smsle.append(val_loss)
        history.seconds.append(time.perf_counter() - t0)
        if val_loss < best_val:
            best_val = val_loss
            best = {k: p.copy() for k, p in params.items()}
            history.best_epoch = epoch
        if verbose:
            print(
                f"epoch {epoch + 1:3d}/{epochs}  train {ep_loss:.4f}  val {val_loss:.4f}"
                f"  ({history.seconds[-1]:.1f}s)"
            )

    if epochs == 0 and resume is None:
        best = params
    if want_state:
        return best, history, {
            "params": params,
            "adam": state,
            "rng_state": shuffle_rng.bit_generator.state,
            "perm": perm,
            "history": history,
            "best": best,
            "best_val": best_val,
        }
    return best, history


def predict(degraded, params, spec, scale=1.0, layout="elements-d2"):
    """Beam lines for every interior angle of a degraded cube.

    ``degraded`` is [n_angles x M x N] in the same normalization
    ``scale`` used at training time; the returned lines are
    de-normalized.  Returns (lines [n_interior x N], angle_indices).
    """
    degraded = np.asarray(degraded, dtype=float)
    dummy = [np.zeros(degraded.shape[2])] * degraded.shape[0]
    samples = slice_cubes(degraded / scale, dummy, layout=layout)
    lines = np.stack([unet_forward(s.input, params, spec) for s in samples])
    return lines * scale, [s.angle_index for s in samples]
