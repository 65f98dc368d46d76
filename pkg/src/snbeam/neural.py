"""Encoder-decoder network built from scratch on numpy.

Tensors are [d1 x d2 x channels]; d1 is depth (time samples), d2 is the
lateral plane (elements in the default layout).  The network is a small
UNet: three contracting blocks, a bottleneck, three expanding blocks
with skip concatenation, a 1x1 projection to a single channel, and a
final summation over d2 that collapses the cube to one beamformed line.
Every layer provides an exact backward pass; there is no autograd
framework underneath.

Parameters live in a flat name -> array dict so the optimizer and the
checkpoint format stay trivial.
"""

import math
from dataclasses import dataclass

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

__all__ = [
    "NetworkSpec",
    "he_normal_init",
    "init_params",
    "conv3x3_forward",
    "conv3x3_backward",
    "prelu_forward",
    "prelu_backward",
    "maxpool_forward",
    "maxpool_backward",
    "upsample",
    "upsample_backward",
    "concat_skip",
    "split_skip_grad",
    "sum_reduce",
    "unet_forward",
    "unet_backward",
]

PRELU_INIT = 0.25


@dataclass(frozen=True)
class NetworkSpec:
    """Architecture knobs.

    widths: channel count per contracting level; the bottleneck uses
    2*widths[-1].  pool_d2 pools/upsamples the lateral dimension along
    with depth (the permuted-input variant); leave it False when d2 is
    small (angles-d2 layout).
    """

    in_channels: int = 3
    widths: tuple = (16, 32, 64)
    pool_d2: bool = True
    dtype: str = "float64"

    @property
    def levels(self):
        return len(self.widths)

    @property
    def bottleneck(self):
        return 2 * self.widths[-1]

    @property
    def pool_factor(self):
        return 2**self.levels


def he_normal_init(shape, seed, fan_in=None):
    """Gaussian draw with std sqrt(2 / fan_in), seeded and reproducible.

    For conv kernels [3, 3, c_in, c_out] the fan-in is 9*c_in; for other
    shapes it defaults to the product of all but the last axis.
    """
    shape = tuple(shape)
    if fan_in is None:
        fan_in = int(np.prod(shape[:-1])) if len(shape) > 1 else shape[0]
    rng = np.random.default_rng(seed)
    return rng.normal(0.0, math.sqrt(2.0 / fan_in), shape)


def init_params(spec, seed=0):
    """He-normal kernels, zero biases, PReLU slopes at 0.25.

    Returns an ordered {name: array} dict.  Block naming: enc0/enc1/...,
    bot, dec2/dec1/dec0 (mirroring the encoder), proj.
    """
    rng_counter = [0]
    root = seed if isinstance(seed, np.random.SeedSequence) else np.random.SeedSequence(seed)

    def draw(shape, fan_in):
        child = np.random.SeedSequence(entropy=root.entropy, spawn_key=(rng_counter[0],))
        rng_counter[0] += 1
        return he_normal_init(shape, child, fan_in=fan_in)

    dtype = np.dtype(spec.dtype)
    params = {}

    def add_block(name, c_in, c_out):
        for i, (ci, co) in enumerate(((c_in, c_out), (c_out, c_out))):
            params[f"{name}.conv{i}.kernel"] = draw((3, 3, ci, co), 9 * ci).astype(dtype)
            params[f"{name}.conv{i}.bias"] = np.zeros(co, dtype)
            params[f"{name}.conv{i}.slope"] = np.full(co, PRELU_INIT, dtype)

    c = spec.in_channels
    for lvl, w in enumerate(spec.widths):
        add_block(f"enc{lvl}", c, w)
        c = w
    add_block("bot", c, spec.bottleneck)
    c = spec.bottleneck
    for lvl in reversed(range(spec.levels)):
        w = spec.widths[lvl]
        add_block(f"dec{lvl}", c + w, w)
        c = w
    params["proj.kernel"] = draw((1, 1, c, 1), c).astype(dtype)
    params["proj.bias"] = np.zeros(1, dtype)
    return params


# --------------------------------------------------------------------------
# layers
# --------------------------------------------------------------------------


def _im2col(x):
    """Zero-pad by 1 on both spatial dims and unfold 3x3 patches."""
    d1, d2, cin = x.shape
    xp = np.zeros((d1 + 2, d2 + 2, cin), x.dtype)
    xp[1:-1, 1:-1] = x
    win = sliding_window_view(xp, (3, 3), axis=(0, 1))  # [d1, d2, cin, 3, 3]
    return np.ascontiguousarray(win.transpose(0, 1, 3, 4, 2)).reshape(d1 * d2, 9 * cin)


def conv3x3_forward(x, kernel, bias):
    """Same-padded 3x3 cross-correlation, [d1 x d2 x cin] -> [d1 x d2 x cout]."""
    d1, d2, cin = x.shape
    if kernel.shape[:3] != (3, 3, cin):
        raise ValueError(f"kernel shape {kernel.shape} does not accept {cin} input channels")
    cout = kernel.shape[3]
    col = _im2col(x)
    km = kernel.reshape(9 * cin, cout)
    return (col @ km).reshape(d1, d2, cout) + bias


def conv3x3_backward(x, kernel, dy):
    """Gradients of conv3x3_forward: (dx, dkernel, dbias)."""
    d1, d2, cin = x.shape
    cout = kernel.shape[3]
    dym = dy.reshape(d1 * d2, cout)
    col = _im2col(x)
    dk = (col.T @ dym).reshape(3, 3, cin, cout)
    db = dym.sum(axis=0)
    # dx is the full correlation of dy with the spatially flipped kernel
    dyp = np.zeros((d1 + 2, d2 + 2, cout), dy.dtype)
    dyp[1:-1, 1:-1] = dy
    winy = sliding_window_view(dyp, (3, 3), axis=(0, 1)).transpose(0, 1, 3, 4, 2)
    coly = np.ascontiguousarray(winy).reshape(d1 * d2, 9 * cout)
    kf = np.ascontiguousarray(kernel[::-1, ::-1].transpose(0, 1, 3, 2)).reshape(9 * cout, cin)
    dx = (coly @ kf).reshape(d1, d2, cin)
    return dx, dk, db


def prelu_forward(x, slopes):
    """y = x for x >= 0, slope_c * x otherwise (one slope per channel)."""
    return np.where(x >= 0, x, slopes * x)


def prelu_backward(x, slopes, dy):
    """(dx, dslopes): dslope_c sums x*dy over the negative positions."""
    neg = x < 0
    dx = np.where(neg, slopes * dy, dy)
    ds = np.where(neg, x * dy, 0.0).sum(axis=tuple(range(x.ndim - 1)))
    return dx, ds


def _pool_axes(pool_d2):
    return (0, 1) if pool_d2 else (0,)


def maxpool_forward(x, pool_d2=True):
    """Factor-2 max pooling along d1 (and d2 when pool_d2).

    Returns (y, argmax) where argmax records the winning flat offset
    within each pooling cell for the backward pass.
    """
    d1, d2, c = x.shape
    if d1 % 2:
        raise ValueError("d1 must be even for pooling (pad the network input)")
    if pool_d2:
        if d2 % 2:
            raise ValueError("d2 must be even for pooling (pad the network input)")
        cells = x.reshape(d1 // 2, 2, d2 // 2, 2, c).transpose(0, 2, 4, 1, 3).reshape(
            d1 // 2, d2 // 2, c, 4
        )
    else:
        cells = x.reshape(d1 // 2, 2, d2, c).transpose(0, 2, 3, 1)
    arg = cells.argmax(axis=-1)
    y = np.take_along_axis(cells, arg[..., None], axis=-1)[..., 0]
    return y, arg


def maxpool_backward(x_shape, arg, dy, pool_d2=True):
    """Route dy back to the argmax positions."""
    d1, d2, c = x_shape
    if pool_d2:
        cells = np.zeros((d1 // 2, d2 // 2, c, 4), dy.dtype)
        np.put_along_axis(cells, arg[..., None], dy[..., None], axis=-1)
        return (
            cells.reshape(d1 // 2, d2 // 2, c, 2, 2)
            .transpose(0, 3, 1, 4, 2)
            .reshape(d1, d2, c)
        )
    cells = np.zeros((d1 // 2, d2, c, 2), dy.dtype)
    np.put_along_axis(cells, arg[..., None], dy[..., None], axis=-1)
    return cells.transpose(0, 3, 1, 2).reshape(d1, d2, c)


def upsample(x, pool_d2=True):
    """Nearest-neighbor doubling along d1 (and d2 when pool_d2)."""
    y = np.repeat(x, 2, axis=0)
    if pool_d2:
        y = np.repeat(y, 2, axis=1)
    return y


def upsample_backward(dy, pool_d2=True):
    """Adjoint of nearest-neighbor upsampling: sum over each 2(x2) cell."""
    d1, d2, c = dy.shape
    g = dy.reshape(d1 // 2, 2, d2, c).sum(axis=1)
    if pool_d2:
        g = g.reshape(d1 // 2, d2 // 2, 2, c).sum(axis=2)
    return g


def concat_skip(a, b):
    """Channel concatenation [a | b]; spatial dims must match."""
    if a.shape[:2] != b.shape[:2]:
        raise ValueError(f"cannot concatenate {a.shape} with {b.shape}")
    return np.concatenate([a, b], axis=2)


def split_skip_grad(dy, c_a):
    """Backward of concat_skip: split dy back into the two operands."""
    return dy[..., :c_a], dy[..., c_a:]


def sum_reduce(x):
    """Collapse the single-channel map to a line: out[j] = sum_d2 x[j, :, 0]."""
    if x.shape[2] != 1:
        raise ValueError("sum_reduce expects a single-channel tensor")
    return x[..., 0].sum(axis=1)


# --------------------------------------------------------------------------
# network
# --------------------------------------------------------------------------


def _pad_to_multiple(x, factor, pool_d2):
    d1, d2, _ = x.shape
    p1 = (-d1) % factor
    p2 = (-d2) % factor if pool_d2 else 0
    if p1 or p2:
        x = np.pad(x, ((0, p1), (0, p2), (0, 0)))
    return x, (p1, p2)


def _block_forward(params, name, x, cache):
    for i in range(2):
        k = params[f"{name}.conv{i}.kernel"]
        b = params[f"{name}.conv{i}.bias"]
        s = params[f"{name}.conv{i}.slope"]
        z = conv3x3_forward(x, k, b)
        cache.append((name, i, x, z))
        x = prelu_forward(z, s)
    return x


def _block_backward(params, grads, cache_block, dy):
    for name, i, x_in, z in reversed(cache_block):
        s = params[f"{name}.conv{i}.slope"]
        dz, ds = prelu_backward(z, s, dy)
        dx, dk, db = conv3x3_backward(x_in, params[f"{name}.conv{i}.kernel"], dz)
        grads[f"{name}.conv{i}.kernel"] = dk
        grads[f"{name}.conv{i}.bias"] = db
        grads[f"{name}.conv{i}.slope"] = ds
        dy = dx
    return dy


def unet_forward(x, params, spec, want_cache=False):
    """Run the network on one [d1 x d2 x C] cube; returns a length-d1 line.

    The input is zero-padded so the pooled dims divide 2^levels and the
    output is cropped back, so any d1 works.  With ``want_cache`` the
    intermediate activations needed by :func:`unet_backward` are
    returned as well.
    """
    x = np.asarray(x, dtype=np.dtype(spec.dtype))
    d1_in = x.shape[0]
    x, pad = _pad_to_multiple(x, spec.pool_factor, spec.pool_d2)

    cache = {"pad": pad, "d1_in": d1_in, "in_shape": x.shape, "blocks": {}, "pool": {}}
    skips = []
    for lvl in range(spec.levels):
        blk = []
        x = _block_forward(params, f"enc{lvl}", x, blk)
        cache["blocks"][f"enc{lvl}"] = blk
        skips.append(x)
        y, arg = maxpool_forward(x, spec.pool_d2)
        cache["pool"][lvl] = (x.shape, arg)
        x = y

    blk = []
    x = _block_forward(params, "bot", x, blk)
    cache["blocks"]["bot"] = blk

    for lvl in reversed(range(spec.levels)):
        x = upsample(x, spec.pool_d2)
        cache.setdefault("upchannels", {})[lvl] = x.shape[2]
        x = concat_skip(x, skips[lvl])
        blk = []
        x = _block_forward(params, f"dec{lvl}", x, blk)
        cache["blocks"][f"dec{lvl}"] = blk

    k, b = params["proj.kernel"], params["proj.bias"]
    proj = np.tensordot(x, k[0, 0], axes=([2], [0])) + b
    cache["proj_in"] = x
    line = sum_reduce(proj)[:d1_in]
    if want_cache:
        return line, cache
    return line


def unet_backward(dline, params, spec, cache):
    """Gradients of every parameter given d(loss)/d(output line)."""
    dtype = np.dtype(spec.dtype)
    d1p, d2p, _ = cache["in_shape"]
    grads = {}

    dfull = np.zeros(d1p, dtype)
    dfull[: cache["d1_in"]] = np.asarray(dline, dtype)
    x = cache["proj_in"]
    # sum_reduce backward: broadcast over d2; proj backward: 1x1 conv
    dproj = np.broadcast_to(dfull[:, None, None], (d1p, x.shape[1], 1))
    grads["proj.kernel"] = np.tensordot(x, dproj, axes=([0, 1], [0, 1])).reshape(1, 1, -1, 1)
    grads["proj.bias"] = np.array([dproj.sum()], dtype)
    dy = dproj @ params["proj.kernel"][0, 0].T

    for lvl in range(spec.levels):
        dy = _block_backward(params, grads, cache["blocks"][f"dec{lvl}"], dy)
        c_up = cache["upchannels"][lvl]
        dup, dskip = split_skip_grad(dy, c_up)
        dy = upsample_backward(np.ascontiguousarray(dup), spec.pool_d2)
        # stash the skip gradient until the encoder pass below
        cache.setdefault("skip_grad", {})[lvl] = dskip

    dy = _block_backward(params, grads, cache["blocks"]["bot"], dy)

    for lvl in reversed(range(spec.levels)):
        shape, arg = cache["pool"][lvl]
        dy = maxpool_backward(shape, arg, dy, spec.pool_d2)
        dy = dy + cache["skip_grad"][lvl]
        dy = _block_backward(params, grads, cache["blocks"][f"enc{lvl}"], dy)
    return grads
