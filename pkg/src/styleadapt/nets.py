"""Small convolutional networks with hand-written reverse-mode gradients.

Three nets share the same conv plumbing: a frozen 3-stage encoder, a
trainable decoder with a skip connection, and a trainable segmenter with
dilated stages. Images and activations are (H, W, C) float64 arrays; the
hot conv loops are delegated to the kernel backend.
"""

import hashlib

import numpy as np

from . import kernels


class Param:
    def __init__(self, data):
        self.data = np.asarray(data, dtype=np.float64)
        self.grad = np.zeros_like(self.data)

    def zero_grad(self):
        self.grad[:] = 0.0


class Conv2d:
    """3x3 (or 1x1) convolution with optional ReLU, zero 'same'-style padding."""

    def __init__(self, cin, cout, rng, ksize=3, stride=1, dilation=1, relu=True):
        std = np.sqrt(2.0 / (ksize * ksize * cin))
        self.w = Param(rng.normal(0.0, std, size=(ksize, ksize, cin, cout)))
        self.b = Param(np.zeros(cout))
        self.ksize = ksize
        self.stride = stride
        self.dilation = dilation
        self.pad = dilation * (ksize - 1) // 2
        self.relu = relu

    def forward(self, x):
        pre = kernels.conv2d_forward(x, self.w.data, self.b.data,
                                     self.stride, self.dilation, self.pad)
        y = np.maximum(pre, 0.0) if self.relu else pre
        return y, (x, pre)

    def backward(self, gy, ctx, need_gx=True, accumulate=True):
        x, pre = ctx
        if self.relu:
            gy = gy * (pre > 0.0)
        if accumulate:
            self.w.grad += kernels.conv2d_backward_weights(
                x, gy, self.ksize, self.ksize, self.stride, self.dilation, self.pad)
            self.b.grad += gy.sum(axis=(0, 1))
        if not need_gx:
            return None
        return kernels.conv2d_backward_data(gy, self.w.data, x.shape[0], x.shape[1],
                                            self.stride, self.dilation, self.pad)

    def params(self):
        return [self.w, self.b]


def upsample2x(x):
    return np.repeat(np.repeat(x, 2, axis=0), 2, axis=1)


def upsample2x_backward(gy):
    H, W, C = gy.shape
    return gy.reshape(H // 2, 2, W // 2, 2, C).sum(axis=(1, 3))


def _params_checksum(params):
    h = hashlib.sha256()
    for p in params:
        h.update(np.ascontiguousarray(p.data).tobytes())
    return h.hexdigest()


def _flat_get(params):
    return np.concatenate([p.data.ravel() for p in params])


def _flat_set(params, vec):
    i = 0
    for p in params:
        n = p.data.size
        p.data[:] = vec[i:i + n].reshape(p.data.shape)
        i += n
    assert i == vec.size


def _flat_grad(params):
    return np.concatenate([p.grad.ravel() for p in params])


class Encoder:
    """Frozen 3-stage conv encoder; stage outputs at full, /2 and /4 resolution."""

    def __init__(self, widths=(8, 12, 16), seed=0):
        self.widths = tuple(widths)
        rng = np.random.default_rng([int(seed), 0xE])
        cins = (3,) + self.widths[:2]
        strides = (1, 2, 2)
        self.layers = [Conv2d(cin, cout, rng, stride=s)
                       for cin, cout, s in zip(cins, self.widths, strides)]

    @property
    def n_layers(self):
        return len(self.layers)

    def forward(self, img):
        feats = []
        x = img
        for layer in self.layers:
            x, _ = layer.forward(x)
            feats.append(x)
        return feats

    def forward_ctx(self, img):
        feats, ctxs = [], []
        x = img
        for layer in self.layers:
            x, ctx = layer.forward(x)
            feats.append(x)
            ctxs.append(ctx)
        return feats, ctxs

    def backward_input(self, gfeats, ctxs):
        """Backprop per-layer gradient taps down to the input image.

        Parameters stay frozen: no weight gradients are accumulated.
        """
        g = None
        for layer, gf, ctx in zip(reversed(self.layers), reversed(gfeats), reversed(ctxs)):
            g = gf if g is None else g + gf
            g = layer.backward(g, ctx, accumulate=False)
        return g

    def params(self):
        return [p for layer in self.layers for p in layer.params()]

    def checksum(self):
        return _params_checksum(self.params())


class Decoder:
    """Mirror of the encoder: upsample+conv stages, skip merge, linear output conv."""

    def __init__(self, widths=(8, 12, 16), seed=0):
        self.widths = tuple(widths)
        w0, w1, w2 = self.widths
        rng = np.random.default_rng([int(seed), 0xD])
        self.up1 = Conv2d(w2, w1, rng)            # after upsample to /2
        self.up2 = Conv2d(w1, w0, rng)            # after upsample to full res
        self.merge = Conv2d(2 * w0, w0, rng)      # after concatenating the skip
        self.out = Conv2d(w0, 3, rng, relu=False)

    def forward(self, z, skip):
        x0 = upsample2x(z)
        a, c1 = self.up1.forward(x0)
        x1 = upsample2x(a)
        b, c2 = self.up2.forward(x1)
        cat = np.concatenate([b, skip], axis=2)
        m, c3 = self.merge.forward(cat)
        img, c4 = self.out.forward(m)
        return img, (c1, c2, c3, c4, skip.shape[2])

    def backward(self, gimg, ctx):
        c1, c2, c3, c4, skip_ch = ctx
        gm = self.out.backward(gimg, c4)
        gcat = self.merge.backward(gm, c3)
        gb = gcat[:, :, :-skip_ch]
        gx1 = self.up2.backward(gb, c2)
        ga = upsample2x_backward(gx1)
        gx0 = self.up1.backward(ga, c1)
        return upsample2x_backward(gx0)

    def params(self):
        return [p for l in (self.up1, self.up2, self.merge, self.out) for p in l.params()]

    def zero_grad(self):
        for p in self.params():
            p.zero_grad()

    def get_flat(self):
        return _flat_get(self.params())

    def set_flat(self, vec):
        _flat_set(self.params(), vec)

    def flat_grad(self):
        return _flat_grad(self.params())


class SegNet:
    """Segmentation net: dilated conv stages and a 1x1 head, logits at input resolution."""

    def __init__(self, n_classes, widths=(8, 12), seed=0):
        self.n_classes = int(n_classes)
        self.widths = tuple(widths)
        w0, w1 = self.widths
        rng = np.random.default_rng([int(seed), 0x5])
        self.layers = [
            Conv2d(3, w0, rng),
            Conv2d(w0, w1, rng, dilation=2),
            Conv2d(w1, w1, rng, dilation=4),
            Conv2d(w1, self.n_classes, rng, ksize=1, relu=False),
        ]

    def forward_logits(self, img):
        ctxs = []
        x = img
        for layer in self.layers:
            x, ctx = layer.forward(x)
            ctxs.append(ctx)
        return x, ctxs

    def backward(self, glogits, ctxs):
        g = glogits
        for i, layer in reversed(list(enumerate(self.layers))):
            g = layer.backward(g, ctxs[i], need_gx=(i > 0))
        return None

    def params(self):
        return [p for layer in self.layers for p in layer.params()]

    def zero_grad(self):
        for p in self.params():
            p.zero_grad()

    def checksum(self):
        return _params_checksum(self.params())

    def get_flat(self):
        return _flat_get(self.params())

    def set_flat(self, vec):
        _flat_set(self.params(), vec)

    def flat_grad(self):
        return _flat_grad(self.params())
