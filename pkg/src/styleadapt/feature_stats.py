"""Masked and global feature statistics plus the two renormalization transforms.

Feature maps are (H, W, K) float arrays, one-hot masks are (H, W, C) arrays
in {0, 1}. All moments are population (1/N) statistics computed in float64.
"""

from dataclasses import dataclass

import numpy as np

EPS = 1e-5


@dataclass
class MaskedMoments:
    """Per-class channel statistics of one feature map.

    mean, std have shape (C, K); rows where present is False are zero-filled
    and must not be read. count holds the per-class pixel count.
    """

    mean: np.ndarray
    std: np.ndarray
    present: np.ndarray
    count: np.ndarray

    @property
    def n_classes(self):
        return self.mean.shape[0]

    @property
    def n_channels(self):
        return self.mean.shape[1]


def global_moments(z):
    """Channel-wise population mean and std over all spatial positions."""
    z = np.asarray(z, dtype=np.float64)
    mean = z.mean(axis=(0, 1))
    std = np.sqrt(((z - mean) ** 2).mean(axis=(0, 1)))
    return mean, std


def class_moments(z, mask):
    """Per-class channel moments of z restricted to each class's pixels.

    Classes with zero mask pixels come back with present=False instead of a
    division by zero.
    """
    z = np.asarray(z, dtype=np.float64)
    mask = np.asarray(mask, dtype=np.float64)
    if mask.shape[:2] != z.shape[:2]:
        raise ValueError(f"mask spatial dims {mask.shape[:2]} != feature dims {z.shape[:2]}")
    C = mask.shape[2]
    K = z.shape[2]
    count = mask.sum(axis=(0, 1))
    present = count > 0
    safe = np.where(present, count, 1.0)

    mean = np.tensordot(mask, z, axes=([0, 1], [0, 1])) / safe[:, None]
    # two-pass variance: centered sums are far more accurate than E[x^2]-mu^2
    centered = z[:, :, None, :] - mean[None, None, :, :]
    var = np.einsum("hwc,hwck->ck", mask, centered * centered) / safe[:, None]
    std = np.sqrt(np.maximum(var, 0.0))

    mean[~present] = 0.0
    std[~present] = 0.0
    return MaskedMoments(mean=mean, std=std, present=present,
                         count=count.astype(np.int64))


def resize_mask(mask, h2, w2):
    """Nearest-neighbor mask resize with the floor index map src_i = floor(i*H/H')."""
    if h2 < 1 or w2 < 1:
        raise ValueError("target dims must be >= 1")
    mask = np.asarray(mask)
    H, W = mask.shape[:2]
    rows = (np.arange(h2) * H) // h2
    cols = (np.arange(w2) * W) // w2
    return mask[rows][:, cols]


def adain(z, mu_t, sigma_t, eps=EPS):
    """Renormalize z channel-wise to the target mean and std."""
    if eps <= 0:
        raise ValueError("eps must be > 0")
    z = np.asarray(z, dtype=np.float64)
    mu_s, sigma_s = global_moments(z)
    scale = np.asarray(sigma_t, dtype=np.float64) / np.maximum(sigma_s, eps)
    return scale * (z - mu_s) + np.asarray(mu_t, dtype=np.float64)


def _check_one_hot(mask):
    if not ((mask == 0) | (mask == 1)).all():
        raise ValueError("mask entries must be 0 or 1")
    if not (mask.sum(axis=2) == 1).all():
        raise ValueError("mask must be one-hot per pixel")


def cc_adain(z, mask, tgt: MaskedMoments, eps=EPS):
    """Class-conditional renormalization: each class region gets its own transform.

    Classes present in the mask but absent from tgt fall back to their own
    source moments, i.e. that region is left (nearly) untouched.
    """
    if eps <= 0:
        raise ValueError("eps must be > 0")
    z = np.asarray(z, dtype=np.float64)
    mask = np.asarray(mask, dtype=np.float64)
    _check_one_hot(mask)
    src = class_moments(z, mask)

    mu_t = np.where(tgt.present[:, None], tgt.mean, src.mean)
    sigma_t = np.where(tgt.present[:, None], tgt.std, src.std)

    scale = sigma_t / np.maximum(src.std, eps)          # (C, K)
    shift = mu_t - scale * src.mean
    scale[~src.present] = 1.0
    shift[~src.present] = 0.0

    scale_map = np.tensordot(mask, scale, axes=([2], [0]))
    shift_map = np.tensordot(mask, shift, axes=([2], [0]))
    return z * scale_map + shift_map
