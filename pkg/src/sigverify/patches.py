"""Dense and randomly sampled two-channel image patches.

A patch is flattened channel-major (all pressure values row-major, then
all time values row-major) into a vector of length 2 * size * size.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .preprocess import SignatureImage


@dataclass
class PatchConfig:
    size: int = 10
    stride: int = 5
    train_count: int = 100_000
    skip_blank: bool = True
    blank_threshold: float = 0.0
    # total random draws allowed per requested patch before blanks are kept
    oversample_factor: int = 100

    def __post_init__(self):
        if not 1 <= self.stride <= self.size:
            raise ValueError(f"need 1 <= stride <= size, got stride={self.stride} "
                             f"size={self.size}")
        if self.train_count < 1:
            raise ValueError("train_count must be at least 1")
        if self.blank_threshold < 0:
            raise ValueError("blank_threshold must be non-negative")

    @property
    def dim(self) -> int:
        return 2 * self.size * self.size


def _patch_vector(image: SignatureImage, r: int, c: int, size: int) -> np.ndarray:
    p = image.pressure[r:r + size, c:c + size]
    t = image.time[r:r + size, c:c + size]
    return np.concatenate([p.ravel(), t.ravel()])


def _is_blank(image: SignatureImage, r: int, c: int, cfg: PatchConfig) -> bool:
    return bool(np.all(image.pressure[r:r + cfg.size, c:c + cfg.size]
                       <= cfg.blank_threshold))


def extract_dense(image: SignatureImage, cfg: PatchConfig) -> np.ndarray:
    """All stride-aligned patches that fit inside the image, row-major scan.

    Returns an array of shape (n_patches, 2 * size * size).  With
    ``skip_blank`` set, patches whose pressure channel never exceeds
    ``blank_threshold`` are omitted; if that removes everything, the
    single patch at (0, 0) is returned so every image yields a patch.
    """
    side = image.side
    if side < cfg.size:
        raise ValueError(f"image side {side} is smaller than patch size {cfg.size}")
    out = []
    for r in range(0, side - cfg.size + 1, cfg.stride):
        for c in range(0, side - cfg.size + 1, cfg.stride):
            if cfg.skip_blank and _is_blank(image, r, c, cfg):
                continue
            out.append(_patch_vector(image, r, c, cfg.size))
    if not out:
        out.append(_patch_vector(image, 0, 0, cfg.size))
    return np.asarray(out)


def sample_training_patches(images: list[SignatureImage], cfg: PatchConfig,
                            seed: int) -> np.ndarray:
    """Uniform random patches for dictionary training, rejection-sampled.

    Each draw picks an image uniformly, then a valid top-left offset
    uniformly.  Blank patches are rejected and redrawn until the total
    attempt budget (``oversample_factor`` times ``train_count``) runs
    out, after which blanks are admitted.  Deterministic given the seed.
    """
    if not images:
        raise ValueError("need at least one image to sample patches from")
    for im in images:
        if im.side < cfg.size:
            raise ValueError(f"image side {im.side} is smaller than patch size {cfg.size}")
    rng = np.random.default_rng(seed)
    budget = cfg.oversample_factor * cfg.train_count
    attempts = 0
    out = []
    while len(out) < cfg.train_count:
        attempts += 1
        im = images[int(rng.integers(len(images)))]
        r = int(rng.integers(im.side - cfg.size + 1))
        c = int(rng.integers(im.side - cfg.size + 1))
        if cfg.skip_blank and attempts < budget and _is_blank(im, r, c, cfg):
            continue
        out.append(_patch_vector(im, r, c, cfg.size))
    return np.asarray(out)
