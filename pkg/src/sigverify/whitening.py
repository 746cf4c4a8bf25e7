"""PCA / ZCA whitening of patch vectors.

The transform is fitted by eigendecomposition of the sample covariance.
In ``pca`` mode the smallest number of leading components whose
eigenvalue mass reaches ``retained_variance`` is kept and the output is
the decorrelated, variance-equalized projection.  In ``zca`` mode the
full spectrum is used and the whitened vector is rotated back into the
input coordinate system, so dimension is preserved.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

logger = logging.getLogger(__name__)

MODES = ("pca", "zca")


@dataclass
class WhitenConfig:
    epsilon: float = 0.01
    retained_variance: float = 0.99
    mode: str = "pca"

    def __post_init__(self):
        if self.epsilon < 0:
            raise ValueError("epsilon must be non-negative")
        if not 0 < self.retained_variance <= 1:
            raise ValueError("retained_variance must be in (0, 1]")
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}, got {self.mode!r}")


@dataclass
class WhiteningTransform:
    mean: np.ndarray
    basis: np.ndarray          # (d_kept, d); rows already include 1/sqrt(eig + eps)
    eigenvalues: np.ndarray    # kept spectrum, descending
    epsilon: float
    retained_variance: float
    mode: str
    full_rank_input: bool = field(default=True)

    @property
    def input_dim(self) -> int:
        return self.basis.shape[1]

    @property
    def output_dim(self) -> int:
        return self.basis.shape[0]


def _fix_eigenvector_signs(vectors: np.ndarray) -> np.ndarray:
    """Flip eigenvector columns so the first nonzero component is positive."""
    out = vectors.copy()
    for j in range(out.shape[1]):
        col = out[:, j]
        nz = np.flatnonzero(np.abs(col) > 1e-12 * max(np.abs(col).max(), 1e-300))
        if nz.size and col[nz[0]] < 0:
            out[:, j] = -col
    return out


def fit_whitening(patches: np.ndarray, cfg: WhitenConfig | None = None) -> WhiteningTransform:
    """Fit a whitening transform to an (n, d) array of patch vectors."""
    if cfg is None:
        cfg = WhitenConfig()
    patches = np.asarray(patches, dtype=np.float64)
    if patches.ndim != 2:
        raise ValueError("patches must be a 2-D array (n, d)")
    n, d = patches.shape
    if n < 2:
        raise ValueError(f"need at least 2 patches to fit whitening, got {n}")
    if not np.all(np.isfinite(patches)):
        raise ValueError("patches contain non-finite values")
    full_rank_input = n >= d + 1
    if not full_rank_input:
        logger.warning("whitening fitted on %d patches for dimension %d; "
                       "covariance is rank deficient", n, d)
    mean = patches.mean(axis=0)
    cov = np.cov(patches, rowvar=False)
    cov = np.atleast_2d(cov)
    eigvals, eigvecs = np.linalg.eigh(cov)
    order = np.argsort(eigvals)[::-1]
    eigvals = np.clip(eigvals[order], 0.0, None)
    eigvecs = _fix_eigenvector_signs(eigvecs[:, order])

    total = float(eigvals.sum())
    if cfg.mode == "zca":
        k = d
    else:
        mass = np.cumsum(eigvals)
        k = int(np.searchsorted(mass, cfg.retained_variance * total) + 1)
        k = min(k, d)
    kept_vals = eigvals[:k]
    scaling = 1.0 / np.sqrt(kept_vals + cfg.epsilon)
    basis = scaling[:, None] * eigvecs[:, :k].T
    if cfg.mode == "zca":
        basis = eigvecs[:, :k] @ basis
    return WhiteningTransform(mean=mean, basis=basis, eigenvalues=kept_vals,
                              epsilon=cfg.epsilon,
                              retained_variance=cfg.retained_variance,
                              mode=cfg.mode, full_rank_input=full_rank_input)


def apply_whitening(transform: WhiteningTransform, patch: np.ndarray) -> np.ndarray:
    """Whiten one patch vector, or a batch given as rows of a 2-D array."""
    patch = np.asarray(patch, dtype=np.float64)
    if patch.shape[-1] != transform.input_dim:
        raise ValueError(f"patch has dimension {patch.shape[-1]}, "
                         f"transform expects {transform.input_dim}")
    return (patch - transform.mean) @ transform.basis.T
