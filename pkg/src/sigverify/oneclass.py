"""Per-user one-class Gaussian models over signature descriptors.

A user model is the mean and a shrinkage-regularized covariance of that
user's genuine training descriptors.  The score of a questioned
signature is its squared Mahalanobis distance to the mean, computed
through a Cholesky factorization (never an explicit inverse); smaller
means more similar.  Decision thresholds are calibrated from training
scores only, so no forgeries are needed to enroll a user.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import cho_factor, cho_solve

from . import container
from .descriptor import Descriptor

# covariance floor used when training descriptors show no variance at all
ZERO_VARIANCE_EPSILON = 1e-6
# safety margin applied on top of the calibration quantile
THRESHOLD_SLACK = 1.5


@dataclass
class UserModel:
    user_id: str
    mean: np.ndarray
    covariance: np.ndarray
    reg: float
    n_train: int
    threshold: float | None = None
    _chol: tuple = field(default=None, repr=False, compare=False)

    @property
    def dim(self) -> int:
        return len(self.mean)


def _values(descriptors) -> np.ndarray:
    rows = [d.values if isinstance(d, Descriptor) else np.asarray(d, dtype=np.float64)
            for d in descriptors]
    return np.asarray(rows, dtype=np.float64)


def _factor(covariance: np.ndarray):
    return cho_factor(covariance, lower=True)


def fit_user_model(descriptors, reg: float = 0.9, user_id: str | None = None) -> UserModel:
    """Fit the Gaussian model from one user's genuine descriptors.

    The covariance is ``(1 - reg) * S + reg * (trace(S) / dim) * I`` with
    S the sample covariance; when S is identically zero (a single
    training descriptor, or identical ones) a small isotropic floor is
    used instead so the model stays positive definite.
    """
    if not 0 <= reg <= 1:
        raise ValueError(f"reg must lie in [0, 1], got {reg}")
    if len(descriptors) == 0:
        raise ValueError("need at least one training descriptor")
    labelled = [d for d in descriptors if isinstance(d, Descriptor)]
    if user_id is None:
        user_id = labelled[0].user_id if labelled else "anonymous"
    for d in labelled:
        if d.user_id != user_id:
            raise ValueError(f"descriptor of user {d.user_id!r} mixed into "
                             f"training set of {user_id!r}")
        if d.label != "genuine":
            raise ValueError("user models are trained on genuine signatures only")
    x = _values(descriptors)
    if not np.all(np.isfinite(x)):
        raise ValueError("descriptors contain non-finite values")
    n, h = x.shape
    mean = x.mean(axis=0)
    if n == 1:
        sample_cov = np.zeros((h, h))
    else:
        sample_cov = np.atleast_2d(np.cov(x, rowvar=False))
    if not sample_cov.any():
        covariance = ZERO_VARIANCE_EPSILON * np.eye(h)
    else:
        covariance = ((1.0 - reg) * sample_cov
                      + reg * (np.trace(sample_cov) / h) * np.eye(h))
    try:
        chol = _factor(covariance)
    except np.linalg.LinAlgError:
        covariance = covariance + ZERO_VARIANCE_EPSILON * np.eye(h)
        chol = _factor(covariance)
    return UserModel(user_id=user_id, mean=mean, covariance=covariance,
                     reg=reg, n_train=n, _chol=chol)


def score(model: UserModel, descriptor) -> float:
    """Squared Mahalanobis distance of a descriptor to the user model."""
    values = descriptor.values if isinstance(descriptor, Descriptor) else descriptor
    values = np.asarray(values, dtype=np.float64)
    if values.shape != model.mean.shape:
        raise ValueError(f"descriptor has dimension {values.shape}, "
                         f"model expects {model.mean.shape}")
    chol = model._chol if model._chol is not None else _factor(model.covariance)
    diff = values - model.mean
    return float(diff @ cho_solve(chol, diff))


def calibrate_threshold(model: UserModel, train_scores, quantile: float = 1.0) -> UserModel:
    """Set the decision threshold from genuine training scores.

    The threshold is the nearest-rank ``quantile`` of the scores times a
    fixed 1.5 safety slack.  Returns the model (mutated in place).
    """
    if not 0 < quantile <= 1:
        raise ValueError(f"quantile must lie in (0, 1], got {quantile}")
    scores = np.sort(np.asarray(train_scores, dtype=np.float64))
    if scores.size == 0:
        raise ValueError("need at least one training score to calibrate")
    if not np.all(np.isfinite(scores)):
        raise ValueError("training scores contain non-finite values")
    rank = int(np.ceil(quantile * scores.size)) - 1
    model.threshold = float(scores[rank] * THRESHOLD_SLACK)
    return model


def verify(model: UserModel, descriptor) -> tuple[bool, float]:
    """Accept the descriptor iff its score is within the threshold."""
    if model.threshold is None:
        raise ValueError(f"user model {model.user_id!r} has no calibrated threshold")
    s = score(model, descriptor)
    return s <= model.threshold, s


def save_user_model(model: UserModel, path) -> None:
    meta = {
        "kind": "usermodel",
        "version": 1,
        "user_id": model.user_id,
        "reg": repr(float(model.reg)),
        "n_train": model.n_train,
        "threshold": "unset" if model.threshold is None else repr(model.threshold),
    }
    container.write_container(path, {k: str(v) for k, v in meta.items()},
                              {"mean": model.mean, "covariance": model.covariance})


def load_user_model(path) -> UserModel:
    meta, arrays = container.read_container(path)
    if meta.get("kind") != "usermodel":
        raise container.ContainerError(
            f"{path}: expected a user model, found kind={meta.get('kind')!r}")
    if int(meta["version"]) != 1:
        raise container.ContainerError(
            f"{path}: user model version {meta['version']} does not match "
            "supported version 1")
    threshold = None if meta["threshold"] == "unset" else float(meta["threshold"])
    model = UserModel(user_id=meta["user_id"], mean=arrays["mean"],
                      covariance=arrays["covariance"], reg=float(meta["reg"]),
                      n_train=int(meta["n_train"]), threshold=threshold)
    model._chol = _factor(model.covariance)
    return model
