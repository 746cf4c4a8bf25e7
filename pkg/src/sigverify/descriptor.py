"""Fixed-length signature descriptor learned from unlabeled signatures.

Training preprocesses every unlabeled trajectory, samples random patches,
fits a whitening transform, and trains the sparse autoencoder on the
whitened patches.  Describing a signature preprocesses it, extracts dense
patches, whitens and encodes each one, and mean-pools the hidden
activations componentwise, giving a vector of length ``hidden`` with
every entry strictly inside (0, 1) regardless of signature duration.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from . import container
from .autoencoder import AeConfig, AeParams, AutoencoderModel, encode, train
from .dataset import Trajectory
from .patches import PatchConfig, extract_dense, sample_training_patches
from .preprocess import PreprocessConfig, preprocess
from .whitening import WhitenConfig, WhiteningTransform, apply_whitening, fit_whitening

logger = logging.getLogger(__name__)

MODEL_VERSION = 1


@dataclass
class Descriptor:
    values: np.ndarray
    user_id: str
    label: str


@dataclass
class DescriptorModel:
    preprocess_cfg: PreprocessConfig
    patch_cfg: PatchConfig
    whitening: WhiteningTransform
    ae: AutoencoderModel
    seed: int = 0
    train_sources: tuple = ()
    version: int = MODEL_VERSION

    @property
    def hidden(self) -> int:
        return self.ae.config.hidden


def train_descriptor(unlabeled: list[Trajectory],
                     pre_cfg: PreprocessConfig | None = None,
                     patch_cfg: PatchConfig | None = None,
                     whiten_cfg: WhitenConfig | None = None,
                     ae_cfg: AeConfig | None = None,
                     seed: int = 0) -> DescriptorModel:
    """Learn a descriptor model from unlabeled trajectories.

    The unlabeled set must be disjoint from any evaluation corpus; this
    is the caller's responsibility, and the source tags stored on the
    model let downstream runs check it.  Deterministic given inputs,
    configs and seed.
    """
    if not unlabeled:
        raise ValueError("need at least one unlabeled trajectory")
    pre_cfg = pre_cfg or PreprocessConfig()
    patch_cfg = patch_cfg or PatchConfig()
    whiten_cfg = whiten_cfg or WhitenConfig()
    ae_cfg = ae_cfg or AeConfig()
    images = [preprocess(t, pre_cfg) for t in unlabeled]
    raw = sample_training_patches(images, patch_cfg, seed)
    transform = fit_whitening(raw, whiten_cfg)
    white = apply_whitening(transform, raw)
    model = train(white, ae_cfg)
    sources = tuple(sorted({t.source for t in unlabeled if t.source}))
    return DescriptorModel(preprocess_cfg=pre_cfg, patch_cfg=patch_cfg,
                           whitening=transform, ae=model, seed=seed,
                           train_sources=sources)


def _dense_whitened(traj: Trajectory, model: DescriptorModel) -> np.ndarray:
    image = preprocess(traj, model.preprocess_cfg)
    dense = extract_dense(image, model.patch_cfg)
    return apply_whitening(model.whitening, dense)


def describe(traj: Trajectory, model: DescriptorModel) -> Descriptor:
    """Mean-pooled hidden activations over the signature's dense patches."""
    white = _dense_whitened(traj, model)
    values = encode(model.ae, white).mean(axis=0)
    return Descriptor(values=values, user_id=traj.user_id, label=traj.label)


def describe_baseline(traj: Trajectory, model: DescriptorModel) -> Descriptor:
    """Reference descriptor without the autoencoder: mean whitened patch.

    Used as the raw-pixel baseline when judging whether the learned
    encoding actually helps.
    """
    white = _dense_whitened(traj, model)
    return Descriptor(values=white.mean(axis=0), user_id=traj.user_id,
                      label=traj.label)


# -- serialization ----------------------------------------------------------

def _meta_value(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(v)
    return str(v)


def _parse_bool(s: str) -> bool:
    if s not in ("true", "false"):
        raise container.ContainerError(f"bad boolean metadata value {s!r}")
    return s == "true"


def save_model(model: DescriptorModel, path) -> None:
    pre, pc, wt, ae = (model.preprocess_cfg, model.patch_cfg,
                       model.whitening, model.ae)
    meta = {
        "kind": "descriptor",
        "version": model.version,
        "seed": model.seed,
        "sources": ",".join(model.train_sources),
        "preprocess.canvas": pre.canvas,
        "preprocess.smooth": pre.smooth,
        "preprocess.spline_points_per_segment": pre.spline_points_per_segment,
        "preprocess.cov_epsilon": pre.cov_epsilon,
        "patch.size": pc.size,
        "patch.stride": pc.stride,
        "patch.train_count": pc.train_count,
        "patch.skip_blank": pc.skip_blank,
        "patch.blank_threshold": pc.blank_threshold,
        "patch.oversample_factor": pc.oversample_factor,
        "whiten.epsilon": wt.epsilon,
        "whiten.retained_variance": wt.retained_variance,
        "whiten.mode": wt.mode,
        "whiten.full_rank_input": wt.full_rank_input,
        "ae.hidden": ae.config.hidden,
        "ae.weight_decay": ae.config.weight_decay,
        "ae.sparsity_weight": ae.config.sparsity_weight,
        "ae.sparsity_target": ae.config.sparsity_target,
        "ae.max_iter": ae.config.max_iter,
        "ae.memory": ae.config.memory,
        "ae.grad_tol": ae.config.grad_tol,
        "ae.seed": ae.config.seed,
        "ae.final_cost": float(ae.final_cost),
        "ae.n_iter": ae.n_iter,
        "ae.converged": ae.converged,
        "ae.line_search_failed": ae.line_search_failed,
    }
    arrays = {
        "whitening.mean": wt.mean,
        "whitening.basis": wt.basis,
        "whitening.eigenvalues": wt.eigenvalues,
        "ae.W1": ae.params.W1,
        "ae.b1": ae.params.b1,
        "ae.W2": ae.params.W2,
        "ae.b2": ae.params.b2,
    }
    container.write_container(path, {k: _meta_value(v) for k, v in meta.items()},
                              arrays)


def load_model(path) -> DescriptorModel:
    meta, arrays = container.read_container(path)
    if meta.get("kind") != "descriptor":
        raise container.ContainerError(
            f"{path}: expected a descriptor model, found kind={meta.get('kind')!r}")
    version = int(meta["version"])
    if version != MODEL_VERSION:
        raise container.ContainerError(
            f"{path}: model version {version} does not match supported "
            f"version {MODEL_VERSION}")
    pre_cfg = PreprocessConfig(
        canvas=int(meta["preprocess.canvas"]),
        smooth=_parse_bool(meta["preprocess.smooth"]),
        spline_points_per_segment=int(meta["preprocess.spline_points_per_segment"]),
        cov_epsilon=float(meta["preprocess.cov_epsilon"]))
    patch_cfg = PatchConfig(
        size=int(meta["patch.size"]),
        stride=int(meta["patch.stride"]),
        train_count=int(meta["patch.train_count"]),
        skip_blank=_parse_bool(meta["patch.skip_blank"]),
        blank_threshold=float(meta["patch.blank_threshold"]),
        oversample_factor=int(meta["patch.oversample_factor"]))
    transform = WhiteningTransform(
        mean=arrays["whitening.mean"],
        basis=arrays["whitening.basis"],
        eigenvalues=arrays["whitening.eigenvalues"],
        epsilon=float(meta["whiten.epsilon"]),
        retained_variance=float(meta["whiten.retained_variance"]),
        mode=meta["whiten.mode"],
        full_rank_input=_parse_bool(meta["whiten.full_rank_input"]))
    ae_cfg = AeConfig(
        hidden=int(meta["ae.hidden"]),
        weight_decay=float(meta["ae.weight_decay"]),
        sparsity_weight=float(meta["ae.sparsity_weight"]),
        sparsity_target=float(meta["ae.sparsity_target"]),
        max_iter=int(meta["ae.max_iter"]),
        memory=int(meta["ae.memory"]),
        grad_tol=float(meta["ae.grad_tol"]),
        seed=int(meta["ae.seed"]))
    params = AeParams(W1=arrays["ae.W1"], b1=arrays["ae.b1"],
                      W2=arrays["ae.W2"], b2=arrays["ae.b2"])
    ae = AutoencoderModel(params=params, config=ae_cfg,
                          input_dim=params.W1.shape[1],
                          final_cost=float(meta["ae.final_cost"]),
                          n_iter=int(meta["ae.n_iter"]),
                          converged=_parse_bool(meta["ae.converged"]),
                          line_search_failed=_parse_bool(meta["ae.line_search_failed"]))
    sources = tuple(s for s in meta.get("sources", "").split(",") if s)
    return DescriptorModel(preprocess_cfg=pre_cfg, patch_cfg=patch_cfg,
                           whitening=transform, ae=ae,
                           seed=int(meta["seed"]), train_sources=sources,
                           version=version)
