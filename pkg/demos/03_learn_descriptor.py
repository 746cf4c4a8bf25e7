"""Learn a signature descriptor from unlabeled signatures.

The descriptor never sees identity labels.  It is built in three steps:
sample random patches from rasterized signatures, whiten them, and fit a
sparse autoencoder whose mean-pooled hidden activations summarize a
whole signature as one fixed-length vector.
"""

import numpy as np

from sigverify import (AeConfig, PatchConfig, apply_whitening, describe,
                       fit_whitening, generate_synthetic_corpus, preprocess,
                       sample_training_patches, train, train_descriptor)


def sparkline(values, width=48):
    marks = "_.-~^"
    idx = np.linspace(0, len(values) - 1, width).astype(int)
    lo, hi = min(values), max(values)
    span = (hi - lo) or 1.0
    return "".join(marks[int((values[i] - lo) / span * (len(marks) - 1))] for i in idx)


def main():
    # Any unlabeled pool works; here, 6 users' genuine signatures.
    pool = generate_synthetic_corpus(seed=19, n_users=6, n_genuine=5, n_forgery=0)
    trajectories = pool.all_trajectories()
    print(f"unlabeled pool: {len(trajectories)} signatures from "
          f"{len(pool.user_ids())} writers")

    # Step 1: random two-channel 10x10 patches from the rasterized pool.
    patch_cfg = PatchConfig(train_count=3000)
    images = [preprocess(t) for t in trajectories]
    raw = sample_training_patches(images, patch_cfg, seed=0)
    print(f"sampled {raw.shape[0]} patches of dimension {raw.shape[1]}")

    # Step 2: whitening decorrelates the patch components and drops the
    # near-flat directions, which are mostly raster noise.
    transform = fit_whitening(raw)
    white = apply_whitening(transform, raw)
    ev = transform.eigenvalues
    print(f"whitening keeps {white.shape[1]} of {raw.shape[1]} directions "
          f"(eigenvalues {ev[0]:.3f} down to {ev[-1]:.2e})")

    # Step 3: the sparse autoencoder.  The sparsity penalty pushes mean
    # activations toward its target so each unit specializes.
    ae_cfg = AeConfig(hidden=16, max_iter=60, seed=0)
    ae = train(white, ae_cfg)
    hist = ae.cost_history
    print(f"autoencoder: {ae.input_dim} -> {ae.hidden} -> {ae.input_dim}, "
          f"{ae.n_iter} iterations")
    print(f"cost {hist[0]:.2f} -> {hist[-1]:.2f}  {sparkline(hist)}")
    print()

    # train_descriptor() runs all three steps in one call.
    model = train_descriptor(trajectories,
                             patch_cfg=patch_cfg, ae_cfg=ae_cfg, seed=0)
    print(f"descriptor length: {model.hidden}")

    # Descriptors of the same writer end up closer than across writers.
    fresh = generate_synthetic_corpus(seed=19, n_users=6, n_genuine=7, n_forgery=0)
    ua, ub = fresh.user_ids()[:2]
    da = [describe(t, model).values for t in fresh.users[ua].genuine[5:]]
    db = [describe(t, model).values for t in fresh.users[ub].genuine[5:]]
    within = np.linalg.norm(da[0] - da[1])
    across = np.linalg.norm(da[0] - db[0])
    print(f"distance {ua} vs itself:  {within:.4f}")
    print(f"distance {ua} vs {ub}: {across:.4f}")


if __name__ == "__main__":
    main()
