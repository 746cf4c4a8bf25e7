"""Sparse autoencoder: sigmoid hidden layer, linear reconstruction.

The training objective over a batch of m input vectors is

    (1/m) * sum_i ||xhat_i - x_i||^2
        + weight_decay * (sum W1^2 + sum W2^2)
        + sparsity_weight * sum_j KL(sparsity_target || mean activation_j)

with KL(r || q) = r*ln(r/q) + (1-r)*ln((1-r)/(1-q)).  Biases carry no
decay.  Training is full-batch L-BFGS; everything is deterministic for a
fixed config, seed and input order.

Parameters flatten in the order: W1 row-major, b1, W2 row-major, b2.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .optimize import minimize_lbfgs

# mean activations are kept away from {0, 1} so the KL term stays finite
RHO_CLAMP = 1e-8


@dataclass
class AeConfig:
    hidden: int = 64
    weight_decay: float = 3e-3
    sparsity_weight: float = 3.0
    sparsity_target: float = 0.05
    max_iter: int = 200
    memory: int = 10
    grad_tol: float = 1e-5
    seed: int = 0

    def __post_init__(self):
        if self.hidden < 1:
            raise ValueError("hidden must be at least 1")
        if not 0 < self.sparsity_target < 1:
            raise ValueError("sparsity_target must lie strictly inside (0, 1)")
        if self.weight_decay < 0 or self.sparsity_weight < 0:
            raise ValueError("weight_decay and sparsity_weight must be non-negative")
        if self.max_iter < 0:
            raise ValueError("max_iter must be non-negative")
        if self.memory < 1:
            raise ValueError("memory must be at least 1")
        if self.grad_tol <= 0:
            raise ValueError("grad_tol must be positive")


@dataclass
class AeParams:
    W1: np.ndarray  # (hidden, d)
    b1: np.ndarray  # (hidden,)
    W2: np.ndarray  # (d, hidden)
    b2: np.ndarray  # (d,)

    def pack(self) -> np.ndarray:
        return np.concatenate([self.W1.ravel(), self.b1,
                               self.W2.ravel(), self.b2])

    @classmethod
    def unpack(cls, theta: np.ndarray, d: int, hidden: int) -> "AeParams":
        n1 = hidden * d
        W1 = theta[:n1].reshape(hidden, d)
        b1 = theta[n1:n1 + hidden]
        W2 = theta[n1 + hidden:n1 + hidden + n1].reshape(d, hidden)
        b2 = theta[n1 + hidden + n1:]
        return cls(W1=W1, b1=b1, W2=W2, b2=b2)


@dataclass
class AutoencoderModel:
    params: AeParams
    config: AeConfig
    input_dim: int
    final_cost: float
    n_iter: int = 0
    converged: bool = False
    line_search_failed: bool = False
    cost_history: list = field(default_factory=list)

    @property
    def hidden(self) -> int:
        return self.config.hidden


def _sigmoid(z):
    return 1.0 / (1.0 + np.exp(-z))


def init_params(input_dim: int, cfg: AeConfig) -> AeParams:
    """Symmetric uniform weight init, zero biases, deterministic by seed."""
    rng = np.random.default_rng(cfg.seed)
    r = np.sqrt(6.0 / (input_dim + cfg.hidden + 1.0))
    W1 = rng.uniform(-r, r, size=(cfg.hidden, input_dim))
    W2 = rng.uniform(-r, r, size=(input_dim, cfg.hidden))
    return AeParams(W1=W1, b1=np.zeros(cfg.hidden), W2=W2, b2=np.zeros(input_dim))


def forward(params: AeParams, x: np.ndarray):
    """Hidden activations and linear reconstruction.

    ``x`` is one input vector or a batch with samples as rows; the
    returned (activation, reconstruction) pair matches that shape.
    """
    x = np.asarray(x, dtype=np.float64)
    a = _sigmoid(x @ params.W1.T + params.b1)
    xhat = a @ params.W2.T + params.b2
    return a, xhat


def kl_divergence(target: float, actual: np.ndarray) -> np.ndarray:
    """Elementwise KL(target || actual) between Bernoulli rates."""
    actual = np.clip(actual, RHO_CLAMP, 1.0 - RHO_CLAMP)
    return (target * np.log(target / actual)
            + (1.0 - target) * np.log((1.0 - target) / (1.0 - actual)))


def _batch(x) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    if x.ndim == 1:
        x = x[None, :]
    if x.ndim != 2 or x.shape[0] < 1:
        raise ValueError("batch must be a non-empty 2-D array (m, d)")
    return x


def cost(params: AeParams, batch: np.ndarray, cfg: AeConfig) -> float:
    x = _batch(batch)
    m = x.shape[0]
    a, xhat = forward(params, x)
    recon = float(np.sum((xhat - x) ** 2)) / m
    decay = cfg.weight_decay * (float(np.sum(params.W1 ** 2))
                                + float(np.sum(params.W2 ** 2)))
    rho_hat = np.clip(a.mean(axis=0), RHO_CLAMP, 1.0 - RHO_CLAMP)
    sparsity = cfg.sparsity_weight * float(np.sum(
        kl_divergence(cfg.sparsity_target, rho_hat)))
    return recon + decay + sparsity


def cost_grad(params: AeParams, batch: np.ndarray, cfg: AeConfig):
    """Cost and its analytic gradient as an AeParams of the same shapes."""
    x = _batch(batch)
    m = x.shape[0]
    a, xhat = forward(params, x)
    resid = xhat - x
    recon = float(np.sum(resid ** 2)) / m
    decay = cfg.weight_decay * (float(np.sum(params.W1 ** 2))
                                + float(np.sum(params.W2 ** 2)))
    rho = cfg.sparsity_target
    rho_hat = np.clip(a.mean(axis=0), RHO_CLAMP, 1.0 - RHO_CLAMP)
    sparsity = cfg.sparsity_weight * float(np.sum(kl_divergence(rho, rho_hat)))

    delta2 = (2.0 / m) * resid
    gW2 = delta2.T @ a + 2.0 * cfg.weight_decay * params.W2
    gb2 = delta2.sum(axis=0)
    sparse_push = (cfg.sparsity_weight / m) * (-rho / rho_hat
                                               + (1.0 - rho) / (1.0 - rho_hat))
    delta1 = (delta2 @ params.W2 + sparse_push) * a * (1.0 - a)
    gW1 = delta1.T @ x + 2.0 * cfg.weight_decay * params.W1
    gb1 = delta1.sum(axis=0)
    grad = AeParams(W1=gW1, b1=gb1, W2=gW2, b2=gb2)
    return recon + decay + sparsity, grad


def train(batch: np.ndarray, cfg: AeConfig | None = None) -> AutoencoderModel:
    """Fit the autoencoder to a batch of input vectors with L-BFGS."""
    if cfg is None:
        cfg = AeConfig()
    x = _batch(batch)
    if not np.all(np.isfinite(x)):
        raise ValueError("training batch contains non-finite values")
    d = x.shape[1]
    params0 = init_params(d, cfg)

    def objective(theta):
        p = AeParams.unpack(theta, d, cfg.hidden)
        c, g = cost_grad(p, x, cfg)
        return c, g.pack()

    res = minimize_lbfgs(objective, params0.pack(), max_iter=cfg.max_iter,
                         memory=cfg.memory, grad_tol=cfg.grad_tol)
    return AutoencoderModel(params=AeParams.unpack(res.x, d, cfg.hidden),
                            config=cfg, input_dim=d, final_cost=res.fun,
                            n_iter=res.n_iter, converged=res.converged,
                            line_search_failed=res.line_search_failed,
                            cost_history=res.cost_history)


def encode(model: AutoencoderModel, x: np.ndarray) -> np.ndarray:
    """Hidden activation vector(s) for whitened patch vector(s)."""
    x = np.asarray(x, dtype=np.float64)
    if x.shape[-1] != model.input_dim:
        raise ValueError(f"input has dimension {x.shape[-1]}, "
                         f"model expects {model.input_dim}")
    a, _ = forward(model.params, x)
    return a
