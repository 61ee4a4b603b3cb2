"""Single-bottleneck autoencoder (d -> 4 -> d) trained on MSE.

Encoder: tanh(X W_enc^T + b_enc). Decoder: linear, H W_dec^T + b_dec.
Gradients are written out by hand and verified against central differences.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..errors import DivergenceError, PreconditionError, ShapeError

PARAM_NAMES = ("w_enc", "b_enc", "w_dec", "b_dec")


@dataclass
class AutoencoderConfig:
    lr: float = 1e-2
    momentum: float = 0.9
    epochs: int = 2000
    seed: int = 0
    latent_dim: int = 4
    patience: int = 50
    min_delta: float = 1e-8
    init_scale: float = 0.1


@dataclass
class Autoencoder:
    w_enc: np.ndarray  # latent x input
    b_enc: np.ndarray
    w_dec: np.ndarray  # input x latent
    b_dec: np.ndarray
    loss_history: list = field(default_factory=list)

    @property
    def input_dim(self) -> int:
        return self.w_enc.shape[1]

    @property
    def latent_dim(self) -> int:
        return self.w_enc.shape[0]

    def params(self) -> dict:
        return {name: getattr(self, name) for name in PARAM_NAMES}

    def copy(self) -> "Autoencoder":
        return Autoencoder(*(getattr(self, n).copy() for n in PARAM_NAMES), list(self.loss_history))

    @classmethod
    def init(cls, input_dim: int, latent_dim: int = 4, seed: int = 0,
             scale: float = 0.1) -> "Autoencoder":
        rng = np.random.default_rng(seed)
        u = lambda *shape: rng.uniform(-scale, scale, size=shape)
        return cls(u(latent_dim, input_dim), u(latent_dim), u(input_dim, latent_dim), u(input_dim))


def _check_columns(model: Autoencoder, X: np.ndarray) -> None:
    if X.ndim != 2 or X.shape[1] != model.input_dim:
        raise ShapeError(f"expected {model.input_dim} columns, got shape {X.shape}")


def encode(model: Autoencoder, X) -> np.ndarray:
    X = np.asarray(X, dtype=float)
    _check_columns(model, X)
    return np.tanh(X @ model.w_enc.T + model.b_enc)


def decode(model: Autoencoder, H) -> np.ndarray:
    return np.asarray(H, dtype=float) @ model.w_dec.T + model.b_dec


def reconstruction_loss(model: Autoencoder, X) -> float:
    X = np.asarray(X, dtype=float)
    return float(np.mean((decode(model, encode(model, X)) - X) ** 2))


def loss_and_grad(model: Autoencoder, X: np.ndarray):
    """Mean squared reconstruction error over all n*d entries and its gradient."""
    H = np.tanh(X @ model.w_enc.T + model.b_enc)
    R = H @ model.w_dec.T + model.b_dec - X
    loss = float(np.mean(R**2))
    dY = 2.0 * R / R.size
    dZ = (dY @ model.w_dec) * (1.0 - H**2)
    grads = {
        "w_dec": dY.T @ H,
        "b_dec": dY.sum(axis=0),
        "w_enc": dZ.T @ X,
        "b_enc": dZ.sum(axis=0),
    }
    return loss, grads


def train_autoencoder(X, config: AutoencoderConfig | None = None) -> Autoencoder:
    """Full-batch gradient descent with momentum.

    Stops early once the best loss has improved by less than
    ``min_delta`` over ``patience`` epochs. The returned parameters are the
    best seen, so the final loss never exceeds the initial one.
    """
    cfg = config or AutoencoderConfig()
    X = np.asarray(X, dtype=float)
    if X.ndim != 2 or X.shape[0] < 2:
        raise PreconditionError("autoencoder training needs at least 2 rows")
    model = Autoencoder.init(X.shape[1], cfg.latent_dim, cfg.seed, cfg.init_scale)
    velocity = {n: np.zeros_like(p) for n, p in model.params().items()}

    history = []
    best_loss, best = np.inf, model.copy()
    last_mark = np.inf
    for epoch in range(cfg.epochs + 1):
        with np.errstate(over="ignore", invalid="ignore"):
            loss, grads = loss_and_grad(model, X)
        if not np.isfinite(loss):
            raise DivergenceError(
                f"autoencoder loss became non-finite at epoch {epoch}; try a smaller lr "
                f"(currently {cfg.lr})"
            )
        history.append(loss)
        if loss < best_loss:
            best_loss, best = loss, model.copy()
        if epoch % cfg.patience == 0:
            if last_mark - best_loss < cfg.min_delta:
                break
            last_mark = best_loss
        if epoch == cfg.epochs:
            break
        for name in PARAM_NAMES:
            velocity[name] = cfg.momentum * velocity[name] - cfg.lr * grads[name]
            setattr(model, name, getattr(model, name) + velocity[name])
    best.loss_history = history
    return best


def gradient_check(model: Autoencoder, X, step: float = 1e-5, floor: float = 1e-4) -> float:
    """Max relative gap between analytic and central-difference gradients.

    Relative error is |a - n| / max(|a| + |n|, floor); the floor keeps
    near-zero gradients from amplifying round-off.
    """
    if not 1e-7 <= step <= 1e-3:
        raise ValueError("step must lie in [1e-7, 1e-3]")
    X = np.asarray(X, dtype=float)
    _check_columns(model, X)
    _, grads = loss_and_grad(model, X)
    probe = model.copy()
    worst = 0.0
    for name in PARAM_NAMES:
        p = getattr(probe, name)
        it = np.nditer(p, flags=["multi_index"])
        for _ in it:
            idx = it.multi_index
            orig = p[idx]
            p[idx] = orig + step
            up = loss_and_grad(probe, X)[0]
            p[idx] = orig - step
            down = loss_and_grad(probe, X)[0]
            p[idx] = orig
            numeric = (up - down) / (2 * step)
            analytic = grads[name][idx]
            err = abs(analytic - numeric) / max(abs(analytic) + abs(numeric), floor)
            worst = max(worst, err)
    return worst
