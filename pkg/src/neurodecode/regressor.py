"""Regression models mapping one representation space onto another.

The trained model is a single-layer network: one affine map followed by a
tanh (``tanh-direct``, the default), or affine -> tanh -> affine
(``tanh-hidden``). ``linear_mode`` replaces the output tanh with the
identity, giving a plain linear regressor trained by the same loop.

Training is full-batch adaptive-moment gradient descent (moment decays
0.9/0.999, epsilon 1e-8) on

    mean squared error of the masked forward pass + l2_lambda * sum(W**2)

where the masks implement drop-connect: every weight is kept with
probability ``keep_rate``, resampled each epoch. Inference scales weights
by ``keep_rate`` (the expected-mask rule) and never samples.

``ridge_closed_form`` solves the linear problem exactly and doubles as a
fast mode and as a reference for the gradient-trained linear model.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from .errors import DivergenceError, FormatError

ARCHITECTURES = ("tanh-direct", "tanh-hidden")

_BETA1 = 0.9
_BETA2 = 0.999
_ADAM_EPS = 1e-8

# Keeps the drop-connect mask stream distinct from the init stream.
_MASK_STREAM = 0x6D61736B


@dataclass(frozen=True)
class RegressorConfig:
    architecture: str = "tanh-direct"
    hidden_width: int = 0
    keep_rate: float = 0.7
    l2_lambda: float = 0.001
    step_size: float = 1e-3
    epochs: int = 500
    seed: int = 0
    linear_mode: bool = False

    def __post_init__(self) -> None:
        if self.architecture not in ARCHITECTURES:
            raise ValueError(f"unknown architecture {self.architecture!r}")
        if self.architecture == "tanh-hidden" and self.hidden_width < 1:
            raise ValueError("tanh-hidden needs hidden_width >= 1")
        if self.linear_mode and self.architecture != "tanh-direct":
            raise ValueError("linear_mode requires the tanh-direct architecture")
        if not 0.0 < self.keep_rate <= 1.0:
            raise ValueError("keep_rate must be in (0, 1]")
        if self.l2_lambda < 0.0:
            raise ValueError("l2_lambda must be nonnegative")
        if self.step_size <= 0.0:
            raise ValueError("step_size must be positive")
        if self.epochs < 1:
            raise ValueError("epochs must be positive")
        if self.seed < 0:
            raise ValueError("seed must be a nonnegative integer")


@dataclass(frozen=True)
class RegressionModel:
    """Layer weights and biases plus the config that produced them.

    ``loss_trace`` has one entry per training epoch; it is None for models
    that were not gradient-trained (fresh inits, closed-form fits).
    """

    weights: tuple[np.ndarray, ...]
    biases: tuple[np.ndarray, ...]
    config: RegressorConfig
    loss_trace: np.ndarray | None = None

    @property
    def d_in(self) -> int:
        return self.weights[0].shape[0]

    @property
    def d_out(self) -> int:
        return self.weights[-1].shape[1]

    def parameter_count(self) -> int:
        return sum(w.size for w in self.weights) + sum(b.size for b in self.biases)


def init_model(cfg: RegressorConfig, d_in: int, d_out: int) -> RegressionModel:
    """Fresh model: weights uniform in +-1/sqrt(fan_in), biases zero."""
    if d_in < 1 or d_out < 1:
        raise ValueError("dims must be positive")
    rng = np.random.default_rng(cfg.seed)
    shapes = _layer_shapes(cfg, d_in, d_out)
    weights = []
    for fan_in, fan_out in shapes:
        bound = 1.0 / np.sqrt(fan_in)
        weights.append(rng.uniform(-bound, bound, size=(fan_in, fan_out)))
    biases = [np.zeros(fan_out) for _, fan_out in shapes]
    return RegressionModel(weights=tuple(weights), biases=tuple(biases), config=cfg)


def _layer_shapes(cfg: RegressorConfig, d_in: int, d_out: int) -> list[tuple[int, int]]:
    if cfg.architecture == "tanh-hidden":
        return [(d_in, cfg.hidden_width), (cfg.hidden_width, d_out)]
    return [(d_in, d_out)]


def _forward(
    weights: tuple[np.ndarray, ...],
    biases: tuple[np.ndarray, ...],
    x: np.ndarray,
    cfg: RegressorConfig,
    masks: tuple[np.ndarray, ...] | None,
) -> tuple[np.ndarray, np.ndarray | None]:
    """Returns (prediction, hidden activation or None)."""
    eff = weights if masks is None else tuple(m * w for m, w in zip(masks, weights))
    if cfg.architecture == "tanh-hidden":
        hidden = np.tanh(x @ eff[0] + biases[0])
        return hidden @ eff[1] + biases[1], hidden
    z = x @ eff[0] + biases[0]
    return (z if cfg.linear_mode else np.tanh(z)), None


def loss_and_gradients(
    m: RegressionModel,
    x: np.ndarray,
    y: np.ndarray,
    masks: tuple[np.ndarray, ...] | None,
) -> tuple[float, tuple[tuple[np.ndarray, ...], tuple[np.ndarray, ...]]]:
    """Masked training loss and its exact gradients.

    loss = mean over samples and output dims of squared error of the masked
    forward pass, plus l2_lambda times the sum of squared weights (biases
    are not penalized). ``masks`` may be None for an all-ones mask.
    """
    cfg = m.config
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.ndim != 2 or y.ndim != 2 or x.shape[0] != y.shape[0]:
        raise ValueError("x and y must be 2-D with matching row counts")
    if x.shape[1] != m.d_in or y.shape[1] != m.d_out:
        raise ValueError(
            f"expected x cols {m.d_in} and y cols {m.d_out}, got {x.shape[1]} and {y.shape[1]}"
        )
    if masks is not None:
        for mask, w in zip(masks, m.weights):
            if mask.shape != w.shape:
                raise ValueError("mask shapes must match weight shapes")

    n, d_out = y.shape
    pred, hidden = _forward(m.weights, m.biases, x, cfg, masks)
    resid = pred - y
    lam = cfg.l2_lambda
    loss = float(np.mean(resid**2) + lam * sum(float(np.sum(w**2)) for w in m.weights))

    d_pred = 2.0 * resid / (n * d_out)
    if cfg.architecture == "tanh-hidden":
        m0 = masks[0] if masks is not None else 1.0
        m1 = masks[1] if masks is not None else 1.0
        gw1 = (hidden.T @ d_pred) * m1 + 2.0 * lam * m.weights[1]
        gb1 = d_pred.sum(axis=0)
        d_hidden = d_pred @ (m1 * m.weights[1]).T
        d_z0 = d_hidden * (1.0 - hidden**2)
        gw0 = (x.T @ d_z0) * m0 + 2.0 * lam * m.weights[0]
        gb0 = d_z0.sum(axis=0)
        return loss, ((gw0, gw1), (gb0, gb1))

    d_z = d_pred if cfg.linear_mode else d_pred * (1.0 - pred**2)
    m0 = masks[0] if masks is not None else 1.0
    gw0 = (x.T @ d_z) * m0 + 2.0 * lam * m.weights[0]
    gb0 = d_z.sum(axis=0)
    return loss, ((gw0,), (gb0,))


def train(
    m: RegressionModel,
    x: np.ndarray,
    y: np.ndarray,
    cfg: RegressorConfig | None = None,
) -> RegressionModel:
    """Run full-batch adaptive-moment descent for ``cfg.epochs`` epochs.

    Drop-connect masks are resampled per weight per epoch from a stream
    seeded by ``cfg.seed``, so identical inputs and seed give bitwise
    identical models. A non-finite loss raises DivergenceError naming the
    epoch.
    """
    cfg = cfg if cfg is not None else m.config
    if x.shape[0] < 2:
        raise ValueError("training needs at least 2 rows")
    model = replace(m, config=cfg)
    weights = [w.copy() for w in model.weights]
    biases = [b.copy() for b in model.biases]
    mask_rng = np.random.default_rng([_MASK_STREAM, cfg.seed])
    mom_w = [np.zeros_like(w) for w in weights]
    vel_w = [np.zeros_like(w) for w in weights]
    mom_b = [np.zeros_like(b) for b in biases]
    vel_b = [np.zeros_like(b) for b in biases]
    trace = np.empty(cfg.epochs)
    for epoch in range(1, cfg.epochs + 1):
        if cfg.keep_rate < 1.0:
            masks = tuple(
                (mask_rng.random(w.shape) < cfg.keep_rate).astype(np.float64) for w in weights
            )
        else:
            masks = None
        probe = replace(model, weights=tuple(weights), biases=tuple(biases))
        with np.errstate(over="ignore", invalid="ignore"):
            loss, (gw, gb) = loss_and_gradients(probe, x, y, masks)
        if not np.isfinite(loss):
            raise DivergenceError(f"non-finite training loss at epoch {epoch}")
        trace[epoch - 1] = loss
        bias1 = 1.0 - _BETA1**epoch
        bias2 = 1.0 - _BETA2**epoch
        for k in range(len(weights)):
            _adam_step(weights[k], gw[k], mom_w[k], vel_w[k], cfg.step_size, bias1, bias2)
            _adam_step(biases[k], gb[k], mom_b[k], vel_b[k], cfg.step_size, bias1, bias2)
    if not all(np.all(np.isfinite(w)) for w in weights) or not all(
        np.all(np.isfinite(b)) for b in biases
    ):
        raise DivergenceError(f"non-finite parameters after epoch {cfg.epochs}")
    return RegressionModel(
        weights=tuple(weights), biases=tuple(biases), config=cfg, loss_trace=trace
    )


def _adam_step(param, grad, mom, vel, step, bias1, bias2) -> None:
    mom *= _BETA1
    mom += (1.0 - _BETA1) * grad
    vel *= _BETA2
    vel += (1.0 - _BETA2) * grad**2
    param -= step * (mom / bias1) / (np.sqrt(vel / bias2) + _ADAM_EPS)


def predict(m: RegressionModel, x: np.ndarray) -> np.ndarray:
    """Deterministic forward pass with weights scaled by keep_rate."""
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 2 or x.shape[1] != m.d_in:
        raise ValueError(f"expected input with {m.d_in} columns, got shape {x.shape}")
    scaled = tuple(m.config.keep_rate * w for w in m.weights)
    pred, _ = _forward(scaled, m.biases, x, m.config, masks=None)
    return pred


def ridge_closed_form(
    x: np.ndarray, y: np.ndarray, lam: float, center: bool = True
) -> RegressionModel:
    """Exact linear least squares with an l2 penalty on the weights.

    Solves (X'X + lam*I) W = X'Y on (optionally) column-centered data; the
    bias restores the target column means. With lam = 0 the design must
    have full column rank.
    """
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.ndim != 2 or y.ndim != 2 or x.shape[0] != y.shape[0]:
        raise ValueError("x and y must be 2-D with matching row counts")
    if lam < 0:
        raise ValueError("lam must be nonnegative")
    if center:
        x_mean = x.mean(axis=0)
        y_mean = y.mean(axis=0)
    else:
        x_mean = np.zeros(x.shape[1])
        y_mean = np.zeros(y.shape[1])
    xc = x - x_mean
    yc = y - y_mean
    gram = xc.T @ xc + lam * np.eye(x.shape[1])
    if lam == 0 and np.linalg.matrix_rank(gram) < gram.shape[0]:
        raise np.linalg.LinAlgError("singular design with lam = 0")
    w = np.linalg.solve(gram, xc.T @ yc)
    b = y_mean - x_mean @ w
    cfg = RegressorConfig(linear_mode=True, keep_rate=1.0, l2_lambda=lam)
    return RegressionModel(weights=(w,), biases=(b,), config=cfg)


def save_model(m: RegressionModel, path: str | Path) -> None:
    """Flat text artifact: config header, then parameters row-major."""
    cfg = m.config
    lines = [
        "#neurodecode-model v1",
        f"architecture={cfg.architecture}",
        f"hidden_width={cfg.hidden_width}",
        f"keep_rate={cfg.keep_rate!r}",
        f"l2_lambda={cfg.l2_lambda!r}",
        f"step_size={cfg.step_size!r}",
        f"epochs={cfg.epochs}",
        f"seed={cfg.seed}",
        f"linear_mode={int(cfg.linear_mode)}",
        f"d_in={m.d_in}",
        f"d_out={m.d_out}",
        f"layers={len(m.weights)}",
    ]
    for k, (w, b) in enumerate(zip(m.weights, m.biases)):
        lines.append(f"weight {k} {w.shape[0]} {w.shape[1]}")
        lines.extend(" ".join(repr(float(v)) for v in row) for row in w)
        lines.append(f"bias {k} {b.shape[0]}")
        lines.append(" ".join(repr(float(v)) for v in b))
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8", newline="\n")


def load_model(path: str | Path) -> RegressionModel:
    path = Path(path)
    lines = path.read_text(encoding="utf-8").splitlines()
    if not lines or lines[0] != "#neurodecode-model v1":
        raise FormatError(f"{path}: missing model header")
    header: dict[str, str] = {}
    pos = 1
    while pos < len(lines) and "=" in lines[pos] and not lines[pos].startswith(("weight", "bias")):
        key, value = lines[pos].split("=", 1)
        header[key] = value
        pos += 1
    try:
        cfg = RegressorConfig(
            architecture=header["architecture"],
            hidden_width=int(header["hidden_width"]),
            keep_rate=float(header["keep_rate"]),
            l2_lambda=float(header["l2_lambda"]),
            step_size=float(header["step_size"]),
            epochs=int(header["epochs"]),
            seed=int(header["seed"]),
            linear_mode=bool(int(header["linear_mode"])),
        )
        n_layers = int(header["layers"])
    except (KeyError, ValueError) as exc:
        raise FormatError(f"{path}: bad model header: {exc}") from None
    weights: list[np.ndarray] = []
    biases: list[np.ndarray] = []
    try:
        for _ in range(n_layers):
            tag, _, rows, cols = lines[pos].split()
            assert tag == "weight"
            rows, cols = int(rows), int(cols)
            pos += 1
            w = np.array(
                [[float(v) for v in lines[pos + r].split()] for r in range(rows)]
            ).reshape(rows, cols)
            pos += rows
            tag, _, blen = lines[pos].split()
            assert tag == "bias"
            pos += 1
            b = np.array([float(v) for v in lines[pos].split()])
            assert len(b) == int(blen)
            pos += 1
            weights.append(w)
            biases.append(b)
    except (AssertionError, IndexError, ValueError) as exc:
        raise FormatError(f"{path}: bad parameter block: {exc}") from None
    return RegressionModel(weights=tuple(weights), biases=tuple(biases), config=cfg)
