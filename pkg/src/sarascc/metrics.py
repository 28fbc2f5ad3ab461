"""Image similarity metrics, a linear softmax readout and weight attribution."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import InputError

MS_SSIM_WEIGHTS = (0.0448, 0.2856, 0.3001, 0.2363, 0.1333)


@dataclass(frozen=True)
class SsimConfig:
    window: int = 11
    sigma: float = 1.5
    k1: float = 0.01
    k2: float = 0.03
    scales: int = 3

    def __post_init__(self):
        if self.window < 1 or self.window % 2 == 0:
            raise InputError(f"window must be a positive odd size, got {self.window}")
        if not self.sigma > 0:
            raise InputError(f"sigma must be > 0, got {self.sigma}")
        if not 1 <= self.scales <= len(MS_SSIM_WEIGHTS):
            raise InputError(f"scales must lie in 1..{len(MS_SSIM_WEIGHTS)}, got {self.scales}")


@dataclass
class MetricReport:
    name: str
    value: float
    params: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {"metric": self.name, "value": float(self.value), "params": self.params}


def _pair(a, b):
    a = np.asarray(a)
    b = np.asarray(b)
    if np.iscomplexobj(a) or np.iscomplexobj(b):
        raise InputError("metrics take real images; pass magnitudes")
    a = a.astype(float)
    b = b.astype(float)
    if a.shape != b.shape or a.ndim != 2:
        raise InputError(f"images must be 2-D with equal shapes, got {a.shape} and {b.shape}")
    if not (np.all(np.isfinite(a)) and np.all(np.isfinite(b))):
        raise InputError("images have non-finite entries")
    return a, b


def mse(a, b) -> float:
    """Mean squared difference."""
    a, b = _pair(a, b)
    return float(np.mean((a - b) ** 2))


def gaussian_window(size: int = 11, sigma: float = 1.5) -> np.ndarray:
    """Normalized 1-D Gaussian taps; the 2-D window is its outer product."""
    x = np.arange(size) - (size - 1) / 2
    g = np.exp(-(x ** 2) / (2 * sigma ** 2))
    return g / g.sum()


def _filter_valid(img, g):
    # separable correlation, output restricted to full-window positions
    rows = np.lib.stride_tricks.sliding_window_view(img, g.size, axis=0) @ g
    return np.lib.stride_tricks.sliding_window_view(rows, g.size, axis=1) @ g


def ssim_maps(a, b, data_range: float, cfg: SsimConfig | None = None):
    """Local luminance and contrast-structure maps over valid window positions."""
    cfg = cfg or SsimConfig()
    if min(a.shape) < cfg.window:
        raise InputError(f"image {a.shape} is smaller than the {cfg.window}x{cfg.window} window")
    g = gaussian_window(cfg.window, cfg.sigma)
    c1 = (cfg.k1 * data_range) ** 2
    c2 = (cfg.k2 * data_range) ** 2
    mu_a = _filter_valid(a, g)
    mu_b = _filter_valid(b, g)
    var_a = _filter_valid(a * a, g) - mu_a ** 2
    var_b = _filter_valid(b * b, g) - mu_b ** 2
    cov = _filter_valid(a * b, g) - mu_a * mu_b
    lum = (2 * mu_a * mu_b + c1) / (mu_a ** 2 + mu_b ** 2 + c1)
    cs = (2 * cov + c2) / (var_a + var_b + c2)
    return lum, cs


def dynamic_range(a, b) -> float:
    return float(max(a.max(), b.max()) - min(a.min(), b.min()))


def ssim(a, b, cfg: SsimConfig | None = None) -> float:
    """Mean structural similarity with a Gaussian window.

    The dynamic range is taken from the pair itself (max over both images
    minus min over both).  Two identical constant images score 1.
    """
    cfg = cfg or SsimConfig()
    a, b = _pair(a, b)
    L = dynamic_range(a, b)
    if L == 0:
        if min(a.shape) < cfg.window:
            raise InputError(f"image {a.shape} is smaller than the {cfg.window}x{cfg.window} window")
        return 1.0
    lum, cs = ssim_maps(a, b, L, cfg)
    return float(np.mean(lum * cs))


def _pool2(img):
    m, n = (img.shape[0] // 2) * 2, (img.shape[1] // 2) * 2
    img = img[:m, :n]
    return 0.25 * (img[0::2, 0::2] + img[1::2, 0::2] + img[0::2, 1::2] + img[1::2, 1::2])


def _signed_pow(x, w):
    return float(np.sign(x) * abs(x) ** w)


def ms_ssim(a, b, cfg: SsimConfig | None = None) -> float:
    """Multi-scale SSIM with 2x average pooling between scales.

    Uses the first ``cfg.scales`` of the standard five scale weights,
    renormalized to sum to 1.  Contrast-structure terms enter at every scale,
    the luminance term only at the coarsest.  Negative terms keep their sign
    under the fractional power.
    """
    cfg = cfg or SsimConfig()
    a, b = _pair(a, b)
    coarsest = min(a.shape) // 2 ** (cfg.scales - 1)
    if coarsest < cfg.window:
        raise InputError(f"image {a.shape} too small for {cfg.scales} scales "
                         f"with a {cfg.window}x{cfg.window} window")
    L = dynamic_range(a, b)
    if L == 0:
        return 1.0
    w = np.array(MS_SSIM_WEIGHTS[:cfg.scales])
    w = w / w.sum()
    value = 1.0
    for j in range(cfg.scales):
        lum, cs = ssim_maps(a, b, L, cfg)
        if j == cfg.scales - 1:
            value *= _signed_pow(np.mean(lum * cs), w[j])
        else:
            value *= _signed_pow(np.mean(cs), w[j])
            a, b = _pool2(a), _pool2(b)
    return value


# ---------------------------------------------------------------------------
# Linear readout
# ---------------------------------------------------------------------------

@dataclass
class LinearReadout:
    """Softmax classifier ``argmax(W x + b)`` over ``classes``."""

    weights: np.ndarray
    bias: np.ndarray
    classes: np.ndarray
    loss_trace: list = field(default_factory=list)

    def logits(self, X) -> np.ndarray:
        return np.asarray(X, dtype=float) @ self.weights.T + self.bias

    def predict(self, X) -> np.ndarray:
        return self.classes[np.argmax(self.logits(X), axis=1)]

    def accuracy(self, X, labels) -> float:
        return float(np.mean(self.predict(X) == np.asarray(labels)))


def softmax_xent(W, b, X, y):
    """Mean softmax cross-entropy and its gradient with respect to (W, b).

    ``y`` holds class indices into the rows of ``W``.
    """
    z = X @ W.T + b
    z = z - z.max(axis=1, keepdims=True)
    logp = z - np.log(np.exp(z).sum(axis=1, keepdims=True))
    S = X.shape[0]
    loss = -float(np.mean(logp[np.arange(S), y]))
    d = np.exp(logp)
    d[np.arange(S), y] -= 1.0
    d /= S
    return loss, d.T @ X, d.sum(axis=0)


def fit_linear_readout(features, labels, epochs: int = 200, step: float = 1.0,
                       seed: int = 0) -> LinearReadout:
    """Full-batch gradient descent on softmax cross-entropy.

    Weights start from a small seeded normal draw and the bias at 0.  A step
    that would raise the loss is retried at half the step size, so the loss
    trace never increases.
    """
    X = np.asarray(features, dtype=float)
    if X.ndim != 2:
        raise InputError(f"features must be a 2-D (samples, dims) array, got {X.shape}")
    if not np.all(np.isfinite(X)):
        raise InputError("features have non-finite entries")
    labels = np.asarray(labels)
    if labels.shape != (X.shape[0],):
        raise InputError("need exactly one label per sample")
    classes, y = np.unique(labels, return_inverse=True)
    if classes.size < 2:
        raise InputError("need at least two classes")
    rng = np.random.default_rng(seed)
    W = 0.01 * rng.standard_normal((classes.size, X.shape[1]))
    b = np.zeros(classes.size)
    loss, gW, gb = softmax_xent(W, b, X, y)
    trace = [loss]
    for _ in range(epochs):
        eta = step
        while True:
            W_new, b_new = W - eta * gW, b - eta * gb
            new_loss, new_gW, new_gb = softmax_xent(W_new, b_new, X, y)
            if new_loss <= loss or eta < 1e-12:
                break
            eta /= 2
        if new_loss > loss:
            break
        W, b, loss, gW, gb = W_new, b_new, new_loss, new_gW, new_gb
        trace.append(loss)
    return LinearReadout(W, b, classes, trace)


def attribute_weights(readout: LinearReadout, n_blocks: int) -> np.ndarray:
    """Per-class importance of each contiguous feature block, scaled to [1, 10].

    For each class, the mean absolute weight of every block is mapped
    affinely so the smallest becomes 1 and the largest 10.  A class whose
    blocks all tie maps to all 1.

    Returns
    -------
    ndarray, shape (n_classes, n_blocks)
    """
    W = np.asarray(readout.weights, dtype=float)
    if n_blocks < 1 or W.shape[1] % n_blocks:
        raise InputError(f"feature dimension {W.shape[1]} does not split into {n_blocks} blocks")
    means = np.abs(W).reshape(W.shape[0], n_blocks, -1).mean(axis=2)
    lo = means.min(axis=1, keepdims=True)
    span = means.max(axis=1, keepdims=True) - lo
    safe = np.where(span > 0, span, 1.0)
    out = np.where(span > 0, 1.0 + 9.0 * (means - lo) / safe, 1.0)
    return np.clip(out, 1.0, 10.0)
