"""Feature decoupling losses with analytic gradients.

Pure functions over caller-supplied feature arrays: a contrastive
discrimination loss over cosine similarities, a weighted pixel alignment
loss, and the gated corrective weight that feeds it.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import InputError

POSITIVITY_SHIFT = 1e-6
_NORM_FLOOR = 1e-300


def _l2n(v: np.ndarray, what: str) -> tuple[np.ndarray, np.ndarray]:
    """Normalize along the last axis; returns (unit vectors, norms)."""
    norms = np.linalg.norm(v, axis=-1, keepdims=True)
    if np.any(norms <= _NORM_FLOOR):
        raise InputError(f"{what} has a zero-norm vector")
    return v / norms, norms


def cosine_sim(a, b) -> float:
    """Cosine of the angle between two vectors, clamped to [-1, 1]."""
    a = np.asarray(a, dtype=float).reshape(-1)
    b = np.asarray(b, dtype=float).reshape(-1)
    if a.shape != b.shape:
        raise InputError(f"vector shapes differ: {a.shape} vs {b.shape}")
    ua, _ = _l2n(a, "a")
    ub, _ = _l2n(b, "b")
    return float(np.clip(ua @ ub, -1.0, 1.0))


@dataclass(frozen=True, eq=False)
class FeatureStack:
    """A feature tensor and its successively filtered versions.

    ``mids[i]`` is the output of the (i+1)-th filter; all arrays share one
    shape.
    """

    x: np.ndarray
    mids: tuple

    def __post_init__(self):
        x = np.asarray(self.x, dtype=float)
        mids = tuple(np.asarray(m, dtype=float) for m in self.mids)
        for i, m in enumerate(mids):
            if m.shape != x.shape:
                raise InputError(f"filtered feature {i} has shape {m.shape}, expected {x.shape}")
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "mids", mids)


def derive_approx_components(stack: FeatureStack) -> list:
    """Differences between consecutive filter outputs.

    The first component is ``x - mids[0]`` and the i-th is
    ``mids[i-1] - mids[i]``, so they telescope to ``x - mids[-1]``.
    """
    prev = stack.x
    out = []
    for m in stack.mids:
        out.append(prev - m)
        prev = m
    return out


def positivity_map(s):
    """Monotone map of a similarity in [-1, 1] onto (0, 1]."""
    return (np.asarray(s, dtype=float) + 1.0) / 2.0 + POSITIVITY_SHIFT


def global_discrimination_loss(s_pos, s_neg):
    """Contrastive loss over raw cosine similarities.

    For each anchor ``a`` with mapped positive ``p`` and mapped negatives
    ``n_j`` the term is ``-log(p / (p + sum_j n_j))``; terms are summed.

    Parameters
    ----------
    s_pos : array_like, shape (A,)
        Similarity of each anchor to its positive.
    s_neg : array_like, shape (A, J)
        Similarities of each anchor to its negatives; ``J`` may be 0.

    Returns
    -------
    loss : float
    grad_pos : ndarray, shape (A,)
        Derivative with respect to each raw positive similarity.
    grad_neg : ndarray, shape (A, J)
        Derivative with respect to each raw negative similarity.
    """
    s_pos = np.atleast_1d(np.asarray(s_pos, dtype=float))
    if s_pos.ndim != 1 or s_pos.size == 0:
        raise InputError("need at least one positive similarity")
    s_neg = np.asarray(s_neg, dtype=float)
    if s_neg.size == 0:
        s_neg = s_neg.reshape(s_pos.size, 0)
    if s_neg.ndim != 2 or s_neg.shape[0] != s_pos.size:
        raise InputError(f"negatives must have shape ({s_pos.size}, J), got {s_neg.shape}")
    if not (np.all(np.isfinite(s_pos)) and np.all(np.isfinite(s_neg))):
        raise InputError("similarities must be finite")

    p = positivity_map(s_pos)
    n = positivity_map(s_neg)
    total = p + n.sum(axis=1)
    loss = float(np.sum(np.log(total) - np.log(p)))
    # d/ds of the map is 1/2
    grad_pos = 0.5 * (1.0 / total - 1.0 / p)
    grad_neg = 0.5 * np.broadcast_to((1.0 / total)[:, None], n.shape).copy()
    return loss, grad_pos, grad_neg


@dataclass
class LocalWeightState:
    """Gate configuration and the previous similarity per key.

    ``previous`` maps a caller-chosen key (component, pixel group) to the
    similarity seen at the last step.
    """

    eps_gate: float = 0.05
    rho: float = 2.0
    previous: dict = field(default_factory=dict)

    def __post_init__(self):
        if not self.rho >= 0:
            raise InputError(f"rho must be >= 0, got {self.rho}")

    def step(self, key, d_t: float) -> float:
        """Weight for ``key`` at similarity ``d_t``; records ``d_t`` for next time.

        The first visit to a key has no history and keeps the gate closed.
        """
        d_t = float(np.clip(d_t, -1.0, 1.0))
        prev = self.previous.get(key)
        lam = 1.0 if prev is None else local_weight(d_t, prev, self)
        self.previous[key] = d_t
        return lam


def gate(d_t: float, d_prev: float, eps_gate: float) -> int:
    """1 when the similarity rose by at least ``eps_gate`` relative to ``|d_t|``."""
    return int((d_t - d_prev) / max(abs(d_t), 1e-12) >= eps_gate)


def gated_weight(d_t: float, beta: int, rho: float) -> float:
    """``clamp(1 - beta (d_t + 2) / 2, 0, 1) ** rho``."""
    base = 1.0 - beta * (d_t + 2.0) / 2.0
    return float(min(max(base, 0.0), 1.0) ** rho)


def local_weight(d_t: float, d_prev: float, state: LocalWeightState | None = None) -> float:
    """Corrective pixel weight from the current and previous similarity."""
    state = state or LocalWeightState()
    d_t = float(np.clip(d_t, -1.0, 1.0))
    d_prev = float(np.clip(d_prev, -1.0, 1.0))
    return gated_weight(d_t, gate(d_t, d_prev, state.eps_gate), state.rho)


def local_pixel_loss(f, P, lam):
    """Weighted alignment of pixel features with a prototype.

    ``-sum_k lam_k cos(f_k, P)``, computed on L2-normalized vectors.

    Parameters
    ----------
    f : array_like, shape (K, D)
        One feature vector per pixel.
    P : array_like, shape (D,)
        Prototype of the component.
    lam : array_like, shape (K,)
        Per-pixel weights in [0, 1].

    Returns
    -------
    loss : float
    grad_f : ndarray, shape (K, D)
    """
    f = np.atleast_2d(np.asarray(f, dtype=float))
    P = np.asarray(P, dtype=float).reshape(-1)
    lam = np.asarray(lam, dtype=float).reshape(-1)
    if f.shape[1] != P.size or lam.size != f.shape[0]:
        raise InputError(f"shapes do not match: f {f.shape}, P {P.shape}, lam {lam.shape}")
    if np.any(lam < 0) or np.any(lam > 1):
        raise InputError("weights must lie in [0, 1]")
    uf, nf = _l2n(f, "f")
    up, _ = _l2n(P, "P")
    cos = uf @ up
    loss = -float(lam @ cos)
    grad = -lam[:, None] * (up[None, :] - cos[:, None] * uf) / nf
    return loss, grad
