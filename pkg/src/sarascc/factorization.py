"""Non-negative matrix factorization with multiplicative updates.

Two solvers share one configuration and stopping rule:

* :func:`nmf_factorize`, plain ``X ~ W H`` (Lee-Seung updates);
* :func:`onmtf_first_layer`, orthogonal tri-factorization ``X ~ U W V^T``
  with the Stiefel-manifold multiplicative updates.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .clustering import kmeans
from .errors import InputError

INIT_MODES = ("cocluster", "random")


@dataclass(frozen=True, eq=False)
class NonNegMatrix:
    """Entrywise non-negative real matrix.

    ``offset`` is the amount added to every entry at ingestion to remove
    negative values (0 if none were present).
    """

    data: np.ndarray
    offset: float = 0.0

    def __post_init__(self):
        data = np.array(self.data, dtype=float)
        if data.ndim != 2:
            raise InputError(f"expected a 2-D matrix, got shape {data.shape}")
        if not np.all(np.isfinite(data)):
            raise InputError("matrix has non-finite entries")
        if data.size and data.min() < 0:
            raise InputError("matrix has negative entries; use make_nonneg")
        if not (np.isfinite(self.offset) and self.offset >= 0):
            raise InputError(f"offset must be finite and >= 0, got {self.offset}")
        data.flags.writeable = False
        object.__setattr__(self, "data", data)
        object.__setattr__(self, "offset", float(self.offset))

    @property
    def shape(self):
        return self.data.shape


def make_nonneg(X) -> NonNegMatrix:
    """Shift ``X`` up by ``-min(X)`` when it has negative entries."""
    if isinstance(X, NonNegMatrix):
        return X
    X = np.array(X, dtype=float)
    if not np.all(np.isfinite(X)):
        raise InputError("matrix has non-finite entries")
    lo = X.min() if X.size else 0.0
    if lo < 0:
        return NonNegMatrix(X - lo, offset=-lo)
    return NonNegMatrix(X, 0.0)


@dataclass(frozen=True)
class SolverConfig:
    """Iteration controls shared by every multiplicative-update solver.

    ``init`` selects the tri-factorization start: ``"cocluster"`` seeds U
    and V from k-means labels of the rows and columns of X, ``"random"``
    draws every factor uniformly from (0, 1].  Plain NMF always starts
    from the uniform draw.
    """

    max_iters: int = 5000
    rel_tol: float = 1e-8
    epsilon_guard: float = 1e-12
    seed: int = 0
    eta: float = 1.0
    init: str = "cocluster"

    def __post_init__(self):
        if int(self.max_iters) != self.max_iters or self.max_iters < 1:
            raise InputError(f"max_iters must be an integer >= 1, got {self.max_iters}")
        if not self.rel_tol > 0:
            raise InputError(f"rel_tol must be > 0, got {self.rel_tol}")
        if not self.epsilon_guard > 0:
            raise InputError(f"epsilon_guard must be > 0, got {self.epsilon_guard}")
        if not 0 < self.eta <= 1:
            raise InputError(f"eta must lie in (0, 1], got {self.eta}")
        if self.init not in INIT_MODES:
            raise InputError(f"init must be one of {INIT_MODES}, got {self.init!r}")

    def to_dict(self) -> dict:
        return {"max_iters": self.max_iters, "rel_tol": self.rel_tol,
                "epsilon_guard": self.epsilon_guard, "seed": self.seed,
                "eta": self.eta, "init": self.init}


@dataclass
class NmfResult:
    W: np.ndarray
    H: np.ndarray
    objective_trace: list
    iters: int
    termination: str


@dataclass
class TriFactorLayer:
    """``X ~ U W V^T`` with non-negative factors and convergence diagnostics."""

    U: np.ndarray
    W: np.ndarray
    V: np.ndarray
    objective_trace: list
    orth_u: float
    orth_v: float
    iters: int
    termination: str
    final_rel_change: float = 0.0
    objective: float = field(default=0.0)
    final_ratio_deviation: float = 0.0

    def report(self) -> dict:
        return {"objective_trace": [float(v) for v in self.objective_trace],
                "orth_u": float(self.orth_u), "orth_v": float(self.orth_v),
                "iters": int(self.iters), "termination": self.termination}


def orthogonality_residual(M: np.ndarray) -> float:
    """``||M^T M - I||_F``."""
    return float(np.linalg.norm(M.T @ M - np.eye(M.shape[1])))


def _as_data(X) -> np.ndarray:
    if not isinstance(X, NonNegMatrix):
        X = NonNegMatrix(X)
    return X.data


def _check_rank(X: np.ndarray, r: int) -> None:
    if int(r) != r or not 1 <= r <= min(X.shape):
        raise InputError(f"rank must satisfy 1 <= r <= min{X.shape}, got {r}")


def _converged(prev: float, obj: float, rel_tol: float) -> bool:
    return abs(prev - obj) <= rel_tol * prev


def _rel_change(prev: float, obj: float) -> float:
    return abs(prev - obj) / prev if prev > 0 else 0.0


def _uniform(rng, shape):
    # uniform on (0, 1]
    return 1.0 - rng.random(shape)


def nmf_factorize(X, r: int, cfg: SolverConfig | None = None, callback=None) -> NmfResult:
    """Lee-Seung multiplicative updates for ``min 1/2 ||X - W H||_F^2``.

    The objective trace starts with the value at initialization and gains
    one entry per full (H, then W) sweep.  ``callback(W, H)``, if given, is
    called after every sweep.
    """
    cfg = cfg or SolverConfig()
    X = _as_data(X)
    _check_rank(X, r)
    rng = np.random.default_rng(cfg.seed)
    m, n = X.shape
    W = _uniform(rng, (m, r))
    H = _uniform(rng, (r, n))
    eps, eta = cfg.epsilon_guard, cfg.eta

    def objective():
        return 0.5 * float(np.sum((X - W @ H) ** 2))

    trace = [objective()]
    termination = "max-iters"
    it = 0
    for it in range(1, cfg.max_iters + 1):
        H = H * ((W.T @ X) / (W.T @ W @ H + eps)) ** eta
        W = W * ((X @ H.T) / (W @ H @ H.T + eps)) ** eta
        if callback is not None:
            callback(W, H)
        trace.append(objective())
        if _converged(trace[-2], trace[-1], cfg.rel_tol):
            termination = "rel-tol"
            break
    return NmfResult(W, H, trace, it, termination)


def _cocluster_indicator(A: np.ndarray, r: int, seed: int, offset: float = 0.01) -> np.ndarray:
    """One-hot k-means labels of the L2-normalized rows of ``A``, plus ``offset``."""
    norms = np.linalg.norm(A, axis=1, keepdims=True)
    An = A / np.maximum(norms, 1e-300)
    labels = kmeans(An, r, seed=seed).labels
    M = np.full((A.shape[0], r), offset)
    M[np.arange(A.shape[0]), labels] += 1.0
    return M


def _balance(U, W, V):
    """Move column norms of U and V into W; the product is unchanged."""
    du = np.linalg.norm(U, axis=0)
    dv = np.linalg.norm(V, axis=0)
    du = np.where(du > 0, du, 1.0)
    dv = np.where(dv > 0, dv, 1.0)
    return U / du, du[:, None] * W * dv[None, :], V / dv


def _tri_init(X, r, cfg):
    m, n = X.shape
    if cfg.init == "random":
        rng = np.random.default_rng(cfg.seed)
        return _uniform(rng, (m, r)), _uniform(rng, (r, r)), _uniform(rng, (n, r))
    U = _cocluster_indicator(X, r, cfg.seed)
    V = _cocluster_indicator(X.T, r, cfg.seed)
    U /= np.linalg.norm(U, axis=0)
    V /= np.linalg.norm(V, axis=0)
    return U, U.T @ X @ V, V


def tri_update_ratios(X, U, W, V, eps: float = 1e-12):
    """Elementwise multiplicative factors of one update at ``(U, W, V)``.

    Evaluated at a single point, so they describe the update that would
    be applied next; at a fixed point every ratio is 1.
    """
    X = _as_data(X)
    ru = (X @ V @ W.T) / (U @ W @ V.T @ X.T @ U + eps)
    rv = (X.T @ U @ W) / (V @ W.T @ U.T @ X @ V + eps)
    rw = (U.T @ X @ V) / (U.T @ U @ W @ V.T @ V + eps)
    return ru, rv, rw


def onmtf_first_layer(X, r: int, cfg: SolverConfig | None = None) -> TriFactorLayer:
    """Orthogonal non-negative tri-factorization ``X ~ U W V^T``.

    Iterates the U, V, W multiplicative updates in that order.  The updates
    are not monotone, so the lowest-objective iterate is kept.  On return,
    the column norms of U and V are folded into W, which leaves the product
    unchanged.

    Parameters
    ----------
    X : NonNegMatrix or array_like
        Non-negative m x n data.
    r : int
        Inner rank, ``1 <= r <= min(m, n)``.
    cfg : SolverConfig, optional
        Iteration controls and initialization mode.

    Returns
    -------
    TriFactorLayer
        Factors of the best iterate, the full objective trace (initial
        value first), the orthogonality residuals of U and V, and the
        largest ``|ratio - 1|`` among the update factors of the last sweep.
    """
    cfg = cfg or SolverConfig()
    X = _as_data(X)
    _check_rank(X, r)
    U, W, V = _tri_init(X, r, cfg)
    eps, eta = cfg.epsilon_guard, cfg.eta

    def objective(U, W, V):
        return 0.5 * float(np.sum((X - U @ W @ V.T) ** 2))

    trace = [objective(U, W, V)]
    best = (trace[0], U, W, V)
    termination = "max-iters"
    it = 0
    deviation = 0.0
    for it in range(1, cfg.max_iters + 1):
        ru = (X @ V @ W.T) / (U @ W @ V.T @ X.T @ U + eps)
        U = U * ru ** eta
        rv = (X.T @ U @ W) / (V @ W.T @ U.T @ X @ V + eps)
        V = V * rv ** eta
        rw = (U.T @ X @ V) / (U.T @ U @ W @ V.T @ V + eps)
        W = W * rw ** eta
        trace.append(objective(U, W, V))
        deviation = max(float(np.max(np.abs(q - 1.0))) for q in (ru, rv, rw))
        if trace[-1] < best[0]:
            best = (trace[-1], U, W, V)
        if _converged(trace[-2], trace[-1], cfg.rel_tol):
            termination = "rel-tol"
            break

    U, W, V = _balance(*best[1:])
    return TriFactorLayer(U=U, W=W, V=V, objective_trace=trace,
                          orth_u=orthogonality_residual(U), orth_v=orthogonality_residual(V),
                          iters=it, termination=termination,
                          final_rel_change=_rel_change(trace[-2], trace[-1]) if len(trace) > 1 else 0.0,
                          objective=objective(U, W, V), final_ratio_deviation=deviation)
