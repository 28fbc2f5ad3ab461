"""Multi-layer constrained tri-factorization.

After a first layer ``X ~ U1 W1 V1^T``, each component matrix ``P_i`` is
peeled off the core in turn: ``W_{i+1} = W_i - P_i`` and
``W_i ~ U_{i+1} W_{i+1} V_{i+1}^T`` with orthonormal non-negative
``V_{i+1}``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ConstraintInfeasibleError, InputError
from .factorization import (NonNegMatrix, SolverConfig, TriFactorLayer, _converged,
                            _rel_change, make_nonneg, onmtf_first_layer, orthogonality_residual)
from .scattering import SarImage

VIOLATION_TOL = 1e-6
INIT_OFFSET = 1e-6


@dataclass(frozen=True, eq=False)
class ComponentMatrix:
    """r x r non-negative matrix standing for one scattering component."""

    data: np.ndarray
    label: str = ""
    offset: float = 0.0

    def __post_init__(self):
        data = np.array(self.data, dtype=float)
        if data.ndim != 2 or data.shape[0] != data.shape[1]:
            raise InputError(f"component matrix must be square, got shape {data.shape}")
        if not np.all(np.isfinite(data)) or (data.size and data.min() < 0):
            raise InputError("component matrix must be finite and non-negative")
        data.flags.writeable = False
        object.__setattr__(self, "data", data)

    @property
    def rank(self) -> int:
        return self.data.shape[0]


def pooling_matrix(n: int, r: int) -> np.ndarray:
    """r x n averaging operator over r equal, possibly fractional, blocks.

    Output cell k covers input interval ``[k n / r, (k+1) n / r)``; each
    input cell contributes in proportion to its overlap.  Rows sum to 1.
    """
    # work in units of 1/r of an input cell so every boundary is an integer
    lo = np.arange(r)[:, None] * n
    hi = lo + n
    cell_lo = np.arange(n)[None, :] * r
    overlap = np.clip(np.minimum(hi, cell_lo + r) - np.maximum(lo, cell_lo), 0, None)
    return overlap / n


def prepare_component(image, r: int, label: str = "") -> ComponentMatrix:
    """Bring a component image to an r x r non-negative matrix.

    Takes the magnitude of complex input, block-averages to r x r and
    shifts up by the minimum if anything is negative.
    """
    data = image.data if isinstance(image, SarImage) else np.asarray(image)
    if data.ndim != 2:
        raise InputError(f"component image must be 2-D, got shape {data.shape}")
    if not np.all(np.isfinite(data)):
        raise InputError("component image has non-finite entries")
    data = np.abs(data) if np.iscomplexobj(data) else data.astype(float)
    m, n = data.shape
    if r < 1 or (r > m and r > n):
        raise InputError(f"rank {r} exceeds both image dimensions {data.shape}")
    if (m, n) != (r, r):
        data = pooling_matrix(m, r) @ data @ pooling_matrix(n, r).T
    nn = make_nonneg(data)
    return ComponentMatrix(nn.data, label=label, offset=nn.offset)


@dataclass
class ConstrainedLayer:
    """One peeled layer: ``W_i ~ U W_next V^T`` with ``W_next = W_i - P``."""

    U: np.ndarray
    V: np.ndarray
    W_next: np.ndarray
    objective_trace: list
    orth_v: float
    orth_u: float
    iters: int
    termination: str
    violation_norm: float
    objective: float
    final_rel_change: float = 0.0

    def report(self) -> dict:
        return {"objective_final": float(self.objective), "orth_v": float(self.orth_v),
                "iters": int(self.iters), "violation_norm": float(self.violation_norm)}


def _square_data(M, what):
    if isinstance(M, (NonNegMatrix, ComponentMatrix)):
        return M.data
    if np.ndim(M) != 2:
        raise InputError(f"{what} must be a 2-D matrix")
    return NonNegMatrix(M).data


def onmtf_constrained_layer(W_i, P, cfg: SolverConfig | None = None,
                            layer: int | None = None) -> ConstrainedLayer:
    """Fit ``W_i ~ U (W_i - P) V^T`` with ``U, V >= 0`` and ``V^T V ~ I``.

    ``W_i - P`` is clamped at zero; if the clamped mass exceeds
    ``1e-6 * ||W_i||_F`` a :class:`ConstraintInfeasibleError` is raised.
    V starts at the identity plus a small offset (columns normalized).  U
    starts at the least-squares solution for that V, clipped and offset to
    stay positive, or from a seeded uniform draw when ``cfg.init`` is
    ``"random"``.  The lowest-objective iterate is returned.

    Parameters
    ----------
    W_i : NonNegMatrix or array_like
        Current r x r core.
    P : ComponentMatrix or array_like
        Component to remove, same shape as ``W_i``.
    cfg : SolverConfig, optional
        Iteration controls; ``cfg.seed`` and ``layer`` seed U.
    layer : int, optional
        Layer number used for seeding and error messages.
    """
    cfg = cfg or SolverConfig()
    Wi = _square_data(W_i, "W_i")
    Pm = _square_data(P, "P")
    if Wi.shape != Pm.shape or Wi.shape[0] != Wi.shape[1]:
        raise InputError(f"W_i {Wi.shape} and P {Pm.shape} must be equal square shapes")
    r = Wi.shape[0]

    diff = Wi - Pm
    violation = float(np.linalg.norm(np.minimum(diff, 0.0)))
    limit = VIOLATION_TOL * float(np.linalg.norm(Wi))
    if violation > limit:
        raise ConstraintInfeasibleError(violation, limit, layer)
    Wn = np.maximum(diff, 0.0)

    rng = np.random.default_rng([cfg.seed, 0 if layer is None else layer])
    V = np.eye(r) + INIT_OFFSET
    V /= np.linalg.norm(V, axis=0)
    if cfg.init == "random":
        U = 1.0 - rng.random((r, r))
    else:
        # least-squares U for the starting V, kept strictly positive
        U = np.linalg.lstsq((Wn @ V.T).T, Wi.T, rcond=None)[0].T
        U = np.maximum(U, 0.0) + INIT_OFFSET * max(float(np.abs(U).max()), 1e-300)
    eps, eta = cfg.epsilon_guard, cfg.eta

    def objective(U, V):
        return 0.5 * float(np.sum((Wi - U @ Wn @ V.T) ** 2))

    trace = [objective(U, V)]
    best = (trace[0], U, V)
    termination = "max-iters"
    it = 0
    for it in range(1, cfg.max_iters + 1):
        V = V * ((Wi.T @ U @ Wn) / (V @ Wn.T @ U.T @ Wi @ V + eps)) ** eta
        U = U * ((Wi @ V @ Wn.T) / (U @ Wn @ Wn.T + eps)) ** eta
        trace.append(objective(U, V))
        if trace[-1] < best[0]:
            best = (trace[-1], U, V)
        if _converged(trace[-2], trace[-1], cfg.rel_tol):
            termination = "rel-tol"
            break

    obj, U, V = best
    return ConstrainedLayer(U=U, V=V, W_next=Wn, objective_trace=trace,
                            orth_v=orthogonality_residual(V), orth_u=orthogonality_residual(U),
                            iters=it, termination=termination, violation_norm=violation,
                            objective=obj, final_rel_change=_rel_change(trace[-2], trace[-1]))


@dataclass
class MloDecomposition:
    first: TriFactorLayer
    layers: list = field(default_factory=list)
    components: list = field(default_factory=list)
    telescoping_residual: float = 0.0

    @property
    def rank(self) -> int:
        return self.first.W.shape[0]

    @property
    def cores(self) -> list:
        """``[W_1, W_2, ..., W_{k+1}]``."""
        return [self.first.W] + [layer.W_next for layer in self.layers]

    def report(self) -> dict:
        return {"rank": self.rank,
                "layers": [layer.report() for layer in self.layers],
                "telescoping_residual": float(self.telescoping_residual)}


def telescoping_residual(W1: np.ndarray, components, W_last: np.ndarray) -> float:
    """``max |sum_i P_i + W_{k+1} - W_1|``; zero up to rounding of the subtractions."""
    total = np.array(W_last, dtype=float)
    for P in components:
        total = total + (P.data if isinstance(P, ComponentMatrix) else P)
    return float(np.max(np.abs(total - W1))) if total.size else 0.0


def constrained_chain(W1, components, cfg: SolverConfig | None = None) -> list:
    """Peel each component off ``W1`` in order; returns the constrained layers."""
    cfg = cfg or SolverConfig()
    layers = []
    W = _square_data(W1, "W1")
    for i, P in enumerate(components, start=1):
        try:
            layer = onmtf_constrained_layer(W, P, cfg, layer=i)
        except ConstraintInfeasibleError:
            raise
        except InputError as exc:  # add the layer number to shape errors
            raise InputError(f"layer {i}: {exc}") from exc
        layers.append(layer)
        W = layer.W_next
    return layers


def mlo_decompose(X, components, r: int, cfg: SolverConfig | None = None) -> MloDecomposition:
    """First-layer tri-factorization of ``X`` followed by one constrained
    layer per component, in the order given."""
    cfg = cfg or SolverConfig()
    components = list(components)
    for j, P in enumerate(components):
        shape = P.data.shape if isinstance(P, ComponentMatrix) else np.shape(P)
        if shape != (r, r):
            raise InputError(f"component {j} has shape {shape}, expected {(r, r)}")
    first = onmtf_first_layer(X, r, cfg)
    layers = constrained_chain(first.W, components, cfg)
    W_last = layers[-1].W_next if layers else first.W
    residual = telescoping_residual(first.W, components, W_last) if components else 0.0
    return MloDecomposition(first, layers, components, residual)


def decomposition_error(X, U, W, V) -> float:
    """Squared Frobenius error ``||X - U W V^T||_F^2``."""
    X, U, W, V = (np.asarray(M, dtype=float) for M in (X, U, W, V))
    if any(M.ndim != 2 for M in (X, U, W, V)):
        raise InputError("all arguments must be 2-D")
    if U.shape[1] != W.shape[0] or W.shape[1] != V.shape[1] or X.shape != (U.shape[0], V.shape[0]):
        raise InputError(f"non-conformable shapes X{X.shape} U{U.shape} W{W.shape} V{V.shape}")
    return float(np.sum((X - U @ W @ V.T) ** 2))
