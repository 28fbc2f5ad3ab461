"""Grouping scattering centers into components (ASCCs).

Two modes: K-means over standardized parameter vectors, or the
frequency-dependence/length table of canonical scatterer geometries.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np

from .errors import InputError, UnclassifiableError
from .scattering import PARAM_NAMES, RadarGrid, SarImage, form_image, synthesize_scene

CANONICAL_ALPHAS = (-1.0, -0.5, 0.0, 0.5, 1.0)
LENGTH_EPS = 1e-6


class GeometricType(enum.Enum):
    Dihedral = "Dihedral"
    Trihedral = "Trihedral"
    Cylinder = "Cylinder"
    TopHat = "TopHat"
    Sphere = "Sphere"
    EdgeBroadside = "EdgeBroadside"
    EdgeDiffraction = "EdgeDiffraction"
    CornerDiffraction = "CornerDiffraction"


# (snapped alpha, has length) -> type
_TABLE = {
    (1.0, True): GeometricType.Dihedral,
    (1.0, False): GeometricType.Trihedral,
    (0.5, True): GeometricType.Cylinder,
    (0.5, False): GeometricType.TopHat,
    (0.0, False): GeometricType.Sphere,
    (0.0, True): GeometricType.EdgeBroadside,
    (-0.5, True): GeometricType.EdgeDiffraction,
    (-1.0, False): GeometricType.CornerDiffraction,
}


def snap_alpha(alpha: float) -> float:
    """Nearest canonical frequency-dependence value (ties go to the lower one)."""
    return min(CANONICAL_ALPHAS, key=lambda a: (abs(a - alpha), a))


def geometric_classify(alpha: float, L: float, length_eps: float = LENGTH_EPS) -> GeometricType:
    """Geometric scattering type from frequency dependence and length."""
    key = (snap_alpha(alpha), L > length_eps)
    try:
        return _TABLE[key]
    except KeyError:
        raise UnclassifiableError(key[0], key[1]) from None


# ---------------------------------------------------------------------------
# K-means
# ---------------------------------------------------------------------------

@dataclass
class KMeansResult:
    labels: np.ndarray
    centers: np.ndarray
    inertia: float
    inertia_trace: list
    n_iter: int


def _sq_dist(X, C):
    return ((X[:, None, :] - C[None, :, :]) ** 2).sum(axis=2)


def _kmeans_pp(X, k, rng):
    n = X.shape[0]
    chosen = [int(rng.integers(n))]
    d2 = ((X - X[chosen[0]]) ** 2).sum(axis=1)
    for _ in range(1, k):
        total = d2.sum()
        if total > 0:
            nxt = int(rng.choice(n, p=d2 / total))
        else:
            # all remaining points coincide with a chosen center
            rest = np.setdiff1d(np.arange(n), chosen)
            nxt = int(rng.choice(rest))
        chosen.append(nxt)
        d2 = np.minimum(d2, ((X - X[nxt]) ** 2).sum(axis=1))
    return X[chosen].copy()


def _lloyd(X, centers, max_iter):
    k = centers.shape[0]
    labels = None
    trace = []
    for it in range(1, max_iter + 1):
        d = _sq_dist(X, centers)
        new_labels = d.argmin(axis=1)
        # empty-cluster repair: move the worst-fit point into the empty cluster
        counts = np.bincount(new_labels, minlength=k)
        for j in np.flatnonzero(counts == 0):
            own = d[np.arange(len(X)), new_labels]
            donors = counts[new_labels] > 1
            if not donors.any():
                break
            far = int(np.argmax(np.where(donors, own, -1.0)))
            counts[new_labels[far]] -= 1
            new_labels[far] = j
            counts[j] = 1
            centers[j] = X[far]
            d = _sq_dist(X, centers)
        trace.append(float(d[np.arange(len(X)), new_labels].sum()))
        if labels is not None and np.array_equal(new_labels, labels):
            break
        labels = new_labels
        for j in range(k):
            members = labels == j
            if members.any():
                centers[j] = X[members].mean(axis=0)
    inertia = float(((X - centers[labels]) ** 2).sum())
    trace.append(inertia)
    return labels, centers, inertia, trace, it


def kmeans(X, k: int, seed: int = 0, n_init: int = 10, max_iter: int = 300) -> KMeansResult:
    """Lloyd's algorithm with k-means++ seeding, best of ``n_init`` starts.

    Each start draws from its own generator ``default_rng([seed, start])``
    so results depend only on ``seed``.
    """
    X = np.asarray(X, dtype=float)
    if X.ndim != 2:
        raise InputError("k-means input must be a 2-D array")
    n = X.shape[0]
    if not 1 <= k <= n:
        raise InputError(f"need 1 <= k <= n_points, got k={k}, n={n}")
    best = None
    for start in range(max(1, n_init)):
        rng = np.random.default_rng([seed, start])
        labels, centers, inertia, trace, n_iter = _lloyd(X, _kmeans_pp(X, k, rng), max_iter)
        if best is None or inertia < best.inertia:
            best = KMeansResult(labels, centers, inertia, trace, n_iter)
    return best


def standardize(V: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Center and scale columns to unit variance; drop zero-variance columns.

    Returns the standardized matrix and the indices of kept columns.
    """
    mean = V.mean(axis=0)
    std = V.std(axis=0)
    keep = np.flatnonzero(std > 1e-12 * np.maximum(1.0, np.abs(mean)))
    return (V[:, keep] - mean[keep]) / std[keep], keep


# ---------------------------------------------------------------------------
# Partitions
# ---------------------------------------------------------------------------

@dataclass
class AsccComponent:
    label: str
    members: list
    centroid: np.ndarray
    image: SarImage | None = None


@dataclass
class AsccPartition:
    mode: str
    components: list = field(default_factory=list)
    scatterers: list = field(default_factory=list)
    feature_names: tuple = PARAM_NAMES

    @property
    def k(self) -> int:
        return len(self.components)

    def member_sets(self):
        return [[self.scatterers[i] for i in c.members] for c in self.components]

    def to_dict(self) -> dict:
        return {"mode": self.mode, "k": self.k,
                "components": [{"label": c.label, "members": [int(i) for i in c.members],
                                "centroid": [float(v) for v in c.centroid]}
                               for c in self.components]}


def kmeans_cluster(ascs, K_asc: int, seed: int, n_init: int = 10) -> AsccPartition:
    """K-means over the 7 standardized scatterer parameters."""
    ascs = list(ascs)
    if not 1 <= K_asc <= len(ascs):
        raise InputError(f"need 1 <= K_asc <= number of scatterers, got K_asc={K_asc}, n={len(ascs)}")
    V = np.array([a.as_vector() for a in ascs])
    Z, keep = standardize(V)
    if Z.shape[1] == 0:
        # every scatterer identical: any split has zero inertia
        Z = np.zeros((len(ascs), 1))
    result = kmeans(Z, K_asc, seed=seed, n_init=n_init)
    components = [AsccComponent(str(j), np.flatnonzero(result.labels == j).tolist(), result.centers[j])
                  for j in range(K_asc)]
    names = tuple(PARAM_NAMES[i] for i in keep) if len(keep) else ("constant",)
    return AsccPartition("kmeans", components, ascs, names)


def table_cluster(ascs, length_eps: float = LENGTH_EPS) -> AsccPartition:
    """Group scatterers by geometric type; empty types are omitted."""
    ascs = list(ascs)
    groups: dict[GeometricType, list[int]] = {}
    for i, a in enumerate(ascs):
        try:
            t = geometric_classify(a.alpha, a.L, length_eps)
        except UnclassifiableError as exc:
            raise UnclassifiableError(exc.alpha, exc.length, index=i) from None
        groups.setdefault(t, []).append(i)
    components = []
    for t in GeometricType:
        if t in groups:
            members = groups[t]
            centroid = np.mean([ascs[i].as_vector() for i in members], axis=0)
            components.append(AsccComponent(t.value, members, centroid))
    return AsccPartition("table", components, ascs)


def reconstruct_components(partition: AsccPartition, grid: RadarGrid) -> AsccPartition:
    """Fill each component's image with the image of its members' scene."""
    for comp in partition.components:
        members = [partition.scatterers[i] for i in comp.members]
        comp.image = form_image(synthesize_scene(members, grid))
    return partition
