"""Seeded five-stage run: synthesize, extract, cluster, decompose, evaluate."""

from __future__ import annotations

import hashlib
import json
import time
from dataclasses import dataclass, field

import numpy as np

from .clustering import AsccPartition, kmeans_cluster, reconstruct_components, table_cluster
from .errors import InputError
from .extraction import TABLE_PAIRS, DictionarySpec, build_dictionary, omp_extract
from .factorization import SolverConfig, make_nonneg, onmtf_first_layer
from .io import encode_nnmx
from .metrics import ms_ssim, mse, ssim
from .mlo import ComponentMatrix, constrained_chain, decomposition_error, telescoping_residual
from .scattering import AscParameterSet, RadarGrid, form_image, synthesize_scene

STAGES = ("synth", "extract", "cluster", "decompose", "evaluate")


@dataclass(frozen=True)
class PipelineConfig:
    seed: int = 0
    k_asc: int = 6
    rank: int = 16
    mode: str = "kmeans"
    n_scatterers: int = 10
    max_scatterers: int = 20
    residual_tol: float = 1e-3
    solver: SolverConfig = field(default_factory=SolverConfig)
    dictionary: DictionarySpec = field(default_factory=lambda: DictionarySpec(table_consistent=True))

    def __post_init__(self):
        if self.k_asc < 1:
            raise InputError(f"K_asc must be >= 1, got {self.k_asc}")
        if self.mode not in ("kmeans", "table"):
            raise InputError(f"mode must be 'kmeans' or 'table', got {self.mode!r}")
        if self.n_scatterers < 0:
            raise InputError("n_scatterers must be >= 0")


@dataclass
class RunReport:
    stages: list
    decomposition: dict
    metrics: dict
    config: dict

    def digests(self) -> list:
        return [s["digest"] for s in self.stages]

    def to_dict(self) -> dict:
        return {"stages": self.stages, "decomposition": self.decomposition,
                "metrics": self.metrics, "config": self.config}


@dataclass
class PipelineResult:
    report: RunReport
    grid: RadarGrid
    scene: list
    original: np.ndarray
    reconstruction: np.ndarray
    extraction: object
    partition: AsccPartition
    first_layer: object
    layers: list
    components: list


def _digest(*parts) -> str:
    h = hashlib.sha256()
    for p in parts:
        if isinstance(p, np.ndarray):
            h.update(encode_nnmx(p))
        else:
            h.update(json.dumps(p, sort_keys=True).encode())
    return h.hexdigest()


def random_scene(grid: RadarGrid, spec: DictionarySpec, n: int, seed: int) -> list:
    """``n`` scatterers at distinct dictionary lattice points.

    Frequency dependence and length come from table-consistent pairs,
    amplitudes are uniform on [0.5, 1.5].
    """
    rng = np.random.default_rng(seed)
    cells = [(x, y) for x in spec.x for y in spec.y]
    if n > len(cells):
        raise InputError(f"cannot place {n} scatterers on {len(cells)} lattice points")
    pairs = [(a, L) for a in spec.alpha for L in spec.L if (a, L > 1e-6) in TABLE_PAIRS]
    if not pairs:
        raise InputError("dictionary has no table-consistent (alpha, L) pair")
    chosen = rng.choice(len(cells), size=n, replace=False)
    scene = []
    for c in chosen:
        a, L = pairs[rng.integers(len(pairs))]
        scene.append(AscParameterSet(A=rng.uniform(0.5, 1.5), x=cells[c][0], y=cells[c][1],
                                     alpha=a, L=L, phi_bar=spec.phi_bar[0], gamma=spec.gamma[0]))
    return scene


def core_shares(first, images: list, X: np.ndarray, scale: float, labels=None) -> list:
    """Split the first-layer core among component images.

    Each image magnitude (divided by ``scale``, the normalization applied to
    X) is projected into core coordinates, ``Q_i = U^T |C_i| V``.  The part
    of X no component explains projects to ``Q_res``.  Component i receives
    ``W1 * Q_i / (sum_j Q_j + Q_res)``, so the shares never exceed W1 and
    the remainder stays with the last core.
    """
    U, W1, V = first.U, first.W, first.V
    mags = [np.abs(im) / scale for im in images]
    Q = [U.T @ m @ V for m in mags]
    residual = np.maximum(X - sum(mags, np.zeros_like(X)), 0.0)
    denom = sum(Q, np.zeros_like(W1)) + U.T @ residual @ V
    safe = np.where(denom > 0, denom, 1.0)
    labels = labels or [""] * len(images)
    return [ComponentMatrix(np.where(denom > 0, W1 * q / safe, 0.0), label=lab)
            for q, lab in zip(Q, labels)]


def run_pipeline(cfg: PipelineConfig, grid: RadarGrid | None = None,
                 scene: list | None = None) -> PipelineResult:
    grid = grid or RadarGrid.default()
    stages = []

    def stage(name, start, *payload):
        stages.append({"name": name, "seconds": time.perf_counter() - start,
                       "digest": _digest(*payload)})

    t0 = time.perf_counter()
    if scene is None:
        scene = random_scene(grid, cfg.dictionary, cfg.n_scatterers, cfg.seed)
    ph = synthesize_scene(scene, grid)
    original = form_image(ph).data
    stage("synth", t0, ph.data)

    t0 = time.perf_counter()
    dictionary = build_dictionary(grid, cfg.dictionary)
    extraction = omp_extract(ph, dictionary, cfg.max_scatterers, cfg.residual_tol)
    stage("extract", t0, extraction.to_dict())

    t0 = time.perf_counter()
    ascs = extraction.parameter_sets
    if not ascs:
        raise InputError("extraction found no scatterers to cluster")
    if cfg.mode == "kmeans":
        partition = kmeans_cluster(ascs, min(cfg.k_asc, len(ascs)), cfg.seed)
    else:
        partition = table_cluster(ascs)
    reconstruct_components(partition, grid)
    stage("cluster", t0, partition.to_dict(), *[c.image.data for c in partition.components])

    t0 = time.perf_counter()
    mag = np.abs(original)
    span = mag.max() - mag.min()
    X = (mag - mag.min()) / span if span > 0 else np.zeros_like(mag)
    solver = SolverConfig(**{**cfg.solver.to_dict(), "seed": cfg.seed})
    first = onmtf_first_layer(make_nonneg(X), cfg.rank, solver)
    comps = core_shares(first, [c.image.data for c in partition.components], X,
                        span if span > 0 else 1.0, [c.label for c in partition.components])
    layers = constrained_chain(first.W, comps, solver)
    first_err = decomposition_error(X, first.U, first.W, first.V)
    cores = [first.W] + [layer.W_next for layer in layers]
    layer_errs = [decomposition_error(cores[i], layer.U, layer.W_next, layer.V)
                  for i, layer in enumerate(layers)]
    decomposition = {"first_layer_error": first_err,
                     "first_layer_error_per_entry": first_err / X.size,
                     "layer_errors": layer_errs,
                     "telescoping_residual": telescoping_residual(first.W, comps, cores[-1]),
                     "first_layer": {k: v for k, v in first.report().items() if k != "objective_trace"},
                     "layers": [layer.report() for layer in layers]}
    stage("decompose", t0, first.U, first.W, first.V,
          *[m for layer in layers for m in (layer.U, layer.V, layer.W_next)])

    t0 = time.perf_counter()
    recon = sum((c.image.data for c in partition.components), np.zeros(grid.shape, dtype=complex))
    a, b = np.abs(recon), np.abs(original)
    metrics = {"ssim": ssim(a, b), "ms_ssim": ms_ssim(a, b), "mse": mse(a, b),
               "n_extracted": len(ascs), "k": partition.k}
    stage("evaluate", t0, metrics)

    report = RunReport(stages, decomposition, metrics,
                       {"seed": cfg.seed, "k_asc": cfg.k_asc, "rank": cfg.rank, "mode": cfg.mode,
                        "n_scatterers": cfg.n_scatterers, "max_scatterers": cfg.max_scatterers,
                        "residual_tol": cfg.residual_tol, "solver": solver.to_dict(),
                        "dictionary": cfg.dictionary.to_dict()})
    return PipelineResult(report, grid, scene, original, recon, extraction, partition,
                          first, layers, comps)
