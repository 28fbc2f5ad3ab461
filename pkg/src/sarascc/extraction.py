"""Scattering-center estimation by orthogonal matching pursuit.

The dictionary is a Cartesian grid over (x, y, alpha, L, phi_bar, gamma);
every atom is a unit-norm vectorized response with A = 1.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from .errors import InputError
from .scattering import AscParameterSet, PhaseHistory, RadarGrid, response_matrix

TABLE_PAIRS = {(1.0, True), (1.0, False), (0.5, True), (0.5, False),
               (0.0, False), (0.0, True), (-0.5, True), (-1.0, False)}


@dataclass(frozen=True)
class DictionarySpec:
    """Discretization of the atom parameters.

    ``table_consistent`` drops atoms whose (alpha, L) pair has no
    geometric-type row, so everything extracted can be table-clustered.
    """

    x: tuple = tuple(np.round(np.arange(-5, 6) * 0.3, 12))
    y: tuple = tuple(np.round(np.arange(-5, 6) * 0.3, 12))
    alpha: tuple = (-1.0, -0.5, 0.0, 0.5, 1.0)
    L: tuple = (0.0, 0.5)
    phi_bar: tuple = (0.0,)
    gamma: tuple = (0.0,)
    table_consistent: bool = False

    def __post_init__(self):
        for name in ("x", "y", "alpha", "L", "phi_bar", "gamma"):
            values = tuple(float(v) for v in getattr(self, name))
            if not values:
                raise InputError(f"dictionary axis {name!r} is empty")
            if not np.all(np.isfinite(values)):
                raise InputError(f"dictionary axis {name!r} has non-finite values")
            if len(set(values)) != len(values):
                raise InputError(f"dictionary axis {name!r} has duplicate values")
            object.__setattr__(self, name, values)

    @classmethod
    def square(cls, step: float, half_width: int, **axes) -> DictionarySpec:
        """Positions on a ``(2*half_width + 1)``-sided square lattice."""
        pos = tuple(np.round(np.arange(-half_width, half_width + 1) * step, 12))
        return cls(x=pos, y=pos, **axes)

    def to_dict(self) -> dict:
        return {k: list(getattr(self, k)) for k in ("x", "y", "alpha", "L", "phi_bar", "gamma")} | {
            "table_consistent": self.table_consistent}

    @classmethod
    def from_dict(cls, d: dict) -> DictionarySpec:
        return cls(**d)


@dataclass(frozen=True, eq=False)
class AscDictionary:
    """Unit-norm atoms with their parameter sets and lattice indices."""

    grid: RadarGrid
    spec: DictionarySpec
    params: tuple
    indices: np.ndarray
    atoms: np.ndarray  # (M*N, n_atoms), unit columns
    norms: np.ndarray  # norm of each atom before normalization

    def __len__(self):
        return len(self.params)


@dataclass
class ExtractionResult:
    scatterers: list  # (AscParameterSet, complex coefficient) in selection order
    atom_indices: list
    residual_trace: list
    termination: str

    def to_dict(self) -> dict:
        out = []
        for params, coeff in self.scatterers:
            out.append(params.to_dict() | {"coeff_re": float(coeff.real), "coeff_im": float(coeff.imag)})
        return {"scatterers": out, "residual_trace": [float(r) for r in self.residual_trace],
                "termination": self.termination}

    @property
    def parameter_sets(self) -> list:
        return [p for p, _ in self.scatterers]


def build_dictionary(grid: RadarGrid, spec: DictionarySpec | None = None) -> AscDictionary:
    """Evaluate and normalize one atom per lattice point of ``spec``."""
    spec = spec or DictionarySpec()
    axes = (spec.x, spec.y, spec.alpha, spec.L, spec.phi_bar, spec.gamma)
    combos = list(itertools.product(*(range(len(a)) for a in axes)))
    if spec.table_consistent:
        combos = [c for c in combos
                  if (spec.alpha[c[2]], spec.L[c[3]] > 1e-6) in TABLE_PAIRS]
    if not combos:
        raise InputError("dictionary specification yields no atoms")
    idx = np.array(combos, dtype=int)
    values = [np.asarray(axis)[idx[:, k]] for k, axis in enumerate(axes)]

    atoms = np.empty((grid.f.size * grid.phi.size, len(combos)), dtype=complex)
    chunk = 256
    for start in range(0, len(combos), chunk):
        sl = slice(start, start + chunk)
        block = response_matrix(grid, 1.0, *(v[sl] for v in values))
        atoms[:, sl] = block.reshape(block.shape[0], -1).T

    norms = np.linalg.norm(atoms, axis=0)
    keep = norms >= 1e-12
    norms = norms[keep]
    atoms = atoms[:, keep] / norms
    idx = idx[keep]
    params = tuple(
        AscParameterSet(1.0, *(axes[k][i] for k, i in enumerate(row))) for row in idx)
    atoms.flags.writeable = False
    return AscDictionary(grid=grid, spec=spec, params=params, indices=idx, atoms=atoms, norms=norms)


def omp_extract(ph: PhaseHistory, dictionary: AscDictionary, max_scatterers: int = 20,
                residual_tol: float = 1e-3) -> ExtractionResult:
    """Greedy sparse fit of ``ph`` by dictionary atoms.

    Each step picks the unused atom with the largest ``|<atom, residual>|``
    (lowest index on ties), then re-solves least squares over every selected
    atom.  Stops once ``||residual|| <= residual_tol * ||ph||`` or after
    ``max_scatterers`` selections.

    Coefficients refer to the unit-norm atoms.  The amplitude stored with
    each returned parameter set is rescaled to the raw model,
    ``|c| / ||atom||``, so re-synthesizing the scatterers reproduces the fit.
    """
    if not ph.grid.same_as(dictionary.grid):
        raise InputError("phase history and dictionary are on different grids")
    if max_scatterers < 0 or residual_tol < 0:
        raise InputError("max_scatterers and residual_tol must be >= 0")

    y = ph.data.reshape(-1)
    D = dictionary.atoms
    target = residual_tol * np.linalg.norm(y)
    residual = y.copy()
    trace = [float(np.linalg.norm(residual))]
    selected: list[int] = []
    coeffs = np.zeros(0, dtype=complex)
    available = np.ones(D.shape[1], dtype=bool)

    while True:
        if trace[-1] <= target:
            termination = "residual-tol"
            break
        if len(selected) >= max_scatterers or not available.any():
            termination = "max-scatterers"
            break
        scores = np.abs(D.conj().T @ residual)
        scores[~available] = -1.0
        best = int(np.argmax(scores))  # argmax returns the first maximum
        selected.append(best)
        available[best] = False
        sub = D[:, selected]
        coeffs, *_ = np.linalg.lstsq(sub, y, rcond=None)
        residual = y - sub @ coeffs
        trace.append(float(np.linalg.norm(residual)))

    scatterers = [(dictionary.params[i].with_amplitude(abs(c) / dictionary.norms[i]), complex(c))
                  for i, c in zip(selected, coeffs)]
    return ExtractionResult(scatterers, selected, trace, termination)
