"""GTD attributed-scattering-center model, scene synthesis and image formation.

A scattering center is described by seven parameters (amplitude, position,
frequency dependence, length, orientation, aspect dependence).  Its
frequency/aspect response is

    A * (j f/fc)^alpha * exp(-2 pi gamma f sin(phi))
      * exp(j 4 pi f/v (x cos(phi) + y sin(phi)))
      * sinc(2 pi L/v f sin(phi - phi_bar))

with the unnormalized ``sinc(x) = sin(x)/x``.  A scene is the sum of the
responses of its scatterers.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import InputError

SPEED_OF_LIGHT = 299_792_458.0

#: Parameter names in canonical order; also the K-means feature order.
PARAM_NAMES = ("A", "x", "y", "alpha", "L", "phi_bar", "gamma")

_SINC_SERIES_CUTOFF = 1e-4


@dataclass(frozen=True)
class AscParameterSet:
    """Physical parameters of one attributed scattering center.

    Positions and length are in meters, ``phi_bar`` in radians and
    ``gamma`` in 1/Hz.  ``phi_bar`` is wrapped into [-pi, pi).
    """

    A: float = 1.0
    x: float = 0.0
    y: float = 0.0
    alpha: float = 0.0
    L: float = 0.0
    phi_bar: float = 0.0
    gamma: float = 0.0

    def __post_init__(self):
        for name in PARAM_NAMES:
            value = float(getattr(self, name))
            if not math.isfinite(value):
                raise InputError(f"scatterer parameter {name} is not finite: {value}")
            object.__setattr__(self, name, value)
        if self.A < 0:
            raise InputError(f"amplitude must be >= 0, got {self.A}")
        if self.L < 0:
            raise InputError(f"length must be >= 0, got {self.L}")
        object.__setattr__(self, "phi_bar", wrap_angle(self.phi_bar))

    def as_vector(self) -> np.ndarray:
        return np.array([getattr(self, n) for n in PARAM_NAMES], dtype=float)

    def to_dict(self) -> dict:
        return {n: getattr(self, n) for n in PARAM_NAMES}

    @classmethod
    def from_dict(cls, d: dict) -> AscParameterSet:
        missing = [n for n in PARAM_NAMES if n not in d]
        if missing:
            raise InputError(f"scatterer is missing keys {missing}")
        return cls(**{n: d[n] for n in PARAM_NAMES})

    def with_amplitude(self, A: float) -> AscParameterSet:
        return replace(self, A=A)


def wrap_angle(angle: float) -> float:
    """Wrap an angle into [-pi, pi)."""
    wrapped = (angle + math.pi) % (2 * math.pi) - math.pi
    # float modulo can land exactly on +pi
    return -math.pi if wrapped >= math.pi else wrapped


@dataclass(frozen=True, eq=False)
class RadarGrid:
    """Frequency/aspect sampling lattice of a phase history.

    Parameters
    ----------
    fc : float
        Center frequency in Hz.
    f : array_like
        Strictly increasing frequency samples (Hz), length M.
    phi : array_like
        Strictly increasing aspect samples (radians), length N.
    v : float
        Propagation velocity (m/s).
    """

    fc: float
    f: np.ndarray
    phi: np.ndarray
    v: float = SPEED_OF_LIGHT

    def __post_init__(self):
        f = np.array(self.f, dtype=float).reshape(-1)
        phi = np.array(self.phi, dtype=float).reshape(-1)
        fc, v = float(self.fc), float(self.v)
        if not (math.isfinite(fc) and fc > 0):
            raise InputError(f"center frequency must be finite and > 0, got {fc}")
        if not (math.isfinite(v) and v > 0):
            raise InputError(f"propagation velocity must be finite and > 0, got {v}")
        if f.size < 1 or phi.size < 1:
            raise InputError("grid needs at least one frequency and one aspect sample")
        if not (np.all(np.isfinite(f)) and np.all(f > 0)):
            raise InputError("frequency samples must be finite and > 0")
        if not np.all(np.isfinite(phi)):
            raise InputError("aspect samples must be finite")
        if np.any(np.diff(f) <= 0) or np.any(np.diff(phi) <= 0):
            raise InputError("frequency and aspect samples must be strictly increasing")
        f.flags.writeable = False
        phi.flags.writeable = False
        object.__setattr__(self, "f", f)
        object.__setattr__(self, "phi", phi)
        object.__setattr__(self, "fc", fc)
        object.__setattr__(self, "v", v)

    @property
    def shape(self) -> tuple[int, int]:
        return (self.f.size, self.phi.size)

    @classmethod
    def default(cls, M: int = 64, N: int = 64, fc: float = 10e9,
                bandwidth: float = 1e9, v: float = 3e8) -> RadarGrid:
        """X-band desk-scale grid.

        The aspect span is ``bandwidth / fc`` radians, which for M = N
        gives equal range and cross-range bin sizes.
        """
        span = bandwidth / fc
        f = fc + np.linspace(-bandwidth / 2, bandwidth / 2, M) if M > 1 else np.array([fc])
        phi = np.linspace(-span / 2, span / 2, N) if N > 1 else np.array([0.0])
        return cls(fc=fc, f=f, phi=phi, v=v)

    def same_as(self, other: RadarGrid) -> bool:
        return (self is other) or (
            self.fc == other.fc and self.v == other.v
            and np.array_equal(self.f, other.f) and np.array_equal(self.phi, other.phi)
        )

    def range_bin(self) -> float:
        """Down-range extent of one image pixel (m)."""
        M = self.f.size
        if M < 2:
            return math.inf
        df = (self.f[-1] - self.f[0]) / (M - 1)
        return self.v / (2 * M * df)

    def to_dict(self) -> dict:
        return {"fc_hz": self.fc, "f_hz": self.f.tolist(),
                "phi_rad": self.phi.tolist(), "v_mps": self.v}

    @classmethod
    def from_dict(cls, d: dict) -> RadarGrid:
        try:
            return cls(fc=d["fc_hz"], f=d["f_hz"], phi=d["phi_rad"], v=d["v_mps"])
        except KeyError as exc:
            raise InputError(f"grid is missing key {exc}") from None


@dataclass(frozen=True, eq=False)
class PhaseHistory:
    """Complex response sampled on a grid, indexed (frequency, aspect)."""

    data: np.ndarray
    grid: RadarGrid
    provenance: str = "synthetic"

    def __post_init__(self):
        data = np.asarray(self.data, dtype=complex)
        if data.shape != self.grid.shape:
            raise InputError(f"phase history shape {data.shape} does not match grid {self.grid.shape}")
        if not np.all(np.isfinite(data)):
            raise InputError("phase history has non-finite entries")
        if self.provenance not in ("synthetic", "loaded"):
            raise InputError(f"unknown provenance {self.provenance!r}")
        object.__setattr__(self, "data", data)

    def __add__(self, other: PhaseHistory) -> PhaseHistory:
        if not self.grid.same_as(other.grid):
            raise InputError("cannot add phase histories on different grids")
        return PhaseHistory(self.data + other.data, self.grid)


@dataclass(frozen=True, eq=False)
class SarImage:
    """Complex spatial-domain image."""

    data: np.ndarray
    magnitude: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        data = np.asarray(self.data, dtype=complex)
        if not np.all(np.isfinite(data)):
            raise InputError("image has non-finite entries")
        object.__setattr__(self, "data", data)
        object.__setattr__(self, "magnitude", np.abs(data))


def sinc(x):
    """Unnormalized sinc, ``sin(x)/x``, with a series branch near zero."""
    x = np.asarray(x, dtype=float)
    small = np.abs(x) < _SINC_SERIES_CUTOFF
    safe = np.where(small, 1.0, x)
    return np.where(small, 1.0 - x * x / 6.0, np.sin(safe) / safe)


def response_matrix(grid: RadarGrid, A, x, y, alpha, L, phi_bar, gamma) -> np.ndarray:
    """Responses of one or many scatterers, broadcast over leading axes.

    Parameter arguments may be scalars or arrays of a common shape ``S``;
    the result has shape ``S + (M, N)``.
    """
    params = [np.asarray(p, dtype=float)[..., None, None] for p in (A, x, y, alpha, L, phi_bar, gamma)]
    A, x, y, alpha, L, phi_bar, gamma = params
    f = grid.f[:, None]
    phi = grid.phi[None, :]
    ratio = f / grid.fc
    # principal branch of (j r)^alpha for r > 0
    freq_term = ratio ** alpha * np.exp(0.5j * np.pi * alpha)
    aspect_term = np.exp(-2 * np.pi * gamma * f * np.sin(phi))
    phase = np.exp(4j * np.pi * f / grid.v * (x * np.cos(phi) + y * np.sin(phi)))
    length_term = sinc(2 * np.pi * L / grid.v * f * np.sin(phi - phi_bar))
    return A * freq_term * aspect_term * phase * length_term


def evaluate_asc_response(params: AscParameterSet, grid: RadarGrid) -> PhaseHistory:
    """Phase history of a single scattering center."""
    data = response_matrix(grid, *params.as_vector())
    if not np.all(np.isfinite(data)):
        raise InputError(f"response of {params} overflows on this grid")
    return PhaseHistory(data, grid)


def synthesize_scene(scene, grid: RadarGrid) -> PhaseHistory:
    """Sum of the responses of every scatterer in ``scene``."""
    total = np.zeros(grid.shape, dtype=complex)
    for params in scene:
        total += evaluate_asc_response(params, grid).data
    return PhaseHistory(total, grid)


def form_image(ph: PhaseHistory | np.ndarray) -> SarImage:
    """Centered, unwindowed 2-D inverse DFT of a phase history."""
    data = ph.data if isinstance(ph, PhaseHistory) else np.asarray(ph, dtype=complex)
    if not np.all(np.isfinite(data)):
        raise InputError("phase history has non-finite entries")
    return SarImage(np.fft.fftshift(np.fft.ifft2(np.fft.ifftshift(data))))


def image_to_phase_history(image: SarImage | np.ndarray) -> np.ndarray:
    """Forward transform undoing :func:`form_image`."""
    data = image.data if isinstance(image, SarImage) else np.asarray(image, dtype=complex)
    return np.fft.fftshift(np.fft.fft2(np.fft.ifftshift(data)))
