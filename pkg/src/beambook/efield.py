"""Per-element E-field data: grids, direction sets, and coherence matrices.

An antenna array is described by the complex E-field response of each
element, sampled on a (theta, phi) mesh and split into the two transverse
polarization components.  Everything downstream (beam design, codebook
synthesis, coverage evaluation) consumes this data only through the
coherence matrix ``M = e_T e_T^H + e_P e_P^H`` and its quadratic forms,
so the data source (EM simulation export, measurement, or the synthetic
linear-array generator below) is interchangeable.

All angles are degrees: theta (zenith) in [0, 180], phi (azimuth) in
[0, 360).  Grids and direction sets are immutable after construction and
all functions here are pure.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Iterator, NamedTuple, Sequence

import numpy as np

# Impedance of free space, ohms.
FREE_SPACE_IMPEDANCE_OHMS = 376.730313668

# Realized gain = GAIN_FACTOR * w^H M w for fields stored in volts.
GAIN_FACTOR = 2.0 * math.pi / FREE_SPACE_IMPEDANCE_OHMS

GRID_CSV_HEADER = "elem,theta_deg,phi_deg,re_etheta,im_etheta,re_ephi,im_ephi"


class GridFormatError(ValueError):
    """Raised when an E-field CSV file does not conform to the grid schema."""


class Direction(NamedTuple):
    """A single far-field direction, degrees."""

    theta: float
    phi: float


def _normalize_phi(phi):
    return np.mod(phi, 360.0)


@dataclass(frozen=True)
class DirectionSet:
    """A weighted set of directions used for sphere averages.

    Weights are nonnegative quadrature weights summing to one; a uniform
    weighting corresponds to equal-area sampling of the sphere.
    """

    theta: np.ndarray
    phi: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        theta = np.asarray(self.theta, dtype=float)
        phi = _normalize_phi(np.asarray(self.phi, dtype=float))
        weights = np.asarray(self.weights, dtype=float)
        if not (theta.shape == phi.shape == weights.shape) or theta.ndim != 1:
            raise ValueError("theta, phi and weights must be 1-D arrays of equal length")
        if theta.size == 0:
            raise ValueError("direction set is empty")
        if np.any(theta < 0.0) or np.any(theta > 180.0):
            raise ValueError("theta out of [0, 180]")
        if np.any(weights < 0.0):
            raise ValueError("negative quadrature weight")
        if abs(weights.sum() - 1.0) > 1e-12:
            raise ValueError("weights must sum to 1 within 1e-12")
        for name, arr in (("theta", theta), ("phi", phi), ("weights", weights)):
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    def __len__(self) -> int:
        return self.theta.size

    def __iter__(self) -> Iterator[Direction]:
        for t, p in zip(self.theta, self.phi):
            yield Direction(float(t), float(p))

    @property
    def directions(self) -> list[Direction]:
        return list(self)

    @classmethod
    def from_directions(cls, dirs: Sequence[Direction], weights=None) -> "DirectionSet":
        theta = np.array([d.theta for d in dirs], dtype=float)
        phi = np.array([d.phi for d in dirs], dtype=float)
        if weights is None:
            weights = np.full(theta.size, 1.0 / theta.size)
        return cls(theta, phi, np.asarray(weights, dtype=float))


@dataclass(frozen=True)
class CoverageRegion:
    """A (theta, phi) box on the sphere; the phi range may wrap through 0."""

    theta_range: tuple[float, float] = (0.0, 180.0)
    phi_range: tuple[float, float] = (0.0, 360.0)

    def __post_init__(self):
        lo, hi = self.theta_range
        if not (0.0 <= lo <= hi <= 180.0):
            raise ValueError("theta_range must satisfy 0 <= lo <= hi <= 180")

    def contains(self, theta, phi) -> np.ndarray:
        """Vectorized membership test; phi wraparound handled."""
        theta = np.asarray(theta, dtype=float)
        phi = _normalize_phi(np.asarray(phi, dtype=float))
        tlo, thi = self.theta_range
        in_theta = (theta >= tlo) & (theta <= thi)
        plo, phi_hi = self.phi_range
        if plo == 0.0 and phi_hi >= 360.0:
            return in_theta
        plo = float(np.mod(plo, 360.0))
        phi_hi = float(phi_hi if phi_hi == 360.0 else np.mod(phi_hi, 360.0))
        if plo <= phi_hi:
            in_phi = (phi >= plo) & (phi <= phi_hi)
        else:  # wraps through 0
            in_phi = (phi >= plo) | (phi <= phi_hi)
        return in_theta & in_phi


@dataclass(frozen=True)
class SyntheticUlaSpec:
    """Parameters of the synthetic uniform-linear-array field model.

    ``element_pattern_q`` is the exponent of the sin^q(theta) per-element
    power pattern (0 = isotropic).  ``sampling_factor`` sets the density
    of the cosine-uniform theta sweep: 2a+1 points with cos(theta) on a
    uniform lattice over [-1, 1]; default a = 30 * num_elements.
    """

    num_elements: int
    spacing_over_lambda: float
    element_pattern_q: float = 0.0
    sampling_factor: int | None = None

    def __post_init__(self):
        if self.num_elements < 1:
            raise ValueError("num_elements must be >= 1")
        if self.spacing_over_lambda <= 0.0:
            raise ValueError("spacing_over_lambda must be positive")
        if self.element_pattern_q < 0.0:
            raise ValueError("element_pattern_q must be >= 0")
        if self.sampling_factor is not None and self.sampling_factor < 1:
            raise ValueError("sampling_factor must be >= 1")

    @property
    def effective_sampling_factor(self) -> int:
        return self.sampling_factor if self.sampling_factor is not None else 30 * self.num_elements


@dataclass(frozen=True)
class EFieldGrid:
    """Complex per-element E-field samples on a (theta, phi) mesh.

    ``e_theta`` and ``e_phi`` have shape (num_elements, len(theta_axis),
    len(phi_axis)) and hold the two polarization components in volts
    (distance-normalized response for 1 W incident power).
    """

    array_id: str
    theta_axis: np.ndarray
    phi_axis: np.ndarray
    e_theta: np.ndarray
    e_phi: np.ndarray

    def __post_init__(self):
        theta_axis = np.asarray(self.theta_axis, dtype=float)
        phi_axis = np.asarray(self.phi_axis, dtype=float)
        e_theta = np.asarray(self.e_theta, dtype=complex)
        e_phi = np.asarray(self.e_phi, dtype=complex)
        if theta_axis.ndim != 1 or phi_axis.ndim != 1:
            raise ValueError("axes must be 1-D")
        if np.any(np.diff(theta_axis) <= 0) or np.any(np.diff(phi_axis) <= 0):
            raise ValueError("axes must be strictly increasing")
        if np.any(theta_axis < 0) or np.any(theta_axis > 180):
            raise ValueError("theta_axis out of [0, 180]")
        if np.any(phi_axis < 0) or np.any(phi_axis >= 360):
            raise ValueError("phi_axis out of [0, 360)")
        expected = (e_theta.shape[0], theta_axis.size, phi_axis.size)
        if e_theta.shape != expected or e_phi.shape != e_theta.shape:
            raise ValueError(f"field tensors must have shape {expected}")
        if e_theta.shape[0] < 1:
            raise ValueError("grid must contain at least one element")
        if not (np.all(np.isfinite(e_theta)) and np.all(np.isfinite(e_phi))):
            raise ValueError("non-finite field sample")
        for name, arr in (
            ("theta_axis", theta_axis),
            ("phi_axis", phi_axis),
            ("e_theta", e_theta),
            ("e_phi", e_phi),
        ):
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    @property
    def num_elements(self) -> int:
        return self.e_theta.shape[0]

    def nearest_index(self, theta: float, phi: float) -> tuple[int, int]:
        """Indices of the mesh node nearest to (theta, phi).

        Theta and phi are rounded independently; phi distance wraps at
        360.  Equidistant nodes resolve to the lower index.
        """
        it = int(np.argmin(np.abs(self.theta_axis - float(theta))))
        dphi = np.abs(self.phi_axis - _normalize_phi(float(phi)))
        dphi = np.minimum(dphi, 360.0 - dphi)
        ip = int(np.argmin(dphi))
        return it, ip

    def index_of(self, theta: float, phi: float, tol: float = 1e-9) -> tuple[int, int]:
        """Exact mesh lookup; raises KeyError for off-mesh directions."""
        it, ip = self.nearest_index(theta, phi)
        dphi = abs(self.phi_axis[ip] - _normalize_phi(float(phi)))
        dphi = min(dphi, 360.0 - dphi)
        if abs(self.theta_axis[it] - theta) > tol or dphi > tol:
            raise KeyError(f"direction (theta={theta}, phi={phi}) is not on the mesh of '{self.array_id}'")
        return it, ip

    def fields_at(self, dirs: DirectionSet) -> tuple[np.ndarray, np.ndarray]:
        """Field matrices (num_elements, len(dirs)) at on-mesh directions."""
        idx = [self.index_of(t, p) for t, p in zip(dirs.theta, dirs.phi)]
        it = np.array([i for i, _ in idx], dtype=int)
        ip = np.array([j for _, j in idx], dtype=int)
        return self.e_theta[:, it, ip], self.e_phi[:, it, ip]


def coherence_matrix(grid: EFieldGrid, direction: Direction) -> np.ndarray:
    """Hermitian PSD matrix whose quadratic form gives the realized field power.

    Sum of the outer products of the two polarization field vectors at an
    on-mesh direction; rank <= 2 by construction.
    """
    it, ip = grid.index_of(direction.theta, direction.phi)
    et = grid.e_theta[:, it, ip]
    ep = grid.e_phi[:, it, ip]
    return np.outer(et, et.conj()) + np.outer(ep, ep.conj())


def coherence_sum(grid: EFieldGrid, directions: Iterable[Direction], weights=None) -> np.ndarray:
    """Sum of coherence matrices over a set of on-mesh directions.

    Optional nonnegative per-direction weights scale each term (used for
    quadrature-weighted accumulation); the plain sum is the default.
    """
    dirs = list(directions)
    if weights is None:
        weights = np.ones(len(dirs))
    idx = [grid.index_of(d.theta, d.phi) for d in dirs]
    it = np.array([i for i, _ in idx], dtype=int)
    ip = np.array([j for _, j in idx], dtype=int)
    et = grid.e_theta[:, it, ip] * np.sqrt(weights)
    ep = grid.e_phi[:, it, ip] * np.sqrt(weights)
    return et @ et.conj().T + ep @ ep.conj().T


def fibonacci_directions(count: int) -> DirectionSet:
    """Quasi-uniform sphere sampling on a Fibonacci lattice, uniform weights.

    Point i of n sits at cos(theta) = 1 - (2i+1)/n with azimuth advancing
    by the golden angle.
    """
    if count < 1:
        raise ValueError("count must be >= 1")
    i = np.arange(count)
    z = 1.0 - (2.0 * i + 1.0) / count
    theta = np.degrees(np.arccos(np.clip(z, -1.0, 1.0)))
    golden = (1.0 + math.sqrt(5.0)) / 2.0
    phi = np.mod(360.0 * i / golden, 360.0)
    return DirectionSet(theta, phi, np.full(count, 1.0 / count))


def mesh_directions(grid: EFieldGrid) -> DirectionSet:
    """All mesh nodes of a uniform (theta, phi) lattice, sin(theta)-weighted.

    The weights realize the sin(theta) dtheta dphi sphere measure for
    uniformly spaced axes; use the generator's own direction set for
    cosine-uniform synthetic grids instead.
    """
    tt, pp = np.meshgrid(grid.theta_axis, grid.phi_axis, indexing="ij")
    w = np.sin(np.radians(tt)).ravel()
    total = w.sum()
    if total <= 0.0:
        raise ValueError("mesh has no interior nodes; all weights vanish")
    return DirectionSet(tt.ravel(), pp.ravel(), w / total)


def snap_to_grid(dirs: DirectionSet, grid: EFieldGrid) -> DirectionSet:
    """Replace each direction by its nearest mesh node; weights unchanged.

    Duplicates are retained so that quadrature weights keep their meaning.
    """
    theta = np.empty(len(dirs))
    phi = np.empty(len(dirs))
    for k, (t, p) in enumerate(zip(dirs.theta, dirs.phi)):
        it, ip = grid.nearest_index(t, p)
        theta[k] = grid.theta_axis[it]
        phi[k] = grid.phi_axis[ip]
    return DirectionSet(theta, phi, dirs.weights.copy())


def generate_ula_efield(spec: SyntheticUlaSpec, array_id: str = "ula") -> tuple[EFieldGrid, DirectionSet]:
    """Synthesize the E-field grid of an ideal uniform linear array.

    The sweep runs over 2a+1 directions with cos(theta) uniform on
    [-1, 1] (all at phi = 0), which makes the uniform-weight average the
    exact sphere measure for this axially symmetric model.  Element l
    (0-based) responds with sqrt(p(theta)) * exp(j*2*pi*(d/lambda)*
    cos(theta)*l) in the theta polarization and zero in phi.  Stored
    fields carry the sqrt(eta0 / 2 pi) factor so the standard gain
    formula returns |w^H e|^2 of the model directly.

    Returns the grid together with its natural direction set (uniform
    weights 1/(2a+1)).
    """
    a = spec.effective_sampling_factor
    L = spec.num_elements
    x = (a - np.arange(2 * a + 1)) / a  # descending 1 .. -1 => ascending theta
    theta = np.degrees(np.arccos(np.clip(x, -1.0, 1.0)))
    p = np.sin(np.arccos(np.clip(x, -1.0, 1.0))) ** spec.element_pattern_q if spec.element_pattern_q else np.ones_like(x)
    ell = np.arange(L)
    phase = 2.0 * math.pi * spec.spacing_over_lambda * x[None, :] * ell[:, None]
    scale = math.sqrt(1.0 / GAIN_FACTOR)
    e_theta = (scale * np.sqrt(p))[None, :] * np.exp(1j * phase)
    grid = EFieldGrid(
        array_id=array_id,
        theta_axis=theta,
        phi_axis=np.array([0.0]),
        e_theta=e_theta[:, :, None],
        e_phi=np.zeros((L, theta.size, 1), dtype=complex),
    )
    dirs = DirectionSet(theta, np.zeros_like(theta), np.full(theta.size, 1.0 / theta.size))
    return grid, dirs


def oriented_ula_efield(
    spec: SyntheticUlaSpec,
    axis: Sequence[float],
    theta_axis: np.ndarray,
    phi_axis: np.ndarray,
    array_id: str,
) -> EFieldGrid:
    """Synthetic linear array with an arbitrary axis on a full (theta, phi) mesh.

    The progressive phase and element pattern are evaluated against the
    angle between the look direction and the array axis; used to stand in
    for multi-array terminals where each panel points a different way.
    """
    ax = np.asarray(axis, dtype=float)
    ax = ax / np.linalg.norm(ax)
    theta_axis = np.asarray(theta_axis, dtype=float)
    phi_axis = np.asarray(phi_axis, dtype=float)
    tt, pp = np.meshgrid(np.radians(theta_axis), np.radians(phi_axis), indexing="ij")
    n_hat = np.stack(
        [np.sin(tt) * np.cos(pp), np.sin(tt) * np.sin(pp), np.cos(tt)], axis=-1
    )
    cos_psi = np.clip(n_hat @ ax, -1.0, 1.0)
    sin_psi = np.sqrt(np.clip(1.0 - cos_psi**2, 0.0, None))
    p = sin_psi**spec.element_pattern_q if spec.element_pattern_q else np.ones_like(cos_psi)
    ell = np.arange(spec.num_elements)
    phase = 2.0 * math.pi * spec.spacing_over_lambda * cos_psi[None, :, :] * ell[:, None, None]
    scale = math.sqrt(1.0 / GAIN_FACTOR)
    e_theta = (scale * np.sqrt(p))[None, :, :] * np.exp(1j * phase)
    return EFieldGrid(
        array_id=array_id,
        theta_axis=theta_axis,
        phi_axis=phi_axis,
        e_theta=e_theta,
        e_phi=np.zeros_like(e_theta),
    )


def _format_float(x: float) -> str:
    return repr(float(x))


def save_efield(grid: EFieldGrid, path) -> None:
    """Write a grid to CSV (one row per element and mesh node, LF endings).

    Values are written with full round-trip precision; ``load_efield`` of
    the result reproduces the grid bit for bit.
    """
    lines = [GRID_CSV_HEADER]
    for l in range(grid.num_elements):
        for it, t in enumerate(grid.theta_axis):
            for ip, p in enumerate(grid.phi_axis):
                et = grid.e_theta[l, it, ip]
                ep = grid.e_phi[l, it, ip]
                lines.append(
                    ",".join(
                        [
                            str(l),
                            _format_float(t),
                            _format_float(p),
                            _format_float(et.real),
                            _format_float(et.imag),
                            _format_float(ep.real),
                            _format_float(ep.imag),
                        ]
                    )
                )
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8", newline="\n")


def load_efield(path, array_id: str | None = None) -> EFieldGrid:
    """Read a grid CSV; raises GridFormatError naming the offending line.

    The file must contain the full Cartesian product of elements and mesh
    nodes; missing or duplicate cells and non-finite samples are rejected.
    """
    path = Path(path)
    text = path.read_text(encoding="utf-8")
    lines = text.splitlines()
    if not lines or lines[0].strip() != GRID_CSV_HEADER:
        raise GridFormatError(f"{path}:1: bad header; expected '{GRID_CSV_HEADER}'")
    samples: dict[tuple[int, float, float], tuple[complex, complex]] = {}
    elems: set[int] = set()
    thetas: set[float] = set()
    phis: set[float] = set()
    for lineno, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        parts = line.split(",")
        if len(parts) != 7:
            raise GridFormatError(f"{path}:{lineno}: malformed row; expected 7 fields, got {len(parts)}")
        try:
            elem = int(parts[0])
            values = [float(v) for v in parts[1:]]
        except ValueError as exc:
            raise GridFormatError(f"{path}:{lineno}: malformed row; {exc}") from None
        theta, phi = values[0], values[1]
        if not all(math.isfinite(v) for v in values):
            raise GridFormatError(f"{path}:{lineno}: non-finite sample")
        if elem < 0:
            raise GridFormatError(f"{path}:{lineno}: negative element index")
        key = (elem, theta, phi)
        if key in samples:
            raise GridFormatError(f"{path}:{lineno}: duplicate sample for elem={elem}, theta={theta}, phi={phi}")
        samples[key] = (complex(values[2], values[3]), complex(values[4], values[5]))
        elems.add(elem)
        thetas.add(theta)
        phis.add(phi)
    if not samples:
        raise GridFormatError(f"{path}: empty grid")
    L = max(elems) + 1
    if elems != set(range(L)):
        raise GridFormatError(f"{path}: incomplete grid; element indices must be contiguous from 0")
    theta_axis = np.array(sorted(thetas))
    phi_axis = np.array(sorted(phis))
    e_theta = np.empty((L, theta_axis.size, phi_axis.size), dtype=complex)
    e_phi = np.empty_like(e_theta)
    for l in range(L):
        for it, t in enumerate(theta_axis):
            for ip, p in enumerate(phi_axis):
                try:
                    et, ep = samples[(l, t, p)]
                except KeyError:
                    raise GridFormatError(
                        f"{path}: incomplete grid; missing sample for elem={l}, theta={t}, phi={p}"
                    ) from None
                e_theta[l, it, ip] = et
                e_phi[l, it, ip] = ep
    return EFieldGrid(
        array_id=array_id if array_id is not None else path.stem,
        theta_axis=theta_axis,
        phi_axis=phi_axis,
        e_theta=e_theta,
        e_phi=e_phi,
    )
