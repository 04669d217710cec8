"""Gain evaluation: beam patterns, composite coverage, CDF statistics, bounds.

The realized gain of a beam ``w`` at a direction is ``(2 pi / eta0) *
w^H M w`` with ``M`` the coherence matrix of the stored fields; a
codebook's composite pattern takes the per-direction maximum over all its
beams (and, for multi-array terminals, over all arrays, since only one
array is ever active).  The per-direction largest eigenvalue of ``M``
upper-bounds every codebook and serves as the coverage reference.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from .efield import GAIN_FACTOR, DirectionSet, EFieldGrid, snap_to_grid

DB_FLOOR = -200.0

PATTERN_CSV_HEADER = "theta_deg,phi_deg,weight,gain_db"


def db_from_linear(gain):
    """10*log10 with a -200 dB floor so zero gains stay finite."""
    gain = np.asarray(gain, dtype=float)
    floor = 10.0 ** (DB_FLOOR / 10.0)
    out = 10.0 * np.log10(np.maximum(gain, floor))
    return float(out) if out.ndim == 0 else out


def linear_from_db(gain_db):
    gain_db = np.asarray(gain_db, dtype=float)
    out = 10.0 ** (gain_db / 10.0)
    return float(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class GainPattern:
    """Gain in dB per direction of a weighted direction set."""

    directions: DirectionSet
    gains_db: np.ndarray
    label: str = ""

    def __post_init__(self):
        g = np.asarray(self.gains_db, dtype=float)
        if g.shape != (len(self.directions),):
            raise ValueError("gains must align with the direction set")
        if not np.all(np.isfinite(g)):
            raise ValueError("non-finite gain")
        g.setflags(write=False)
        object.__setattr__(self, "gains_db", g)

    @property
    def gains_linear(self) -> np.ndarray:
        return linear_from_db(self.gains_db)


@dataclass(frozen=True)
class CoverageStats:
    """Weighted distribution summary of a gain pattern.

    ``mean_db`` is the dB value of the linear-domain weighted mean.  The
    CDF is the right-continuous weighted empirical step function over
    linear gains, stored as sorted (gain_db, cumulative weight) pairs;
    percentile X is its left inverse (smallest gain with coverage >= X%).
    """

    mean_db: float
    percentiles: dict[float, float]
    cdf: np.ndarray

    @property
    def median_db(self) -> float:
        return self.percentiles[50.0]


def beam_gains_linear(grid: EFieldGrid, weights, dirs: DirectionSet) -> np.ndarray:
    """Linear gains of one beam at every direction of an on-mesh set."""
    if hasattr(weights, "weights"):
        weights = weights.weights
    et, ep = grid.fields_at(dirs)
    w = np.asarray(weights, dtype=complex)
    return GAIN_FACTOR * (np.abs(w.conj() @ et) ** 2 + np.abs(w.conj() @ ep) ** 2)


def beam_gain(grid: EFieldGrid, weights, direction) -> float:
    """Realized linear gain of one beam at one on-mesh direction."""
    w = weights.weights if hasattr(weights, "weights") else np.asarray(weights, dtype=complex)
    ds = DirectionSet(
        np.array([direction.theta]), np.array([direction.phi]), np.array([1.0])
    )
    return float(beam_gains_linear(grid, w, ds)[0])


def beam_pattern(grid: EFieldGrid, weights, dirs: DirectionSet, label: str = "") -> GainPattern:
    """Gain pattern of a single beam over a direction set (snapped to the mesh)."""
    w = weights.weights if hasattr(weights, "weights") else np.asarray(weights, dtype=complex)
    snapped = snap_to_grid(dirs, grid)
    return GainPattern(dirs, db_from_linear(beam_gains_linear(grid, w, snapped)), label)


def _as_grid_map(grids) -> Mapping[str, EFieldGrid]:
    if isinstance(grids, EFieldGrid):
        return {grids.array_id: grids}
    return grids


def composite_gains_linear(grids, codebook, dirs: DirectionSet) -> np.ndarray:
    """Per-direction max gain over all codebook entries, linear scale.

    Each entry is evaluated on its own array's grid; directions are
    snapped to each mesh involved.
    """
    grid_map = _as_grid_map(grids)
    if codebook.size == 0:
        raise ValueError("codebook is empty")
    best = np.zeros(len(dirs))
    snapped: dict[str, DirectionSet] = {}
    for entry in codebook.entries:
        grid = grid_map[entry.array_id]
        if entry.array_id not in snapped:
            snapped[entry.array_id] = snap_to_grid(dirs, grid)
        g = beam_gains_linear(grid, entry.weights.weights, snapped[entry.array_id])
        np.maximum(best, g, out=best)
    return best


def composite_pattern(grids, codebook, dirs: DirectionSet, label: str = "composite") -> GainPattern:
    """Composite (max-over-beams) radiation pattern of a codebook, in dB."""
    return GainPattern(dirs, db_from_linear(composite_gains_linear(grids, codebook, dirs)), label)


def upper_bound_gains_linear(grids, dirs: DirectionSet) -> np.ndarray:
    """Per-direction largest eigenvalue of the coherence matrix, max over arrays.

    Uses the closed-form top eigenvalue of the rank-<=2 matrix (via its
    2x2 polarization Gram matrix) rather than a dense eigensolve.
    """
    grid_map = _as_grid_map(grids)
    best = np.zeros(len(dirs))
    for grid in grid_map.values():
        et, ep = grid.fields_at(snap_to_grid(dirs, grid))
        ntt = np.sum(np.abs(et) ** 2, axis=0)
        npp = np.sum(np.abs(ep) ** 2, axis=0)
        cross = np.abs(np.sum(et.conj() * ep, axis=0)) ** 2
        half_tr = 0.5 * (ntt + npp)
        det = ntt * npp - cross
        lam = half_tr + np.sqrt(np.maximum(half_tr**2 - det, 0.0))
        np.maximum(best, GAIN_FACTOR * lam, out=best)
    return best


def upper_bound_pattern(grids, dirs: DirectionSet, label: str = "upper bound") -> GainPattern:
    return GainPattern(dirs, db_from_linear(upper_bound_gains_linear(grids, dirs)), label)


def gap_map(composite: GainPattern, bound: GainPattern) -> GainPattern:
    """Pointwise (bound - composite) in dB, clamped at zero.

    The clamp only absorbs floating-point dust: a composite genuinely
    above the bound is a bug elsewhere and is rejected.
    """
    a, b = composite.directions, bound.directions
    if len(a) != len(b) or np.max(np.abs(a.theta - b.theta)) > 1e-9 or np.max(np.abs(a.phi - b.phi)) > 1e-9:
        raise ValueError("patterns are defined on different direction sets")
    diff = bound.gains_db - composite.gains_db
    if np.min(diff) < -1e-6:
        raise ValueError("composite exceeds the upper bound; inconsistent inputs")
    return GainPattern(composite.directions, np.maximum(diff, 0.0), label="gap to upper bound")


def coverage_stats(pattern: GainPattern, percentiles: Sequence[float] = (50.0,)) -> CoverageStats:
    """Weighted mean, percentiles, and empirical CDF of a gain pattern."""
    w = pattern.directions.weights
    g = pattern.gains_linear
    order = np.argsort(g, kind="stable")
    g_sorted = g[order]
    cum = np.cumsum(w[order])
    cum /= cum[-1]
    mean_db = db_from_linear(float(np.dot(w, g)))
    pct: dict[float, float] = {}
    for x in percentiles:
        if not (0.0 < x < 100.0):
            raise ValueError("percentiles must lie in (0, 100)")
        k = int(np.searchsorted(cum, x / 100.0))
        pct[float(x)] = db_from_linear(g_sorted[min(k, g_sorted.size - 1)])
    cdf = np.column_stack([db_from_linear(g_sorted), cum])
    return CoverageStats(mean_db=mean_db, percentiles=pct, cdf=cdf)


def write_pattern_csv(pattern: GainPattern, path) -> None:
    lines = [PATTERN_CSV_HEADER]
    d = pattern.directions
    for t, p, w, g in zip(d.theta, d.phi, d.weights, pattern.gains_db):
        lines.append(f"{float(t)!r},{float(p)!r},{float(w)!r},{float(g)!r}")
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8", newline="\n")


def stats_to_dict(stats: CoverageStats) -> dict:
    return {
        "mean_db": stats.mean_db,
        "percentiles": {f"{x:g}": v for x, v in sorted(stats.percentiles.items())},
        "cdf": [[float(g), float(c)] for g, c in stats.cdf],
    }


def write_stats_json(stats: CoverageStats, path) -> None:
    Path(path).write_text(
        json.dumps(stats_to_dict(stats), indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )
