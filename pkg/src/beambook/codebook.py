"""Codebook synthesis: greedy selection, K-Means refinement, reference designs.

A codebook is an ordered set of beams, each bound to one antenna array of
the terminal.  Synthesis maximizes a spherical-coverage utility of the
composite (max-over-beams) pattern:

* :func:`greedy_codebook` grows the codebook one beam at a time from a
  candidate pool, picking whichever candidate improves the utility most;
* :func:`kmeans_codebook` alternates assigning directions to their best
  beam and re-optimizing each beam for its assigned cluster;
* :func:`benchmark_codebook` and :func:`codebook_802_15_3c` build the
  closed-form progressive-phase references used for comparison.

All synthesis is deterministic given the configuration seed.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence, Union

import numpy as np

from .beamopt import BeamWeights, PhaseSpec, design_beam, quantize_phase
from .efield import (
    CoverageRegion,
    Direction,
    DirectionSet,
    SyntheticUlaSpec,
    fibonacci_directions,
    snap_to_grid,
)
from .metrics import GAIN_FACTOR, _as_grid_map, beam_gains_linear, db_from_linear

_TWO_PI = 2.0 * math.pi


@dataclass(frozen=True)
class CodebookEntry:
    array_id: str
    weights: BeamWeights


@dataclass(frozen=True)
class Codebook:
    """Ordered beams, each tagged with the array it drives."""

    entries: tuple[CodebookEntry, ...]

    def __post_init__(self):
        object.__setattr__(self, "entries", tuple(self.entries))

    @property
    def size(self) -> int:
        return len(self.entries)

    @property
    def phase_bits(self) -> int | None:
        specs = {e.weights.phase_spec for e in self.entries}
        if len(specs) != 1:
            raise ValueError("codebook mixes phase constraints")
        spec = next(iter(specs))
        return spec.bits


def codebook_to_dict(codebook: Codebook) -> dict:
    return {
        "phase_bits": codebook.phase_bits,
        "entries": [
            {
                "array": e.array_id,
                "weights": [[float(w.real), float(w.imag)] for w in e.weights.weights],
            }
            for e in codebook.entries
        ],
    }


def codebook_from_dict(data: dict) -> Codebook:
    bits = data["phase_bits"]
    spec = PhaseSpec.continuous() if bits is None else PhaseSpec.discrete(int(bits))
    entries = []
    for e in data["entries"]:
        w = np.array([complex(re, im) for re, im in e["weights"]])
        entries.append(CodebookEntry(str(e["array"]), BeamWeights(w, spec)))
    return Codebook(tuple(entries))


def save_codebook(codebook: Codebook, path) -> None:
    Path(path).write_text(
        json.dumps(codebook_to_dict(codebook), indent=2, sort_keys=True) + "\n",
        encoding="utf-8",
    )


def load_codebook(path) -> Codebook:
    return codebook_from_dict(json.loads(Path(path).read_text(encoding="utf-8")))


def codebook_summary(codebook: Codebook, grids, dirs: DirectionSet) -> str:
    """One line per beam: serving array, aim (argmax-gain direction), peak gain."""
    grid_map = _as_grid_map(grids)
    lines = []
    snapped: dict[str, DirectionSet] = {}
    for k, entry in enumerate(codebook.entries):
        grid = grid_map[entry.array_id]
        if entry.array_id not in snapped:
            snapped[entry.array_id] = snap_to_grid(dirs, grid)
        ds = snapped[entry.array_id]
        g = beam_gains_linear(grid, entry.weights.weights, ds)
        i = int(np.argmax(g))
        lines.append(
            f"beam {k}: array={entry.array_id} aim=(theta={ds.theta[i]:.1f}, phi={ds.phi[i]:.1f}) "
            f"peak={db_from_linear(float(g[i])):.2f} dB"
        )
    return "\n".join(lines)


# ---------------------------------------------------------------------------
# Selection criteria and stopping rules
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class MeanGainCriterion:
    """Mean composite gain (linear average, reported in dB) over a region."""

    region: CoverageRegion | None = None

    def _weights(self, dirs: DirectionSet) -> np.ndarray:
        if self.region is None:
            return dirs.weights
        mask = self.region.contains(dirs.theta, dirs.phi)
        total = float(dirs.weights[mask].sum())
        if total <= 0.0:
            raise ValueError("region contains no sample directions")
        return np.where(mask, dirs.weights, 0.0) / total

    def value(self, gains_linear: np.ndarray, dirs: DirectionSet) -> float:
        return db_from_linear(float(np.dot(self._weights(dirs), gains_linear)))


@dataclass(frozen=True)
class PercentileMixCriterion:
    """Weighted average of gain percentiles (dB), e.g. [(50, 1.0)] for the median."""

    points: tuple[tuple[float, float], ...]

    def __post_init__(self):
        pts = tuple((float(x), float(b)) for x, b in self.points)
        if not pts:
            raise ValueError("at least one percentile point required")
        if any(not (0.0 < x < 100.0) for x, _ in pts):
            raise ValueError("percentiles must lie in (0, 100)")
        if any(b < 0.0 for _, b in pts) or all(b == 0.0 for _, b in pts):
            raise ValueError("percentile weights must be nonnegative and not all zero")
        object.__setattr__(self, "points", pts)

    def value(self, gains_linear: np.ndarray, dirs: DirectionSet) -> float:
        order = np.argsort(gains_linear, kind="stable")
        cum = np.cumsum(dirs.weights[order])
        cum /= cum[-1]
        g_sorted = gains_linear[order]
        total = 0.0
        wsum = 0.0
        for x, beta in self.points:
            k = min(int(np.searchsorted(cum, x / 100.0)), g_sorted.size - 1)
            total += beta * db_from_linear(float(g_sorted[k]))
            wsum += beta
        return total / wsum


SelectionCriterion = Union[MeanGainCriterion, PercentileMixCriterion]


@dataclass(frozen=True)
class SizeLimit:
    limit: int

    def __post_init__(self):
        if self.limit < 1:
            raise ValueError("size limit must be >= 1")

    def triggered(self, size: int, gains_linear: np.ndarray, dirs: DirectionSet) -> bool:
        return size >= self.limit


@dataclass(frozen=True)
class MeanThreshold:
    """Stop once the mean gain over the region exceeds the threshold (dB)."""

    threshold_db: float
    region: CoverageRegion | None = None

    def triggered(self, size: int, gains_linear: np.ndarray, dirs: DirectionSet) -> bool:
        if size == 0:
            return False
        return MeanGainCriterion(self.region).value(gains_linear, dirs) > self.threshold_db


@dataclass(frozen=True)
class PercentileThreshold:
    """Stop once the gain at the given percentile exceeds the threshold (dB)."""

    percentile: float
    threshold_db: float

    def triggered(self, size: int, gains_linear: np.ndarray, dirs: DirectionSet) -> bool:
        if size == 0:
            return False
        value = PercentileMixCriterion(((self.percentile, 1.0),)).value(gains_linear, dirs)
        return value > self.threshold_db


StoppingRule = Union[SizeLimit, MeanThreshold, PercentileThreshold]


# ---------------------------------------------------------------------------
# Candidate generation
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Candidate:
    array_id: str
    weights: BeamWeights
    aim: Direction


@dataclass(frozen=True)
class CandidateSet:
    candidates: tuple[Candidate, ...]
    method: str

    def __post_init__(self):
        object.__setattr__(self, "candidates", tuple(self.candidates))

    def __len__(self) -> int:
        return len(self.candidates)


def _child_seed(*key: int) -> int:
    # Stable per-task seed derivation; keeps parallelizable subtasks
    # decoupled from call order.
    return int(np.random.SeedSequence(list(key)).generate_state(1)[0])


def _coherence_from_fields(et: np.ndarray, ep: np.ndarray) -> np.ndarray:
    return np.outer(et, et.conj()) + np.outer(ep, ep.conj())


def generate_candidates(
    grids,
    count_per_sphere: int,
    method: str,
    phase_spec: PhaseSpec,
    seed: int = 0,
    n_rand: int = 1000,
) -> CandidateSet:
    """Candidate beams aimed at a quasi-uniform set of on-mesh directions.

    For every array, ``count_per_sphere`` Fibonacci directions are snapped
    to that array's mesh and one beam is designed per direction: the
    quantized dominant eigenvector (``method='eigen'``) or the full
    relax-randomize-polish pipeline (``method='iterative'``).
    """
    if count_per_sphere < 1:
        raise ValueError("count_per_sphere must be >= 1")
    if method not in ("eigen", "iterative"):
        raise ValueError("method must be 'eigen' or 'iterative'")
    grid_map = _as_grid_map(grids)
    fib = fibonacci_directions(count_per_sphere)
    out: list[Candidate] = []
    for a_index, (array_id, grid) in enumerate(grid_map.items()):
        snapped = snap_to_grid(fib, grid)
        et_all, ep_all = grid.fields_at(snapped)
        for i in range(len(snapped)):
            M = _coherence_from_fields(et_all[:, i], ep_all[:, i])
            if method == "eigen":
                beam = design_beam(M, phase_spec, "eigen")
            else:
                beam = design_beam(
                    M, phase_spec, "sdr_grp_cd", seed=_child_seed(seed, a_index, i), n_rand=n_rand
                )
            out.append(Candidate(array_id, beam, Direction(float(snapped.theta[i]), float(snapped.phi[i]))))
    return CandidateSet(tuple(out), method)


# ---------------------------------------------------------------------------
# Greedy synthesis
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class GreedyResult:
    codebook: Codebook
    utilities_db: np.ndarray
    pool_exhausted: bool
    stop_reason: str


def _candidate_gain_matrix(candidates: CandidateSet, grids, eval_set: DirectionSet) -> np.ndarray:
    """Linear gains of every candidate at every evaluation direction."""
    grid_map = _as_grid_map(grids)
    G = np.empty((len(candidates), len(eval_set)))
    by_array: dict[str, list[int]] = {}
    for idx, cand in enumerate(candidates.candidates):
        by_array.setdefault(cand.array_id, []).append(idx)
    for array_id, idxs in by_array.items():
        grid = grid_map[array_id]
        et, ep = grid.fields_at(snap_to_grid(eval_set, grid))
        W = np.stack([candidates.candidates[i].weights.weights for i in idxs])  # (n, L)
        G[idxs, :] = GAIN_FACTOR * (np.abs(W.conj() @ et) ** 2 + np.abs(W.conj() @ ep) ** 2)
    return G


def greedy_codebook(
    candidates: CandidateSet,
    grids,
    criterion: SelectionCriterion,
    stop: StoppingRule,
    eval_set: DirectionSet,
) -> GreedyResult:
    """Grow a codebook by repeatedly adding the utility-maximizing candidate.

    The composite gain is maintained incrementally, so each round costs one
    pass over the remaining pool.  Ties resolve to the lowest candidate
    index and selected candidates leave the pool.  If the pool empties
    before the stopping rule fires, the best-so-far codebook is returned
    with ``pool_exhausted`` set.
    """
    if len(candidates) == 0:
        raise ValueError("candidate set is empty")
    G = _candidate_gain_matrix(candidates, grids, eval_set)
    pool = list(range(len(candidates)))
    best = np.zeros(len(eval_set))
    selected: list[int] = []
    utilities: list[float] = []
    stop_reason = ""
    mean_weights = criterion._weights(eval_set) if isinstance(criterion, MeanGainCriterion) else None

    while True:
        if stop.triggered(len(selected), best, eval_set):
            stop_reason = "stopping rule satisfied"
            break
        if not pool:
            stop_reason = "pool exhausted"
            break
        if mean_weights is not None:
            means = np.maximum(best[None, :], G[pool, :]) @ mean_weights
            pick = int(np.argmax(means))
        else:
            values = [criterion.value(np.maximum(best, G[c]), eval_set) for c in pool]
            pick = int(np.argmax(values))
        chosen = pool.pop(pick)
        selected.append(chosen)
        np.maximum(best, G[chosen], out=best)
        utilities.append(criterion.value(best, eval_set))

    entries = tuple(
        CodebookEntry(candidates.candidates[i].array_id, candidates.candidates[i].weights) for i in selected
    )
    return GreedyResult(
        codebook=Codebook(entries),
        utilities_db=np.array(utilities),
        pool_exhausted=stop_reason == "pool exhausted",
        stop_reason=stop_reason,
    )


# ---------------------------------------------------------------------------
# K-Means synthesis
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class GreedyInitSpec:
    """Initialize K-Means from a greedy run over a fresh candidate pool."""

    candidate_count: int
    method: str = "eigen"


@dataclass(frozen=True)
class KMeansConfig:
    num_beams: int
    direction_set: DirectionSet
    phase_spec: PhaseSpec
    init: Union[str, GreedyInitSpec, Codebook] = "uniform"
    n_rand: int = 1000
    max_iterations: int = 50
    seed: int = 0

    def __post_init__(self):
        if self.num_beams < 1:
            raise ValueError("num_beams must be >= 1")
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be >= 1")
        if isinstance(self.init, str) and self.init != "uniform":
            raise ValueError("string init must be 'uniform'")


@dataclass(frozen=True)
class KMeansResult:
    codebook: Codebook
    mean_gain_trace_db: np.ndarray
    iterations: int
    stop_reason: str
    assignments: np.ndarray


def uniform_init(num_beams: int, grids, phase_spec: PhaseSpec) -> Codebook:
    """Beams aimed at uniformly spread directions, each on its best array.

    For every Fibonacci direction the array with the largest per-direction
    eigenvalue bound wins the beam, which is then the quantized dominant
    eigenvector there.
    """
    if num_beams < 1:
        raise ValueError("num_beams must be >= 1")
    grid_map = _as_grid_map(grids)
    fib = fibonacci_directions(num_beams)
    per_array = []
    for array_id, grid in grid_map.items():
        snapped = snap_to_grid(fib, grid)
        et, ep = grid.fields_at(snapped)
        per_array.append((array_id, et, ep))
    entries = []
    for i in range(num_beams):
        best_lam, best = -1.0, None
        for array_id, et, ep in per_array:
            M = _coherence_from_fields(et[:, i], ep[:, i])
            lam = float(np.linalg.eigvalsh(M)[-1])
            if lam > best_lam:
                best_lam, best = lam, (array_id, M)
        array_id, M = best
        entries.append(CodebookEntry(array_id, design_beam(M, phase_spec, "eigen")))
    return Codebook(tuple(entries))


def kmeans_codebook(config: KMeansConfig, grids) -> KMeansResult:
    """Alternate direction-to-beam assignment and per-cluster beam updates.

    Each direction joins the beam serving it best (ties to the lowest beam
    index); each beam is then re-designed for the weighted field sum of
    its cluster on its own array, and the new beam is kept only if it does
    not lower the cluster objective.  With that guard the weighted mean
    composite gain never decreases, so the loop terminates: it stops when
    assignments repeat, the mean gain improves by less than 1e-9 dB, or
    ``max_iterations`` is hit.  Beams stay bound to the array they were
    initialized on; an empty cluster leaves its beam untouched.
    """
    grid_map = _as_grid_map(grids)
    dirs = config.direction_set
    K = config.num_beams
    if K > len(dirs):
        raise ValueError("num_beams exceeds the number of directions")

    if isinstance(config.init, Codebook):
        codebook = config.init
        if codebook.size != K:
            raise ValueError("initial codebook size does not match num_beams")
    elif isinstance(config.init, GreedyInitSpec):
        cands = generate_candidates(
            grid_map, config.init.candidate_count, config.init.method, config.phase_spec,
            seed=_child_seed(config.seed, 0xC0DE), n_rand=config.n_rand,
        )
        codebook = greedy_codebook(
            cands, grid_map, MeanGainCriterion(), SizeLimit(K), dirs
        ).codebook
        if codebook.size != K:
            raise ValueError(
                f"greedy init produced {codebook.size} beams; the candidate pool must hold at least {K}"
            )
    else:
        codebook = uniform_init(K, grid_map, config.phase_spec)

    fields = {
        array_id: grid.fields_at(snap_to_grid(dirs, grid)) for array_id, grid in grid_map.items()
    }
    beams = [(e.array_id, np.array(e.weights.weights)) for e in codebook.entries]

    def beam_gains(array_id: str, w: np.ndarray) -> np.ndarray:
        et, ep = fields[array_id]
        return GAIN_FACTOR * (np.abs(w.conj() @ et) ** 2 + np.abs(w.conj() @ ep) ** 2)

    gains = np.stack([beam_gains(a, w) for a, w in beams])  # (K, N)
    mean_db = db_from_linear(float(np.dot(dirs.weights, gains.max(axis=0))))
    trace = [mean_db]
    assignments = np.full(len(dirs), -1)
    stop_reason = "max iterations"
    iterations = 0

    for iteration in range(config.max_iterations):
        new_assignments = np.argmax(gains, axis=0)  # ties -> lowest beam index
        if np.array_equal(new_assignments, assignments):
            stop_reason = "assignments unchanged"
            break
        assignments = new_assignments
        iterations += 1

        for k, (array_id, w) in enumerate(beams):
            members = np.flatnonzero(assignments == k)
            if members.size == 0:
                continue
            et, ep = fields[array_id]
            sq = np.sqrt(dirs.weights[members])
            etk = et[:, members] * sq
            epk = ep[:, members] * sq
            Mk = etk @ etk.conj().T + epk @ epk.conj().T
            new_beam = design_beam(
                Mk,
                config.phase_spec,
                "sdr_grp_cd",
                seed=_child_seed(config.seed, iteration, k),
                n_rand=config.n_rand,
            )
            old_obj = float(np.real(w.conj() @ Mk @ w))
            new_obj = new_beam.gain(Mk)
            if new_obj >= old_obj:  # keep monotone under the approximate solver
                beams[k] = (array_id, np.array(new_beam.weights))
                gains[k] = beam_gains(array_id, beams[k][1])

        new_mean_db = db_from_linear(float(np.dot(dirs.weights, gains.max(axis=0))))
        trace.append(new_mean_db)
        if new_mean_db - mean_db < 1e-9:
            mean_db = new_mean_db
            stop_reason = "mean gain converged"
            break
        mean_db = new_mean_db

    entries = tuple(
        CodebookEntry(array_id, BeamWeights(w, config.phase_spec)) for array_id, w in beams
    )
    return KMeansResult(
        codebook=Codebook(entries),
        mean_gain_trace_db=np.array(trace),
        iterations=iterations,
        stop_reason=stop_reason,
        assignments=assignments,
    )


# ---------------------------------------------------------------------------
# Reference codebooks
# ---------------------------------------------------------------------------


def benchmark_codebook(
    ula: SyntheticUlaSpec,
    size: int,
    phase_spec: PhaseSpec,
    array_ids: Sequence[str] = ("ula",),
) -> Codebook:
    """Progressive-phase beams aimed uniformly in cos(theta).

    Beam k of K' points at arccos(-1 + (2k-1)/K'); element l (0-based)
    gets the quantized progressive phase 2*pi*(d/lambda)*l*cos(aim).  For
    multi-array terminals the same per-array codebook is replicated on
    every array.
    """
    if size < 1:
        raise ValueError("size must be >= 1")
    L = ula.num_elements
    ks = np.arange(1, size + 1)
    x = -1.0 + (2.0 * ks - 1.0) / size
    ell = np.arange(L)
    phases = np.mod(_TWO_PI * ula.spacing_over_lambda * ell[None, :] * x[:, None], _TWO_PI)
    if phase_spec.is_discrete:
        phases = quantize_phase(phases, phase_spec.bits)
    entries = []
    for array_id in array_ids:
        for k in range(size):
            entries.append(CodebookEntry(array_id, BeamWeights.from_phases(phases[k], phase_spec)))
    return Codebook(tuple(entries))


def benchmark_aim_degrees(size: int) -> np.ndarray:
    """Aim angles (degrees from the array axis) of the benchmark codebook."""
    ks = np.arange(1, size + 1)
    return np.degrees(np.arccos(-1.0 + (2.0 * ks - 1.0) / size))


def codebook_802_15_3c(
    num_elements: int,
    size: int,
    bits: int,
    array_ids: Sequence[str] = ("ula",),
) -> Codebook:
    """Closed-form sector codebook generalized to 2^b phase states.

    Beam k (1-based) gives element l (1-based) the phase
    (2*pi/2^b) * floor((l-1) * mod(k-1 + K'/2, K') / (K'/2^b)); phases
    always land on the 2^b lattice.  When K' divides 2^b the floor is
    exact, so finer shifters reproduce the codebook built at
    b = log2(K') (the classic 2-bit construction for K' = 4).
    """
    if size < 1:
        raise ValueError("size must be >= 1")
    if num_elements < 1:
        raise ValueError("num_elements must be >= 1")
    spec = PhaseSpec.discrete(bits)
    n_states = 1 << bits
    ell = np.arange(1, num_elements + 1)
    entries = []
    phases_all = []
    for k in range(1, size + 1):
        m = math.fmod(k - 1 + size / 2.0, size)
        phases = (_TWO_PI / n_states) * np.floor((ell - 1) * m / (size / n_states))
        phases_all.append(np.mod(phases, _TWO_PI))
    for array_id in array_ids:
        for phases in phases_all:
            entries.append(CodebookEntry(array_id, BeamWeights.from_phases(phases, spec)))
    return Codebook(tuple(entries))


def restrict_region(dirs: DirectionSet, region: CoverageRegion) -> DirectionSet:
    """Drop directions outside the region and renormalize the weights."""
    mask = region.contains(dirs.theta, dirs.phi)
    if not np.any(mask):
        raise ValueError("region contains no sample directions")
    if np.all(mask):
        return dirs
    w = dirs.weights[mask]
    return DirectionSet(dirs.theta[mask], dirs.phi[mask], w / w.sum())
