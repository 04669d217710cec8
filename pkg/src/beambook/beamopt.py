"""Single-beam design under per-element power and phase constraints.

Given a Hermitian PSD coherence matrix ``M`` the goal is to maximize the
quadratic form ``w^H M w`` over unit-norm weight vectors whose entries all
have magnitude 1/sqrt(L) (analog phase shifters), optionally with phases
restricted to a b-bit lattice.  Three reference quantities bracket every
design:

* sum-power optimum: the largest eigenvalue of ``M``;
* per-element power optimum: upper-bounded by the semidefinite relaxation
  solved by :func:`solve_sdr`;
* discrete-phase optimum: the best b-bit beam (see ``oracle`` for the
  exhaustive version at small sizes).

The production pipeline is relax -> randomize -> polish: solve the SDR,
round candidates drawn from the solution covariance to feasible beams
(:func:`gaussian_randomization`), then run cyclic coordinate descent on
the phases (:func:`coordinate_descent`).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "PhaseSpec",
    "BeamWeights",
    "SdrSolution",
    "SdrConvergenceError",
    "CoordinateDescentResult",
    "quantize_phase",
    "max_eigenpair",
    "solve_sdr",
    "gaussian_randomization",
    "coordinate_descent",
    "design_beam",
]

_TWO_PI = 2.0 * math.pi


@dataclass(frozen=True)
class PhaseSpec:
    """Phase-shifter resolution: continuous, or discrete with b bits."""

    mode: str
    bits: int | None = None

    def __post_init__(self):
        if self.mode not in ("continuous", "discrete"):
            raise ValueError("mode must be 'continuous' or 'discrete'")
        if self.mode == "discrete":
            if self.bits is None or not (1 <= self.bits <= 16):
                raise ValueError("discrete phase bits must be in 1..16")
        elif self.bits is not None:
            raise ValueError("continuous mode takes no bit count")

    @classmethod
    def continuous(cls) -> "PhaseSpec":
        return cls("continuous")

    @classmethod
    def discrete(cls, bits: int) -> "PhaseSpec":
        return cls("discrete", bits)

    @property
    def is_discrete(self) -> bool:
        return self.mode == "discrete"


def quantize_phase(phase, bits: int):
    """Snap phases to the nearest point of the {k * 2pi/2^b} lattice.

    Distance is circular, ties resolve to the lower lattice value, and
    the result lies in [0, 2pi).  Idempotent on lattice points.
    """
    if bits < 1:
        raise ValueError("bits must be >= 1")
    step = _TWO_PI / (1 << bits)
    k = np.ceil(np.asarray(phase, dtype=float) / step - 0.5)  # round half down
    out = np.mod(k, 1 << bits) * step
    if np.isscalar(phase):
        return float(out)
    return out


@dataclass(frozen=True)
class BeamWeights:
    """Unit-norm analog beamforming weights with constraint metadata.

    Every entry has magnitude 1/sqrt(L); in discrete mode the phases sit
    on the 2pi/2^b lattice.  Violations raise at construction.
    """

    weights: np.ndarray
    phase_spec: PhaseSpec

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=complex)
        if w.ndim != 1 or w.size < 1:
            raise ValueError("weights must be a nonempty 1-D vector")
        L = w.size
        if abs(np.linalg.norm(w) ** 2 - 1.0) > 1e-10:
            raise ValueError("weights must have unit norm")
        if np.max(np.abs(np.abs(w) - 1.0 / math.sqrt(L))) > 1e-10:
            raise ValueError("per-element magnitude must be 1/sqrt(L)")
        if self.phase_spec.is_discrete:
            ph = np.mod(np.angle(w), _TWO_PI)
            snapped = quantize_phase(ph, self.phase_spec.bits)
            err = np.abs(np.exp(1j * ph) - np.exp(1j * snapped))
            if np.max(err) > 1e-9:
                raise ValueError("phases are off the discrete lattice")
        w.setflags(write=False)
        object.__setattr__(self, "weights", w)

    @property
    def num_elements(self) -> int:
        return self.weights.size

    def gain(self, M: np.ndarray) -> float:
        """Quadratic form w^H M w (real for Hermitian M)."""
        return float(np.real(self.weights.conj() @ M @ self.weights))

    @classmethod
    def from_phases(cls, phases: np.ndarray, phase_spec: PhaseSpec) -> "BeamWeights":
        phases = np.asarray(phases, dtype=float)
        if phase_spec.is_discrete:
            phases = quantize_phase(np.mod(phases, _TWO_PI), phase_spec.bits)
        w = np.exp(1j * phases) / math.sqrt(phases.size)
        return cls(w, phase_spec)


@dataclass(frozen=True)
class SdrSolution:
    """Solution of the diagonally constrained semidefinite relaxation."""

    W: np.ndarray
    objective: float
    iterations: int
    residual: float
    rank: int


class SdrConvergenceError(RuntimeError):
    """Relaxation solver hit its sweep cap; carries the best iterate."""

    def __init__(self, message: str, solution: SdrSolution):
        super().__init__(message)
        self.solution = solution


def _check_square_hermitian(M: np.ndarray) -> np.ndarray:
    M = np.asarray(M, dtype=complex)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise ValueError("M must be square")
    scale = max(float(np.max(np.abs(M))), 1.0)
    if np.max(np.abs(M - M.conj().T)) > 1e-12 * scale:
        raise ValueError("M must be Hermitian")
    return 0.5 * (M + M.conj().T)


def max_eigenpair(M: np.ndarray) -> tuple[float, np.ndarray]:
    """Largest eigenvalue and unit eigenvector of a Hermitian PSD matrix.

    The eigenvector's first entry of non-negligible magnitude is rotated
    to be real positive, which fixes the otherwise arbitrary global phase.
    """
    M = _check_square_hermitian(M)
    L = M.shape[0]
    if np.max(np.abs(M)) == 0.0:
        v = np.zeros(L, dtype=complex)
        v[0] = 1.0
        return 0.0, v
    vals, vecs = np.linalg.eigh(M)
    lam = float(vals[-1])
    v = vecs[:, -1]
    nz = np.flatnonzero(np.abs(v) > 1e-12 * np.max(np.abs(v)))
    v = v * np.exp(-1j * np.angle(v[nz[0]]))
    return lam, v


def _cophase(v: np.ndarray) -> np.ndarray:
    """Unimodular vector aligned with the phases of v (zero entries get phase 0)."""
    L = v.size
    phases = np.where(np.abs(v) > 0.0, np.angle(v), 0.0)
    return np.exp(1j * phases) / math.sqrt(L)


def _objective(M: np.ndarray, W: np.ndarray) -> float:
    return float(np.real(np.einsum("ij,ji->", M, W)))


def _numerical_rank(psd: np.ndarray, rel_tol: float = 1e-9) -> int:
    vals = np.linalg.eigvalsh(psd)
    top = max(float(vals[-1]), 0.0)
    if top == 0.0:
        return 0
    return int(np.sum(vals > rel_tol * top))


def solve_sdr(M: np.ndarray, tol: float = 1e-9, max_sweeps: int = 5000) -> SdrSolution:
    """Maximize tr(M W) over PSD W with every diagonal entry fixed to 1/L.

    Solved with a row-by-row block coordinate ascent: with all other rows
    fixed, the optimal off-diagonal row/column has a closed form through
    the Schur complement.  A logarithmic barrier on the complement keeps
    iterates strictly feasible and is driven to zero on a fixed schedule,
    after which plain ascent polishes the solution.  Designed for the
    small dense matrices of beam design (L <= 16 or so).

    Rank-one inputs short-circuit to the exact analytic optimum (the
    co-phased rank-one W).  Raises :class:`SdrConvergenceError` if the
    sweep budget is exhausted before the objective settles.
    """
    if tol <= 0.0:
        raise ValueError("tol must be positive")
    M = _check_square_hermitian(M)
    L = M.shape[0]
    trace = float(np.real(np.trace(M)))

    vals = np.linalg.eigvalsh(M)
    if vals[0] < -1e-10 * max(trace, 1.0):
        raise ValueError("M must be positive semidefinite")

    if trace <= 0.0:
        W = np.eye(L, dtype=complex) / L
        return SdrSolution(W, 0.0, 0, 0.0, L)

    if L == 1:
        W = np.ones((1, 1), dtype=complex)
        return SdrSolution(W, trace, 0, 0.0, 1)

    if vals[-2] <= 1e-12 * vals[-1]:
        # Rank-one M: the co-phased rank-one W attains the relaxation optimum
        # (Cauchy-Schwarz over the rows of any feasible factor).
        _, v = max_eigenpair(M)
        w = _cophase(v)
        W = np.outer(w, w.conj())
        return SdrSolution(W, _objective(M, W), 0, 0.0, 1)

    gamma = 1.0 / L
    W = np.eye(L, dtype=complex) / L
    obj = _objective(M, W)
    sweeps = 0
    improvement = math.inf
    # Barrier continuation: sigma is relative to trace(M) so the schedule is
    # scale free; the final zero stage is pure ascent.
    stage_tol = max(tol, 1e-14) * max(trace, 1.0) * 0.1
    for sigma_rel in (1e-2, 1e-3, 1e-4, 1e-5, 1e-6, 1e-8, 1e-10, 0.0):
        sigma = sigma_rel * trace
        while sweeps < max_sweeps:
            sweeps += 1
            for i in range(L):
                mask = np.arange(L) != i
                c = M[mask, i]
                B = W[np.ix_(mask, mask)]
                u = B @ c
                s = float(np.real(c.conj() @ u))
                if s <= 0.0:
                    y = np.zeros(L - 1, dtype=complex)
                else:
                    if sigma > 0.0:
                        t = (-sigma * gamma + math.sqrt((sigma * gamma) ** 2 + 4.0 * s * gamma)) / (2.0 * s)
                    else:
                        t = math.sqrt(gamma / s)
                    y = t * u
                W[mask, i] = y
                W[i, mask] = y.conj()
            new_obj = _objective(M, W)
            improvement = new_obj - obj
            obj = new_obj
            if improvement < stage_tol:
                break
        if sweeps >= max_sweeps:
            break

    rank = _numerical_rank(W)
    solution = SdrSolution(W, obj, sweeps, abs(improvement), rank)
    if sweeps >= max_sweeps and improvement >= 10.0 * stage_tol:
        raise SdrConvergenceError(
            f"relaxation did not settle within {max_sweeps} sweeps (last improvement {improvement:.3e})",
            solution,
        )
    return solution


def _complex_gaussian(rng: np.random.Generator, shape) -> np.ndarray:
    # Unit-variance circular complex normals: real and imaginary parts are
    # drawn as two consecutive standard_normal blocks at variance 1/2.
    re = rng.standard_normal(shape)
    im = rng.standard_normal(shape)
    return (re + 1j * im) * math.sqrt(0.5)


def gaussian_randomization(
    solution: SdrSolution | np.ndarray,
    M: np.ndarray,
    n_rand: int,
    phase_spec: PhaseSpec,
    seed: int,
) -> BeamWeights:
    """Round a relaxation solution to a feasible beam by randomized trials.

    Draws ``n_rand`` vectors from the zero-mean complex Gaussian with
    covariance W, projects each onto the feasible set (unit magnitudes,
    quantized phases in discrete mode), and keeps the best quadratic form.
    In continuous mode a numerically rank-one W needs no randomization:
    the co-phased dominant eigenvector is already optimal.  Deterministic
    for a given seed (NumPy PCG64 stream).
    """
    if n_rand < 1:
        raise ValueError("n_rand must be >= 1")
    W = solution.W if isinstance(solution, SdrSolution) else np.asarray(solution, dtype=complex)
    M = _check_square_hermitian(M)
    L = W.shape[0]
    vals, vecs = np.linalg.eigh(W)
    vals = np.clip(vals, 0.0, None)

    if not phase_spec.is_discrete and (L == 1 or vals[-2] <= 1e-9 * max(vals[-1], 1e-300)):
        return BeamWeights(_cophase(vecs[:, -1]), phase_spec)

    rng = np.random.default_rng(seed)
    xi = _complex_gaussian(rng, (n_rand, L))
    factor = vecs * np.sqrt(vals)[None, :]
    cands = factor @ xi.T  # (L, n_rand)
    phases = np.mod(np.angle(cands), _TWO_PI)
    if phase_spec.is_discrete:
        phases = quantize_phase(phases, phase_spec.bits)
    feas = np.exp(1j * phases) / math.sqrt(L)
    gains = np.real(np.einsum("ln,lk,kn->n", feas.conj(), M, feas))
    best = int(np.argmax(gains))
    return BeamWeights(feas[:, best], phase_spec)


@dataclass(frozen=True)
class CoordinateDescentResult:
    """Polished beam plus the per-sweep objective trace (first entry = input)."""

    weights: BeamWeights
    objectives: np.ndarray = field(repr=False)


def coordinate_descent(M: np.ndarray, init: BeamWeights, phase_spec: PhaseSpec) -> CoordinateDescentResult:
    """Cyclic phase updates; each step sets one phase to its conditional optimum.

    Element i is re-phased to align with the field contribution of the
    others, quantized in discrete mode; the objective is therefore
    nondecreasing step by step.  Stops when a full sweep improves the
    objective by less than 1e-12 * trace(M).  A vanishing off-diagonal
    contribution leaves that element untouched for the step.
    """
    M = _check_square_hermitian(M)
    L = M.shape[0]
    if init.num_elements != L:
        raise ValueError("init length does not match M")
    if phase_spec.is_discrete:
        # Re-validates the lattice precondition for the given resolution.
        BeamWeights(init.weights, phase_spec)
    w = np.array(init.weights, dtype=complex)
    trace = float(np.real(np.trace(M)))
    threshold = 1e-12 * max(trace, 1e-300)
    max_sweeps = 10 * L * (1 << phase_spec.bits) if phase_spec.is_discrete else 1000

    obj = float(np.real(w.conj() @ M @ w))
    objectives = [obj]
    for _ in range(max_sweeps):
        for i in range(L):
            c = M[i, :] @ w - M[i, i] * w[i]
            if np.abs(c) == 0.0:
                continue
            phase = np.angle(c) % _TWO_PI
            if phase_spec.is_discrete:
                phase = quantize_phase(phase, phase_spec.bits)
            w[i] = np.exp(1j * phase) / math.sqrt(L)
        new_obj = float(np.real(w.conj() @ M @ w))
        objectives.append(new_obj)
        if new_obj - obj < threshold:
            break
        obj = new_obj
    return CoordinateDescentResult(BeamWeights(w, phase_spec), np.array(objectives))


def _canonical_global_phase(w: np.ndarray) -> np.ndarray:
    # A beam is physically invariant to a global phase; pin element 0 to
    # phase zero so identical designs compare equal.  In discrete mode the
    # rotation is by a lattice phase, so lattice membership is preserved.
    return w * np.exp(-1j * np.angle(w[0]))


def design_beam(
    M: np.ndarray,
    phase_spec: PhaseSpec,
    strategy: str = "sdr_grp_cd",
    seed: int = 0,
    n_rand: int = 1000,
    sdr_tol: float = 1e-9,
) -> BeamWeights:
    """Design one beam for a coherence matrix under the given phase constraint.

    Strategies:

    * ``eigen``: magnitude-normalize (and quantize) the dominant
      eigenvector; cheapest, no randomness.
    * ``sdr_grp``: semidefinite relaxation followed by Gaussian
      randomization.
    * ``sdr_grp_cd``: additionally polish with coordinate descent.

    The result is deterministic in (M, phase_spec, strategy, seed) and is
    normalized to a zero phase on element 0.
    """
    if strategy not in ("eigen", "sdr_grp", "sdr_grp_cd"):
        raise ValueError(f"unknown strategy '{strategy}'")
    if strategy == "eigen":
        _, v = max_eigenpair(M)
        beam = BeamWeights.from_phases(np.where(np.abs(v) > 0.0, np.angle(v), 0.0), phase_spec)
    else:
        solution = solve_sdr(M, tol=sdr_tol)
        beam = gaussian_randomization(solution, M, n_rand, phase_spec, seed)
        if strategy == "sdr_grp_cd":
            beam = coordinate_descent(M, beam, phase_spec).weights
    return BeamWeights(_canonical_global_phase(beam.weights), phase_spec)
