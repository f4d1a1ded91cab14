"""Disorder ensembles: static diagonal / off-diagonal disorder, dynamic
diagonal disorder, generic seeded ensemble averaging, and participation
ratios.

Static disorder perturbs H = H0 + D where D is nonzero only on the sparsity
pattern of H0.  Draws are standard normal scaled by the strength Delta; the
diagonal action carries a factor 2 (H|j> picks up 2 D_jj |j> - D_{j,j-1}
|j-1> - ...).  "DD" perturbs the diagonal only (N draws); "DOD" also
perturbs every bond (N + bond-count draws, 2N on a ring).

All randomness flows through numpy's PCG64 bit generator; ensemble
realizations use seeds derived from a master seed via
``np.random.SeedSequence([master, r])`` so results are bit-reproducible and
independent of evaluation order.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .dynamics import ProbabilityField
from .graphs import CouplingMatrix
from .spectral import Spectrum, decompose_symmetric

__all__ = [
    "DisorderSpec",
    "EnsembleSpec",
    "sample_disorder",
    "ensemble_average",
    "participation_ratio",
    "dynamic_disorder_run",
]


@dataclass(frozen=True)
class DisorderSpec:
    """Static disorder model: normal draws scaled by strength."""

    strength: float  # Delta in [0, 1/2]
    kind: str = "DD"  # DD (diagonal) | DOD (diagonal + off-diagonal)

    def __post_init__(self):
        if self.strength < 0:
            raise ValueError("disorder strength must be >= 0")
        if self.kind not in ("DD", "DOD"):
            raise ValueError(f"unknown disorder kind {self.kind!r}")


@dataclass(frozen=True)
class EnsembleSpec:
    """R realizations driven by seeds derived from one master seed."""

    realizations: int
    master_seed: int

    def __post_init__(self):
        if self.realizations < 1:
            raise ValueError("need at least one realization")

    def derived_seeds(self) -> list:
        return [int(np.random.SeedSequence([self.master_seed, r]).generate_state(1)[0])
                for r in range(self.realizations)]


def _bonds_in_node_order(h0: np.ndarray) -> list:
    """Sub-diagonal nonzero positions (j, l), l < j, in row-major node order."""
    n = h0.shape[0]
    out = []
    for j in range(1, n):
        for l in range(j):
            if h0[j, l] != 0.0:
                out.append((j, l))
    return out


def sample_disorder(h0: CouplingMatrix, ds: DisorderSpec, seed: int) -> np.ndarray:
    """One disordered Hamiltonian H0 + D with the pattern of H0 preserved.

    Draw order is fixed: all N diagonal entries first (node order; the
    diagonal perturbation is 2*Delta*xi_j), then for DOD one draw per bond
    (sub-diagonal entries in node order; perturbation -Delta*xi on both
    symmetric positions).
    """
    h = h0.matrix.astype(float).copy()
    rng = np.random.Generator(np.random.PCG64(seed))
    delta = ds.strength
    xi = rng.standard_normal(h.shape[0])
    h[np.diag_indices_from(h)] += 2.0 * delta * xi
    if ds.kind == "DOD":
        for j, l in _bonds_in_node_order(h0.matrix):
            eta = rng.standard_normal()
            h[j, l] -= delta * eta
            h[l, j] -= delta * eta
    return h


def ensemble_average(task, es: EnsembleSpec, keep_realizations: bool = False):
    """Mean of task(seed, index) over derived seeds, in fixed order.

    ``task`` must be a pure function of its seed returning an ndarray (or
    scalar); failures are re-raised with the realization index attached.
    Returns the mean, or (mean, list of realizations) with
    keep_realizations=True.
    """
    seeds = es.derived_seeds()
    acc = None
    kept = [] if keep_realizations else None
    for r, seed in enumerate(seeds):
        try:
            val = np.asarray(task(seed, r), dtype=float)
        except Exception as exc:
            raise RuntimeError(f"ensemble task failed at realization {r}") from exc
        acc = val.copy() if acc is None else acc + val
        if keep_realizations:
            kept.append(val)
    mean = acc / es.realizations
    return (mean, kept) if keep_realizations else mean


def participation_ratio(s: Spectrum):
    """Average participation ratio (1/N) sum_{j,n} |<j|Phi_n>|^4.

    Returns (average, per-state values).  For nondegenerate spectra this
    equals the mean long-time average chi_bar; complex Bloch states are
    fully delocalized (every |<k|Phi_n>|^4 = 1/N^2, average 1/N), a fully
    localized basis gives 1.  The even-ring chi_bar baseline (2N-2)/N^2
    differs from 1/N because the ring spectrum is degenerate; use
    long_time_average for that case.
    """
    if s.eigenvectors is None:
        raise ValueError("needs eigenvectors")
    w4 = np.abs(s.eigenvectors) ** 4
    per_state = w4.sum(axis=0)
    return float(per_state.sum() / s.n), per_state


def dynamic_disorder_run(h0: CouplingMatrix, delta: float, resample_dt: float,
                         grid: np.ndarray, seed: int, start_node: int = 1):
    """Quantum propagation under rapidly redrawn diagonal disorder.

    The diagonal disorder is redrawn every ``resample_dt`` (piecewise
    constant Hamiltonian, each piece propagated spectrally), which drives
    the walk from ballistic toward diffusive spreading.  Returns a
    ProbabilityField of |psi_k(t)|^2 on ``grid``.
    """
    grid = np.asarray(grid, dtype=float)
    if resample_dt <= 0:
        raise ValueError("resample_dt must be positive")
    if grid[0] < 0 or np.any(np.diff(grid) <= 0):
        raise ValueError("grid must be increasing and nonnegative")
    rng = np.random.Generator(np.random.PCG64(seed))
    n = h0.n
    psi = np.zeros(n, dtype=complex)
    psi[start_node - 1] = 1.0
    base = h0.matrix.astype(float)
    out = np.empty((n, len(grid)))
    t = 0.0
    gi = 0
    while gi < len(grid):
        h = base.copy()
        h[np.diag_indices_from(h)] += 2.0 * delta * rng.standard_normal(n)
        lam, q = np.linalg.eigh(h)
        t_end = t + resample_dt
        # sample any grid times inside this piece, then advance to its end
        c = q.conj().T @ psi
        while gi < len(grid) and grid[gi] <= t_end + 1e-12:
            phase = np.exp(-1j * lam * (grid[gi] - t))
            out[:, gi] = np.abs(q @ (phase * c)) ** 2
            gi += 1
        psi = q @ (np.exp(-1j * lam * resample_dt) * c)
        drift = abs(np.linalg.norm(psi) - 1.0)
        if drift > 1e-6:
            raise RuntimeError("norm drift exceeds 1e-6; refine the step")
        psi /= np.linalg.norm(psi)
        t = t_end
    return ProbabilityField("quantum_pi", start_node, grid, out)
