"""Trapping: non-Hermitian Hamiltonians, survival probabilities, perturbative
gamma spectra, dark states, scaling fits, and random one-trap ensembles.

Traps are nodes with an added imaginary potential: H = H0 - i*Gammabar with
Gammabar = Gamma * sum_{m in M} |m><m|.  The imaginary parts gamma_l of the
eigenvalues E_l = eps_l - i*gamma_l control the decay of the mean survival
probability; eigenstates with gamma_l = 0 (dark states) produce plateaus.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import curve_fit

from . import graphs
from .dynamics import FitResult
from .graphs import CouplingMatrix
from .spectral import (BiorthSpectrum, DefectiveSpectrumError, Spectrum,
                       decompose_biorthogonal, decompose_symmetric,
                       degeneracy_classes)

__all__ = [
    "TrapSpec",
    "SurvivalSeries",
    "GammaSpectrum",
    "trap_hamiltonian",
    "classical_trap_matrix",
    "survival",
    "perturbative_gammas",
    "line_gammas_closed",
    "sequential_ring_gammas_closed",
    "dark_state_count",
    "gamma_scaling_fit",
    "collapse_rescale_times",
    "random_trap_ensemble",
    "vicsek_trap_survival",
    "vicsek_plateau",
]


@dataclass(frozen=True)
class TrapSpec:
    """Trap node set (1-based), strength, and per-realization scaling rule."""

    nodes: tuple
    gamma: float
    scaling: str = "fixed"  # fixed | proportional-to-diagonal

    def __post_init__(self):
        if not self.nodes:
            raise ValueError("trap set must be nonempty")
        if not np.isfinite(self.gamma):
            raise ValueError("trap strength must be finite")
        if self.scaling not in ("fixed", "proportional-to-diagonal"):
            raise ValueError(f"unknown scaling rule {self.scaling!r}")


@dataclass(frozen=True)
class SurvivalSeries:
    times: np.ndarray
    values: np.ndarray
    mode: str  # exact | spectral_approx | classical


@dataclass(frozen=True)
class GammaSpectrum:
    """Imaginary parts gamma_l, ascending, with provenance."""

    gammas: np.ndarray
    provenance: str  # exact_biorth | perturbative | closed_form
    gamma_strength: float
    n_traps: int


def _trap_projector(n: int, nodes) -> np.ndarray:
    p = np.zeros((n, n))
    for m in nodes:
        if not 1 <= m <= n:
            raise ValueError(f"trap node {m} out of range 1..{n}")
        p[m - 1, m - 1] = 1.0
    return p


def trap_hamiltonian(h0: CouplingMatrix, ts: TrapSpec) -> np.ndarray:
    """H = H0 - i Gamma * sum_{m in M} |m><m| (complex symmetric)."""
    return h0.matrix.astype(complex) - 1j * ts.gamma * _trap_projector(h0.n, ts.nodes)


def classical_trap_matrix(h0: CouplingMatrix, ts: TrapSpec) -> np.ndarray:
    """Classical transfer matrix with traps: T = -H0 - Gammabar (real)."""
    return -h0.matrix - ts.gamma * _trap_projector(h0.n, ts.nodes)


def survival(spec, nodes, grid, mode: str = "exact") -> SurvivalSeries:
    """Mean survival probability over non-trap start nodes.

    mode "exact": Pi_M(t) = (1/(N-M)) sum_{j,k not in M} |<k|e^{-iHt}|j>|^2
    from the biorthonormal eigensystem (equivalent to the double-sum over
    eigenvalue pairs).  mode "spectral_approx": (1/(N-M)) sum_l e^{-2 gamma_l t}.
    mode "classical": P_M(t) from the real trap transfer matrix spectrum.
    """
    grid = np.asarray(grid, dtype=float)
    trap_idx = np.asarray(nodes, dtype=int) - 1
    if mode == "spectral_approx":
        gam = spec.gammas if isinstance(spec, BiorthSpectrum) else np.asarray(spec)
        n = len(gam)
        if n - len(trap_idx) <= 0:
            raise ValueError("trap set covers all nodes")
        vals = np.exp(-2.0 * np.outer(grid, gam)).sum(axis=1) / (n - len(trap_idx))
        return SurvivalSeries(grid, vals, mode)

    if mode == "classical":
        if not isinstance(spec, Spectrum):
            spec = decompose_symmetric(spec)
        n = spec.n
        keep = np.setdiff1d(np.arange(n), trap_idx)
        if keep.size == 0:
            raise ValueError("trap set covers all nodes")
        # spec diagonalizes -T, so e^{Tt} carries weights e^{-lam_n t};
        # P_M(t) = (1/(N-M)) sum_n e^{-lam_n t} (sum_{k notin M} q_kn)^2
        a = spec.eigenvectors[keep, :].sum(axis=0)
        decay = np.exp(-np.outer(grid, spec.eigenvalues))
        vals = (decay * (a * a)[None, :]).sum(axis=1) / keep.size
        return SurvivalSeries(grid, vals, mode)

    if mode == "exact":
        if not isinstance(spec, BiorthSpectrum):
            raise ValueError("exact quantum mode needs a BiorthSpectrum")
        n = spec.n
        keep = np.setdiff1d(np.arange(n), trap_idx)
        if keep.size == 0:
            raise ValueError("trap set covers all nodes")
        vals = np.empty(len(grid))
        right = spec.right[keep, :]  # <k|Phi_l>
        left = spec.left[:, keep]  # <Phit_l|j>
        for i, t in enumerate(grid):
            amp = (right * np.exp(-1j * spec.eigenvalues * t)[None, :]) @ left
            vals[i] = (np.abs(amp) ** 2).sum() / keep.size
        return SurvivalSeries(grid, vals, mode)

    raise ValueError(f"unknown mode {mode!r}")


def perturbative_gammas(s0: Spectrum, nodes, gamma: float,
                        tol: float = 1e-9) -> GammaSpectrum:
    """First-order gamma spectrum from the unperturbed eigensystem.

    Nondegenerate levels: gamma_l = Gamma sum_{m in M} |<m|Psi_l>|^2.
    Degenerate classes are handled by diagonalizing the trap projector within
    the class (first-order degenerate perturbation theory), which reproduces
    the ring pair formula (Gamma/N)(M +- |sum_m e^{4 pi i l m/N}|) exactly.
    """
    if s0.eigenvectors is None:
        raise ValueError("needs eigenvectors")
    trap_idx = np.asarray(nodes, dtype=int) - 1
    classes = degeneracy_classes(s0.eigenvalues, tol)
    gams = []
    for cls in classes.classes:
        q = s0.eigenvectors[:, list(cls)]
        block = q[trap_idx, :].conj().T @ q[trap_idx, :]
        gams.extend(gamma * np.linalg.eigvalsh(block))
    gams = np.sort(np.clip(np.asarray(gams), 0.0, None))
    return GammaSpectrum(gams, "perturbative", gamma, len(trap_idx))


def line_gammas_closed(n: int, gamma: float) -> GammaSpectrum:
    """First-order gammas for the open chain with traps at both ends:
    gamma_N = 2 Gamma/N and gamma_l = (4 Gamma/N) cos^2(theta_l/2) with
    theta_l = pi (N-l)/N for l < N."""
    l = np.arange(1, n)
    theta = np.pi * (n - l) / n
    gams = np.concatenate([(4.0 * gamma / n) * np.cos(theta / 2) ** 2,
                           [2.0 * gamma / n]])
    return GammaSpectrum(np.sort(gams), "closed_form", gamma, 2)


def sequential_ring_gammas_closed(n: int, m: int, gamma: float) -> GammaSpectrum:
    """First-order gammas for a ring with traps on M consecutive nodes.

    Degenerate pairs give (Gamma/N)(M +- sin(2 pi M l/N)/sin(2 pi l/N)); the
    nondegenerate levels (l=N and, for even N, l=N/2) give Gamma M/N.
    """
    if not 1 <= m < n:
        raise ValueError("need 1 <= M < N")
    gams = [gamma * m / n]  # l = N (uniform mode)
    if n % 2 == 0:
        # l = N/2: phase factors e^{4 pi i l j/N} = 1, level stays uniform
        gams.append(gamma * m / n)
    for l in range(1, (n - 1) // 2 + 1):
        if 2 * l == n:
            continue
        s = np.sin(2 * np.pi * l / n)
        ratio = np.sin(2 * np.pi * m * l / n) / s if abs(s) > 1e-15 else float(m)
        gams.append((gamma / n) * (m + ratio))
        gams.append((gamma / n) * (m - ratio))
    return GammaSpectrum(np.sort(np.clip(np.asarray(gams), 0.0, None)),
                         "closed_form", gamma, m)


def dark_state_count(n: int, m: int, arrangement: str = "periodic"):
    """Number of exactly dark eigenstates and the resulting survival plateau.

    Periodic arrangement of M traps on an N-ring: |Upsilon| = floor((N-2)/M)
    for even M, floor((N-2)/(2M)) for odd M.  The survival plateau is exactly
    |Upsilon|/(N-M) (dark states never decay; dark-dark cross terms vanish at
    the trap nodes).
    """
    if arrangement == "periodic":
        if n % m != 0:
            raise ValueError("periodic arrangement needs N/M integer")
        count = (n - 2) // m if m % 2 == 0 else (n - 2) // (2 * m)
    elif arrangement == "sequential":
        count = 0 if m >= n // 2 else None
        if count is None:
            raise ValueError("no closed-form count for sequential M < N/2")
    else:
        raise ValueError(f"unknown arrangement {arrangement!r}")
    plateau = count / (n - m)
    return count, plateau


def gamma_scaling_fit(gs: GammaSpectrum, window: tuple,
                      scale: str = "linear") -> FitResult:
    """Fit gamma_l ~ a l^mu over the (1-based) ascending-index window.

    scale "linear" (default) minimizes the residual of gamma itself, which
    emphasizes the large-l end of the window; "log" performs an ordinary
    log-log straight-line fit (uniform relative weighting).
    """
    lo, hi = window
    l = np.arange(1, len(gs.gammas) + 1)
    keep = (l >= lo) & (l <= hi)
    if keep.sum() < 3:
        raise ValueError("window too small")
    lv = l[keep].astype(float)
    gv = gs.gammas[keep]
    if np.any(gv <= 0):
        raise ValueError("fit window contains non-positive gamma")
    x, y = np.log(lv), np.log(gv)
    mu, loga = np.polyfit(x, y, 1)
    if scale == "linear":
        popt, _ = curve_fit(lambda t, a, m: a * t ** m, lv, gv,
                            p0=(np.exp(loga), mu), maxfev=10000)
        loga, mu = np.log(popt[0]), popt[1]
    elif scale != "log":
        raise ValueError("scale must be 'linear' or 'log'")
    resid = float(np.sqrt(np.mean((y - (mu * x + loga)) ** 2)))
    return FitResult(float(mu), float(np.exp(loga)), window, resid)


def collapse_rescale_times(times: np.ndarray, n: int, mu: float) -> np.ndarray:
    """Master-curve rescaling t -> t / N^{3-mu} for end-trapped chains."""
    return np.asarray(times) / float(n) ** (3.0 - mu)


def random_trap_ensemble(n: int, gamma: float, realizations: int, seed: int,
                         grid: np.ndarray, fit_window: tuple | None = None):
    """Ensemble of random 3D geometric graphs with one trap at node 1.

    Each realization draws N nodes uniformly in [0,N]^3, couples all pairs
    with weight R^-3, and places a single trap whose strength is scaled by
    the realization's diagonal element, [Gamma]_r = Gamma <1|H0|1>.  Returns
    (times, mean survival, Jensen lower bound, eta fit or None, mean gammas).
    """
    grid = np.asarray(grid, dtype=float)
    sum_pi = np.zeros(len(grid))
    sum_gam = np.zeros(n)
    done = 0
    attempt = 0
    while done < realizations:
        if attempt > 3 * realizations + 10:
            raise RuntimeError("too many defective realizations")
        child = int(np.random.SeedSequence([seed, attempt]).generate_state(1)[0])
        attempt += 1
        g = graphs.random_geometric(n, child)
        h0 = graphs.coupling_matrix(g)
        gam_r = gamma * h0.matrix[0, 0]
        ts = TrapSpec((1,), gam_r)
        try:
            bs = decompose_biorthogonal(trap_hamiltonian(h0, ts))
        except DefectiveSpectrumError:
            continue
        sum_pi += survival(bs, (1,), grid, "exact").values
        sum_gam += np.sort(bs.gammas)
        done += 1
    mean_pi = sum_pi / realizations
    mean_gam = sum_gam / realizations
    bound = np.exp(-2.0 * np.outer(grid, mean_gam)).sum(axis=1) / n
    eta = None
    if fit_window is not None:
        lo, hi = fit_window
        keep = (grid >= lo) & (grid <= hi) & (mean_pi > 0)
        x, y = np.log(grid[keep]), np.log(mean_pi[keep])
        slope, loga = np.polyfit(x, y, 1)
        resid = float(np.sqrt(np.mean((y - (slope * x + loga)) ** 2)))
        eta = FitResult(float(slope), float(np.exp(loga)), fit_window, resid)
    return grid, mean_pi, bound, eta, mean_gam


def vicsek_plateau(f: int, g: int) -> float:
    """Survival plateau for a Vicsek fractal with a trap at the central node:
    [(3^g - 1)/2 + (f+1)^g - 3^g] / (N - 1)."""
    n = (f + 1) ** g
    return ((3 ** g - 1) / 2 + (f + 1) ** g - 3 ** g) / (n - 1)


def vicsek_trap_survival(f: int, g: int, gamma: float, grid: np.ndarray):
    """Exact survival for the centrally trapped Vicsek fractal plus the
    predicted plateau."""
    graph = graphs.vicsek(f, g)
    h0 = graphs.coupling_matrix(graph)
    bs = decompose_biorthogonal(trap_hamiltonian(h0, TrapSpec((1,), gamma)))
    series = survival(bs, (1,), grid, "exact")
    return series, vicsek_plateau(f, g)
