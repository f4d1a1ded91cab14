"""Walk dynamics: propagation, return probabilities, long-time averages,
revivals, limiting-probability clusters, MSD, and power-law fits.

Classical transport follows the master equation with transfer matrix T = -H
(probabilities p_{k,j}(t) = sum_n e^{-lam_n t} <k|q_n><q_n|j>); coherent
transport uses the same generator as a Hamiltonian (amplitudes
alpha_{k,j}(t) = sum_n e^{-i E_n t} <k|Psi_n><Psi_n|j>, probabilities
pi = |alpha|^2).  Long-time averages are evaluated spectrally through
degeneracy classes, never by numeric time integration.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .spectral import DEGENERACY_TOL, Spectrum, degeneracy_classes

__all__ = [
    "ProbabilityField",
    "LtaMatrix",
    "FitResult",
    "time_grid",
    "propagate_classical",
    "propagate_quantum",
    "average_return",
    "time_averaged_pi_bar",
    "long_time_average",
    "lta_column",
    "chi_bar_lb_dsg",
    "revival_times",
    "full_revival_sizes",
    "cluster_lps",
    "msd",
    "powerlaw_fit",
    "series_to_csv",
]

FULL_REVIVAL_SIZES = (1, 2, 3, 4, 6)


@dataclass(frozen=True)
class ProbabilityField:
    """Transition probabilities/amplitudes from one start node on a grid.

    ``values`` is (N, T); probabilities real, amplitudes complex.
    """

    kind: str  # classical_p | quantum_pi | quantum_alpha
    start_node: int  # 1-based
    times: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        if self.kind not in ("classical_p", "quantum_pi", "quantum_alpha"):
            raise ValueError(f"unknown field kind {self.kind!r}")


@dataclass(frozen=True)
class LtaMatrix:
    """Long-time averages chi_{k,j} with scalar summaries."""

    chi: np.ndarray
    chi_bar: float
    chi_bar_lb: float
    unstable_partition: bool = False


@dataclass(frozen=True)
class FitResult:
    exponent: float
    prefactor: float
    window: tuple
    residual: float


def time_grid(t_max: float, samples_per_unit: float = 20.0, t_min: float = 0.0) -> np.ndarray:
    """Uniform grid from t_min to t_max (default 20 samples per unit time)."""
    if t_max <= t_min or t_min < 0:
        raise ValueError("need 0 <= t_min < t_max")
    n = max(2, int(round((t_max - t_min) * samples_per_unit)) + 1)
    return np.linspace(t_min, t_max, n)


def _check_start(s: Spectrum, j: int):
    if not 1 <= j <= s.n:
        raise ValueError(f"start node {j} out of range 1..{s.n}")
    if s.eigenvectors is None:
        raise ValueError("spectrum carries no eigenvectors")


def propagate_classical(s: Spectrum, j: int, grid: np.ndarray) -> ProbabilityField:
    """p_{k,j}(t) for the classical walk generated by T = -H."""
    _check_start(s, j)
    q = s.eigenvectors
    amp = q[j - 1].conj() if np.iscomplexobj(q) else q[j - 1]
    weights = q * amp  # (N, n) -> <k|q_n><q_n|j>
    decay = np.exp(-np.outer(s.eigenvalues, grid))  # (n, T)
    vals = np.real(weights @ decay)
    return ProbabilityField("classical_p", j, np.asarray(grid), vals)


def propagate_quantum(s: Spectrum, j: int, grid: np.ndarray,
                      amplitudes: bool = False) -> ProbabilityField:
    """alpha_{k,j}(t) (amplitudes=True) or pi = |alpha|^2 for the CTQW."""
    _check_start(s, j)
    q = s.eigenvectors
    weights = q * q[j - 1].conj()
    phases = np.exp(-1j * np.outer(s.eigenvalues, grid))
    alpha = weights @ phases
    if amplitudes:
        return ProbabilityField("quantum_alpha", j, np.asarray(grid), alpha)
    return ProbabilityField("quantum_pi", j, np.asarray(grid), np.abs(alpha) ** 2)


def average_return(s: Spectrum, kind: str, grid: np.ndarray) -> np.ndarray:
    """Node-averaged return probability series.

    kind "classical": pbar(t) = (1/N) sum_n e^{-lam_n t} (eigenvalues only);
    kind "quantum_lower_bound": |abar|^2 = |(1/N) sum_n e^{-i E_n t}|^2;
    kind "quantum_exact": pibar(t) = (1/N) sum_j |alpha_{jj}(t)|^2 (needs
    eigenvectors).  pibar >= |abar|^2 pointwise.
    """
    grid = np.asarray(grid)
    if kind == "classical":
        return np.exp(-np.outer(s.eigenvalues, grid)).mean(axis=0)
    if kind == "quantum_lower_bound":
        return np.abs(np.exp(-1j * np.outer(s.eigenvalues, grid)).mean(axis=0)) ** 2
    if kind == "quantum_exact":
        if s.eigenvectors is None:
            raise ValueError("quantum_exact needs eigenvectors")
        w = np.abs(s.eigenvectors) ** 2  # (j, n) = |<j|Psi_n>|^2
        diag = w @ np.exp(-1j * np.outer(s.eigenvalues, grid))  # alpha_jj
        return (np.abs(diag) ** 2).mean(axis=0)
    raise ValueError(f"unknown kind {kind!r}")


def time_averaged_pi_bar(s: Spectrum, T: float) -> float:
    """Exact (1/T) integral of pibar over [0, T], evaluated analytically."""
    if s.eigenvectors is None:
        raise ValueError("needs eigenvectors")
    w = np.abs(s.eigenvectors) ** 2
    omega = s.eigenvalues[:, None] - s.eigenvalues[None, :]
    with np.errstate(divide="ignore", invalid="ignore"):
        kernel = np.where(np.abs(omega) < 1e-14, 1.0,
                          np.sin(omega * T) / (omega * T))
    # pibar_avg = (1/N) sum_j sum_{n,m} w_jn w_jm * Re[avg e^{-i omega t}]
    g = w.T @ w  # (n, m): sum_j w_jn w_jm
    return float((g * kernel).sum() / s.n)


def long_time_average(s: Spectrum, tol: float = DEGENERACY_TOL) -> LtaMatrix:
    """chi_{k,j} = sum over degenerate pairs, computed via class projectors."""
    if s.eigenvectors is None:
        raise ValueError("needs eigenvectors")
    classes = degeneracy_classes(s.eigenvalues, tol)
    n = s.n
    chi = np.zeros((n, n))
    unstable = False
    ev = s.eigenvalues
    for ci, cls in enumerate(classes.classes):
        idx = list(cls)
        q = s.eigenvectors[:, idx]
        proj = q @ q.conj().T
        chi += np.abs(proj) ** 2
        if ci + 1 < len(classes.classes):
            gap = ev[classes.classes[ci + 1][0]] - ev[idx[-1]]
            if gap < 10 * tol:
                unstable = True
    sizes = np.array(classes.sizes())
    chi_bar = float(np.trace(chi) / n)
    chi_bar_lb = float((sizes ** 2).sum() / n ** 2)
    return LtaMatrix(chi, chi_bar, chi_bar_lb, unstable)


def lta_column(s: Spectrum, j: int, tol: float = DEGENERACY_TOL) -> np.ndarray:
    """Single column chi_{:,j} without forming the full matrix."""
    if s.eigenvectors is None:
        raise ValueError("needs eigenvectors")
    classes = degeneracy_classes(s.eigenvalues, tol)
    col = np.zeros(s.n)
    for cls in classes.classes:
        idx = list(cls)
        v = s.eigenvectors[:, idx] @ s.eigenvectors[j - 1, idx].conj()
        col += np.abs(v) ** 2
    return col


def chi_bar_lb_dsg(generation: int) -> float:
    """Closed-form eigenvalue-only LTA lower bound of the dual Sierpinski
    gasket; decreases toward 1/14 as the generation grows."""
    g = generation
    return (3.0 ** g * (1.0 + 3.0 ** g / 14.0) + (10.0 / 7.0) * 2.0 ** g - 1.5) / 3.0 ** (2 * g)


def revival_times(n: int, r: int = 1) -> np.ndarray:
    """Per-mode revival times tau_m = (r*pi/2) [1 + cot^2(m*pi/N)], m=1..N-1."""
    if n < 1:
        raise ValueError("n must be >= 1")
    m = np.arange(1, n)
    return (r * np.pi / 2.0) * (1.0 + 1.0 / np.tan(m * np.pi / n) ** 2)


def full_revival_sizes() -> tuple:
    """Ring sizes with exact full revivals (commensurate spectra)."""
    return FULL_REVIVAL_SIZES


def cluster_lps(column: np.ndarray, tol: float = 1e-10) -> list:
    """Group nodes whose limiting probabilities agree within tol.

    Returns a list of 1-based node-index lists, ordered by descending value.
    """
    order = np.argsort(-np.asarray(column), kind="stable")
    clusters = []
    current = [order[0]]
    for a, b in zip(order[:-1], order[1:]):
        if abs(column[a] - column[b]) <= tol:
            current.append(b)
        else:
            clusters.append([int(i) + 1 for i in current])
            current = [b]
    clusters.append([int(i) + 1 for i in current])
    return clusters


def msd(field: ProbabilityField, metric: str = "ring",
        verbatim_prefactor: bool = True) -> np.ndarray:
    """Mean square displacement series from a probability field.

    metric "ring" uses the ring distance min(|k-j|, N-|k-j|), "line" uses
    |k-j|.  With verbatim_prefactor=True the sum carries the literature's 1/N
    factor; set False for the plain expectation value over the (already
    normalized) distribution.
    """
    if field.kind == "quantum_alpha":
        probs = np.abs(field.values) ** 2
    else:
        probs = field.values
    n = probs.shape[0]
    k = np.arange(1, n + 1)
    d = np.abs(k - field.start_node)
    if metric == "ring":
        d = np.minimum(d, n - d)
    elif metric != "line":
        raise ValueError("metric must be 'ring' or 'line'")
    out = (d[:, None] ** 2 * probs).sum(axis=0)
    return out / n if verbatim_prefactor else out


def _local_maxima(t: np.ndarray, y: np.ndarray):
    keep = (y[1:-1] > y[:-2]) & (y[1:-1] > y[2:])
    idx = np.flatnonzero(keep) + 1
    return t[idx], y[idx]


def powerlaw_fit(times: np.ndarray, series: np.ndarray, window: tuple,
                 envelope: bool = False) -> FitResult:
    """Least-squares log-log fit y ~ a * t^b over a time window.

    envelope=True first reduces the series to its strict local maxima.
    """
    t = np.asarray(times, dtype=float)
    y = np.asarray(series, dtype=float)
    lo, hi = window
    if lo < t[0] or hi > t[-1] or lo >= hi:
        raise ValueError("window outside data range")
    if envelope:
        t, y = _local_maxima(t, y)
    keep = (t >= lo) & (t <= hi)
    t, y = t[keep], y[keep]
    if len(t) < 5:
        raise ValueError("fewer than 5 points in fit window")
    if np.any(y <= 0) or np.any(t <= 0):
        raise ValueError("power-law fit needs positive data")
    lt, ly = np.log(t), np.log(y)
    slope, intercept = np.polyfit(lt, ly, 1)
    resid = float(np.sqrt(np.mean((ly - (slope * lt + intercept)) ** 2)))
    return FitResult(float(slope), float(np.exp(intercept)), (lo, hi), resid)


def series_to_csv(path, times: np.ndarray, columns: dict) -> None:
    """CSV export (t, value...) with 17-significant-digit formatting."""
    names = list(columns)
    with open(path, "w") as fh:
        fh.write("t," + ",".join(names) + "\n")
        for i, t in enumerate(times):
            row = [f"{t:.17g}"]
            for name in names:
                row.append(f"{np.real(columns[name][i]):.17g}")
            fh.write(",".join(row) + "\n")
