"""Eigensystems: symmetric, biorthogonal (non-Hermitian), closed forms, DOS.

Provides the dense eigensolver contracts used everywhere else, plus the
analytic/recursive spectra of the special families (rings and their long-range
or 2m-neighbor variants, periodic 2D lattices, dual Sierpinski gaskets and
Vicsek fractals) that serve as oracles for the numerical decompositions.

Dense solvers only; intended for N up to a few thousand.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .graphs import CouplingMatrix

__all__ = [
    "Spectrum",
    "BiorthSpectrum",
    "DegeneracyClasses",
    "DosHistogram",
    "DefectiveSpectrumError",
    "decompose_symmetric",
    "decompose_biorthogonal",
    "degeneracy_classes",
    "closed_spectrum",
    "dsg_degeneracies",
    "vicsek_degeneracies",
    "dos_histogram",
    "kolmogorov_distance",
    "spectrum_to_csv",
]

DEGENERACY_TOL = 1e-9


class DefectiveSpectrumError(RuntimeError):
    """Raised when a non-Hermitian matrix is too close to defective."""


@dataclass(frozen=True)
class Spectrum:
    """Eigensystem of a real symmetric (or normal) matrix.

    ``eigenvalues`` ascending; ``eigenvectors`` has orthonormal columns (may be
    complex for Bloch bases; may be None for eigenvalue-only closed forms).
    """

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray | None
    source_dim: int

    @property
    def n(self) -> int:
        return self.source_dim


@dataclass(frozen=True)
class BiorthSpectrum:
    """Complex eigensystem with biorthonormal left/right eigenvectors.

    Eigenvalues E_l = eps_l - i*gamma_l, ordered by ascending gamma then eps.
    ``right`` columns have unit 2-norm; ``left`` rows satisfy
    left @ right = I.
    """

    eigenvalues: np.ndarray
    right: np.ndarray
    left: np.ndarray

    @property
    def n(self) -> int:
        return len(self.eigenvalues)

    @property
    def epsilons(self) -> np.ndarray:
        return self.eigenvalues.real

    @property
    def gammas(self) -> np.ndarray:
        return -self.eigenvalues.imag


@dataclass(frozen=True)
class DegeneracyClasses:
    """Partition of sorted eigenvalue indices into equal-value classes."""

    classes: tuple  # tuple of tuples of indices
    tol: float

    def sizes(self) -> tuple:
        return tuple(len(c) for c in self.classes)


@dataclass(frozen=True)
class DosHistogram:
    """Unit-mass eigenvalue histogram with optional small-E slope estimate."""

    bin_edges: np.ndarray
    mass: np.ndarray
    slope: float | None = None
    slope_window: tuple | None = None


def _as_matrix(h) -> np.ndarray:
    if isinstance(h, CouplingMatrix):
        return h.matrix
    if hasattr(h, "matrix"):
        return np.asarray(h.matrix)
    return np.asarray(h)


def decompose_symmetric(h) -> Spectrum:
    """Eigensystem of a real symmetric matrix (ascending eigenvalues)."""
    m = _as_matrix(h)
    if not np.allclose(m, m.T, atol=1e-12):
        raise ValueError("matrix is not symmetric")
    vals, vecs = np.linalg.eigh(m)
    return Spectrum(vals, vecs, m.shape[0])


def decompose_biorthogonal(h) -> BiorthSpectrum:
    """Complex eigensystem with biorthonormal left/right vectors.

    Right vectors are unit-norm columns; left vectors are the matching rows of
    the inverse, so left @ right = I and sum_l |r_l><l_l| = I.  Raises
    DefectiveSpectrumError when the eigenbasis cannot reconstruct the matrix
    to 1e-6 relative accuracy.
    """
    m = np.asarray(_as_matrix(h), dtype=complex)
    vals, vecs = scipy.linalg.eig(m)
    vecs = vecs / np.linalg.norm(vecs, axis=0, keepdims=True)
    try:
        left = np.linalg.inv(vecs)
    except np.linalg.LinAlgError as exc:
        raise DefectiveSpectrumError("eigenvector matrix is singular") from exc
    scale = max(1.0, np.abs(m).max())
    resid = np.abs(vecs @ np.diag(vals) @ left - m).max() / scale
    if resid > 1e-6:
        raise DefectiveSpectrumError(f"completeness residual {resid:.2e} > 1e-6")
    order = np.lexsort((vals.real, -vals.imag))
    return BiorthSpectrum(vals[order], vecs[:, order], left[order, :])


def degeneracy_classes(eigs: np.ndarray, tol: float = DEGENERACY_TOL) -> DegeneracyClasses:
    """Greedy gap clustering of sorted eigenvalues into equal-value classes."""
    eigs = np.asarray(eigs)
    if np.any(np.diff(eigs) < -tol):
        raise ValueError("eigenvalues must be sorted ascending")
    classes = []
    current = [0]
    for i in range(1, len(eigs)):
        if eigs[i] - eigs[i - 1] <= tol:
            current.append(i)
        else:
            classes.append(tuple(current))
            current = [i]
    classes.append(tuple(current))
    return DegeneracyClasses(tuple(classes), tol)


# ---------------------------------------------------------------------------
# closed forms
# ---------------------------------------------------------------------------


def _bloch_ring(n: int) -> Spectrum:
    theta = 2 * np.pi * np.arange(n) / n
    vals = 2 - 2 * np.cos(theta)
    j = np.arange(n)
    vecs = np.exp(2j * np.pi * np.outer(j, np.arange(n)) / n) / np.sqrt(n)
    order = np.argsort(vals, kind="stable")
    return Spectrum(vals[order], vecs[:, order], n)


def _long_range_weights(n: int, exponent: float, r_max: int) -> np.ndarray:
    """Weight per ring distance R=1..r_max; the single antipodal bond of an
    even ring is counted once (half weight in the doubled Bloch sum)."""
    r = np.arange(1, r_max + 1, dtype=float)
    w = r ** (-exponent)
    if n % 2 == 0 and r_max == n // 2:
        w[-1] *= 0.5
    return w


def closed_spectrum(family: str, **params) -> Spectrum:
    """Analytic spectrum for the supported families.

    family in {"ring", "lattice2d_pbc", "long_range_ring", "m_neighbor_ring",
    "dsg", "vicsek"}.  Ring-type families include Bloch eigenvectors; the
    fractal recursions return eigenvalues only (eigenvectors=None).
    """
    if family == "ring":
        return _bloch_ring(params["n"])

    if family == "lattice2d_pbc":
        m, n = params["m"], params["n"]
        sx, sy = _bloch_ring(m), _bloch_ring(n)
        vals = (sx.eigenvalues[:, None] + sy.eigenvalues[None, :]).ravel()
        vecs = np.einsum("xa,yb->xyab", sx.eigenvectors, sy.eigenvectors)
        vecs = vecs.reshape(m * n, m * n)
        order = np.argsort(vals, kind="stable")
        return Spectrum(vals[order], vecs[:, order], m * n)

    if family == "long_range_ring":
        n = params["n"]
        exponent = params["exponent"]
        r_max = params.get("r_max") or n // 2
        theta = 2 * np.pi * np.arange(n) / n
        w = _long_range_weights(n, exponent, r_max)
        r = np.arange(1, r_max + 1)
        vals = (w[None, :] * (2 - 2 * np.cos(np.outer(theta, r)))).sum(axis=1)
        order = np.argsort(vals, kind="stable")
        # Bloch vectors diagonalize every circulant, reuse the ring basis
        vecs = np.exp(2j * np.pi * np.outer(np.arange(n), np.arange(n)) / n) / np.sqrt(n)
        return Spectrum(vals[order], vecs[:, order], n)

    if family == "m_neighbor_ring":
        n, m = params["n"], params["m"]
        theta = 2 * np.pi * np.arange(n) / n
        j = np.arange(1, m + 1)
        vals = 2 * m - 2 * np.cos(np.outer(theta, j)).sum(axis=1)
        vecs = np.exp(2j * np.pi * np.outer(np.arange(n), np.arange(n)) / n) / np.sqrt(n)
        order = np.argsort(vals, kind="stable")
        return Spectrum(vals[order], vecs[:, order], n)

    if family == "dsg":
        pairs = dsg_degeneracies(params["generation"])
        vals = np.sort(np.concatenate([[lam] * mult for lam, mult in pairs]))
        return Spectrum(vals, None, len(vals))

    if family == "vicsek":
        pairs = vicsek_degeneracies(params["f"], params["generation"])
        vals = np.sort(np.concatenate([[lam] * mult for lam, mult in pairs]))
        return Spectrum(vals, None, len(vals))

    raise ValueError(f"unsupported family {family!r}")


def dsg_degeneracies(generation: int) -> list:
    """Exact (eigenvalue, multiplicity) list for the dual Sierpinski gasket.

    Generation g carries 0 (once), 3 with multiplicity (3^{g-1}+3)/2, 5 with
    (3^{g-1}-1)/2, and the two descendants (5 +- sqrt(25-4*lam))/2 of every
    nonzero eigenvalue of generation g-1, multiplicities inherited.
    """
    if generation < 1:
        raise ValueError("generation must be >= 1")
    spec = [(0.0, 1), (3.0, 2)]
    for g in range(2, generation + 1):
        new = [(0.0, 1), (3.0, (3 ** (g - 1) + 3) // 2)]
        d5 = (3 ** (g - 1) - 1) // 2
        if d5:
            new.append((5.0, d5))
        for lam, mult in spec:
            if lam == 0.0:
                continue
            s = np.sqrt(25.0 - 4.0 * lam)
            new.append(((5.0 - s) / 2.0, mult))
            new.append(((5.0 + s) / 2.0, mult))
        spec = new
    return sorted(spec)


def vicsek_degeneracies(f: int, generation: int) -> list:
    """Exact (eigenvalue, multiplicity) list for the Vicsek fractal.

    Each generation keeps 0 and f+1 once, adds 1 with multiplicity
    (f-2)(f+1)^{g-1}+1, and replaces every nonzero eigenvalue of the previous
    generation by the three real roots of P(lam) = lam(lam-3)(lam-f-1) equal to
    it (multiplicities inherited).
    """
    if f < 3 or generation < 1:
        raise ValueError("need f >= 3 and generation >= 1")
    spec = {0.0: 1, 1.0: f - 1, float(f + 1): 1}
    for g in range(2, generation + 1):
        new = {0.0: 1, float(f + 1): 1}
        for lam, mult in spec.items():
            if lam == 0.0:
                continue
            roots = np.roots([1.0, -(f + 4.0), 3.0 * (f + 1.0), -lam])
            for r in np.real(roots):
                key = None
                for k in new:
                    if abs(k - r) < 1e-9:
                        key = k
                        break
                key = r if key is None else key
                new[key] = new.get(key, 0) + mult
        new[1.0] = new.get(1.0, 0) + (f - 2) * (f + 1) ** (g - 1) + 1
        spec = new
    return sorted(spec.items())


# ---------------------------------------------------------------------------
# density of states
# ---------------------------------------------------------------------------


def dos_histogram(eigs: np.ndarray, n_bins: int,
                  slope_window: tuple | None = None) -> DosHistogram:
    """Unit-mass histogram; optionally a log-log density slope over a window.

    The slope uses log-spaced bins inside ``slope_window`` (E_lo, E_hi) and a
    least-squares fit of log(density) against log(E); for rho(E) ~ E^nu this
    estimates nu.
    """
    eigs = np.asarray(eigs, dtype=float)
    if eigs.size == 0:
        raise ValueError("empty eigenvalue list")
    counts, edges = np.histogram(eigs, bins=n_bins)
    mass = counts / eigs.size
    slope = None
    if slope_window is not None:
        lo, hi = slope_window
        if not (0 < lo < hi):
            raise ValueError("slope window must satisfy 0 < lo < hi")
        ledges = np.geomspace(lo, hi, 25)
        c, _ = np.histogram(eigs, bins=ledges)
        widths = np.diff(ledges)
        centers = np.sqrt(ledges[:-1] * ledges[1:])
        dens = c / (eigs.size * widths)
        keep = dens > 0
        if keep.sum() < 5:
            raise ValueError("slope window contains too few populated bins")
        slope = float(np.polyfit(np.log(centers[keep]), np.log(dens[keep]), 1)[0])
    return DosHistogram(edges, mass, slope, slope_window)


def kolmogorov_distance(samples: np.ndarray, cdf) -> float:
    """Sup distance between the empirical CDF of samples and a model CDF."""
    x = np.sort(np.asarray(samples, dtype=float))
    n = len(x)
    model = cdf(x)
    upper = np.arange(1, n + 1) / n
    lower = np.arange(0, n) / n
    return float(max(np.abs(upper - model).max(), np.abs(lower - model).max()))


def spectrum_to_csv(s, path) -> None:
    """CSV export: index, eigenvalue_real, eigenvalue_imag, class_id."""
    if isinstance(s, BiorthSpectrum):
        vals = s.eigenvalues
        order_for_classes = np.sort(vals.real)
        classes = degeneracy_classes(order_for_classes)
    else:
        vals = s.eigenvalues.astype(complex)
        classes = degeneracy_classes(s.eigenvalues)
    class_of = {}
    if not isinstance(s, BiorthSpectrum):
        for cid, cls in enumerate(classes.classes):
            for i in cls:
                class_of[i] = cid
    with open(path, "w") as fh:
        fh.write("index,eigenvalue_real,eigenvalue_imag,class_id\n")
        for i, v in enumerate(vals):
            fh.write(f"{i},{v.real:.17g},{v.imag:.17g},{class_of.get(i, -1)}\n")
