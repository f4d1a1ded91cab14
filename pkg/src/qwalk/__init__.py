"""Continuous-time quantum and classical random walks on complex networks.

Submodules: ``graphs`` (network catalog and coupling matrices), ``spectral``
(eigensystems and closed-form spectra), ``dynamics`` (propagation,
long-time averages, fits), ``trapping`` (absorbing nodes and decay-rate
spectra), ``disorder`` (static/dynamic disorder ensembles), ``phase_space``
(discrete Wigner functions), ``open_systems`` (dephasing master equations
and the solvable dimer), and ``cli`` (the ``qwalk`` scenario runner).
"""

__version__ = "0.1.0"

from . import disorder, dynamics, graphs, open_systems, phase_space, spectral, trapping

__all__ = [
    "__version__",
    "graphs",
    "spectral",
    "dynamics",
    "trapping",
    "disorder",
    "phase_space",
    "open_systems",
]
