"""Eigensystem contracts and closed-form spectra versus dense oracles."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qwalk import graphs, spectral


def test_symmetric_decomposition_reconstructs():
    m = graphs.coupling_matrix(graphs.dendrimer(3, 3)).matrix
    s = spectral.decompose_symmetric(m)
    assert np.all(np.diff(s.eigenvalues) >= -1e-12)
    assert np.allclose(s.eigenvectors @ np.diag(s.eigenvalues) @ s.eigenvectors.T, m)
    assert np.allclose(s.eigenvectors.T @ s.eigenvectors, np.eye(s.n), atol=1e-12)


def test_symmetric_rejects_asymmetric():
    with pytest.raises(ValueError):
        spectral.decompose_symmetric(np.array([[0.0, 1.0], [2.0, 0.0]]))


def test_biorthogonal_contract():
    h = graphs.coupling_matrix(graphs.ring(10)).matrix.astype(complex)
    h[0, 0] -= 1j * 0.3  # one trap
    bs = spectral.decompose_biorthogonal(h)
    assert np.allclose(bs.left @ bs.right, np.eye(10), atol=1e-10)
    assert np.allclose(bs.right @ np.diag(bs.eigenvalues) @ bs.left, h, atol=1e-10)
    assert np.all(bs.gammas >= -1e-12)
    assert np.isclose(bs.gammas.sum(), 0.3, atol=1e-10)  # trace identity


def test_ring_closed_spectrum_matches_dense():
    for n in (8, 9, 17):
        s = spectral.closed_spectrum("ring", n=n)
        dense = np.linalg.eigvalsh(graphs.coupling_matrix(graphs.ring(n)).matrix)
        assert np.allclose(np.sort(s.eigenvalues), dense, atol=1e-10)
        # Bloch columns are eigenvectors
        h = graphs.coupling_matrix(graphs.ring(n)).matrix
        res = h @ s.eigenvectors - s.eigenvectors * s.eigenvalues
        assert np.abs(res).max() < 1e-10


@pytest.mark.parametrize("family,builder,kw", [
    ("m_neighbor_ring", lambda: graphs.m_neighbor_ring(16, 3), dict(n=16, m=3)),
    ("long_range_ring", lambda: graphs.long_range_ring(15, 2.0), dict(n=15, exponent=2.0)),
    ("long_range_ring", lambda: graphs.long_range_ring(14, 2.0), dict(n=14, exponent=2.0)),
    ("lattice2d_pbc",
     lambda: graphs.lattice2d(4, 5, periodic_x=True, periodic_y=True),
     dict(m=4, n=5)),
])
def test_circulant_closed_spectra_match_dense(family, builder, kw):
    s = spectral.closed_spectrum(family, **kw)
    dense = np.linalg.eigvalsh(graphs.coupling_matrix(builder()).matrix)
    assert np.allclose(np.sort(s.eigenvalues), dense, atol=1e-9)


@pytest.mark.parametrize("g", [1, 2, 3])
def test_dsg_degeneracies_match_dense(g):
    dense = np.linalg.eigvalsh(graphs.coupling_matrix(graphs.dsg(g)).matrix)
    closed = spectral.closed_spectrum("dsg", generation=g).eigenvalues
    assert len(closed) == 3 ** g
    assert np.allclose(np.sort(closed), dense, atol=1e-8)


@pytest.mark.parametrize("f,g", [(3, 1), (3, 2), (4, 2)])
def test_vicsek_degeneracies_match_dense(f, g):
    dense = np.linalg.eigvalsh(graphs.coupling_matrix(graphs.vicsek(f, g)).matrix)
    closed = spectral.closed_spectrum("vicsek", f=f, generation=g).eigenvalues
    assert len(closed) == (f + 1) ** g
    assert np.allclose(np.sort(closed), dense, atol=1e-8)


def test_degeneracy_classes_ring():
    s = spectral.closed_spectrum("ring", n=11)
    cls = spectral.degeneracy_classes(s.eigenvalues)
    assert cls.sizes() == (1,) + (2,) * 5  # lambda=0 once, then pairs
    s = spectral.closed_spectrum("ring", n=12)
    cls = spectral.degeneracy_classes(s.eigenvalues)
    assert cls.sizes() == (1,) + (2,) * 5 + (1,)


@given(st.lists(st.floats(-5, 5), min_size=1, max_size=30))
@settings(max_examples=50, deadline=None)
def test_degeneracy_classes_partition_indices(vals):
    eigs = np.sort(np.asarray(vals))
    cls = spectral.degeneracy_classes(eigs)
    flat = [i for c in cls.classes for i in c]
    assert flat == list(range(len(eigs)))
    for c in cls.classes:
        assert eigs[c[-1]] - eigs[c[0]] <= spectral.DEGENERACY_TOL * len(c)


def test_dos_histogram_mass_and_slope():
    eigs = 2.0 - 2.0 * np.cos(2 * np.pi * np.arange(100000) / 100000)
    h = spectral.dos_histogram(eigs, 50, slope_window=(1e-4, 1e-1))
    assert np.isclose(h.mass.sum(), 1.0)
    assert abs(h.slope + 0.5) < 0.05  # rho(E) ~ E^{-1/2}


def test_kolmogorov_distance_uniform():
    x = (np.arange(1000) + 0.5) / 1000
    assert spectral.kolmogorov_distance(x, lambda v: v) < 1e-3
    assert spectral.kolmogorov_distance(x, lambda v: v ** 2) > 0.2


def test_spectrum_csv_format(tmp_path):
    s = spectral.closed_spectrum("ring", n=6)
    path = tmp_path / "spec.csv"
    spectral.spectrum_to_csv(s, path)
    lines = path.read_text().strip().split("\n")
    assert lines[0] == "index,eigenvalue_real,eigenvalue_imag,class_id"
    assert len(lines) == 7
