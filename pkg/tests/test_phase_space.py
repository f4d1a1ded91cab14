"""Discrete Wigner functions: definition, closed forms, marginals, fronts."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qwalk import dynamics, phase_space, spectral


def _random_state(n, seed):
    rng = np.random.default_rng(seed)
    psi = rng.normal(size=n) + 1j * rng.normal(size=n)
    return psi / np.linalg.norm(psi)


@given(n=st.integers(3, 40), seed=st.integers(0, 10 ** 6))
@settings(max_examples=60, deadline=None)
def test_wigner_reality_mass_and_marginals(n, seed):
    psi = _random_state(n, seed)
    w = phase_space.wigner_from_state(psi)
    assert w.dtype == float
    assert w.sum() == pytest.approx(1.0, abs=1e-10)
    assert np.abs(phase_space.marginal_position(w) - np.abs(psi) ** 2).max() < 1e-12
    # momentum marginal: sum_x W(x, kappa) = sum_k |psi_k|^2 [2k + kappa = 0
    # mod N] -- a half-index remap (odd N: permutation of the momentum
    # distribution; even N: odd columns vanish, even columns pair up)
    psi_k2 = np.abs(np.fft.fft(psi)) ** 2 / n
    mk = phase_space.marginal_momentum(w)
    if n % 2:
        inv2 = (n + 1) // 2  # inverse of 2 mod N
        ref = psi_k2[(-np.arange(n) * inv2) % n]
    else:
        ref = np.zeros(n)
        m = np.arange(n // 2)
        ref[2 * m % n] = psi_k2[-m % n] + psi_k2[(-m + n // 2) % n]
    assert np.abs(mk - ref).max() < 1e-12


@given(n=st.integers(2, 20), seed=st.integers(0, 10 ** 6))
@settings(max_examples=40, deadline=None)
def test_even_n_momentum_marginal_parity(n, seed):
    """On an even-N ring every odd momentum column of W sums to exactly 0."""
    n = 2 * n
    psi = _random_state(n, seed)
    w = phase_space.wigner_from_state(psi)
    mk = phase_space.marginal_momentum(w)
    assert np.abs(mk[1::2]).max() < 1e-14


def test_density_reduces_to_state():
    psi = _random_state(11, 3)
    assert np.allclose(phase_space.wigner_from_density(np.outer(psi, psi.conj())),
                       phase_space.wigner_from_state(psi), atol=1e-12)


@pytest.mark.parametrize("n", [10, 11, 32])
def test_closed_form_matches_generic(n):
    s = spectral.closed_spectrum("ring", n=n)
    times = np.array([0.0, 1.0, 5.0, 20.0])
    j = max(1, n // 3)
    generic = phase_space.wigner_evolution(s, j, times)
    closed = phase_space.wigner_ring_closed(n, j, times)
    assert np.abs(generic.values - closed.values).max() < 1e-12


def test_initial_slice_is_localized():
    n, j = 11, 4
    w = phase_space.wigner_ring_closed(n, j, np.array([0.0])).values[0]
    # odd N, state |j>: W = delta_{x,j}/N (flat in momentum)
    expect = np.zeros((n, n))
    expect[j - 1] = 1.0 / n
    assert np.abs(w - expect).max() < 1e-12
    # even N adds the interference ghost (-1)^kappa/N at x = j + N/2
    n, j = 12, 4
    w = phase_space.wigner_ring_closed(n, j, np.array([0.0])).values[0]
    expect = np.zeros((n, n))
    expect[j - 1] = 1.0 / n
    expect[j - 1 + n // 2] = (-1.0) ** np.arange(n) / n
    assert np.abs(w - expect).max() < 1e-12


@pytest.mark.parametrize("n", [14, 15])
def test_limiting_wigner_matches_dephasing(n):
    s = spectral.closed_spectrum("ring", n=n)
    j = 5
    closed = phase_space.wigner_limiting(n, j)
    dephased = phase_space.wigner_limiting_spectral(s, j)
    assert np.abs(closed - dephased).max() < 1e-12
    assert closed.sum() == pytest.approx(1.0, abs=1e-12)
    if n % 2 == 0:
        assert np.abs(closed[:, 1::2]).max() == 0.0  # odd-momentum stripes


def test_limiting_position_marginal_is_lta_column():
    from qwalk import graphs
    n, j = 10, 3
    s = spectral.decompose_symmetric(graphs.coupling_matrix(graphs.ring(n)))
    w_avg = phase_space.wigner_limiting_spectral(s, j)
    chi = dynamics.lta_column(s, j)
    assert np.abs(phase_space.marginal_position(w_avg) - chi).max() < 1e-10


def test_front_maxima_positions_m_neighbor():
    """m interaction shells produce m momentum-space front branches near
    kappa_hat = (2l-1)N/(2m) at the ballistic front."""
    n, j = 64, 32
    for m in (1, 2, 3):
        s = spectral.closed_spectrum("m_neighbor_ring", n=n, m=m)
        theta = np.linspace(0, 2 * np.pi, 4001)
        vmax = np.abs(sum(2 * l * np.sin(l * theta) for l in range(1, m + 1))).max()
        t = 10.0 / vmax
        w = phase_space.wigner_evolution(s, j, np.array([t])).values[0]
        x = (j - 1 + 10) % n  # ten sites ahead of the start, at the front
        col = w[x]
        assert phase_space.front_maxima_count(w, x) >= m
        peaks = np.flatnonzero((col[1:-1] > col[:-2]) & (col[1:-1] > col[2:])) + 1
        top = peaks[np.argsort(col[peaks])[-m:]]
        predicted = [(2 * l - 1) * n / (2 * m) for l in range(1, m + 1)]
        for p in predicted:
            assert np.min(np.abs(top - p)) <= 4


def test_wigner_field_validation():
    with pytest.raises(ValueError):
        phase_space.WignerField(np.array([0.0]), np.zeros((1, 3, 3)), 1, 3)
    with pytest.raises(ValueError):
        phase_space.wigner_from_state(np.array([1.0, 1.0]))  # not normalized


def test_ensemble_reproducible():
    ds = phase_space.DisorderSpec(0.5, "DOD")
    m1, l1 = phase_space.wigner_ensemble(11, 6, ds, 3, 42, np.array([5.0]))
    m2, l2 = phase_space.wigner_ensemble(11, 6, ds, 3, 42, np.array([5.0]))
    assert np.array_equal(m1.values, m2.values)
    assert np.array_equal(l1, l2)
    assert m1.values[0].sum() == pytest.approx(1.0, abs=1e-8)


def test_wigner_csv(tmp_path):
    w = phase_space.wigner_ring_closed(5, 1, np.array([0.0])).values[0]
    path = tmp_path / "w.csv"
    phase_space.wigner_to_csv(path, w)
    lines = path.read_text().strip().split("\n")
    assert lines[0] == "x,kappa_hat,value"
    assert len(lines) == 26
    assert lines[1] == "0,0,0.20000000000000001"
