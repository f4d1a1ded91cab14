"""Propagation against matrix-exponential oracles, closed-form LTAs, fits."""

import numpy as np
import pytest
import scipy.linalg
from hypothesis import given, settings
from hypothesis import strategies as st

from qwalk import dynamics, graphs, spectral


def _random_graph(seed, n_min=3, n_max=12):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(n_min, n_max + 1))
    return graphs.erdos_renyi(n, 0.5, seed=seed)


@pytest.mark.parametrize("seed", range(8))
def test_classical_propagator_matches_expm(seed):
    g = _random_graph(seed)
    h = graphs.coupling_matrix(g).matrix
    s = spectral.decompose_symmetric(h)
    grid = np.array([0.0, 0.3, 1.7, 6.0])
    f = dynamics.propagate_classical(s, 1, grid)
    for i, t in enumerate(grid):
        oracle = scipy.linalg.expm(-h * t)[:, 0]
        assert np.abs(f.values[:, i] - oracle).max() < 1e-8


@pytest.mark.parametrize("seed", range(8))
def test_quantum_propagator_matches_expm(seed):
    g = _random_graph(seed)
    h = graphs.coupling_matrix(g).matrix
    s = spectral.decompose_symmetric(h)
    grid = np.array([0.0, 0.3, 1.7, 6.0])
    f = dynamics.propagate_quantum(s, 2 if g.n_nodes > 1 else 1, grid,
                                   amplitudes=True)
    for i, t in enumerate(grid):
        oracle = scipy.linalg.expm(-1j * h * t)[:, 1]
        assert np.abs(f.values[:, i] - oracle).max() < 1e-8


@given(seed=st.integers(0, 10 ** 6), t=st.floats(0, 20))
@settings(max_examples=60, deadline=None)
def test_probability_conservation(seed, t):
    g = _random_graph(seed)
    s = spectral.decompose_symmetric(graphs.coupling_matrix(g))
    grid = np.array([t])
    p = dynamics.propagate_classical(s, 1, grid).values[:, 0]
    pi = dynamics.propagate_quantum(s, 1, grid).values[:, 0]
    for dist in (p, pi):
        assert abs(dist.sum() - 1.0) < 1e-9
        assert dist.min() > -1e-10


def test_average_return_bounds_and_limits():
    s = spectral.closed_spectrum("ring", n=30)
    grid = np.linspace(0, 20, 101)
    pbar = dynamics.average_return(s, "classical", grid)
    pibar = dynamics.average_return(s, "quantum_exact", grid)
    lb = dynamics.average_return(s, "quantum_lower_bound", grid)
    assert pbar[0] == pytest.approx(1.0) and pibar[0] == pytest.approx(1.0)
    assert np.all(pibar >= lb - 1e-12)  # Cauchy-Schwarz lower bound
    assert np.all(np.diff(pbar) <= 1e-12)  # classical return is monotone
    assert pbar[-1] > 1 / 30  # approaches equipartition from above


def test_ring_lta_closed_forms():
    for n in (9, 10):
        s = spectral.decompose_symmetric(graphs.coupling_matrix(graphs.ring(n)))
        lta = dynamics.long_time_average(s)
        assert np.allclose(lta.chi.sum(axis=0), 1.0, atol=1e-12)
        if n % 2:
            assert lta.chi[0, 0] == pytest.approx((2 * n - 1) / n ** 2, abs=1e-12)
            assert lta.chi[3, 0] == pytest.approx((n - 1) / n ** 2, abs=1e-12)
        else:
            assert lta.chi[0, 0] == pytest.approx(2 * (n - 1) / n ** 2, abs=1e-12)
            assert lta.chi[n // 2, 0] == pytest.approx(2 * (n - 1) / n ** 2, abs=1e-12)
            assert lta.chi[1, 0] == pytest.approx((n - 2) / n ** 2, abs=1e-12)


def test_lta_matches_long_time_integration():
    n = 7
    s = spectral.decompose_symmetric(graphs.coupling_matrix(graphs.ring(n)))
    lta = dynamics.long_time_average(s)
    grid = np.linspace(0, 5000.0, 200001)
    pi = dynamics.propagate_quantum(s, 1, grid).values
    time_avg = pi.mean(axis=1)
    assert np.abs(time_avg - lta.chi[:, 0]).max() < 5e-3


def test_lta_column_matches_matrix():
    s = spectral.decompose_symmetric(graphs.coupling_matrix(graphs.dendrimer(3, 3)))
    lta = dynamics.long_time_average(s)
    assert np.allclose(dynamics.lta_column(s, 5), lta.chi[:, 4], atol=1e-12)


def test_time_averaged_pi_bar_converges_to_chi_bar():
    s = spectral.decompose_symmetric(graphs.coupling_matrix(graphs.ring(12)))
    chi_bar = dynamics.long_time_average(s).chi_bar
    assert abs(dynamics.time_averaged_pi_bar(s, 1e5) - chi_bar) < 1e-3
    assert dynamics.time_averaged_pi_bar(s, 1e-9) == pytest.approx(1.0, abs=1e-6)


def test_complete_graph_closed_form():
    n = 5
    s = spectral.decompose_symmetric(graphs.coupling_matrix(graphs.complete(n)))
    grid = np.linspace(0, 20, 401)
    pi = dynamics.propagate_quantum(s, 1, grid).values
    closed_11 = (1 + (n - 1) ** 2 + 2 * (n - 1) * np.cos(n * grid)) / n ** 2
    closed_off = (2 - 2 * np.cos(n * grid)) / n ** 2
    assert np.abs(pi[0] - closed_11).max() < 1e-10
    assert np.abs(pi[1] - closed_off).max() < 1e-10


def test_dsg_bound_closed_form():
    for g in range(1, 7):
        sizes = np.array([m for _, m in spectral.dsg_degeneracies(g)])
        counted = (sizes ** 2).sum() / 3.0 ** (2 * g)
        assert dynamics.chi_bar_lb_dsg(g) == pytest.approx(counted, abs=1e-12)
    assert dynamics.chi_bar_lb_dsg(12) == pytest.approx(1 / 14.0, rel=1e-3)


def test_revival_times_positive_and_minimal():
    taus = dynamics.revival_times(10)
    assert np.all(taus > 0)
    assert taus.min() == pytest.approx(np.pi / 2, rel=1e-12)  # m = N/2 mode


def test_cluster_lps_grouping():
    col = np.array([0.5, 0.25, 0.25, 0.1, 0.1 + 5e-11])
    cl = dynamics.cluster_lps(col, tol=1e-10)
    assert [sorted(c) for c in cl] == [[1], [2, 3], [4, 5]]


def test_msd_metrics():
    f = dynamics.ProbabilityField(
        "quantum_pi", 1, np.array([0.0]),
        np.array([[0.0], [0.0], [0.0], [1.0]]))  # all mass on node 4, N=4
    assert dynamics.msd(f, "line", verbatim_prefactor=False)[0] == 9.0
    assert dynamics.msd(f, "ring", verbatim_prefactor=False)[0] == 1.0
    assert dynamics.msd(f, "line")[0] == pytest.approx(9.0 / 4.0)


def test_powerlaw_fit_recovers_exponent():
    t = np.geomspace(1, 100, 200)
    y = 3.0 * t ** -1.5
    fit = dynamics.powerlaw_fit(t, y, (2.0, 50.0))
    assert fit.exponent == pytest.approx(-1.5, abs=1e-9)
    assert fit.prefactor == pytest.approx(3.0, rel=1e-9)
    with pytest.raises(ValueError):
        dynamics.powerlaw_fit(t, y, (0.1, 50.0))  # window outside data


def test_series_csv_sig_digits(tmp_path):
    path = tmp_path / "s.csv"
    dynamics.series_to_csv(path, np.array([1 / 3]), {"y": np.array([2 / 3])})
    lines = path.read_text().strip().split("\n")
    assert lines[0] == "t,y"
    assert lines[1] == "0.33333333333333331,0.66666666666666663"
