"""Master-equation dynamics: integrator vs superoperator oracle, exact
sector solutions, mixing bounds, and the solvable dimer."""

import numpy as np
import pytest
import scipy.linalg

from qwalk import graphs, open_systems, spectral


def _superoperator(h0, spec):
    """Vectorized Liouvillian L such that vec(rho_dot) = L vec(rho)."""
    n = h0.shape[0]
    eye = np.eye(n)
    gbar = np.zeros(n)
    for m in spec.trap_nodes:
        gbar[m - 1] = spec.trap_gamma
    heff = h0.astype(complex)
    L = -1j * (np.kron(heff, eye) - np.kron(eye, heff.T))
    L -= np.kron(np.diag(gbar), eye) + np.kron(eye, np.diag(gbar))
    if spec.rate:
        # -2 lam (rho - diag rho): acts elementwise on off-diagonal entries
        mask = 1.0 - np.eye(n)
        L -= 2.0 * spec.rate * np.diag(mask.reshape(-1))
    return L


def _oracle_rho(h0, spec, rho0, t):
    n = h0.shape[0]
    return (scipy.linalg.expm(_superoperator(h0, spec) * t)
            @ rho0.reshape(-1)).reshape(n, n)


@pytest.mark.parametrize("n,lam,gam,traps", [
    (4, 0.0, 0.0, ()),
    (5, 0.3, 0.0, ()),
    (6, 0.1, 0.2, (2,)),
    (3, 0.0, 0.4, (1, 3)),
])
def test_integrator_matches_superoperator_expm(n, lam, gam, traps):
    h0 = graphs.coupling_matrix(graphs.ring(n)).matrix
    spec = open_systems.LindbladSpec(lam, traps, gam)
    rho0 = np.zeros((n, n), complex)
    rho0[0, 0] = 1.0
    grid = np.linspace(0, 5, 26)
    snaps = open_systems.lindblad_propagate(h0, spec, rho0, grid)
    for i in (5, 15, 25):
        oracle = _oracle_rho(h0, spec, rho0, grid[i])
        assert np.abs(snaps[i].rho - oracle).max() < 1e-8


def test_density_matrix_validation():
    ok = np.array([[0.5, 0.1], [0.1, 0.5]], complex)
    open_systems.DensityMatrix(ok, 0.0)
    with pytest.raises(ValueError):
        open_systems.DensityMatrix(np.array([[0.5, 1j], [1j, 0.5]]), 0.0)
    with pytest.raises(ValueError):
        open_systems.DensityMatrix(np.array([[0.9, 0.0], [0.0, 0.5]], complex), 0.0)
    with pytest.raises(ValueError):  # negative eigenvalue
        open_systems.DensityMatrix(np.array([[1.1, 0.0], [0.0, -0.1]], complex), 0.0,
                                   trace_preserving=False)


def test_trace_and_positivity_along_trajectory():
    n = 8
    h0 = graphs.coupling_matrix(graphs.ring(n)).matrix
    rho0 = np.zeros((n, n), complex)
    rho0[0, 0] = 1.0
    snaps = open_systems.lindblad_propagate(
        h0, open_systems.LindbladSpec(0.2), rho0, np.linspace(0, 8, 41))
    for s in snaps:
        assert abs(np.trace(s.rho).real - 1.0) < 1e-8
        assert np.linalg.eigvalsh(s.rho).min() > -1e-8


def test_off_diagonal_norm_decreases_faster_with_stronger_dephasing():
    n = 6
    h0 = graphs.coupling_matrix(graphs.ring(n)).matrix
    rho0 = np.full((n, n), 1.0 / n, dtype=complex)  # maximal coherence
    grid = np.linspace(0, 2, 11)
    norms = []
    for lam in (0.0, 0.2, 1.0):
        snaps = open_systems.lindblad_propagate(
            h0, open_systems.LindbladSpec(lam), rho0, grid)
        off = snaps[-1].rho - np.diag(np.diag(snaps[-1].rho))
        norms.append(np.linalg.norm(off))
    assert norms[0] > norms[1] > norms[2]  # quantum Zeno trend


def test_exact_populations_lambda_zero_is_unitary():
    n = 9
    grid = np.linspace(0, 10, 51)
    pops = open_systems.gurvitz_populations(n, 0.0, 1, grid)
    s = spectral.closed_spectrum("ring", n=n)
    from qwalk import dynamics
    ref = dynamics.propagate_quantum(s, 1, grid).values.T
    assert np.abs(pops - ref).max() < 1e-12


def test_exact_populations_match_integrator():
    n, lam = 7, 0.15
    grid = np.linspace(0, 6, 31)
    pops = open_systems.gurvitz_populations(n, lam, 1, grid)
    h0 = graphs.coupling_matrix(graphs.ring(n)).matrix
    rho0 = np.zeros((n, n), complex)
    rho0[0, 0] = 1.0
    snaps = open_systems.lindblad_propagate(
        h0, open_systems.LindbladSpec(lam), rho0, grid)
    diags = np.array([np.diag(s.rho).real for s in snaps])
    assert np.abs(pops - diags).max() < 1e-7
    assert np.allclose(pops.sum(axis=1), 1.0, atol=1e-10)
    late = open_systems.gurvitz_populations(n, lam, 1, np.array([200.0]))
    assert np.abs(late - 1.0 / n).max() < 1e-4  # equilibration


def test_hypercycle_populations_match_integrator():
    n, d, lam = 3, 2, 0.2
    grid = np.linspace(0, 5, 26)
    pops = open_systems.hypercycle_populations(n, d, lam, grid)
    h0 = graphs.coupling_matrix(graphs.hypercycle(n, d)).matrix
    nt = n ** d
    rho0 = np.zeros((nt, nt), complex)
    rho0[0, 0] = 1.0
    snaps = open_systems.lindblad_propagate(
        h0, open_systems.LindbladSpec(lam), rho0, grid)
    diags = np.array([np.diag(s.rho).real for s in snaps])
    assert np.abs(pops - diags).max() < 1e-7


def test_secular_series_is_only_approximate():
    n, lam = 10, 0.1
    grid = np.linspace(0, 10, 101)
    exact = open_systems.gurvitz_populations(n, lam, 1, grid)
    approx = open_systems.gurvitz_series_approx(n, lam, grid)
    dev = np.abs(exact - approx).max()
    assert 1e-4 < dev < 1.0  # close but not exact


def test_mixing_time_and_bounds():
    n, lam, eps = 10, 0.1, 0.01
    grid = np.linspace(0, 60, 2401)
    pops = open_systems.gurvitz_populations(n, lam, 1, grid)
    tm = open_systems.mixing_time(grid, pops, eps)
    assert 0 < tm < open_systems.mixing_bound_ring(n, lam, eps)
    for m in (2, 3):
        pops = open_systems.gurvitz_populations(20, lam, m, grid)
        tm = open_systems.mixing_time(grid, pops, eps)
        assert tm < open_systems.mixing_bound_m_neighbor(20, m, lam, eps)
    grid = np.linspace(0, 120, 1201)
    pops = open_systems.hypercycle_populations(4, 2, lam, grid)
    tm = open_systems.mixing_time(grid, pops, eps)
    assert tm < open_systems.mixing_bound_hypercycle(4, 2, lam, eps)


def test_mixing_time_unreached_raises():
    grid = np.linspace(0, 1, 11)
    pops = open_systems.gurvitz_populations(10, 0.1, 1, grid)
    with pytest.raises(ValueError):
        open_systems.mixing_time(grid, pops, 1e-6)


def test_dimer_eigenvalues_example():
    ds = open_systems.DimerSpec(1.0, 1.0, 0.1, 0.0)
    suite = open_systems.dimer_suite(ds, np.array([0.0]))
    root = np.sqrt(1.0 - 0.0025)
    assert np.allclose(sorted(suite["eigenvalues"].real),
                       sorted([1 + root, 1 - root]), atol=1e-12)
    assert np.allclose(suite["eigenvalues"].imag, -0.05, atol=1e-12)
    # biorthonormality
    assert np.allclose(suite["left_states"] @ suite["right_states"], np.eye(2),
                       atol=1e-12)


def test_dimer_closed_forms_match_exponentials():
    e, v, gam = 1.0, 1.0, 0.1
    ds = open_systems.DimerSpec(e, v, gam, 0.0)
    grid = np.linspace(0, 10, 201)
    suite = open_systems.dimer_suite(ds, grid)
    h = np.array([[e, -v], [-v, e]], complex) - 1j * np.diag([0.0, gam])
    surv = np.array([abs(scipy.linalg.expm(-1j * h * t)[0, 0]) ** 2 for t in grid])
    assert np.abs(suite["survival_lambda0"] - surv).max() < 1e-9
    # Gamma = 0, lam > 0 population from the superoperator oracle
    ds = open_systems.DimerSpec(e, v, 0.0, 0.3)
    suite = open_systems.dimer_suite(ds, grid)
    h0 = np.array([[e, -v], [-v, e]])
    rho0 = np.array([[1.0, 0.0], [0.0, 0.0]], complex)
    spec = open_systems.LindbladSpec(0.3)
    pops = np.array([_oracle_rho(h0, spec, rho0, t)[0, 0].real for t in grid])
    assert np.abs(suite["pi11_gamma0"] - pops).max() < 1e-9


def test_dimer_limits():
    # Gamma = lam = 0: pure Rabi oscillation cos^2(Vt)
    ds = open_systems.DimerSpec(1.0, 1.0, 0.0, 0.0)
    grid = np.linspace(0, 5, 101)
    suite = open_systems.dimer_suite(ds, grid)
    assert np.abs(suite["survival_lambda0"] - np.cos(grid) ** 2).max() < 1e-12
    with pytest.raises(ValueError):  # overdamped regime has no closed form
        open_systems.dimer_suite(open_systems.DimerSpec(1.0, 0.1, 1.0, 0.0), grid)


def test_populations_csv(tmp_path):
    grid = np.linspace(0, 1, 3)
    pops = open_systems.gurvitz_populations(4, 0.1, 1, grid)
    path = tmp_path / "p.csv"
    open_systems.populations_to_csv(path, grid, pops)
    lines = path.read_text().strip().split("\n")
    assert lines[0] == "t,rho_11,rho_22,rho_33,rho_44,trace"
    assert len(lines) == 4
