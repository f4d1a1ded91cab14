"""Scenario runner CLI.

``qwalk run <config>...`` executes declarative scenario configs (JSON, or
TOML as an alternate syntax for the same schema) and writes delimited data
files, rendered figures, and a manifest into the output directory.
``qwalk list`` prints the scenario catalog; ``qwalk check <scenario>`` runs
a scenario in self-test mode and exits nonzero when a tolerance fails.

Exit codes: 0 ok, 1 tolerance failure, 2 configuration error.  The
environment variable QWALK_THREADS caps scenario-level parallelism.
All randomness is driven by explicit seeds in the config (every random
scenario has a ``seed`` parameter with a documented default).
"""

from __future__ import annotations

import concurrent.futures
import hashlib
import json
import os
import sys

import click
import jsonschema
import numpy as np
import scipy

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

from . import __version__, disorder, dynamics, graphs, open_systems, phase_space, \
    spectral, trapping  # noqa: E402

CONFIG_SCHEMA = {
    "type": "object",
    "required": ["scenario"],
    "additionalProperties": False,
    "properties": {
        "scenario": {"type": "string"},
        "params": {"type": "object"},
        "output_dir": {"type": "string"},
    },
}


class ConfigError(Exception):
    pass


class ToleranceError(Exception):
    pass


def _merge_params(name: str, overrides: dict) -> dict:
    defaults = dict(SCENARIOS[name]["defaults"])
    unknown = set(overrides) - set(defaults)
    if unknown:
        raise ConfigError(f"unknown parameters for {name}: {sorted(unknown)}")
    defaults.update(overrides)
    return defaults


def _fig(path, xs, ys, labels, xlabel, ylabel, title, logx=False, logy=False):
    fig, ax = plt.subplots(figsize=(6, 4))
    for x, y, lab in zip(xs, ys, labels):
        ax.plot(x, y, label=lab)
    if logx:
        ax.set_xscale("log")
    if logy:
        ax.set_yscale("log")
    ax.set_xlabel(xlabel)
    ax.set_ylabel(ylabel)
    ax.set_title(title)
    if labels and labels[0]:
        ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=110)
    plt.close(fig)


def _heat(path, w, title):
    fig, ax = plt.subplots(figsize=(5, 4))
    vmax = np.abs(w).max()
    im = ax.imshow(w.T, origin="lower", aspect="auto", cmap="RdBu_r",
                   vmin=-vmax, vmax=vmax)
    ax.set_xlabel("position x")
    ax.set_ylabel("momentum index")
    ax.set_title(title)
    fig.colorbar(im, ax=ax)
    fig.tight_layout()
    fig.savefig(path, dpi=110)
    plt.close(fig)


def _matrix_csv(path, mat, header):
    with open(path, "w") as fh:
        fh.write(header + "\n")
        for row in np.atleast_2d(mat):
            fh.write(",".join(f"{v:.17g}" for v in np.atleast_1d(row)) + "\n")


# ---------------------------------------------------------------------------
# scenario implementations: each returns a list of (label, ok, detail)
# ---------------------------------------------------------------------------


def _run_ring_lta(p, out):
    checks = []
    for n in p["sizes"]:
        s = spectral.decompose_symmetric(graphs.coupling_matrix(graphs.ring(n)))
        lta = dynamics.long_time_average(s)
        _matrix_csv(os.path.join(out, f"chi_ring_{n}.csv"), lta.chi,
                    ",".join(f"k{j+1}" for j in range(n)))
        if n % 2 == 1:
            ref = np.full((n, n), (n - 1) / n ** 2)
            np.fill_diagonal(ref, (2 * n - 1) / n ** 2)
        else:
            ref = np.full((n, n), (n - 2) / n ** 2)
            for j in range(n):
                ref[j, j] = ref[(j + n // 2) % n, j] = 2 * (n - 1) / n ** 2
        dev = np.abs(lta.chi - ref).max()
        checks.append((f"ring N={n} limiting averages match closed form",
                       dev < 1e-10, f"max dev {dev:.2e}"))
    _fig(os.path.join(out, "chi_profile.png"),
         [np.arange(1, p["sizes"][0] + 1)],
         [dynamics.long_time_average(spectral.decompose_symmetric(
             graphs.coupling_matrix(graphs.ring(p["sizes"][0])))).chi[:, 0]],
         [""], "node", "chi(k,1)", "ring long-time averages")
    return checks


def _run_star_return(p, out):
    n = p["n"]
    s = spectral.decompose_symmetric(graphs.coupling_matrix(graphs.star(n)))
    grid = dynamics.time_grid(p["t_max"])
    pi = dynamics.propagate_quantum(s, 1, grid).values[0]
    closed = (n * n - 2 * n + 2) / n ** 2 + (2 * (n - 1) / n ** 2) * np.cos(n * grid)
    dynamics.series_to_csv(os.path.join(out, "star_return.csv"), grid,
                           {"pi_11": pi, "closed_form": closed})
    _fig(os.path.join(out, "star_return.png"), [grid, grid], [pi, closed],
         ["numeric", "closed form"], "t", "return probability",
         f"hub return probability, star N={n}")
    dev = np.abs(pi - closed).max()
    rev = dynamics.propagate_quantum(s, 1, np.array([2 * np.pi / n])).values[0, 0]
    return [("hub return matches closed form", dev < 1e-10, f"max dev {dev:.2e}"),
            ("full revival at t=2*pi/N", abs(rev - 1) < 1e-8, f"1-pi {1-rev:.2e}")]


def _run_transport_efficiency(p, out):
    n = p["n"]
    s = spectral.closed_spectrum("ring", n=n)
    grid = np.geomspace(p["t_min"], p["t_max"], 400)
    pc = dynamics.average_return(s, "classical", grid)
    pq = dynamics.average_return(s, "quantum_lower_bound", grid)
    dynamics.series_to_csv(os.path.join(out, "average_return.csv"), grid,
                           {"classical": pc, "quantum_lower_bound": pq})
    _fig(os.path.join(out, "average_return.png"), [grid, grid], [pc, pq],
         ["classical", "quantum lower bound"], "t", "mean return",
         f"transport efficiency, ring N={n}", logx=True, logy=True)
    fc = dynamics.powerlaw_fit(grid, pc, (1.0, 100.0))
    fq = dynamics.powerlaw_fit(grid, pq, (1.0, 100.0), envelope=True)
    return [("classical decay exponent -1/2", abs(fc.exponent + 0.5) < 0.05,
             f"slope {fc.exponent:.3f}"),
            ("quantum envelope exponent -1", abs(fq.exponent + 1.0) < 0.1,
             f"slope {fq.exponent:.3f}")]


def _run_dsg_chi_bound(p, out):
    rows, checks = [], []
    for g in p["generations"]:
        closed = dynamics.chi_bar_lb_dsg(g)
        sizes = np.array([m for _, m in spectral.dsg_degeneracies(g)])
        counted = float((sizes ** 2).sum() / 3.0 ** (2 * g))
        rows.append((g, closed, counted))
        checks.append((f"generation {g} bound matches degeneracy count",
                       abs(closed - counted) < 1e-12, f"dev {abs(closed-counted):.2e}"))
    _matrix_csv(os.path.join(out, "dsg_chi_bound.csv"),
                np.array(rows), "generation,closed_form,degeneracy_count")
    gs = [r[0] for r in rows]
    _fig(os.path.join(out, "dsg_chi_bound.png"), [gs, gs],
         [[r[1] for r in rows], [1 / 14.0] * len(rows)],
         ["lower bound", "1/14 limit"], "generation", "chi-bar lower bound",
         "dual Sierpinski gasket bound")
    checks.append(("bound decreases toward 1/14",
                   all(a > b > 1 / 14.0 for a, b in zip([r[1] for r in rows],
                                                        [r[1] for r in rows][1:])),
                   f"values {[round(r[1], 6) for r in rows]}"))
    return checks


def _run_lattice_asymmetry(p, out):
    rows, checks = [], []
    for n in p["open_sizes"]:
        g = graphs.lattice2d(n, n)
        s = spectral.decompose_symmetric(graphs.coupling_matrix(g))
        col = dynamics.lta_column(s, 1)
        asym = col[0] - col[n * n - 1]
        rows.append((n, 0, asym))
    for n in range(p["cyl_min"], p["cyl_max"] + 1):
        g = graphs.lattice2d(p["cyl_m"], n, periodic_x=True)
        s = spectral.decompose_symmetric(graphs.coupling_matrix(g))
        col = dynamics.lta_column(s, 1)
        asym = col[0] - col[n - 1]
        rows.append((n, 1, asym))
    _matrix_csv(os.path.join(out, "asymmetry.csv"), np.array(rows),
                "size,cylinder,asymmetry")
    open_zero = [r for r in rows if not r[1] and r[0] in (5, 14, 23)]
    open_nz = [r for r in rows if not r[1] and r[0] in (6, 15, 24)]
    cyl = {int(r[0]): r[2] for r in rows if r[1]}
    nz_set = sorted(n for n, v in cyl.items() if abs(v) > 1e-6)
    checks.append(("open squares 5/14/23 symmetric",
                   all(abs(r[2]) < 1e-10 for r in open_zero),
                   f"max {max(abs(r[2]) for r in open_zero):.2e}"))
    checks.append(("open squares 6/15/24 asymmetric",
                   all(abs(r[2]) > 1e-6 for r in open_nz),
                   f"min {min(abs(r[2]) for r in open_nz):.2e}"))
    checks.append((f"cylinder (M={p['cyl_m']}) asymmetric exactly at 10,15,30",
                   nz_set == [10, 15, 30], f"found {nz_set}"))
    _fig(os.path.join(out, "asymmetry.png"),
         [[r[0] for r in rows if r[1]]], [[abs(r[2]) for r in rows if r[1]]],
         [""], "open length N", "|asymmetry|", "cylinder corner asymmetry",
         logy=False)
    return checks


def _run_glued_cayley(p, out):
    g = p["generations"]
    graph = graphs.glued_cayley(g)
    part = graphs.glued_cayley_partition(g)
    cm = graphs.collapse_clusters(graph, part)
    lam, q = np.linalg.eigh(cm.matrix)
    grid = dynamics.time_grid(p["t_max"])
    amp = (q[-1] * q[0]) @ np.exp(-1j * np.outer(lam, grid))
    far = np.abs(amp) ** 2
    dynamics.series_to_csv(os.path.join(out, "collapsed_transport.csv"), grid,
                           {"far_cluster_probability": far})
    _fig(os.path.join(out, "collapsed_transport.png"), [grid], [far], [""],
         "t", "probability", "glued-Cayley collapsed far-cluster transport")
    return [("far-cluster transfer exceeds 0.3 before t=40",
             float(far.max()) > 0.3, f"max {far.max():.3f}"),
            ("collapsed matrix is tridiagonal",
             np.abs(np.triu(cm.matrix, 2)).max() < 1e-12, "ok")]


def _run_dendrimer_clusters(p, out):
    checks = []
    rows = []
    for (f, g, start, expect) in p["cases"]:
        graph = graphs.dendrimer(f, g)
        s = spectral.decompose_symmetric(graphs.coupling_matrix(graph))
        col = dynamics.lta_column(s, start)
        clusters = dynamics.cluster_lps(col, tol=p["tol"])
        rows.append((f, g, start, len(clusters)))
        checks.append((f"dendrimer f={f} G={g} start {start}: {expect} clusters",
                       len(clusters) == expect, f"found {len(clusters)}"))
    _matrix_csv(os.path.join(out, "cluster_counts.csv"), np.array(rows),
                "functionality,generations,start_node,cluster_count")
    return checks


def _run_long_range_spectrum(p, out):
    n = p["n"]
    # eigenvalue-only circulant band (Bloch vectors would need N^2 memory)
    theta = 2 * np.pi * np.arange(n) / n
    r_max = n // 2
    r = np.arange(1, r_max + 1)
    w = r.astype(float) ** -2.0
    if n % 2 == 0:
        w[-1] *= 0.5
    eigs = np.sort((w[None, :] * (2 - 2 * np.cos(np.outer(theta, r)))).sum(axis=1))
    s = spectral.Spectrum(eigs, None, n)
    spectral.spectrum_to_csv(s, os.path.join(out, "spectrum.csv"))

    def cdf(e):
        e = np.clip(e, 0.0, np.pi ** 2 / 2)
        return 1.0 - np.sqrt(np.clip(1.0 - 2.0 * e / np.pi ** 2, 0.0, 1.0))

    ks = spectral.kolmogorov_distance(eigs, cdf)
    _fig(os.path.join(out, "spectrum_cdf.png"),
         [eigs, eigs], [np.arange(1, n + 1) / n, cdf(eigs)],
         ["empirical", "limit law"], "E", "CDF",
         "long-range ring integrated density of states")
    return [("KS distance to square-root limit law below 0.05",
             ks < 0.05, f"KS {ks:.4f}")]


def _run_spectral_dimension(p, out):
    n = p["n"]
    eigs = 2.0 - 2.0 * np.cos(2 * np.pi * np.arange(n) / n)
    hist = spectral.dos_histogram(eigs, 60, slope_window=(1e-4, 1e-1))
    _matrix_csv(os.path.join(out, "dos.csv"),
                np.column_stack([hist.bin_edges[:-1], hist.mass]),
                "bin_left,mass")
    _fig(os.path.join(out, "dos.png"), [hist.bin_edges[:-1]], [hist.mass],
         [""], "E", "mass", f"ring density of states, N={n}")
    nu = hist.slope
    d_s = 2 * (1 + nu)
    return [("low-energy density exponent -1/2", abs(nu + 0.5) < 0.05,
             f"nu {nu:.3f}, spectral dimension {d_s:.3f}")]


def _run_line_traps(p, out):
    n, gam = p["n"], p["gamma"]
    h0 = graphs.coupling_matrix(graphs.line(n))
    bs = spectral.decompose_biorthogonal(
        trapping.trap_hamiltonian(h0, trapping.TrapSpec((1, n), gam)))
    gs = trapping.GammaSpectrum(np.sort(bs.gammas), "exact_biorth", gam, 2)
    fit = trapping.gamma_scaling_fit(gs, tuple(p["fit_window"]))
    spectral.spectrum_to_csv(bs, os.path.join(out, "gamma_spectrum.csv"))
    grid = np.geomspace(0.1, p["t_max"], 500)
    sv = trapping.survival(bs, (1, n), grid, "exact")
    dynamics.series_to_csv(os.path.join(out, "survival.csv"), grid,
                           {"survival": sv.values})
    pl = dynamics.powerlaw_fit(grid, sv.values, (10.0, 500.0))
    _fig(os.path.join(out, "survival.png"), [grid], [sv.values], [""],
         "t", "survival", f"end-trapped chain N={n}", logx=True, logy=True)
    _fig(os.path.join(out, "gamma_spectrum.png"),
         [np.arange(1, n + 1)], [gs.gammas], [""], "level index", "gamma",
         "trap-induced decay rates", logx=True, logy=True)
    return [("decay-rate scaling exponent 1.865 +- 0.02",
             abs(fit.exponent - 1.865) < 0.02, f"mu {fit.exponent:.4f}"),
            ("intermediate survival power law -1/mu",
             abs(pl.exponent + 1 / fit.exponent) < 0.05,
             f"slope {pl.exponent:.3f} vs {-1/fit.exponent:.3f}")]


def _run_ring_dark_states(p, out):
    n, gam = p["n"], p["gamma"]
    checks, rows = [], []
    for m in p["trap_counts"]:
        traps = tuple(range(1, n + 1, n // m))
        bs = spectral.decompose_biorthogonal(trapping.trap_hamiltonian(
            graphs.coupling_matrix(graphs.ring(n)), trapping.TrapSpec(traps, gam)))
        count, plateau = trapping.dark_state_count(n, m)
        exact_zero = int((bs.gammas < 1e-10).sum())
        tail = trapping.survival(bs, traps, np.array([p["t_plateau"]]), "exact").values[0]
        rows.append((m, count, exact_zero, plateau, tail))
        checks.append((f"M={m}: dark-state count {count}", exact_zero == count,
                       f"exact zeros {exact_zero}"))
        checks.append((f"M={m}: plateau {plateau:.6f}",
                       abs(tail - plateau) / plateau < 1e-2,
                       f"survival {tail:.6f}"))
    _matrix_csv(os.path.join(out, "dark_states.csv"), np.array(rows),
                "n_traps,predicted_count,exact_zero_count,plateau,late_survival")
    return checks


def _run_trap_perturbation(p, out):
    gam = p["gamma"]
    checks = []
    for name, g, traps in [("line", graphs.line(p["n"]), (1, p["n"])),
                           ("ring", graphs.ring(p["n"]), (1,))]:
        h0 = graphs.coupling_matrix(g)
        s0 = spectral.decompose_symmetric(h0)
        pg = np.sort(trapping.perturbative_gammas(s0, traps, gam).gammas)
        bs = spectral.decompose_biorthogonal(
            trapping.trap_hamiltonian(h0, trapping.TrapSpec(traps, gam)))
        ex = np.sort(np.clip(bs.gammas, 0.0, None))
        bright = ex > 1e-6 * gam
        rel = np.abs(pg[bright] - ex[bright]) / ex[bright]
        trace = abs(ex.sum() - gam * len(traps))
        _matrix_csv(os.path.join(out, f"gammas_{name}.csv"),
                    np.column_stack([pg, ex]), "perturbative,exact")
        checks.append((f"{name}: perturbative rates within 1e-2",
                       rel.max() < 1e-2, f"max rel {rel.max():.2e}"))
        checks.append((f"{name}: rate sum equals Gamma times trap count",
                       trace < 1e-8, f"dev {trace:.2e}"))
    return checks


def _run_random_traps(p, out):
    grid = np.geomspace(p["t_min"], p["t_max"], p["t_samples"])
    tt, mean_pi, bound, eta, mean_gam = trapping.random_trap_ensemble(
        p["n"], p["gamma"], p["realizations"], p["seed"], grid,
        fit_window=tuple(p["fit_window"]))
    dynamics.series_to_csv(os.path.join(out, "ensemble_survival.csv"), grid,
                           {"mean_survival": mean_pi, "jensen_bound": bound})
    _fig(os.path.join(out, "ensemble_survival.png"), [grid, grid],
         [mean_pi, bound], ["ensemble mean", "Jensen bound"], "t", "survival",
         "random geometric graphs, one trap", logx=True, logy=True)
    viol = float((mean_pi - bound).min())
    return [("Jensen lower bound holds pointwise", viol >= -1e-12,
             f"min margin {viol:.2e}"),
            ("survival fit produced", eta is not None,
             f"eta {getattr(eta, 'exponent', None)}")]


def _run_disorder_localization(p, out):
    n, r = p["n"], p["realizations"]
    h0 = graphs.coupling_matrix(graphs.ring(n))
    start = n // 2
    rows = []
    for delta in p["strengths"]:
        def task(seed, _ri, d=delta):
            h = disorder.sample_disorder(h0, disorder.DisorderSpec(d, p["kind"]), seed)
            lam, q = np.linalg.eigh(h)
            return dynamics.lta_column(spectral.Spectrum(lam, q, n), start)[start - 1]
        mean = float(disorder.ensemble_average(
            task, disorder.EnsembleSpec(r, p["seed"])))
        rows.append((delta, mean))
    _matrix_csv(os.path.join(out, "chi_vs_delta.csv"), np.array(rows),
                "delta,mean_chi_jj")
    _fig(os.path.join(out, "chi_vs_delta.png"), [[r0[0] for r0 in rows]],
         [[r0[1] for r0 in rows]], [""], "disorder strength", "mean chi_jj",
         "static-disorder localization")
    vals = [r0[1] for r0 in rows]
    return [("start-node limiting average grows with disorder",
             all(a < b for a, b in zip(vals, vals[1:])),
             f"values {[round(v, 4) for v in vals]}")]


def _run_dynamic_disorder(p, out):
    n = p["n"]
    h0 = graphs.coupling_matrix(graphs.ring(n))
    grid = np.geomspace(p["t_min"], p["t_max"], p["t_samples"])

    def task(seed, _ri):
        f = disorder.dynamic_disorder_run(h0, p["delta"], p["resample_dt"],
                                          grid, seed, start_node=n // 2)
        return dynamics.msd(f, "ring", verbatim_prefactor=False)

    m = disorder.ensemble_average(task, disorder.EnsembleSpec(p["realizations"],
                                                              p["seed"]))
    f0 = disorder.dynamic_disorder_run(h0, 0.0, p["resample_dt"],
                                       grid, p["seed"], start_node=n // 2)
    m0 = dynamics.msd(f0, "ring", verbatim_prefactor=False)
    dynamics.series_to_csv(os.path.join(out, "msd.csv"), grid,
                           {"disordered": m, "clean": m0})
    _fig(os.path.join(out, "msd.png"), [grid, grid], [m, m0],
         ["dynamic disorder", "clean"], "t", "mean square displacement",
         "ballistic-to-diffusive crossover", logx=True, logy=True)
    sl_clean = np.polyfit(np.log(grid), np.log(m0), 1)[0]
    sl_dis = np.polyfit(np.log(grid[-p["t_samples"] // 2:]),
                        np.log(m[-p["t_samples"] // 2:]), 1)[0]
    return [("clean walk spreads ballistically", abs(sl_clean - 2) < 0.1,
             f"slope {sl_clean:.3f}"),
            ("disordered late-time slope near diffusive", abs(sl_dis - 1) < 0.3,
             f"slope {sl_dis:.3f}")]


def _run_wigner_ring(p, out):
    checks = []
    for n in p["sizes"]:
        s = spectral.closed_spectrum("ring", n=n)
        j = n // 2
        wf = phase_space.wigner_evolution(s, j, p["times"])
        wc = phase_space.wigner_ring_closed(n, j, p["times"])
        dev = np.abs(wf.values - wc.values).max()
        checks.append((f"N={n}: closed form matches generic definition",
                       dev < 1e-10, f"max dev {dev:.2e}"))
        lim = phase_space.wigner_limiting(n, j)
        lim_s = phase_space.wigner_limiting_spectral(s, j)
        devl = np.abs(lim - lim_s).max()
        checks.append((f"N={n}: limiting field matches closed form",
                       devl < 1e-10, f"max dev {devl:.2e}"))
        phase_space.wigner_to_csv(os.path.join(out, f"wigner_{n}_t{int(p['times'][-1])}.csv"),
                                  wf.values[-1])
        _heat(os.path.join(out, f"wigner_{n}.png"), wf.values[-1],
              f"Wigner function, N={n}, t={p['times'][-1]}")
    return checks


def _run_wigner_disorder(p, out):
    n = p["n"]
    mean, lim = phase_space.wigner_ensemble(
        n, n // 2, disorder.DisorderSpec(p["delta"], p["kind"]),
        p["realizations"], p["seed"], p["times"])
    phase_space.wigner_to_csv(os.path.join(out, "wigner_mean.csv"), mean.values[-1])
    _heat(os.path.join(out, "wigner_mean.png"), mean.values[-1],
          f"disorder-averaged Wigner function, N={n}")
    j = n // 2
    core = [(j - 1 + d) % n for d in (-2, -1, 0, 1, 2)]
    return [("averaged field localizes at the start node",
             float(mean.values[-1][j - 1].max()) == float(mean.values[-1].max()),
             "peak at start"),
            ("localized core strictly positive",
             float(mean.values[-1][core].min()) > 0.0,
             f"core min {mean.values[-1][core].min():.2e}")]


def _run_ring_decoherence(p, out):
    n, lam = p["n"], p["rate"]
    grid = np.linspace(0, p["t_max"], p["t_samples"])
    pops = open_systems.gurvitz_populations(n, lam, 1, grid)
    open_systems.populations_to_csv(os.path.join(out, "populations.csv"),
                                    grid, pops)
    _fig(os.path.join(out, "populations.png"), [grid] * 3,
         [pops[:, 0], pops[:, n // 2], np.full(len(grid), 1 / n)],
         ["start node", "opposite node", "1/N"], "t", "population",
         f"dephased ring N={n}")
    tm = open_systems.mixing_time(grid, pops, p["epsilon"])
    bound = open_systems.mixing_bound_ring(n, lam, p["epsilon"])
    rho0 = np.zeros((n, n), complex)
    rho0[0, 0] = 1.0
    snaps = open_systems.lindblad_propagate(
        graphs.coupling_matrix(graphs.ring(n)).matrix,
        open_systems.LindbladSpec(lam), rho0, np.linspace(0, 10, 21))
    diags = np.array([np.diag(s.rho).real for s in snaps])
    closed = open_systems.gurvitz_populations(n, lam, 1, np.linspace(0, 10, 21))
    dev = np.abs(diags - closed).max()
    return [("mixing time below analytic bound", tm < bound,
             f"t_mix {tm:.2f} < {bound:.2f}"),
            ("closed-form populations match integrator to 1e-6",
             dev < 1e-6, f"max dev {dev:.2e}")]


def _run_hypercycle_mixing(p, out):
    checks, rows = [], []
    grid = np.linspace(0, p["t_max"], p["t_samples"])
    for n, d in p["cases"]:
        pops = open_systems.hypercycle_populations(n, d, p["rate"], grid)
        tm = open_systems.mixing_time(grid, pops, p["epsilon"])
        bound = open_systems.mixing_bound_hypercycle(n, d, p["rate"], p["epsilon"])
        rows.append((n, d, tm, bound))
        checks.append((f"torus N={n} d={d}: mixing below bound", tm < bound,
                       f"{tm:.2f} < {bound:.2f}"))
    _matrix_csv(os.path.join(out, "mixing_times.csv"), np.array(rows),
                "n,dimension,mixing_time,upper_bound")
    return checks


def _run_dimer_traps(p, out):
    grid = np.linspace(0, p["t_max"], p["t_samples"])
    ds = open_systems.DimerSpec(p["energy"], p["coupling"], p["gamma"], p["rate"])
    suite = open_systems.dimer_suite(ds, grid)
    h0 = np.array([[p["energy"], -p["coupling"]], [-p["coupling"], p["energy"]]])
    rho0 = np.array([[1.0, 0.0], [0.0, 0.0]], complex)
    snap_l0 = open_systems.lindblad_propagate(
        h0, open_systems.LindbladSpec(0.0, (2,), p["gamma"]), rho0, grid)
    surv = np.array([s.rho[0, 0].real for s in snap_l0])
    snap_g0 = open_systems.lindblad_propagate(
        h0, open_systems.LindbladSpec(p["rate"]), rho0, grid)
    pops = np.array([s.rho[0, 0].real for s in snap_g0])
    open_systems.populations_to_csv(
        os.path.join(out, "dimer.csv"), grid,
        np.column_stack([surv, pops]),
        extra={"survival_closed": suite["survival_lambda0"],
               "population_closed": suite["pi11_gamma0"],
               "combined_approx": suite["combined_approx"]})
    _fig(os.path.join(out, "dimer.png"), [grid] * 2,
         [surv, suite["survival_lambda0"]], ["integrator", "closed form"],
         "t", "start-node population", "trapped dimer")
    d1 = np.abs(surv - suite["survival_lambda0"]).max()
    d2 = np.abs(pops - suite["pi11_gamma0"]).max()
    return [("trap-only survival matches closed form to 1e-8",
             d1 < 1e-8, f"max dev {d1:.2e}"),
            ("environment-only population matches closed form to 1e-6",
             d2 < 1e-6, f"max dev {d2:.2e}")]


def _run_sequential_traps(p, out):
    checks, rows = [], []
    for n in p["sizes"]:
        m = n // 2
        traps = tuple(range(1, m + 1))
        bs = spectral.decompose_biorthogonal(trapping.trap_hamiltonian(
            graphs.coupling_matrix(graphs.ring(n)),
            trapping.TrapSpec(traps, p["gamma"])))
        grid = np.linspace(0.1, p["t_max"], 200)
        sv = trapping.survival(bs, traps, grid, "exact")
        slope = np.polyfit(grid, np.log(sv.values), 1)[0]
        pred = -2.0 * p["gamma"] * m / n
        rows.append((n, slope, pred))
        checks.append((f"N={n}: decay rate within 5% of closed form",
                       abs(slope / pred - 1) < 0.05,
                       f"slope {slope:.5f} vs {pred:.5f}"))
    _matrix_csv(os.path.join(out, "sequential_slopes.csv"), np.array(rows),
                "n,fitted_slope,predicted_slope")
    return checks


def _run_vicsek_traps(p, out):
    grid = np.linspace(0, p["t_max"], p["t_samples"])
    sv, plateau = trapping.vicsek_trap_survival(p["f"], p["g"], p["gamma"], grid)
    dynamics.series_to_csv(os.path.join(out, "vicsek_survival.csv"), grid,
                           {"survival": sv.values})
    _fig(os.path.join(out, "vicsek_survival.png"), [grid, grid],
         [sv.values, np.full(len(grid), plateau)], ["survival", "plateau"],
         "t", "survival", f"Vicsek fractal f={p['f']} g={p['g']}, central trap")
    tail = float(sv.values[-1])
    return [("survival settles on the degeneracy plateau",
             abs(tail - plateau) < 1e-6, f"tail {tail:.6f} vs {plateau:.6f}")]


def _run_msd_ring(p, out):
    s = spectral.closed_spectrum("ring", n=p["n"])
    grid = np.geomspace(p["t_min"], p["t_max"], 200)
    f = dynamics.propagate_quantum(s, p["n"] // 2, grid)
    m = dynamics.msd(f, "ring", verbatim_prefactor=False)
    dynamics.series_to_csv(os.path.join(out, "msd.csv"), grid, {"msd": m})
    _fig(os.path.join(out, "msd.png"), [grid], [m], [""], "t",
         "mean square displacement", "coherent ring walk", logx=True, logy=True)
    slope = np.polyfit(np.log(grid), np.log(m), 1)[0]
    return [("coherent spreading is ballistic", abs(slope - 2) < 0.05,
             f"slope {slope:.3f}")]


def _run_participation(p, out):
    n, r = p["n"], p["realizations"]
    rows = []
    base = graphs.coupling_matrix(graphs.ring(n))
    for b in p["extra_bonds"]:
        def task(seed, _ri, bb=b):
            g = graphs.small_world(n, bb, seed)
            s = spectral.decompose_symmetric(graphs.coupling_matrix(g))
            return dynamics.long_time_average(s).chi_bar
        mean = float(disorder.ensemble_average(
            task, disorder.EnsembleSpec(r, p["seed"])))
        rows.append((b, mean))
    _matrix_csv(os.path.join(out, "chi_bar_vs_bonds.csv"), np.array(rows),
                "extra_bonds,mean_chi_bar")
    _fig(os.path.join(out, "chi_bar_vs_bonds.png"), [[r0[0] for r0 in rows]],
         [[r0[1] for r0 in rows]], [""], "extra bonds", "mean chi-bar",
         "small-world localization trend")
    vals = [r0[1] for r0 in rows]
    s_ring = spectral.decompose_symmetric(base)
    ring_val = dynamics.long_time_average(s_ring).chi_bar
    return [("mean chi-bar increases with added bonds",
             all(a < b for a, b in zip(vals, vals[1:])),
             f"values {[round(v, 4) for v in vals]}"),
            ("clean even ring baseline (2N-2)/N^2",
             abs(ring_val - (2 * n - 2) / n ** 2) < 1e-12,
             f"chi-bar {ring_val:.6f}")]


def _run_revivals(p, out):
    checks = []
    rows = []
    for n in p["sizes"]:
        s = spectral.closed_spectrum("ring", n=n)
        # commensurate ring spectra are 2*pi-periodic, so t = 2*pi is a
        # full revival exactly when one exists; sample it exactly
        grid = np.unique(np.concatenate([dynamics.time_grid(p["t_max"]),
                                         [2 * np.pi]]))
        pi = dynamics.propagate_quantum(s, 1, grid).values[0]
        exact = n in dynamics.full_revival_sizes()
        peak = float(pi[1:].max())
        rows.append((n, int(exact), peak))
        if exact:
            checks.append((f"N={n}: exact full revival", peak > 1 - 1e-8,
                           f"peak {peak:.10f}"))
        else:
            checks.append((f"N={n}: no exact revival", peak < 1 - 1e-8,
                           f"peak {peak:.10f}"))
    _matrix_csv(os.path.join(out, "revivals.csv"), np.array(rows),
                "n,exact_revival,max_return")
    return checks


SCENARIOS = {
    "ring-lta": {
        "description": "Long-time transition-probability averages on rings, "
                       "including the even-N antipodal twin peak.",
        "defaults": {"sizes": [20, 21]},
        "run": _run_ring_lta,
    },
    "star-return": {
        "description": "Hub return probability and periodic full revivals on "
                       "star graphs.",
        "defaults": {"n": 51, "t_max": 20.0},
        "run": _run_star_return,
    },
    "transport-efficiency": {
        "description": "Node-averaged return decay: classical t^-1/2 vs "
                       "coherent t^-1 envelope on a large ring.",
        "defaults": {"n": 1000, "t_min": 0.1, "t_max": 200.0},
        "run": _run_transport_efficiency,
    },
    "revivals": {
        "description": "Exact versus partial wave-packet revivals across "
                       "small ring sizes.",
        "defaults": {"sizes": [3, 4, 5, 6, 7], "t_max": 50.0},
        "run": _run_revivals,
    },
    "msd-ring": {
        "description": "Ballistic mean-square-displacement growth of the "
                       "coherent ring walk.",
        "defaults": {"n": 400, "t_min": 1.0, "t_max": 50.0},
        "run": _run_msd_ring,
    },
    "dsg-chi-bound": {
        "description": "Degeneracy lower bound on the mean long-time average "
                       "for the dual Sierpinski gasket, limit 1/14.",
        "defaults": {"generations": [3, 4, 5, 6]},
        "run": _run_dsg_chi_bound,
    },
    "lattice-asymmetry": {
        "description": "Corner-to-corner limiting-probability asymmetry on "
                       "open squares and cylinders.",
        "defaults": {"open_sizes": [5, 6, 14, 15, 23, 24], "cyl_m": 15,
                     "cyl_min": 4, "cyl_max": 30},
        "run": _run_lattice_asymmetry,
    },
    "glued-cayley-transport": {
        "description": "Fast root-to-root transport through a glued Cayley "
                       "tree, computed on the collapsed cluster chain.",
        "defaults": {"generations": 3, "t_max": 40.0},
        "run": _run_glued_cayley,
    },
    "dendrimer-clusters": {
        "description": "Grouping of limiting probabilities into symmetry "
                       "clusters on dendrimers.",
        "defaults": {"cases": [[3, 5, 94, 18], [3, 2, 1, 3]], "tol": 1e-10},
        "run": _run_dendrimer_clusters,
    },
    "long-range-spectrum": {
        "description": "Integrated density of states of the 1/R^2 long-range "
                       "ring versus its square-root limit law.",
        "defaults": {"n": 10000},
        "run": _run_long_range_spectrum,
    },
    "spectral-dimension": {
        "description": "Low-energy density-of-states exponent and spectral "
                       "dimension of the ring.",
        "defaults": {"n": 200000},
        "run": _run_spectral_dimension,
    },
    "line-traps": {
        "description": "Decay-rate spectrum and two-regime survival decay of "
                       "a chain with absorbing ends.",
        "defaults": {"n": 100, "gamma": 1.0, "fit_window": [10, 60],
                     "t_max": 20000.0},
        "run": _run_line_traps,
    },
    "ring-dark-states": {
        "description": "Trap-evading dark states on periodically trapped "
                       "rings and their survival plateaus.",
        "defaults": {"n": 300, "gamma": 0.01, "trap_counts": [10, 75],
                     "t_plateau": 50000.0},
        "run": _run_ring_dark_states,
    },
    "sequential-traps": {
        "description": "Uniform decay rates when half the ring is covered by "
                       "contiguous traps.",
        "defaults": {"sizes": [32, 64], "gamma": 0.001, "t_max": 1000.0},
        "run": _run_sequential_traps,
    },
    "trap-perturbation": {
        "description": "First-order perturbative decay rates versus exact "
                       "biorthogonal spectra at weak trapping.",
        "defaults": {"n": 100, "gamma": 1e-3},
        "run": _run_trap_perturbation,
    },
    "vicsek-traps": {
        "description": "Survival plateau from real degenerate eigenvalues on "
                       "a centrally trapped Vicsek fractal.",
        "defaults": {"f": 3, "g": 2, "gamma": 1.0, "t_max": 400.0,
                     "t_samples": 200},
        "run": _run_vicsek_traps,
    },
    "random-traps": {
        "description": "Ensemble survival and Jensen lower bound for random "
                       "geometric graphs with one trap.",
        "defaults": {"n": 100, "gamma": 1.0, "realizations": 50, "seed": 12345,
                     "t_min": 100.0, "t_max": 1e7, "t_samples": 50,
                     "fit_window": [1e3, 1e6]},
        "run": _run_random_traps,
    },
    "disorder-localization": {
        "description": "Growth of the start-node limiting average with static "
                       "disorder strength (Anderson-like localization).",
        "defaults": {"n": 100, "kind": "DOD", "realizations": 200,
                     "strengths": [0.025, 0.1, 0.25, 0.5], "seed": 99},
        "run": _run_disorder_localization,
    },
    "dynamic-disorder": {
        "description": "Ballistic-to-diffusive crossover under rapidly "
                       "redrawn diagonal disorder.",
        "defaults": {"n": 200, "delta": 0.5, "resample_dt": 0.25,
                     "t_min": 1.0, "t_max": 60.0, "t_samples": 40,
                     "realizations": 4, "seed": 5},
        "run": _run_dynamic_disorder,
    },
    "participation": {
        "description": "Mean long-time average versus added shortcut bonds "
                       "(eigenstate participation trend).",
        "defaults": {"n": 100, "extra_bonds": [1, 5, 20], "realizations": 50,
                     "seed": 17},
        "run": _run_participation,
    },
    "wigner-ring": {
        "description": "Discrete phase-space (Wigner) picture of ring walks: "
                       "closed form, marginals, long-time limits.",
        "defaults": {"sizes": [100, 101], "times": [0.0, 1.0, 20.0]},
        "run": _run_wigner_ring,
    },
    "wigner-disorder": {
        "description": "Localization of the disorder-averaged Wigner "
                       "function around the start node.",
        "defaults": {"n": 101, "delta": 0.5, "kind": "DOD",
                     "realizations": 200, "seed": 2024, "times": [20.0]},
        "run": _run_wigner_disorder,
    },
    "ring-decoherence": {
        "description": "Exact dephased-ring populations, mixing time, and its "
                       "analytic upper bound.",
        "defaults": {"n": 10, "rate": 0.1, "epsilon": 0.01, "t_max": 60.0,
                     "t_samples": 2401},
        "run": _run_ring_decoherence,
    },
    "hypercycle-mixing": {
        "description": "Mixing-time bounds on d-dimensional torus graphs "
                       "under uniform dephasing.",
        "defaults": {"cases": [[3, 2], [4, 2], [3, 3]], "rate": 0.1,
                     "epsilon": 0.01, "t_max": 120.0, "t_samples": 1201},
        "run": _run_hypercycle_mixing,
    },
    "dimer-traps": {
        "description": "Analytically solvable two-node system with trap and "
                       "environment coupling.",
        "defaults": {"energy": 1.0, "coupling": 1.0, "gamma": 0.1,
                     "rate": 0.3141592653589793, "t_max": 10.0,
                     "t_samples": 201},
        "run": _run_dimer_traps,
    },
}


# ---------------------------------------------------------------------------
# plumbing
# ---------------------------------------------------------------------------


def _load_config(path: str) -> dict:
    try:
        raw = open(path, "rb").read()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}")
    if path.endswith(".toml"):
        try:
            import tomllib as toml  # Python >= 3.11
        except ImportError:
            import tomli as toml
        try:
            cfg = toml.loads(raw.decode())
        except Exception as exc:
            raise ConfigError(f"invalid TOML in {path}: {exc}")
    else:
        try:
            cfg = json.loads(raw)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"invalid JSON in {path}: {exc}")
    try:
        jsonschema.validate(cfg, CONFIG_SCHEMA)
    except jsonschema.ValidationError as exc:
        raise ConfigError(f"config schema violation in {path}: {exc.message}")
    return cfg


def _execute(name: str, params: dict, out_dir: str) -> list:
    if name not in SCENARIOS:
        raise ConfigError(f"unknown scenario {name!r}; see `qwalk list`")
    merged = _merge_params(name, params)
    os.makedirs(out_dir, exist_ok=True)
    checks = SCENARIOS[name]["run"](merged, out_dir)
    canonical = json.dumps({"scenario": name, "params": merged}, sort_keys=True)
    manifest = {
        "scenario": name,
        "params": merged,
        "config_hash": hashlib.sha256(canonical.encode()).hexdigest(),
        "versions": {"qwalk": __version__, "numpy": np.__version__,
                     "scipy": scipy.__version__},
        "outputs": sorted(f for f in os.listdir(out_dir) if f != "manifest.json"),
        "checks": [{"label": c[0], "passed": bool(c[1]), "detail": c[2]}
                   for c in checks],
    }
    with open(os.path.join(out_dir, "manifest.json"), "w") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
    return checks


def _thread_cap() -> int:
    raw = os.environ.get("QWALK_THREADS", "")
    try:
        return max(1, int(raw))
    except ValueError:
        return max(1, os.cpu_count() or 1)


@click.group()
@click.version_option(__version__)
def main():
    """Continuous-time quantum/classical walk scenario runner."""


@main.command("list")
def list_cmd():
    """Print the scenario catalog."""
    for name in SCENARIOS:
        click.echo(f"{name:24s} {SCENARIOS[name]['description']}")


@main.command("run")
@click.argument("configs", nargs=-1, required=True,
                type=click.Path(exists=False))
def run_cmd(configs):
    """Run one or more scenario configs (JSON or TOML)."""
    try:
        jobs = []
        for path in configs:
            cfg = _load_config(path)
            out = cfg.get("output_dir",
                          os.path.splitext(os.path.basename(path))[0] + "_out")
            name = cfg["scenario"]
            if name not in SCENARIOS:
                raise ConfigError(f"unknown scenario {name!r}; see `qwalk list`")
            _merge_params(name, cfg.get("params", {}))
            jobs.append((name, cfg.get("params", {}), out))
    except ConfigError as exc:
        click.echo(f"config error: {exc}", err=True)
        sys.exit(2)
    failed = False
    with concurrent.futures.ThreadPoolExecutor(
            max_workers=min(len(jobs), _thread_cap())) as pool:
        futures = {pool.submit(_execute, *job): job for job in jobs}
        for fut in concurrent.futures.as_completed(futures):
            name = futures[fut][0]
            try:
                checks = fut.result()
            except ConfigError as exc:
                click.echo(f"config error: {exc}", err=True)
                sys.exit(2)
            for label, ok, detail in checks:
                status = "ok" if ok else "FAIL"
                click.echo(f"[{name}] {status:4s} {label} ({detail})")
                failed = failed or not ok
    sys.exit(1 if failed else 0)


@main.command("check")
@click.argument("scenario")
@click.option("--output", default=None, help="Output directory "
              "(default: <scenario>_check).")
def check_cmd(scenario, output):
    """Self-test one scenario; exit 1 if a tolerance fails."""
    out = output or f"{scenario.replace('/', '_')}_check"
    try:
        checks = _execute(scenario, {}, out)
    except ConfigError as exc:
        click.echo(f"config error: {exc}", err=True)
        sys.exit(2)
    failed = False
    for label, ok, detail in checks:
        status = "ok" if ok else "FAIL"
        click.echo(f"{status:4s} {label} ({detail})")
        failed = failed or not ok
    sys.exit(1 if failed else 0)


if __name__ == "__main__":
    main()
