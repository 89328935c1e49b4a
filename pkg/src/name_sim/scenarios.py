"""Scenario runner: dispatches solvers and writes trajectory CSVs.

Each figure scenario carries its bundled parameter preset (see config).  A
run writes one CSV per (solver, parameter) combination plus a manifest
recording the fully resolved configuration, the provenance of every value,
and the package version.
"""

from __future__ import annotations

import json
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import replace

import numpy as np

from . import __version__
from .bath import adiabatic_rates, bose_occupation, name_rates
from .bench import (
    compose_initial_state,
    integrate_bench,
    sample_bath_modes,
    system_initial_moments,
)
from .config import RunConfig
from .csvio import atomic_write_text, compare_trajectories, write_trajectory_csv
from .errors import ConfigError
from .gaussian import (
    GaussianStateParams,
    integrate_name,
    moments_from_params,
    params_from_moments,
)
from .propagation import (
    ObservableVector,
    attractor_observables,
    build_b_basis_map,
    coherence_measure,
    eigenoperator_coefficients,
    isolated_evolve,
    moments_to_observables,
    observables_at,
    observables_from_initial,
)
from .protocol import Protocol, alpha_at, omega_at, validity_report

__all__ = ["run_scenario", "compare_trajectories", "trajectory_grid"]


def resolve_initial(cfg: RunConfig):
    """(observables, Gaussian parameters) of the configured initial state."""
    coeffs = eigenoperator_coefficients(cfg.protocol, cfg.mass, cfg.units)
    bmap = build_b_basis_map(coeffs, cfg.protocol, cfg.mass, cfg.units)
    init = cfg.initial
    if "beta0" in init:
        params = GaussianStateParams(
            beta=float(init["beta0"]),
            gamma=complex(init.get("gamma0_re", 0.0), init.get("gamma0_im", 0.0)),
        )
        v0 = moments_to_observables(moments_from_params(params), bmap)
    else:
        v0 = ObservableVector(
            H=float(init["H0"]), L=float(init.get("L0", 0.0)), C=float(init.get("C0", 0.0))
        )
        params = params_from_moments(observables_from_initial(v0, bmap))
    return v0, params


def bench_time_grid(t_final: float, dt: float, stride: int) -> np.ndarray:
    """Exactly the sample times the fixed-step benchmark integrator emits."""
    n_steps = max(1, int(math.ceil(t_final / dt - 1e-9)))
    times = [0.0]
    for step in range(1, n_steps + 1):
        if step % stride == 0 or step == n_steps:
            times.append(step * dt if step < n_steps else t_final)
    return np.asarray(times)


def trajectory_grid(cfg: RunConfig) -> np.ndarray:
    if cfg.scenario in ("fig5", "bench"):
        return bench_time_grid(
            cfg.solver["bench_horizon"], cfg.solver["dt"], cfg.output["stride"]
        )
    return np.linspace(0.0, cfg.protocol.t_final, cfg.output["points"] + 1)


def _base_row(p, t, u):
    return {"t": t, "omega": omega_at(p, t)}


def name_rows(cfg: RunConfig, grid, g: float | None = None):
    bath = cfg.bath if g is None else replace(cfg.bath, g=g)
    p, m, u = cfg.protocol, cfg.mass, cfg.units
    _, params0 = resolve_initial(cfg)
    traj = integrate_name(
        params0, p, bath, grid, m=m, u=u,
        rtol=cfg.solver["rtol"], atol=cfg.solver["atol"],
        dt_max=cfg.solver["dt_max"],
        include_xi_sq=cfg.solver["include_xi_sq"],
        memory_correction=cfg.solver["memory_correction"],
    )
    rows = []
    for t in grid:
        t = float(t)
        v = observables_at(traj, p, m, t, u)
        st = traj.params_at(t)
        mom = moments_from_params(st)
        k = traj.rates_at(t)
        row = _base_row(p, t, u)
        row.update(
            H=v.H, L=v.L, C=v.C,
            coherence=coherence_measure(v, omega_at(p, t), u),
            beta=st.beta, gamma_re=st.gamma.real, gamma_im=st.gamma.imag,
            n=mom.n, k_down=k.down, k_up=k.up,
            solver="name", g=bath.g,
        )
        rows.append(row)
    return rows


def isolated_rows(cfg: RunConfig, grid):
    p, u = cfg.protocol, cfg.units
    v0, _ = resolve_initial(cfg)
    rows = []
    for t in grid:
        t = float(t)
        v = isolated_evolve(v0, p, t)
        row = _base_row(p, t, u)
        row.update(
            H=v.H, L=v.L, C=v.C,
            coherence=coherence_measure(v, omega_at(p, t), u),
            solver="isolated", g=0.0,
        )
        rows.append(row)
    return rows


def adiabatic_rows(cfg: RunConfig, grid):
    from .propagation import adiabatic_evolve

    p, m, u = cfg.protocol, cfg.mass, cfg.units
    v0, _ = resolve_initial(cfg)
    hw0 = u.hbar * p.omega0
    n0 = v0.H / hw0 - 0.5
    s0 = complex(-v0.L, v0.C) / hw0
    traj = adiabatic_evolve(
        n0, s0, p, cfg.bath, grid, m=m, u=u,
        rtol=cfg.solver["rtol"], atol=cfg.solver["atol"],
    )
    rows = []
    for i, t in enumerate(grid):
        t = float(t)
        v = traj.observables(i)
        k = adiabatic_rates(cfg.bath, p, t, m, u)
        row = _base_row(p, t, u)
        row.update(
            H=v.H, L=v.L, C=v.C,
            coherence=coherence_measure(v, omega_at(p, t), u),
            n=traj.n[i], k_down=k.down, k_up=k.up,
            solver="adiabatic", g=cfg.bath.g,
        )
        rows.append(row)
    return rows


def attractor_rows(cfg: RunConfig, grid, mu: float | None = None):
    p = cfg.protocol if mu is None else replace(cfg.protocol, mu=mu, segments=None)
    m, u = cfg.mass, cfg.units
    coeffs = eigenoperator_coefficients(p, m, u)
    rows = []
    for t in grid:
        t = float(t)
        v = attractor_observables(p, cfg.bath, t, m, u)
        k = name_rates(cfg.bath, p, coeffs, t, u=u,
                       include_xi_sq=cfg.solver["include_xi_sq"],
                       memory_correction=cfg.solver["memory_correction"])
        row = _base_row(p, t, u)
        row.update(
            H_attr=v.H, C_attr=v.C, L_attr=v.L,
            k_down=k.down, k_up=k.up,
            solver="attractor", g=cfg.bath.g,
        )
        rows.append(row)
    return rows


def exact_rows(cfg: RunConfig, grid):
    p, m, u = cfg.protocol, cfg.mass, cfg.units
    v0, _ = resolve_initial(cfg)
    modes = sample_bath_modes(cfg.bath, mass=m)
    sys0 = system_initial_moments(v0, p.omega0, m, u)
    state0 = compose_initial_state(
        modes, sys0, cfg.bath.temperature, cfg.solver["closure"], u
    )
    traj = integrate_bench(
        state0, modes, p, m,
        t_final=cfg.solver["bench_horizon"],
        dt=cfg.solver["dt"],
        closure=cfg.solver["closure"],
        tableau=cfg.solver["tableau"],
        record_every=cfg.output["stride"],
        coupling_prefactor=cfg.solver["coupling_prefactor"],
        u=u,
    )
    if len(traj.t) != len(grid) or not np.allclose(traj.t, grid, atol=1e-12):
        raise AssertionError("benchmark grid drifted from the shared output grid")
    rows = []
    for i, t in enumerate(traj.t):
        t = float(t)
        v = traj.observables(i)
        row = _base_row(p, t, u)
        row.update(
            H=v.H, L=v.L, C=v.C,
            coherence=coherence_measure(v, omega_at(p, t), u),
            solver="exact", g=cfg.bath.g,
        )
        rows.append(row)
    return rows


def _fmt_param(x: float) -> str:
    return f"{x:g}"


def _scenario_jobs(cfg: RunConfig, grid):
    scen = cfg.scenario
    jobs = []
    if scen == "fig1":
        for g in cfg.g_values or [cfg.bath.g]:
            jobs.append(
                (f"fig1_name_g{_fmt_param(g)}.csv",
                 lambda g=g: name_rows(cfg, grid, g=g))
            )
    elif scen == "fig2":
        jobs = [
            ("fig2_name.csv", lambda: name_rows(cfg, grid)),
            ("fig2_isolated.csv", lambda: isolated_rows(cfg, grid)),
            ("fig2_attractor.csv", lambda: attractor_rows(cfg, grid)),
        ]
    elif scen == "fig3":
        for g in cfg.g_values or [cfg.bath.g]:
            jobs.append(
                (f"fig3_name_g{_fmt_param(g)}.csv",
                 lambda g=g: name_rows(cfg, grid, g=g))
            )
    elif scen == "fig4":
        for mu in cfg.mu_values or [cfg.protocol.mu]:
            jobs.append(
                (f"fig4_attractor_mu{_fmt_param(mu)}.csv",
                 lambda mu=mu: attractor_rows(cfg, grid, mu=mu))
            )
    elif scen in ("fig5", "bench"):
        jobs = [
            ("fig5_name.csv", lambda: name_rows(cfg, grid)),
            ("fig5_adiabatic.csv", lambda: adiabatic_rows(cfg, grid)),
            ("fig5_isolated.csv", lambda: isolated_rows(cfg, grid)),
            ("fig5_exact.csv", lambda: exact_rows(cfg, grid)),
        ]
    elif scen == "attractor":
        jobs = [("attractor.csv", lambda: attractor_rows(cfg, grid))]
    else:
        raise ConfigError([f"scenario {scen!r} has no runner"])
    return jobs


def run_scenario(cfg: RunConfig, out_dir: str | None = None, threads: int = 1):
    """Execute the configured scenario; returns the list of files written.

    Independent (solver, parameter) jobs may run in a thread pool; each output
    file is written atomically and partial outputs are removed on failure.
    """
    if cfg.scenario is None:
        raise ConfigError(["no scenario selected (config key or --scenario)"])
    out_dir = out_dir or cfg.output["directory"]
    os.makedirs(out_dir, exist_ok=True)
    written = []

    if cfg.scenario in ("fig5", "bench"):
        if cfg.solver["bench_horizon"] > cfg.protocol.t_final * (1 + 1e-12):
            raise ConfigError(
                ["solver.bench_horizon exceeds protocol.t_final"]
            )

    try:
        if cfg.scenario == "validity":
            report = validity_report(cfg.protocol, cfg.bath)
            path = os.path.join(out_dir, "validity.json")
            atomic_write_text(path, json.dumps(report.as_dict(), indent=2) + "\n")
            written.append(path)
        else:
            grid = trajectory_grid(cfg)
            jobs = _scenario_jobs(cfg, grid)
            cap = os.environ.get("NAME_SIM_THREADS")
            workers = max(1, min(threads, int(cap) if cap else threads))
            if workers > 1:
                with ThreadPoolExecutor(max_workers=workers) as pool:
                    results = list(pool.map(lambda job: (job[0], job[1]()), jobs))
            else:
                results = [(fname, fn()) for fname, fn in jobs]
            for fname, rows in results:
                path = os.path.join(out_dir, fname)
                write_trajectory_csv(path, rows)
                written.append(path)

        manifest = {
            "version": __version__,
            "scenario": cfg.scenario,
            "config": cfg.resolved,
            "provenance": cfg.provenance,
            "sweeps": {"g_values": cfg.g_values, "mu_values": cfg.mu_values},
            "files": [os.path.basename(f) for f in written],
        }
        mpath = os.path.join(out_dir, "manifest.json")
        atomic_write_text(mpath, json.dumps(manifest, indent=2, default=str) + "\n")
        written.append(mpath)
    except BaseException:
        for f in written:
            if os.path.exists(f):
                os.unlink(f)
        raise
    return written
