"""Experiment drivers shared by the CLI and the scripts."""

import itertools
import os
from concurrent.futures import ProcessPoolExecutor

import numpy as np

from .config import parse_test_function
from .coupling_lab import CouplingSetup, fit_convergence_rate, run_coupling_experiment
from .errors import RecordError
from .homogeneous_spectral import (
    FourierDensity,
    consistency_root,
    integrate_spectral,
)
from .observables import polar_order_particles, weak_form_residual
from .particle_system import initial_state, run_simulation
from .records import RecordWriter, TrajectoryRecord, read_records, write_summary
from .rng import SystemTag


def _meta(cfg, **extra):
    return {"config_hash": cfg.config_hash, "scheme": cfg.scheme, "kernel": cfg.kernel,
            "kappa": cfg.kappa, "dt": cfg.dt, **extra}


def _write_config(cfg, out):
    with open(os.path.join(out, "config.txt"), "w") as fh:
        fh.write(cfg.to_text())


def summary_row(state):
    J = polar_order_particles(state)
    dev = float(np.max(np.abs(np.linalg.norm(state.velocities, axis=1) - 1.0)))
    return [state.time, state.step, *J.J.tolist(), J.magnitude, dev]


def simulate(cfg, out):
    os.makedirs(out, exist_ok=True)
    _write_config(cfg, out)
    init = initial_state(cfg.N, cfg.d, cfg.seed, **cfg.initial_law())
    rows = []
    with RecordWriter(os.path.join(out, "trajectory.vmf"), cfg.d, cfg.N, cfg.config_hash) as w:
        def emit(state):
            w.write(TrajectoryRecord.from_state(state, cfg.config_hash, SystemTag.INTERACTING))
            rows.append(summary_row(state))
        run_simulation(init, cfg.kernel_spec(), cfg.step_params(), cfg.T, cfg.seed,
                       record_every=cfg.record_every, workers=cfg.workers, callback=emit)
    cols = ["time", "step"] + [f"J{c}" for c in "xyz"[:cfg.d]] + ["abs_J", "max_norm_dev"]
    write_summary(os.path.join(out, "summary.csv"), cols, rows, _meta(cfg))
    return rows


def couple(cfg, out, progress=None):
    os.makedirs(out, exist_ok=True)
    _write_config(cfg, out)
    setup = CouplingSetup(cfg.kernel_spec(), cfg.step_params(), cfg.T, cfg.M_multiplier, cfg.seed,
                          cfg.initial_law(), cfg.config_hash)
    res = run_coupling_experiment(cfg.N_values, cfg.replicas, setup, workers=cfg.workers,
                                  progress=progress)
    write_summary(os.path.join(out, "coupling.csv"), ["N", "error", "stderr", "replicas"],
                  [[N, e, s, cfg.replicas] for N, e, s in zip(res.N_values, res.errors, res.stderr)],
                  _meta(cfg, T=cfg.T))
    fit = None
    if len(set(res.N_values)) >= 4 and np.all(res.errors > 0):
        fit = fit_convergence_rate(res)
        write_summary(os.path.join(out, "rate.csv"), ["slope", "intercept", "r_squared"],
                      [[fit.slope, fit.intercept, fit.r_squared]], _meta(cfg, T=cfg.T))
    return res, fit


def initial_density(cfg):
    if cfg.initial_density == "von_mises":
        return FourierDensity.von_mises(cfg.initial_concentration, 0.0, cfg.K_max)
    return FourierDensity.perturbed_uniform(cfg.initial_eps, cfg.K_max)


def homogeneous(cfg, out):
    if cfg.d != 2:
        from .errors import ConfigError
        raise ConfigError("homogeneous: the spectral solver is for d = 2 only")
    os.makedirs(out, exist_ok=True)
    _write_config(cfg, out)
    final, recs = integrate_spectral(initial_density(cfg), cfg.kappa, cfg.T, cfg.spectral_dt,
                                     record_every=cfg.record_every)
    K = cfg.K_max
    cols = ["time", "Jx", "Jy", "abs_J"] + [f"c{k}_{p}" for k in range(K + 1) for p in ("re", "im")]
    rows = []
    for t, modes, absJ in recs:
        z = 2 * np.pi * modes[K - 1]
        pos = modes[K:]
        rows.append([t, z.real, z.imag, absJ] +
                    [float(x) for c in pos for x in (c.real, c.imag)])
    write_summary(os.path.join(out, "homogeneous.csv"), cols, rows,
                  _meta(cfg, consistency_root=consistency_root(cfg.kappa)))
    return final, recs


def load_trajectories(paths):
    """Read replica trajectory files; all must share one config hash."""
    trajs, hashes = [], set()
    for p in paths:
        header, recs = read_records(p)
        hashes.add(header["config_hash"])
        hashes.update(r.config_hash for r in recs)
        trajs.append(recs)
    if len(hashes) > 1:
        raise RecordError(f"refusing to mix records from {len(hashes)} different config hashes")
    return trajs


def analyze_trajectories(trajs, cfg):
    """Per-snapshot polar order (replica mean) and weak-form reports."""
    snaps = [[(r.time, r.step, r.positions, r.velocities) for r in t] for t in trajs]
    kernel = cfg.kernel_spec()
    order_rows = []
    for i in range(len(snaps[0])):
        mags = [polar_order_particles(t[i][3]).magnitude for t in snaps]
        order_rows.append([snaps[0][i][0], snaps[0][i][1], float(np.mean(mags))])
    reports = []
    for name in cfg.test_functions:
        phi = parse_test_function(name, cfg.d)
        reports.append((name, weak_form_residual(snaps, phi, kernel, workers=cfg.workers)))
    return order_rows, reports


def analyze(cfg, inputs, out):
    os.makedirs(out, exist_ok=True)
    trajs = load_trajectories(inputs)
    order_rows, reports = analyze_trajectories(trajs, cfg)
    h = trajs[0][0].config_hash if trajs and trajs[0] else ""
    meta = {"config_hash": h, "analysis_config_hash": cfg.config_hash, "replicas": len(trajs)}
    write_summary(os.path.join(out, "polar_order.csv"), ["time", "step", "abs_J"], order_rows, meta)
    rows = []
    for name, rep in reports:
        for t, l, r, res, b in zip(rep.times, rep.lhs, rep.rhs, rep.residual, rep.band):
            rows.append([name, t, l, r, res, b, int(abs(res) <= b)])
    write_summary(os.path.join(out, "weak_form.csv"),
                  ["test_function", "time", "lhs", "rhs", "residual", "band", "within_band"],
                  rows, meta)
    return order_rows, reports


def sweep_points(cfg):
    kappas = cfg.sweep_kappa or (cfg.kappa,)
    Ns = cfg.sweep_N or (cfg.N,)
    seeds = cfg.sweep_seeds or (cfg.seed,)
    return [dict(kappa=k, N=n, seed=s) for k, n, s in itertools.product(kappas, Ns, seeds)]


def _run_point(args):
    cfg, out = args
    {"simulate": simulate, "couple": couple, "homogeneous": homogeneous}[cfg.experiment](cfg, out)
    return out


def sweep(cfg, out):
    os.makedirs(out, exist_ok=True)
    _write_config(cfg, out)
    jobs = []
    for i, pt in enumerate(sweep_points(cfg)):
        sub = cfg.with_overrides(experiment=cfg.sweep_experiment, workers=1, sweep_kappa=(),
                                 sweep_N=(), sweep_seeds=(), **pt)
        name = f"point_{i:03d}_kappa{pt['kappa']:g}_N{pt['N']}_seed{pt['seed']}"
        jobs.append((sub, os.path.join(out, name)))
    if cfg.workers > 1:
        with ProcessPoolExecutor(max_workers=cfg.workers) as pool:
            list(pool.map(_run_point, jobs))
    else:
        for j in jobs:
            _run_point(j)
    write_summary(os.path.join(out, "sweep.csv"), ["point", "kappa", "N", "seed", "config_hash"],
                  [[os.path.basename(o), c.kappa, c.N, c.seed, c.config_hash] for c, o in jobs],
                  {"config_hash": cfg.config_hash, "sweep_experiment": cfg.sweep_experiment})
    return jobs
