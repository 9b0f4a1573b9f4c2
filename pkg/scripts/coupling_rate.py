"""Coupling error E|X - Xbar|^2 + |V - Vbar|^2 at time T against N, with the log-log fit."""

import argparse

from vicsek_mf.coupling_lab import CouplingSetup, fit_convergence_rate, run_coupling_experiment
from vicsek_mf.kernels import InteractionKernel
from vicsek_mf.sde_stepper import StepParams


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--N", type=int, nargs="+", default=[16, 32, 64, 128, 256])
    ap.add_argument("--replicas", type=int, default=64)
    ap.add_argument("--kappa", type=float, default=2.0)
    ap.add_argument("--dt", type=float, default=4e-3)
    ap.add_argument("--T", type=float, default=1.0)
    ap.add_argument("--workers", type=int, default=1)
    a = ap.parse_args()
    setup = CouplingSetup(InteractionKernel("gaussian", a.kappa, 1.0), StepParams(a.dt), a.T)
    res = run_coupling_experiment(a.N, a.replicas, setup, a.workers,
                                  progress=lambda N, m, se: print(f"N={N:4d} error={m:.4e} +- {se:.1e}",
                                                                  flush=True))
    fit = fit_convergence_rate(res)
    print(f"slope {fit.slope:.3f}  r2 {fit.r_squared:.3f}")


if __name__ == "__main__":
    main()
