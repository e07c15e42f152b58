"""Periodic and gap environments: eigenvalue test, pulsating fronts and critical gaps."""
import numpy as np

from _common import out_dir_arg, write_csv, write_json
from riotwave.equilibria import normalized_params
from riotwave.hetero import (PeriodicEnv, find_critical_gap, instability_check, long_run_outcomes,
                             pulsating_front_experiment)
from riotwave.pde import Grid1D


def main():
    out = out_dir_arg(__doc__, "results/heterogeneous")

    # eigenvalue sign against long-run behavior over a small (rho, fraction) table
    rows, Ps, envs, lams = [], [], [], []
    for rho in (1.5, 3.0, 6.0):
        for frac in (0.25, 0.5, 0.75):
            P = normalized_params(rho, 0.5, D=1.0)
            env = PeriodicEnv.two_patch(4.0, frac, 0.0, 0.6)
            chk = instability_check(P, env, Grid1D.from_length(4.0, dx=0.05, boundary="Periodic"))
            Ps.append(P)
            envs.append(env)
            lams.append(chk["lambda"])
            rows.append([rho, frac, chk["lambda"], chk["predicted"].value])
    for row, res in zip(rows, long_run_outcomes(Ps, envs, rng=np.random.default_rng(0))):
        row.append(res.outcome)
    write_csv(out / "eigen_vs_outcome.csv", ["rho", "frac", "lambda", "predicted", "outcome"], rows)

    # pulsating fronts for a fast and a slow transition rate, and a censored medium
    env = PeriodicEnv.two_patch(4.0, 0.5, 0.0, 0.1, repetitions=15)
    fronts = pulsating_front_experiment([normalized_params(10.0, b, D=0.0) for b in (1.0, 2.0)],
                                        env, dx=0.1, t_end=100.0, snapshot_dt=0.1)
    blocked = pulsating_front_experiment(normalized_params(10.0, 8.0, D=0.0),
                                         PeriodicEnv.two_patch(8.0, 0.5, 0.1, 0.9, 6),
                                         dx=0.1, t_end=60.0, snapshot_dt=0.1)
    for name, res in (("beta1", fronts[0]), ("beta2", fronts[1]), ("censored", blocked)):
        write_csv(out / f"front_{name}.csv", ["t", "x_front"],
                  zip(res.trace.times, res.trace.positions))
    write_json(out / "pulsating.json", {"beta1": fronts[0].report(), "beta2": fronts[1].report(),
                                        "censored": blocked.report()})

    # critical gap width as the reinforcement rho grows
    crit = []
    for rho in (8.0, 10.0, 12.0, 14.0):
        try:
            cg = find_critical_gap(normalized_params(rho, 1.0), 0.1, 0.1, (0.2, 3.0))
            crit.append((rho, cg.width, cg.monotone))
        except Exception as exc:  # noqa: BLE001 - record and continue the table
            crit.append((rho, "", type(exc).__name__))
    write_csv(out / "critical_gap.csv", ["rho", "critical_width", "monotone"], crit)
    print(crit)


if __name__ == "__main__":
    main()
