"""Decay of activity under full censoring and in the single-state regime."""
from _common import out_dir_arg, write_csv, write_json
from riotwave.equilibria import normalized_params
from riotwave.pde import ShockEvent
from riotwave.waves import extinction_experiment


def main():
    out = out_dir_arg(__doc__, "results/extinction")
    cases = {
        "censored_one_shock": (normalized_params(6.0, 8.0, alpha=1.0), [ShockEvent(0.0, 10.0)]),
        "censored_three_shocks": (normalized_params(6.0, 8.0, alpha=1.0),
                                  [ShockEvent(t, x, A=2.0) for t, x in ((0, 5), (5, 10), (10, 15))]),
        "low_rho": (normalized_params(0.5, 3.0), [ShockEvent(0.0, 10.0)]),
    }
    summary = {}
    for name, (P, shocks) in cases.items():
        rep = extinction_experiment(P, shocks)
        write_csv(out / f"{name}.csv", ["t", "u_sup", "v_err"], zip(rep.times, rep.u_sup, rep.v_err))
        summary[name] = rep.report()
        print(name, f"tau_hat={rep.tau_hat:.5f}", "decayed" if rep.decayed else "not decayed")
    write_json(out / "summary.json", summary)


if __name__ == "__main__":
    main()
