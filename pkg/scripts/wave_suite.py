"""Traveling-front experiments: speed sign, the alpha sweep and monostable speeds."""
import numpy as np

from _common import out_dir_arg, write_csv, write_json
from riotwave.equilibria import H_prime0, normalized_params
from riotwave.waves import ExpDecayIC, StepIC, balanced_alpha, run_wave_batch, speed_vs_initial_decay


def main():
    out = out_dir_arg(__doc__, "results/waves")

    # stationary and retreating fronts: sweep alpha through the balanced value
    base = normalized_params(10.0, 8.0, D=0.0)
    a_bal = balanced_alpha(base)
    alphas = [0.0, 0.05, 0.10, 0.15, a_bal, a_bal + 0.03, a_bal + 0.05]
    res = run_wave_batch([base.replace(alpha=a) for a in alphas], [StepIC(40.0)] * len(alphas),
                         length=80.0, t_end=40.0)
    rows = []
    for a, r in zip(alphas, res):
        if isinstance(r, Exception):
            rows.append((a, "", "", "", type(r).__name__))
            continue
        rows.append((a, r.F_phi, r.estimate.c, r.estimate.stderr, r.estimate.classification.value))
        if a == a_bal:
            write_csv(out / "balanced_profiles.csv", ["t", "x", "u"],
                      [(t, x, u) for t, prof in zip(r.profile_times, r.profiles)
                       for x, u in zip(r.grid.x, prof)])
    write_csv(out / "alpha_sweep.csv", ["alpha", "F_phi", "c", "stderr", "classification"], rows)
    print("balanced alpha", a_bal)

    # monostable fronts: speed against initial exponential decay
    mono = normalized_params(20.0, 1.0, D=0.0)
    a = H_prime0(mono)
    ks = [0.5, 1.0, 2.0, 3.0, 5.0, 10.0, 20.0]
    speeds = speed_vs_initial_decay(mono, ks, amplitude=5.0, length=160.0, t_end=30.0)
    # linear prediction: c = k + a/k below sqrt(a), the minimal speed 2 sqrt(a) above
    rows = [(k, r.estimate.c, r.estimate.stderr, k + a / k if k < np.sqrt(a) else 2 * np.sqrt(a))
            for k, r in speeds.items()]
    write_csv(out / "speed_vs_decay.csv", ["k", "c", "stderr", "linear_prediction"], rows)
    write_json(out / "summary.json", {"balanced_alpha": a_bal, "minimal_speed": 2 * np.sqrt(a)})


if __name__ == "__main__":
    main()
